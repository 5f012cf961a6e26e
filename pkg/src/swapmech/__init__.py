"""Two-atom swap gate mediated by a mesoscopic mechanical oscillator.

Simulation and design package: Hamiltonian stages of the model chain, full and
effective time propagation, swap-time solvers, and experimental feasibility
numbers, wrapped by a FastAPI service with a thin CLI client.
"""

from .drive import DriveProfile
from .dynamics import (
    FullModelResult,
    IntegratorConfig,
    TrajectoryRecord,
    compare_trajectories,
    full_model_simulate,
    integrate_effective_ode,
    integrate_tdse,
    solve_effective_closed_form,
)
from .gate import (
    FeasibilityReport,
    GateSolution,
    enumerate_swap_times,
    feasibility,
    swap_fidelity,
    swap_time,
)
from .hamiltonians import (
    Stage,
    TimeDependentHamiltonian,
    build_hamiltonian,
    qubit_subspace_projector,
)
from .linalg import Operator, SpaceSpec, StateVector, embed, expectation, kron
from .params import ParameterError, SystemParams
from .reduction import (
    CoefficientSet,
    coefficients,
    eliminated_cavity_field,
    hierarchy_check,
)

__version__ = "0.1.0"

__all__ = [
    "CoefficientSet",
    "DriveProfile",
    "FeasibilityReport",
    "FullModelResult",
    "GateSolution",
    "IntegratorConfig",
    "Operator",
    "ParameterError",
    "SpaceSpec",
    "Stage",
    "StateVector",
    "SystemParams",
    "TimeDependentHamiltonian",
    "TrajectoryRecord",
    "build_hamiltonian",
    "coefficients",
    "compare_trajectories",
    "eliminated_cavity_field",
    "embed",
    "enumerate_swap_times",
    "expectation",
    "feasibility",
    "full_model_simulate",
    "hierarchy_check",
    "integrate_effective_ode",
    "integrate_tdse",
    "kron",
    "qubit_subspace_projector",
    "solve_effective_closed_form",
    "swap_fidelity",
    "swap_time",
]
