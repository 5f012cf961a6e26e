"""Swap-time solvers, fidelity readout, and experimental feasibility numbers.

Gate times are expressed in units of 1/omega_m.  For linear coupling (n = 1)
the swap condition has the closed form T = arcsin[(2s+1) pi / (2 lambda')],
valid only while the argument stays <= 1; for quadratic coupling (n = 2) the
condition 2T + sin(2T) = 2 pi (2s+1) / lambda' is solved by bisection, which
the monotone left-hand side (derivative 2 + 2 cos 2T >= 0) makes exact.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional

from .dynamics import TrajectoryRecord
from .params import ParameterError, SystemParams
from .reduction import CoefficientSet, HierarchyReport, coefficients, hierarchy_check

# CODATA values; the only dimensional constants in the package.
HBAR = 1.0545718e-34  # J s
KB = 1.380649e-23  # J / K

# The oscillator amplitude decay time is taken as 1e2 / omega_m when quoting
# the safety margin of a gate.
DECAY_TIME_IN_OSCILLATOR_UNITS = 1.0e2

N2_ROOT_TOLERANCE = 1e-12
N2_RESIDUAL_BOUND = 1e-10


class NoSolutionError(ValueError):
    """The swap condition has no solution for the given branch and coupling."""


@dataclass(frozen=True)
class GateSolution:
    """One branch of the swap condition."""

    n: int
    s: int
    lambda_prime: float
    T: float  # units of 1/omega_m
    t_seconds: Optional[float] = None  # T / omega_m when omega_m supplied


def _swap_time_n1(lambda_prime: float, s: int) -> float:
    arg = (2 * s + 1) * math.pi / (2.0 * lambda_prime)
    if arg > 1.0:
        raise NoSolutionError(
            f"no n=1 swap solution: (2s+1) pi / (2 lambda') = {arg:.6g} > 1 "
            f"(lambda'={lambda_prime:.6g}, s={s}); branch s requires "
            f"lambda' >= (2s+1) pi / 2"
        )
    return math.asin(arg)


def _swap_time_n2(lambda_prime: float, s: int) -> float:
    rhs = 2.0 * math.pi * (2 * s + 1) / lambda_prime

    def f(t: float) -> float:
        return 2.0 * t + math.sin(2.0 * t) - rhs

    lo = 0.0
    hi = math.pi * (2 * s + 1) / lambda_prime + 1.0
    if f(hi) < 0.0:  # pragma: no cover - bracket is provably valid
        raise NoSolutionError(f"bisection bracket failed for lambda'={lambda_prime}")
    while hi - lo > N2_ROOT_TOLERANCE:
        mid = 0.5 * (lo + hi)
        if f(mid) < 0.0:
            lo = mid
        else:
            hi = mid
    root = 0.5 * (lo + hi)
    if abs(f(root)) > N2_RESIDUAL_BOUND:  # pragma: no cover - tolerance guard
        raise NoSolutionError(
            f"n=2 root residual {abs(f(root)):.3e} above {N2_RESIDUAL_BOUND}"
        )
    return root


def swap_time(
    n: int,
    lambda_prime: float,
    s: int = 0,
    omega_m: Optional[float] = None,
) -> GateSolution:
    """Earliest (branch ``s``) time at which |g1 f2> and |f1 g2> swap."""
    if n not in (1, 2):
        raise ParameterError(f"n must be 1 or 2, got {n}")
    if not lambda_prime > 0:
        raise ParameterError(f"lambda_prime must be positive, got {lambda_prime}")
    if s < 0:
        raise ParameterError(f"branch integer s must be >= 0, got {s}")
    t = _swap_time_n1(lambda_prime, s) if n == 1 else _swap_time_n2(lambda_prime, s)
    return GateSolution(
        n=n,
        s=s,
        lambda_prime=lambda_prime,
        T=t,
        t_seconds=(t / omega_m) if omega_m else None,
    )


def enumerate_swap_times(
    n: int,
    lambda_prime: float,
    s_max: int,
    omega_m: Optional[float] = None,
) -> list[GateSolution]:
    """All valid branches s = 0..s_max; empty for n=1 below lambda' = pi/2."""
    if s_max < 0:
        raise ParameterError(f"s_max must be >= 0, got {s_max}")
    out = []
    for s in range(s_max + 1):
        try:
            out.append(swap_time(n, lambda_prime, s, omega_m))
        except NoSolutionError:
            break
    return out


def swap_fidelity(
    trajectory: TrajectoryRecord,
    initial_label: str,
    target_label: str,
    T: float,
) -> float:
    """Population of ``target_label`` at time T (linear interpolation)."""
    trajectory.population(initial_label)  # validates the label pair
    return trajectory.population_at(target_label, T)


def zero_point_motion(mass: float, omega_m: float) -> float:
    """x_zpf = sqrt(hbar / (2 m omega_m)) in meters."""
    if not mass > 0:
        raise ParameterError(f"mass must be positive, got {mass}")
    if not omega_m > 0:
        raise ParameterError(f"omega_m must be positive, got {omega_m}")
    return math.sqrt(HBAR / (2.0 * mass * omega_m))


def quantum_temperature(omega_m: float) -> float:
    """T_Q = hbar omega_m / k_B in kelvin."""
    if not omega_m > 0:
        raise ParameterError(f"omega_m must be positive, got {omega_m}")
    return HBAR * omega_m / KB


@dataclass(frozen=True)
class FeasibilityReport:
    """Derived experimental quantities for one parameter set."""

    x_zpf: float  # meters
    t_quantum: float  # kelvin
    lam: float  # rad/s
    lambda_prime: float
    lambda_per_gprime: float
    gate_times: tuple[GateSolution, ...]
    decay_margin_ratio: Optional[float]  # (1e2/omega_m) / gate seconds, s=0
    hierarchy: HierarchyReport
    coefficient_set: CoefficientSet

    def as_dict(self) -> dict:
        return {
            "x_zpf_m": self.x_zpf,
            "t_quantum_K": self.t_quantum,
            "lambda_rad_s": self.lam,
            "lambda_prime": self.lambda_prime,
            "lambda_per_gprime": self.lambda_per_gprime,
            "gate_times": [
                {"s": g.s, "T": g.T, "t_seconds": g.t_seconds}
                for g in self.gate_times
            ],
            "decay_margin_ratio": self.decay_margin_ratio,
            "hierarchy": self.hierarchy.as_dict(),
        }


def feasibility(params: SystemParams, s_max: int = 2) -> FeasibilityReport:
    """Zero-point motion, quantum temperature, coupling, and gate times.

    The decay margin compares the earliest gate against the oscillator
    amplitude decay timescale 1e2/omega_m; both share the 1/omega_m unit, so
    the reported ratio is simply 1e2 / T.
    """
    if params.mass is None:
        raise ParameterError("mass is required for feasibility (x_zpf, T_Q)")
    coef = coefficients(params)
    if coef.lam <= 0:
        raise ParameterError(
            f"effective coupling lambda = {coef.lam:.6g} is not positive; "
            "no swap-time branches exist"
        )
    gates = enumerate_swap_times(
        params.n, coef.lambda_prime, s_max, omega_m=params.omega_m
    )
    margin = None
    if gates:
        margin = DECAY_TIME_IN_OSCILLATOR_UNITS / gates[0].T
    return FeasibilityReport(
        x_zpf=zero_point_motion(params.mass, params.omega_m),
        t_quantum=quantum_temperature(params.omega_m),
        lam=coef.lam,
        lambda_prime=coef.lambda_prime,
        lambda_per_gprime=coef.lambda_per_gprime,
        gate_times=tuple(gates),
        decay_margin_ratio=margin,
        hierarchy=hierarchy_check(params),
        coefficient_set=coef,
    )
