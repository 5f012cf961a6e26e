"""Time propagation: full-model TDSE, effective two-amplitude ODE, closed form.

All integration is fixed-step classical RK4 with the step chosen from the
fastest angular frequency present in the Hamiltonian (coefficient phases and a
spectral-norm bound), which keeps runs reproducible and makes the fourth-order
convergence of the norm drift directly testable.  States are never
renormalized during propagation; the drift is the audit.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np

from .drive import DriveProfile
from .hamiltonians import Stage, TimeDependentHamiltonian, build_hamiltonian
from .linalg import LEVEL_F, LEVEL_G, SpaceSpec, StateVector, basis_state
from .params import ParameterError, SystemParams
from .reduction import HierarchyReport, hierarchy_check

TWO_PI = 2.0 * math.pi

EFFECTIVE_LABELS = ("g1f2", "f1g2")


class NormDriftError(RuntimeError):
    """Propagation norm drift exceeded the configured bound (step too coarse)."""


class CutoffConvergenceError(RuntimeError):
    """Observables shifted by more than the tolerance when the Fock cutoff grew."""


class TimeRangeError(ValueError):
    """Requested time lies outside a trajectory, or two records do not overlap."""


@dataclass(frozen=True)
class IntegratorConfig:
    steps_per_fastest_period: int = 200
    sample_stride: int = 10
    max_norm_drift: float = 1e-8

    def __post_init__(self):
        if self.steps_per_fastest_period < 50:
            raise ParameterError(
                f"steps_per_fastest_period must be >= 50, got "
                f"{self.steps_per_fastest_period}"
            )
        if self.sample_stride < 1:
            raise ParameterError(
                f"sample_stride must be >= 1, got {self.sample_stride}"
            )
        if not self.max_norm_drift > 0:
            raise ParameterError(
                f"max_norm_drift must be positive, got {self.max_norm_drift}"
            )


@dataclass(frozen=True)
class TrajectoryRecord:
    """Sampled propagation output.

    ``populations`` are |amplitude|^2 normalized by the sample's squared norm,
    so they sum to 1 exactly even in the presence of integrator rounding;
    ``norm_drift`` reports the raw max deviation of the state norm from 1.
    """

    space: SpaceSpec
    labels: tuple[str, ...]
    times: np.ndarray
    amplitudes: np.ndarray  # (nsamples, dim)
    populations: np.ndarray  # (nsamples, dim)
    norm_drift: float

    def __post_init__(self):
        for name in ("times", "amplitudes", "populations"):
            arr = np.asarray(getattr(self, name))
            arr.setflags(write=False)
            object.__setattr__(self, name, arr)

    @property
    def nsamples(self) -> int:
        return len(self.times)

    def state(self, i: int) -> StateVector:
        return StateVector(self.space, self.amplitudes[i])

    def population(self, label: str) -> np.ndarray:
        try:
            col = self.labels.index(label)
        except ValueError:
            raise KeyError(f"unknown basis label {label!r}") from None
        return self.populations[:, col]

    def population_at(self, label: str, t: float) -> float:
        """Linear interpolation between the two samples bracketing t."""
        times = self.times
        if t < times[0] - 1e-12 or t > times[-1] + 1e-12:
            raise TimeRangeError(
                f"t={t} outside trajectory range [{times[0]}, {times[-1]}]"
            )
        return float(np.interp(t, times, self.population(label)))


def _make_record(space, labels, times, amps) -> TrajectoryRecord:
    times = np.asarray(times, dtype=float)
    amps = np.asarray(amps, dtype=np.complex128)
    norms2 = np.sum(np.abs(amps) ** 2, axis=1)
    drift = float(np.max(np.abs(np.sqrt(norms2) - 1.0))) if len(norms2) else 0.0
    pops = np.abs(amps) ** 2 / norms2[:, None]
    return TrajectoryRecord(space, tuple(labels), times, amps, pops, drift)


def _plan_steps(fastest: float, t0: float, t1: float, cfg: IntegratorConfig):
    span = t1 - t0
    if span <= 0:
        raise ParameterError(f"time span must be increasing, got [{t0}, {t1}]")
    # At least one fastest-period's worth of resolution even for slow spans.
    fastest = max(fastest, TWO_PI / span)
    dt_target = (TWO_PI / fastest) / cfg.steps_per_fastest_period
    nsteps = max(1, math.ceil(span / dt_target))
    return span / nsteps, nsteps


def integrate_tdse(
    hamiltonian: TimeDependentHamiltonian,
    psi0: StateVector,
    t_span: tuple[float, float],
    cfg: IntegratorConfig = IntegratorConfig(),
) -> TrajectoryRecord:
    """Propagate i dpsi/dt = H(t) psi with fixed-step RK4 (hbar = 1)."""
    if psi0.space.dims != hamiltonian.space.dims:
        raise ParameterError(
            f"state space {psi0.space.dims} does not match Hamiltonian space "
            f"{hamiltonian.space.dims}"
        )
    if abs(psi0.norm() - 1.0) > 1e-9:
        raise ParameterError(f"psi0 must be normalized, |psi0| = {psi0.norm()}")

    t0, t1 = float(t_span[0]), float(t_span[1])
    fastest = max(hamiltonian.max_coefficient_frequency, hamiltonian.spectral_bound())
    dt, nsteps = _plan_steps(fastest, t0, t1, cfg)

    # Stack the constant term matrices once; per step only the three scalar
    # coefficient rows (t, t+dt/2, t+dt) are rebuilt and contracted against
    # the stack in a single matmul.  The -i of the Schrodinger equation is
    # folded into the coefficients so the RK4 slopes are plain matvecs.
    dim = hamiltonian.space.total
    flat = np.stack(
        [term.operator.matrix.reshape(-1) for term in hamiltonian.terms]
    )
    funcs = [term.coefficient for term in hamiltonian.terms]
    nterms = len(funcs)
    coeff = np.empty((3, nterms), dtype=np.complex128)

    y = np.array(psi0.amplitudes, dtype=np.complex128)
    times = [t0]
    samples = [y.copy()]
    half = 0.5 * dt
    sixth = dt / 6.0
    for k in range(nsteps):
        t = t0 + k * dt
        tb = t + half
        tc = t + dt
        for i in range(nterms):
            f = funcs[i]
            coeff[0, i] = f(t)
            coeff[1, i] = f(tb)
            coeff[2, i] = f(tc)
        h3 = (-1j * coeff) @ flat
        h_a = h3[0].reshape(dim, dim)
        h_b = h3[1].reshape(dim, dim)
        h_c = h3[2].reshape(dim, dim)
        k1 = h_a @ y
        k2 = h_b @ (y + half * k1)
        k3 = h_b @ (y + half * k2)
        k4 = h_c @ (y + dt * k3)
        y = y + sixth * (k1 + 2.0 * (k2 + k3) + k4)
        if (k + 1) % cfg.sample_stride == 0 or k + 1 == nsteps:
            times.append(t0 + (k + 1) * dt)
            samples.append(y.copy())

    record = _make_record(hamiltonian.space, hamiltonian.labels, times, samples)
    if record.norm_drift > cfg.max_norm_drift:
        raise NormDriftError(
            f"norm drift {record.norm_drift:.3e} exceeds bound "
            f"{cfg.max_norm_drift:.3e}; decrease the step"
        )
    return record


# ---------------------------------------------------------------------------
# effective two-amplitude model:  db1/dtau = -i lp cos^n(tau) b2   (and 1<->2)
# ---------------------------------------------------------------------------

def _effective_space() -> SpaceSpec:
    return SpaceSpec((2,))


def _phase_integral(lambda_prime: float, n: int, tau):
    """Phi(tau) = lp sin(tau) for n=1; lp (tau/2 + sin(2 tau)/4) for n=2."""
    tau = np.asarray(tau, dtype=float)
    if n == 1:
        return lambda_prime * np.sin(tau)
    return lambda_prime * (0.5 * tau + 0.25 * np.sin(2.0 * tau))


def closed_form_amplitudes(
    lambda_prime: float,
    n: int,
    b0: Sequence[complex],
    tau,
    tau0: float = 0.0,
):
    """Exact solution amplitudes at times ``tau`` for the initial pair ``b0``.

    The rotation angle is the accumulated drive phase, which reproduces the
    swap conditions sin(Phi) = +-1 exactly and is unitary at all times.
    """
    if n not in (1, 2):
        raise ParameterError(f"n must be 1 or 2, got {n}")
    phi = _phase_integral(lambda_prime, n, tau) - _phase_integral(
        lambda_prime, n, tau0
    )
    c, s = np.cos(phi), np.sin(phi)
    b1 = b0[0] * c - 1j * b0[1] * s
    b2 = -1j * b0[0] * s + b0[1] * c
    return b1, b2


def solve_effective_closed_form(
    lambda_prime: float,
    n: int,
    b0: Sequence[complex],
    tau_span: tuple[float, float],
    num: int = 1001,
    times: Optional[np.ndarray] = None,
) -> TrajectoryRecord:
    """Closed-form trajectory on a uniform grid (or explicitly supplied times)."""
    if times is None:
        times = np.linspace(float(tau_span[0]), float(tau_span[1]), num)
    else:
        times = np.asarray(times, dtype=float)
    b1, b2 = closed_form_amplitudes(lambda_prime, n, b0, times, tau0=float(tau_span[0]))
    amps = np.stack([b1, b2], axis=1)
    return _make_record(_effective_space(), EFFECTIVE_LABELS, times, amps)


def integrate_effective_ode(
    lambda_prime: float,
    n: int,
    b0: Sequence[complex],
    tau_span: tuple[float, float],
    cfg: IntegratorConfig = IntegratorConfig(),
) -> TrajectoryRecord:
    """RK4 integration of the two-amplitude drive equation (scalar fast path)."""
    if n not in (1, 2):
        raise ParameterError(f"n must be 1 or 2, got {n}")
    t0, t1 = float(tau_span[0]), float(tau_span[1])
    fastest = max(float(n), abs(lambda_prime))
    dt, nsteps = _plan_steps(fastest, t0, t1, cfg)

    lp = float(lambda_prime)
    b1 = complex(b0[0])
    b2 = complex(b0[1])
    times = [t0]
    samples = [(b1, b2)]
    half = 0.5 * dt
    sixth = dt / 6.0
    cos = math.cos
    for k in range(nsteps):
        t = t0 + k * dt
        f0 = lp * cos(t) ** n
        fh = lp * cos(t + half) ** n
        f1 = lp * cos(t + dt) ** n
        a1 = -1j * f0 * b2
        c1 = -1j * f0 * b1
        a2 = -1j * fh * (b2 + half * c1)
        c2 = -1j * fh * (b1 + half * a1)
        a3 = -1j * fh * (b2 + half * c2)
        c3 = -1j * fh * (b1 + half * a2)
        a4 = -1j * f1 * (b2 + dt * c3)
        c4 = -1j * f1 * (b1 + dt * a3)
        b1 = b1 + sixth * (a1 + 2.0 * (a2 + a3) + a4)
        b2 = b2 + sixth * (c1 + 2.0 * (c2 + c3) + c4)
        if (k + 1) % cfg.sample_stride == 0 or k + 1 == nsteps:
            times.append(t0 + (k + 1) * dt)
            samples.append((b1, b2))

    record = _make_record(_effective_space(), EFFECTIVE_LABELS, times, samples)
    if record.norm_drift > cfg.max_norm_drift:
        raise NormDriftError(
            f"norm drift {record.norm_drift:.3e} exceeds bound "
            f"{cfg.max_norm_drift:.3e}; decrease the step"
        )
    return record


# ---------------------------------------------------------------------------
# full model
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class FullModelResult:
    """Full-model trajectory plus the projected qubit-subspace view and audits."""

    trajectory: TrajectoryRecord
    qubit_populations: dict  # label -> population array
    photon_expectation: np.ndarray
    hierarchy: HierarchyReport
    cutoff_shift: Optional[float] = None

    def qubit_population(self, label: str) -> np.ndarray:
        return self.qubit_populations[label]


def default_initial_state(params: SystemParams) -> StateVector:
    """|g1 f2, vacuum> on the full (H2) space."""
    dims = [3, 3, params.cavity_cutoff]
    if params.quantum_oscillator:
        dims.append(params.oscillator_levels)
    space = SpaceSpec(tuple(dims))
    labels = [LEVEL_G, LEVEL_F] + [0] * (len(dims) - 2)
    return basis_state(space, labels)


def _qubit_and_photon_views(record: TrajectoryRecord, params: SystemParams):
    dims = record.space.dims
    nsamp = record.nsamples
    pops = record.populations.reshape((nsamp,) + dims)
    rest_axes = tuple(range(3, pops.ndim))
    p_gf = pops[:, LEVEL_G, LEVEL_F]
    p_fg = pops[:, LEVEL_F, LEVEL_G]
    if rest_axes or p_gf.ndim > 1:
        p_gf = p_gf.reshape(nsamp, -1).sum(axis=1)
        p_fg = p_fg.reshape(nsamp, -1).sum(axis=1)
    nphot = np.array(
        [record.space.labels_of(i)[2] for i in range(record.space.total)], dtype=float
    )
    photon = record.populations @ nphot
    return {"g1f2": p_gf, "f1g2": p_fg}, photon


def full_model_simulate(
    params: SystemParams,
    psi0: Optional[StateVector] = None,
    t_span: tuple[float, float] = None,
    cfg: IntegratorConfig = IntegratorConfig(),
    audit_cutoff: bool = True,
    cutoff_tolerance: float = 1e-3,
    drive: Optional[DriveProfile] = None,
    stage: Stage = Stage.H2,
) -> FullModelResult:
    """Propagate the full three-level model and project out the qubit dynamics.

    ``stage`` selects the frame: H2 (atom interaction picture, the default)
    or H1 (lab-anchored) for cross-checks; both give identical populations.
    The hierarchy report is attached as a warning channel, never blocking.
    When ``audit_cutoff`` is set the run is repeated with the cavity cutoff
    increased by 2 and the projected observables must agree to
    ``cutoff_tolerance``, otherwise :class:`CutoffConvergenceError` is raised.
    """
    if t_span is None:
        raise ParameterError("t_span is required")
    stage = Stage(stage)
    if stage not in (Stage.H1, Stage.H2):
        raise ParameterError(
            f"full model runs on stage H1 or H2, got {stage.value}"
        )
    hierarchy = hierarchy_check(params)

    def run(p: SystemParams, state: Optional[StateVector]):
        h = build_hamiltonian(stage, p, drive=drive)
        s = state if state is not None else default_initial_state(p)
        rec = integrate_tdse(h, s, t_span, cfg)
        qubit, photon = _qubit_and_photon_views(rec, p)
        return rec, qubit, photon

    record, qubit, photon = run(params, psi0)

    cutoff_shift = None
    if audit_cutoff:
        grown = params.with_(cavity_cutoff=params.cavity_cutoff + 2)
        # psi0 on the grown space: only the default vacuum state transfers.
        if psi0 is not None:
            big = default_initial_state(grown).space
            amp = np.zeros(big.total, dtype=np.complex128)
            for i in range(psi0.space.total):
                if psi0.amplitudes[i] != 0.0:
                    amp[big.index(psi0.space.labels_of(i))] = psi0.amplitudes[i]
            state2 = StateVector(big, amp)
        else:
            state2 = None
        rec2, qubit2, photon2 = run(grown, state2)
        # The grown space integrates on its own step grid; compare on the
        # base run's sample times.
        ta, tb = record.times, rec2.times

        def shift(a, b):
            return float(np.max(np.abs(a - np.interp(ta, tb, b))))

        cutoff_shift = max(
            shift(qubit["g1f2"], qubit2["g1f2"]),
            shift(qubit["f1g2"], qubit2["f1g2"]),
            shift(photon, photon2),
        )
        if cutoff_shift > cutoff_tolerance:
            raise CutoffConvergenceError(
                f"observables shifted by {cutoff_shift:.3e} when the cavity "
                f"cutoff grew from {params.cavity_cutoff} to "
                f"{grown.cavity_cutoff}; increase cavity_cutoff"
            )

    return FullModelResult(
        trajectory=record,
        qubit_populations=qubit,
        photon_expectation=photon,
        hierarchy=hierarchy,
        cutoff_shift=cutoff_shift,
    )


def compare_population_series(
    times_a: np.ndarray,
    pops_a: dict,
    times_b: np.ndarray,
    pops_b: dict,
    labels: Optional[Sequence[str]] = None,
) -> float:
    """Max absolute population deviation between two labeled series.

    Identical sample grids are compared directly; otherwise the second series
    is linearly interpolated onto the first one's samples restricted to the
    overlapping window.
    """
    if labels is None:
        labels = [lab for lab in pops_a if lab in pops_b]
        if not labels:
            raise KeyError("series share no labels")
    times_a = np.asarray(times_a, dtype=float)
    times_b = np.asarray(times_b, dtype=float)
    same_grid = len(times_a) == len(times_b) and np.array_equal(times_a, times_b)
    if same_grid:
        ta = times_a
        mask = slice(None)
    else:
        lo = max(times_a[0], times_b[0])
        hi = min(times_a[-1], times_b[-1])
        if hi <= lo:
            raise TimeRangeError("trajectories cover disjoint time ranges")
        mask = (times_a >= lo) & (times_a <= hi)
        ta = times_a[mask]
    worst = 0.0
    for lab in labels:
        try:
            pa = np.asarray(pops_a[lab])[mask]
            pb_full = np.asarray(pops_b[lab])
        except KeyError:
            raise KeyError(f"unknown population label {lab!r}") from None
        pb = pb_full if same_grid else np.interp(ta, times_b, pb_full)
        worst = max(worst, float(np.max(np.abs(pa - pb))))
    return worst


def compare_trajectories(
    a: TrajectoryRecord,
    b: TrajectoryRecord,
    labels: Optional[Sequence[str]] = None,
) -> float:
    """Max absolute population deviation over shared basis labels."""
    pops_a = {lab: a.population(lab) for lab in a.labels}
    pops_b = {lab: b.population(lab) for lab in b.labels}
    return compare_population_series(a.times, pops_a, b.times, pops_b, labels)
