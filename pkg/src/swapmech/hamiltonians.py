"""Builders for every Hamiltonian stage of the model chain.

Stages, in reduction order (hbar = 1, all coefficients in rad/s):

* ``CM``             cavity-oscillator coupling g' a^dag a (b + b^dag)^n alone
* ``H1``             lab-anchored frame rotating at the cavity-pump frequency
* ``H2``             atom interaction picture: explicit phases exp(i Delta1 t)
                     and exp(-i (Delta2 + delta) t)
* ``H3``             excited states eliminated; two-level atoms + cavity
* ``H4``             cavity eliminated; Stark coefficients A, B, C, D
* ``H5``             leading-order two-qubit stage on the swap subspace
* ``VEFF_INT``       oscillator interaction picture, eta * X'(t) * exchange
* ``VEFF_CLASSICAL`` final 2x2 drive lambda cos^n(omega_m t) on
                     span{|g1 f2>, |f1 g2>}

In classical oscillator mode the oscillator slot is dropped and (b + b^dag)
is replaced by the drive displacement sqrt(2) X_cl(t); in quantum mode a Fock
slot of ``oscillator_levels`` states is appended to the space.

Hermiticity is structural: time-dependent couplings are stored as conjugate
term pairs, so H(t) is exactly Hermitian at every t.
"""

from __future__ import annotations

import cmath
import math
from dataclasses import dataclass, field
from enum import Enum
from typing import Callable, Optional

import numpy as np

from .drive import DriveProfile
from .linalg import (
    LEVEL_E,
    LEVEL_F,
    LEVEL_G,
    DimensionError,
    Operator,
    SpaceSpec,
    destroy,
    embed,
    level_projector,
    number,
    transition,
)
from .params import ParameterError, SystemParams
from .reduction import coefficients

SQRT2 = math.sqrt(2.0)


class Stage(str, Enum):
    CM = "CM"
    H1 = "H1"
    H2 = "H2"
    H3 = "H3"
    H4 = "H4"
    H5 = "H5"
    VEFF_INT = "VEFF_INT"
    VEFF_CLASSICAL = "VEFF_CLASSICAL"


@dataclass(frozen=True)
class HamiltonianTerm:
    """One (coefficient function, constant operator) summand of H(t).

    ``angular_frequency`` is the characteristic |angular frequency| of the
    coefficient (0 for static terms); ``amplitude`` bounds |coefficient(t)|.
    Both feed the integrator's step selection.
    """

    operator: Operator
    coefficient: Callable[[float], complex]
    angular_frequency: float
    amplitude: float


@dataclass(frozen=True)
class TimeDependentHamiltonian:
    """H(t) = sum_k f_k(t) O_k on a fixed tensor-product space."""

    space: SpaceSpec
    terms: tuple[HamiltonianTerm, ...]
    labels: tuple[str, ...]

    def __post_init__(self):
        # Cached (matrix, coefficient) pairs keep the propagation loop tight.
        pairs = tuple((term.operator.matrix, term.coefficient) for term in self.terms)
        object.__setattr__(self, "_pairs", pairs)

    def matrix_at(self, t: float) -> np.ndarray:
        m = np.zeros((self.space.total, self.space.total), dtype=np.complex128)
        for mat, func in self._pairs:
            c = func(t)
            if c != 0.0:
                m += c * mat
        return m

    def value(self, t: float) -> Operator:
        return Operator(self.space, self.matrix_at(t))

    def apply(self, t: float, vec: np.ndarray) -> np.ndarray:
        """H(t) @ vec without materializing the summed matrix."""
        pairs = self._pairs
        mat, func = pairs[0]
        out = func(t) * (mat @ vec)
        for mat, func in pairs[1:]:
            c = func(t)
            if c != 0.0:
                out += c * (mat @ vec)
        return out

    @property
    def max_coefficient_frequency(self) -> float:
        return max((term.angular_frequency for term in self.terms), default=0.0)

    def spectral_bound(self) -> float:
        """Upper bound on max_t ||H(t)||_2 via the triangle inequality."""
        return sum(term.amplitude * term.operator.norm2() for term in self.terms)

    def is_hermitian_at(self, t: float, tol: float = 1e-10) -> bool:
        return self.value(t).is_hermitian(tol)


class _Builder:
    """Accumulates terms; merges all static pieces into one operator."""

    def __init__(self, space: SpaceSpec, labels: tuple[str, ...]):
        self.space = space
        self.labels = labels
        self._static = np.zeros((space.total, space.total), dtype=np.complex128)
        self._terms: list[HamiltonianTerm] = []

    def static(self, op: Operator, coeff: complex = 1.0):
        if coeff != 0.0:
            self._static += coeff * op.matrix

    def static_pair(self, op: Operator, coeff: complex):
        """coeff * op + h.c. as one Hermitian static block."""
        if coeff != 0.0:
            m = coeff * op.matrix
            self._static += m + m.conj().T

    def modulated(self, op: Operator, func, freq: float, amplitude: float):
        """Real coefficient on a Hermitian operator; Hermitian on its own."""
        if amplitude != 0.0:
            self._terms.append(HamiltonianTerm(op, func, freq, amplitude))

    def pair(self, op: Operator, func, freq: float, amplitude: float):
        """func(t) * op + conj(func)(t) * op^dag stored as two terms."""
        if amplitude != 0.0:
            self._terms.append(HamiltonianTerm(op, func, freq, amplitude))
            self._terms.append(
                HamiltonianTerm(
                    op.dagger(),
                    lambda t, _f=func: _f(t).conjugate(),
                    freq,
                    amplitude,
                )
            )

    def build(self) -> TimeDependentHamiltonian:
        terms = list(self._terms)
        static_op = Operator(self.space, self._static)
        terms.insert(
            0,
            HamiltonianTerm(static_op, lambda t: 1.0 + 0.0j, 0.0, 1.0),
        )
        return TimeDependentHamiltonian(self.space, tuple(terms), self.labels)


# ---------------------------------------------------------------------------
# spaces and basis labels
# ---------------------------------------------------------------------------

_ATOM_CHARS = {LEVEL_G: "g", LEVEL_F: "f", LEVEL_E: "e"}


def basis_labels(space: SpaceSpec, atom_slots: int, boson_chars: str) -> tuple[str, ...]:
    """Human-readable basis labels, e.g. 'g1f2_n0' for atoms x cavity."""
    out = []
    for idx in range(space.total):
        labs = space.labels_of(idx)
        parts = "".join(
            f"{_ATOM_CHARS[labs[k]]}{k + 1}" for k in range(atom_slots)
        )
        for j, ch in enumerate(boson_chars):
            parts += f"_{ch}{labs[atom_slots + j]}"
        out.append(parts)
    return tuple(out)


def stage_space(stage: Stage, params: SystemParams) -> tuple[SpaceSpec, tuple[str, ...]]:
    """Hilbert space and basis labels a stage is built on."""
    quantum = params.quantum_oscillator
    nm = params.oscillator_levels if quantum else None
    if stage in (Stage.CM, Stage.H1, Stage.H2):
        dims = [3, 3, params.cavity_cutoff]
        chars = "n"
    elif stage is Stage.H3:
        dims = [2, 2, params.cavity_cutoff]
        chars = "n"
    elif stage in (Stage.H4, Stage.H5, Stage.VEFF_INT):
        dims = [2, 2]
        chars = ""
    elif stage is Stage.VEFF_CLASSICAL:
        space = SpaceSpec((2,))
        return space, ("g1f2", "f1g2")
    else:  # pragma: no cover - exhaustive enum
        raise ParameterError(f"unknown stage {stage}")
    if quantum and stage is not Stage.VEFF_CLASSICAL:
        dims.append(nm)
        chars += "m"
    space = SpaceSpec(tuple(dims))
    return space, basis_labels(space, 2, chars)


def exchange_operator(space: SpaceSpec) -> Operator:
    """sigma+_1 sigma-_2 + sigma-_1 sigma+_2 on the first two (qubit) slots."""
    up1 = embed(transition(space.dims[0], LEVEL_F, LEVEL_G), 0, space)
    dn1 = embed(transition(space.dims[0], LEVEL_G, LEVEL_F), 0, space)
    up2 = embed(transition(space.dims[1], LEVEL_F, LEVEL_G), 1, space)
    dn2 = embed(transition(space.dims[1], LEVEL_G, LEVEL_F), 1, space)
    return up1 @ dn2 + dn1 @ up2


def qubit_subspace_projector(space: SpaceSpec) -> Operator:
    """Rank-2 (x identity on remaining slots) projector onto span{|g1 f2>, |f1 g2>}."""
    if space.nslots < 2:
        raise DimensionError("space must contain two atom slots")
    if space.dims[0] != space.dims[1] or space.dims[0] not in (2, 3):
        raise DimensionError(
            f"first two slots must be equal 2- or 3-level atoms, got {space.dims[:2]}"
        )
    pg1 = embed(level_projector(space.dims[0], LEVEL_G), 0, space)
    pf1 = embed(level_projector(space.dims[0], LEVEL_F), 0, space)
    pg2 = embed(level_projector(space.dims[1], LEVEL_G), 1, space)
    pf2 = embed(level_projector(space.dims[1], LEVEL_F), 1, space)
    return pg1 @ pf2 + pf1 @ pg2


# ---------------------------------------------------------------------------
# stage builders
# ---------------------------------------------------------------------------

@dataclass
class _Ops:
    """Embedded operators shared by the builders of one stage."""

    space: SpaceSpec
    a: Optional[Operator] = None
    n_c: Optional[Operator] = None
    b: Optional[Operator] = None
    n_b: Optional[Operator] = None
    x_b: Optional[Operator] = None  # b + b^dag
    atom: dict = field(default_factory=dict)

    @classmethod
    def on(cls, space: SpaceSpec, cavity_slot: Optional[int], osc_slot: Optional[int]):
        ops = cls(space)
        if cavity_slot is not None:
            dim = space.dims[cavity_slot]
            ops.a = embed(destroy(dim), cavity_slot, space)
            ops.n_c = embed(number(dim), cavity_slot, space)
        if osc_slot is not None:
            dim = space.dims[osc_slot]
            ops.b = embed(destroy(dim), osc_slot, space)
            ops.n_b = embed(number(dim), osc_slot, space)
            ops.x_b = ops.b + ops.b.dagger()
        return ops

    def proj(self, atom: int, level: int) -> Operator:
        key = ("p", atom, level)
        if key not in self.atom:
            self.atom[key] = embed(
                level_projector(self.space.dims[atom], level), atom, self.space
            )
        return self.atom[key]

    def trans(self, atom: int, upper: int, lower: int) -> Operator:
        key = ("t", atom, upper, lower)
        if key not in self.atom:
            self.atom[key] = embed(
                transition(self.space.dims[atom], upper, lower), atom, self.space
            )
        return self.atom[key]


def _drive_or_default(params: SystemParams, drive: Optional[DriveProfile]) -> DriveProfile:
    if drive is None:
        return DriveProfile(X0=params.X0, omega_m=params.omega_m)
    return drive


def _cm_amplitude(params: SystemParams, drive: DriveProfile) -> float:
    return abs(params.gprime) * (SQRT2 * abs(drive.X0)) ** params.n


def _scalar_quadrature(drive: DriveProfile) -> Callable[[float], float]:
    """Scalar-fast X_cl(t); math.* beats np.* by ~10x in the RK4 inner loop."""
    x0, w, gamma = drive.X0, drive.omega_m, drive.gamma
    if gamma == 0.0:
        return lambda t: x0 * math.cos(w * t)
    return lambda t: x0 * math.exp(-0.5 * gamma * t) * math.cos(w * t)


def _phase(coefficient: complex, omega: float) -> Callable[[float], complex]:
    """t -> coefficient * exp(-i omega t) as a scalar-fast closure."""
    c = complex(coefficient)
    return lambda t: c * cmath.exp(-1j * omega * t)


def _add_cm_term(b: _Builder, ops: _Ops, params: SystemParams, drive: DriveProfile):
    """g' a^dag a (b + b^dag)^n, drive-substituted in classical mode."""
    if params.gprime == 0.0:
        return
    if params.quantum_oscillator:
        xn = ops.x_b
        for _ in range(params.n - 1):
            xn = xn @ ops.x_b
        b.static(ops.n_c @ xn, params.gprime)
    else:
        n = params.n
        gp = params.gprime
        xcl = _scalar_quadrature(drive)

        def func(t, _x=xcl, _n=n, _c=gp * SQRT2**n):
            return _c * _x(t) ** _n

        b.modulated(ops.n_c, func, n * drive.omega_m, _cm_amplitude(params, drive))


def _add_oscillator_energy(b: _Builder, ops: _Ops, params: SystemParams):
    if params.quantum_oscillator:
        b.static(ops.n_b, params.omega_m)


def _build_cm(params: SystemParams, drive: DriveProfile) -> TimeDependentHamiltonian:
    space, labels = stage_space(Stage.CM, params)
    osc = 3 if params.quantum_oscillator else None
    ops = _Ops.on(space, cavity_slot=2, osc_slot=osc)
    b = _Builder(space, labels)
    _add_cm_term(b, ops, params, drive)
    return b.build()


def _add_pump(b: _Builder, ops: _Ops, params: SystemParams):
    if params.epsilon != 0.0:
        b.static(ops.a + ops.a.dagger(), params.epsilon)


def _build_h1(params: SystemParams, drive: DriveProfile) -> TimeDependentHamiltonian:
    """Frame rotating at the cavity-pump frequency; atomic energies explicit.

    The g-term phase is exp(+i omega_l t): together with delta a^dag a this is
    the exact rotating-frame image of the lab Hamiltonian, and the stage is
    unitarily equivalent to H2 for any choice of omega_eg / omega_fg.
    """
    space, labels = stage_space(Stage.H1, params)
    osc = 3 if params.quantum_oscillator else None
    ops = _Ops.on(space, cavity_slot=2, osc_slot=osc)
    b = _Builder(space, labels)

    omega_p = params.omega_eg - params.Delta1
    omega_c = (params.omega_eg - params.omega_fg) - params.Delta2
    omega_l = omega_c - params.delta

    b.static(ops.n_c, params.delta)
    _add_oscillator_energy(b, ops, params)
    for atom in (0, 1):
        b.static(ops.proj(atom, LEVEL_E), params.omega_eg)
        b.static(ops.proj(atom, LEVEL_F), params.omega_fg)
    _add_pump(b, ops, params)

    pump_op = ops.trans(0, LEVEL_E, LEVEL_G) + ops.trans(1, LEVEL_E, LEVEL_G)
    b.pair(pump_op, _phase(params.Omega, omega_p), abs(omega_p), abs(params.Omega))

    gmat = (params.g1 * ops.trans(0, LEVEL_F, LEVEL_E).matrix
            + params.g2 * ops.trans(1, LEVEL_F, LEVEL_E).matrix)
    g_op = Operator(space, gmat) @ ops.a.dagger()
    b.pair(g_op, _phase(1.0, -omega_l), abs(omega_l), 1.0 if gmat.any() else 0.0)

    _add_cm_term(b, ops, params, drive)
    return b.build()


def _build_h2(params: SystemParams, drive: DriveProfile) -> TimeDependentHamiltonian:
    """Atom interaction picture: phases exp(i Delta1 t) and exp(-i (Delta2+delta) t)."""
    space, labels = stage_space(Stage.H2, params)
    osc = 3 if params.quantum_oscillator else None
    ops = _Ops.on(space, cavity_slot=2, osc_slot=osc)
    b = _Builder(space, labels)

    b.static(ops.n_c, params.delta)
    _add_oscillator_energy(b, ops, params)
    _add_pump(b, ops, params)

    pump_op = ops.trans(0, LEVEL_E, LEVEL_G) + ops.trans(1, LEVEL_E, LEVEL_G)
    b.pair(pump_op, _phase(params.Omega, -params.Delta1),
           abs(params.Delta1), abs(params.Omega))

    w_g = params.Delta2 + params.delta
    gmat = (params.g1 * ops.trans(0, LEVEL_F, LEVEL_E).matrix
            + params.g2 * ops.trans(1, LEVEL_F, LEVEL_E).matrix)
    g_op = Operator(space, gmat) @ ops.a.dagger()
    b.pair(g_op, _phase(1.0, w_g), abs(w_g), 1.0 if gmat.any() else 0.0)

    _add_cm_term(b, ops, params, drive)
    return b.build()


def _build_h3(params: SystemParams, drive: DriveProfile) -> TimeDependentHamiltonian:
    """Excited states eliminated: Stark shifts plus cavity-mediated Raman terms."""
    params.require_effective_preconditions(need_xi=True)
    Delta = params.equal_detunings()
    g = params.equal_couplings()
    delta, xi = params.delta, params.xi
    om2, g2 = abs(params.Omega) ** 2, abs(g) ** 2

    space, labels = stage_space(Stage.H3, params)
    osc = 3 if params.quantum_oscillator else None
    ops = _Ops.on(space, cavity_slot=2, osc_slot=osc)
    b = _Builder(space, labels)

    b.static(ops.n_c, params.delta)
    _add_oscillator_energy(b, ops, params)
    _add_pump(b, ops, params)

    pg = [ops.proj(k, LEVEL_G) for k in (0, 1)]
    pf = [ops.proj(k, LEVEL_F) for k in (0, 1)]
    lower = [ops.trans(k, LEVEL_G, LEVEL_F) for k in (0, 1)]

    b.static(pg[0] @ pg[1], -2.0 * om2 / Delta)
    b.static(pf[0] @ pf[1], -2.0 * (delta - 2.0 * g2 / xi))
    b.static(pf[0] @ pg[1] + pg[0] @ pf[1], -(delta - om2 / xi + g2 / Delta))

    raman_g = (pg[1] @ lower[0] + pg[0] @ lower[1]) @ ops.a
    b.static_pair(raman_g, -(g * params.Omega) / Delta)
    raman_f = (pf[1] @ lower[0] + pf[0] @ lower[1]) @ ops.a
    b.static_pair(raman_f, SQRT2 * (g * params.Omega) / xi)

    _add_cm_term(b, ops, params, drive)
    return b.build()


def _build_h4(params: SystemParams, drive: DriveProfile) -> TimeDependentHamiltonian:
    """Cavity eliminated: -A P_gg - C P_ff - B P_sub - D exchange (+ oscillator)."""
    coef = coefficients(params)
    space, labels = stage_space(Stage.H4, params)
    osc = 2 if params.quantum_oscillator else None
    ops = _Ops.on(space, cavity_slot=None, osc_slot=osc)
    b = _Builder(space, labels)

    p_gg = ops.proj(0, LEVEL_G) @ ops.proj(1, LEVEL_G)
    p_ff = ops.proj(0, LEVEL_F) @ ops.proj(1, LEVEL_F)
    p_sub = qubit_subspace_projector(space)
    exch = exchange_operator(space)

    b.static(p_gg, -coef.a_static)
    b.static(p_ff, -coef.c_value)
    b.static(p_sub, -coef.b_static)
    b.static(exch, -coef.d_static)

    if params.quantum_oscillator:
        b.static(ops.n_b, params.omega_m)
        xn = ops.x_b
        for _ in range(params.n - 1):
            xn = xn @ ops.x_b
        b.static(p_gg @ xn, -coef.a_drive)
        b.static(p_sub @ xn, -coef.b_drive)
        b.static(exch @ xn, -coef.d_drive)
    else:
        n = params.n
        xcl = _scalar_quadrature(drive)

        def drive_pow(scale):
            def func(t, _x=xcl, _n=n, _s=scale * SQRT2**n):
                return _s * _x(t) ** _n
            return func

        amp = (SQRT2 * abs(drive.X0)) ** n
        b.modulated(p_gg, drive_pow(-coef.a_drive), n * drive.omega_m,
                    abs(coef.a_drive) * amp)
        b.modulated(p_sub, drive_pow(-coef.b_drive), n * drive.omega_m,
                    abs(coef.b_drive) * amp)
        b.modulated(exch, drive_pow(-coef.d_drive), n * drive.omega_m,
                    abs(coef.d_drive) * amp)
    return b.build()


def _build_h5(params: SystemParams, drive: DriveProfile) -> TimeDependentHamiltonian:
    """Leading-order stage: (-B + omega_m b^dag b) 1_sub - D_approx * exchange."""
    coef = coefficients(params)
    space, labels = stage_space(Stage.H5, params)
    osc = 2 if params.quantum_oscillator else None
    ops = _Ops.on(space, cavity_slot=None, osc_slot=osc)
    b = _Builder(space, labels)

    p_sub = qubit_subspace_projector(space)
    exch = exchange_operator(space)
    b.static(p_sub, -coef.b_approx)

    if params.quantum_oscillator:
        b.static(p_sub @ ops.n_b, params.omega_m)
        xn = ops.x_b
        for _ in range(params.n - 1):
            xn = xn @ ops.x_b
        b.static(exch @ xn, -coef.d_drive)
    else:
        n = params.n
        xcl = _scalar_quadrature(drive)

        def func(t, _x=xcl, _n=n, _s=-coef.d_drive * SQRT2**n):
            return _s * _x(t) ** _n

        amp = abs(coef.d_drive) * (SQRT2 * abs(drive.X0)) ** n
        b.modulated(exch, func, n * drive.omega_m, amp)
    return b.build()


def _build_veff_int(params: SystemParams, drive: DriveProfile) -> TimeDependentHamiltonian:
    """eta X'(t) * exchange with X'(t) the freely rotated quadrature power."""
    coef = coefficients(params)
    space, labels = stage_space(Stage.VEFF_INT, params)
    osc = 2 if params.quantum_oscillator else None
    ops = _Ops.on(space, cavity_slot=None, osc_slot=osc)
    b = _Builder(space, labels)
    exch = exchange_operator(space)
    eta = coef.eta

    if params.quantum_oscillator:
        w = params.omega_m
        if params.n == 1:
            # X' = (b e^{-i w t} + b^dag e^{i w t}) / sqrt(2)
            b.pair(exch @ ops.b, _phase(eta / SQRT2, w), w, abs(eta) / SQRT2)
        else:
            # X'^2 = [b^2 e^{-2iwt} + h.c. + 2 b^dag b + 1] / 2
            b.static(exch @ (ops.n_b + 0.5 * _identity_like(ops.n_b)), eta)
            b.pair(exch @ (ops.b @ ops.b), _phase(eta / 2.0, 2.0 * w),
                   2.0 * w, abs(eta) / 2.0)
    else:
        n = params.n
        xcl = _scalar_quadrature(drive)

        def func(t, _x=xcl, _n=n, _c=eta):
            return _c * _x(t) ** _n

        b.modulated(exch, func, n * drive.omega_m, abs(eta) * abs(drive.X0) ** n)
    return b.build()


def _identity_like(op: Operator) -> Operator:
    return Operator(op.space, np.eye(op.dim, dtype=np.complex128))


def _build_veff_classical(params: SystemParams, drive: DriveProfile) -> TimeDependentHamiltonian:
    """Final 2x2 stage: lambda cos^n(omega_m t) on the off-diagonal."""
    coef = coefficients(params)
    space, labels = stage_space(Stage.VEFF_CLASSICAL, params)
    sx = Operator(space, np.array([[0.0, 1.0], [1.0, 0.0]], dtype=np.complex128))
    b = _Builder(space, labels)
    eta, n = coef.eta, params.n
    xcl = _scalar_quadrature(drive)

    def func(t, _x=xcl, _n=n, _c=eta):
        return _c * _x(t) ** _n

    b.modulated(sx, func, n * drive.omega_m, abs(eta) * abs(drive.X0) ** n)
    return b.build()


_BUILDERS = {
    Stage.CM: _build_cm,
    Stage.H1: _build_h1,
    Stage.H2: _build_h2,
    Stage.H3: _build_h3,
    Stage.H4: _build_h4,
    Stage.H5: _build_h5,
    Stage.VEFF_INT: _build_veff_int,
    Stage.VEFF_CLASSICAL: _build_veff_classical,
}


def build_hamiltonian(
    stage: Stage | str,
    params: SystemParams,
    drive: Optional[DriveProfile] = None,
) -> TimeDependentHamiltonian:
    """Assemble the requested stage from validated parameters.

    ``drive`` overrides the default undamped classical oscillator trajectory
    (amplitude X0, frequency omega_m); it is ignored in quantum mode.
    """
    stage = Stage(stage)
    return _BUILDERS[stage](params, _drive_or_default(params, drive))
