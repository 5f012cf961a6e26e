"""Closed-form quantities of the two-step adiabatic elimination.

The chain removes the atomic excited states first and the cavity mode second,
leaving Stark coefficients A, B, C, D (exact and leading-order), the effective
exchange rate eta, and the classical-drive coupling lambda.  Everything here
is plain arithmetic on the validated parameter set; the matching Hamiltonian
stages are assembled in :mod:`swapmech.hamiltonians` from the same numbers.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .linalg import (
    LEVEL_F,
    LEVEL_G,
    Operator,
    SpaceSpec,
    embed,
    level_projector,
    transition,
)
from .params import ParameterError, SystemParams

SQRT2 = math.sqrt(2.0)


@dataclass(frozen=True)
class CoefficientSet:
    """Stark/exchange coefficients as functions of the displacement x = (b + b^dag).

    Each of A, B, D splits into a static part and a part linear in x^n:
    ``A(x) = a_static + a_drive * x**n`` and so on; C has no x dependence.
    ``b_approx`` and :meth:`D_approx` are the leading-order forms kept by the
    reduced two-qubit stage.  lam is the classical effective coupling
    (evaluated at x = sqrt(2) * X0), lambda_prime its ratio to omega_m, and
    lambda_per_gprime strips the optomechanical rate off lam so the two
    conventions for quoting the coupling can be compared explicitly.
    """

    n: int
    a_static: float
    a_drive: float
    b_static: float
    b_drive: float
    c_value: float
    d_static: float
    d_drive: float
    b_approx: float
    eta: float
    lam: float
    lambda_prime: float
    lambda_per_gprime: float

    def A(self, x: float) -> float:
        return self.a_static + self.a_drive * x**self.n

    def B(self, x: float) -> float:
        return self.b_static + self.b_drive * x**self.n

    def C(self, x: float) -> float:
        return self.c_value

    def D(self, x: float) -> float:
        return self.d_static + self.d_drive * x**self.n

    def B_approx(self, x: float) -> float:
        return self.b_approx

    def D_approx(self, x: float) -> float:
        return self.d_drive * x**self.n


def coefficients(params: SystemParams) -> CoefficientSet:
    """Evaluate the exact and leading-order elimination coefficients."""
    params.require_effective_preconditions(need_xi=True)
    Delta = params.equal_detunings()
    g = params.equal_couplings()
    delta = params.delta
    xi = params.xi
    n = params.n
    gprime = params.gprime

    om2 = abs(params.Omega) ** 2
    g2 = abs(g) ** 2
    og2 = om2 * g2  # |Omega g|^2

    a_static = 2.0 * om2 / Delta
    a_drive = -2.0 * og2 / (delta * Delta) ** 2 * gprime

    d_static = og2 / (Delta**2 * delta)
    d_drive = -2.0 * og2 / (delta * xi) ** 2 * gprime

    b_static = d_static + (delta - om2 / xi + g2 / Delta)
    b_drive = d_drive

    c_value = 4.0 * og2 / (xi**2 * delta) + 2.0 * (delta - 2.0 * g2 / xi)

    b_approx = delta - om2 / xi + g2 / Delta

    eta = 2.0 * SQRT2**n * og2 / (delta * xi) ** 2 * gprime
    lam = eta * params.X0**n
    lambda_per_gprime = 2.0 * SQRT2**n * og2 / (delta * xi) ** 2 * params.X0**n

    return CoefficientSet(
        n=n,
        a_static=a_static,
        a_drive=a_drive,
        b_static=b_static,
        b_drive=b_drive,
        c_value=c_value,
        d_static=d_static,
        d_drive=d_drive,
        b_approx=b_approx,
        eta=eta,
        lam=lam,
        lambda_prime=lam / params.omega_m,
        lambda_per_gprime=lambda_per_gprime,
    )


def eliminated_cavity_field(params: SystemParams) -> Operator:
    """Two-qubit operator the cavity annihilation operator reduces to.

    Setting the cavity's equation of motion quasi-static and dropping the pump
    gives a ~ (1/delta) [ (Omega* g*/Delta)(P_g2 s+_1 + P_g1 s+_2)
    - sqrt(2)(Omega* g*/(delta-Delta))(P_f2 s+_1 + P_f1 s+_2) ],
    with s+_j = |f_j><g_j|.
    """
    params.require_effective_preconditions(need_xi=True)
    Delta = params.equal_detunings()
    g = params.equal_couplings()
    delta = params.delta
    xi = params.xi

    space = SpaceSpec((2, 2))
    raise1 = embed(transition(2, LEVEL_F, LEVEL_G), 0, space)
    raise2 = embed(transition(2, LEVEL_F, LEVEL_G), 1, space)
    pg1 = embed(level_projector(2, LEVEL_G), 0, space)
    pg2 = embed(level_projector(2, LEVEL_G), 1, space)
    pf1 = embed(level_projector(2, LEVEL_F), 0, space)
    pf2 = embed(level_projector(2, LEVEL_F), 1, space)

    cg = np.conj(params.Omega) * np.conj(g) / Delta
    cf = SQRT2 * np.conj(params.Omega) * np.conj(g) / xi
    m = (cg * (pg2 @ raise1 + pg1 @ raise2).matrix
         - cf * (pf2 @ raise1 + pf1 @ raise2).matrix) / delta
    return Operator(space, m)


@dataclass(frozen=True)
class RatioCheck:
    name: str
    value: float
    status: str  # "pass" | "marginal" | "fail"


@dataclass(frozen=True)
class HierarchyReport:
    checks: tuple[RatioCheck, ...]

    @property
    def worst(self) -> str:
        order = {"pass": 0, "marginal": 1, "fail": 2}
        return max((c.status for c in self.checks), key=order.__getitem__)

    def as_dict(self) -> dict:
        return {c.name: {"value": c.value, "status": c.status} for c in self.checks}


def _classify(value: float, marginal: float, passing: float) -> str:
    if value >= passing:
        return "pass"
    if value >= marginal:
        return "marginal"
    return "fail"


def hierarchy_check(
    params: SystemParams,
    marginal: float = 10.0,
    passing: float = 50.0,
) -> HierarchyReport:
    """Report the dimensionless separations the elimination chain relies on.

    Three ratios, each flagged pass / marginal / fail against the configurable
    cutoffs (defaults 50 / 10): the single-photon detuning over the drive
    strengths, the cavity-pump detuning over the residual Raman coupling and
    the optomechanical rate, and the cavity-pump detuning over the pump
    amplitude (infinite when the pump is off).
    """
    if marginal <= 0 or passing <= marginal:
        raise ParameterError(
            f"thresholds must satisfy 0 < marginal < passing, got "
            f"marginal={marginal}, passing={passing}"
        )
    drive = max(abs(params.Omega), abs(params.g1), abs(params.g2))
    big_delta = min(abs(params.Delta1), abs(params.Delta2))
    r1 = math.inf if drive == 0.0 else big_delta / drive

    raman = 0.0
    if big_delta > 0.0:
        raman = abs(params.Omega) * max(abs(params.g1), abs(params.g2)) / big_delta
    denom2 = max(raman, abs(params.gprime))
    r2 = math.inf if denom2 == 0.0 else abs(params.delta) / denom2

    r3 = math.inf if params.epsilon == 0.0 else abs(params.delta) / abs(params.epsilon)

    return HierarchyReport(tuple(
        RatioCheck(name, value, _classify(value, marginal, passing))
        for name, value in (
            ("single_photon_detuning_vs_drives", r1),
            ("cavity_detuning_vs_raman_and_optomech", r2),
            ("cavity_detuning_vs_pump", r3),
        )
    ))
