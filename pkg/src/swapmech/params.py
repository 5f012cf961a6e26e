"""Validated physical parameter set for the hybrid atom-optomechanical model.

All frequencies are stored as angular frequencies (rad/s) with hbar = 1, so
every Hamiltonian built from these parameters has frequency units.  Inputs
quoted in Hz must be multiplied by 2*pi before constructing ``SystemParams``
(the config layer does this when the input declares hertz units).
"""

from __future__ import annotations

from dataclasses import dataclass, replace
from typing import Optional

TWO_PI = 6.283185307179586


class ParameterError(ValueError):
    """Invalid or degenerate physical parameters; message names the offender."""


OSCILLATOR_CLASSICAL = "classical"
OSCILLATOR_QUANTUM = "quantum"


@dataclass(frozen=True)
class SystemParams:
    """All knobs of the two-atom / cavity / oscillator system.

    Attributes
    ----------
    Omega : complex
        Pump Rabi frequency on the g <-> e transition (rad/s).
    g1, g2 : complex
        Atom-cavity couplings on the f <-> e transition (rad/s).
    delta : float
        Cavity-pump detuning, cavity frequency minus pump-laser frequency (rad/s).
    Delta1, Delta2 : float
        Single-photon detunings of the classical field and the cavity mode (rad/s).
    gprime : float
        Optomechanical coupling in front of a^dag a (b + b^dag)^n (rad/s).
    n : int
        Order of the cavity-oscillator coupling: 1 (end mirror) or 2 (membrane).
    omega_m : float
        Mechanical oscillator frequency (rad/s).
    epsilon : float
        Cavity pump amplitude (rad/s); 0 means virtual-photon operation.
    X0 : float
        Dimensionless initial oscillator quadrature amplitude (units of x_zpf);
        kept independent of gprime, the two are never multiplied implicitly.
    cavity_cutoff : int
        Fock truncation of the cavity mode, >= 2.
    oscillator_mode : str
        "classical" (drive substitution) or "quantum" (Fock-space oscillator).
    oscillator_levels : int, optional
        Fock truncation of the oscillator, required in quantum mode.
    mass : float, optional
        Oscillator mass in kg; only needed for feasibility numbers.
    omega_eg, omega_fg : float
        Absolute atomic level splittings (rad/s) anchoring the lab frame of the
        fullest Hamiltonian stage.  They are gauge choices: atomic populations
        do not depend on them.  Defaults of 0 make that stage coincide with its
        atom-interaction-picture form.
    """

    Omega: complex
    g1: complex
    g2: complex
    delta: float
    Delta1: float
    Delta2: float
    gprime: float
    n: int
    omega_m: float
    epsilon: float = 0.0
    X0: float = 1.0
    cavity_cutoff: int = 4
    oscillator_mode: str = OSCILLATOR_CLASSICAL
    oscillator_levels: Optional[int] = None
    mass: Optional[float] = None
    omega_eg: float = 0.0
    omega_fg: float = 0.0

    def __post_init__(self):
        if self.n not in (1, 2):
            raise ParameterError(f"n must be 1 or 2, got {self.n}")
        if not self.omega_m > 0:
            raise ParameterError(f"omega_m must be positive, got {self.omega_m}")
        if self.cavity_cutoff < 2:
            raise ParameterError(
                f"cavity_cutoff must be >= 2, got {self.cavity_cutoff}"
            )
        if self.oscillator_mode not in (OSCILLATOR_CLASSICAL, OSCILLATOR_QUANTUM):
            raise ParameterError(
                f"oscillator_mode must be 'classical' or 'quantum', got "
                f"{self.oscillator_mode!r}"
            )
        if self.oscillator_mode == OSCILLATOR_QUANTUM:
            if self.oscillator_levels is None or self.oscillator_levels < 2:
                raise ParameterError(
                    "oscillator_levels must be >= 2 in quantum oscillator mode"
                )
        if self.mass is not None and not self.mass > 0:
            raise ParameterError(f"mass must be positive, got {self.mass}")

    # -- derived quantities used by the effective-model chain ---------------

    @property
    def quantum_oscillator(self) -> bool:
        return self.oscillator_mode == OSCILLATOR_QUANTUM

    def equal_detunings(self) -> float:
        """Common single-photon detuning Delta; the reduction requires Delta1 == Delta2."""
        if self.Delta1 != self.Delta2:
            raise ParameterError(
                "Delta1 and Delta2 must be equal for the effective model, got "
                f"Delta1={self.Delta1}, Delta2={self.Delta2}"
            )
        return self.Delta1

    def equal_couplings(self) -> complex:
        """Common atom-cavity coupling g; the reduction requires g1 == g2."""
        if self.g1 != self.g2:
            raise ParameterError(
                f"g1 and g2 must be equal for the effective model, got "
                f"g1={self.g1}, g2={self.g2}"
            )
        return self.g1

    @property
    def xi(self) -> float:
        """Detuning difference delta - Delta controlling the coupling enhancement."""
        return self.delta - self.equal_detunings()

    def require_effective_preconditions(self, need_xi: bool = True) -> None:
        """Validate the divisions performed by the reduced stages."""
        delta_common = self.equal_detunings()
        self.equal_couplings()
        if delta_common == 0.0:
            raise ParameterError("Delta must be nonzero for the effective model")
        if self.delta == 0.0:
            raise ParameterError("delta must be nonzero for the effective model")
        if need_xi and self.xi == 0.0:
            raise ParameterError(
                "xi = delta - Delta must be nonzero: the effective coupling "
                "diverges as xi -> 0 and is only defined in the limit"
            )

    def with_(self, **changes) -> "SystemParams":
        return replace(self, **changes)


def hz_to_angular(value_hz: float) -> float:
    return TWO_PI * value_hz
