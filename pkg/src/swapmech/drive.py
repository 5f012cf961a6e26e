"""Classical oscillator drive profile used by the drive-substituted stages."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np


@dataclass(frozen=True)
class DriveProfile:
    """Classical quadrature trajectory X_cl(t) = X0 * exp(-gamma t / 2) * cos(omega_m t).

    gamma is an optional amplitude-decay knob for exploring oscillator damping;
    the default 0 reproduces the undamped free oscillation exactly.
    """

    X0: float
    omega_m: float
    gamma: float = 0.0

    def __post_init__(self):
        if not self.omega_m > 0:
            raise ValueError(f"omega_m must be positive, got {self.omega_m}")
        if self.gamma < 0:
            raise ValueError(f"gamma must be >= 0, got {self.gamma}")

    def evaluate(self, t):
        """Dimensionless quadrature amplitude X_cl(t); accepts scalars or arrays."""
        t = np.asarray(t, dtype=float)
        out = self.X0 * np.exp(-0.5 * self.gamma * t) * np.cos(self.omega_m * t)
        return out if out.ndim else float(out)

    def displacement(self, t):
        """Value substituted for (b + b^dag): sqrt(2) * X_cl(t)."""
        return np.sqrt(2.0) * self.evaluate(t)
