"""Dense complex operator and state algebra on small tensor-product Hilbert spaces.

Everything here is deliberately dense: the composite spaces used by the rest of
the package top out at a few hundred dimensions, where exact, reproducible
numpy arithmetic beats any sparse machinery.  Basis ordering is mixed-radix
with the *last* subsystem index varying fastest, and atomic levels are always
indexed g -> 0, f -> 1, e -> 2.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

# Fixed atomic level indexing used across the package.
LEVEL_G = 0
LEVEL_F = 1
LEVEL_E = 2


class DimensionError(ValueError):
    """Raised when operator/state shapes or subsystem dimensions disagree."""


@dataclass(frozen=True)
class SpaceSpec:
    """Ordered list of subsystem dimensions defining a tensor-product space.

    ``dims`` follows the physical layout used throughout: atom slots first,
    then the cavity mode, then (optionally) the quantized oscillator mode.
    """

    dims: tuple[int, ...]

    def __post_init__(self):
        dims = tuple(int(d) for d in self.dims)
        if not dims:
            raise DimensionError("SpaceSpec needs at least one subsystem")
        if any(d < 1 for d in dims):
            raise DimensionError(f"subsystem dimensions must be >= 1, got {dims}")
        object.__setattr__(self, "dims", dims)

    @property
    def total(self) -> int:
        return int(np.prod(self.dims))

    @property
    def nslots(self) -> int:
        return len(self.dims)

    def index(self, labels: Sequence[int]) -> int:
        """Flat basis index of the product state with per-slot levels ``labels``."""
        if len(labels) != self.nslots:
            raise DimensionError(f"expected {self.nslots} labels, got {len(labels)}")
        idx = 0
        for lab, dim in zip(labels, self.dims):
            if not 0 <= lab < dim:
                raise DimensionError(f"label {lab} out of range for dimension {dim}")
            idx = idx * dim + lab
        return idx

    def labels_of(self, index: int) -> tuple[int, ...]:
        """Inverse of :meth:`index` (last subsystem varies fastest)."""
        if not 0 <= index < self.total:
            raise DimensionError(f"basis index {index} out of range")
        out = []
        for dim in reversed(self.dims):
            out.append(index % dim)
            index //= dim
        return tuple(reversed(out))


def _freeze(a: np.ndarray) -> np.ndarray:
    a = np.array(a, dtype=np.complex128, copy=True)
    a.setflags(write=False)
    return a


@dataclass(frozen=True)
class Operator:
    """Immutable dense complex matrix tagged with its tensor-product space."""

    space: SpaceSpec
    matrix: np.ndarray

    def __post_init__(self):
        m = _freeze(self.matrix)
        if m.ndim != 2 or m.shape[0] != m.shape[1]:
            raise DimensionError(f"operator matrix must be square, got shape {m.shape}")
        if m.shape[0] != self.space.total:
            raise DimensionError(
                f"matrix dimension {m.shape[0]} does not match space total {self.space.total}"
            )
        object.__setattr__(self, "matrix", m)

    @property
    def dim(self) -> int:
        return self.matrix.shape[0]

    def dagger(self) -> "Operator":
        return Operator(self.space, self.matrix.conj().T)

    def is_hermitian(self, tol: float = 1e-10) -> bool:
        return is_hermitian(self, tol)

    def norm2(self) -> float:
        """Spectral (largest singular value) norm."""
        return float(np.linalg.norm(self.matrix, 2))

    def trace(self) -> complex:
        return complex(np.trace(self.matrix))

    def _require_same_space(self, other: "Operator"):
        if self.space.dims != other.space.dims:
            raise DimensionError(
                f"operator spaces differ: {self.space.dims} vs {other.space.dims}"
            )

    def __add__(self, other: "Operator") -> "Operator":
        self._require_same_space(other)
        return Operator(self.space, self.matrix + other.matrix)

    def __sub__(self, other: "Operator") -> "Operator":
        self._require_same_space(other)
        return Operator(self.space, self.matrix - other.matrix)

    def __mul__(self, scalar) -> "Operator":
        return Operator(self.space, self.matrix * complex(scalar))

    __rmul__ = __mul__

    def __neg__(self) -> "Operator":
        return Operator(self.space, -self.matrix)

    def __matmul__(self, other):
        if isinstance(other, Operator):
            self._require_same_space(other)
            return Operator(self.space, self.matrix @ other.matrix)
        if isinstance(other, StateVector):
            if self.space.dims != other.space.dims:
                raise DimensionError("operator and state live on different spaces")
            return StateVector(self.space, self.matrix @ other.amplitudes)
        return NotImplemented


@dataclass(frozen=True)
class StateVector:
    """Immutable complex amplitude vector on a tensor-product space."""

    space: SpaceSpec
    amplitudes: np.ndarray

    def __post_init__(self):
        a = _freeze(self.amplitudes)
        if a.ndim != 1 or a.shape[0] != self.space.total:
            raise DimensionError(
                f"amplitude vector length {a.shape} does not match space total {self.space.total}"
            )
        object.__setattr__(self, "amplitudes", a)

    def norm(self) -> float:
        return float(np.linalg.norm(self.amplitudes))

    def normalized(self) -> "StateVector":
        n = self.norm()
        if n == 0.0:
            raise DimensionError("cannot normalize the zero vector")
        return StateVector(self.space, self.amplitudes / n)

    def populations(self) -> np.ndarray:
        return np.abs(self.amplitudes) ** 2

    def overlap(self, other: "StateVector") -> complex:
        if self.space.dims != other.space.dims:
            raise DimensionError("states live on different spaces")
        return complex(np.vdot(self.amplitudes, other.amplitudes))


def identity(space: SpaceSpec) -> Operator:
    return Operator(space, np.eye(space.total, dtype=np.complex128))


def zero_operator(space: SpaceSpec) -> Operator:
    return Operator(space, np.zeros((space.total, space.total), dtype=np.complex128))


def basis_state(space: SpaceSpec, labels: Sequence[int]) -> StateVector:
    amp = np.zeros(space.total, dtype=np.complex128)
    amp[space.index(labels)] = 1.0
    return StateVector(space, amp)


def coherent_state(dim: int, alpha: complex) -> StateVector:
    """Truncated coherent state, renormalized on the ``dim`` Fock levels kept."""
    k = np.arange(dim)
    log_fact = np.cumsum(np.log(np.maximum(k, 1)))
    amp = np.exp(k * np.log(complex(alpha)) - 0.5 * log_fact) if alpha != 0 else None
    if amp is None:
        amp = np.zeros(dim, dtype=np.complex128)
        amp[0] = 1.0
    amp = np.asarray(amp, dtype=np.complex128)
    amp /= np.linalg.norm(amp)
    return StateVector(SpaceSpec((dim,)), amp)


def product_state(a: StateVector, b: StateVector) -> StateVector:
    space = SpaceSpec(a.space.dims + b.space.dims)
    return StateVector(space, np.kron(a.amplitudes, b.amplitudes))


def projector(space: SpaceSpec, label_sets: Sequence[Sequence[int]]) -> Operator:
    """Orthogonal projector onto the span of the given product basis states."""
    m = np.zeros((space.total, space.total), dtype=np.complex128)
    for labels in label_sets:
        i = space.index(labels)
        m[i, i] = 1.0
    return Operator(space, m)


def transition(dim: int, upper: int, lower: int) -> Operator:
    """Single-slot |upper><lower| on a ``dim``-level system."""
    m = np.zeros((dim, dim), dtype=np.complex128)
    m[upper, lower] = 1.0
    return Operator(SpaceSpec((dim,)), m)


def level_projector(dim: int, level: int) -> Operator:
    return transition(dim, level, level)


def destroy(dim: int) -> Operator:
    """Bosonic annihilation operator truncated to ``dim`` Fock states."""
    m = np.zeros((dim, dim), dtype=np.complex128)
    for k in range(1, dim):
        m[k - 1, k] = np.sqrt(k)
    return Operator(SpaceSpec((dim,)), m)


def number(dim: int) -> Operator:
    return Operator(SpaceSpec((dim,)), np.diag(np.arange(dim, dtype=np.complex128)))


def kron(a: Operator, b: Operator) -> Operator:
    """Tensor product; result space is the concatenation of both dim lists."""
    space = SpaceSpec(a.space.dims + b.space.dims)
    return Operator(space, np.kron(a.matrix, b.matrix))


def embed(local_op: Operator, slot: int, space: SpaceSpec) -> Operator:
    """Lift a single-subsystem operator into ``space``, identity elsewhere."""
    if not 0 <= slot < space.nslots:
        raise DimensionError(f"slot {slot} out of range for {space.nslots} subsystems")
    if local_op.dim != space.dims[slot]:
        raise DimensionError(
            f"local operator dimension {local_op.dim} does not match "
            f"space.dims[{slot}] = {space.dims[slot]}"
        )
    left = int(np.prod(space.dims[:slot], initial=1))
    right = int(np.prod(space.dims[slot + 1:], initial=1))
    m = np.kron(
        np.eye(left, dtype=np.complex128),
        np.kron(local_op.matrix, np.eye(right, dtype=np.complex128)),
    )
    return Operator(space, m)


def expectation(psi: StateVector, a: Operator) -> complex:
    """<psi|A|psi>; real to ~1e-12 whenever A is Hermitian."""
    if psi.space.dims != a.space.dims:
        raise DimensionError("state and operator live on different spaces")
    return complex(np.vdot(psi.amplitudes, a.matrix @ psi.amplitudes))


def is_hermitian(a: Operator, tol: float = 1e-10) -> bool:
    return bool(np.max(np.abs(a.matrix - a.matrix.conj().T)) <= tol)
