"""Small dense state machinery for qubit registers.

Composite systems are ordered with the first tensor factor as the most
significant index (``numpy.kron`` convention).  States are compared through
overlaps or density matrices, never amplitude by amplitude, since global
phase carries no meaning.
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum
from typing import Sequence

import numpy as np

ALGEBRA_TOL = 1e-12
POSITIVITY_TOL = 1e-10
# Alice + Bob + a two-qubit probe is the largest register we ever build.
MAX_DIM = 16
_ALLOWED_DIMS = (2, 4, 8, 16)

PAULI_X = np.array([[0, 1], [1, 0]], dtype=complex)
PAULI_Y = np.array([[0, -1j], [1j, 0]], dtype=complex)
PAULI_Z = np.array([[1, 0], [0, -1]], dtype=complex)
IDENTITY2 = np.eye(2, dtype=complex)
PAULIS = (PAULI_X, PAULI_Y, PAULI_Z)


class DimensionError(ValueError):
    """Raised when operand dimensions are inconsistent or too large."""


def _frozen(arr: np.ndarray) -> np.ndarray:
    arr = np.array(arr, dtype=complex)
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True)
class PureState:
    amplitudes: np.ndarray

    def __post_init__(self) -> None:
        amps = _frozen(np.ravel(self.amplitudes))
        if amps.size not in _ALLOWED_DIMS:
            raise DimensionError(f"unsupported state dimension {amps.size}")
        norm = np.vdot(amps, amps).real
        if abs(norm - 1.0) > ALGEBRA_TOL:
            raise ValueError(f"state not normalized: <psi|psi> = {norm!r}")
        object.__setattr__(self, "amplitudes", amps)

    @classmethod
    def normalized(cls, amplitudes: Sequence[complex] | np.ndarray) -> "PureState":
        amps = np.asarray(amplitudes, dtype=complex).ravel()
        return cls(amps / np.linalg.norm(amps))

    @property
    def dim(self) -> int:
        return self.amplitudes.size

    def inner(self, other: "PureState") -> complex:
        """<self|other>"""
        return complex(np.vdot(self.amplitudes, other.amplitudes))

    def density(self) -> "DensityMatrix":
        a = self.amplitudes
        return DensityMatrix(np.outer(a, a.conj()))

    def bloch(self) -> "BlochVector":
        return self.density().bloch()


@dataclass(frozen=True)
class DensityMatrix:
    entries: np.ndarray

    def __post_init__(self) -> None:
        m = _frozen(self.entries)
        if m.ndim != 2 or m.shape[0] != m.shape[1] or m.shape[0] not in _ALLOWED_DIMS:
            raise DimensionError(f"unsupported density matrix shape {m.shape}")
        if np.max(np.abs(m - m.conj().T)) > ALGEBRA_TOL:
            raise ValueError("density matrix is not Hermitian")
        if abs(np.trace(m).real - 1.0) > ALGEBRA_TOL:
            raise ValueError(f"density matrix trace {np.trace(m).real!r} != 1")
        if np.linalg.eigvalsh(m).min() < -POSITIVITY_TOL:
            raise ValueError("density matrix has a negative eigenvalue")
        object.__setattr__(self, "entries", m)

    @classmethod
    def maximally_mixed(cls, dim: int) -> "DensityMatrix":
        return cls(np.eye(dim, dtype=complex) / dim)

    @property
    def dim(self) -> int:
        return self.entries.shape[0]

    def expectation(self, operator: np.ndarray) -> float:
        return float(np.trace(self.entries @ operator).real)

    def bloch(self) -> "BlochVector":
        if self.dim != 2:
            raise DimensionError("Bloch vectors exist only for qubits")
        x, y, z = (self.expectation(p) for p in PAULIS)
        return BlochVector(x, y, z)


@dataclass(frozen=True)
class BlochVector:
    x: float
    y: float
    z: float

    def __post_init__(self) -> None:
        if self.norm() > 1.0 + ALGEBRA_TOL:
            raise ValueError(f"Bloch vector norm {self.norm()!r} exceeds 1")

    def as_array(self) -> np.ndarray:
        return np.array([self.x, self.y, self.z], dtype=float)

    def norm(self) -> float:
        return float(np.linalg.norm([self.x, self.y, self.z]))

    def density(self) -> DensityMatrix:
        """Return 1/2 (1 + s.sigma)."""
        s = self.as_array()
        return DensityMatrix(0.5 * (IDENTITY2 + sum(c * p for c, p in zip(s, PAULIS))))


class Basis(Enum):
    Z = "Z"
    X = "X"
    Y = "Y"

    def states(self) -> tuple[PureState, PureState]:
        """The two states encoding bit 0 and bit 1."""
        r = 1 / np.sqrt(2)
        if self is Basis.Z:
            return PureState([1, 0]), PureState([0, 1])
        if self is Basis.X:
            return PureState([r, r]), PureState([r, -r])
        return PureState([r, 1j * r]), PureState([r, -1j * r])

    def state(self, bit: int) -> PureState:
        return self.states()[bit]


def six_states() -> list[tuple[Basis, int, PureState]]:
    """All (basis, bit, state) triples, Bloch vectors along +-z, +-x, +-y."""
    return [(b, bit, s) for b in Basis for bit, s in enumerate(b.states())]


def bloch_to_state(v: BlochVector | Sequence[float]) -> PureState:
    """Pure qubit state with unit Bloch vector ``v`` (phase fixed so amplitude 0 is real)."""
    x, y, z = v.as_array() if isinstance(v, BlochVector) else np.asarray(v, dtype=float)
    theta = np.arccos(np.clip(z, -1.0, 1.0))
    phi = np.arctan2(y, x)
    return PureState([np.cos(theta / 2), np.exp(1j * phi) * np.sin(theta / 2)])


def tensor(a, b):
    """Kronecker product of two states or two density matrices."""
    if isinstance(a, PureState) and isinstance(b, PureState):
        if a.dim * b.dim > MAX_DIM:
            raise DimensionError(f"composite dimension {a.dim * b.dim} exceeds {MAX_DIM}")
        return PureState(np.kron(a.amplitudes, b.amplitudes))
    if isinstance(a, DensityMatrix) and isinstance(b, DensityMatrix):
        if a.dim * b.dim > MAX_DIM:
            raise DimensionError(f"composite dimension {a.dim * b.dim} exceeds {MAX_DIM}")
        return DensityMatrix(np.kron(a.entries, b.entries))
    raise TypeError("tensor() needs two PureState or two DensityMatrix operands")


def partial_trace(rho: DensityMatrix | PureState, keep: int | Sequence[int], dims: Sequence[int]) -> DensityMatrix:
    """Reduce ``rho`` onto the subsystems listed in ``keep``.

    ``dims`` gives the factor dimensions in tensor order; ``keep`` holds
    factor indices (a single int is accepted).
    """
    if isinstance(rho, PureState):
        rho = rho.density()
    dims = [int(d) for d in dims]
    if int(np.prod(dims)) != rho.dim:
        raise DimensionError(f"factor dims {dims} do not match matrix dimension {rho.dim}")
    keep = sorted({keep} if isinstance(keep, int) else set(keep))
    n = len(dims)
    if not keep or keep[0] < 0 or keep[-1] >= n:
        raise DimensionError(f"invalid subsystem selection {keep} for {n} factors")
    traced = [i for i in range(n) if i not in keep]

    t = rho.entries.reshape(dims + dims)
    # contract row and column index of each traced factor, highest first
    for i in sorted(traced, reverse=True):
        t = np.trace(t, axis1=i, axis2=i + t.ndim // 2)
    d = int(np.prod([dims[i] for i in keep]))
    out = t.reshape(d, d)
    return DensityMatrix(0.5 * (out + out.conj().T))


def fidelity_pure(psi: PureState, rho: DensityMatrix) -> float:
    """<psi|rho|psi>"""
    if psi.dim != rho.dim:
        raise DimensionError(f"state dim {psi.dim} != matrix dim {rho.dim}")
    a = psi.amplitudes
    return float(np.clip(np.vdot(a, rho.entries @ a).real, 0.0, 1.0))


def make_singlet() -> PureState:
    """(|01> - |10>)/sqrt(2)"""
    r = 1 / np.sqrt(2)
    return PureState([0, r, -r, 0])


def spin_operator(direction: Sequence[float]) -> np.ndarray:
    """a . sigma for a real 3-vector ``a``."""
    a = np.asarray(direction, dtype=float)
    return a[0] * PAULI_X + a[1] * PAULI_Y + a[2] * PAULI_Z


def measure_projective(rho: DensityMatrix, basis: Sequence[PureState]) -> np.ndarray:
    """Outcome probabilities of a rank-one projective measurement."""
    vecs = np.column_stack([s.amplitudes for s in basis])
    if vecs.shape != (rho.dim, rho.dim):
        raise ValueError(f"need {rho.dim} basis vectors, got {vecs.shape[1]}")
    if np.max(np.abs(vecs.conj().T @ vecs - np.eye(rho.dim))) > POSITIVITY_TOL:
        raise ValueError("measurement basis is not orthonormal")
    probs = np.einsum("ik,ij,jk->k", vecs.conj(), rho.entries, vecs).real
    return np.clip(probs, 0.0, None)


def computational_basis(dim: int) -> list[PureState]:
    return [PureState(row) for row in np.eye(dim)]
