"""Eve's single-qubit probe interactions.

An attack is stored as the isometry

    |0> -> sqrt(F) |0>|a> + sqrt(1-F) |1>|b>
    |1> -> sqrt(F) |1>|c> + sqrt(1-F) |0>|d>

from Bob's qubit into (Bob qubit) x (probe), rather than as a full unitary
with an explicit initial probe state.  Column orthonormality of that map is
the unitarity condition <a|d> + <b|c> = 0.

Two-qubit probe states are indexed in the order 00, 10, 01, 11, so the
amplitudes of a state are (alpha, beta, gamma, delta) in that order.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .infotheory import JointDistribution, mutual_information
from .qcore import (
    Basis,
    DensityMatrix,
    PureState,
    computational_basis,
    measure_projective,
    partial_trace,
)

VALID_TOL = 1e-10
PROBE_LABELS = ("00", "10", "01", "11")


def _check_disturbance(disturbance: float) -> float:
    disturbance = float(disturbance)
    if not 0.0 <= disturbance <= 0.5:
        raise ValueError(f"disturbance {disturbance!r} outside [0, 1/2]")
    return disturbance


@dataclass(frozen=True)
class ConstraintReport:
    """Absolute residuals of the equal-treatment and unitarity conditions."""

    bd_overlap: float  # |<b|d>|
    ca_real_part: float  # |Re<c|a> - (2 - 1/F)|
    ab_plus_dc: float  # |<a|b> + <d|c>|
    unitarity: float  # |<a|d> + <b|c>|

    def as_tuple(self) -> tuple[float, float, float, float]:
        return (self.bd_overlap, self.ca_real_part, self.ab_plus_dc, self.unitarity)

    @property
    def max_residual(self) -> float:
        return max(self.as_tuple())

    @property
    def valid(self) -> bool:
        return self.max_residual < VALID_TOL


@dataclass(frozen=True)
class ProbeSpec:
    fidelity: float
    a: PureState
    b: PureState
    c: PureState
    d: PureState

    def __post_init__(self) -> None:
        if not 0.5 <= self.fidelity <= 1.0:
            raise ValueError(f"fidelity {self.fidelity!r} outside [1/2, 1]")
        dims = {s.dim for s in (self.a, self.b, self.c, self.d)}
        if len(dims) != 1 or dims.pop() not in (2, 4):
            raise ValueError("probe states must all be of dimension 2 or 4")

    @property
    def probe_dim(self) -> int:
        return self.a.dim

    @property
    def disturbance(self) -> float:
        return 1.0 - self.fidelity

    def amplitudes(self) -> dict[str, np.ndarray]:
        return {k: getattr(self, k).amplitudes for k in "abcd"}


@dataclass(frozen=True)
class AttackIsometry:
    """(2 * probe_dim) x 2 matrix; column j is the image of Bob's |j>."""

    matrix: np.ndarray
    probe_dim: int

    def __post_init__(self) -> None:
        m = np.array(self.matrix, dtype=complex)
        if m.shape != (2 * self.probe_dim, 2):
            raise ValueError(f"isometry shape {m.shape} does not match probe_dim {self.probe_dim}")
        m.setflags(write=False)
        object.__setattr__(self, "matrix", m)

    def isometry_error(self) -> float:
        """max |V^dagger V - 1|"""
        return float(np.max(np.abs(self.matrix.conj().T @ self.matrix - np.eye(2))))


def _optimal_angle(disturbance: float) -> float:
    # half of arcsin((1-2D)/(1-D)) on its principal branch, so theta in [0, pi/4]
    return 0.5 * np.arcsin(np.clip((1 - 2 * disturbance) / (1 - disturbance), -1.0, 1.0))


def build_optimal_probe(disturbance: float) -> ProbeSpec:
    """Eve's optimal two-qubit probe at Bob-disturbance ``disturbance``.

    b = |00>, d = |11>, a = cos t|10> + sin t|01>, c = sin t|10> + cos t|01>.
    """
    disturbance = _check_disturbance(disturbance)
    t = _optimal_angle(disturbance)
    e = np.eye(4)
    return ProbeSpec(
        fidelity=1.0 - disturbance,
        a=PureState(np.cos(t) * e[1] + np.sin(t) * e[2]),
        b=PureState(e[0]),
        c=PureState(np.sin(t) * e[1] + np.cos(t) * e[2]),
        d=PureState(e[3]),
    )


def build_one_bit_probe(disturbance: float) -> ProbeSpec:
    """Best single-qubit probe.

    With b = |0> and d = |1>, the constraints force c = -(a_1, a_0) and
    a_0 a_1 = -(1-2D)/(2(1-D)).  That leaves two real branches; the one
    giving Eve more information in her computational measurement is kept.
    """
    disturbance = _check_disturbance(disturbance)
    fidelity = 1.0 - disturbance
    t = _optimal_angle(disturbance)
    candidates = []
    for phi in (t, np.pi / 2 - t):
        a = np.array([np.cos(phi), -np.sin(phi)])
        spec = ProbeSpec(
            fidelity=fidelity,
            a=PureState(a),
            b=PureState([1, 0]),
            c=PureState(-a[::-1]),
            d=PureState([0, 1]),
        )
        candidates.append((measured_information(spec), spec))
    return max(candidates, key=lambda pair: pair[0])[1]


def check_constraints(p: ProbeSpec) -> ConstraintReport:
    a, b, c, d = p.a, p.b, p.c, p.d
    return ConstraintReport(
        bd_overlap=abs(b.inner(d)),
        ca_real_part=abs(c.inner(a).real - (2.0 - 1.0 / p.fidelity)),
        ab_plus_dc=abs(a.inner(b) + d.inner(c)),
        unitarity=abs(a.inner(d) + b.inner(c)),
    )


def isometry_matrix(p: ProbeSpec) -> np.ndarray:
    """Unchecked version of :func:`to_isometry`, also used for perturbed specs."""
    sf, sd = np.sqrt(p.fidelity), np.sqrt(1.0 - p.fidelity)
    zero, one = np.array([1.0, 0.0]), np.array([0.0, 1.0])
    amps = p.amplitudes()
    col0 = sf * np.kron(zero, amps["a"]) + sd * np.kron(one, amps["b"])
    col1 = sf * np.kron(one, amps["c"]) + sd * np.kron(zero, amps["d"])
    return np.column_stack([col0, col1])


def to_isometry(p: ProbeSpec) -> AttackIsometry:
    report = check_constraints(p)
    if not report.valid:
        raise ValueError(f"probe violates constraints: {report}")
    return AttackIsometry(isometry_matrix(p), p.probe_dim)


def apply(v: AttackIsometry, state: PureState) -> PureState:
    """Joint (Bob qubit, probe) state after the interaction."""
    if state.dim != 2:
        raise ValueError("the attack acts on a single qubit")
    return PureState(v.matrix @ state.amplitudes)


def bob_state(v: AttackIsometry, state: PureState) -> DensityMatrix:
    return partial_trace(apply(v, state), keep=0, dims=(2, v.probe_dim))


def eve_state(v: AttackIsometry, state: PureState) -> DensityMatrix:
    return partial_trace(apply(v, state), keep=1, dims=(2, v.probe_dim))


def eve_conditional_states(p: ProbeSpec, basis: Basis) -> tuple[DensityMatrix, DensityMatrix]:
    """Eve's probe state given Alice sent bit 0 / bit 1 in ``basis``."""
    v = to_isometry(p)
    return tuple(eve_state(v, s) for s in basis.states())  # type: ignore[return-value]


def outcome_table(p: ProbeSpec, basis: Basis = Basis.Z, measurement=None) -> JointDistribution:
    """Joint table of Alice's bit and Eve's probe outcome (uniform prior).

    ``measurement`` defaults to the computational basis of the probe.
    """
    rho0, rho1 = eve_conditional_states(p, basis)
    meas = computational_basis(p.probe_dim) if measurement is None else measurement
    rows = [measure_projective(r, meas) for r in (rho0, rho1)]
    rows = [r / r.sum() for r in rows]
    return JointDistribution.from_conditionals(rows)


def measured_information(p: ProbeSpec, basis: Basis = Basis.Z, measurement=None) -> float:
    """Eve's information on Alice's bit when she measures after the basis is announced."""
    return mutual_information(outcome_table(p, basis, measurement))
