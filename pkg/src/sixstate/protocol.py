"""Monte Carlo sessions of the four- and six-state protocols with Eve in line.

Randomness: signals are processed in fixed-size blocks; block ``k`` draws
from a Philox generator keyed by ``SeedSequence(seed, spawn_key=(k,))``.
A session is therefore bit-reproducible from its seed, and blocks could be
farmed out in any order without changing the result.

No channel noise is modelled: every error Bob sees comes from Eve.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, field

import numpy as np

from .attack import build_one_bit_probe, build_optimal_probe, isometry_matrix
from .infotheory import JointDistribution, mutual_information
from .qcore import Basis

BLOCK_SIZE = 1 << 14
MIN_RECORDS = 1000
_PROB_FLOOR = 1e-14


class Attack(enum.Enum):
    NONE = "none"
    OPTIMAL_2BIT = "opt2"
    OPTIMAL_1BIT = "opt1"


class InsufficientDataError(ValueError):
    pass


@dataclass(frozen=True)
class SessionConfig:
    n_signals: int
    num_states: int = 6
    disturbance: float = 0.0
    attack: Attack = Attack.NONE
    seed: int = 0

    def __post_init__(self) -> None:
        if self.n_signals < 1:
            raise ValueError("n_signals must be >= 1")
        if self.num_states not in (4, 6):
            raise ValueError("num_states must be 4 or 6")
        if not 0.0 <= self.disturbance <= 0.5:
            raise ValueError(f"disturbance {self.disturbance!r} outside [0, 1/2]")
        if self.seed < 0 or self.seed >= 2**64:
            raise ValueError("seed must fit in an unsigned 64-bit integer")

    @property
    def bases(self) -> tuple[Basis, ...]:
        return (Basis.Z, Basis.X) if self.num_states == 4 else (Basis.Z, Basis.X, Basis.Y)


@dataclass
class SessionStats:
    n_signals: int
    sifted_count: int
    sift_rate: float
    qber: float
    empirical_i_ab: float | None
    empirical_i_ae: float | None
    per_basis_qber: dict[str, float] = field(default_factory=dict)
    per_basis_sifted: dict[str, int] = field(default_factory=dict)
    eve_records: int = 0

    def report_lines(self) -> list[str]:
        fmt = lambda v: "na" if v is None else f"{v:.9g}"
        lines = [
            f"n_signals={self.n_signals}",
            f"sifted_count={self.sifted_count}",
            f"sift_rate={fmt(self.sift_rate)}",
            f"qber={fmt(self.qber)}",
            f"empirical_i_ab={fmt(self.empirical_i_ab)}",
            f"empirical_i_ae={fmt(self.empirical_i_ae)}",
            f"eve_records={self.eve_records}",
        ]
        for name in self.per_basis_qber:
            lines.append(f"qber_{name}={fmt(self.per_basis_qber[name])}")
            lines.append(f"sifted_{name}={self.per_basis_sifted[name]}")
        return lines


def _attack_matrix(cfg: SessionConfig) -> tuple[np.ndarray, int]:
    if cfg.attack is Attack.NONE:
        return np.eye(2, dtype=complex), 1
    probe = build_optimal_probe(cfg.disturbance) if cfg.attack is Attack.OPTIMAL_2BIT else build_one_bit_probe(cfg.disturbance)
    return isometry_matrix(probe), probe.probe_dim


def outcome_probabilities(cfg: SessionConfig) -> np.ndarray:
    """P(bob outcome, eve outcome | alice basis, alice bit, bob basis).

    Shape (nb, 2, nb, 2 * probe_dim); the last axis is bob_outcome * probe_dim + eve_outcome.
    Eve reads her probe in its computational basis.
    """
    v, probe_dim = _attack_matrix(cfg)
    bases = cfg.bases
    nb = len(bases)
    out = np.empty((nb, 2, nb, 2 * probe_dim))
    for i, alice_basis in enumerate(bases):
        for bit, state in enumerate(alice_basis.states()):
            joint = (v @ state.amplitudes).reshape(2, probe_dim)
            for j, bob_basis in enumerate(bases):
                meas = np.column_stack([s.amplitudes for s in bob_basis.states()])
                p = np.abs(meas.conj().T @ joint) ** 2
                p[p < _PROB_FLOOR] = 0.0
                out[i, bit, j] = (p / p.sum()).ravel()
    return out


def _block_rng(seed: int, block: int) -> np.random.Generator:
    return np.random.Generator(np.random.Philox(np.random.SeedSequence(seed, spawn_key=(block,))))


def _simulate(cfg: SessionConfig) -> dict[str, np.ndarray]:
    probs = outcome_probabilities(cfg)
    probe_dim = probs.shape[-1] // 2
    cum = np.cumsum(probs, axis=-1)
    cum[..., -1] = 1.0
    nb = len(cfg.bases)

    chunks = []
    for block, start in enumerate(range(0, cfg.n_signals, BLOCK_SIZE)):
        size = min(BLOCK_SIZE, cfg.n_signals - start)
        rng = _block_rng(cfg.seed, block)
        alice_basis = rng.integers(0, nb, size)
        alice_bit = rng.integers(0, 2, size)
        bob_basis = rng.integers(0, nb, size)
        u = rng.random(size)
        outcome = np.sum(u[:, None] >= cum[alice_basis, alice_bit, bob_basis], axis=1)
        chunks.append((alice_basis, alice_bit, bob_basis, outcome // probe_dim, outcome % probe_dim))
    cols = [np.concatenate(c) for c in zip(*chunks)]
    return dict(zip(("alice_basis", "alice_bit", "bob_basis", "bob_bit", "eve_outcome"), cols))


def empirical_mutual_information(records, n_outcomes: int | None = None) -> float:
    """Plug-in mutual information of (alice_bit, outcome) records.

    The estimate is biased upward by roughly (k - 1) / (2 N ln 2) bits
    for k outcome values and N records.
    """
    rec = np.asarray(records, dtype=int)
    if rec.ndim != 2 or rec.shape[1] != 2:
        raise ValueError("records must be an (N, 2) array of (alice_bit, outcome)")
    if len(rec) < MIN_RECORDS:
        raise InsufficientDataError(f"need at least {MIN_RECORDS} records, got {len(rec)}")
    k = max(int(rec[:, 1].max()) + 1, 2, n_outcomes or 0)
    counts = np.zeros((2, k))
    np.add.at(counts, (rec[:, 0], rec[:, 1]), 1)
    return mutual_information(JointDistribution.from_counts(counts))


def run_session(cfg: SessionConfig) -> SessionStats:
    """Simulate one session and compute the sifted statistics.

    Eve's empirical information is taken over every round in which Alice
    announces the Z basis: Eve's outcome statistics given Alice's bit do
    not depend on Bob's basis choice.
    """
    data = _simulate(cfg)
    sifted = data["alice_basis"] == data["bob_basis"]
    errors = data["alice_bit"] != data["bob_bit"]
    n_sifted = int(sifted.sum())

    per_basis_qber, per_basis_sifted = {}, {}
    for idx, basis in enumerate(cfg.bases):
        mask = sifted & (data["alice_basis"] == idx)
        per_basis_sifted[basis.value] = int(mask.sum())
        per_basis_qber[basis.value] = float(errors[mask].mean()) if mask.any() else 0.0

    i_ab = None
    if n_sifted >= MIN_RECORDS:
        i_ab = empirical_mutual_information(np.column_stack([data["alice_bit"][sifted], data["bob_bit"][sifted]]))

    i_ae = None
    z_rounds = data["alice_basis"] == 0
    eve_records = int(z_rounds.sum()) if cfg.attack is not Attack.NONE else 0
    if cfg.attack is not Attack.NONE and eve_records >= MIN_RECORDS:
        probe_dim = 4 if cfg.attack is Attack.OPTIMAL_2BIT else 2
        i_ae = empirical_mutual_information(
            np.column_stack([data["alice_bit"][z_rounds], data["eve_outcome"][z_rounds]]), n_outcomes=probe_dim
        )

    return SessionStats(
        n_signals=cfg.n_signals,
        sifted_count=n_sifted,
        sift_rate=n_sifted / cfg.n_signals,
        qber=float(errors[sifted].mean()) if n_sifted else 0.0,
        empirical_i_ab=i_ab,
        empirical_i_ae=i_ae,
        per_basis_qber=per_basis_qber,
        per_basis_sifted=per_basis_sifted,
        eve_records=eve_records,
    )
