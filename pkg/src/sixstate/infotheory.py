"""Closed-form information quantities (all logarithms base 2, 0 log 0 = 0)."""

from __future__ import annotations

import numpy as np

SUM_TOL = 1e-12


def _xlogx(x):
    x = np.asarray(x, dtype=float)
    out = np.zeros_like(x)
    pos = x > 0
    out[pos] = x[pos] * np.log2(x[pos])
    return out


def _check_disturbance(d: float, hi: float = 0.5) -> float:
    d = float(d)
    if not 0.0 <= d <= hi:
        raise ValueError(f"disturbance {d!r} outside [0, {hi}]")
    return d


def tau(x: float, y: float) -> float:
    """x log x + y log y - (x+y) log(x+y)."""
    if x < 0 or y < 0:
        raise ValueError("tau is defined for non-negative arguments only")
    return float(_xlogx(x) + _xlogx(y) - _xlogx(x + y))


def binary_entropy(p: float) -> float:
    if not 0.0 <= p <= 1.0:
        raise ValueError(f"probability {p!r} outside [0, 1]")
    return float(-(_xlogx(p) + _xlogx(1.0 - p)))


def i_ab(d: float) -> float:
    """Alice-Bob mutual information when Bob's bit is flipped with probability ``d``."""
    d = _check_disturbance(d, hi=1.0)
    return 1.0 - binary_entropy(d)


def two_bit_overlap(d: float) -> float:
    """f(D) = 1/2 (1 + sqrt(D(2-3D))/(1-D)): weight of Eve's likely outcome."""
    d = _check_disturbance(d)
    return 0.5 * (1.0 + np.sqrt(d * (2.0 - 3.0 * d)) / (1.0 - d))


def one_bit_overlap(d: float) -> float:
    """f1(D) = 1/2 (1 + D + sqrt(D(2-3D)))."""
    d = _check_disturbance(d)
    return 0.5 * (1.0 + d + np.sqrt(d * (2.0 - 3.0 * d)))


def i_ae_two_bit(d: float) -> float:
    """Eve's maximal information with an optimal two-qubit probe."""
    f = two_bit_overlap(d)
    return 1.0 - (1.0 - d) * binary_entropy(min(f, 1.0))


def i_ae_one_bit(d: float) -> float:
    """Eve's maximal information when restricted to a one-qubit probe."""
    f = one_bit_overlap(d)
    return 1.0 - binary_entropy(min(f, 1.0))


def i_ae_bb84_reference(d: float) -> float:
    """Known optimal individual-attack curve for the four-state protocol.

    1 - h(1/2 + sqrt(D(1-D))).  Used only as a cross-check for the
    numerically derived four-state maximum.
    """
    d = _check_disturbance(d)
    return 1.0 - binary_entropy(min(0.5 + np.sqrt(d * (1.0 - d)), 1.0))


class JointDistribution:
    """Probability table: rows index Alice's bit, columns the counterpart's outcome."""

    def __init__(self, table) -> None:
        p = np.array(table, dtype=float)
        if p.ndim != 2 or p.shape[0] != 2 or p.shape[1] < 2:
            raise ValueError(f"expected a 2 x k table with k >= 2, got shape {p.shape}")
        if np.any(p < 0):
            raise ValueError("negative probability in joint table")
        if abs(p.sum() - 1.0) > SUM_TOL:
            raise ValueError(f"joint table sums to {p.sum()!r}")
        p.setflags(write=False)
        self.p = p

    @classmethod
    def from_counts(cls, counts) -> "JointDistribution":
        c = np.asarray(counts, dtype=float)
        return cls(c / c.sum())

    @classmethod
    def from_conditionals(cls, rows, prior=(0.5, 0.5)) -> "JointDistribution":
        """Build from P(outcome | bit) rows and Alice's prior."""
        rows = np.asarray(rows, dtype=float)
        return cls(np.asarray(prior, dtype=float)[:, None] * rows)

    def __repr__(self) -> str:
        return f"JointDistribution({self.p.tolist()!r})"


def mutual_information(j: JointDistribution) -> float:
    p = j.p
    pa = p.sum(axis=1)
    pe = p.sum(axis=0)
    # H(A) + H(E) - H(A,E)
    mi = _xlogx(p).sum() - _xlogx(pa).sum() - _xlogx(pe).sum()
    return float(max(mi, 0.0))
