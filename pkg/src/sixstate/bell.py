"""Entanglement-based view: Alice and Bob share a singlet, Eve attacks Bob's half.

The chained Bell combination for n settings per side is

    S = E(a1,b1) + E(a2,b1) + E(a2,b2) + E(a3,b2) + ... + E(an,bn) - E(a1,bn)

which is the CHSH operator for n = 2.  Its local-realist bound is 2n - 2.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np
from scipy.optimize import minimize

from .attack import build_optimal_probe, isometry_matrix
from .qcore import (
    IDENTITY2,
    PAULIS,
    DensityMatrix,
    PureState,
    make_singlet,
    partial_trace,
    spin_operator,
)

UNIT_TOL = 1e-12


def _unit(v: Sequence[float]) -> np.ndarray:
    v = np.asarray(v, dtype=float)
    if v.shape != (3,) or abs(np.linalg.norm(v) - 1.0) > UNIT_TOL:
        raise ValueError(f"not a unit 3-vector: {v!r}")
    return v


@dataclass(frozen=True)
class DirectionSet:
    alice: np.ndarray  # (n, 3)
    bob: np.ndarray  # (n, 3)

    def __post_init__(self) -> None:
        a = np.array([_unit(v) for v in self.alice])
        b = np.array([_unit(v) for v in self.bob])
        if a.shape != b.shape or len(a) < 2:
            raise ValueError("need the same number (>= 2) of settings on each side")
        a.setflags(write=False)
        b.setflags(write=False)
        object.__setattr__(self, "alice", a)
        object.__setattr__(self, "bob", b)

    @property
    def n(self) -> int:
        return len(self.alice)

    @classmethod
    def from_angles(cls, alice_angles, bob_angles) -> "DirectionSet":
        """Directions in the x-z plane at the given polar angles."""
        to_vec = lambda t: np.array([np.sin(t), 0.0, np.cos(t)])
        return cls(np.array([to_vec(t) for t in alice_angles]), np.array([to_vec(t) for t in bob_angles]))

    @classmethod
    def standard(cls, n: int) -> "DirectionSet":
        """Coplanar settings alternating a1, b1, a2, b2, ... in steps of pi/(2n)."""
        step = np.pi / (2 * n)
        return cls.from_angles([2 * k * step for k in range(n)], [(2 * k + 1) * step for k in range(n)])

    def coplanarity(self) -> float:
        """Smallest singular value of all 2n directions; zero iff they share a plane."""
        return float(np.linalg.svd(np.vstack([self.alice, self.bob]), compute_uv=False)[-1])


@dataclass(frozen=True)
class BellReport:
    n: int
    s: float  # |S| at the requested disturbance
    s_q: float  # optimised |S| for the undisturbed singlet
    s_c: float  # local-realist bound 2n - 2
    d_c: float

    @property
    def ratio(self) -> float:
        return self.s_q / self.s_c


def _check_disturbance(d: float) -> float:
    d = float(d)
    if not 0.0 <= d <= 0.5:
        raise ValueError(f"disturbance {d!r} outside [0, 1/2]")
    return d


def rho_ab(d: float) -> DensityMatrix:
    """Alice-Bob state after the optimal attack, closed form.

    Written in the order 00, 10, 01, 11; the matrix is symmetric under
    swapping the two middle indices, so it reads the same in the
    first-factor-major order used everywhere else.
    """
    d = _check_disturbance(d)
    m = 0.5 * np.array(
        [
            [d, 0, 0, 0],
            [0, 1 - d, 2 * d - 1, 0],
            [0, 2 * d - 1, 1 - d, 0],
            [0, 0, 0, d],
        ],
        dtype=complex,
    )
    return DensityMatrix(m)


def rho_ab_from_attack(d: float) -> DensityMatrix:
    """Same state built by attacking Bob's half of a singlet and tracing out the probe."""
    d = _check_disturbance(d)
    v = isometry_matrix(build_optimal_probe(d))
    joint = np.kron(IDENTITY2, v) @ make_singlet().amplitudes
    return partial_trace(PureState(joint), keep=(0, 1), dims=(2, 2, 4))


def correlation(rho: DensityMatrix, a: Sequence[float], b: Sequence[float]) -> float:
    """<(a.sigma) x (b.sigma)>"""
    return rho.expectation(np.kron(spin_operator(_unit(a)), spin_operator(_unit(b))))


def correlation_tensor(rho: DensityMatrix) -> np.ndarray:
    """T_ij = <sigma_i x sigma_j>, so that correlation(rho, a, b) = a . T . b."""
    return np.array([[rho.expectation(np.kron(p, q)) for q in PAULIS] for p in PAULIS])


def _chain_signs(n: int) -> np.ndarray:
    """Sign matrix for the chained sum: S = sum_ij E(a_i, b_j) * W[i, j]."""
    w = np.zeros((n, n))
    for k in range(n):
        w[k, k] += 1.0  # E(a_k, b_k)
        if k + 1 < n:
            w[k + 1, k] += 1.0  # E(a_{k+1}, b_k)
    w[0, n - 1] -= 1.0  # closing link
    return w


def chained_s(rho: DensityMatrix, dirs: DirectionSet) -> float:
    w = _chain_signs(dirs.n)
    return float(
        sum(w[i, j] * correlation(rho, dirs.alice[i], dirs.bob[j]) for i in range(dirs.n) for j in range(dirs.n) if w[i, j])
    )


def _spherical(angles: np.ndarray) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    theta, phi = angles[0::2], angles[1::2]
    st, ct, sp, cp = np.sin(theta), np.cos(theta), np.sin(phi), np.cos(phi)
    vec = np.stack([st * cp, st * sp, ct], axis=1)
    d_theta = np.stack([ct * cp, ct * sp, -st], axis=1)
    d_phi = np.stack([-st * sp, st * cp, np.zeros_like(st)], axis=1)
    return vec, d_theta, d_phi


def optimize_directions(rho: DensityMatrix, n: int, seed: int = 0, restarts: int = 16) -> tuple[DirectionSet, float]:
    """Maximise |S| over all settings on the sphere (no planarity assumed)."""
    if n < 2:
        raise ValueError("chained inequalities need n >= 2")
    t = correlation_tensor(rho)
    w = _chain_signs(n)

    def neg_abs_s(x, sign):
        vec, d_th, d_ph = _spherical(x)
        a, b = vec[:n], vec[n:]
        e = a @ t @ b.T
        s = np.sum(w * e)
        ga = (w @ (b @ t.T)) * sign  # dS/da_i
        gb = (w.T @ (a @ t)) * sign  # dS/db_j
        g = np.vstack([ga, gb])
        grad = np.empty_like(x)
        grad[0::2] = np.sum(g * d_th, axis=1)
        grad[1::2] = np.sum(g * d_ph, axis=1)
        return -sign * s, -grad

    best_val, best_x = -np.inf, None
    for child in np.random.SeedSequence(seed).spawn(restarts):
        rng = np.random.default_rng(child)
        x0 = np.empty(4 * n)
        x0[0::2] = np.arccos(rng.uniform(-1, 1, 2 * n))
        x0[1::2] = rng.uniform(-np.pi, np.pi, 2 * n)
        for sign in (1.0, -1.0):
            res = minimize(neg_abs_s, x0, args=(sign,), jac=True, method="BFGS", options={"gtol": 1e-12})
            if np.isfinite(res.fun) and -res.fun > best_val:
                best_val, best_x = -res.fun, res.x
    if best_x is None:
        raise RuntimeError("direction optimisation failed")
    vec = _spherical(best_x)[0]
    vec = vec / np.linalg.norm(vec, axis=1, keepdims=True)
    dirs = DirectionSet(vec[:n], vec[n:])
    return dirs, abs(chained_s(rho, dirs))


def classical_bound(n: int) -> float:
    return 2.0 * n - 2.0


def critical_disturbance(n: int, seed: int = 0) -> float:
    """Disturbance at which the optimal chained correlation hits its classical bound.

    Uses |S(D)| = S_q (1 - 2D), so D_c = (1 - S_c / S_q) / 2.
    """
    _, s_q = optimize_directions(make_singlet().density(), n, seed=seed)
    return 0.5 * (1.0 - classical_bound(n) / s_q)


def bell_report(n: int, d: float, seed: int = 0) -> BellReport:
    d = _check_disturbance(d)
    singlet = make_singlet().density()
    dirs, s_q = optimize_directions(singlet, n, seed=seed)
    s = abs(chained_s(rho_ab(d), dirs))
    s_c = classical_bound(n)
    return BellReport(n=n, s=s, s_q=s_q, s_c=s_c, d_c=0.5 * (1.0 - s_c / s_q))


def same_direction_correlation(d: float, a: Sequence[float] = (0.0, 0.0, 1.0)) -> float:
    """|<a.sigma x a.sigma>| under attack; below 1 whenever d > 0."""
    return abs(correlation(rho_ab(d), a, a))
