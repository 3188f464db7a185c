"""Numerical verification of Eve's optimal attack.

Everything here is deliberately independent of the closed-form curves in
:mod:`sixstate.infotheory`: Eve's information is maximised directly over
probe amplitudes subject to the equal-treatment constraints, and over probe
measurements for a fixed attack.
"""

from __future__ import annotations

import enum
import logging
from dataclasses import dataclass, field
from functools import lru_cache
from typing import Callable

import numpy as np
from scipy.linalg import expm
from scipy.optimize import brentq, minimize, minimize_scalar

from .attack import ProbeSpec, eve_conditional_states
from .qcore import Basis, PureState

log = logging.getLogger(__name__)

PENALTY_WEIGHTS = (1e1, 1e6)  # initial and cap
MAX_OUTER = 40
DEFAULT_RESTARTS = 32
PROBE_DIM = 4
ROOT_TOL = 1e-10


class ConvergenceError(RuntimeError):
    """No restart produced a feasible optimum."""


class ConstraintMode(enum.Enum):
    SIX_STATE = "six"
    BB84 = "bb84"


_ROWS = {"a": 0, "b": 1, "c": 2, "d": 3}


def _re_inner(x: int, y: int, scale: float = 1.0):
    """Term scale * Re<x|y> as (row, row, kind, scale)."""
    return (x, y, "re", scale)


def _im_inner(x: int, y: int, scale: float = 1.0):
    return (x, y, "im", scale)


@dataclass(frozen=True)
class ConstraintSet:
    """Which equal-treatment conditions the probe must satisfy.

    SIX_STATE: <b|d> = 0, Re<c|a> = 2 - 1/F, <a|b> + <d|c> = 0, and
    unitarity <a|d> + <b|c> = 0, with b = |00> and d = |11> fixed.

    BB84: only the four Z/X states must see fidelity F.  Bob's fidelity for
    |0>, |1> is F by construction; for |0bar>, |1bar> it equals F iff

        Re(<a|b> + <d|c>) = 0   and   F Re<c|a> + (1-F) Re<b|d> = 2F - 1

    (after using unitarity).  Since <b|d> is unconstrained here, b and d
    are free parameters too.
    """

    mode: ConstraintMode = ConstraintMode.SIX_STATE
    tolerance: float = 1e-10

    @property
    def free_states(self) -> tuple[str, ...]:
        return ("a", "c") if self.mode is ConstraintMode.SIX_STATE else ("a", "b", "c", "d")

    def _terms(self, fidelity: float) -> list[tuple[list, float]]:
        """Each residual as a sum of real/imaginary inner-product terms minus a constant."""
        a, b, c, d = range(4)
        dist = 1.0 - fidelity
        unitarity = [
            ([_re_inner(a, d), _re_inner(b, c)], 0.0),
            ([_im_inner(a, d), _im_inner(b, c)], 0.0),
        ]
        if self.mode is ConstraintMode.SIX_STATE:
            return [
                ([_re_inner(b, d)], 0.0),
                ([_im_inner(b, d)], 0.0),
                ([_re_inner(c, a)], 2.0 - 1.0 / fidelity),
                ([_re_inner(a, b), _re_inner(d, c)], 0.0),
                ([_im_inner(a, b), _im_inner(d, c)], 0.0),
            ] + unitarity
        return [
            ([_re_inner(c, a, fidelity), _re_inner(b, d, dist)], 2 * fidelity - 1),
            ([_re_inner(a, b), _re_inner(d, c)], 0.0),
        ] + unitarity

    def residuals(self, states, fidelity: float) -> np.ndarray:
        """Signed residual vector for states given as a dict or a (4, dim) array."""
        return _residuals_and_grads(_as_rows(states), _coefficients(self._terms(fidelity)))[0]


def _as_rows(states) -> np.ndarray:
    if isinstance(states, dict):
        return np.array([states[k] for k in "abcd"], dtype=complex)
    return np.asarray(states, dtype=complex)


@dataclass(frozen=True)
class _Coefficients:
    """Residual terms packed as linear maps on the Gram matrix and on the rows."""

    w_re: np.ndarray  # (n, 16), acts on Re<x|y> flattened
    w_im: np.ndarray  # (n, 16), acts on Im<x|y> flattened
    consts: np.ndarray
    left: np.ndarray  # (n*4, 4): gradient contribution on row x
    right: np.ndarray  # (n*4, 4): gradient contribution on row y


def _coefficients(terms) -> _Coefficients:
    n = len(terms)
    w_re = np.zeros((n, 4, 4))
    w_im = np.zeros((n, 4, 4))
    consts = np.empty(n)
    for k, (parts, const) in enumerate(terms):
        consts[k] = const
        for x, y, kind, scale in parts:
            (w_re if kind == "re" else w_im)[k, x, y] += scale
    # Re<x|y>: gradient y on row x, x on row y.  Im<x|y>: -i y on row x, i x on row y.
    left = (w_re - 1j * w_im).reshape(n * 4, 4)
    right = (w_re + 1j * w_im).transpose(0, 2, 1).reshape(n * 4, 4)
    return _Coefficients(w_re.reshape(n, 16), w_im.reshape(n, 16), consts, left, right)


def _residuals_and_grads(rows: np.ndarray, co: _Coefficients) -> tuple[np.ndarray, np.ndarray]:
    """Residuals and their Wirtinger gradients w.r.t. the (4, dim) state rows.

    A gradient G means dr = Re(sum conj(G) * d(rows)).
    """
    gram = (rows.conj() @ rows.T).ravel()
    vals = co.w_re @ gram.real + co.w_im @ gram.imag - co.consts
    grads = ((co.left + co.right) @ rows).reshape(len(vals), 4, rows.shape[1])
    return vals, grads


SIX_STATE = ConstraintSet(ConstraintMode.SIX_STATE)
BB84 = ConstraintSet(ConstraintMode.BB84)


@dataclass
class OptimizationResult:
    best_value: float
    parameters: dict[str, np.ndarray]
    residuals: np.ndarray
    iterations: int
    restart_values: list[float] = field(default_factory=list)

    def probe(self, fidelity: float) -> ProbeSpec:
        return ProbeSpec(fidelity, *(PureState.normalized(self.parameters[k]) for k in "abcd"))

    def weights(self, state: str) -> np.ndarray:
        """|amplitude|^2 of a probe state in the 00, 10, 01, 11 basis."""
        return np.abs(self.parameters[state]) ** 2

    def success_fraction(self, tol: float = 1e-6) -> float:
        """Share of restarts that ended within ``tol`` of the best value."""
        vals = np.asarray(self.restart_values, dtype=float)
        return float(np.mean(np.abs(vals - self.best_value) < tol))


def _xlogx(x: np.ndarray) -> np.ndarray:
    out = np.zeros_like(x)
    pos = x > 0
    out[pos] = x[pos] * np.log2(x[pos])
    return out


def _information_and_grad(rows: np.ndarray, fidelity: float) -> tuple[float, np.ndarray]:
    """Alice-Eve information (Z-basis bits, computational probe measurement) and its gradient."""
    scale = np.array([fidelity, 1.0 - fidelity, fidelity, 1.0 - fidelity])[:, None]
    w = 0.5 * scale * (rows.real**2 + rows.imag**2)
    p = np.stack([w[0] + w[1], w[2] + w[3]])
    pe = p[0] + p[1]
    with np.errstate(divide="ignore", invalid="ignore"):
        ratio = np.where(p > 0, np.log2(p / pe), 0.0)
    # sum p log(p/pe) over both rows; the +1 is H(A) for a uniform bit
    value = float(np.sum(p * ratio) + 1.0)
    # d value / d|x_k|^2 = (scale/2) log2(p/pe); d|x_k|^2 contributes gradient 2 x_k
    grad = scale * np.repeat(ratio, 2, axis=0) * rows
    return value, grad


def _information(states, fidelity: float) -> float:
    return _information_and_grad(_as_rows(states), fidelity)[0]


class _Parameterization:
    """Magnitude/phase coordinates; the phase of component 0 of each state is pinned to zero."""

    per_state = 2 * PROBE_DIM - 1

    def __init__(self, free: tuple[str, ...]):
        self.free = np.array([_ROWS[k] for k in free])
        self.size = self.per_state * len(free)
        self.base = np.zeros((4, PROBE_DIM), dtype=complex)
        self.base[1, 0] = 1.0  # b = |00>
        self.base[3, 3] = 1.0  # d = |11>

    def _split(self, x: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        block = x.reshape(len(self.free), self.per_state)
        phases = np.zeros((len(self.free), PROBE_DIM))
        phases[:, 1:] = block[:, PROBE_DIM:]
        return block[:, :PROBE_DIM], phases

    def rows(self, x: np.ndarray) -> np.ndarray:
        mags, phases = self._split(x)
        out = self.base.copy()
        out[self.free] = mags * np.exp(1j * phases) / np.sqrt(np.sum(mags**2, axis=1, keepdims=True))
        return out

    def pullback(self, x: np.ndarray, rows: np.ndarray, grad_rows: np.ndarray) -> np.ndarray:
        """Chain Wirtinger gradients on the rows, shape (m, 4, dim), back to the parameters."""
        mags, phases = self._split(x)
        norm = np.sqrt(np.sum(mags**2, axis=1, keepdims=True))
        g = grad_rows[:, self.free, :].conj()
        v = rows[self.free]
        radial = np.sum((g * v).real, axis=-1, keepdims=True)
        d_mag = (g * np.exp(1j * phases)).real / norm - mags * radial / norm**2
        d_phase = -(g * v).imag[..., 1:]
        return np.concatenate([d_mag, d_phase], axis=-1).reshape(grad_rows.shape[0], self.size)

    def random_point(self, rng: np.random.Generator) -> np.ndarray:
        """Coordinates of Haar-random states for the free rows."""
        shape = (len(self.free), PROBE_DIM)
        z = rng.normal(size=shape) + 1j * rng.normal(size=shape)
        x = np.empty((len(self.free), self.per_state))
        x[:, :PROBE_DIM] = np.abs(z)
        x[:, PROBE_DIM:] = np.angle(z[:, 1:]) - np.angle(z[:, :1])
        return x.ravel()


class _Problem:
    def __init__(self, constraints: ConstraintSet, fidelity: float):
        self.param = _Parameterization(constraints.free_states)
        self.coeffs = _coefficients(constraints._terms(fidelity))
        self.n_residuals = len(self.coeffs.consts)
        self.fidelity = fidelity

    def objective(self, x):
        rows = self.param.rows(x)
        val, g = _information_and_grad(rows, self.fidelity)
        return val, self.param.pullback(x, rows, g[None])[0]

    def residual(self, x):
        rows = self.param.rows(x)
        vals, g = _residuals_and_grads(rows, self.coeffs)
        return vals, self.param.pullback(x, rows, g)

    def both(self, x):
        """Objective and residuals with gradients, sharing one state evaluation."""
        rows = self.param.rows(x)
        val, g = _information_and_grad(rows, self.fidelity)
        vals, gr = _residuals_and_grads(rows, self.coeffs)
        stacked = self.param.pullback(x, rows, np.concatenate([g[None], gr]))
        return val, stacked[0], vals, stacked[1:]


def _project(problem: _Problem, x: np.ndarray, tol: float, max_iter: int = 50) -> np.ndarray:
    """Gauss-Newton projection onto the constraint surface (minimum-norm steps)."""
    for _ in range(max_iter):
        r, jac = problem.residual(x)
        if np.max(np.abs(r)) < tol * 1e-3:
            break
        x = x - np.linalg.lstsq(jac, r, rcond=None)[0]
    return x


def _single_start(problem: _Problem, x: np.ndarray, tol: float) -> tuple[np.ndarray, int]:
    """Increasing-weight quadratic penalty with multiplier updates, then projection."""
    lam = np.zeros(problem.n_residuals)
    weight = PENALTY_WEIGHTS[0]
    prev_violation = np.inf
    nfev = 0

    def merit(y):
        val, g, r, jac = problem.both(y)
        shifted = r + lam / weight
        return -val + 0.5 * weight * shifted @ shifted, -g + weight * (shifted @ jac)

    for _ in range(MAX_OUTER):
        res = minimize(merit, x, jac=True, method="L-BFGS-B", options={"maxiter": 3000, "ftol": 1e-16, "gtol": 1e-12})
        x, nfev = res.x, nfev + res.nfev
        r, _ = problem.residual(x)
        violation = np.max(np.abs(r))
        if violation < tol * 1e-2:
            break
        lam = lam + weight * r
        if violation > 0.25 * prev_violation:
            weight = min(weight * 10.0, PENALTY_WEIGHTS[-1])
        prev_violation = violation
    return _project(problem, x, tol), nfev


def maximize_iae(
    disturbance: float,
    constraints: ConstraintSet = SIX_STATE,
    seed: int = 0,
    restarts: int = DEFAULT_RESTARTS,
) -> OptimizationResult:
    """Maximise Eve's Z-basis information over probe amplitudes.

    Restarts are seeded from ``SeedSequence(seed)`` and independent; the
    best feasible one wins, lowest restart index on ties.
    """
    disturbance = float(disturbance)
    if not 0.0 <= disturbance <= 0.5:
        raise ValueError(f"disturbance {disturbance!r} outside [0, 1/2]")
    fidelity = 1.0 - disturbance
    problem = _Problem(constraints, fidelity)

    best = None
    values = []
    total_nfev = 0
    for child in np.random.SeedSequence(seed).spawn(restarts):
        rng = np.random.default_rng(child)
        x, nfev = _single_start(problem, problem.param.random_point(rng), constraints.tolerance)
        total_nfev += nfev
        if not np.all(np.isfinite(x)) or np.max(np.abs(problem.residual(x)[0])) >= constraints.tolerance:
            values.append(float("nan"))
            continue
        value = problem.objective(x)[0]
        values.append(value)
        if best is None or value > best[0]:
            best = (value, x)

    if best is None:
        raise ConvergenceError(f"no feasible optimum after {restarts} restarts at D={disturbance}")
    log.debug("D=%.4f %s: best %.12f over %d restarts", disturbance, constraints.mode.name, best[0], restarts)
    rows = problem.param.rows(best[1])
    return OptimizationResult(
        best_value=float(np.clip(best[0], 0.0, 1.0)),
        parameters={k: rows[i] for k, i in _ROWS.items()},
        residuals=np.abs(constraints.residuals(rows, fidelity)),
        iterations=total_nfev,
        restart_values=values,
    )


@lru_cache(maxsize=None)
def bb84_maximum(disturbance: float, seed: int = 0, restarts: int = DEFAULT_RESTARTS) -> float:
    """Cached four-state constrained maximum."""
    return maximize_iae(disturbance, BB84, seed=seed, restarts=restarts).best_value


def _unitary(x: np.ndarray, dim: int) -> np.ndarray:
    re = x[: dim * dim].reshape(dim, dim)
    im = x[dim * dim :].reshape(dim, dim)
    herm = (re + re.T) / 2 + 1j * (im - im.T) / 2
    return expm(1j * herm)


def _measurement_information(rhos: tuple[np.ndarray, np.ndarray], u: np.ndarray) -> float:
    probs = np.array([np.einsum("ik,ij,jk->k", u.conj(), r, u).real for r in rhos]) / 2
    probs = np.clip(probs, 0.0, None)
    return float(_xlogx(probs).sum() - _xlogx(probs.sum(axis=1)).sum() - _xlogx(probs.sum(axis=0)).sum())


def optimize_eve_measurement(
    p: ProbeSpec,
    basis: Basis,
    seed: int = 0,
    restarts: int = 8,
) -> tuple[list[PureState], float]:
    """Best rank-one projective probe measurement for a given announced basis.

    The measurement basis is U|k> with U = exp(iH) for Hermitian H.
    """
    rhos = tuple(r.entries for r in eve_conditional_states(p, basis))
    dim = p.probe_dim
    best_u, best_val = np.eye(dim, dtype=complex), _measurement_information(rhos, np.eye(dim))
    for child in np.random.SeedSequence(seed).spawn(restarts):
        rng = np.random.default_rng(child)
        res = minimize(
            lambda x: -_measurement_information(rhos, _unitary(x, dim)),
            rng.normal(scale=np.pi / 2, size=2 * dim * dim),
            method="BFGS",
            options={"gtol": 1e-10},
        )
        if not np.isfinite(res.fun):
            continue
        if -res.fun > best_val:
            best_val, best_u = -res.fun, _unitary(res.x, dim)
    if not np.isfinite(best_val):
        raise ConvergenceError("measurement optimisation failed")
    # re-orthonormalise against round-off in expm
    q, _ = np.linalg.qr(best_u)
    return [PureState(q[:, k]) for k in range(dim)], float(np.clip(best_val, 0.0, 1.0))


def find_intersection(
    curve_a: Callable[[float], float],
    curve_b: Callable[[float], float],
    lo: float,
    hi: float,
) -> float:
    """Root of curve_a - curve_b on [lo, hi].

    A sign change is bracketed with Brent's method.  Without one, a touching
    root (the difference reaching zero inside the interval) is accepted if
    a bounded minimisation of |a - b| finds one.
    """
    diff = lambda x: curve_a(x) - curve_b(x)
    f_lo, f_hi = diff(lo), diff(hi)
    if f_lo * f_hi < 0:
        return float(brentq(diff, lo, hi, xtol=1e-15, rtol=4 * np.finfo(float).eps, maxiter=500))
    if f_lo == 0.0 and f_hi == 0.0:
        raise ValueError(f"curves coincide at both ends of [{lo}, {hi}]; no isolated crossing")
    if f_lo == 0.0 or f_hi == 0.0:
        return float(lo if f_lo == 0.0 else hi)
    res = minimize_scalar(lambda x: abs(diff(x)), bounds=(lo, hi), method="bounded", options={"xatol": 1e-12})
    if abs(diff(res.x)) < ROOT_TOL:
        return float(res.x)
    raise ValueError(f"no sign change of the curve difference on [{lo}, {hi}]")
