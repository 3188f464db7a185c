import numpy as np
import pytest

from conftest import D_GRID, bb84_optimum, extra_restarts, six_state_optimum
from sixstate.attack import build_optimal_probe
from sixstate.infotheory import i_ab, i_ae_bb84_reference, i_ae_two_bit
from sixstate.optimizer import (
    BB84,
    SIX_STATE,
    ConstraintMode,
    find_intersection,
    maximize_iae,
    optimize_eve_measurement,
)
from sixstate.qcore import Basis


def bisect(fn, lo, hi, iters=200):
    """Plain bisection, kept separate from the library root finder."""
    flo = fn(lo)
    for _ in range(iters):
        mid = 0.5 * (lo + hi)
        fm = fn(mid)
        if (fm < 0) == (flo < 0):
            lo, flo = mid, fm
        else:
            hi = mid
    return 0.5 * (lo + hi)


class TestConstraintSet:
    def test_modes(self):
        assert SIX_STATE.mode is ConstraintMode.SIX_STATE
        assert BB84.mode is ConstraintMode.BB84
        assert SIX_STATE.tolerance == 1e-10

    @pytest.mark.parametrize("d", [0.0, 0.1, 0.3, 0.5])
    def test_optimal_probe_is_feasible_in_both_modes(self, d):
        p = build_optimal_probe(d)
        states = [p.a.amplitudes, p.b.amplitudes, p.c.amplitudes, p.d.amplitudes]
        for cs in (SIX_STATE, BB84):
            assert np.max(np.abs(cs.residuals(states, p.fidelity))) < 1e-12

    def test_six_state_is_stricter(self):
        # a BB84-feasible probe with Re<c|a> tuned for four states only
        res = maximize_iae(0.1, BB84, seed=1, restarts=2)
        probe_rows = [res.parameters[k] for k in "abcd"]
        assert np.max(np.abs(BB84.residuals(probe_rows, 0.9))) < 1e-10
        assert np.max(np.abs(SIX_STATE.residuals(probe_rows, 0.9))) > 1e-3


class TestSixStateMaximum:
    def test_example_d01(self):
        res = six_state_optimum(0.1)
        assert res.best_value == pytest.approx(i_ae_two_bit(0.1), abs=1e-6)
        for k in "ac":
            w = res.weights(k)
            assert w[0] < 1e-6 and w[3] < 1e-6

    @pytest.mark.parametrize("d", D_GRID)
    def test_grid_matches_closed_form(self, d):
        res = six_state_optimum(d)
        assert res.best_value == pytest.approx(i_ae_two_bit(d), abs=1e-6)
        assert np.max(res.residuals) < SIX_STATE.tolerance
        wa, wc = res.weights("a"), res.weights("c")
        assert max(wa[0], wa[3], wc[0], wc[3]) < 1e-5
        assert wa[1] + wc[1] == pytest.approx(1.0, abs=1e-5)

    def test_small_disturbance(self):
        assert maximize_iae(1e-6, seed=0, restarts=4).best_value < 1e-3
        assert maximize_iae(0.0, seed=0, restarts=4).best_value == pytest.approx(0.0, abs=1e-9)

    def test_pooled_restart_success(self):
        # genuine local maxima exist, so the share is estimated over all grid
        # points and two independent seed batches (1368 restarts in total)
        hits = total = 0
        for d in D_GRID:
            values = np.array(six_state_optimum(d).restart_values + extra_restarts(d))
            hits += int(np.sum(np.abs(values - i_ae_two_bit(d)) < 1e-6))
            total += len(values)
        assert total == 1368
        assert hits / total >= 0.9

    def test_deterministic(self):
        a = maximize_iae(0.2, seed=5, restarts=3)
        b = maximize_iae(0.2, seed=5, restarts=3)
        assert a.restart_values == b.restart_values
        for k in "abcd":
            np.testing.assert_array_equal(a.parameters[k], b.parameters[k])

    def test_recovered_probe_is_valid(self):
        from sixstate.attack import check_constraints, measured_information

        res = six_state_optimum(0.2)
        p = res.probe(0.8)
        assert check_constraints(p).max_residual < 1e-9
        assert measured_information(p) == pytest.approx(res.best_value, abs=1e-9)

    @pytest.mark.parametrize("d", [-0.01, 0.6])
    def test_domain(self, d):
        with pytest.raises(ValueError):
            maximize_iae(d, restarts=1)


class TestBB84:
    @pytest.mark.parametrize("d", D_GRID)
    def test_above_six_state(self, d):
        assert bb84_optimum(d) > i_ae_two_bit(d)

    @pytest.mark.parametrize("d", D_GRID)
    def test_matches_known_four_state_curve(self, d):
        assert bb84_optimum(d) == pytest.approx(i_ae_bb84_reference(d), abs=1e-6)


class TestMeasurement:
    @pytest.mark.parametrize("basis", [Basis.Z, Basis.X, Basis.Y])
    def test_basis_independent(self, basis):
        _, info = optimize_eve_measurement(build_optimal_probe(0.15), basis, seed=0)
        assert info == pytest.approx(i_ae_two_bit(0.15), abs=1e-6)

    @pytest.mark.parametrize("basis", [Basis.Z, Basis.X])
    def test_no_disturbance(self, basis):
        _, info = optimize_eve_measurement(build_optimal_probe(0.0), basis, seed=0, restarts=2)
        assert info == pytest.approx(0.0, abs=1e-9)

    def test_returns_orthonormal_basis(self):
        states, _ = optimize_eve_measurement(build_optimal_probe(0.3), Basis.X, seed=2, restarts=2)
        m = np.column_stack([s.amplitudes for s in states])
        np.testing.assert_allclose(m.conj().T @ m, np.eye(4), atol=1e-10)


class TestIntersection:
    def test_six_state_crossing(self):
        d_star = find_intersection(i_ab, i_ae_two_bit, 0.1, 0.2)
        oracle = bisect(lambda d: i_ab(d) - i_ae_two_bit(d), 0.1, 0.2)
        assert d_star == pytest.approx(oracle, abs=1e-12)
        assert d_star == pytest.approx(0.156, abs=5e-4)
        assert abs(i_ab(d_star) - i_ae_two_bit(d_star)) < 1e-10
        assert d_star > 0.5 * (1 - 1 / np.sqrt(2))

    def test_four_state_crossing(self):
        d = find_intersection(i_ab, i_ae_bb84_reference, 0.1, 0.2)
        assert d == pytest.approx(0.5 * (1 - 1 / np.sqrt(2)), abs=1e-10)

    def test_identical_curves(self):
        with pytest.raises(ValueError):
            find_intersection(i_ab, i_ab, 0.1, 0.2)

    def test_touching_zero(self):
        assert find_intersection(i_ab, lambda d: 0.0, 0.4, 0.6) == pytest.approx(0.5, abs=1e-6)

    def test_no_crossing(self):
        with pytest.raises(ValueError):
            find_intersection(i_ab, lambda d: -1.0, 0.1, 0.2)
