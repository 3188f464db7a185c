import dataclasses

import numpy as np
import pytest

from sixstate.infotheory import i_ab, i_ae_one_bit, i_ae_two_bit
from sixstate.protocol import (
    MIN_RECORDS,
    Attack,
    InsufficientDataError,
    SessionConfig,
    empirical_mutual_information,
    outcome_probabilities,
    run_session,
)

N = 100_000


def five_sigma(p, n):
    return 5 * np.sqrt(p * (1 - p) / n)


@pytest.fixture(scope="module")
def attacked():
    return run_session(SessionConfig(N, 6, 0.1, Attack.OPTIMAL_2BIT, seed=7))


class TestConfig:
    @pytest.mark.parametrize(
        "kwargs",
        [dict(n_signals=0), dict(num_states=5), dict(disturbance=0.6), dict(disturbance=-0.1), dict(seed=-1)],
    )
    def test_invalid(self, kwargs):
        base = dict(n_signals=10, num_states=6, disturbance=0.1, attack=Attack.NONE, seed=0)
        with pytest.raises(ValueError):
            SessionConfig(**{**base, **kwargs})

    def test_bases(self):
        assert len(SessionConfig(1, num_states=4).bases) == 2
        assert len(SessionConfig(1, num_states=6).bases) == 3


class TestOutcomeModel:
    @pytest.mark.parametrize("attack", list(Attack))
    def test_rows_normalised(self, attack):
        p = outcome_probabilities(SessionConfig(10, 6, 0.2, attack))
        np.testing.assert_allclose(p.sum(axis=-1), 1.0, atol=1e-12)
        assert np.all(p >= 0)

    @pytest.mark.parametrize("attack", [Attack.OPTIMAL_2BIT, Attack.OPTIMAL_1BIT])
    def test_matching_basis_error_rate(self, attack):
        p = outcome_probabilities(SessionConfig(10, 6, 0.2, attack))
        dim = p.shape[-1] // 2
        for i in range(3):
            for bit in range(2):
                wrong = p[i, bit, i].reshape(2, dim)[1 - bit].sum()
                assert wrong == pytest.approx(0.2, abs=1e-12)


class TestSessions:
    def test_no_attack(self):
        stats = run_session(SessionConfig(N, 6, 0.3, Attack.NONE, seed=7))
        assert stats.qber == 0.0
        assert abs(stats.sift_rate - 1 / 3) < five_sigma(1 / 3, N)
        assert stats.empirical_i_ae is None
        # equals the empirical entropy of Alice's sifted bits
        assert stats.empirical_i_ab == pytest.approx(1.0, abs=1e-3)

    def test_four_state_sift_rate(self):
        stats = run_session(SessionConfig(N, 4, 0.0, Attack.NONE, seed=3))
        assert abs(stats.sift_rate - 0.5) < five_sigma(0.5, N)
        assert set(stats.per_basis_qber) == {"Z", "X"}

    def test_attacked_qber(self, attacked):
        assert abs(attacked.sift_rate - 1 / 3) < five_sigma(1 / 3, N)
        assert abs(attacked.qber - 0.1) < five_sigma(0.1, attacked.sifted_count)
        assert attacked.sifted_count <= attacked.n_signals

    def test_attacked_information(self, attacked):
        assert attacked.empirical_i_ab == pytest.approx(i_ab(0.1), abs=0.01)
        assert attacked.empirical_i_ae == pytest.approx(i_ae_two_bit(0.1), abs=0.01)

    def test_one_bit_information(self):
        stats = run_session(SessionConfig(N, 6, 0.2, Attack.OPTIMAL_1BIT, seed=7))
        assert stats.empirical_i_ae == pytest.approx(i_ae_one_bit(0.2), abs=0.01)

    def test_per_basis_consistency(self, attacked):
        q = attacked.per_basis_qber
        n = attacked.per_basis_sifted
        for x in q:
            for y in q:
                sigma = np.sqrt(0.09 / n[x] + 0.09 / n[y])
                assert abs(q[x] - q[y]) < 5 * sigma

    def test_per_basis_over_many_runs(self):
        worst = 0.0
        for seed in range(100):
            s = run_session(SessionConfig(20_000, 6, 0.1, Attack.OPTIMAL_2BIT, seed=seed))
            q, n = s.per_basis_qber, s.per_basis_sifted
            for x in q:
                for y in q:
                    if x < y:
                        worst = max(worst, abs(q[x] - q[y]) / np.sqrt(0.09 / n[x] + 0.09 / n[y]))
        assert worst < 5

    def test_deterministic(self):
        cfg = SessionConfig(50_000, 6, 0.15, Attack.OPTIMAL_2BIT, seed=99)
        assert dataclasses.asdict(run_session(cfg)) == dataclasses.asdict(run_session(cfg))

    def test_seed_changes_sample(self):
        a = run_session(SessionConfig(50_000, 6, 0.15, Attack.OPTIMAL_2BIT, seed=1))
        b = run_session(SessionConfig(50_000, 6, 0.15, Attack.OPTIMAL_2BIT, seed=2))
        assert a.qber != b.qber

    def test_prefix_stability(self):
        # whole blocks are shared between sessions of different length
        short = run_session(SessionConfig(16384, 6, 0.1, Attack.OPTIMAL_2BIT, seed=4))
        long = run_session(SessionConfig(32768, 6, 0.1, Attack.OPTIMAL_2BIT, seed=4))
        assert short.sifted_count <= long.sifted_count

    def test_small_session(self):
        stats = run_session(SessionConfig(100, 6, 0.1, Attack.OPTIMAL_2BIT, seed=0))
        assert stats.empirical_i_ab is None
        assert stats.empirical_i_ae is None
        assert 0.0 <= stats.qber <= 1.0

    def test_report_lines(self, attacked):
        lines = attacked.report_lines()
        keys = [line.split("=")[0] for line in lines]
        assert keys[:4] == ["n_signals", "sifted_count", "sift_rate", "qber"]
        assert "qber_Y" in keys


class TestEmpiricalInformation:
    def test_all_agree(self):
        bits = np.arange(2000) % 2
        assert empirical_mutual_information(np.column_stack([bits, bits])) == pytest.approx(1.0, abs=1e-12)

    def test_independent(self):
        rng = np.random.default_rng(0)
        n = 200_000
        rec = rng.integers(0, 2, size=(n, 2))
        value = empirical_mutual_information(rec)
        assert 0.0 <= value < 5 / (2 * n * np.log(2))

    def test_binary_symmetric_channel(self):
        rng = np.random.default_rng(1)
        n = 200_000
        a = rng.integers(0, 2, n)
        b = a ^ (rng.random(n) < 0.25)
        assert empirical_mutual_information(np.column_stack([a, b])) == pytest.approx(i_ab(0.25), abs=0.01)

    def test_insufficient(self):
        with pytest.raises(InsufficientDataError):
            empirical_mutual_information(np.zeros((MIN_RECORDS - 1, 2), dtype=int))

    def test_shape(self):
        with pytest.raises(ValueError):
            empirical_mutual_information(np.zeros((2000, 3), dtype=int))
