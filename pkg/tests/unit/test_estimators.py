"""
Unit tests for the noise-sensitivity estimators

Run with: pytest tests/unit/test_estimators.py -v
"""

import math

import numpy as np
import pytest

from dtrecon.core.bits import random_words, unpack_bool
from dtrecon.core.boolfn import CountingOracle, Point
from dtrecon.core.bruteforce import TruthTable, exact_scores
from dtrecon.core.errors import InvalidArgumentError, UnsupportedScaleError
from dtrecon.core.estimators import (
    conditional_ns_identity_check,
    estimate_scores,
    exact_estimator_expectation,
    mean_score_samples,
    mismatch_profile,
    noisy_copies,
    noisy_copy,
    score_sample_count,
    score_sample_from_pair,
    unbiased_score_sample,
)
from dtrecon.providers import DictatorFunction, MajorityFunction, TableFunction


# ============================================================
# NOISY COPIES
# ============================================================

@pytest.mark.unit
class TestNoisyCopies:
    """Test the p-noisy channel."""

    @pytest.mark.parametrize("p", [0.1, 0.5, 0.9])
    def test_flip_rate_is_half_p(self, rng, p):
        x = random_words(rng, 2000, 100)
        y = noisy_copies(x, 100, p, rng)
        rate = unpack_bool(x ^ y, 100).mean()
        assert abs(rate - p / 2) <= 0.01

    def test_tail_bits_stay_zero(self, rng):
        x = random_words(rng, 100, 70)
        y = noisy_copies(x, 70, 0.9, rng)
        assert np.all(y[:, 1] >> np.uint64(6) == 0)

    def test_single_point(self, rng):
        x = Point.random(12, rng)
        assert noisy_copy(x, 0.3, rng).n == 12

    def test_rate_out_of_range(self, rng):
        with pytest.raises(InvalidArgumentError):
            noisy_copy(Point(4, 0), 0.0, rng)


# ============================================================
# SCORE SAMPLES
# ============================================================

@pytest.mark.unit
class TestScoreSamples:
    """Test single samples and their batched mean."""

    def test_sample_from_pair(self):
        f = DictatorFunction(2, 0)
        x = Point.from_signs((1, 1))
        y = Point.from_signs((-1, 1))
        assert score_sample_from_pair(f, x, y, 0.5) == pytest.approx([1.0, -1.0 / 3.0])

    def test_agreeing_outputs_give_zero(self):
        f = DictatorFunction(3, 0)
        x = Point.from_signs((1, 1, -1))
        y = Point.from_signs((1, -1, 1))
        assert np.all(score_sample_from_pair(f, x, y, 0.5) == 0.0)

    @pytest.mark.parametrize("p", [0.1, 0.5, 0.9])
    def test_sample_range(self, rng, p):
        f = MajorityFunction(7, 7)
        low = 1.0 - 1.0 / (1.0 - p / 2.0)
        for _ in range(500):
            sample = unbiased_score_sample(f, p, rng)
            assert np.all(sample >= low - 1e-12)
            assert np.all(sample <= 1.0)

    def test_one_sample_costs_two_queries(self, rng):
        f = CountingOracle(MajorityFunction(9, 9))
        sample = unbiased_score_sample(f, 0.3, rng)
        assert sample.shape == (9,)
        assert f.count == 2

    def test_mean_costs_two_q_queries(self, rng):
        f = CountingOracle(MajorityFunction(9, 5))
        mean_score_samples(f, 0.3, 777, rng)
        assert f.count == 2 * 777

    def test_mean_is_seeded(self):
        f = MajorityFunction(9, 5)
        a = mean_score_samples(f, 0.3, 500, np.random.default_rng(1))
        b = mean_score_samples(f, 0.3, 500, np.random.default_rng(1))
        assert np.array_equal(a, b)

    def test_mean_close_to_exact(self, rng):
        f = TableFunction.random(6, np.random.default_rng(8))
        exact = exact_scores(TruthTable.from_oracle(f), 0.4)
        estimate = mean_score_samples(f, 0.4, 60000, rng)
        assert np.max(np.abs(estimate - exact)) <= 0.02

    def test_sample_count(self):
        assert score_sample_count(64, 0.1, math.log(10)) == math.ceil(
            2.0 * (math.log(128) + math.log(10)) / 0.1 ** 2
        )


# ============================================================
# CONCENTRATION
# ============================================================

@pytest.mark.unit
class TestEstimateScores:
    """Test the all-coordinates estimate."""

    def test_dictator_concentration(self):
        """Within tau on every coordinate in at least 1 - delta of the trials."""
        n, p, tau, delta = 64, 0.5, 0.1, 0.1
        exact = np.zeros(n)
        exact[0] = p / 2
        q = score_sample_count(n, tau, math.log(1 / delta))
        good = 0
        for trial in range(200):
            f = CountingOracle(DictatorFunction(n, 0))
            estimate = estimate_scores(f, p, tau, delta, np.random.default_rng(trial))
            assert f.count == 2 * q
            good += np.max(np.abs(estimate - exact)) <= tau
        assert good >= 180

    @pytest.mark.parametrize("tau,delta", [(0.0, 0.1), (0.1, 1.0)])
    def test_bad_accuracy(self, rng, tau, delta):
        with pytest.raises(InvalidArgumentError):
            estimate_scores(DictatorFunction(4, 0), 0.5, tau, delta, rng)


# ============================================================
# EXACT AUDITS
# ============================================================

@pytest.mark.unit
class TestExactAudits:
    """Test unbiasedness and the conditional-NS identity by enumeration."""

    @pytest.mark.parametrize("n", [4, 6, 8])
    @pytest.mark.parametrize("p", [0.1, 0.5, 0.9])
    def test_estimator_is_unbiased(self, n, p):
        t = TruthTable.from_oracle(TableFunction.random(n, np.random.default_rng(n)))
        expectation = exact_estimator_expectation(t, p)
        assert np.allclose(expectation, exact_scores(t, p), atol=1e-10)

    @pytest.mark.parametrize("seed", range(3))
    def test_conditional_identity(self, seed):
        f = TableFunction.random(7, np.random.default_rng(seed))
        lhs, rhs = conditional_ns_identity_check(f, 0.35)
        assert np.allclose(lhs, rhs, atol=1e-12)

    def test_parity_identity_values(self, parity2):
        lhs, rhs = conditional_ns_identity_check(parity2, 0.5)
        assert lhs == pytest.approx([0.25, 0.25])
        assert rhs == pytest.approx([0.25, 0.25])

    def test_identity_beyond_limit(self):
        f = TableFunction.random(11, np.random.default_rng(0))
        with pytest.raises(UnsupportedScaleError):
            conditional_ns_identity_check(f, 0.5)

    def test_mismatch_profile_parity(self, parity2):
        profile = mismatch_profile(TruthTable.from_oracle(parity2))
        assert profile.tolist() == [0.0, 1.0, 1.0, 0.0]

    def test_mismatch_profile_dictator(self, dictator3):
        profile = mismatch_profile(TruthTable.from_oracle(dictator3))
        assert profile.tolist() == [float(z & 1) for z in range(8)]
