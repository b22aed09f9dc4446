"""
Integration tests: desk-scale acceptance checks across modules.

Run with: pytest tests/integration/test_acceptance.py -v
Skip the long-running ones with: pytest -m "not slow"

These tests combine generated instances, the reconstructor, the tester and
the learner with the exact oracles of dtrecon.core.bruteforce.
"""

import math

import numpy as np
import pytest
from pathlib import Path

from dtrecon.core.boolfn import Point, exact_distance
from dtrecon.core.bruteforce import (
    OptTable,
    TruthTable,
    exact_ns,
    exact_opt,
    exact_scores,
    exact_topdown_tree,
    exhaustive_opt,
)
from dtrecon.core.estimators import conditional_ns_identity_check, exact_estimator_expectation
from dtrecon.core.factory import OracleFactory
from dtrecon.core.learner import DistanceEstimator, call_budget, learn, learn_parameters
from dtrecon.core.params import Params, load_constants
from dtrecon.core.reconstructor import materialize_all, new_reconstructor
from dtrecon.core.tester import tolerant_test
from dtrecon.core.trees import tree_depth, tree_size
from dtrecon.providers import TableFunction, TreeFunction

ROOT = Path(__file__).parent.parent.parent


def instance_suite(count: int = 50, seed: int = 2024):
    """Generated (tree, corruption) instances with n <= 12, s <= 8."""
    rng = np.random.default_rng(seed)
    for k in range(count):
        n = int(rng.integers(3, 13))
        s = int(rng.integers(2, 9))
        rho = (0.0, 0.02, 0.05)[k % 3]
        yield OracleFactory.create_instance("random-tree", n, s=s, rho=rho, seed=1000 + k), s


# ============================================================
# EXACT IDENTITIES
# ============================================================

@pytest.mark.integration
class TestExactIdentities:
    """Unbiasedness and the conditional identity on 20 random tables."""

    @pytest.mark.parametrize("p", [0.1, 0.5, 0.9])
    def test_sweep(self, p):
        for k in range(20):
            n = (4, 6, 8)[k % 3]
            t = TruthTable.from_oracle(TableFunction.random(n, np.random.default_rng(k)))
            assert np.allclose(exact_estimator_expectation(t, p), exact_scores(t, p), atol=1e-10)
            lhs, rhs = conditional_ns_identity_check(t, p)
            assert np.allclose(lhs, rhs, atol=1e-12)


# ============================================================
# NOISE SENSITIVITY AND STRUCTURE
# ============================================================

@pytest.mark.integration
class TestInstanceSuite:
    """NS bound and the exact top-down tree on generated instances."""

    def test_ns_upper_bound(self):
        for instance, s in instance_suite():
            t = TruthTable.from_oracle(instance.oracle)
            tree_distance = float(exact_distance(instance.oracle, instance.base))
            for p in (0.05, 0.2, 0.5):
                bound = p * math.log2(s) + 2 * tree_distance
                assert exact_ns(t, p) <= bound + 1e-9

    @pytest.mark.slow
    def test_structural_closeness(self):
        """Ledger d and p: top-down distance <= 5 opt_s + eps, monotone in depth."""
        eps = 0.1
        for instance, s in instance_suite():
            n = instance.oracle.n
            t = TruthTable.from_oracle(instance.oracle)
            params = Params.create(n, s, eps, 0.1)
            opt = OptTable(t, s).opt()
            previous = 1.0
            for depth in sorted({0, 1, 2, 3, params.d}):
                tree = exact_topdown_tree(t, min(depth, n), params.p)
                distance = float(exact_distance(instance.oracle, TreeFunction(n, tree)))
                assert distance <= previous + 1e-9
                previous = distance
            assert previous <= 5 * opt + eps + 1e-9

    def test_structural_closeness_below_full_depth(self):
        """Small c_d puts d below n; top-down must still reach 5 opt_s + eps on realizable trees."""
        eps = 0.1
        constants = load_constants(c_d=6e-4)
        shallow = 0
        for k in range(50):
            n = 3 + k % 10
            s = 2 + k % 3
            instance = OracleFactory.create_instance("random-tree", n, s=s, seed=3000 + k)
            params = Params.create(n, s, eps, 0.1, constants)
            assert params.d >= s - 1
            shallow += params.d < n
            t = TruthTable.from_oracle(instance.oracle)
            previous = 1.0
            for depth in range(params.d + 1):
                tree = exact_topdown_tree(t, depth, params.p)
                distance = float(exact_distance(instance.oracle, TreeFunction(n, tree)))
                assert distance <= previous + 1e-9
                previous = distance
            # realizable: opt_s = 0
            assert previous <= eps + 1e-9
            assert previous == 0.0
        assert shallow >= 30


# ============================================================
# RECONSTRUCTOR
# ============================================================

@pytest.mark.integration
class TestReconstructor:
    """Closeness and query scaling of the reconstructor."""

    @pytest.mark.slow
    @pytest.mark.parametrize("rho", [0.0, 0.02])
    def test_closeness(self, closeness_constants, rho):
        close = 0
        for seed in range(20):
            instance = OracleFactory.create_instance("random-tree", 16, s=8, rho=rho, seed=seed)
            R = new_reconstructor(instance.oracle, 8, 0.1, 0.1, closeness_constants, seed=seed)
            tree = materialize_all(R)
            assert tree_depth(tree) <= R.params.d
            distance = float(exact_distance(instance.oracle, TreeFunction(16, tree)))
            close += distance <= 10 * rho + 0.1
        assert close >= 18

    def test_query_scaling(self):
        constants = load_constants(c_d=0.0005, c_tau=1687.5, c_q=0.1, c_leaf=0.01)
        sizes = (2 ** 8, 2 ** 12, 2 ** 16)
        per_answer = []
        for n in sizes:
            instance = OracleFactory.create_instance("random-tree", n, s=8, seed=n)
            R = new_reconstructor(instance.oracle, 8, 0.2, 0.1, constants, seed=1)
            rng = np.random.default_rng(n)
            for _ in range(20):
                R.answer(Point.random(n, rng))
            stats = R.query_stats()
            assert stats.max_per_answer <= R.params.per_answer_budget
            per_answer.append(stats.max_per_answer)
        for k in range(len(sizes) - 1):
            log_ratio = math.log(sizes[k + 1]) / math.log(sizes[k])
            assert per_answer[k + 1] / per_answer[k] <= 1.5 * log_ratio


# ============================================================
# TESTER
# ============================================================

@pytest.mark.integration
@pytest.mark.slow
class TestTesterTwoSided:
    """Accept realizable instances, reject the 12-variable parity."""

    def test_accepts_realizable(self, tester_constants):
        accepted = 0
        for seed in range(20):
            instance = OracleFactory.create_instance("random-tree", 10, s=8, seed=seed)
            outcome = tolerant_test(instance.oracle, 8, 0.05, 0.05, constants=tester_constants, seed=seed)
            assert outcome.queries >= outcome.m
            accepted += outcome.accepted
        assert accepted >= 18

    def test_rejects_parity(self, tester_constants):
        f = OracleFactory.create("parity-12", 12)
        rejected = 0
        for seed in range(20):
            outcome = tolerant_test(f, 8, 0.05, 0.05, constants=tester_constants, seed=seed)
            rejected += not outcome.accepted
        assert rejected >= 18


# ============================================================
# LEARNER
# ============================================================

@pytest.mark.integration
class TestLearner:
    """End-to-end proper learning."""

    def test_exact_backend_realizable(self):
        d, _ = learn_parameters(4, 0.1, 1.0)
        for seed in range(20):
            instance = OracleFactory.create_instance("random-tree", 8, s=4, seed=seed)
            tree = learn(instance.oracle, 4, 0.1, DistanceEstimator("exact"))
            assert float(exact_distance(instance.oracle, TreeFunction(8, tree))) <= 0.1
            assert tree_size(tree) <= 4
            assert tree_depth(tree) <= d

    @pytest.mark.slow
    def test_tester_backend_call_budget(self):
        constants = load_constants(c_tau=1.0e4, c_q=0.1, c_leaf=0.05, c_m=0.5)
        instance = OracleFactory.create_instance("random-tree", 3, s=3, seed=4)
        E = DistanceEstimator("tester", c=1.0, delta=0.1, constants=constants, seed=7)
        tree = learn(instance.oracle, 3, 0.5, E)
        d, gamma = learn_parameters(3, 0.5, 1.0)
        assert E.calls > 0
        assert E.calls <= call_budget(3, 3, gamma, constants)
        assert tree_size(tree) <= 3
        assert tree_depth(tree) <= d


# ============================================================
# BRUTE-FORCE CROSS-VALIDATION
# ============================================================

@pytest.mark.integration
@pytest.mark.slow
class TestOptCrossValidation:
    """The opt_s dynamic program equals exhaustive enumeration on n = 4."""

    def test_ten_tables(self):
        for seed in range(10):
            t = TruthTable.from_oracle(TableFunction.random(4, np.random.default_rng(500 + seed)))
            for s in range(1, 9):
                assert exact_opt(t, s)[0] == float(exhaustive_opt(t, s))
