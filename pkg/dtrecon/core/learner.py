"""
Proper learning from distance estimation

DistanceEstimator turns a tolerant tester (or the exact opt_s table) into
estimates eta with eta <= opt_s(g) <= c * eta + gamma; build_dt picks, at
every node, the split (i, s0, s1) minimizing the estimated error and recurses.

Integration Contract:
    Input:  learn(g, s_prime, eps_prime, DistanceEstimator(...))
    Output: DecisionTree with at most s_prime leaves and depth <= d
"""

import logging
import math
from dataclasses import dataclass, field
from typing import Literal

import numpy as np

from . import config
from .bits import random_words
from .boolfn import RestrictedOracle, Restriction, restrict
from .bruteforce import OptTable, TruthTable
from .errors import InvalidArgumentError, UnsupportedScaleError
from .params import Constants, load_constants
from .protocols import FunctionOracle
from .tester import tolerant_test
from .trees import DecisionTree, Leaf, Node, TreeNode

logger = logging.getLogger(__name__)

Backend = Literal["exact", "tester"]


# ============================================================
# DISTANCE ESTIMATION
# ============================================================

def _split(g: FunctionOracle) -> tuple[FunctionOracle, Restriction]:
    if isinstance(g, RestrictedOracle):
        return g.base, g.restriction
    return g, Restriction()


class DistanceEstimator:
    """
    Estimates opt_s of (restrictions of) an oracle.

    exact   opt_s from one OptTable per base oracle (n <= opt_max_n)
    tester  largest eps in {gamma/c, 2 gamma/c, ...} below 1 at which the
            tolerant tester rejects, 0 if none does
    """

    def __init__(
        self,
        backend: Backend = "exact",
        c: float | None = None,
        delta: float = 0.1,
        kappa: float | None = None,
        constants: Constants | None = None,
        seed: int = 0,
    ):
        if backend not in ("exact", "tester"):
            raise InvalidArgumentError(f"backend must be 'exact' or 'tester', got {backend!r}")
        if not 0.0 < delta < 1.0:
            raise InvalidArgumentError(f"failure probability must be in (0, 1), got {delta}")
        self.backend = backend
        self.constants = constants if constants is not None else load_constants()
        self.c = 1.0 if backend == "exact" and c is None else (self.constants.c if c is None else c)
        if self.c < 1.0:
            raise InvalidArgumentError(f"soundness constant c must be >= 1, got {self.c}")
        self.delta = delta
        self.kappa = kappa
        self.seed = seed
        self.calls = 0
        self.estimates = 0
        self._tables: dict[int, tuple[FunctionOracle, OptTable]] = {}
        self._rng = np.random.default_rng(np.random.SeedSequence(seed))

    # --- exact backend ---

    def _table(self, base: FunctionOracle, s: int) -> OptTable:
        max_n = config.limit("opt_max_n")
        if base.n > max_n:
            raise UnsupportedScaleError("exact distance estimation", base.n, max_n)
        cached = self._tables.get(id(base))
        if cached is None or cached[0] is not base or cached[1].s < s:
            logger.debug(f"[LEARN] building opt table n={base.n} s={s}")
            cached = (base, OptTable(TruthTable.from_oracle(base), s))
            self._tables[id(base)] = cached
        return cached[1]

    # --- tester backend ---

    def _tester_seed(self) -> int:
        sequence = np.random.SeedSequence(entropy=self.seed, spawn_key=(self.calls,))
        return int(sequence.generate_state(1, dtype=np.uint64)[0])

    def _sampled_mean(self, g: FunctionOracle, eps: float) -> float:
        factor = float(config.sampling("bias_samples_const"))
        samples = math.ceil(factor * math.log(2.0 / self.delta) / eps ** 2)
        points = random_words(self._rng, samples, g.n)
        return float(g.evaluate(points).astype(np.int64).sum()) / samples

    # --- operations ---

    def estimate(self, g: FunctionOracle, s: int, gamma: float) -> float:
        """eta with eta <= opt_s(g) <= c * eta + gamma (w.h.p. for the tester backend)."""
        if not 0.0 < gamma < 1.0:
            raise InvalidArgumentError(f"granularity must be in (0, 1), got {gamma}")
        if s < 1:
            raise InvalidArgumentError(f"size must be >= 1, got {s}")
        self.estimates += 1
        if self.backend == "exact":
            base, restriction = _split(g)
            return self._table(base, s).opt(restriction, s)

        if s == 1:
            mean = self._sampled_mean(g, gamma)
            return min((1.0 + mean) / 2.0, (1.0 - mean) / 2.0)

        eta = 0.0
        k = 1
        while k * gamma / self.c < 1.0:
            eps = k * gamma / self.c
            outcome = tolerant_test(
                g, s, eps, self.delta,
                kappa=self.kappa, constants=self.constants, seed=self._tester_seed(),
            )
            self.calls += 1
            if not outcome.accepted:
                eta = eps
            k += 1
        return eta

    def bias(self, g: FunctionOracle, eps: float = 0.1) -> float:
        """E[g]; exact for the exact backend, else from ceil(8 ln(2/delta) / eps^2) samples."""
        if self.backend == "exact":
            base, restriction = _split(g)
            table = self._tables.get(id(base))
            if table is not None and table[0] is base:
                return table[1].bias(restriction)
            return TruthTable.from_oracle(g).mean()
        return self._sampled_mean(g, eps)


def estimate_distance(E: DistanceEstimator, g: FunctionOracle, s: int, gamma: float) -> float:
    return E.estimate(g, s, gamma)


# ============================================================
# BUILD_DT
# ============================================================

@dataclass(frozen=True)
class SplitRecord:
    """One split decision of build_dt."""
    restriction: Restriction
    var: int
    s0: int
    s1: int
    error: float


@dataclass
class BuildTrace:
    records: list[SplitRecord] = field(default_factory=list)


def build_dt(
    f: FunctionOracle,
    s: int,
    d: int,
    gamma: float,
    E: DistanceEstimator,
    trace: BuildTrace | None = None,
    bias_eps: float = 0.1,
) -> DecisionTree:
    """
    Tree of size <= s and depth <= d.

    If s = 1 or d = 0 return the leaf sign(E[f]). Otherwise, over every free
    i and s0 + s1 = s, minimize error(i, s0, s1) =
    (eta(f_{x_i=-1}, s0) + eta(f_{x_i=+1}, s1)) / 2 (ties: lowest i, then
    lowest s0) and recurse on both halves.
    """
    if s < 1:
        raise InvalidArgumentError(f"size must be >= 1, got {s}")
    if d < 0:
        raise InvalidArgumentError(f"depth must be >= 0, got {d}")
    if not 0.0 < gamma < 1.0:
        raise InvalidArgumentError(f"granularity must be in (0, 1), got {gamma}")

    base, outer = _split(f)
    etas: dict[tuple[Restriction, int], float] = {}

    def eta(r: Restriction, k: int) -> float:
        key = (r, k)
        if key not in etas:
            etas[key] = E.estimate(restrict(base, r), k, gamma)
        return etas[key]

    def build(r: Restriction, budget: int, depth: int) -> TreeNode:
        free = [i for i in range(base.n) if i not in r.variables]
        if budget == 1 or depth == 0 or not free:
            return Leaf(1 if E.bias(restrict(base, r), bias_eps) >= 0 else -1)
        best = None
        for i in free:
            for s0 in range(1, budget):
                error = 0.5 * (eta(r.extend(i, -1), s0) + eta(r.extend(i, 1), budget - s0))
                if best is None or error < best[0]:
                    best = (error, i, s0)
        error, i, s0 = best
        if trace is not None:
            trace.records.append(SplitRecord(r, i, s0, budget - s0, error))
        logger.debug(f"[LEARN] {r.path or 'root'}: x{i + 1} s0={s0} s1={budget - s0} error={error:.4f}")
        return Node(i, build(r.extend(i, -1), s0, depth - 1), build(r.extend(i, 1), budget - s0, depth - 1))

    return DecisionTree(build(outer, s, d))


# ============================================================
# LEARNING
# ============================================================

def learn_parameters(s_prime: int, eps_prime: float, c: float) -> tuple[int, float]:
    """d = max(0, ceil(log2(s'/eps')) - 1), gamma = eps'/2 * (eps'/s')^max(1, log2 c)."""
    d = max(0, math.ceil(math.log2(s_prime / eps_prime)) - 1)
    gamma = eps_prime / 2.0 * (eps_prime / s_prime) ** max(1.0, math.log2(c))
    return d, gamma


def build_dt_error_bound(opt: float, s: int, d: int, c: float, gamma: float) -> float:
    """c^d * opt + gamma * (c^d - 1)/(c - 1) + s / 2^(d+2); the c = 1 limit uses d."""
    if c == 1.0:
        return opt + gamma * d + s / 2 ** (d + 2)
    return c ** d * opt + gamma * (c ** d - 1.0) / (c - 1.0) + s / 2 ** (d + 2)


def call_budget(n: int, s_prime: int, gamma: float, constants: Constants) -> float:
    """Audit budget for tester calls: c_calls * n * s'^2 / gamma."""
    return constants.c_calls * n * s_prime ** 2 / gamma


def learn(
    g: FunctionOracle,
    s_prime: int,
    eps_prime: float,
    E: DistanceEstimator,
    trace: BuildTrace | None = None,
) -> DecisionTree:
    """Size-<= s' tree; eps'-close to g when g is realizable and E is exact."""
    if s_prime < 1:
        raise InvalidArgumentError(f"size must be >= 1, got {s_prime}")
    if not 0.0 < eps_prime < 1.0:
        raise InvalidArgumentError(f"error target must be in (0, 1), got {eps_prime}")
    d, gamma = learn_parameters(s_prime, eps_prime, E.c)
    logger.info(f"[LEARN] s'={s_prime} eps'={eps_prime} backend={E.backend} d={d} gamma={gamma:.4g}")
    tree = build_dt(g, s_prime, d, gamma, E, trace=trace, bias_eps=eps_prime)
    budget = call_budget(g.n, s_prime, gamma, E.constants)
    if E.calls > budget:
        logger.warning(f"[LEARN] {E.calls} tester calls exceed the audit budget {budget:.0f}")
    logger.info(f"[LEARN] done: {E.estimates} estimates, {E.calls} tester calls")
    return tree
