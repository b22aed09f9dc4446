"""
Decision-tree reconstructor

Lazy, query-efficient access to one fixed decision tree close to f. Each
answer walks the partial tree along z for d levels, resolving unresolved
nodes to the variable of highest estimated score of the restricted function,
then labels the reached leaf with the sign of a sampled mean.

Integration Contract:
    Input:  new_reconstructor(f, s, eps, delta, constants, seed, mode)
    Output: answer(z) -> +1/-1, materialize() -> DecisionTree,
            query_stats() -> QueryStats

Modes:
    local  every node draws from its own tape stream keyed by (path, purpose),
           so answers do not depend on query order; safe for concurrent callers
    plain  one stateful generator; single-threaded only
"""

import hashlib
import logging
import threading
from dataclasses import dataclass
from typing import Literal

import numpy as np

from . import config
from .bits import random_words
from .boolfn import CountingOracle, Point, Restriction, restrict
from .errors import InvalidArgumentError, QueryBudgetError, UnsupportedScaleError
from .estimators import mean_score_samples
from .params import Constants, Params
from .protocols import FunctionOracle
from .trees import DecisionTree, PartialTree, snapshot

logger = logging.getLogger(__name__)

Mode = Literal["plain", "local"]


# ============================================================
# RANDOM TAPE
# ============================================================

class RandomTape:
    """Seed-keyed randomness addressed by (node path, purpose).

    The sample index is the position within a stream, so the same key yields
    the same bits across processes and query orders.
    """

    PURPOSES = ("score", "leaf")

    def __init__(self, seed: int):
        if seed < 0:
            raise InvalidArgumentError(f"seed must be >= 0, got {seed}")
        self.seed = seed

    def _spawn_key(self, path: str, purpose: str) -> tuple[int, ...]:
        digest = hashlib.blake2b(f"{purpose}|{path}".encode(), digest_size=16).digest()
        return tuple(int.from_bytes(digest[i:i + 4], "little") for i in range(0, 16, 4))

    def stream(self, path: str, purpose: str) -> np.random.Generator:
        if purpose not in self.PURPOSES:
            raise InvalidArgumentError(f"unknown tape purpose {purpose!r}")
        sequence = np.random.SeedSequence(entropy=self.seed, spawn_key=self._spawn_key(path, purpose))
        return np.random.Generator(np.random.PCG64(sequence))


# ============================================================
# STATISTICS
# ============================================================

@dataclass(frozen=True)
class QueryStats:
    """Exact oracle counters."""
    total: int
    max_per_answer: int
    answers: int


# ============================================================
# RECONSTRUCTOR
# ============================================================

class Reconstructor:
    """Query access to one fixed tree close to f."""

    def __init__(self, f: FunctionOracle, params: Params, seed: int = 0, mode: Mode = "local"):
        if mode not in ("plain", "local"):
            raise InvalidArgumentError(f"mode must be 'plain' or 'local', got {mode!r}")
        if params.n != f.n:
            raise InvalidArgumentError(f"params are for n = {params.n}, oracle has n = {f.n}")
        self.params = params
        self.mode = mode
        self.seed = seed
        self.oracle = CountingOracle(f)
        self.tree = PartialTree(params.d)
        self.tape = RandomTape(seed) if mode == "local" else None
        self._rng = np.random.default_rng(seed) if mode == "plain" else None
        self._max_per_answer = 0
        self._answers = 0
        self._stats_lock = threading.Lock()

    @property
    def n(self) -> int:
        return self.params.n

    def _generator(self, path: str, purpose: str) -> np.random.Generator:
        if self.tape is not None:
            return self.tape.stream(path, purpose)
        return self._rng

    # --- node resolution ---

    def _choose_variable(self, oracle: FunctionOracle, restriction: Restriction, path: str) -> int:
        scores = mean_score_samples(
            restrict(oracle, restriction),
            self.params.p,
            self.params.q,
            self._generator(path, "score"),
        )
        scores[list(restriction.variables)] = -np.inf
        var = int(np.argmax(scores))
        logger.debug(f"[RECONSTRUCT] node {path!r} -> x{var + 1} (score {scores[var]:.4f})")
        return var

    def _label_leaf(self, oracle: FunctionOracle, restriction: Restriction, path: str) -> int:
        rng = self._generator(path, "leaf")
        restricted = restrict(oracle, restriction)
        total = 0
        q_leaf = self.params.q_leaf
        rows = max(1, int(config.sampling("block_elements")) // max(64, self.n))
        for start in range(0, q_leaf, rows):
            points = random_words(rng, min(rows, q_leaf - start), self.n)
            total += int(restricted.evaluate(points).astype(np.int64).sum())
        label = 1 if total >= 0 else -1
        logger.debug(f"[RECONSTRUCT] leaf {path!r} -> {label:+d} (mean {total / q_leaf:.4f})")
        return label

    # --- operations ---

    def answer(self, z: Point) -> int:
        """The reconstructed tree's value at z, extending T° along z as needed."""
        if z.n != self.n:
            raise InvalidArgumentError(f"point dimension {z.n} does not match n = {self.n}")
        calls = CountingOracle(self.oracle)
        restriction = Restriction()
        path = ""
        for _ in range(self.params.d):
            var = self.tree.resolve_internal(
                path, lambda: self._choose_variable(calls, restriction, path)
            )
            value = z.sign(var)
            restriction = restriction.extend(var, value)
            path += "1" if value == 1 else "0"
        label = self.tree.resolve_leaf(path, lambda: self._label_leaf(calls, restriction, path))

        used = calls.count
        if used > self.params.per_answer_budget:
            raise QueryBudgetError(
                f"answer used {used} queries, budget is {self.params.per_answer_budget}"
            )
        with self._stats_lock:
            self._answers += 1
            self._max_per_answer = max(self._max_per_answer, used)
        return label

    def materialize(self) -> DecisionTree:
        """Snapshot of T°."""
        return snapshot(self.tree)

    def query_stats(self) -> QueryStats:
        with self._stats_lock:
            return QueryStats(self.oracle.count, self._max_per_answer, self._answers)


def new_reconstructor(
    f: FunctionOracle,
    s: int,
    eps: float,
    delta: float,
    constants: Constants | None = None,
    seed: int = 0,
    mode: Mode = "local",
) -> Reconstructor:
    """Empty reconstructor for f; no oracle queries are made."""
    params = Params.create(f.n, s, eps, delta, constants)
    logger.info(
        f"[RECONSTRUCT] n={f.n} s={s} eps={eps} d={params.d} p={params.p:.4g} "
        f"q={params.q} q_leaf={params.q_leaf} mode={mode}"
    )
    return Reconstructor(f, params, seed=seed, mode=mode)


def materialize_all(R: Reconstructor) -> DecisionTree:
    """
    The tree T° becomes once every point of {-1,+1}^n is answered.

    One representative point per node suffices: d <= n and no variable
    repeats on a path, so every node of the complete depth-d tree is reached
    by some point.
    """
    max_n = config.limit("exact_max_n")
    if R.n > max_n:
        raise UnsupportedScaleError("materialize_all", R.n, max_n)
    stack = [("", 0)]
    while stack:
        path, bits = stack.pop()
        R.answer(Point(R.n, bits))
        if len(path) == R.params.d:
            continue
        var = R.tree.internal(path)
        stack.append((path + "1", bits | (1 << var)))
        stack.append((path + "0", bits & ~(1 << var)))
    return R.materialize()
