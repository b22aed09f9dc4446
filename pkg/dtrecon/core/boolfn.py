"""
Boolean-function oracles for dtrecon

Points, restrictions, oracle wrappers and instance generators: the substrate
every algorithm queries.

Integration Contract:
    Input:  any FunctionOracle (dtrecon.core.protocols)
    Output: query(f, x) -> +1/-1, restrict(f, r) -> FunctionOracle,
            exact_distance / sampled_distance -> fraction

Sign convention: a stored bit 1 encodes +1, a stored bit 0 encodes -1.
"""

import logging
import threading
from dataclasses import dataclass
from fractions import Fraction

import numpy as np
import numpy.typing as npt

from . import config
from .bits import (
    Words,
    all_points,
    hash_rows,
    int_to_words,
    n_words,
    random_words,
    unit_uniform,
    words_to_int,
)
from .errors import InvalidArgumentError, UnsupportedScaleError
from .protocols import FunctionOracle
from .trees import DecisionTree, Leaf, Node, TreeNode

logger = logging.getLogger(__name__)


# ============================================================
# POINTS
# ============================================================

@dataclass(frozen=True, slots=True)
class Point:
    """An assignment in {-1,+1}^n, bit-packed into an int."""
    n: int
    bits: int

    def __post_init__(self):
        max_n = config.limit("max_dimension")
        if not 1 <= self.n <= max_n:
            raise InvalidArgumentError(f"dimension must be in [1, {max_n}], got {self.n}")
        if self.bits < 0 or self.bits >> self.n:
            raise InvalidArgumentError("bits beyond position n must be zero")

    @classmethod
    def from_signs(cls, signs) -> "Point":
        bits = 0
        for i, value in enumerate(signs):
            if value not in (-1, 1):
                raise InvalidArgumentError(f"coordinate {i} must be +1 or -1, got {value}")
            if value == 1:
                bits |= 1 << i
        return cls(len(signs), bits)

    @classmethod
    def from_words(cls, row: Words, n: int) -> "Point":
        return cls(n, words_to_int(row))

    @classmethod
    def random(cls, n: int, rng: np.random.Generator) -> "Point":
        return cls.from_words(random_words(rng, 1, n)[0], n)

    def sign(self, i: int) -> int:
        """Coordinate x_i (0-based) as +1/-1."""
        if not 0 <= i < self.n:
            raise InvalidArgumentError(f"coordinate {i} out of range for n = {self.n}")
        return 1 if (self.bits >> i) & 1 else -1

    def to_signs(self) -> tuple[int, ...]:
        return tuple(1 if (self.bits >> i) & 1 else -1 for i in range(self.n))

    def to_words(self) -> Words:
        return int_to_words(self.bits, self.n)


# ============================================================
# RESTRICTIONS
# ============================================================

@dataclass(frozen=True, slots=True)
class Restriction:
    """
    Ordered root-to-node assignments (variable index, value).

    Two restrictions with the same assignment set in different orders denote
    the same subfunction but different tree nodes.
    """
    assignments: tuple[tuple[int, int], ...] = ()

    def __post_init__(self):
        seen = set()
        for index, value in self.assignments:
            if index < 0:
                raise InvalidArgumentError(f"variable index must be >= 0, got {index}")
            if value not in (-1, 1):
                raise InvalidArgumentError(f"restricted value must be +1 or -1, got {value}")
            if index in seen:
                raise InvalidArgumentError(f"variable x{index + 1} restricted twice")
            seen.add(index)

    @classmethod
    def of(cls, *assignments: tuple[int, int]) -> "Restriction":
        return cls(tuple(assignments))

    def extend(self, index: int, value: int) -> "Restriction":
        return Restriction(self.assignments + ((index, value),))

    def __len__(self) -> int:
        return len(self.assignments)

    @property
    def variables(self) -> frozenset[int]:
        return frozenset(index for index, _ in self.assignments)

    @property
    def path(self) -> str:
        """Node path of this restriction ("1" for x = +1, "0" for x = -1)."""
        return "".join("1" if value == 1 else "0" for _, value in self.assignments)

    def validate_for(self, n: int) -> None:
        if len(self) > n:
            raise InvalidArgumentError(f"restriction of length {len(self)} exceeds n = {n}")
        for index, _ in self.assignments:
            if index >= n:
                raise InvalidArgumentError(f"variable x{index + 1} out of range for n = {n}")

    def masks(self, n: int) -> tuple[Words, Words]:
        """(clear, set) word masks forcing the restricted coordinates."""
        clear = 0
        forced = 0
        for index, value in self.assignments:
            clear |= 1 << index
            if value == 1:
                forced |= 1 << index
        return int_to_words(clear, n), int_to_words(forced, n)


# ============================================================
# ORACLE WRAPPERS
# ============================================================

def _check_batch(f: FunctionOracle, points: Words) -> None:
    if points.ndim != 2 or points.shape[1] != n_words(f.n):
        raise InvalidArgumentError(
            f"batch of shape {points.shape} does not match dimension n = {f.n}"
        )


class RestrictedOracle:
    """f with the restricted coordinates forced; dimension unchanged."""

    def __init__(self, base: FunctionOracle, restriction: Restriction):
        restriction.validate_for(base.n)
        self.base = base
        self.restriction = restriction
        self.n = base.n
        self._clear, self._set = restriction.masks(base.n)

    def evaluate(self, points: Words) -> npt.NDArray[np.int8]:
        _check_batch(self, points)
        return self.base.evaluate((points & ~self._clear) | self._set)


class CountingOracle:
    """Transparent wrapper counting every evaluated point."""

    def __init__(self, inner: FunctionOracle):
        self.inner = inner
        self.n = inner.n
        self._count = 0
        self._lock = threading.Lock()

    @property
    def count(self) -> int:
        with self._lock:
            return self._count

    def evaluate(self, points: Words) -> npt.NDArray[np.int8]:
        values = self.inner.evaluate(points)
        with self._lock:
            self._count += points.shape[0]
        return values


class CorruptedOracle:
    """
    base with each point's output flipped iff a keyed pseudorandom predicate
    fires; the predicate fires with probability rho and is fixed per point.
    """

    def __init__(self, base: FunctionOracle, rho: float, seed: int):
        if not 0.0 <= rho <= 1.0:
            raise InvalidArgumentError(f"corruption rate must be in [0, 1], got {rho}")
        self.base = base
        self.rho = rho
        self.seed = seed
        self.n = base.n

    def flipped(self, points: Words) -> npt.NDArray[np.bool_]:
        return unit_uniform(hash_rows(points, self.seed)) < self.rho

    def evaluate(self, points: Words) -> npt.NDArray[np.int8]:
        values = self.base.evaluate(points)
        if self.rho == 0.0:
            return values
        return np.where(self.flipped(points), -values, values).astype(np.int8)


# ============================================================
# OPERATIONS
# ============================================================

def query(f: FunctionOracle, x: Point) -> int:
    """f(x) as a Python int in {-1, +1}."""
    if x.n != f.n:
        raise InvalidArgumentError(f"point dimension {x.n} does not match oracle dimension {f.n}")
    return int(f.evaluate(x.to_words().reshape(1, -1))[0])


def restrict(f: FunctionOracle, r: Restriction) -> FunctionOracle:
    """
    Oracle forcing r's coordinates; disjoint nested restrictions are
    flattened onto the base oracle (order preserved: outer first).
    """
    r.validate_for(f.n)
    if len(r) == 0:
        return f
    if isinstance(f, RestrictedOracle) and not (f.restriction.variables & r.variables):
        return RestrictedOracle(f.base, Restriction(f.restriction.assignments + r.assignments))
    return RestrictedOracle(f, r)


def random_tree_instance(n: int, s: int, rng: np.random.Generator) -> DecisionTree:
    """
    Random tree with exactly s leaves and no variable repeated on a path.

    Each internal node draws its variable uniformly among the unused ones and
    splits its leaf budget uniformly among the feasible splits (a child with
    r unused variables below it holds at most 2^r leaves).
    """
    if s < 2:
        raise InvalidArgumentError(f"random trees need s >= 2, got s = {s}")
    if n < 1 or (n < 64 and s > 1 << n):
        raise InvalidArgumentError(f"s = {s} exceeds 2^n for n = {n}")

    def grow(budget: int, unused: list[int]) -> TreeNode:
        if budget == 1:
            return Leaf(int(rng.choice((-1, 1))))
        var = unused[int(rng.integers(len(unused)))]
        rest = [v for v in unused if v != var]
        capacity = 1 << min(len(rest), 62)
        low = max(1, budget - capacity)
        high = min(budget - 1, capacity)
        left_budget = int(rng.integers(low, high + 1))
        return Node(var, grow(left_budget, rest), grow(budget - left_budget, rest))

    return DecisionTree(grow(s, list(range(n))))


def tabulate(f: FunctionOracle) -> npt.NDArray[np.int8]:
    """All 2^n values of f, indexed by packed point."""
    max_n = config.limit("exact_max_n")
    if f.n > max_n:
        raise UnsupportedScaleError("tabulate", f.n, max_n)
    total = 1 << f.n
    block = int(config.sampling("table_block_rows"))
    values = np.empty(total, dtype=np.int8)
    for start in range(0, total, block):
        stop = min(total, start + block)
        values[start:stop] = f.evaluate(all_points(f.n, start, stop))
    return values


def _check_same_dimension(f: FunctionOracle, g: FunctionOracle) -> None:
    if f.n != g.n:
        raise InvalidArgumentError(f"dimension mismatch: {f.n} vs {g.n}")


def exact_distance(f: FunctionOracle, g: FunctionOracle) -> Fraction:
    """|{x : f(x) != g(x)}| / 2^n by exhaustive enumeration."""
    _check_same_dimension(f, g)
    mismatches = int(np.count_nonzero(tabulate(f) != tabulate(g)))
    return Fraction(mismatches, 1 << f.n)


def sampled_distance(
    f: FunctionOracle, g: FunctionOracle, m: int, rng: np.random.Generator
) -> float:
    """Mismatch fraction over m uniform points."""
    _check_same_dimension(f, g)
    if m < 1:
        raise InvalidArgumentError(f"sample size must be >= 1, got {m}")
    rows = max(1, int(config.sampling("block_elements")) // max(64, f.n))
    mismatches = 0
    for start in range(0, m, rows):
        points = random_words(rng, min(rows, m - start), f.n)
        mismatches += int(np.count_nonzero(f.evaluate(points) != g.evaluate(points)))
    return mismatches / m
