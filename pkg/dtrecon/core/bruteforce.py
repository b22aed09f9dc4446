"""
Exact verification oracles

Truth tables, the Walsh-Hadamard spectrum, exact noise sensitivity and
scores, the exact top-down tree and the opt_s dynamic program. Everything
here is exhaustive and guarded by the scale limits in config/params.yaml.

Integration Contract:
    Input:  TruthTable.from_oracle(f)          (n <= exact_max_n)
    Output: wht / exact_ns / exact_score(s)    floats
            exact_topdown_tree(t, d, p)        DecisionTree
            exact_opt(t, s), OptTable          (distance, witness tree)

Fourier convention: chi_S(x) = prod_{i in S} x_i with x_i = +1 for a stored
bit 1, so f_hat(S) = (-1)^|S| * H[f](S) / 2^n where H is the 0/1 Hadamard
transform over packed indices.
"""

import logging
from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache

import numpy as np
import numpy.typing as npt

from . import config
from .boolfn import Restriction, tabulate
from .errors import InvalidArgumentError, UnsupportedScaleError
from .protocols import FunctionOracle
from .trees import DecisionTree, Leaf, Node, TreeNode

logger = logging.getLogger(__name__)

_TIE_TOLERANCE = 1e-12


# ============================================================
# TRUTH TABLES
# ============================================================

def _require(operation: str, n: int, limit_key: str) -> None:
    max_n = config.limit(limit_key)
    if n > max_n:
        raise UnsupportedScaleError(operation, n, max_n)


def popcounts(n: int) -> npt.NDArray[np.int64]:
    """|S| for every subset mask S of [n]."""
    idx = np.arange(1 << n, dtype=np.int64)
    counts = np.zeros(1 << n, dtype=np.int64)
    for i in range(n):
        counts += (idx >> i) & 1
    return counts


@dataclass(frozen=True)
class TruthTable:
    """All 2^n values of f, indexed by packed point."""
    n: int
    values: npt.NDArray[np.int8]

    def __post_init__(self):
        _require("TruthTable", self.n, "exact_max_n")
        if self.values.shape != (1 << self.n,):
            raise InvalidArgumentError(
                f"truth table needs 2^{self.n} entries, got shape {self.values.shape}"
            )

    @classmethod
    def from_oracle(cls, f: FunctionOracle) -> "TruthTable":
        return cls(f.n, tabulate(f))

    def as_oracle(self) -> FunctionOracle:
        from dtrecon.providers import TableFunction

        return TableFunction(self.n, self.values)

    def restrict(self, i: int, b: int) -> "TruthTable":
        """f with x_i forced to b; dimension unchanged (x_i becomes dead)."""
        if not 0 <= i < self.n:
            raise InvalidArgumentError(f"variable x{i + 1} out of range for n = {self.n}")
        if b not in (-1, 1):
            raise InvalidArgumentError(f"restricted value must be +1 or -1, got {b}")
        idx = np.arange(1 << self.n, dtype=np.int64)
        forced = (idx & ~(1 << i)) | ((1 << i) if b == 1 else 0)
        return TruthTable(self.n, self.values[forced])

    def mean(self) -> float:
        return float(self.values.astype(np.int64).sum()) / (1 << self.n)


# ============================================================
# WALSH-HADAMARD
# ============================================================

@dataclass(frozen=True)
class FourierSpectrum:
    """Coefficients f_hat(S), indexed by subset mask S."""
    n: int
    coefficients: npt.NDArray[np.float64]

    def coefficient(self, subset: set[int] | frozenset[int]) -> float:
        mask = 0
        for i in subset:
            mask |= 1 << i
        return float(self.coefficients[mask])


def _hadamard(values: npt.NDArray[np.float64], n: int) -> npt.NDArray[np.float64]:
    """Unnormalized 0/1 Hadamard transform, n butterfly passes."""
    a = values.astype(np.float64, copy=True)
    for i in range(n):
        a = a.reshape(-1, 2, 1 << i)
        low = a[:, 0, :].copy()
        high = a[:, 1, :]
        a = np.stack((low + high, low - high), axis=1)
    return a.reshape(-1)


def wht(t: TruthTable) -> FourierSpectrum:
    """Fourier spectrum of t in n * 2^n operations."""
    _require("wht", t.n, "exact_max_n")
    signs = np.where(popcounts(t.n) % 2 == 0, 1.0, -1.0)
    return FourierSpectrum(t.n, signs * _hadamard(t.values, t.n) / (1 << t.n))


def inverse_wht(spectrum: FourierSpectrum) -> npt.NDArray[np.float64]:
    """f(x) = sum_S f_hat(S) chi_S(x), as floats."""
    _require("inverse_wht", spectrum.n, "exact_max_n")
    signs = np.where(popcounts(spectrum.n) % 2 == 0, 1.0, -1.0)
    return _hadamard(signs * spectrum.coefficients, spectrum.n)


def parseval_mass(spectrum: FourierSpectrum) -> float:
    """sum_S f_hat(S)^2; equals 1 for every +/-1-valued f."""
    return float(np.sum(spectrum.coefficients ** 2))


# ============================================================
# NOISE SENSITIVITY AND SCORES
# ============================================================

def _check_rate(p: float) -> None:
    if not 0.0 < p < 1.0:
        raise InvalidArgumentError(f"noise rate must be in (0, 1), got {p}")


def exact_ns(t: TruthTable, p: float) -> float:
    """NS_p(f) = 1/2 * sum_S (1 - (1-p)^|S|) f_hat(S)^2."""
    _check_rate(p)
    spectrum = wht(t)
    weights = 0.5 * (1.0 - (1.0 - p) ** popcounts(t.n))
    return float(np.sum(weights * spectrum.coefficients ** 2))


def exact_score(t: TruthTable, p: float, i: int) -> float:
    """Score_i(f, p) = NS_p(f) - E_b[NS_p(f_{x_i = b})]."""
    restricted = 0.5 * (exact_ns(t.restrict(i, -1), p) + exact_ns(t.restrict(i, 1), p))
    return exact_ns(t, p) - restricted


def exact_scores(t: TruthTable, p: float) -> npt.NDArray[np.float64]:
    """All n scores: Score_i = (p/2) * sum_{S containing i} (1-p)^(|S|-1) f_hat(S)^2."""
    _check_rate(p)
    spectrum = wht(t)
    sizes = popcounts(t.n)
    weights = np.zeros(1 << t.n)
    nonempty = sizes > 0
    weights[nonempty] = (p / 2.0) * (1.0 - p) ** (sizes[nonempty] - 1)
    mass = weights * spectrum.coefficients ** 2
    idx = np.arange(1 << t.n, dtype=np.int64)
    return np.array([mass[(idx >> i) & 1 == 1].sum() for i in range(t.n)])


# ============================================================
# EXACT TOP-DOWN TREE
# ============================================================

def _argmax_lowest(values: npt.NDArray[np.float64]) -> int:
    """Index of the maximum; ties within tolerance go to the lowest index."""
    best = values.max()
    return int(np.flatnonzero(values >= best - _TIE_TOLERANCE)[0])


def exact_topdown_tree(t: TruthTable, d: int, p: float) -> DecisionTree:
    """
    Complete depth-d tree that queries, at every node, the free variable of
    maximal exact score of the subfunction; leaves take sign(E[f_leaf]) with
    sign(0) = +1.
    """
    _require("exact_topdown_tree", t.n, "topdown_max_n")
    _check_rate(p)
    if not 0 <= d <= t.n:
        raise InvalidArgumentError(f"depth must be in [0, {t.n}], got {d}")

    def build(values: npt.NDArray[np.int8], free: list[int], depth: int) -> TreeNode:
        if depth == 0:
            return Leaf(1 if int(values.astype(np.int64).sum()) >= 0 else -1)
        m = len(free)
        scores = exact_scores(TruthTable(m, values), p)
        j = _argmax_lowest(scores)
        halves = values.reshape(-1, 2, 1 << j)
        rest = free[:j] + free[j + 1:]
        left = build(np.ascontiguousarray(halves[:, 0, :]).reshape(-1), rest, depth - 1)
        right = build(np.ascontiguousarray(halves[:, 1, :]).reshape(-1), rest, depth - 1)
        return Node(free[j], left, right)

    return DecisionTree(build(t.values, list(range(t.n)), d))


# ============================================================
# OPT_s DYNAMIC PROGRAM
# ============================================================

class OptTable:
    """
    opt_k of every subcube of f for every budget k <= s.

    States are restrictions encoded in base 3 (digit j: 0 free, 1 for
    x_j = -1, 2 for x_j = +1). best[state, k] is the distance of the
    subfunction to the closest tree with at most k leaves, normalized to the
    subcube; it is nonincreasing in k. Witness ties prefer fewer leaves,
    then the lowest variable, then the lowest left budget.
    """

    def __init__(self, t: TruthTable, s: int):
        _require("OptTable", t.n, "opt_max_n")
        max_s = config.limit("opt_max_s")
        if not 1 <= s <= max_s:
            raise InvalidArgumentError(f"budget must be in [1, {max_s}], got {s}")
        self.table = t
        self.n = t.n
        self.s = s
        self._build()

    def _build(self) -> None:
        n, s = self.n, self.s
        size = 3 ** n
        codes = np.arange(size, dtype=np.int64)
        digits = np.empty((n, size), dtype=np.int8)
        rem = codes.copy()
        for j in range(n):
            digits[j] = rem % 3
            rem //= 3
        free = (digits == 0).sum(axis=0)

        points = np.arange(1 << n, dtype=np.int64)
        leaf_codes = np.zeros(1 << n, dtype=np.int64)
        for j in range(n):
            leaf_codes += (1 + ((points >> j) & 1)) * 3 ** j
        plus = np.zeros(size, dtype=np.int64)
        plus[leaf_codes] = self.table.values == 1
        for j in range(n):
            view = plus.reshape(3 ** (n - 1 - j), 3, 3 ** j)
            view[:, 0, :] = view[:, 1, :] + view[:, 2, :]

        cube = np.left_shift(np.int64(1), free.astype(np.int64))
        self._plus = plus
        self._cube = cube
        leaf = np.minimum(plus, cube - plus) / cube

        best = np.full((size, s + 1), np.inf)
        var = np.full((size, s + 1), -1, dtype=np.int8)
        left_budget = np.zeros((size, s + 1), dtype=np.int8)
        best[:, 1] = leaf

        for level in range(n + 1):
            states = codes[free == level]
            split = np.full((states.size, s + 1), np.inf)
            split_var = np.full((states.size, s + 1), -1, dtype=np.int8)
            split_left = np.zeros((states.size, s + 1), dtype=np.int8)
            if level > 0 and s > 1:
                for j in range(n):
                    rows = np.flatnonzero(digits[j, states] == 0)
                    if rows.size == 0:
                        continue
                    sub = states[rows]
                    minus_best = best[sub + 3 ** j]
                    plus_best = best[sub + 2 * 3 ** j]
                    for k in range(2, s + 1):
                        candidates = 0.5 * (minus_best[:, 1:k] + plus_best[:, k - 1:0:-1])
                        choice = candidates.argmin(axis=1)
                        value = candidates[np.arange(rows.size), choice]
                        better = value < split[rows, k]
                        target = rows[better]
                        split[target, k] = value[better]
                        split_var[target, k] = j
                        split_left[target, k] = choice[better] + 1
            for k in range(2, s + 1):
                previous = best[states, k - 1]
                take = split[:, k] < previous
                best[states, k] = np.where(take, split[:, k], previous)
                var[states[take], k] = split_var[take, k]
                left_budget[states[take], k] = split_left[take, k]
            logger.debug(f"[OPT] level {level}: {states.size} subcubes")

        self._best = best
        self._var = var
        self._left = left_budget

    def _code(self, restriction: Restriction) -> int:
        restriction.validate_for(self.n)
        return sum((1 if value == -1 else 2) * 3 ** index for index, value in restriction.assignments)

    def _check_budget(self, k: int) -> None:
        if not 1 <= k <= self.s:
            raise InvalidArgumentError(f"budget must be in [1, {self.s}], got {k}")

    def opt(self, restriction: Restriction = Restriction(), k: int | None = None) -> float:
        """Distance of f restricted by `restriction` to its closest size-k tree."""
        k = self.s if k is None else k
        self._check_budget(k)
        return float(self._best[self._code(restriction), k])

    def bias(self, restriction: Restriction = Restriction()) -> float:
        """E[f] over the subcube."""
        code = self._code(restriction)
        return float(2 * self._plus[code] - self._cube[code]) / float(self._cube[code])

    def witness(self, restriction: Restriction = Restriction(), k: int | None = None) -> DecisionTree:
        """A tree with at most k leaves attaining opt on the subcube."""
        k = self.s if k is None else k
        self._check_budget(k)

        def build(code: int, budget: int) -> TreeNode:
            while budget > 1 and self._var[code, budget] < 0:
                budget -= 1
            if budget == 1:
                plus = 2 * self._plus[code]
                return Leaf(1 if plus >= self._cube[code] else -1)
            j = int(self._var[code, budget])
            k0 = int(self._left[code, budget])
            return Node(j, build(code + 3 ** j, k0), build(code + 2 * 3 ** j, budget - k0))

        return DecisionTree(build(self._code(restriction), k))


def exact_opt(t: TruthTable, s: int) -> tuple[float, DecisionTree]:
    """(opt_s(f), witness tree) by the subcube dynamic program."""
    table = OptTable(t, s)
    return table.opt(Restriction(), s), table.witness(Restriction(), s)


# ============================================================
# EXHAUSTIVE TREE ENUMERATION
# ============================================================

@lru_cache(maxsize=None)
def _computable(n: int, k: int) -> frozenset[int]:
    """Truth tables (bit x set iff f(x) = +1) of every tree with <= k leaves."""
    full = (1 << (1 << n)) - 1
    if k == 1:
        return frozenset((0, full))
    found = set(_computable(n, k - 1))
    for i in range(n):
        minus_mask = sum(1 << x for x in range(1 << n) if not (x >> i) & 1)
        plus_mask = full ^ minus_mask
        for k0 in range(1, k):
            lefts = {f & minus_mask for f in _computable(n, k0)}
            rights = {f & plus_mask for f in _computable(n, k - k0)}
            found.update(a | b for a in lefts for b in rights)
    return frozenset(found)


def exhaustive_opt(t: TruthTable, s: int) -> Fraction:
    """opt_s(f) by enumerating every function a size-<=s tree computes (n <= 4)."""
    _require("exhaustive_opt", t.n, "enumeration_max_n")
    if s < 1:
        raise InvalidArgumentError(f"budget must be >= 1, got {s}")
    target = sum(1 << x for x in np.flatnonzero(t.values == 1).tolist())
    best = min(bin(g ^ target).count("1") for g in _computable(t.n, s))
    return Fraction(best, 1 << t.n)
