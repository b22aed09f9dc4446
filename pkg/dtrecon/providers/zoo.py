"""Built-in boolean functions for experiments and tests.

These functions implement the FunctionOracle protocol without any external
data, so every pipeline runs out of the box:
- Deterministic, pure batch evaluation
- Safe for concurrent reads
- Exactly checkable at small n through dtrecon.core.bruteforce
"""

import numpy as np
import numpy.typing as npt

from dtrecon.core import config
from dtrecon.core.bits import Words, bit_column
from dtrecon.core.errors import InvalidArgumentError, UnsupportedScaleError
from dtrecon.core.trees import DecisionTree, evaluate_batch, tree_variables


def _check_dimension(n: int) -> None:
    if n < 1:
        raise InvalidArgumentError(f"dimension must be >= 1, got {n}")


def _check_arity(k: int, n: int, name: str) -> None:
    if not 1 <= k <= n:
        raise InvalidArgumentError(f"{name}-{k} needs 1 <= k <= n = {n}")


def _plus_counts(points: Words, k: int) -> npt.NDArray[np.int64]:
    """Number of +1 coordinates among x_1..x_k of every row."""
    counts = np.zeros(points.shape[0], dtype=np.int64)
    for i in range(k):
        counts += bit_column(points, i)
    return counts


class ConstantFunction:
    """f(x) = label everywhere."""

    def __init__(self, n: int, label: int = 1):
        _check_dimension(n)
        if label not in (-1, 1):
            raise InvalidArgumentError(f"constant label must be +1 or -1, got {label}")
        self.n = n
        self.label = label

    def evaluate(self, points: Words) -> npt.NDArray[np.int8]:
        return np.full(points.shape[0], self.label, dtype=np.int8)


class DictatorFunction:
    """f(x) = x_i (0-based index)."""

    def __init__(self, n: int, index: int = 0):
        _check_dimension(n)
        if not 0 <= index < n:
            raise InvalidArgumentError(f"dictator index {index} out of range for n = {n}")
        self.n = n
        self.index = index

    def evaluate(self, points: Words) -> npt.NDArray[np.int8]:
        return np.where(bit_column(points, self.index), 1, -1).astype(np.int8)


class ParityFunction:
    """f(x) = x_1 * x_2 * ... * x_k."""

    def __init__(self, n: int, k: int):
        _check_dimension(n)
        _check_arity(k, n, "parity")
        self.n = n
        self.k = k

    def evaluate(self, points: Words) -> npt.NDArray[np.int8]:
        minus = self.k - _plus_counts(points, self.k)
        return np.where(minus % 2 == 0, 1, -1).astype(np.int8)


class MajorityFunction:
    """Majority of x_1..x_k; an exact tie (even k) outputs +1."""

    def __init__(self, n: int, k: int):
        _check_dimension(n)
        _check_arity(k, n, "majority")
        self.n = n
        self.k = k

    def evaluate(self, points: Words) -> npt.NDArray[np.int8]:
        plus = _plus_counts(points, self.k)
        return np.where(2 * plus >= self.k, 1, -1).astype(np.int8)


class TreeFunction:
    """The function computed by a decision tree."""

    def __init__(self, n: int, tree: DecisionTree):
        _check_dimension(n)
        used = tree_variables(tree)
        if used and max(used) >= n:
            raise InvalidArgumentError(f"tree queries x{max(used) + 1} beyond n = {n}")
        self.n = n
        self.tree = tree

    def evaluate(self, points: Words) -> npt.NDArray[np.int8]:
        return evaluate_batch(self.tree, points)


class TableFunction:
    """Explicit truth table indexed by packed point (n <= 24)."""

    def __init__(self, n: int, values: npt.NDArray[np.int8]):
        _check_dimension(n)
        max_n = config.limit("exact_max_n")
        if n > max_n:
            raise UnsupportedScaleError("TableFunction", n, max_n)
        values = np.asarray(values, dtype=np.int8)
        if values.shape != (1 << n,):
            raise InvalidArgumentError(f"table needs 2^{n} entries, got shape {values.shape}")
        if not np.all(np.abs(values) == 1):
            raise InvalidArgumentError("table entries must be +1 or -1")
        self.n = n
        self.values = values

    @classmethod
    def random(cls, n: int, rng: np.random.Generator) -> "TableFunction":
        return cls(n, rng.choice(np.array([-1, 1], dtype=np.int8), size=1 << n))

    def evaluate(self, points: Words) -> npt.NDArray[np.int8]:
        return self.values[points[:, 0].astype(np.int64)]
