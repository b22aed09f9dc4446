"""
Decision trees and partial trees

Complete trees (DecisionTree) are immutable and used for evaluation and
serialization. PartialTree is the lazily built T° of the reconstructor: a
write-once map from node paths to variables / leaf labels.

Node paths are strings over {"0", "1"}: "0" takes the left branch (x_i = -1),
"1" the right branch (x_i = +1). The root is "".

Text format:
    leaf     = "L +1" | "L -1"
    internal = "(x<i> <left> <right>)"     i is 1-based
"""

import re
import threading
from collections.abc import Callable
from dataclasses import dataclass
from pathlib import Path
from typing import TYPE_CHECKING, Union

import numpy as np
import numpy.typing as npt

from .bits import Words, bit_column
from .errors import InvalidArgumentError, TreeParseError, WriteOnceError

if TYPE_CHECKING:
    from .boolfn import Point


# ============================================================
# DATA CLASSES
# ============================================================

@dataclass(frozen=True, slots=True)
class Leaf:
    """Leaf with label in {-1, +1}."""
    label: int

    def __post_init__(self):
        if self.label not in (-1, 1):
            raise InvalidArgumentError(f"leaf label must be +1 or -1, got {self.label}")


@dataclass(frozen=True, slots=True)
class Node:
    """Internal node querying x_var (0-based); left is x_var = -1."""
    var: int
    left: "TreeNode"
    right: "TreeNode"

    def __post_init__(self):
        if self.var < 0:
            raise InvalidArgumentError(f"variable index must be >= 0, got {self.var}")


TreeNode = Union[Leaf, Node]


@dataclass(frozen=True, slots=True)
class DecisionTree:
    """Complete decision tree. Immutable, freely shared."""
    root: TreeNode

    @classmethod
    def constant(cls, label: int) -> "DecisionTree":
        return cls(Leaf(label))


# ============================================================
# EVALUATION
# ============================================================

def evaluate(tree: DecisionTree, x: "Point") -> int:
    """Walk root to leaf: go right iff x_i = +1; return the leaf label."""
    node = tree.root
    while isinstance(node, Node):
        node = node.right if x.sign(node.var) == 1 else node.left
    return node.label


def evaluate_batch(tree: DecisionTree, points: Words) -> npt.NDArray[np.int8]:
    """Evaluate the tree on every row of a packed batch."""
    out = np.empty(points.shape[0], dtype=np.int8)
    stack = [(tree.root, np.arange(points.shape[0]))]
    while stack:
        node, rows = stack.pop()
        if rows.size == 0:
            continue
        if isinstance(node, Leaf):
            out[rows] = node.label
            continue
        goes_right = bit_column(points[rows], node.var)
        stack.append((node.right, rows[goes_right]))
        stack.append((node.left, rows[~goes_right]))
    return out


# ============================================================
# MEASUREMENT
# ============================================================

def _leaf_depths(tree: DecisionTree):
    stack = [(tree.root, 0)]
    while stack:
        node, depth = stack.pop()
        if isinstance(node, Leaf):
            yield node, depth
        else:
            stack.append((node.right, depth + 1))
            stack.append((node.left, depth + 1))


def tree_size(tree: DecisionTree) -> int:
    """Number of leaves."""
    return sum(1 for _ in _leaf_depths(tree))


def tree_depth(tree: DecisionTree) -> int:
    """Length of the longest root-to-leaf path."""
    return max(depth for _, depth in _leaf_depths(tree))


def leaf_weight_sum(tree: DecisionTree) -> float:
    """Sum of 2^-depth over leaves; exactly 1 for every complete tree."""
    return sum(2.0 ** -depth for _, depth in _leaf_depths(tree))


def tree_variables(tree: DecisionTree) -> set[int]:
    """Variables queried anywhere in the tree."""
    found = set()
    stack = [tree.root]
    while stack:
        node = stack.pop()
        if isinstance(node, Node):
            found.add(node.var)
            stack.extend((node.left, node.right))
    return found


# ============================================================
# SERIALIZATION
# ============================================================

_TOKEN = re.compile(r"\(|\)|x(\d+)|L|[+-]1")
_SPACE = re.compile(r"\s*")


def serialize(tree: DecisionTree) -> str:
    """Canonical single-space text form."""

    def render(node: TreeNode) -> str:
        if isinstance(node, Leaf):
            return "L +1" if node.label == 1 else "L -1"
        return f"(x{node.var + 1} {render(node.left)} {render(node.right)})"

    return render(tree.root)


class _Parser:
    def __init__(self, text: str):
        self.text = text
        self.pos = 0

    def _next(self) -> tuple[str, re.Match | None, int]:
        self.pos = _SPACE.match(self.text, self.pos).end()
        start = self.pos
        if start >= len(self.text):
            return "", None, start
        match = _TOKEN.match(self.text, start)
        if match is None:
            raise TreeParseError(f"unexpected character {self.text[start]!r}", start)
        self.pos = match.end()
        return match.group(0), match, start

    def node(self) -> TreeNode:
        token, match, start = self._next()
        if token == "L":
            label, _, label_pos = self._next()
            if label not in ("+1", "-1"):
                raise TreeParseError("expected leaf label +1 or -1", label_pos)
            return Leaf(int(label))
        if token == "(":
            var_token, var_match, var_pos = self._next()
            if var_match is None or var_match.group(1) is None:
                raise TreeParseError("expected variable x<i>", var_pos)
            index = int(var_match.group(1))
            if index < 1:
                raise TreeParseError("variable indices are 1-based", var_pos)
            left = self.node()
            right = self.node()
            close, _, close_pos = self._next()
            if close != ")":
                raise TreeParseError("expected ')'", close_pos)
            return Node(index - 1, left, right)
        if token == "":
            raise TreeParseError("unexpected end of input", start)
        raise TreeParseError(f"unexpected token {token!r}", start)

    def tree(self) -> DecisionTree:
        root = self.node()
        trailing, _, pos = self._next()
        if trailing:
            raise TreeParseError(f"trailing token {trailing!r}", pos)
        return DecisionTree(root)


def parse(text: str) -> DecisionTree:
    """Parse tree text (whitespace-insensitive)."""
    return _Parser(text).tree()


def write_tree(path: Path | str, tree: DecisionTree) -> None:
    """Write one tree per file, UTF-8."""
    Path(path).write_text(serialize(tree) + "\n", encoding="utf-8")


def read_tree(path: Path | str) -> DecisionTree:
    return parse(Path(path).read_text(encoding="utf-8"))


# ============================================================
# PARTIAL TREE (T°)
# ============================================================

def _check_path(path: str) -> None:
    if any(ch not in "01" for ch in path):
        raise InvalidArgumentError(f"node path must be over {{0,1}}, got {path!r}")


class PartialTree:
    """
    Write-once partial tree with depth cap d.

    Internal positions are paths of length < d, leaf positions paths of
    length d. Resolution is idempotent: concurrent resolve_* calls on one
    node may both compute, but the first stored value wins and every caller
    returns it.
    """

    def __init__(self, depth_cap: int):
        if depth_cap < 0:
            raise InvalidArgumentError(f"depth cap must be >= 0, got {depth_cap}")
        self.depth_cap = depth_cap
        self._internal: dict[str, int] = {}
        self._leaves: dict[str, int] = {}
        self._lock = threading.Lock()

    # --- reads ---

    def internal(self, path: str) -> int | None:
        with self._lock:
            return self._internal.get(path)

    def leaf(self, path: str) -> int | None:
        with self._lock:
            return self._leaves.get(path)

    @property
    def resolved_internal(self) -> int:
        with self._lock:
            return len(self._internal)

    @property
    def resolved_leaves(self) -> int:
        with self._lock:
            return len(self._leaves)

    # --- writes ---

    def set_internal(self, path: str, var: int) -> None:
        _check_path(path)
        if len(path) >= self.depth_cap:
            raise InvalidArgumentError(f"internal node {path!r} exceeds depth cap {self.depth_cap}")
        with self._lock:
            if path in self._internal:
                raise WriteOnceError(f"internal node {path!r} already holds x{self._internal[path] + 1}")
            self._internal[path] = var

    def set_leaf(self, path: str, label: int) -> None:
        _check_path(path)
        if len(path) > self.depth_cap:
            raise InvalidArgumentError(f"leaf {path!r} exceeds depth cap {self.depth_cap}")
        if label not in (-1, 1):
            raise InvalidArgumentError(f"leaf label must be +1 or -1, got {label}")
        with self._lock:
            if path in self._leaves:
                raise WriteOnceError(f"leaf {path!r} already labeled {self._leaves[path]:+d}")
            self._leaves[path] = label

    def resolve_internal(self, path: str, compute: Callable[[], int]) -> int:
        """Return the node's variable, computing and storing it if unresolved."""
        existing = self.internal(path)
        if existing is not None:
            return existing
        var = compute()
        with self._lock:
            return self._internal.setdefault(path, var)

    def resolve_leaf(self, path: str, compute: Callable[[], int]) -> int:
        """Return the leaf label, computing and storing it if unlabeled."""
        existing = self.leaf(path)
        if existing is not None:
            return existing
        label = compute()
        with self._lock:
            return self._leaves.setdefault(path, label)

    def copy_state(self) -> tuple[dict[str, int], dict[str, int]]:
        with self._lock:
            return dict(self._internal), dict(self._leaves)


def snapshot(partial: PartialTree) -> DecisionTree:
    """
    Complete copy of a partial tree.

    Unresolved internal nodes collapse to a +1 leaf and unlabeled leaves
    become +1; every answer already issued from the partial tree is
    reproduced because answered paths are fully resolved.
    """
    internal, leaves = partial.copy_state()

    def build(path: str) -> TreeNode:
        if path in internal:
            return Node(internal[path], build(path + "0"), build(path + "1"))
        return Leaf(leaves.get(path, 1))

    return DecisionTree(build(""))
