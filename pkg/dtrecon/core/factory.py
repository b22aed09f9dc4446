"""Oracle factory for the built-in function zoo.

The OracleFactory builds FunctionOracle instances from the names accepted by
the CLI's --fn flag, optionally wrapping them in a CorruptedOracle.

Example:
    from dtrecon.core.factory import OracleFactory

    f = OracleFactory.create("majority-5", n=16)
    instance = OracleFactory.create_instance("random-tree", n=10, s=8, rho=0.02, seed=3)
    instance.tree        # the generating tree (opt_s(instance.base) = 0)
"""

import logging
import re
from dataclasses import dataclass

import numpy as np

from .boolfn import CorruptedOracle, random_tree_instance
from .errors import InvalidArgumentError
from .protocols import FunctionOracle
from .trees import DecisionTree

logger = logging.getLogger(__name__)

_ARITY = re.compile(r"^(parity|majority)-(\d+)$")

FUNCTION_NAMES = ("constant", "dictator", "parity-k", "majority-k", "random-tree", "random-table")


@dataclass(frozen=True)
class Instance:
    """A generated experiment instance."""
    oracle: FunctionOracle          # what algorithms query (corrupted when rho > 0)
    base: FunctionOracle            # the uncorrupted function
    tree: DecisionTree | None       # generating tree, when the base is a tree
    name: str
    rho: float


class OracleFactory:
    """Factory for creating zoo functions by name.

    All create_* methods follow the same pattern:
    1. Parse the function name (and its arity suffix)
    2. Draw any random structure from a generator seeded by `seed`
    3. Wrap in a CorruptedOracle when rho > 0, keyed by a seed drawn from
       the same generator
    """

    @staticmethod
    def create_instance(
        name: str,
        n: int,
        s: int | None = None,
        rho: float = 0.0,
        seed: int = 0,
    ) -> Instance:
        """Create an instance from a zoo name.

        Args:
            name: "constant", "dictator", "parity-<k>", "majority-<k>",
                  "random-tree" (needs s) or "random-table".
            n: dimension.
            s: leaf count for random-tree.
            rho: corruption rate in [0, 1].
            seed: instance seed.

        Returns:
            Instance with the (possibly corrupted) oracle and its base.
        """
        from dtrecon.providers import (
            ConstantFunction,
            DictatorFunction,
            MajorityFunction,
            ParityFunction,
            TableFunction,
            TreeFunction,
        )

        rng = np.random.default_rng(np.random.SeedSequence(seed))
        tree = None
        arity = _ARITY.match(name)

        if name == "constant":
            base = ConstantFunction(n, 1)
        elif name == "dictator":
            base = DictatorFunction(n, 0)
        elif arity and arity.group(1) == "parity":
            base = ParityFunction(n, int(arity.group(2)))
        elif arity and arity.group(1) == "majority":
            base = MajorityFunction(n, int(arity.group(2)))
        elif name == "random-tree":
            if s is None:
                raise InvalidArgumentError("random-tree needs a leaf count s")
            tree = random_tree_instance(n, s, rng)
            base = TreeFunction(n, tree)
        elif name == "random-table":
            base = TableFunction.random(n, rng)
        else:
            raise InvalidArgumentError(
                f"unknown function {name!r}; expected one of {', '.join(FUNCTION_NAMES)}"
            )

        oracle: FunctionOracle = base
        if rho > 0.0:
            corruption_seed = int(rng.integers(0, 2**63))
            oracle = CorruptedOracle(base, rho, corruption_seed)
        elif rho < 0.0:
            raise InvalidArgumentError(f"corruption rate must be in [0, 1], got {rho}")

        logger.debug(f"[FACTORY] {name} n={n} s={s} rho={rho} seed={seed}")
        return Instance(oracle=oracle, base=base, tree=tree, name=name, rho=rho)

    @staticmethod
    def create(
        name: str,
        n: int,
        s: int | None = None,
        rho: float = 0.0,
        seed: int = 0,
    ) -> FunctionOracle:
        """Create just the queried oracle of an instance."""
        return OracleFactory.create_instance(name, n, s=s, rho=rho, seed=seed).oracle
