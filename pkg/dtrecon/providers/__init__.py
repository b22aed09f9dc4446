"""Built-in function zoo for dtrecon.

This package contains implementations of the FunctionOracle protocol defined
in dtrecon.core.protocols.

Available functions:
- constant, dictator, parity-k, majority-k
- tree: any DecisionTree (random-tree instances)
- table: an explicit truth table (random-table instances, n <= 24)

Use OracleFactory to create instances by name:

    from dtrecon.core.factory import OracleFactory

    f = OracleFactory.create("parity-3", n=8)
    g = OracleFactory.create("random-tree", n=10, s=8, rho=0.02, seed=7)
"""

from .zoo import (
    ConstantFunction,
    DictatorFunction,
    ParityFunction,
    MajorityFunction,
    TreeFunction,
    TableFunction,
)

__all__ = [
    "ConstantFunction",
    "DictatorFunction",
    "ParityFunction",
    "MajorityFunction",
    "TreeFunction",
    "TableFunction",
]
