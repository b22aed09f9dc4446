"""Protocol definitions for oracle abstraction.

Every algorithm in dtrecon talks to a boolean function only through the
FunctionOracle protocol: a dimension and a batch evaluator over bit-packed
points. Built-in functions live in dtrecon.providers; wrappers (restriction,
counting, corruption) live in dtrecon.core.boolfn. Use the OracleFactory to
build oracles from names.

Example:
    from dtrecon.core.factory import OracleFactory

    f = OracleFactory.create("dictator", n=8)
    values = f.evaluate(batch)      # int8 array of +1/-1
"""

from typing import Protocol, runtime_checkable

import numpy as np
import numpy.typing as npt

from .bits import Words


@runtime_checkable
class FunctionOracle(Protocol):
    """Membership-query access to f: {-1,+1}^n -> {-1,+1}.

    Implementations: ConstantFunction, DictatorFunction, ParityFunction,
    MajorityFunction, TreeFunction, TableFunction, RestrictedOracle,
    CountingOracle, CorruptedOracle.

    Implementations must be deterministic and safe for concurrent reads.
    """

    n: int

    def evaluate(self, points: Words) -> npt.NDArray[np.int8]:
        """Evaluate f on a batch of points.

        Args:
            points: (m, ceil(n/64)) uint64 array of packed points.

        Returns:
            (m,) int8 array with entries in {-1, +1}.
        """
        ...
