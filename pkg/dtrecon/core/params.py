"""
Parameter ledger

Constants holds every tunable constant of the pipeline (defaults from
config/params.yaml); Params derives the reconstruction parameters from
(n, s, eps, delta).

Integration Contract:
    Input:  Params.create(n, s, eps, delta, constants=None)
    Output: params.d, params.p, params.tau, params.q, params.q_leaf,
            params.per_answer_budget, params.m
    Errors: InvalidArgumentError for anything out of range
"""

import logging
import math

from pydantic import BaseModel, ConfigDict, Field, ValidationError, computed_field

from . import config
from .errors import InvalidArgumentError

logger = logging.getLogger(__name__)


# ============================================================
# DATA MODELS
# ============================================================

class Constants(BaseModel):
    """Hidden constants of the pipeline; all strictly positive."""
    model_config = ConfigDict(frozen=True, extra="forbid")

    c_d: float = Field(gt=0)
    c_p: float = Field(gt=0)
    c_tau: float = Field(gt=0)
    c_q: float = Field(gt=0)
    c_leaf: float = Field(gt=0)
    c_m: float = Field(gt=0)
    kappa: float = Field(gt=1)
    c: float = Field(ge=1)
    c_calls: float = Field(gt=0)


def load_constants(**overrides: float) -> Constants:
    """Constants from config/params.yaml with keyword overrides applied."""
    values = dict(config.load_config("params")["constants"])
    values.update(overrides)
    try:
        return Constants(**values)
    except ValidationError as e:
        raise InvalidArgumentError(f"invalid constants: {e}") from e


def parse_overrides(pairs: list[str]) -> dict[str, float]:
    """["c_d=0.5", "kappa=6"] -> {"c_d": 0.5, "kappa": 6.0}; unknown names rejected."""
    overrides = {}
    for pair in pairs:
        name, sep, value = pair.partition("=")
        name = name.strip()
        if not sep or name not in Constants.model_fields:
            raise InvalidArgumentError(f"unknown constant override {pair!r}")
        try:
            overrides[name] = float(value)
        except ValueError as e:
            raise InvalidArgumentError(f"constant {name} needs a number, got {value!r}") from e
    return overrides


class Params(BaseModel):
    """(n, s, eps, delta) and everything derived from them."""
    model_config = ConfigDict(frozen=True, extra="forbid")

    n: int = Field(ge=1, le=1 << 20)
    s: int = Field(ge=2)
    eps: float = Field(gt=0, lt=1)
    delta: float = Field(gt=0, lt=1)
    constants: Constants

    @classmethod
    def create(
        cls,
        n: int,
        s: int,
        eps: float,
        delta: float,
        constants: Constants | None = None,
    ) -> "Params":
        try:
            params = cls(
                n=n, s=s, eps=eps, delta=delta,
                constants=constants if constants is not None else load_constants(),
            )
        except ValidationError as e:
            raise InvalidArgumentError(f"invalid parameters: {e}") from e
        logger.debug(
            f"[PARAMS] n={n} s={s} eps={eps} delta={delta} d={params.d} "
            f"p={params.p:.4g} tau={params.tau:.4g} q={params.q} q_leaf={params.q_leaf}"
        )
        return params

    @property
    def log_s(self) -> float:
        """max(1, log2 s)."""
        return max(1.0, math.log2(self.s))

    @computed_field
    @property
    def d(self) -> int:
        return min(self.n, math.ceil(self.constants.c_d * self.log_s ** 3 / self.eps ** 3))

    @computed_field
    @property
    def p(self) -> float:
        return min(0.5, self.constants.c_p * self.eps / self.log_s)

    @computed_field
    @property
    def tau(self) -> float:
        return self.constants.c_tau * self.eps ** 3 / self.log_s ** 3

    @property
    def log_inv_node_delta(self) -> float:
        """ln(2^(d+1) / delta), the per-node failure budget."""
        return (self.d + 1) * math.log(2) + math.log(1.0 / self.delta)

    @computed_field
    @property
    def q(self) -> int:
        """Score samples per internal node (accuracy tau/2)."""
        return math.ceil(
            self.constants.c_q
            * (math.log(2 * self.n) + self.log_inv_node_delta)
            / (self.tau / 2.0) ** 2
        )

    @computed_field
    @property
    def q_leaf(self) -> int:
        """Uniform completions per leaf (accuracy eps/4)."""
        return math.ceil(
            self.constants.c_leaf
            * (32.0 / self.eps ** 2)
            * ((self.d + 2) * math.log(2) + math.log(1.0 / self.delta))
        )

    @computed_field
    @property
    def per_answer_budget(self) -> int:
        return self.d * 2 * self.q + self.q_leaf

    @computed_field
    @property
    def m(self) -> int:
        """Tester sample size."""
        return math.ceil(self.constants.c_m * math.log(1.0 / self.delta) / self.eps ** 2)
