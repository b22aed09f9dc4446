"""
Tolerant tester for decision-tree proximity

Answers m uniform points through a fresh reconstructor and rejects iff the
empirical mismatch with f exceeds kappa * eps.
"""

import logging
from dataclasses import dataclass
from typing import Literal

import numpy as np

from .bits import random_words
from .boolfn import CountingOracle, Point
from .errors import InvalidArgumentError
from .params import Constants, Params, load_constants
from .protocols import FunctionOracle
from .reconstructor import Reconstructor

logger = logging.getLogger(__name__)

Verdict = Literal["accept", "reject"]


@dataclass(frozen=True)
class TestOutcome:
    """Result of one tolerant test; verdict is reject iff mismatch > threshold."""
    __test__ = False

    verdict: Verdict
    mismatch: float
    m: int
    threshold: float
    d: int
    queries: int
    max_per_answer: int

    @property
    def accepted(self) -> bool:
        return self.verdict == "accept"


def tolerant_test(
    f: FunctionOracle,
    s: int,
    eps: float,
    delta: float,
    kappa: float | None = None,
    constants: Constants | None = None,
    seed: int = 0,
) -> TestOutcome:
    """
    Accept w.h.p. if f is eps-close to a size-s tree; reject w.h.p. if f is
    far from every tree of the reconstructor's depth d.

    Args:
        f: oracle under test.
        s, eps, delta: target size, distance and failure probability.
        kappa: reject multiplier (> 1); defaults to the ledger's kappa.
        constants: constant ledger; defaults to config/params.yaml.
        seed: seeds both the sample points and the reconstructor tape.
    """
    constants = constants if constants is not None else load_constants()
    kappa = constants.kappa if kappa is None else kappa
    if kappa <= 1.0:
        raise InvalidArgumentError(f"kappa must be > 1, got {kappa}")
    params = Params.create(f.n, s, eps, delta, constants)

    sample_seq, tape_seq = np.random.SeedSequence(seed).spawn(2)
    rng = np.random.default_rng(sample_seq)
    tape_seed = int(tape_seq.generate_state(1, dtype=np.uint64)[0])

    direct = CountingOracle(f)
    reconstructor = Reconstructor(f, params, seed=tape_seed, mode="local")

    points = random_words(rng, params.m, f.n)
    truth = direct.evaluate(points)
    answers = np.array(
        [reconstructor.answer(Point.from_words(row, f.n)) for row in points], dtype=np.int8
    )
    mismatch = float(np.count_nonzero(truth != answers)) / params.m
    threshold = kappa * eps
    verdict: Verdict = "reject" if mismatch > threshold else "accept"

    stats = reconstructor.query_stats()
    outcome = TestOutcome(
        verdict=verdict,
        mismatch=mismatch,
        m=params.m,
        threshold=threshold,
        d=params.d,
        queries=direct.count + stats.total,
        max_per_answer=stats.max_per_answer,
    )
    logger.info(
        f"[TESTER] {verdict}: mismatch {mismatch:.4f} vs threshold {threshold:.4f} "
        f"(m={params.m}, d={params.d}, queries={outcome.queries})"
    )
    return outcome
