"""
Noise-sensitivity estimators

p-noisy copies, the two-query unbiased score sample and its batched mean,
plus the exact enumerations used to audit them.

Integration Contract:
    Input:  FunctionOracle f, noise rate p in (0, 1), numpy Generator
    Output: estimate_scores(...) -> float64 array of length n
            (exactly 2q oracle queries, q = score_sample_count(...))

A p-noisy copy rerandomizes each coordinate with probability p, so each
coordinate flips with probability p/2.
"""

import logging
import math

import numpy as np
import numpy.typing as npt

from . import config
from .bits import Words, pack_bool, random_words, unpack_bool
from .boolfn import Point
from .bruteforce import TruthTable, exact_ns, popcounts
from .errors import InvalidArgumentError, UnsupportedScaleError
from .protocols import FunctionOracle

logger = logging.getLogger(__name__)


def _check_rate(p: float) -> None:
    if not 0.0 < p < 1.0:
        raise InvalidArgumentError(f"noise rate must be in (0, 1), got {p}")


def _block_rows(n: int) -> int:
    return max(1, int(config.sampling("block_elements")) // max(64, n))


# ============================================================
# NOISY COPIES
# ============================================================

def noisy_copies(words: Words, n: int, p: float, rng: np.random.Generator) -> Words:
    """Row-wise p-noisy copies of a packed batch."""
    _check_rate(p)
    m = words.shape[0]
    rerandomize = pack_bool(rng.random((m, n)) < p)
    fresh = random_words(rng, m, n)
    return (words & ~rerandomize) | (fresh & rerandomize)


def noisy_copy(x: Point, p: float, rng: np.random.Generator) -> Point:
    """y with each coordinate of x independently rerandomized with probability p."""
    row = noisy_copies(x.to_words().reshape(1, -1), x.n, p, rng)
    return Point.from_words(row[0], x.n)


# ============================================================
# SCORE SAMPLES
# ============================================================

def score_sample_from_pair(
    f: FunctionOracle, x: Point, y: Point, p: float
) -> npt.NDArray[np.float64]:
    """eta_i = 1[f(x) != f(y)] * (1 - 1[x_i = y_i] / (1 - p/2)) for every i."""
    _check_rate(p)
    if x.n != f.n or y.n != f.n:
        raise InvalidArgumentError("points must match the oracle dimension")
    batch = np.stack((x.to_words(), y.to_words()))
    fx, fy = f.evaluate(batch)
    if fx == fy:
        return np.zeros(f.n)
    agree = np.array(x.to_signs()) == np.array(y.to_signs())
    return 1.0 - agree / (1.0 - p / 2.0)


def unbiased_score_sample(
    f: FunctionOracle, p: float, rng: np.random.Generator
) -> npt.NDArray[np.float64]:
    """One (x, y) draw, exactly two oracle queries, all n estimates."""
    x = Point.random(f.n, rng)
    return score_sample_from_pair(f, x, noisy_copy(x, p, rng), p)


def mean_score_samples(
    f: FunctionOracle, p: float, q: int, rng: np.random.Generator
) -> npt.NDArray[np.float64]:
    """Coordinate-wise mean of q score samples; exactly 2q oracle queries."""
    _check_rate(p)
    if q < 1:
        raise InvalidArgumentError(f"sample count must be >= 1, got {q}")
    n = f.n
    mismatches = 0
    agree_counts = np.zeros(n, dtype=np.int64)
    rows = _block_rows(n)
    for start in range(0, q, rows):
        m = min(rows, q - start)
        x = random_words(rng, m, n)
        y = noisy_copies(x, n, p, rng)
        differ = f.evaluate(x) != f.evaluate(y)
        mismatches += int(np.count_nonzero(differ))
        if differ.any():
            agree = ~unpack_bool(x[differ] ^ y[differ], n)
            agree_counts += agree.sum(axis=0)
    return (mismatches - agree_counts / (1.0 - p / 2.0)) / q


def score_sample_count(n: int, tau: float, log_inv_delta: float, c_q: float = 2.0) -> int:
    """q = ceil(c_q * (ln(2n) + ln(1/delta)) / tau^2)."""
    return math.ceil(c_q * (math.log(2 * n) + log_inv_delta) / tau ** 2)


def estimate_scores(
    f: FunctionOracle,
    p: float,
    tau: float,
    delta: float,
    rng: np.random.Generator,
    c_q: float = 2.0,
) -> npt.NDArray[np.float64]:
    """All n scores to +/-tau with probability >= 1 - delta."""
    if not 0.0 < tau < 1.0:
        raise InvalidArgumentError(f"accuracy must be in (0, 1), got {tau}")
    if not 0.0 < delta < 1.0:
        raise InvalidArgumentError(f"failure probability must be in (0, 1), got {delta}")
    q = score_sample_count(f.n, tau, math.log(1.0 / delta), c_q)
    logger.debug(f"[SCORES] n={f.n} p={p:.4g} tau={tau:.4g} q={q}")
    return mean_score_samples(f, p, q, rng)


# ============================================================
# EXACT AUDITS
# ============================================================

def mismatch_profile(t: TruthTable) -> npt.NDArray[np.float64]:
    """A(z) = Pr_x[f(x) != f(x xor z)] for every flip pattern z, by enumeration."""
    max_n = config.limit("identity_max_n")
    if t.n > max_n:
        raise UnsupportedScaleError("mismatch_profile", t.n, max_n)
    size = 1 << t.n
    idx = np.arange(size, dtype=np.int64)
    return np.array(
        [np.count_nonzero(t.values != t.values[idx ^ z]) / size for z in range(size)]
    )


def _channel_weights(n: int, p: float) -> npt.NDArray[np.float64]:
    """Pr[y = x xor z] for every z under the p-noisy channel."""
    flips = popcounts(n)
    return (p / 2.0) ** flips * (1.0 - p / 2.0) ** (n - flips)


def _agree_mass(t: TruthTable, p: float) -> tuple[float, npt.NDArray[np.float64]]:
    """(Pr[f(x) != f(y)], Pr[f(x) != f(y) and x_i = y_i] per i)."""
    joint = _channel_weights(t.n, p) * mismatch_profile(t)
    idx = np.arange(1 << t.n, dtype=np.int64)
    agree = np.array([joint[(idx >> i) & 1 == 0].sum() for i in range(t.n)])
    return float(joint.sum()), agree


def exact_estimator_expectation(t: TruthTable, p: float) -> npt.NDArray[np.float64]:
    """E[eta_i] over the full (x, y) channel, for every i."""
    _check_rate(p)
    total, agree = _agree_mass(t, p)
    return total - agree / (1.0 - p / 2.0)


def conditional_ns_identity_check(
    f: FunctionOracle | TruthTable, p: float
) -> tuple[npt.NDArray[np.float64], npt.NDArray[np.float64]]:
    """
    Both sides of E_b[NS_p(f_{x_i=b})] = Pr[f(x) != f(y) and x_i = y_i] / (1 - p/2),
    each computed exactly and independently (restricted spectra vs. channel
    enumeration).
    """
    _check_rate(p)
    t = f if isinstance(f, TruthTable) else TruthTable.from_oracle(f)
    max_n = config.limit("identity_max_n")
    if t.n > max_n:
        raise UnsupportedScaleError("conditional_ns_identity_check", t.n, max_n)
    lhs = np.array([
        0.5 * (exact_ns(t.restrict(i, -1), p) + exact_ns(t.restrict(i, 1), p))
        for i in range(t.n)
    ])
    _, agree = _agree_mass(t, p)
    return lhs, agree / (1.0 - p / 2.0)
