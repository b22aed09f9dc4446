"""
Bit-packed point batches.

A batch of m points in {-1,+1}^n is an (m, W) uint64 array, W = ceil(n/64).
Coordinate i lives in word i >> 6 at bit i & 63; a stored 1 encodes +1.
Bits at positions >= n are always zero.
"""

import numpy as np
import numpy.typing as npt

Words = npt.NDArray[np.uint64]

_ONE = np.uint64(1)
_ALL_ONES = np.uint64(0xFFFFFFFFFFFFFFFF)


def n_words(n: int) -> int:
    """Number of uint64 words holding n coordinates."""
    return (n + 63) >> 6


def tail_mask(n: int) -> np.uint64:
    """Mask of the valid bits in the last word."""
    rem = n & 63
    return _ALL_ONES if rem == 0 else np.uint64((1 << rem) - 1)


def random_words(rng: np.random.Generator, m: int, n: int) -> Words:
    """m uniform points of dimension n."""
    words = rng.integers(
        0, np.iinfo(np.uint64).max, size=(m, n_words(n)), dtype=np.uint64, endpoint=True
    )
    words[:, -1] &= tail_mask(n)
    return words


def pack_bool(bits: npt.NDArray[np.bool_]) -> Words:
    """Pack an (m, n) boolean array into (m, W) words (little-endian bit order)."""
    m, n = bits.shape
    width = n_words(n) * 64
    if width != n:
        padded = np.zeros((m, width), dtype=bool)
        padded[:, :n] = bits
        bits = padded
    packed = np.packbits(bits, axis=1, bitorder="little")
    return np.ascontiguousarray(packed).view(np.dtype("<u8")).astype(np.uint64)


def unpack_bool(words: Words, n: int) -> npt.NDArray[np.bool_]:
    """Unpack (m, W) words into an (m, n) boolean array."""
    raw = np.ascontiguousarray(words.astype(np.dtype("<u8"))).view(np.uint8)
    return np.unpackbits(raw, axis=1, count=n, bitorder="little").astype(bool)


def bit_column(words: Words, i: int) -> npt.NDArray[np.bool_]:
    """Coordinate i of every row, True for +1."""
    shift = np.uint64(i & 63)
    return ((words[:, i >> 6] >> shift) & _ONE).astype(bool)


def int_to_words(bits: int, n: int) -> Words:
    """Packed Python int -> (W,) words."""
    raw = bits.to_bytes(8 * n_words(n), "little")
    return np.frombuffer(raw, dtype=np.dtype("<u8")).astype(np.uint64)


def words_to_int(row: Words) -> int:
    """(W,) words -> packed Python int."""
    return int.from_bytes(np.ascontiguousarray(row.astype(np.dtype("<u8"))).tobytes(), "little")


def all_points(n: int, start: int = 0, stop: int | None = None) -> Words:
    """Points with packed index in [start, stop), as a one-word batch (n <= 64)."""
    stop = (1 << n) if stop is None else stop
    return np.arange(start, stop, dtype=np.uint64).reshape(-1, 1)


def mix64(z: Words) -> Words:
    """SplitMix64 finalizer applied elementwise."""
    with np.errstate(over="ignore"):
        z = (z ^ (z >> np.uint64(30))) * np.uint64(0xBF58476D1CE4E5B9)
        z = (z ^ (z >> np.uint64(27))) * np.uint64(0x94D049BB133111EB)
        return z ^ (z >> np.uint64(31))


def hash_rows(words: Words, seed: int) -> Words:
    """Deterministic 64-bit hash of every row, keyed by seed."""
    with np.errstate(over="ignore"):
        h = np.full(words.shape[0], np.uint64(seed & 0xFFFFFFFFFFFFFFFF), dtype=np.uint64)
        h = mix64(h + np.uint64(0x9E3779B97F4A7C15))
        for j in range(words.shape[1]):
            h = mix64(h ^ (words[:, j] + np.uint64((0x9E3779B97F4A7C15 * (j + 1)) & 0xFFFFFFFFFFFFFFFF)))
    return h


def unit_uniform(h: Words) -> npt.NDArray[np.float64]:
    """Map 64-bit hashes to floats in [0, 1)."""
    return (h >> np.uint64(11)).astype(np.float64) * (1.0 / (1 << 53))
