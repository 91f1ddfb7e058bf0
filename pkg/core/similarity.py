"""Co-association similarity and its integer quantization."""

from fractions import Fraction

import numpy as np

from config import QUANTIZATION_SCALE
from core.errors import DataError, EnsembleError
from core.types import Ensemble, SimilarityMatrix
from logger import get_logger

logger = get_logger(__name__)

# Ensemble sizes stay far below this, so a float count/m recovers its fraction.
MAX_DENOMINATOR = 10**6


def quantize(s: float) -> int:
    """
    Map a similarity in [0, 1] onto the integer scale [0, 100].

    Rounds the exact fraction half up, so quantize(count / m) agrees with the
    count-based matrix: 0.375 -> 38, 2/3 -> 67, 23/40 -> 58.
    """
    if not (0 <= s <= 1):
        raise DataError(f"similarity {s} is outside [0, 1]")
    exact = Fraction(s).limit_denominator(MAX_DENOMINATOR)
    return (2 * QUANTIZATION_SCALE * exact.numerator + exact.denominator) // (
        2 * exact.denominator
    )


def _quantize_counts(counts: np.ndarray, m: int) -> np.ndarray:
    # Exact round-half-up of 100·count/m in integer arithmetic
    return (2 * QUANTIZATION_SCALE * counts + m) // (2 * m)


def build_similarity(ensemble: Ensemble) -> SimilarityMatrix:
    """
    Co-association matrix: s_uv is the fraction of members placing u and v
    together.

    Args:
        ensemble: Base clusterings over the same points

    Returns:
        SimilarityMatrix with s, its quantization and the raw pair counts
    """
    lengths = {member.n for member in ensemble.members}
    if len(lengths) != 1:
        raise EnsembleError(f"inconsistent member lengths {sorted(lengths)}")

    labels = ensemble.matrix()
    m, n = labels.shape
    counts = np.zeros((n, n), dtype=np.int64)
    for row in labels:
        counts += row[:, None] == row[None, :]

    s = counts / m
    np.fill_diagonal(s, 1.0)
    quantized = _quantize_counts(counts, m)
    np.fill_diagonal(quantized, QUANTIZATION_SCALE)

    logger.debug(f"Similarity matrix built: n={n}, m={m}, mean s={s.mean():.3f}")
    return SimilarityMatrix(s=s, quantized=quantized, counts=counts, m=m)


def similarity_from_matrix(s: np.ndarray, m: int = 0) -> SimilarityMatrix:
    """Wrap a precomputed co-association matrix (m=0 when counts are unknown)."""
    s = np.array(s, dtype=np.float64)
    if s.ndim != 2 or s.shape[0] != s.shape[1]:
        raise DataError(f"similarity must be square, got {s.shape}")
    if np.any(s < 0) or np.any(s > 1):
        raise DataError("similarity values must lie in [0, 1]")
    s = s.copy()
    np.fill_diagonal(s, 1.0)
    if m > 0:
        counts = np.rint(s * m).astype(np.int64)
        quantized = _quantize_counts(counts, m)
    else:
        counts = np.zeros_like(s, dtype=np.int64)
        quantized = np.array([[quantize(x) for x in row] for row in s], dtype=np.int64)
    np.fill_diagonal(quantized, QUANTIZATION_SCALE)
    return SimilarityMatrix(s=s, quantized=quantized, counts=counts, m=m)


def dump_quantized(sim: SimilarityMatrix, path: str) -> None:
    """Write the n×n quantized matrix as integer CSV for debugging."""
    np.savetxt(path, sim.quantized, fmt="%d", delimiter=",")
    logger.debug(f"Quantized similarity written to {path}")
