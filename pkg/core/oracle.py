"""
Brute-force references for small instances: set-partition enumeration and
exhaustive QUBO minimization. Tests use these; the pipeline never does.
"""

from typing import Iterator, List, Optional, Tuple

import numpy as np

from config import MAX_BRUTE_FORCE_VARS, MAX_CONSENSUS_POINTS, MAX_ENUMERATION_POINTS
from core.errors import OracleError
from core.qubo import binary_width, coupler_matrix, eval_objective, eval_qubo_batch
from core.types import ModelKind, Partition, QuboModel, SimilarityMatrix
from logger import get_logger

logger = get_logger(__name__)

CHUNK_BITS = 16


def bell_number(n: int) -> int:
    """Number of set partitions of n items (Bell triangle)."""
    if n < 0:
        raise OracleError(f"n must be non-negative, got {n}")
    row = [1]
    for _ in range(n):
        nxt = [row[-1]]
        for value in row:
            nxt.append(nxt[-1] + value)
        row = nxt
    return row[0]


def enumerate_partitions(n: int, k_max: Optional[int] = None) -> Iterator[Partition]:
    """
    Every set partition of n items exactly once, as restricted growth strings
    in lexicographic order: a[0] = 0 and a[i] <= 1 + max(a[:i]).

    Args:
        n: Number of items, 1 <= n <= 12
        k_max: Skip partitions with more than k_max blocks

    Yields:
        Canonical Partition objects
    """
    if not 1 <= n <= MAX_ENUMERATION_POINTS:
        raise OracleError(f"enumeration supports 1 <= n <= {MAX_ENUMERATION_POINTS}, got {n}")
    limit = n if k_max is None else k_max
    if limit < 1:
        raise OracleError(f"k_max must be >= 1, got {k_max}")

    growth: List[int] = [0] * n

    def extend(i: int, used: int) -> Iterator[Partition]:
        if i == n:
            yield Partition(np.array(growth, dtype=np.int64), used)
            return
        for block in range(min(used + 1, limit)):
            growth[i] = block
            yield from extend(i + 1, max(used, block + 1))

    yield from extend(1, 1)


def brute_force_consensus(
    sim: SimilarityMatrix, kind: ModelKind, k_max: int
) -> Tuple[Partition, int]:
    """
    Global minimum of eval_objective over all partitions with <= k_max blocks.

    Ties keep the first partition in enumeration order. The binary kind codes
    cluster c as c in ceil(log2 k_max) bits.
    """
    if sim.n > MAX_CONSENSUS_POINTS:
        raise OracleError(f"brute-force consensus supports n <= {MAX_CONSENSUS_POINTS}, got {sim.n}")
    kind = ModelKind(kind)
    bits = max(1, binary_width(k_max)) if kind is ModelKind.BINARY else None

    best: Optional[Partition] = None
    best_value = 0
    for partition in enumerate_partitions(sim.n, k_max):
        value = eval_objective(partition, sim, kind, bits=bits)
        if best is None or value < best_value:
            best, best_value = partition, value
    return best, best_value


def _states(start: int, stop: int, num_vars: int) -> np.ndarray:
    # Variable 0 is the most significant bit, so integer order is lexicographic order.
    shifts = np.arange(num_vars - 1, -1, -1, dtype=np.int64)
    return (np.arange(start, stop, dtype=np.int64)[:, None] >> shifts) & 1


def brute_force_qubo(model: QuboModel) -> Tuple[np.ndarray, int]:
    """
    Exhaustive QUBO minimum.

    Ties go to the lexicographically smallest bit-vector (variable 0 first).

    Returns:
        (bits as int8, energy including the model offset)
    """
    num_vars = model.num_vars
    if num_vars > MAX_BRUTE_FORCE_VARS:
        raise OracleError(
            f"brute-force QUBO supports <= {MAX_BRUTE_FORCE_VARS} variables, got {num_vars}"
        )

    total = 1 << num_vars
    chunk = 1 << CHUNK_BITS
    best_index, best_energy = 0, None
    for start in range(0, total, chunk):
        stop = min(start + chunk, total)
        energies = eval_qubo_batch(_states(start, stop, num_vars), model)
        local = int(np.argmin(energies))
        if best_energy is None or energies[local] < best_energy:
            best_index, best_energy = start + local, int(energies[local])

    logger.debug(f"Brute-force QUBO over {total} states: minimum {best_energy}")
    return _states(best_index, best_index + 1, num_vars)[0].astype(np.int8), best_energy


def has_improving_flip(bits, model: QuboModel) -> bool:
    """True when some single-bit flip strictly lowers the energy of `bits`."""
    q = np.asarray(bits, dtype=np.int64).reshape(-1)
    if q.shape[0] != model.num_vars:
        raise OracleError(f"state has {q.shape[0]} bits, model has {model.num_vars} variables")
    local = coupler_matrix(model) @ q
    delta = (1 - 2 * q) * (model.biases + local)
    return bool(np.any(delta < 0))
