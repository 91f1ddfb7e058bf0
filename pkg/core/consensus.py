"""
From annealer bits to consensus partitions, plus the HAC baseline and the
end-to-end pipeline.

Method names map onto model kinds: da-sm is the within-cluster similarity
model, da-cr the correlation model and da-bin the binary-coded model.
"""

import time
from typing import Optional, Tuple

import numpy as np

from core.annealer import anneal
from core.errors import ModelError, PartitionError
from core.qubo import build_model, coupler_matrix
from core.similarity import build_similarity
from core.types import (
    Dataset,
    Ensemble,
    ModelKind,
    Partition,
    QuboModel,
    SimilarityMatrix,
    SolveReport,
    validate_partition,
)
from logger import get_logger
from models.schemas import AnnealParams, BuilderConfig

logger = get_logger(__name__)

METHOD_KINDS = {
    "da-sm": ModelKind.PAIRWISE,
    "da-cr": ModelKind.CORRELATION,
    "da-bin": ModelKind.BINARY,
}


def _as_bits(bits, model: QuboModel) -> np.ndarray:
    q = np.asarray(bits, dtype=np.int64).reshape(-1)
    if q.shape[0] != model.num_vars:
        raise ModelError(f"state has {q.shape[0]} bits, model has {model.num_vars} variables")
    return q


def repair(bits, model: QuboModel) -> np.ndarray:
    """
    Make a one-hot state feasible, one violating point at a time.

    Points are visited in index order. A point with zero or several set slots
    is cleared and then given the single slot with the lowest energy given
    every other bit as it currently stands; ties go to the lowest slot.
    Binary-coded states have no feasibility constraint and come back as is.

    Args:
        bits: 0/1 state of length num_vars
        model: One-hot model the state belongs to

    Returns:
        Feasible 0/1 state (int8)
    """
    q = _as_bits(bits, model).copy()
    if not model.model_kind.one_hot:
        return q.astype(np.int8)

    slots = model.slots
    grid = q.reshape(model.n_points, slots)
    violating = np.flatnonzero(grid.sum(axis=1) != 1)
    if violating.size == 0:
        return q.astype(np.int8)

    matrix = coupler_matrix(model)
    for u in violating:
        block = slice(u * slots, (u + 1) * slots)
        q[block] = 0
        cost = model.biases[block] + matrix[block] @ q
        q[u * slots + int(np.argmin(cost))] = 1
    logger.debug(f"Repaired {violating.size} infeasible point(s)")
    return q.astype(np.int8)


def decode(bits, model: QuboModel) -> Tuple[Partition, int]:
    """
    Read a partition off an annealer state.

    One-hot kinds take each point's set slot; points with zero or several
    set slots are counted as violations and repaired first. The binary kind
    reads each point's bits (bit i of the code at position i) as an integer
    cluster id. Either way the ids are compacted, so empty slots vanish.

    Returns:
        (Partition, number of violating points)
    """
    q = _as_bits(bits, model)
    n, slots = model.n_points, model.slots
    grid = q.reshape(n, slots)

    if not model.model_kind.one_hot:
        codes = grid @ (1 << np.arange(slots, dtype=np.int64))
        return validate_partition(codes, n), 0

    violations = int(np.count_nonzero(grid.sum(axis=1) != 1))
    if violations:
        logger.warning(f"Annealer state violates one-hot constraints at {violations} point(s)")
        grid = repair(q, model).reshape(n, slots)
    return validate_partition(np.argmax(grid, axis=1), n), violations


def hac(sim: SimilarityMatrix, k_target: int) -> Partition:
    """
    Average-linkage agglomerative clustering on co-association similarity.

    Starts from singletons and merges the two clusters with the largest mean
    similarity over cross pairs until k_target remain. Clusters are indexed
    by their lowest member, and ties go to the lexicographically smallest
    index pair.
    """
    n = sim.n
    if not 1 <= k_target <= n:
        raise PartitionError(f"k_target={k_target} must lie in [1, {n}]")

    # Integer pair counts keep equal averages bit-identical.
    weights = sim.counts if sim.m > 0 else sim.s
    totals = np.array(weights, dtype=np.float64)
    np.fill_diagonal(totals, 0.0)
    sizes = np.ones(n, dtype=np.float64)
    members = [[u] for u in range(n)]

    while len(members) > k_target:
        average = totals / np.outer(sizes, sizes)
        average[np.tril_indices(len(members))] = -np.inf
        i, j = np.unravel_index(int(np.argmax(average)), average.shape)

        totals[i, :] += totals[j, :]
        totals[:, i] += totals[:, j]
        totals[i, i] = 0.0
        totals = np.delete(np.delete(totals, j, axis=0), j, axis=1)
        sizes[i] += sizes[j]
        sizes = np.delete(sizes, j)
        members[i].extend(members.pop(j))

    labels = np.empty(n, dtype=np.int64)
    for c, group in enumerate(members):
        labels[group] = c
    return validate_partition(labels, n)


def solve_method(
    sim: SimilarityMatrix,
    method: str,
    k: int,
    params: AnnealParams,
    penalty: Optional[int] = None,
    use_theoretical_penalty: bool = False,
) -> SolveReport:
    """
    Produce one consensus partition with the named method.

    HAC runs directly on the similarity matrix and reports no bits; the
    annealing methods compile their model with K slots and anneal it.
    """
    if method == "hac":
        start = time.perf_counter()
        partition = hac(sim, k)
        return SolveReport(
            best_bits=np.zeros(0, dtype=np.int8),
            best_energy=0,
            partition=partition,
            seed=params.seed,
            wall_time=time.perf_counter() - start,
        )

    if method not in METHOD_KINDS:
        raise ModelError(f"unknown method '{method}'")
    cfg = BuilderConfig(
        k_slots=k, penalty=penalty, use_theoretical_penalty=use_theoretical_penalty
    )
    model = build_model(sim, cfg, METHOD_KINDS[method])
    return anneal(model, params)


def run_consensus(
    dataset: Dataset,
    ensemble: Ensemble,
    method: str,
    k: int,
    params: AnnealParams,
    penalty: Optional[int] = None,
) -> SolveReport:
    """
    Full pipeline for one method: similarity, model, solve, decode, repair.

    Args:
        dataset: Points the ensemble clusters
        ensemble: Base clusterings Π
        method: da-sm, da-cr, da-bin or hac
        k: Cluster slots (an upper bound for da-cr)
        params: Annealer budget and seed
        penalty: Explicit one-hot penalty, overriding the defaults

    Returns:
        SolveReport whose partition is compacted and feasible
    """
    if dataset.n != ensemble.n:
        raise PartitionError(f"dataset has {dataset.n} points, ensemble has {ensemble.n}")
    sim = build_similarity(ensemble)
    report = solve_method(sim, method, k, params, penalty=penalty)
    logger.info(
        f"{method} on {dataset.name} (K={k}): {report.partition.k} clusters, "
        f"energy={report.best_energy}, violations={report.violations}"
    )
    return report
