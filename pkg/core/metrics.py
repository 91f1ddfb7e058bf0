"""
Evaluation measures for consensus partitions.

Pair counts are exact integers throughout; floats only appear in the final
ratios. Contingency tables come from scikit-learn, everything else is
computed from them directly so the degenerate ARI case follows our own rule.
"""

from typing import Optional, Sequence

import numpy as np
from sklearn.metrics import silhouette_score
from sklearn.metrics.cluster import contingency_matrix

from core.errors import DataError, PartitionError
from core.types import Dataset, Ensemble, Partition, validate_partition


def _check_lengths(p1: Partition, p2: Partition) -> int:
    if p1.n != p2.n:
        raise PartitionError(f"partitions have different lengths: {p1.n} vs {p2.n}")
    return p1.n


def _comb2(x):
    return x * (x - 1) // 2


def _pair_counts(p1: Partition, p2: Partition):
    """(together in both, together in p1, together in p2, all pairs)."""
    n = _check_lengths(p1, p2)
    table = contingency_matrix(p1.assignment, p2.assignment).astype(np.int64)
    both = int(_comb2(table).sum())
    first = int(_comb2(table.sum(axis=1)).sum())
    second = int(_comb2(table.sum(axis=0)).sum())
    return both, first, second, n * (n - 1) // 2


def pair_disagreement(p1: Partition, p2: Partition) -> int:
    """Unordered pairs co-clustered in exactly one of p1, p2."""
    both, first, second, _ = _pair_counts(p1, p2)
    return first + second - 2 * both


def partition_difference_objective(p: Partition, ensemble: Ensemble) -> int:
    """Σ over ensemble members of pair_disagreement(member, p)."""
    if p.n != ensemble.n:
        raise PartitionError(f"partition has {p.n} points, ensemble has {ensemble.n}")
    return sum(pair_disagreement(member, p) for member in ensemble.members)


def rand_index(p1: Partition, p2: Partition) -> float:
    """Fraction of unordered pairs on which the two partitions agree."""
    n = _check_lengths(p1, p2)
    if n < 2:
        raise PartitionError("rand index needs at least two points")
    total = n * (n - 1) // 2
    return 1.0 - pair_disagreement(p1, p2) / total


def adjusted_rand_index(p1: Partition, p2: Partition) -> float:
    """
    Chance-corrected Rand index from the contingency table.

    When the expected index equals its maximum (e.g. both partitions all
    singletons) the ratio is undefined; identical partitions then score 1.0
    and anything else 0.0.

    Args:
        p1: First partition
        p2: Second partition, same length

    Returns:
        ARI, at most 1.0
    """
    if _check_lengths(p1, p2) < 2:
        raise PartitionError("ARI needs at least two points")
    both, first, second, total = _pair_counts(p1, p2)
    # ARI = (both − first·second/total) / ((first + second)/2 − first·second/total),
    # scaled by 2·total to stay in integers.
    numerator = 2 * (total * both - first * second)
    denominator = total * (first + second) - 2 * first * second
    if denominator == 0:
        return 1.0 if p1 == p2 else 0.0
    return numerator / denominator


def mean_ari(p: Partition, ensemble: Ensemble) -> float:
    """Consensus criterion: (1/m)·Σ ARI(member, p), summed in member order."""
    if p.n != ensemble.n:
        raise PartitionError(f"partition has {p.n} points, ensemble has {ensemble.n}")
    scores = [adjusted_rand_index(member, p) for member in ensemble.members]
    return float(sum(scores) / len(scores))


def silhouette(dataset: Dataset, p: Partition) -> float:
    """
    Mean Euclidean silhouette coefficient; singletons score 0.

    A partition into n singletons has no defined separation in
    scikit-learn's implementation; every point is a singleton there, so the
    mean is 0.0.
    """
    if p.n != dataset.n:
        raise PartitionError(f"partition has {p.n} points, dataset has {dataset.n}")
    if p.k < 2:
        raise PartitionError(f"silhouette is undefined for k={p.k}")
    if p.k == p.n:
        return 0.0
    value = float(silhouette_score(dataset.points, p.assignment, metric="euclidean"))
    return float(np.clip(value, -1.0, 1.0))


def class_cv(labels: Sequence[int]) -> float:
    """Coefficient of variation of class sizes (population SD / mean)."""
    labels = np.asarray(labels).reshape(-1)
    if labels.size == 0:
        raise DataError("class CV needs at least one label")
    _, sizes = np.unique(labels, return_counts=True)
    return float(sizes.std(ddof=0) / sizes.mean())


def accuracy(p: Partition, labels: Optional[Sequence[int]]) -> Optional[float]:
    """ARI against ground-truth labels, or None for unlabeled data."""
    if labels is None:
        return None
    return adjusted_rand_index(validate_partition(labels, p.n), p)


def clusters_used(p: Partition) -> int:
    return int(np.count_nonzero(p.cluster_sizes()))
