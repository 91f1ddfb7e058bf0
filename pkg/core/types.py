"""
Domain types shared by every stage of the consensus pipeline.

All types are frozen dataclasses holding read-only numpy arrays, so they can
be handed to worker threads without copying. Validation happens at
construction; nothing here runs an algorithm.
"""

from dataclasses import dataclass, field
from enum import Enum
from fractions import Fraction
from typing import Dict, Iterable, Optional, Sequence, Tuple

import numpy as np

from core.errors import DataError, EnsembleError, ModelError, PartitionError


class ModelKind(str, Enum):
    PAIRWISE = "pairwise"
    CORRELATION = "correlation"
    BINARY = "binary"

    @property
    def one_hot(self) -> bool:
        return self is not ModelKind.BINARY


def _frozen(array: np.ndarray) -> np.ndarray:
    array.setflags(write=False)
    return array


@dataclass(frozen=True, eq=False)
class Dataset:
    """n points × d features with optional ground-truth class ids."""

    points: np.ndarray
    labels: Optional[np.ndarray] = None
    name: str = "dataset"

    def __post_init__(self):
        points = np.array(self.points, dtype=np.float64)
        if points.ndim != 2:
            raise DataError(f"points must be a 2-D matrix, got shape {points.shape}")
        n, d = points.shape
        if n < 2 or d < 1:
            raise DataError(f"dataset needs n >= 2 and d >= 1, got n={n}, d={d}")
        if not np.all(np.isfinite(points)):
            raise DataError("dataset contains non-finite feature values")
        object.__setattr__(self, "points", _frozen(points))

        if self.labels is not None:
            labels = np.array(self.labels, dtype=np.int64).reshape(-1)
            if labels.shape[0] != n:
                raise DataError(f"expected {n} labels, got {labels.shape[0]}")
            num_classes = int(np.unique(labels).size)
            if labels.min() < 0 or labels.max() >= num_classes:
                raise DataError(
                    f"labels must be class ids in [0, {num_classes}), "
                    f"got range [{labels.min()}, {labels.max()}]"
                )
            object.__setattr__(self, "labels", _frozen(labels))

    @property
    def n(self) -> int:
        return int(self.points.shape[0])

    @property
    def d(self) -> int:
        return int(self.points.shape[1])

    @property
    def num_classes(self) -> Optional[int]:
        if self.labels is None:
            return None
        return int(np.unique(self.labels).size)


@dataclass(frozen=True, eq=False)
class Partition:
    """A compacted cluster assignment; build it through validate_partition()."""

    assignment: np.ndarray
    k: int

    def __post_init__(self):
        assignment = np.array(self.assignment, dtype=np.int64).reshape(-1)
        if assignment.size == 0:
            raise PartitionError("partition is empty")
        present = np.unique(assignment)
        if present.size != self.k or present[0] != 0 or present[-1] != self.k - 1:
            raise PartitionError(
                f"cluster ids must cover exactly [0, {self.k}), got {present.tolist()}"
            )
        object.__setattr__(self, "assignment", _frozen(assignment))

    @property
    def n(self) -> int:
        return int(self.assignment.shape[0])

    def cluster_sizes(self) -> np.ndarray:
        return np.bincount(self.assignment, minlength=self.k)

    def __len__(self) -> int:
        return self.n

    def __eq__(self, other) -> bool:
        if not isinstance(other, Partition):
            return NotImplemented
        return self.k == other.k and np.array_equal(self.assignment, other.assignment)

    def __hash__(self) -> int:
        return hash((self.k, self.assignment.tobytes()))

    def __repr__(self) -> str:
        return f"Partition(k={self.k}, assignment={self.assignment.tolist()})"


def validate_partition(assignment: Iterable[int], n: Optional[int] = None) -> Partition:
    """
    Compact arbitrary cluster ids to [0, k) in order of first appearance.

    Args:
        assignment: Cluster id per point (any hashable integers)
        n: Expected number of points, checked when given

    Returns:
        Canonical Partition, e.g. [2, 0, 1, 0] -> [0, 1, 2, 1]
    """
    raw = np.asarray(list(assignment) if not isinstance(assignment, np.ndarray) else assignment)
    raw = raw.reshape(-1)
    if raw.size == 0:
        raise PartitionError("cannot build a partition from an empty assignment")
    if n is not None and raw.size != n:
        raise PartitionError(f"assignment has {raw.size} entries, expected {n}")

    _, first_seen, inverse = np.unique(raw, return_index=True, return_inverse=True)
    rank = np.empty(first_seen.size, dtype=np.int64)
    rank[np.argsort(first_seen)] = np.arange(first_seen.size)
    return Partition(rank[inverse.reshape(-1)], int(first_seen.size))


def same_partition(a: Partition, b: Partition) -> bool:
    """Set-partition equality (labels already canonical, so arrays must match)."""
    return a == b


@dataclass(frozen=True, eq=False)
class Ensemble:
    """m base clusterings over the same n points."""

    members: Tuple[Partition, ...]
    generator_seed: int = 0

    def __post_init__(self):
        members = tuple(self.members)
        if not members:
            raise EnsembleError("ensemble needs at least one member")
        sizes = {member.n for member in members}
        if len(sizes) != 1:
            raise EnsembleError(f"ensemble members have inconsistent lengths {sorted(sizes)}")
        object.__setattr__(self, "members", members)

    @property
    def m(self) -> int:
        return len(self.members)

    @property
    def n(self) -> int:
        return self.members[0].n

    def matrix(self) -> np.ndarray:
        """m × n label matrix."""
        return np.vstack([member.assignment for member in self.members])

    def mean_clusters(self) -> float:
        return float(np.mean([member.k for member in self.members]))

    def __eq__(self, other) -> bool:
        if not isinstance(other, Ensemble):
            return NotImplemented
        return self.generator_seed == other.generator_seed and self.members == other.members

    def __hash__(self) -> int:
        return hash((self.generator_seed, self.members))


@dataclass(frozen=True, eq=False)
class SimilarityMatrix:
    """Co-association fractions s and their integer quantization on [0, 100]."""

    s: np.ndarray
    quantized: np.ndarray
    counts: np.ndarray
    m: int

    def __post_init__(self):
        s = np.array(self.s, dtype=np.float64)
        quantized = np.array(self.quantized, dtype=np.int64)
        counts = np.array(self.counts, dtype=np.int64)
        if s.ndim != 2 or s.shape[0] != s.shape[1] or s.shape != quantized.shape:
            raise DataError(f"similarity matrices must be square and aligned, got {s.shape}")
        if not np.array_equal(s, s.T) or not np.array_equal(quantized, quantized.T):
            raise DataError("similarity matrix is not symmetric")
        if s.min() < 0 or s.max() > 1 or quantized.min() < 0 or quantized.max() > 100:
            raise DataError("similarity values out of range")
        object.__setattr__(self, "s", _frozen(s))
        object.__setattr__(self, "quantized", _frozen(quantized))
        object.__setattr__(self, "counts", _frozen(counts))

    @property
    def n(self) -> int:
        return int(self.s.shape[0])

    @property
    def dissimilarity(self) -> np.ndarray:
        """100 − D_uv, the quantized form of (1 − S_uv)."""
        return 100 - self.quantized


@dataclass(frozen=True, eq=False)
class QuboModel:
    """
    Integer QUBO over binary variables.

    Couplers are stored in canonical COO form: parallel arrays rows < cols,
    sorted, without duplicates. var_map[i] is the (point, slot) pair the
    variable encodes; slot is a cluster id for one-hot kinds and a bit
    position for the binary kind. offset is the constant carried out of the
    penalty expansion, so energies of feasible states equal the objective.
    """

    num_vars: int
    biases: np.ndarray
    rows: np.ndarray
    cols: np.ndarray
    values: np.ndarray
    var_map: Tuple[Tuple[int, int], ...]
    penalty_weight: int
    model_kind: ModelKind
    offset: int = 0
    n_points: int = 0
    slots: int = 0

    def __post_init__(self):
        biases = np.array(self.biases, dtype=np.int64).reshape(-1)
        rows = np.array(self.rows, dtype=np.int64).reshape(-1)
        cols = np.array(self.cols, dtype=np.int64).reshape(-1)
        values = np.array(self.values, dtype=np.int64).reshape(-1)
        if self.num_vars < 1:
            raise ModelError("model has no variables")
        if biases.shape[0] != self.num_vars:
            raise ModelError(f"expected {self.num_vars} biases, got {biases.shape[0]}")
        if not (rows.shape == cols.shape == values.shape):
            raise ModelError("coupler arrays are misaligned")
        if rows.size and (np.any(rows >= cols) or cols.max() >= self.num_vars or rows.min() < 0):
            raise ModelError("coupler keys must satisfy i < j < num_vars")
        if len(self.var_map) != self.num_vars:
            raise ModelError("var_map must cover every variable exactly once")
        object.__setattr__(self, "biases", _frozen(biases))
        object.__setattr__(self, "rows", _frozen(rows))
        object.__setattr__(self, "cols", _frozen(cols))
        object.__setattr__(self, "values", _frozen(values))
        object.__setattr__(self, "model_kind", ModelKind(self.model_kind))
        object.__setattr__(self, "var_map", tuple(tuple(v) for v in self.var_map))

    @property
    def couplers(self) -> Dict[Tuple[int, int], int]:
        return {
            (int(i), int(j)): int(c) for i, j, c in zip(self.rows, self.cols, self.values)
        }

    @property
    def num_couplers(self) -> int:
        return int(self.rows.shape[0])

    def variable(self, point: int, slot: int) -> int:
        """Index of q_{point,slot}; variables are laid out point-major."""
        return point * self.slots + slot

    def max_abs_coefficient(self) -> int:
        peak = int(np.abs(self.biases).max()) if self.num_vars else 0
        if self.values.size:
            peak = max(peak, int(np.abs(self.values).max()))
        return peak


@dataclass(frozen=True, eq=False)
class IsingModel:
    """Spin model with exact rational coefficients."""

    num_spins: int
    h: Tuple[Fraction, ...]
    j: Dict[Tuple[int, int], Fraction]
    offset: Fraction = Fraction(0)


@dataclass(frozen=True, eq=False)
class SolveReport:
    """What a consensus solve produced, including the raw annealer state."""

    best_bits: np.ndarray
    best_energy: int
    partition: Partition
    violations: int = 0
    repaired: bool = False
    sweeps_done: int = 0
    seed: int = 0
    wall_time: float = 0.0
    model_kind: Optional[ModelKind] = None
    trace: Sequence[Tuple[int, int, int, int, float]] = field(default_factory=tuple)

    def __post_init__(self):
        object.__setattr__(
            self, "best_bits", _frozen(np.array(self.best_bits, dtype=np.int8).reshape(-1))
        )
