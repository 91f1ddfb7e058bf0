"""
Compile consensus objectives into integer QUBO models.

Three formulations share one layout convention: variable u*slots + c is
q_{u,c}, point-major. The one-hot kinds expand A·(Σ_c q_uc − 1)² into a
bias of −A per variable, +2A between slots of the same point, and a constant
A·n that is carried as the model offset.
"""

from fractions import Fraction
from typing import List, Optional, Sequence

import numpy as np
from scipy import sparse

from config import MAX_COEFFICIENT, QUANTIZATION_SCALE
from core.errors import ModelError, PartitionError
from core.types import IsingModel, ModelKind, Partition, QuboModel, SimilarityMatrix
from logger import get_logger
from models.schemas import BuilderConfig

logger = get_logger(__name__)


def theoretical_penalty(n: int) -> int:
    """Penalty bound B >= n on the quantized scale, i.e. 100·n."""
    if n < 1:
        raise ModelError(f"penalty bound needs n >= 1, got {n}")
    return QUANTIZATION_SCALE * n


def penalty_for(kind: ModelKind, cfg: BuilderConfig, n: int) -> int:
    """Pick the one-hot weight: theoretical bound, explicit override, or the kind default."""
    if cfg.use_theoretical_penalty:
        return theoretical_penalty(n)
    if cfg.penalty is not None:
        return cfg.penalty
    return cfg.default_penalty(ModelKind(kind).value)


def binary_width(k_slots: int) -> int:
    """Bits needed to give k_slots clusters distinct codes: ceil(log2 K)."""
    return (k_slots - 1).bit_length()


def _check_coefficient_range(n: int, penalty: int) -> None:
    bound = QUANTIZATION_SCALE * n + 2 * penalty
    if bound > MAX_COEFFICIENT:
        raise ModelError(f"coefficient bound {bound} overflows 64-bit integers")


def _assemble(
    num_vars: int,
    biases: np.ndarray,
    parts: List[tuple],
    **fields,
) -> QuboModel:
    """Sum duplicate coupler contributions and store them canonically (i < j, sorted)."""
    if parts:
        rows = np.concatenate([p[0] for p in parts]).astype(np.int64)
        cols = np.concatenate([p[1] for p in parts]).astype(np.int64)
        vals = np.concatenate([p[2] for p in parts]).astype(np.int64)
    else:
        rows = cols = vals = np.zeros(0, dtype=np.int64)

    upper = sparse.coo_matrix((vals, (rows, cols)), shape=(num_vars, num_vars)).tocsr()
    upper.sum_duplicates()
    upper.eliminate_zeros()
    upper.sort_indices()
    canonical = upper.tocoo()
    return QuboModel(
        num_vars=num_vars,
        biases=biases,
        rows=canonical.row,
        cols=canonical.col,
        values=canonical.data,
        **fields,
    )


def _one_hot_parts(sim: SimilarityMatrix, k_slots: int, penalty: int):
    n = sim.n
    iu, iv = np.triu_indices(n, 1)
    slots = np.arange(k_slots)
    weight = sim.dissimilarity[iu, iv]

    same_slot = (
        (iu[:, None] * k_slots + slots).ravel(),
        (iv[:, None] * k_slots + slots).ravel(),
        np.repeat(weight, k_slots),
    )

    ic, il = np.triu_indices(k_slots, 1)
    points = np.arange(n)[:, None] * k_slots
    one_hot = (
        (points + ic).ravel(),
        (points + il).ravel(),
        np.full(n * ic.size, 2 * penalty, dtype=np.int64),
    )
    return iu, iv, [same_slot, one_hot]


def _one_hot_model(
    sim: SimilarityMatrix, cfg: BuilderConfig, kind: ModelKind
) -> QuboModel:
    n, k_slots = sim.n, cfg.k_slots
    if n < 2:
        raise ModelError(f"need at least 2 points, got {n}")
    if k_slots < 2:
        raise ModelError(f"one-hot models need K >= 2, got {k_slots}")
    penalty = penalty_for(kind, cfg, n)
    _check_coefficient_range(n, penalty)

    iu, iv, parts = _one_hot_parts(sim, k_slots, penalty)
    if kind is ModelKind.CORRELATION:
        c_idx, l_idx = np.nonzero(~np.eye(k_slots, dtype=bool))
        similarity = sim.quantized[iu, iv]
        parts.append(
            (
                (iu[:, None] * k_slots + c_idx).ravel(),
                (iv[:, None] * k_slots + l_idx).ravel(),
                np.repeat(similarity, c_idx.size),
            )
        )

    num_vars = n * k_slots
    model = _assemble(
        num_vars,
        np.full(num_vars, -penalty, dtype=np.int64),
        parts,
        var_map=tuple((u, c) for u in range(n) for c in range(k_slots)),
        penalty_weight=penalty,
        model_kind=kind,
        offset=penalty * n,
        n_points=n,
        slots=k_slots,
    )
    logger.debug(
        f"Compiled {kind.value} model: n={n}, K={k_slots}, vars={model.num_vars}, "
        f"couplers={model.num_couplers}, penalty={penalty}"
    )
    return model


def build_pairwise(sim: SimilarityMatrix, cfg: BuilderConfig) -> QuboModel:
    """
    Within-cluster dissimilarity model: (100 − D_uv) on every same-slot pair,
    plus the one-hot penalty A.
    """
    return _one_hot_model(sim, cfg, ModelKind.PAIRWISE)


def build_correlation(sim: SimilarityMatrix, cfg: BuilderConfig) -> QuboModel:
    """
    Correlation-clustering model: (100 − D_uv) on same-slot pairs, D_uv on
    cross-slot pairs, plus the one-hot penalty B. K is an upper bound; the
    optimum may leave slots empty.
    """
    return _one_hot_model(sim, cfg, ModelKind.CORRELATION)


def build_binary(sim: SimilarityMatrix, cfg: BuilderConfig) -> QuboModel:
    """
    Binary-coded dissimilarity model without a one-hot penalty.

    Point u holds a b-bit cluster code, b = ceil(log2 K). Each pair pays
    (100 − D_uv)·(q_ui − q_vi)² per bit, expanded to biases on both bits and
    a −2·(100 − D_uv) coupler.
    """
    n = sim.n
    if n < 2:
        raise ModelError(f"need at least 2 points, got {n}")
    bits = binary_width(cfg.k_slots)
    if bits < 1:
        raise ModelError(f"binary model needs at least one bit (K={cfg.k_slots})")
    _check_coefficient_range(n, 0)

    weight = sim.dissimilarity.astype(np.int64)
    np.fill_diagonal(weight, 0)
    point_bias = weight.sum(axis=1)

    iu, iv = np.triu_indices(n, 1)
    positions = np.arange(bits)
    coupler = (
        (iu[:, None] * bits + positions).ravel(),
        (iv[:, None] * bits + positions).ravel(),
        np.repeat(-2 * weight[iu, iv], bits),
    )
    model = _assemble(
        n * bits,
        np.repeat(point_bias, bits),
        [coupler],
        var_map=tuple((u, i) for u in range(n) for i in range(bits)),
        penalty_weight=0,
        model_kind=ModelKind.BINARY,
        offset=0,
        n_points=n,
        slots=bits,
    )
    logger.debug(f"Compiled binary model: n={n}, bits={bits}, vars={model.num_vars}")
    return model


BUILDERS = {
    ModelKind.PAIRWISE: build_pairwise,
    ModelKind.CORRELATION: build_correlation,
    ModelKind.BINARY: build_binary,
}


def build_model(sim: SimilarityMatrix, cfg: BuilderConfig, kind: ModelKind) -> QuboModel:
    return BUILDERS[ModelKind(kind)](sim, cfg)


# ─── Evaluation ──────────────────────────────────────────


def _hamming(a: np.ndarray, b: np.ndarray, bits: int) -> np.ndarray:
    diff = np.bitwise_xor(a, b)
    return sum((diff >> i) & 1 for i in range(bits))


def eval_objective(
    partition: Partition,
    sim: SimilarityMatrix,
    kind: ModelKind,
    bits: Optional[int] = None,
) -> int:
    """
    Combinatorial objective of a partition on the quantized scale.

    pairwise: Σ over co-clustered pairs of (100 − D_uv)
    correlation: the above plus Σ over separated pairs of D_uv
    binary: Σ over pairs of (100 − D_uv)·hamming(code_u, code_v), cluster id
        c carrying the code c in `bits` bits
    """
    kind = ModelKind(kind)
    if partition.n != sim.n:
        raise PartitionError(f"partition has {partition.n} points, similarity has {sim.n}")

    labels = partition.assignment
    iu, iv = np.triu_indices(sim.n, 1)
    weight = sim.dissimilarity[iu, iv]
    together = labels[iu] == labels[iv]

    if kind is ModelKind.PAIRWISE:
        return int(weight[together].sum())
    if kind is ModelKind.CORRELATION:
        return int(weight[together].sum() + sim.quantized[iu, iv][~together].sum())

    width = bits if bits is not None else max(1, binary_width(partition.k))
    if partition.k > 2**width:
        raise PartitionError(f"{partition.k} clusters do not fit in {width}-bit codes")
    return int((weight * _hamming(labels[iu], labels[iv], width)).sum())


def eval_qubo(bits: Sequence[int], model: QuboModel) -> int:
    """E(q) = Σ c_i q_i + Σ_{i<j} c_ij q_i q_j + offset."""
    q = np.asarray(bits, dtype=np.int64).reshape(-1)
    if q.shape[0] != model.num_vars:
        raise ModelError(f"state has {q.shape[0]} bits, model has {model.num_vars} variables")
    linear = int(model.biases @ q)
    quadratic = int((model.values * q[model.rows] * q[model.cols]).sum())
    return linear + quadratic + model.offset


def eval_qubo_batch(states: np.ndarray, model: QuboModel) -> np.ndarray:
    """Energies of a (S × num_vars) 0/1 matrix, one per row."""
    q = np.atleast_2d(np.asarray(states, dtype=np.int64))
    if q.shape[1] != model.num_vars:
        raise ModelError(f"states have {q.shape[1]} bits, model has {model.num_vars} variables")
    upper = sparse.csr_matrix(
        (model.values, (model.rows, model.cols)), shape=(model.num_vars, model.num_vars)
    )
    quadratic = ((upper.T @ q.T).T * q).sum(axis=1)
    return q @ model.biases + quadratic + model.offset


def coupler_matrix(model: QuboModel) -> sparse.csr_matrix:
    """Symmetric CSR view of the couplers (zero diagonal)."""
    rows = np.concatenate([model.rows, model.cols])
    cols = np.concatenate([model.cols, model.rows])
    vals = np.concatenate([model.values, model.values])
    matrix = sparse.csr_matrix((vals, (rows, cols)), shape=(model.num_vars, model.num_vars))
    matrix.sort_indices()
    return matrix


# ─── Encodings ───────────────────────────────────────────


def encode(partition: Partition, model: QuboModel) -> np.ndarray:
    """Feasible bit-vector for a partition under the model's encoding."""
    if partition.n != model.n_points:
        raise PartitionError(
            f"partition has {partition.n} points, model encodes {model.n_points}"
        )
    labels = partition.assignment
    bits = np.zeros(model.num_vars, dtype=np.int8)
    points = np.arange(partition.n)

    if model.model_kind.one_hot:
        if partition.k > model.slots:
            raise PartitionError(f"{partition.k} clusters exceed K={model.slots} slots")
        bits[points * model.slots + labels] = 1
        return bits

    if partition.k > 2**model.slots:
        raise PartitionError(f"{partition.k} clusters do not fit in {model.slots}-bit codes")
    for i in range(model.slots):
        bits[points * model.slots + i] = (labels >> i) & 1
    return bits


# ─── Ising conversion ────────────────────────────────────


def to_ising(model: QuboModel) -> IsingModel:
    """
    Exact spin form under q = (σ + 1)/2.

    h_i = c_i/2 + Σ_j c_ij/4, J_ij = c_ij/4 and the offset collects
    Σ c_i/2 + Σ c_ij/4 plus the model's own constant.
    """
    incident = np.zeros(model.num_vars, dtype=np.int64)
    np.add.at(incident, model.rows, model.values)
    np.add.at(incident, model.cols, model.values)

    h = tuple(
        Fraction(2 * int(c) + int(s), 4) for c, s in zip(model.biases, incident)
    )
    j = {(int(a), int(b)): Fraction(int(c), 4) for a, b, c in zip(model.rows, model.cols, model.values)}
    offset = (
        Fraction(2 * int(model.biases.sum()) + int(model.values.sum()), 4) + model.offset
    )
    return IsingModel(num_spins=model.num_vars, h=h, j=j, offset=offset)


def eval_ising(spins: Sequence[int], ising: IsingModel) -> Fraction:
    """E(σ) = Σ J_ij σ_i σ_j + Σ h_i σ_i, without the offset."""
    sigma = [int(s) for s in spins]
    if len(sigma) != ising.num_spins:
        raise ModelError(f"{len(sigma)} spins for a model of {ising.num_spins}")
    energy = sum((h * s for h, s in zip(ising.h, sigma)), Fraction(0))
    energy += sum((c * sigma[a] * sigma[b] for (a, b), c in ising.j.items()), Fraction(0))
    return energy


# ─── Debug dump ──────────────────────────────────────────


def dump_model(model: QuboModel, path: str) -> None:
    """
    Text dump: a header line, then `<i> <c_i>` per bias and `<i> <j> <c_ij>`
    per coupler.
    """
    with open(path, "w", encoding="utf-8") as f:
        f.write(
            f"# num_vars={model.num_vars} offset={model.offset} "
            f"kind={model.model_kind.value} penalty={model.penalty_weight}\n"
        )
        for i, c in enumerate(model.biases):
            f.write(f"{i} {int(c)}\n")
        for i, j, c in zip(model.rows, model.cols, model.values):
            f.write(f"{int(i)} {int(j)} {int(c)}\n")
    logger.debug(f"Model dumped to {path}")
