"""
Base-clustering ensembles from randomized K-Means.

Each member draws its own K uniformly from [k_low, k_high] and its own
initial centers, both from a stream derived from (seed, member index), so the
ensemble does not depend on how members are scheduled across threads.
"""

import hashlib
import os
from concurrent.futures import ThreadPoolExecutor
from typing import Optional

import numpy as np
from tqdm import tqdm

from config import CACHE_DIR
from core.errors import DataError, EnsembleError
from core.types import Dataset, Ensemble, Partition, validate_partition
from logger import get_logger
from models.schemas import EnsembleConfig

logger = get_logger(__name__)


def _squared_distances(points: np.ndarray, centers: np.ndarray) -> np.ndarray:
    return ((points[:, None, :] - centers[None, :, :]) ** 2).sum(axis=2)


def _lloyd(points: np.ndarray, k: int, rng: np.random.Generator, max_iters: int):
    n = points.shape[0]
    centers = points[rng.choice(n, size=k, replace=False)].copy()
    labels = np.full(n, -1, dtype=np.int64)

    for iteration in range(max_iters):
        distances = _squared_distances(points, centers)
        new_labels = np.argmin(distances, axis=1)
        if np.array_equal(new_labels, labels):
            break
        labels = new_labels

        sizes = np.bincount(labels, minlength=k)
        for c in np.flatnonzero(sizes):
            centers[c] = points[labels == c].mean(axis=0)

        empty = np.flatnonzero(sizes == 0)
        if empty.size:
            own = distances[np.arange(n), labels]
            taken = set()
            for c in empty:
                for candidate in np.argsort(-own, kind="stable"):
                    if candidate not in taken:
                        taken.add(int(candidate))
                        centers[c] = points[candidate]
                        break
            logger.debug(f"Relocated {empty.size} empty cluster(s) at iteration {iteration}")

    return labels, inertia(points, labels)


def inertia(points: np.ndarray, labels: np.ndarray) -> float:
    """Sum of squared distances from each point to its cluster mean."""
    total = 0.0
    for c in np.unique(labels):
        members = points[labels == c]
        total += float(((members - members.mean(axis=0)) ** 2).sum())
    return total


def kmeans(
    dataset: Dataset, k: int, seed: int, max_iters: int = 100, n_init: int = 1
) -> Partition:
    """
    Lloyd's algorithm with centers initialised on k distinct data points.

    Runs until no assignment changes or max_iters. An empty cluster takes the
    point farthest from its current centroid as its new center. With n_init
    restarts the lowest-inertia result is kept, the earliest on ties.

    Args:
        dataset: Points to cluster
        k: Number of clusters, 1 <= k <= n
        seed: Seed for the center draws
        max_iters: Iteration cap per restart
        n_init: Independent restarts

    Returns:
        Compacted Partition (k may shrink if clusters collapse)
    """
    points = dataset.points
    n = dataset.n
    if k < 1 or k > n:
        raise EnsembleError(f"k={k} must lie in [1, {n}]")
    if n_init < 1:
        raise EnsembleError(f"n_init={n_init} must be at least 1")
    if not np.all(np.isfinite(points)):
        raise DataError("k-means needs finite features")

    rng = np.random.default_rng(seed)
    best_labels, best_inertia = _lloyd(points, k, rng, max_iters)
    for _ in range(n_init - 1):
        labels, score = _lloyd(points, k, rng, max_iters)
        if score < best_inertia:
            best_labels, best_inertia = labels, score
    return validate_partition(best_labels, n)


def _member(dataset: Dataset, config: EnsembleConfig, index: int) -> Partition:
    rng = np.random.default_rng([config.seed, index])
    k = int(rng.integers(config.k_low, config.k_high, endpoint=True))
    member_seed = int(rng.integers(0, 2**32))
    return kmeans(dataset, min(k, dataset.n), member_seed, config.max_iters, config.n_init)


def generate_ensemble(dataset: Dataset, config: EnsembleConfig) -> Ensemble:
    """
    Generate m K-Means clusterings with K drawn uniformly from the config range.

    Args:
        dataset: Points to cluster
        config: Ensemble protocol (m, K range, iteration cap, seed)

    Returns:
        Ensemble recording config.seed as its generator seed
    """
    if config.k_low > dataset.n:
        raise EnsembleError(f"K range starts at {config.k_low} but n={dataset.n}")

    indices = range(config.m)
    progress = dict(total=config.m, desc=f"ensemble {dataset.name}", disable=None, leave=False)
    if config.workers > 1:
        with ThreadPoolExecutor(max_workers=config.workers) as pool:
            members = list(
                tqdm(pool.map(lambda i: _member(dataset, config, i), indices), **progress)
            )
    else:
        members = [_member(dataset, config, i) for i in tqdm(indices, **progress)]

    ensemble = Ensemble(tuple(members), generator_seed=config.seed)
    logger.info(
        f"Generated ensemble for {dataset.name}: m={ensemble.m}, "
        f"mean clusters={ensemble.mean_clusters():.2f}"
    )
    return ensemble


# ─── Ensemble files ──────────────────────────────────────


def write_ensemble(ensemble: Ensemble, path: str) -> None:
    """Write the CSV ensemble format: a `# n= m= seed=` header, one row per member."""
    lines = [f"# n={ensemble.n} m={ensemble.m} seed={ensemble.generator_seed}"]
    for member in ensemble.members:
        lines.append(",".join(str(int(label)) for label in member.assignment))
    directory = os.path.dirname(path)
    if directory:
        os.makedirs(directory, exist_ok=True)
    with open(path, "w", encoding="utf-8", newline="\n") as f:
        f.write("\n".join(lines) + "\n")
    logger.debug(f"Ensemble written to {path}")


def read_ensemble(path: str) -> Ensemble:
    """Read an ensemble file written by write_ensemble()."""
    try:
        with open(path, "r", encoding="utf-8") as f:
            lines = [line.strip() for line in f if line.strip()]
    except OSError as e:
        raise EnsembleError(f"cannot read ensemble file {path}: {e}") from e

    if not lines or not lines[0].startswith("#"):
        raise EnsembleError(f"{path}: missing '# n= m= seed=' header")
    header = dict(token.split("=", 1) for token in lines[0].lstrip("#").split())
    try:
        n, m, seed = int(header["n"]), int(header["m"]), int(header["seed"])
        members = [
            validate_partition([int(x) for x in line.split(",")], n) for line in lines[1:]
        ]
    except (KeyError, ValueError) as e:
        raise EnsembleError(f"{path}: malformed ensemble file ({e})") from e
    if len(members) != m:
        raise EnsembleError(f"{path}: header says m={m} but found {len(members)} rows")
    return Ensemble(tuple(members), generator_seed=seed)


def dataset_fingerprint(dataset: Dataset) -> str:
    digest = hashlib.sha256()
    digest.update(np.ascontiguousarray(dataset.points).tobytes())
    digest.update(str(dataset.points.shape).encode())
    return digest.hexdigest()[:16]


def cache_path(dataset: Dataset, config: EnsembleConfig, cache_dir: Optional[str] = None) -> str:
    key = hashlib.sha256(config.cache_key().encode()).hexdigest()[:12]
    return os.path.join(cache_dir or CACHE_DIR, f"{dataset_fingerprint(dataset)}_{key}.csv")


def load_or_generate(
    dataset: Dataset, config: EnsembleConfig, cache_dir: Optional[str] = None, use_cache: bool = True
) -> Ensemble:
    """
    Return the cached ensemble for (dataset, config), generating it on a miss.

    All methods of an experiment score against the ensemble this returns.
    """
    path = cache_path(dataset, config, cache_dir)
    if use_cache and os.path.exists(path):
        try:
            ensemble = read_ensemble(path)
            if ensemble.n == dataset.n:
                logger.debug(f"Ensemble cache hit: {path}")
                return ensemble
            logger.warning(f"Cached ensemble {path} has n={ensemble.n}, regenerating")
        except EnsembleError as e:
            logger.warning(f"Unreadable ensemble cache {path}, regenerating: {e}")

    ensemble = generate_ensemble(dataset, config)
    if use_cache:
        try:
            write_ensemble(ensemble, path)
        except OSError as e:
            logger.warning(f"Could not cache ensemble at {path}: {e}")
    return ensemble
