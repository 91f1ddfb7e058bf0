"""Shared fixtures: the four-point example ensemble and small random ensembles."""

import numpy as np
import pytest

from core.similarity import build_similarity
from core.types import Dataset, Ensemble, validate_partition


def make_ensemble(n: int, m: int, seed: int, k_max: int = 3) -> Ensemble:
    """m random labelings of n points with at most k_max clusters each."""
    rng = np.random.default_rng(seed)
    members = tuple(
        validate_partition(rng.integers(0, k_max, size=n), n) for _ in range(m)
    )
    return Ensemble(members, generator_seed=seed)


def unanimous_ensemble(labels, m: int = 5) -> Ensemble:
    partition = validate_partition(labels)
    return Ensemble(tuple(partition for _ in range(m)))


@pytest.fixture
def four_point_ensemble() -> Ensemble:
    return Ensemble(
        tuple(
            validate_partition(labels)
            for labels in ([0, 0, 1, 1], [0, 1, 1, 0], [0, 0, 0, 1])
        )
    )


@pytest.fixture
def four_point_sim(four_point_ensemble):
    return build_similarity(four_point_ensemble)


@pytest.fixture
def random_ensemble():
    return make_ensemble


@pytest.fixture
def two_clouds() -> Dataset:
    """Two tight 2-D clouds (diameter < 1) 100 apart, labeled by cloud."""
    rng = np.random.default_rng(7)
    left = rng.uniform(0.0, 0.5, size=(10, 2))
    right = rng.uniform(0.0, 0.5, size=(10, 2)) + np.array([100.0, 0.0])
    return Dataset(
        points=np.vstack([left, right]),
        labels=np.repeat([0, 1], 10),
        name="clouds",
    )


@pytest.fixture
def unanimous():
    return unanimous_ensemble
