"""
Dataset ingestion: CSV files with an optional `label` column, and the Iris and
Wine copies bundled with scikit-learn.
"""

import os
from typing import Any, Dict, Optional

import numpy as np
import pandas as pd
from sklearn.datasets import load_iris, load_wine

from core.errors import DataError
from core.metrics import class_cv
from core.types import Dataset
from logger import get_logger

logger = get_logger(__name__)

LABEL_COLUMN = "label"
BUILTIN_LOADERS = {
    "iris": load_iris,
    "wine": load_wine,
}


def load_dataset(path: str, standardize_features: bool = False) -> Dataset:
    """
    Load a CSV dataset.

    Every column except `label` is a numeric feature, in file order. Label
    values of any type are mapped to class ids in sorted order.

    Args:
        path: CSV file with a header row
        standardize_features: z-score the features after loading

    Returns:
        Dataset named after the file stem
    """
    try:
        frame = pd.read_csv(path)
    except FileNotFoundError as e:
        raise DataError(f"dataset file not found: {path}") from e
    except pd.errors.EmptyDataError as e:
        raise DataError(f"{path}: file is empty") from e
    except (pd.errors.ParserError, UnicodeDecodeError) as e:
        raise DataError(f"{path}: malformed CSV ({e})") from e

    if frame.empty:
        raise DataError(f"{path}: file is empty (header only)")

    labels = None
    if LABEL_COLUMN in frame.columns:
        raw = frame.pop(LABEL_COLUMN)
        if raw.isna().any():
            raise DataError(f"{path}: missing values in the label column")
        labels, _ = pd.factorize(raw, sort=True)
    if frame.shape[1] == 0:
        raise DataError(f"{path}: no feature columns")

    for column in frame.columns:
        if not pd.api.types.is_numeric_dtype(frame[column]):
            coerced = pd.to_numeric(frame[column], errors="coerce")
            bad = frame[column][coerced.isna() & frame[column].notna()]
            cell = bad.iloc[0] if len(bad) else "<missing>"
            raise DataError(f"{path}: non-numeric value {cell!r} in column '{column}'")

    name = os.path.splitext(os.path.basename(path))[0]
    dataset = Dataset(points=frame.to_numpy(dtype=np.float64), labels=labels, name=name)
    logger.info(
        f"Loaded dataset {name}: n={dataset.n}, d={dataset.d}, classes={dataset.num_classes}"
    )
    return standardize(dataset) if standardize_features else dataset


def load_builtin(name: str) -> Dataset:
    """Iris or Wine from scikit-learn's bundled copies."""
    loader = BUILTIN_LOADERS.get(name.lower())
    if loader is None:
        raise DataError(f"unknown builtin dataset '{name}' (choose from {sorted(BUILTIN_LOADERS)})")
    bunch = loader()
    return Dataset(points=bunch.data, labels=bunch.target, name=name.lower())


def resolve_dataset(source: str, standardize_features: bool = False) -> Dataset:
    """A CSV path when the file exists, otherwise a builtin dataset name."""
    if os.path.exists(source):
        return load_dataset(source, standardize_features)
    if source.lower() in BUILTIN_LOADERS:
        dataset = load_builtin(source)
        return standardize(dataset) if standardize_features else dataset
    raise DataError(f"'{source}' is neither a readable file nor a builtin dataset")


def standardize(dataset: Dataset) -> Dataset:
    """Zero mean and unit variance per column; constant columns are only centered."""
    points = dataset.points - dataset.points.mean(axis=0)
    scale = dataset.points.std(axis=0)
    scale[scale == 0] = 1.0
    return Dataset(points=points / scale, labels=dataset.labels, name=dataset.name)


def dataset_stats(dataset: Dataset) -> Dict[str, Any]:
    """One row of the dataset statistics table: instances, features, classes, CV."""
    cv: Optional[float] = None
    if dataset.labels is not None:
        cv = round(class_cv(dataset.labels), 3)
    return {
        "name": dataset.name,
        "n": dataset.n,
        "d": dataset.d,
        "clusters": dataset.num_classes,
        "cv": cv,
    }


def write_dataset(dataset: Dataset, path: str) -> None:
    """Write features as x0..x{d-1} plus a `label` column when labels exist."""
    frame = pd.DataFrame(dataset.points, columns=[f"x{i}" for i in range(dataset.d)])
    if dataset.labels is not None:
        frame[LABEL_COLUMN] = dataset.labels
    frame.to_csv(path, index=False)
    logger.debug(f"Dataset {dataset.name} written to {path}")
