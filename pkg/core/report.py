"""
Experiment records: JSON-lines persistence, per-configuration aggregation and
the comparison table with best-method marking.
"""

import json
import os
from typing import List, Optional, Sequence, Union

import pandas as pd

from config import BEST_THRESHOLD, FLOAT_DIGITS
from core.errors import ExperimentError
from logger import get_logger
from models.schemas import AggregateRecord, ExperimentRecord

logger = get_logger(__name__)

Record = Union[ExperimentRecord, AggregateRecord]
GROUP_KEYS = ["dataset", "method", "k"]
BEST_MARK = "**"
BEST_ROW = "# Best"


def _rounded(value):
    if isinstance(value, float):
        return round(value, FLOAT_DIGITS)
    if isinstance(value, list):
        return [_rounded(v) for v in value]
    return value


def record_line(record: Record, include_wall_time: bool = True) -> str:
    """One canonical JSON line: aliased keys, sorted, floats rounded."""
    payload = {k: _rounded(v) for k, v in record.model_dump(by_alias=True).items()}
    if not include_wall_time:
        payload.pop("wall_time", None)
    return json.dumps(payload, sort_keys=True)


def sort_records(records: Sequence[ExperimentRecord]) -> List[ExperimentRecord]:
    return sorted(records, key=lambda r: (r.dataset, r.method, r.k, r.seed))


def write_records(records: Sequence[Record], path: str) -> None:
    """
    Write records as JSON lines, creating parent directories. Lines leave out
    wall_time, so identical runs give identical files; see write_timings().

    Args:
        records: Run records followed by any aggregate rows
        path: Output file, overwritten
    """
    directory = os.path.dirname(path)
    try:
        if directory:
            os.makedirs(directory, exist_ok=True)
        with open(path, "w", encoding="utf-8", newline="\n") as f:
            for record in records:
                f.write(record_line(record, include_wall_time=False) + "\n")
        logger.info(f"Wrote {len(records)} record(s) to {path}")
    except PermissionError as e:
        logger.error(f"Permission denied writing records to {path}: {e}")
        raise ExperimentError(f"cannot write {path}: permission denied") from e
    except OSError as e:
        logger.error(f"File system error writing records to {path}: {e}")
        raise ExperimentError(f"cannot write {path}: {e}") from e


def timing_path(path: str) -> str:
    return os.path.splitext(path)[0] + ".timing.csv"


def write_timings(records: Sequence[ExperimentRecord], path: str) -> None:
    """Wall times per (dataset, method, K, seed), kept apart from the records."""
    runs = [r for r in records if isinstance(r, ExperimentRecord)]
    frame = pd.DataFrame(
        [(r.dataset, r.method, r.k, r.seed, r.wall_time) for r in runs],
        columns=GROUP_KEYS + ["seed", "wall_time"],
    )
    try:
        frame.to_csv(path, index=False)
    except OSError as e:
        raise ExperimentError(f"cannot write {path}: {e}") from e
    logger.debug(f"Timings written to {path}")


def read_records(path: str) -> List[Record]:
    """Read a JSON-lines file written by write_records()."""
    records: List[Record] = []
    try:
        with open(path, "r", encoding="utf-8") as f:
            for number, line in enumerate(f, start=1):
                if not line.strip():
                    continue
                payload = json.loads(line)
                kind = payload.get("record_type")
                if kind == "run":
                    records.append(ExperimentRecord.model_validate(payload))
                elif kind == "aggregate":
                    records.append(AggregateRecord.model_validate(payload))
                else:
                    raise ExperimentError(f"{path}:{number}: unknown record type {kind!r}")
    except OSError as e:
        raise ExperimentError(f"cannot read {path}: {e}") from e
    except json.JSONDecodeError as e:
        raise ExperimentError(f"{path}: invalid JSON ({e})") from e
    return records


def _mean_sd(frame: pd.DataFrame, column: str):
    values = frame[column].dropna()
    if values.empty:
        return None, None
    return float(values.mean()), float(values.std(ddof=0))


def aggregate(records: Sequence[ExperimentRecord]) -> List[AggregateRecord]:
    """Mean and population SD over seeds for each (dataset, method, K)."""
    runs = [r for r in records if isinstance(r, ExperimentRecord)]
    if not runs:
        return []
    frame = pd.DataFrame([r.model_dump() for r in runs])

    rows = []
    for (dataset, method, k), group in frame.groupby(GROUP_KEYS, sort=True):
        ari, ari_sd = _mean_sd(group, "mean_ari")
        sil, sil_sd = _mean_sd(group, "silhouette")
        acc, acc_sd = _mean_sd(group, "accuracy")
        used, used_sd = _mean_sd(group, "clusters_used")
        rows.append(
            AggregateRecord(
                dataset=dataset,
                method=method,
                k=int(k),
                seeds=sorted(int(s) for s in group["seed"]),
                mean_ari=ari,
                mean_ari_sd=ari_sd,
                silhouette=sil,
                silhouette_sd=sil_sd,
                accuracy=acc,
                accuracy_sd=acc_sd,
                clusters_used=used,
                clusters_used_sd=used_sd,
            )
        )
    return rows


def _format(value: Optional[float], sd: Optional[float]) -> str:
    if value is None or pd.isna(value):
        return "-"
    if sd is None or pd.isna(sd):
        return f"{value:.4f}"
    return f"{value:.4f} ± {sd:.4f}"


def best_counts(frame: pd.DataFrame) -> pd.DataFrame:
    """How often each (method, K) was marked best, over all datasets."""
    counts = frame.groupby(["method", "k"], sort=True)["best"].sum().astype(int)
    return counts.rename("best_count").reset_index()


def emit_table(records: Sequence[Record], csv_path: Optional[str] = None) -> str:
    """
    Render the comparison table, one row per (dataset, method, K).

    Within each (dataset, K) the highest mean ARI is marked best, together
    with every method whose mean ARI is within BEST_THRESHOLD of it. A closing
    "# Best" block counts the marks per method and K.

    Args:
        records: Run records (aggregated here) or aggregate rows
        csv_path: Also write the table as CSV, with a boolean `best` column and
            trailing "# Best" rows carrying `best_count`

    Returns:
        Aligned text table
    """
    rows = [r for r in records if isinstance(r, AggregateRecord)]
    if not rows:
        rows = aggregate(records)
    if not rows:
        return ""

    frame = pd.DataFrame([r.model_dump() for r in rows])
    top = frame.groupby(["dataset", "k"])["mean_ari"].transform("max")
    frame["best"] = (top - frame["mean_ari"]) <= BEST_THRESHOLD
    frame = frame.sort_values(GROUP_KEYS, kind="stable").reset_index(drop=True)

    table = pd.DataFrame(
        {
            "dataset": frame["dataset"],
            "method": frame["method"],
            "K": frame["k"],
            "mean ARI": [
                _format(v, sd) + (f" {BEST_MARK}" if best else "")
                for v, sd, best in zip(frame["mean_ari"], frame["mean_ari_sd"], frame["best"])
            ],
            "silhouette": [
                _format(v, sd) for v, sd in zip(frame["silhouette"], frame["silhouette_sd"])
            ],
            "accuracy": [
                _format(v, sd) for v, sd in zip(frame["accuracy"], frame["accuracy_sd"])
            ],
            "clusters": [f"{v:.1f}" for v in frame["clusters_used"]],
        }
    )

    counts = best_counts(frame)

    if csv_path:
        columns = GROUP_KEYS + [
            "mean_ari",
            "mean_ari_sd",
            "silhouette",
            "silhouette_sd",
            "accuracy",
            "accuracy_sd",
            "clusters_used",
            "clusters_used_sd",
            "best",
        ]
        try:
            summary = counts.assign(dataset=BEST_ROW)
            pd.concat([frame[columns], summary], ignore_index=True).to_csv(
                csv_path, index=False
            )
            logger.debug(f"Table written to {csv_path}")
        except OSError as e:
            raise ExperimentError(f"cannot write {csv_path}: {e}") from e

    summary = counts.rename(columns={"k": "K", "best_count": "count"})
    return (
        table.to_string(index=False)
        + f"\n\n{BEST_ROW}\n"
        + summary.to_string(index=False)
    )
