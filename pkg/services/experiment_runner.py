"""
ExperimentRunner service for running consensus experiments end to end.

For every seed the runner:
- Loads (or generates and caches) the seed's ensemble
- Builds the co-association similarity once
- Solves every requested (method, K) pair against it
- Scores the partition and emits one record

Seeds are independent and may run on a thread pool; records are merged by
sorting on (dataset, method, K, seed), so output does not depend on the pool.
"""

from concurrent.futures import ThreadPoolExecutor
from datetime import datetime
from typing import List, Optional

from core.consensus import solve_method
from core.datasets import resolve_dataset
from core.ensemble import load_or_generate
from core.errors import ExperimentError, QonsensusError
from core.metrics import (
    accuracy,
    clusters_used,
    mean_ari,
    partition_difference_objective,
    silhouette,
)
from core.qubo import eval_objective
from core.report import aggregate, sort_records, timing_path, write_records, write_timings
from core.similarity import build_similarity
from core.types import Dataset, ModelKind
from logger import get_logger
from models.schemas import AggregateRecord, ExperimentConfig, ExperimentRecord

logger = get_logger(__name__)


class ExperimentRunner:
    """Runs one ExperimentConfig and collects its records and failures."""

    def __init__(self, config: ExperimentConfig, dataset: Optional[Dataset] = None):
        self.config = config
        self.dataset = dataset
        self.records: List[ExperimentRecord] = []
        self.aggregates: List[AggregateRecord] = []
        self.errors: List[str] = []

    def k_true(self) -> int:
        classes = self.dataset.num_classes
        return classes if classes is not None else self.config.ensemble.k_true

    def k_values(self) -> List[int]:
        return self.config.resolve_k(self.k_true())

    def _score(self, seed: int, method: str, k: int, report, sim, ensemble) -> ExperimentRecord:
        partition = report.partition
        dataset = self.dataset
        score = None
        if partition.k >= 2:
            score = silhouette(dataset, partition)
        else:
            logger.warning(f"{method} K={k} seed={seed}: single cluster, silhouette undefined")
        return ExperimentRecord(
            dataset=dataset.name,
            method=method,
            k=k,
            seed=seed,
            n=dataset.n,
            m=ensemble.m,
            mean_ari=mean_ari(partition, ensemble),
            silhouette=score,
            accuracy=accuracy(partition, dataset.labels),
            clusters_used=clusters_used(partition),
            partition_difference=partition_difference_objective(partition, ensemble),
            correlation_objective=eval_objective(partition, sim, ModelKind.CORRELATION),
            pairwise_objective=eval_objective(partition, sim, ModelKind.PAIRWISE),
            energy=report.best_energy if method != "hac" else None,
            violations=report.violations,
            repaired=report.repaired,
            sweeps_done=report.sweeps_done,
            wall_time=report.wall_time,
        )

    def run_seed(self, seed: int) -> List[ExperimentRecord]:
        """Every (method, K) pair for one seed, sharing one ensemble."""
        config = self.config
        ensemble_cfg = config.ensemble.model_copy(update={"seed": seed, "k_true": self.k_true()})
        anneal_params = config.anneal.model_copy(update={"seed": seed})

        ensemble = load_or_generate(self.dataset, ensemble_cfg, use_cache=config.use_cache)
        sim = build_similarity(ensemble)

        records = []
        for method in config.methods:
            for k in self.k_values():
                logger.info(f"Seed {seed}: {method} K={k} on {self.dataset.name}")
                report = solve_method(sim, method, k, anneal_params, penalty=config.penalty)
                records.append(self._score(seed, method, k, report, sim, ensemble))
        return records

    def _guarded(self, seed: int) -> List[ExperimentRecord]:
        try:
            return self.run_seed(seed)
        except QonsensusError as e:
            logger.error(f"Seed {seed} failed: {e.tagged()}", exc_info=True)
            self.errors.append(f"Seed {seed}: {e.tagged()}")
        except Exception as e:
            logger.error(f"Seed {seed} failed: {e}", exc_info=True)
            self.errors.append(f"Seed {seed}: [experiment] {e}")
        return []

    def run(self) -> List[ExperimentRecord]:
        """
        Run all seeds, then aggregate and write the record file.

        Returns:
            Sorted run records; aggregate rows are kept on self.aggregates
        """
        config = self.config
        start_time = datetime.now()
        if self.dataset is None:
            self.dataset = resolve_dataset(config.dataset_path, config.standardize)
        if config.k_mode != "explicit" and self.dataset.num_classes is None:
            logger.warning(
                f"{self.dataset.name} has no labels; deriving K from k_true="
                f"{config.ensemble.k_true}"
            )

        logger.info("=" * 60)
        logger.info(
            f"Experiment: {self.dataset.name}, methods={config.methods}, "
            f"K={self.k_values()}, seeds={config.seeds}"
        )
        logger.info("=" * 60)

        if config.workers > 1 and len(config.seeds) > 1:
            with ThreadPoolExecutor(max_workers=config.workers) as pool:
                batches = list(pool.map(self._guarded, config.seeds))
        else:
            batches = [self._guarded(seed) for seed in config.seeds]

        self.records = sort_records([r for batch in batches for r in batch])
        self.aggregates = aggregate(self.records)
        write_records([*self.records, *self.aggregates], config.output_path)
        write_timings(self.records, timing_path(config.output_path))

        duration = (datetime.now() - start_time).total_seconds()
        logger.info("=" * 60)
        logger.info("Experiment finished!")
        logger.info(f"Duration: {duration:.1f}s")
        logger.info(f"Records: {len(self.records)}, failed seeds: {len(self.errors)}")
        logger.info(f"Records saved to: {config.output_path}")
        logger.info("=" * 60)
        return self.records


def run_experiment(config: ExperimentConfig, dataset: Optional[Dataset] = None) -> str:
    """
    Run an experiment and return the path of its JSON-lines record file.

    Raises:
        ExperimentError: when any seed failed; the file still holds the
            records of the seeds that succeeded
    """
    runner = ExperimentRunner(config, dataset)
    runner.run()
    if runner.errors:
        raise ExperimentError("; ".join(runner.errors))
    return config.output_path
