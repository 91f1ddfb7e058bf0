"""
Command-line entry point: run consensus experiments and print the comparison
table.

    python main.py --dataset iris --method da-cr hac --k 3 12 --seed 0 1 2 3 4
"""

import argparse
import logging
import sys
from datetime import datetime
from typing import List, Optional

from pydantic import ValidationError

from config import (
    DEFAULT_ENSEMBLE_SIZE,
    DEFAULT_RUNS,
    DEFAULT_SWEEPS,
    DEFAULT_WORKERS,
    K_MODES,
    METHODS,
)
from core.datasets import dataset_stats, resolve_dataset
from core.errors import DataError, QonsensusError
from core.report import emit_table
from core.types import Dataset
from logger import get_logger, set_console_level
from models.schemas import AnnealParams, EnsembleConfig, ExperimentConfig
from services.experiment_runner import ExperimentRunner

logger = get_logger(__name__)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="qonsensus",
        description="Consensus clustering through QUBO models and a parallel-trial annealer.",
    )
    parser.add_argument("--dataset", required=True, help="CSV path or builtin name (iris, wine)")
    parser.add_argument(
        "--method", nargs="+", choices=METHODS, default=["da-cr"], help="Consensus methods"
    )
    parser.add_argument(
        "--k", nargs="+", type=int, help="Explicit K values (implies --k-mode explicit)"
    )
    parser.add_argument("--k-mode", choices=K_MODES, default="k_true", help="How K follows K̃")
    parser.add_argument("--k-true", type=int, help="K̃ for unlabeled datasets")
    parser.add_argument("--m", type=int, default=DEFAULT_ENSEMBLE_SIZE, help="Ensemble size")
    parser.add_argument("--seed", nargs="+", type=int, default=[0], help="Seeds to repeat over")
    parser.add_argument("--runs", type=int, default=DEFAULT_RUNS, help="Annealer runs")
    parser.add_argument("--sweeps", type=int, default=DEFAULT_SWEEPS, help="Sweeps per run")
    parser.add_argument("--penalty", type=int, help="One-hot penalty override")
    parser.add_argument("--time-limit", type=float, help="Annealer wall-clock cap in seconds")
    parser.add_argument("--out", default="results.jsonl", help="JSON-lines record file")
    parser.add_argument("--table-csv", help="Also write the table as CSV")
    parser.add_argument("--standardize", action="store_true", help="z-score features first")
    parser.add_argument("--stats", action="store_true", help="Print the dataset statistics row")
    parser.add_argument("--no-cache", action="store_true", help="Always regenerate ensembles")
    parser.add_argument("--workers", type=int, default=DEFAULT_WORKERS, help="Worker threads")
    parser.add_argument("-v", "--verbose", action="store_true", help="Debug output on the console")
    return parser


def build_config(args: argparse.Namespace, dataset: Dataset) -> ExperimentConfig:
    """Translate parsed flags into a validated ExperimentConfig."""
    k_mode = "explicit" if args.k else args.k_mode
    k_true = args.k_true or dataset.num_classes
    if k_true is None:
        if not args.k:
            raise DataError(f"{dataset.name} is unlabeled: pass --k or --k-true")
        k_true = max(args.k)

    return ExperimentConfig(
        dataset_path=args.dataset,
        methods=args.method,
        k_mode=k_mode,
        k_values=args.k or [],
        ensemble=EnsembleConfig(m=args.m, k_true=k_true, workers=args.workers),
        anneal=AnnealParams(
            num_runs=args.runs,
            sweeps_per_run=args.sweeps,
            time_limit=args.time_limit,
            workers=args.workers,
        ),
        penalty=args.penalty,
        output_path=args.out,
        seeds=args.seed,
        standardize=args.standardize,
        use_cache=not args.no_cache,
        workers=args.workers,
    )


def main(argv: Optional[List[str]] = None) -> int:
    """
    Run one experiment from command-line flags.

    Returns:
        Process exit code: 0 on success, 1 when any stage failed
    """
    args = build_parser().parse_args(argv)
    if args.verbose:
        set_console_level(logging.DEBUG)
    start_time = datetime.now()

    try:
        logger.info("=" * 60)
        logger.info("qonsensus - Starting")
        logger.info("=" * 60)

        dataset = resolve_dataset(args.dataset, args.standardize)
        if args.stats:
            row = dataset_stats(dataset)
            print(
                f"{row['name']}: n={row['n']} d={row['d']} "
                f"classes={row['clusters']} cv={row['cv']}"
            )

        runner = ExperimentRunner(build_config(args, dataset), dataset)
        runner.run()
        table = emit_table(runner.aggregates, csv_path=args.table_csv)
        if table:
            print(table)

        duration = (datetime.now() - start_time).total_seconds()
        logger.info(f"Total time: {duration:.1f}s")
        if runner.errors:
            for error in runner.errors:
                print(error, file=sys.stderr)
            return 1
        return 0

    except KeyboardInterrupt:
        logger.warning("Interrupted by user")
        return 130
    except QonsensusError as e:
        logger.critical(f"Fatal: {e.tagged()}")
        print(e.tagged(), file=sys.stderr)
        return 1
    except ValidationError as e:
        logger.critical(f"Invalid configuration: {e}")
        print(f"[config] {e}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
