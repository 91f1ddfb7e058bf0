"""Exception hierarchy. Every error carries the pipeline stage it came from."""

from typing import Optional


class QonsensusError(Exception):
    """Base class for all qonsensus failures."""

    stage = "qonsensus"

    def __init__(self, message: str, stage: Optional[str] = None):
        super().__init__(message)
        if stage is not None:
            self.stage = stage

    def tagged(self) -> str:
        return f"[{self.stage}] {self}"


class DataError(QonsensusError, ValueError):
    stage = "data"


class PartitionError(QonsensusError, ValueError):
    stage = "partition"


class EnsembleError(QonsensusError, ValueError):
    stage = "ensemble"


class ModelError(QonsensusError, ValueError):
    stage = "model"


class SolverError(QonsensusError, ValueError):
    stage = "solve"


class OracleError(QonsensusError, ValueError):
    stage = "oracle"


class ExperimentError(QonsensusError):
    stage = "experiment"
