"""
Pydantic models for configuration objects and emitted records.

Every tunable of the pipeline is validated here, so algorithm code can assume
its parameters are in range.
"""

from typing import List, Literal, Optional

from pydantic import BaseModel, ConfigDict, Field, field_validator, model_validator

from config import (
    CORRELATION_PENALTY,
    DEFAULT_ENSEMBLE_SIZE,
    DEFAULT_MAX_ITERS,
    DEFAULT_N_INIT,
    DEFAULT_OFFSET_INCREMENT,
    DEFAULT_RUNS,
    DEFAULT_SWEEPS,
    DEFAULT_T_FINAL,
    DEFAULT_WORKERS,
    K_MIN,
    K_RANGE_FACTOR,
    PAIRWISE_PENALTY,
    RECORD_SCHEMA_VERSION,
)

Method = Literal["da-sm", "da-cr", "da-bin", "hac"]
KMode = Literal["k_true", "2k_true", "explicit"]


class EnsembleConfig(BaseModel):
    """Randomized K-Means ensemble protocol."""

    model_config = ConfigDict(frozen=True)

    m: int = Field(default=DEFAULT_ENSEMBLE_SIZE, ge=1, description="Number of base clusterings")
    k_true: int = Field(..., ge=1, description="K̃, the ground-truth cluster count")
    k_min: int = Field(default=K_MIN, ge=1, description="Low end of the random K range")
    k_max: Optional[int] = Field(
        default=None, ge=1, description="High end of the random K range (default 3·K̃)"
    )
    max_iters: int = Field(default=DEFAULT_MAX_ITERS, ge=1, description="Lloyd iteration cap")
    n_init: int = Field(
        default=DEFAULT_N_INIT, ge=1, description="Random-center restarts per member"
    )
    seed: int = Field(default=0, ge=0, description="Generator seed")
    workers: int = Field(default=DEFAULT_WORKERS, ge=1, description="Threads for member generation")

    @model_validator(mode="after")
    def _check_range(self):
        if self.k_low > self.k_high:
            raise ValueError(f"empty K range [{self.k_low}, {self.k_high}]")
        return self

    @property
    def k_low(self) -> int:
        return self.k_min

    @property
    def k_high(self) -> int:
        return self.k_max if self.k_max is not None else K_RANGE_FACTOR * self.k_true

    def cache_key(self) -> str:
        """Fields that change the generated ensemble (workers does not)."""
        return (
            f"m={self.m};k={self.k_low}-{self.k_high};"
            f"iters={self.max_iters};n_init={self.n_init};seed={self.seed}"
        )


class BuilderConfig(BaseModel):
    """Cluster slots and one-hot penalty weight for model compilation."""

    model_config = ConfigDict(frozen=True)

    k_slots: int = Field(..., ge=2, description="K slots (binary model derives its bit width)")
    penalty: Optional[int] = Field(
        default=None, gt=0, description="Explicit penalty weight A or B"
    )
    use_theoretical_penalty: bool = Field(
        default=False, description="Use the 100·n bound instead of the 2^14 / 2^15 defaults"
    )

    def default_penalty(self, kind: str) -> int:
        return CORRELATION_PENALTY if kind == "correlation" else PAIRWISE_PENALTY


class AnnealParams(BaseModel):
    """Run/sweep budget and temperature schedule for the annealer."""

    model_config = ConfigDict(frozen=True, allow_inf_nan=False)

    num_runs: int = Field(default=DEFAULT_RUNS, ge=1, description="Independent restarts")
    sweeps_per_run: int = Field(default=DEFAULT_SWEEPS, ge=1, description="Sweeps per restart")
    t_initial: Optional[float] = Field(
        default=None, gt=0, description="Start temperature (default: max |coefficient|)"
    )
    t_final: float = Field(default=DEFAULT_T_FINAL, gt=0, description="End temperature")
    offset_increment: Optional[float] = Field(
        default=DEFAULT_OFFSET_INCREMENT,
        gt=0,
        description="Dynamic offset growth per idle step (default: scaled to the model)",
    )
    time_limit: Optional[float] = Field(
        default=None, gt=0, description="Wall-clock cap in seconds, checked per sweep"
    )
    seed: int = Field(default=0, ge=0, description="Base seed for run streams")
    workers: int = Field(default=DEFAULT_WORKERS, ge=1, description="Threads for runs")

    @model_validator(mode="after")
    def _check_schedule(self):
        if self.t_initial is not None and self.t_initial < self.t_final:
            raise ValueError(
                f"t_initial ({self.t_initial}) must be >= t_final ({self.t_final})"
            )
        return self


class ExperimentConfig(BaseModel):
    """One experiment: dataset × methods × K values × seeds."""

    dataset_path: str = Field(..., description="CSV path or builtin dataset name")
    methods: List[Method] = Field(default_factory=lambda: ["da-cr"], min_length=1)
    k_mode: KMode = Field(default="k_true", description="How K is derived from K̃")
    k_values: List[int] = Field(default_factory=list, description="Explicit K values")
    ensemble: EnsembleConfig
    anneal: AnnealParams = Field(default_factory=AnnealParams)
    penalty: Optional[int] = Field(
        default=None, gt=0, description="One-hot penalty override for da-sm and da-cr"
    )
    output_path: str = Field(default="results.jsonl", description="JSON-lines record file")
    seeds: List[int] = Field(default_factory=lambda: [0], min_length=1)
    standardize: bool = Field(default=False, description="z-score features first")
    use_cache: bool = Field(default=True, description="Reuse cached ensembles")
    workers: int = Field(default=DEFAULT_WORKERS, ge=1, description="Seeds run concurrently")

    @field_validator("k_values")
    @classmethod
    def _positive_k(cls, values: List[int]) -> List[int]:
        if any(k < 2 for k in values):
            raise ValueError("every explicit K must be >= 2")
        return values

    @model_validator(mode="after")
    def _explicit_needs_values(self):
        if self.k_mode == "explicit" and not self.k_values:
            raise ValueError("k_mode 'explicit' requires at least one K value")
        return self

    def resolve_k(self, k_true: int) -> List[int]:
        if self.k_mode == "k_true":
            return [k_true]
        if self.k_mode == "2k_true":
            return [2 * k_true]
        return list(self.k_values)


class ExperimentRecord(BaseModel):
    """One (dataset, method, K, seed) result line."""

    schema_version: int = Field(default=RECORD_SCHEMA_VERSION, alias="schema")
    record_type: Literal["run"] = "run"
    dataset: str
    method: Method
    k: int
    seed: int
    n: int
    m: int
    mean_ari: float
    silhouette: Optional[float] = None
    accuracy: Optional[float] = None
    clusters_used: int
    partition_difference: int
    correlation_objective: int
    pairwise_objective: int
    energy: Optional[int] = None
    violations: int = 0
    repaired: bool = False
    sweeps_done: int = 0
    wall_time: float = 0.0

    model_config = ConfigDict(populate_by_name=True)


class AggregateRecord(BaseModel):
    """Mean ± population SD over seeds for one (dataset, method, K)."""

    schema_version: int = Field(default=RECORD_SCHEMA_VERSION, alias="schema")
    record_type: Literal["aggregate"] = "aggregate"
    dataset: str
    method: Method
    k: int
    seeds: List[int]
    mean_ari: float
    mean_ari_sd: float
    silhouette: Optional[float] = None
    silhouette_sd: Optional[float] = None
    accuracy: Optional[float] = None
    accuracy_sd: Optional[float] = None
    clusters_used: float
    clusters_used_sd: float

    model_config = ConfigDict(populate_by_name=True)
