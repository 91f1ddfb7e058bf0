"""
Software emulation of a parallel-trial annealer with dynamic offset.

Each Monte Carlo step evaluates every single-bit flip against the current
state. A flip i passes with probability min(1, exp(−(ΔE_i − E_off)/T)); if
any pass, one of them is applied, chosen uniformly, and the offset returns
to zero. If none pass, the offset grows by a fixed increment, which lowers
the barrier for the next step. Temperature decays geometrically once per
sweep of num_vars steps.

ΔE_i is O(1) from a cached local field local[i] = Σ_j c_ij q_j that is
updated along i's CSR row after every applied flip.
"""

import math
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import List, Optional, Tuple

import numpy as np
import pandas as pd
from numba import njit
from tqdm import tqdm

from core.errors import SolverError
from core.qubo import coupler_matrix, eval_qubo
from core.types import QuboModel, SolveReport
from logger import get_logger
from models.schemas import AnnealParams

logger = get_logger(__name__)

# Flips whose scaled barrier exceeds this are rejected without drawing a
# uniform: exp(-50) is below double-precision resolution near 1.
MAX_EXPONENT = 50.0


@njit(cache=True, nogil=True)
def _seed_stream(seed):
    np.random.seed(seed)


@njit(cache=True, nogil=True)
def _delta(state, biases, local, i):
    return (1 - 2 * state[i]) * (biases[i] + local[i])


@njit(cache=True, nogil=True)
def _apply_flip(state, local, indptr, indices, data, i):
    sign = 1 - 2 * state[i]
    state[i] = 1 - state[i]
    for p in range(indptr[i], indptr[i + 1]):
        local[indices[p]] += sign * data[p]


@njit(cache=True, nogil=True)
def _sweep(
    state,
    local,
    biases,
    indptr,
    indices,
    data,
    temperature,
    offset_increment,
    steps,
    energy,
    offset,
    best_state,
    best_energy,
):
    n = state.shape[0]
    passers = np.empty(n, dtype=np.int64)
    for _ in range(steps):
        count = 0
        for i in range(n):
            excess = _delta(state, biases, local, i) - offset
            if excess <= 0.0:
                passers[count] = i
                count += 1
            else:
                scaled = excess / temperature
                if scaled < MAX_EXPONENT and np.random.random() < math.exp(-scaled):
                    passers[count] = i
                    count += 1
        if count == 0:
            offset += offset_increment
            continue
        chosen = passers[np.random.randint(0, count)]
        energy += _delta(state, biases, local, chosen)
        _apply_flip(state, local, indptr, indices, data, chosen)
        offset = 0.0
        if energy < best_energy:
            best_energy = energy
            best_state[:] = state
    return energy, offset, best_energy


@dataclass
class IncrementalState:
    """
    A bit-vector with its cached local fields and energy, kept consistent
    under flips. Used by the annealer runs and by tests of the delta rule.
    """

    model: QuboModel
    state: np.ndarray
    local: np.ndarray = field(init=False)
    energy: int = field(init=False)

    def __post_init__(self):
        matrix = coupler_matrix(self.model)
        self.indptr = matrix.indptr.astype(np.int64)
        self.indices = matrix.indices.astype(np.int64)
        self.data = matrix.data.astype(np.int64)
        self.biases = np.ascontiguousarray(self.model.biases, dtype=np.int64)
        self.state = np.array(self.state, dtype=np.int64).reshape(-1)
        if self.state.shape[0] != self.model.num_vars:
            raise SolverError(
                f"state has {self.state.shape[0]} bits, model has {self.model.num_vars}"
            )
        self.local = (matrix @ self.state).astype(np.int64)
        self.energy = eval_qubo(self.state, self.model)

    def delta(self, i: int) -> int:
        return delta_energy(self.state, i, self.model, self.local)

    def flip(self, i: int) -> int:
        change = self.delta(i)
        _apply_flip(self.state, self.local, self.indptr, self.indices, self.data, i)
        self.energy += change
        return change


def delta_energy(state: np.ndarray, i: int, model: QuboModel, cache: np.ndarray) -> int:
    """
    Energy change of flipping bit i, given cache[j] = Σ_k c_jk·state_k.

    Args:
        state: Current 0/1 vector
        i: Variable to flip
        model: Model the cache belongs to
        cache: Local-field vector

    Returns:
        E(state with i flipped) − E(state)
    """
    if not 0 <= i < model.num_vars:
        raise SolverError(f"variable {i} out of range [0, {model.num_vars})")
    return int((1 - 2 * int(state[i])) * (int(model.biases[i]) + int(cache[i])))


def schedule(params: AnnealParams, model: QuboModel) -> np.ndarray:
    """Geometric temperatures, one per sweep, from t_initial down to t_final."""
    t_initial = params.t_initial if params.t_initial is not None else float(
        max(model.max_abs_coefficient(), 1)
    )
    t_final = min(params.t_final, t_initial)
    sweeps = params.sweeps_per_run
    if sweeps == 1:
        return np.array([t_initial])
    factor = (t_final / t_initial) ** (1.0 / (sweeps - 1))
    return t_initial * factor ** np.arange(sweeps)


def offset_step(params: AnnealParams, model: QuboModel) -> float:
    """
    Dynamic-offset increment. Unless set explicitly it scales with the model:
    a full sweep of idle steps raises the offset by the largest coefficient,
    so penalty-sized barriers are crossable within a sweep at any weight.
    """
    if params.offset_increment is not None:
        return float(params.offset_increment)
    return max(1.0, model.max_abs_coefficient() / model.num_vars)


def run_seed(seed: int, run_index: int) -> int:
    """Per-run stream seed; independent of the order runs are executed in."""
    return int(np.random.SeedSequence([seed, run_index]).generate_state(1)[0])


@dataclass
class RunResult:
    run_index: int
    best_bits: np.ndarray
    best_energy: int
    sweeps_done: int
    trace: List[Tuple[int, int, int, int, float]]


def _anneal_run(
    model: QuboModel,
    params: AnnealParams,
    temperatures: np.ndarray,
    run_index: int,
    deadline: Optional[float],
    increment: float,
) -> RunResult:
    seed = run_seed(params.seed, run_index)
    rng = np.random.default_rng(seed)
    tracker = IncrementalState(model, rng.integers(0, 2, size=model.num_vars))
    _seed_stream(seed)

    best_state = tracker.state.copy()
    best_energy = np.int64(tracker.energy)
    energy = np.int64(tracker.energy)
    offset = 0.0
    trace = []
    sweeps_done = 0

    for sweep, temperature in enumerate(temperatures):
        if deadline is not None and time.perf_counter() >= deadline:
            break
        energy, offset, best_energy = _sweep(
            tracker.state,
            tracker.local,
            tracker.biases,
            tracker.indptr,
            tracker.indices,
            tracker.data,
            float(temperature),
            increment,
            model.num_vars,
            energy,
            offset,
            best_state,
            best_energy,
        )
        sweeps_done += 1
        trace.append((run_index, sweep, int(best_energy), int(energy), float(offset)))

    return RunResult(
        run_index=run_index,
        best_bits=best_state.astype(np.int8),
        best_energy=int(best_energy),
        sweeps_done=sweeps_done,
        trace=trace,
    )


def anneal(model: QuboModel, params: AnnealParams) -> SolveReport:
    """
    Minimize a QUBO with num_runs independent parallel-trial annealing runs.

    Each run starts from a uniformly random state drawn from its own stream
    (seeded from (params.seed, run index)) and walks the geometric schedule.
    The best state over all runs is returned with its re-evaluated energy;
    ties go to the lowest run index.

    Args:
        model: QUBO to minimize
        params: Runs, sweeps, schedule, offset increment, time limit, seed

    Returns:
        SolveReport with the best raw bits, their decoded (and if needed
        repaired) partition, and the per-sweep trace of every run
    """
    if model.num_vars < 1:
        raise SolverError("cannot anneal an empty model")
    temperatures = schedule(params, model)
    increment = offset_step(params, model)
    if not np.all(np.isfinite(temperatures)) or temperatures.min() <= 0:
        raise SolverError("temperature schedule is not finite and positive")

    start = time.perf_counter()
    deadline = start + params.time_limit if params.time_limit is not None else None
    logger.debug(
        f"Annealing {model.model_kind.value} model: vars={model.num_vars}, "
        f"runs={params.num_runs}, sweeps={params.sweeps_per_run}, "
        f"T={temperatures[0]:.1f}->{temperatures[-1]:.3f}, offset step={increment:.1f}"
    )

    def one(run_index: int) -> RunResult:
        return _anneal_run(model, params, temperatures, run_index, deadline, increment)

    runs = range(params.num_runs)
    progress = dict(total=params.num_runs, desc="anneal", disable=None, leave=False)
    if params.workers > 1:
        with ThreadPoolExecutor(max_workers=params.workers) as pool:
            results = list(tqdm(pool.map(one, runs), **progress))
    else:
        results = [one(r) for r in tqdm(runs, **progress)]

    best = min(results, key=lambda r: (r.best_energy, r.run_index))
    exact = eval_qubo(best.best_bits, model)
    if exact != best.best_energy:
        raise SolverError(
            f"incremental energy {best.best_energy} disagrees with re-evaluation {exact}"
        )

    sweeps_done = sum(r.sweeps_done for r in results)
    timed_out = sweeps_done < params.num_runs * params.sweeps_per_run
    if timed_out:
        logger.warning(
            f"Time limit {params.time_limit}s reached after {sweeps_done} of "
            f"{params.num_runs * params.sweeps_per_run} sweeps"
        )

    wall_time = time.perf_counter() - start
    logger.info(
        f"Anneal finished: best energy={exact}, sweeps={sweeps_done}, time={wall_time:.2f}s"
    )
    from core.consensus import decode

    partition, violations = decode(best.best_bits, model)
    trace = [row for r in sorted(results, key=lambda r: r.run_index) for row in r.trace]
    return SolveReport(
        best_bits=best.best_bits,
        best_energy=exact,
        partition=partition,
        violations=violations,
        repaired=violations > 0,
        sweeps_done=sweeps_done,
        seed=params.seed,
        wall_time=wall_time,
        model_kind=model.model_kind,
        trace=tuple(trace),
    )


def write_trace(report: SolveReport, path: str) -> None:
    """Energy trace as CSV: run,sweep,best_energy,current_energy,offset."""
    frame = pd.DataFrame(
        list(report.trace), columns=["run", "sweep", "best_energy", "current_energy", "offset"]
    )
    frame.to_csv(path, index=False)
    logger.debug(f"Energy trace written to {path} ({len(frame)} rows)")
