"""Table-based greedy genetic search over binary surface configurations.

The search keeps a table of the B best (configuration, cost) pairs seen so
far, sorted by cost.  Each step samples a candidate bit-wise from
rank-weighted per-element one-probabilities, measures it through the
(noisy) RSSI oracle, and replaces the worst table entry when the candidate
is at least as good.  All B entries are re-measured periodically so stale
lucky measurements get washed out.

A measurement oracle is any callable mapping RisConfig to a pair of RSSI
arrays (targets, non-targets), both in dBm.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from .ris import RisConfig, enumerate_configs

MeasurementOracle = Callable[[RisConfig], tuple[np.ndarray, np.ndarray]]

DEFAULT_TABLE_SIZE = 100
DEFAULT_STEPS = 10000
DEFAULT_REEVAL_PERIOD = 1000
DEFAULT_EPSILON = 0.02

# Pseudo-count of a neutral 0.5 prior mixed into the per-element bit
# frequencies.  Founding (never-replaced) table entries gate acceptance but
# do not vote on the frequencies; without both measures the search provably
# retains a few dozen bits of memory of the random initialization, which
# breaks the expected random-vs-final Hamming distance of L/2.
PROBABILITY_PRIOR = 5.0


@dataclass(frozen=True)
class CostWeights:
    """Mean vs extreme weighting of the per-set RSSI aggregates."""

    w_mean: float = 0.3
    w_extreme: float = 0.7

    def __post_init__(self):
        if self.w_mean < 0 or self.w_extreme < 0:
            raise ValueError("weights must be non-negative")
        if abs(self.w_mean + self.w_extreme - 1.0) > 1e-9:
            raise ValueError("weights must sum to 1")


def aggregate_cost(rssi_targets, rssi_nontargets,
                   weights: CostWeights = CostWeights(),
                   noise_floor_dbm: float = -95.0) -> float:
    """Signed squared difference of the target and non-target aggregates.

    Targets aggregate with mean and min (worst target dominates), non-targets
    with mean and max (loudest non-target dominates).  Higher is better.  An
    empty non-target set (everything hidden) falls back to the noise floor.
    """
    t = np.asarray(rssi_targets, dtype=float)
    if t.size == 0:
        raise ValueError("target RSSI list must not be empty")
    n = np.asarray(rssi_nontargets, dtype=float)
    a_t = weights.w_mean * t.mean() + weights.w_extreme * t.min()
    if n.size == 0:
        a_n = float(noise_floor_dbm)
    else:
        a_n = weights.w_mean * n.mean() + weights.w_extreme * n.max()
    diff = a_t - a_n
    return float(np.sign(diff) * diff * diff)


def cost_margin_db(cost: float) -> float:
    """Signed square root: the aggregate separation in dB behind a cost."""
    return math.copysign(math.sqrt(abs(cost)), cost)


@dataclass
class OptimizerState:
    """Sorted candidate table plus sampling parameters; row 0 is the best."""

    bits: np.ndarray            # (B, L) float64 in {0, 1}, sorted by cost desc
    costs: np.ndarray           # (B,)
    founder: np.ndarray         # (B,) bool, True for initial random entries
    step: int
    rng: np.random.Generator
    weights: CostWeights
    noise_floor_dbm: float
    epsilon: float
    reeval_period: int
    rank_weights: np.ndarray = field(init=False)

    def __post_init__(self):
        if not 0.0 < self.epsilon < 0.5:
            raise ValueError("epsilon must be in (0, 0.5)")
        b = self.bits.shape[0]
        # Linear rank weights B..1 over the sorted table.
        self.rank_weights = np.arange(b, 0, -1, dtype=float)

    @property
    def table_size(self) -> int:
        return int(self.bits.shape[0])

    @property
    def n_elements(self) -> int:
        return int(self.bits.shape[1])

    def best_config(self) -> RisConfig:
        return RisConfig(self.bits[0].astype(np.uint8))

    def best_cost(self) -> float:
        return float(self.costs[0])

    def worst_cost(self) -> float:
        return float(self.costs[-1])


def element_probabilities(state: OptimizerState) -> np.ndarray:
    """Rank-weighted one-probability per element, clipped to the exploration floor.

    Only entries discovered by the search vote; while the table is all
    founders the probabilities sit at 0.5.
    """
    w = np.where(state.founder, 0.0, state.rank_weights)
    total = w.sum() + PROBABILITY_PRIOR
    p = (w @ state.bits + PROBABILITY_PRIOR * 0.5) / total
    return np.clip(p, state.epsilon, 1.0 - state.epsilon)


def _measure(oracle: MeasurementOracle, bits_row: np.ndarray,
             weights: CostWeights, noise_floor_dbm: float) -> float:
    t, n = oracle(RisConfig(bits_row.astype(np.uint8)))
    return aggregate_cost(t, n, weights, noise_floor_dbm)


def optimizer_init(table_size: int, n_elements: int, oracle: MeasurementOracle,
                   seed, *, weights: CostWeights | None = None,
                   epsilon: float = DEFAULT_EPSILON,
                   reeval_period: int = DEFAULT_REEVAL_PERIOD,
                   noise_floor_dbm: float = -95.0) -> OptimizerState:
    """Fill the table with random configurations, measured once each."""
    if table_size < 2:
        raise ValueError("table_size must be >= 2")
    if n_elements < 1:
        raise ValueError("n_elements must be >= 1")
    weights = weights or CostWeights()
    rng = np.random.default_rng(seed)
    bits = rng.integers(0, 2, (table_size, n_elements)).astype(float)
    costs = np.array([
        _measure(oracle, bits[i], weights, noise_floor_dbm)
        for i in range(table_size)
    ])
    order = np.argsort(-costs, kind="stable")
    return OptimizerState(
        bits=bits[order], costs=costs[order],
        founder=np.ones(table_size, dtype=bool), step=0, rng=rng,
        weights=weights, noise_floor_dbm=noise_floor_dbm,
        epsilon=epsilon, reeval_period=reeval_period,
    )


def optimizer_step(state: OptimizerState, oracle: MeasurementOracle) -> OptimizerState:
    """One candidate generation / measurement / table update.

    All oracle calls happen before any mutation, so a raised measurement
    error leaves the state untouched.  When the completed-step counter hits
    a multiple of reeval_period, the whole table is re-measured and
    re-sorted as part of this step.
    """
    p = element_probabilities(state)
    candidate = (state.rng.random(state.n_elements) < p).astype(float)
    cand_cost = _measure(oracle, candidate, state.weights, state.noise_floor_dbm)

    bits = state.bits
    costs = state.costs
    founder = state.founder
    if cand_cost >= costs[-1]:
        # Ties evict the incumbent worst and rank the newcomer above its
        # cost class: fresh genetic material wins ties.
        bits = np.vstack([candidate, bits[:-1]])
        costs = np.append(cand_cost, costs[:-1])
        founder = np.append(False, founder[:-1])
        order = np.argsort(-costs, kind="stable")
        bits, costs, founder = bits[order], costs[order], founder[order]

    next_step = state.step + 1
    if state.reeval_period and next_step % state.reeval_period == 0:
        costs = np.array([
            _measure(oracle, bits[i], state.weights, state.noise_floor_dbm)
            for i in range(bits.shape[0])
        ])
        order = np.argsort(-costs, kind="stable")
        bits, costs, founder = bits[order], costs[order], founder[order]

    state.bits = np.ascontiguousarray(bits)
    state.costs = costs
    state.founder = founder
    state.step = next_step
    return state


@dataclass
class Trace:
    """Per-step best-cost / best-configuration records (index 0 = post-init)."""

    best_cost: np.ndarray       # (steps + 1,)
    worst_cost: np.ndarray      # (steps + 1,)
    best_bits: np.ndarray       # (steps + 1, L) uint8
    reeval_period: int

    @property
    def n_steps(self) -> int:
        return len(self.best_cost) - 1

    def best_config_at(self, step: int) -> RisConfig:
        return RisConfig(self.best_bits[step])

    def final_config(self) -> RisConfig:
        return RisConfig(self.best_bits[-1])

    def hamming_to_final(self) -> np.ndarray:
        final = self.best_bits[-1]
        return (self.best_bits != final[None, :]).sum(axis=1)

    def cost_drop_steps(self) -> np.ndarray:
        """Steps at which the recorded best cost decreased."""
        drops = np.flatnonzero(np.diff(self.best_cost) < 0) + 1
        return drops

    def write_csv(self, path) -> None:
        with open(path, "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(["step", "best_cost", "best_config_hex",
                             "table_worst_cost"])
            for step in range(len(self.best_cost)):
                writer.writerow([
                    step,
                    format(self.best_cost[step], ".10g"),
                    RisConfig(self.best_bits[step]).to_hex(),
                    format(self.worst_cost[step], ".10g"),
                ])


def run_optimizer(table_size: int, steps: int, n_elements: int,
                  oracle: MeasurementOracle, seed, *,
                  weights: CostWeights | None = None,
                  epsilon: float = DEFAULT_EPSILON,
                  reeval_period: int = DEFAULT_REEVAL_PERIOD,
                  noise_floor_dbm: float = -95.0) -> tuple[RisConfig, Trace]:
    """Initialized search for the given number of steps; returns best + trace."""
    if steps < 0:
        raise ValueError("steps must be >= 0")
    state = optimizer_init(table_size, n_elements, oracle, seed,
                           weights=weights, epsilon=epsilon,
                           reeval_period=reeval_period,
                           noise_floor_dbm=noise_floor_dbm)
    best_cost = np.empty(steps + 1)
    worst_cost = np.empty(steps + 1)
    best_bits = np.empty((steps + 1, n_elements), dtype=np.uint8)
    best_cost[0] = state.best_cost()
    worst_cost[0] = state.worst_cost()
    best_bits[0] = state.bits[0]
    for i in range(1, steps + 1):
        optimizer_step(state, oracle)
        best_cost[i] = state.best_cost()
        worst_cost[i] = state.worst_cost()
        best_bits[i] = state.bits[0]
    trace = Trace(best_cost=best_cost, worst_cost=worst_cost,
                  best_bits=best_bits, reeval_period=reeval_period)
    return state.best_config(), trace


def convergence_stats(traces: Trace | Sequence[Trace]) -> dict:
    """Summary curves of distance-to-final and cost over one or more runs."""
    if isinstance(traces, Trace):
        traces = [traces]
    traces = list(traces)
    if not traces:
        raise ValueError("at least one trace is required")
    lengths = {t.n_steps for t in traces}
    if len(lengths) != 1:
        raise ValueError("all traces must have the same number of steps")
    distances = np.stack([t.hamming_to_final() for t in traces])
    costs = np.stack([t.best_cost for t in traces])
    stats = {
        "steps": list(range(traces[0].n_steps + 1)),
        "mean_distance": distances.mean(axis=0).tolist(),
        "mean_cost": costs.mean(axis=0).tolist(),
        "initial_mean_distance": float(distances[:, 0].mean()),
        "runs": len(traces),
    }
    if len(traces) > 1:
        stats["p5_distance"] = np.percentile(distances, 5, axis=0).tolist()
        stats["p95_distance"] = np.percentile(distances, 95, axis=0).tolist()
    return stats


def write_convergence_json(traces: Trace | Sequence[Trace], path) -> dict:
    """Summarize one or more traces and persist the curves as JSON."""
    import json

    stats = convergence_stats(traces)
    with open(path, "w") as fh:
        json.dump(stats, fh, sort_keys=True, indent=1)
        fh.write("\n")
    return stats


def brute_force_best(n_elements: int, oracle: MeasurementOracle, *,
                     weights: CostWeights | None = None,
                     noise_floor_dbm: float = -95.0) -> tuple[RisConfig, float]:
    """Exhaustive argmax over all 2^L configurations (deterministic oracle).

    Ties go to the lexicographically smallest bit string, which is the
    first one enumerated.
    """
    weights = weights or CostWeights()
    best_config = None
    best_cost = -math.inf
    for config in enumerate_configs(n_elements):
        t, n = oracle(config)
        cost = aggregate_cost(t, n, weights, noise_floor_dbm)
        if cost > best_cost:
            best_config, best_cost = config, cost
    return best_config, best_cost
