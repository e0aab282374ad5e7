"""Simulated annealing over switching sequences.

The acceptance rule is implemented exactly as the exponential-threshold
comparison (improvements therefore always pass), with one proposal draw and
one acceptance draw per iteration from a single caller-visible RNG stream.
Together with the objective's fixed QMC point set this makes whole runs
bit-reproducible from the seed.
"""

from __future__ import annotations

import csv
import math
import time
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .ambiguity import ObjectiveConfig, ObjectiveEvaluator, Region
from .arrays import ArrayModel
from .switching import SwitchingSequence, swap_hybrid, swap_random

DEFAULT_T0_FRACTION = 0.1
DEFAULT_FINAL_TEMPERATURE_RATIO = 1e-4


class AnnealError(RuntimeError):
    """Objective evaluation failed mid-run; carries the trace so far."""

    def __init__(self, message: str, trace: "AnnealTrace"):
        super().__init__(message)
        self.trace = trace


@dataclass(frozen=True)
class AnnealConfig:
    """Annealing settings. t0/alpha of None are resolved at run start:
    t0 = 0.1*|f(init)| and alpha such that the final temperature is 1e-4*t0."""

    objective: ObjectiveConfig = field(default_factory=ObjectiveConfig)
    update: str = "random"
    k_max: int = 200
    t0: float | None = None
    alpha: float | None = None
    seed: int = 0

    def __post_init__(self):
        if self.update not in ("random", "hybrid"):
            raise ValueError("update must be 'random' or 'hybrid'")
        if self.k_max < 1:
            raise ValueError("k_max must be >= 1")
        if self.t0 is not None and not self.t0 > 0:
            raise ValueError("t0 must be positive")
        if self.alpha is not None and not (0.0 < self.alpha < 1.0):
            raise ValueError("alpha must lie in (0, 1)")


def temperature_schedule(t0: float, alpha: float, k: int) -> float:
    """Temperature after k cooling steps: t0 * alpha**k."""
    return t0 * alpha ** k


@dataclass(frozen=True)
class AnnealRecord:
    k: int                    # 0-based iteration index
    objective: float          # objective of the current sequence after accept/reject
    proposal_objective: float
    temperature: float        # temperature used for this iteration's test
    accepted: bool


@dataclass
class AnnealTrace:
    t0: float
    alpha: float
    initial_objective: float
    records: list[AnnealRecord] = field(default_factory=list)
    best_objective: float = math.inf
    best_k: int = -1
    best_sequence: SwitchingSequence | None = None
    wall_time_s: float = 0.0

    @property
    def final_objective(self) -> float:
        return self.records[-1].objective if self.records else self.initial_objective


def anneal(init: SwitchingSequence, config: AnnealConfig, array: ArrayModel,
           region: Region, rng: np.random.Generator | None = None,
           evaluator: ObjectiveEvaluator | None = None
           ) -> tuple[SwitchingSequence, AnnealTrace]:
    """Run the annealing loop and return (final sequence, trace).

    The returned sequence is the one held after the last iteration; the
    lowest-objective sequence seen along the way is kept in the trace.
    """
    if config.update == "hybrid" and init.partition is None:
        raise ValueError("hybrid update requires a partitioned initial sequence")
    if rng is None:
        rng = np.random.default_rng(config.seed)
    if evaluator is None:
        evaluator = ObjectiveEvaluator.for_sequence(array, region,
                                                    config.objective, init)

    start = time.perf_counter()
    current = init
    f_current = evaluator.evaluate(current)
    t0 = config.t0 if config.t0 is not None else DEFAULT_T0_FRACTION * abs(f_current)
    if not t0 > 0:
        raise ValueError("auto t0 failed: initial objective is zero; set t0 explicitly")
    alpha = (config.alpha if config.alpha is not None
             else DEFAULT_FINAL_TEMPERATURE_RATIO ** (1.0 / config.k_max))

    trace = AnnealTrace(t0=t0, alpha=alpha, initial_objective=f_current,
                        best_objective=f_current, best_k=-1, best_sequence=current)
    for k in range(config.k_max):
        if config.update == "hybrid":
            proposal = swap_hybrid(current, k, rng)
        else:
            proposal = swap_random(current, rng)
        u = rng.random()
        try:
            f_proposal = evaluator.evaluate(proposal)
        except Exception as exc:
            raise AnnealError(f"objective evaluation failed at iteration {k}",
                              trace) from exc
        temperature = temperature_schedule(t0, alpha, k)
        delta = f_current - f_proposal
        # literal rule exp(delta/T) > u, written to avoid overflow for delta >= 0
        accepted = delta >= 0.0 or math.exp(delta / temperature) > u
        if accepted:
            current = proposal
            f_current = f_proposal
        if f_current < trace.best_objective:
            trace.best_objective = f_current
            trace.best_k = k
            trace.best_sequence = current
        trace.records.append(AnnealRecord(k, f_current, f_proposal,
                                          temperature, accepted))
    trace.wall_time_s = time.perf_counter() - start
    return current, trace


def save_trace_csv(trace: AnnealTrace, path: str | Path) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["k", "objective", "proposal_objective",
                         "temperature", "accepted"])
        for rec in trace.records:
            writer.writerow([rec.k, repr(rec.objective), repr(rec.proposal_objective),
                             repr(rec.temperature), int(rec.accepted)])
