from __future__ import annotations

import enum
import time
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Sequence

import numpy as np

from ..instance import Schedule, total_weighted_tardiness, validate_schedule
from . import _kernels
from ._kernels import BACKTRACKS, BEST, DONE, HAS_INC, NHIST, NODES, PROPS
from .model import Model, tie_break_ranks

_HISTORY_CAP = 4096
_TIME_CHUNK = 2000


class Status(str, enum.Enum):
    OPTIMAL = "OPTIMAL"
    FEASIBLE = "FEASIBLE"
    INFEASIBLE = "INFEASIBLE"
    UNKNOWN = "UNKNOWN"


@dataclass
class SolverConfig:
    """Search limits and the variable-ordering tie-breaker.

    ``selector`` is any object accepted by :func:`gcp_rcjs.selector.priorities_for`;
    ``None`` means every job has the same priority. ``warm_start`` seeds the
    incumbent with a known feasible schedule.
    """

    node_budget: int = 50_000
    time_budget: float | None = None
    selector: object | None = None
    seed: int = 0
    warm_start: Schedule | None = None

    def __post_init__(self):
        if self.node_budget < 1:
            raise ValueError("node_budget must be >= 1")
        if self.time_budget is not None and self.time_budget <= 0:
            raise ValueError("time_budget must be positive")


@dataclass
class SolveStats:
    nodes: int = 0
    backtracks: int = 0
    propagations: int = 0
    elapsed: float = 0.0
    # (node index, objective) for each improving incumbent, in order
    incumbents: list[tuple[int, Fraction]] = field(default_factory=list)


@dataclass
class SolveResult:
    best_schedule: Schedule | None
    best_objective: Fraction | None
    status: Status
    stats: SolveStats

    @property
    def has_solution(self) -> bool:
        return self.best_schedule is not None


def solve(model: Model, config: SolverConfig | None = None, priorities: Sequence | None = None) -> SolveResult:
    """Depth-first branch-and-bound minimising total weighted tardiness.

    Priorities are computed once from ``config.selector`` unless given.
    """
    config = config or SolverConfig()
    if priorities is None:
        if config.selector is None:
            priorities = [0] * model.n
        else:
            from ..selector import priorities_for

            priorities = priorities_for(config.selector, model.instance)
    return solve_ranked(
        model,
        tie_break_ranks(priorities),
        node_budget=config.node_budget,
        time_budget=config.time_budget,
        warm_start=config.warm_start,
    )


def solve_ranked(
    model: Model,
    rank: np.ndarray,
    node_budget: int,
    time_budget: float | None = None,
    warm_start: Schedule | None = None,
) -> SolveResult:
    """Search with a precomputed tie-break rank per job (0 = preferred)."""
    n = model.n
    inst = model.instance
    rank = np.asarray(rank, dtype=np.int64)
    if rank.shape != (n,):
        raise ValueError("rank vector length does not match job count")
    started = time.perf_counter()
    stats = SolveStats()

    store = model.initial_store()
    lo, hi = store.lo, store.hi
    state = _kernels.new_state()
    best_starts = np.zeros(n, dtype=np.int64)
    if warm_start is not None:
        if validate_schedule(inst, warm_start):
            raise ValueError("warm-start schedule is infeasible")
        obj = total_weighted_tardiness(inst, warm_start) * 100
        state[BEST] = int(obj)
        state[HAS_INC] = 1
        best_starts[:] = warm_start.starts
    stk_lo = np.zeros((n + 1, n), dtype=np.int64)
    stk_hi = np.zeros((n + 1, n), dtype=np.int64)
    stk_var = np.zeros(n + 1, dtype=np.int64)
    stk_val = np.zeros(n + 1, dtype=np.int64)
    hist_obj = np.zeros(_HISTORY_CAP, dtype=np.int64)
    hist_node = np.zeros(_HISTORY_CAP, dtype=np.int64)
    prof = np.zeros(model.horizon + 1, dtype=np.int64)

    deadline = None if time_budget is None else started + time_budget
    timed_out = False
    while True:
        stop = node_budget if deadline is None else min(node_budget, int(state[NODES]) + _TIME_CHUNK)
        _kernels.run_search(
            model.p, model.d, model.w100, model.g, model.resource_limit, model.horizon,
            model.pair_a, model.pair_b, model.prec_a, model.prec_b, rank,
            lo, hi, stk_lo, stk_hi, stk_var, stk_val, state, best_starts,
            hist_obj, hist_node, prof, stop,
        )
        if state[DONE] or state[NODES] >= node_budget:
            break
        if deadline is not None and time.perf_counter() >= deadline:
            timed_out = True
            break

    exhausted = bool(state[DONE]) and not timed_out
    has_inc = bool(state[HAS_INC])
    if exhausted:
        status = Status.OPTIMAL if has_inc else Status.INFEASIBLE
    else:
        status = Status.FEASIBLE if has_inc else Status.UNKNOWN

    stats.nodes = int(state[NODES])
    stats.backtracks = int(state[BACKTRACKS])
    stats.propagations = int(state[PROPS])
    k = min(int(state[NHIST]), _HISTORY_CAP)
    stats.incumbents = [(int(hist_node[i]), Fraction(int(hist_obj[i]), 100)) for i in range(k)]
    stats.elapsed = time.perf_counter() - started

    if not has_inc:
        return SolveResult(None, None, status, stats)
    schedule = Schedule(tuple(int(s) for s in best_starts))
    return SolveResult(schedule, Fraction(int(state[BEST]), 100), status, stats)
