from __future__ import annotations

import enum
from dataclasses import dataclass
from typing import NamedTuple, Sequence

import numpy as np

from ..instance import Instance, InstanceError
from . import _kernels


class RootInfeasible(InstanceError):
    """Some job cannot fit between its release and the horizon."""


class Propagation(enum.Enum):
    CONSISTENT = "CONSISTENT"
    CONFLICT = "CONFLICT"


class Domain(NamedTuple):
    min: int
    max: int

    @property
    def assigned(self) -> bool:
        return self.min == self.max


@dataclass(frozen=True, eq=False)
class Model:
    """Immutable constraint model derived from an instance.

    The int64 arrays are what the compiled kernels consume; weights are
    scaled by 100 so tardiness stays integral.
    """

    instance: Instance
    machine_jobs: tuple[tuple[int, ...], ...]
    preds: tuple[tuple[int, ...], ...]
    succs: tuple[tuple[int, ...], ...]
    p: np.ndarray
    r: np.ndarray
    d: np.ndarray
    w100: np.ndarray
    g: np.ndarray
    pair_a: np.ndarray
    pair_b: np.ndarray
    prec_a: np.ndarray
    prec_b: np.ndarray

    @property
    def n(self) -> int:
        return self.instance.n

    @property
    def horizon(self) -> int:
        return self.instance.horizon

    @property
    def resource_limit(self) -> int:
        return self.instance.resource_limit

    def initial_store(self) -> VarStore:
        lo = self.r.copy()
        hi = self.horizon - self.p
        return VarStore(lo, hi)


def build_model(instance: Instance) -> Model:
    T = instance.horizon
    for job in instance.jobs:
        if job.release + job.processing > T:
            raise RootInfeasible(
                f"job {job.id}: release {job.release} + processing {job.processing} exceeds horizon {T}"
            )
    jobs = instance.jobs
    machine_jobs = tuple(tuple(m) for m in instance.machine_jobs())
    pairs = [(a, b) for members in machine_jobs for k, a in enumerate(members) for b in members[k + 1:]]
    # precedence pairs are fully handled by the precedence filter
    prec_set = set(instance.precedences) | {(j, i) for i, j in instance.precedences}
    pairs = [pr for pr in pairs if pr not in prec_set]

    def arr(values):
        return np.asarray(list(values), dtype=np.int64)

    return Model(
        instance=instance,
        machine_jobs=machine_jobs,
        preds=tuple(tuple(x) for x in instance.predecessors()),
        succs=tuple(tuple(x) for x in instance.successors()),
        p=arr(j.processing for j in jobs),
        r=arr(j.release for j in jobs),
        d=arr(j.due for j in jobs),
        w100=arr(int(j.weight * 100) for j in jobs),
        g=arr(j.resource for j in jobs),
        pair_a=arr(a for a, _ in pairs),
        pair_b=arr(b for _, b in pairs),
        prec_a=arr(i for i, _ in instance.precedences),
        prec_b=arr(j for _, j in instance.precedences),
    )


class VarStore:
    """Start-time interval domains with an undo trail."""

    def __init__(self, lo: Sequence[int], hi: Sequence[int]):
        self.lo = np.array(lo, dtype=np.int64)
        self.hi = np.array(hi, dtype=np.int64)
        self._trail: list[tuple[int, int, int]] = []

    def __len__(self) -> int:
        return self.lo.shape[0]

    def domain(self, j: int) -> Domain:
        return Domain(int(self.lo[j]), int(self.hi[j]))

    def domains(self) -> list[Domain]:
        return [Domain(int(a), int(b)) for a, b in zip(self.lo, self.hi)]

    def is_assigned(self, j: int) -> bool:
        return self.lo[j] == self.hi[j]

    def all_assigned(self) -> bool:
        return bool(np.all(self.lo == self.hi))

    def mark(self) -> int:
        return len(self._trail)

    def _record(self, j: int) -> None:
        self._trail.append((j, int(self.lo[j]), int(self.hi[j])))

    def set_min(self, j: int, value: int) -> None:
        if value > self.lo[j]:
            self._record(j)
            self.lo[j] = value

    def set_max(self, j: int, value: int) -> None:
        if value < self.hi[j]:
            self._record(j)
            self.hi[j] = value

    def assign(self, j: int, value: int) -> None:
        self.set_min(j, value)
        self.set_max(j, value)

    def restore(self, mark: int) -> None:
        while len(self._trail) > mark:
            j, lo, hi = self._trail.pop()
            self.lo[j] = lo
            self.hi[j] = hi

    def copy(self) -> VarStore:
        return VarStore(self.lo.copy(), self.hi.copy())


def propagate(model: Model, store: VarStore) -> Propagation:
    """Run all filters to a fixpoint, recording every change on the trail."""
    lo = store.lo.copy()
    hi = store.hi.copy()
    prof = np.zeros(model.horizon + 1, dtype=np.int64)
    ok = _kernels.propagate_bounds(
        lo, hi, model.p, model.g, model.resource_limit, model.horizon,
        model.pair_a, model.pair_b, model.prec_a, model.prec_b, prof,
    )
    for j in np.flatnonzero((lo != store.lo) | (hi != store.hi)):
        store.set_min(int(j), int(lo[j]))
        store.set_max(int(j), int(hi[j]))
    return Propagation.CONSISTENT if ok else Propagation.CONFLICT


def tie_break_ranks(priorities: Sequence) -> np.ndarray:
    """Rank 0 is the highest priority; equal priorities fall back to job id."""
    order = sorted(range(len(priorities)), key=lambda j: (-priorities[j], j))
    rank = np.empty(len(priorities), dtype=np.int64)
    rank[order] = np.arange(len(priorities))
    return rank


def select_variable(store: VarStore, priorities: Sequence) -> int | None:
    """Smallest domain minimum first; ties by highest priority, then lowest id."""
    if len(priorities) != len(store):
        raise ValueError("priority list length does not match variable count")
    j = _kernels.pick_variable(store.lo, store.hi, tie_break_ranks(priorities))
    return None if j < 0 else int(j)
