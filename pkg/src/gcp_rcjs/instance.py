"""RCJS instance data model.

Jobs are fixed to machines, same-machine jobs may be linked by precedences,
and every running job draws on a single shared renewable resource. Times are
integers; weights are exact decimals (at most two fraction digits) held as
:class:`fractions.Fraction` so that tardiness comparisons are exact.
"""

from __future__ import annotations

import heapq
import re
from dataclasses import dataclass, field
from decimal import Decimal, InvalidOperation
from fractions import Fraction
from typing import Iterable, Sequence

import numpy as np

__all__ = [
    "Job",
    "Instance",
    "Schedule",
    "GenConfig",
    "Violation",
    "InstanceError",
    "InstanceFormatError",
    "parse_instance",
    "format_instance",
    "read_instance",
    "write_instance",
    "generate_instance",
    "compute_horizon",
    "total_weighted_tardiness",
    "validate_schedule",
    "serial_schedule",
    "list_schedule",
    "format_rational",
    "parse_weight",
]


class InstanceError(ValueError):
    """An instance violates one of the model invariants."""


class InstanceFormatError(InstanceError):
    """Syntax error in the canonical text format."""

    def __init__(self, message: str, line: int | None = None):
        self.line = line
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)


def parse_weight(text: str) -> Fraction:
    try:
        dec = Decimal(text)
    except InvalidOperation:
        raise ValueError(f"invalid weight {text!r}") from None
    if not dec.is_finite() or dec < 0:
        raise ValueError(f"weight must be a finite non-negative decimal, got {text!r}")
    if dec.as_tuple().exponent < -2 and dec != dec.quantize(Decimal("0.01")):
        raise ValueError(f"weight {text!r} has more than two fraction digits")
    return Fraction(dec)


def format_rational(value: Fraction | int) -> str:
    """Exact text form: integer, terminating decimal, or ``p/q``."""
    value = Fraction(value)
    if value.denominator == 1:
        return str(value.numerator)
    den = value.denominator
    twos = fives = 0
    while den % 2 == 0:
        den //= 2
        twos += 1
    while den % 5 == 0:
        den //= 5
        fives += 1
    if den != 1:
        return f"{value.numerator}/{value.denominator}"
    digits = max(twos, fives)
    scaled = value * 10**digits
    sign = "-" if scaled < 0 else ""
    mag = abs(scaled.numerator)
    whole, frac = divmod(mag, 10**digits)
    return f"{sign}{whole}.{frac:0{digits}d}"


@dataclass(frozen=True)
class Job:
    id: int
    machine: int
    release: int
    processing: int
    due: int
    weight: Fraction
    resource: int

    def __post_init__(self):
        object.__setattr__(self, "weight", Fraction(self.weight))
        if self.processing < 1:
            raise InstanceError(f"job {self.id}: processing time must be >= 1")
        if self.release < 0:
            raise InstanceError(f"job {self.id}: release must be >= 0")
        if self.resource < 0:
            raise InstanceError(f"job {self.id}: resource demand must be >= 0")
        if self.weight < 0:
            raise InstanceError(f"job {self.id}: weight must be >= 0")
        if (self.weight * 100).denominator != 1:
            raise InstanceError(f"job {self.id}: weight needs at most two fraction digits")


@dataclass(frozen=True)
class Instance:
    """A resource-constrained job scheduling instance.

    ``precedences`` is normalised to a sorted tuple of ``(i, j)`` pairs,
    meaning job ``i`` must complete before job ``j`` starts.
    """

    machines: int
    jobs: tuple[Job, ...]
    precedences: tuple[tuple[int, int], ...]
    resource_limit: int
    horizon: int

    def __post_init__(self):
        object.__setattr__(self, "jobs", tuple(self.jobs))
        precs = tuple(sorted({(int(i), int(j)) for i, j in self.precedences}))
        object.__setattr__(self, "precedences", precs)
        if self.machines < 1:
            raise InstanceError("machine count must be >= 1")
        if self.resource_limit < 1:
            raise InstanceError("resource limit must be >= 1")
        n = len(self.jobs)
        for idx, job in enumerate(self.jobs):
            if job.id != idx:
                raise InstanceError(f"job ids must be 0..n-1 in order; got {job.id} at position {idx}")
            if not 0 <= job.machine < self.machines:
                raise InstanceError(f"job {job.id}: machine {job.machine} out of range")
            if job.resource > self.resource_limit:
                raise InstanceError(
                    f"job {job.id}: resource {job.resource} over limit {self.resource_limit}"
                )
        for i, j in precs:
            if not (0 <= i < n and 0 <= j < n):
                raise InstanceError(f"precedence ({i}, {j}) references unknown job")
            if i == j:
                raise InstanceError(f"precedence cycle: self-loop on job {i}")
            if self.jobs[i].machine != self.jobs[j].machine:
                raise InstanceError(f"cross-machine precedence ({i}, {j})")
        cycle = _find_cycle(n, precs)
        if cycle:
            raise InstanceError(f"precedence cycle through jobs {cycle}")

    @property
    def n(self) -> int:
        return len(self.jobs)

    def predecessors(self) -> list[list[int]]:
        preds: list[list[int]] = [[] for _ in self.jobs]
        for i, j in self.precedences:
            preds[j].append(i)
        return preds

    def successors(self) -> list[list[int]]:
        succs: list[list[int]] = [[] for _ in self.jobs]
        for i, j in self.precedences:
            succs[i].append(j)
        return succs

    def machine_jobs(self) -> list[list[int]]:
        lists: list[list[int]] = [[] for _ in range(self.machines)]
        for job in self.jobs:
            lists[job.machine].append(job.id)
        return lists

    def topological_order(self) -> list[int]:
        """Kahn order; among ready jobs the smallest (release, id) goes first."""
        preds_left = [0] * self.n
        succs = self.successors()
        for _, j in self.precedences:
            preds_left[j] += 1
        heap = [(job.release, job.id) for job in self.jobs if preds_left[job.id] == 0]
        heapq.heapify(heap)
        order = []
        while heap:
            _, i = heapq.heappop(heap)
            order.append(i)
            for j in succs[i]:
                preds_left[j] -= 1
                if preds_left[j] == 0:
                    heapq.heappush(heap, (self.jobs[j].release, j))
        return order


def _find_cycle(n: int, precs: Iterable[tuple[int, int]]) -> list[int]:
    succs: list[list[int]] = [[] for _ in range(n)]
    for i, j in precs:
        succs[i].append(j)
    color = [0] * n
    for root in range(n):
        if color[root]:
            continue
        stack = [(root, iter(succs[root]))]
        path = [root]
        color[root] = 1
        while stack:
            node, it = stack[-1]
            nxt = next(it, None)
            if nxt is None:
                color[node] = 2
                stack.pop()
                path.pop()
            elif color[nxt] == 1:
                return path[path.index(nxt):] + [nxt]
            elif color[nxt] == 0:
                color[nxt] = 1
                stack.append((nxt, iter(succs[nxt])))
                path.append(nxt)
    return []


@dataclass(frozen=True)
class Schedule:
    starts: tuple[int, ...]

    def __post_init__(self):
        object.__setattr__(self, "starts", tuple(int(s) for s in self.starts))

    def __len__(self) -> int:
        return len(self.starts)

    def ends(self, instance: Instance) -> tuple[int, ...]:
        return tuple(s + job.processing for s, job in zip(self.starts, instance.jobs))


@dataclass(frozen=True)
class GenConfig:
    """Random generator settings.

    ``jobs_per_machine`` is the inclusive range the per-machine job count is
    drawn from; the default (10, 11) averages 10.5 jobs per machine.
    """

    machines: int = 3
    precedence_probability: float = 0.5
    resource_utilisation: float = 0.5
    seed: int = 0
    jobs_per_machine: tuple[int, int] = (10, 11)
    resource_limit: int = 10

    def __post_init__(self):
        if self.machines < 1:
            raise ValueError("machines must be >= 1")
        if not 0.0 <= self.precedence_probability <= 1.0:
            raise ValueError("precedence_probability must lie in [0, 1]")
        if not 0.0 < self.resource_utilisation <= 1.0:
            raise ValueError("resource_utilisation must lie in (0, 1]")
        lo, hi = self.jobs_per_machine
        if lo < 1 or hi < lo:
            raise ValueError("jobs_per_machine must be a range with 1 <= lo <= hi")
        if self.resource_limit < 1:
            raise ValueError("resource_limit must be >= 1")


@dataclass(frozen=True)
class Violation:
    kind: str  # release | horizon | disjunctive | precedence | resource
    jobs: tuple[int, ...]
    time: int | None = None

    def __str__(self) -> str:
        at = f" at t={self.time}" if self.time is not None else ""
        return f"{self.kind} violation jobs={list(self.jobs)}{at}"


# ---------------------------------------------------------------------------
# text format

_INT = re.compile(r"-?\d+$")


def _int_field(tok: str, what: str, line: int) -> int:
    if not _INT.match(tok):
        raise InstanceFormatError(f"expected integer for {what}, got {tok!r}", line)
    return int(tok)


def parse_instance(text: str) -> Instance:
    """Parse the canonical line-oriented instance format.

    The horizon is computed with :func:`compute_horizon` when the file does
    not declare one. A declared horizon must admit the serial list schedule.
    """
    header: dict[str, tuple[int, int]] = {}
    jobs: list[Job] = []
    precs: list[tuple[int, int]] = []
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        toks = line.split()
        key = toks[0]
        if key in ("machines", "resource", "horizon", "jobs"):
            if len(toks) != 2:
                raise InstanceFormatError(f"'{key}' takes exactly one value", lineno)
            if key in header:
                raise InstanceFormatError(f"duplicate '{key}' record", lineno)
            header[key] = (_int_field(toks[1], key, lineno), lineno)
        elif key == "job":
            if len(toks) != 8:
                raise InstanceFormatError(
                    "job record needs: id machine release processing due weight resource", lineno
                )
            jid, mach, rel, proc, due = (
                _int_field(t, name, lineno)
                for t, name in zip(toks[1:6], ("id", "machine", "release", "processing", "due"))
            )
            try:
                weight = parse_weight(toks[6])
            except ValueError as exc:
                raise InstanceFormatError(str(exc), lineno) from None
            res = _int_field(toks[7], "resource", lineno)
            if jid != len(jobs):
                raise InstanceFormatError(f"job ids must be 0..n-1 in order; expected {len(jobs)}, got {jid}", lineno)
            try:
                jobs.append(Job(jid, mach, rel, proc, due, weight, res))
            except InstanceError as exc:
                raise InstanceFormatError(str(exc), lineno) from None
        elif key == "prec":
            if len(toks) != 3:
                raise InstanceFormatError("prec record needs two job ids", lineno)
            precs.append((_int_field(toks[1], "job", lineno), _int_field(toks[2], "job", lineno)))
        else:
            raise InstanceFormatError(f"unknown record type {key!r}", lineno)

    for key in ("machines", "resource", "jobs"):
        if key not in header:
            raise InstanceFormatError(f"missing '{key}' record")
    if header["jobs"][0] != len(jobs):
        raise InstanceFormatError(
            f"'jobs' declares {header['jobs'][0]} jobs but {len(jobs)} job records follow",
            header["jobs"][1],
        )
    horizon = header["horizon"][0] if "horizon" in header else None
    inst = Instance(
        machines=header["machines"][0],
        jobs=tuple(jobs),
        precedences=tuple(precs),
        resource_limit=header["resource"][0],
        horizon=0 if horizon is None else horizon,
    )
    if horizon is None:
        return _with_horizon(inst, compute_horizon(inst))
    check = list_schedule(inst, inst.topological_order())
    if validate_schedule(inst, check):
        raise InstanceError(f"horizon {horizon} admits no serially constructed schedule")
    return inst


def _with_horizon(inst: Instance, horizon: int) -> Instance:
    return Instance(inst.machines, inst.jobs, inst.precedences, inst.resource_limit, horizon)


def format_instance(instance: Instance) -> str:
    lines = [
        f"machines {instance.machines}",
        f"resource {instance.resource_limit}",
        f"horizon {instance.horizon}",
        f"jobs {instance.n}",
    ]
    for j in instance.jobs:
        lines.append(
            f"job {j.id} {j.machine} {j.release} {j.processing} {j.due} "
            f"{format_rational(j.weight)} {j.resource}"
        )
    for i, j in instance.precedences:
        lines.append(f"prec {i} {j}")
    return "\n".join(lines) + "\n"


def read_instance(path) -> Instance:
    with open(path, encoding="utf-8") as fh:
        return parse_instance(fh.read())


def write_instance(instance: Instance, path) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(format_instance(instance))


# ---------------------------------------------------------------------------
# generation


def compute_horizon(instance: Instance) -> int:
    """Latest release plus total processing: the serial schedule always fits."""
    if not instance.jobs:
        return 0
    return max(j.release for j in instance.jobs) + sum(j.processing for j in instance.jobs)


def generate_instance(config: GenConfig) -> Instance:
    rng = np.random.default_rng(config.seed)
    lo, hi = config.jobs_per_machine
    counts = rng.integers(lo, hi + 1, size=config.machines)
    R = config.resource_limit
    # demand interval centred on utilisation * R, clipped to [1, R]
    centre = config.resource_utilisation * R
    half = max(0.0, min(centre - 1, R - centre))
    min_demand = max(1, round(centre - half))
    max_demand = min(R, max(min_demand, round(centre + half)))

    machine_of = np.repeat(np.arange(config.machines), counts)
    n = int(counts.sum())
    processing = rng.integers(1, 13, size=n)
    release_cap = int(round(2 * processing.mean()))
    release = rng.integers(0, release_cap + 1, size=n)
    slack = rng.uniform(0.0, 2.0, size=n)
    weight = rng.integers(1, 11, size=n)
    demand = rng.integers(min_demand, max_demand + 1, size=n)

    jobs = []
    for j in range(n):
        p = int(processing[j])
        due = int(release[j]) + int(round(p * (1.0 + slack[j])))
        jobs.append(Job(j, int(machine_of[j]), int(release[j]), p, due, Fraction(int(weight[j])), int(demand[j])))

    precs = []
    start = 0
    for count in counts:
        members = range(start, start + int(count))
        for a in members:
            for b in members:
                if a < b and rng.random() < config.precedence_probability:
                    precs.append((a, b))
        start += int(count)

    inst = Instance(config.machines, tuple(jobs), tuple(precs), R, 0)
    return _with_horizon(inst, compute_horizon(inst))


# ---------------------------------------------------------------------------
# evaluation


def total_weighted_tardiness(instance: Instance, schedule: Schedule | Sequence[int]) -> Fraction:
    starts = schedule.starts if isinstance(schedule, Schedule) else tuple(schedule)
    if len(starts) != instance.n:
        raise ValueError("schedule length does not match job count")
    total = Fraction(0)
    for s, job in zip(starts, instance.jobs):
        late = s + job.processing - job.due
        if late > 0:
            total += job.weight * late
    return total


def validate_schedule(instance: Instance, schedule: Schedule | Sequence[int]) -> list[Violation]:
    """All constraint violations of ``schedule``; empty means feasible."""
    starts = schedule.starts if isinstance(schedule, Schedule) else tuple(schedule)
    if len(starts) != instance.n:
        raise ValueError("schedule length does not match job count")
    jobs = instance.jobs
    out: list[Violation] = []
    for s, job in zip(starts, jobs):
        if s < job.release:
            out.append(Violation("release", (job.id,)))
        if s < 0 or s + job.processing > instance.horizon:
            out.append(Violation("horizon", (job.id,)))
    for members in instance.machine_jobs():
        for a_pos, a in enumerate(members):
            for b in members[a_pos + 1:]:
                if starts[a] < starts[b] + jobs[b].processing and starts[b] < starts[a] + jobs[a].processing:
                    out.append(Violation("disjunctive", (a, b)))
    for i, j in instance.precedences:
        if starts[j] < starts[i] + jobs[i].processing:
            out.append(Violation("precedence", (i, j)))
    if jobs:
        events = sorted({s for s in starts} | {s + j.processing for s, j in zip(starts, jobs)})
        for t in events:
            running = tuple(j.id for s, j in zip(starts, jobs) if s <= t < s + j.processing)
            if sum(jobs[k].resource for k in running) > instance.resource_limit:
                out.append(Violation("resource", running, t))
    return out


# ---------------------------------------------------------------------------
# constructive schedules


def serial_schedule(instance: Instance) -> Schedule:
    """One job at a time globally, in topological order."""
    starts = [0] * instance.n
    t = 0
    for j in instance.topological_order():
        job = instance.jobs[j]
        starts[j] = max(t, job.release)
        t = starts[j] + job.processing
    return Schedule(tuple(starts))


@dataclass
class _Placed:
    start: int
    end: int
    machine: int
    resource: int


@dataclass
class Timeline:
    """Partial schedule supporting earliest-feasible-start queries."""

    instance: Instance
    placed: list[_Placed] = field(default_factory=list)

    def fits(self, job: Job, t: int) -> bool:
        end = t + job.processing
        load = job.resource
        for q in self.placed:
            if q.start < end and t < q.end and q.machine == job.machine:
                return False
        if load == 0:
            return True
        # usage is piecewise constant; it can only rise at t or at a placed start
        checkpoints = [t] + [q.start for q in self.placed if t < q.start < end]
        R = self.instance.resource_limit
        for c in checkpoints:
            use = load + sum(q.resource for q in self.placed if q.start <= c < q.end)
            if use > R:
                return False
        return True

    def earliest(self, job: Job, ready: int) -> int:
        candidates = sorted({ready} | {q.end for q in self.placed if q.end > ready})
        for t in candidates:
            if self.fits(job, t):
                return t
        raise AssertionError("unreachable: the last candidate always fits")

    def place(self, job: Job, t: int) -> None:
        self.placed.append(_Placed(t, t + job.processing, job.machine, job.resource))


def list_schedule(instance: Instance, order: Sequence[int]) -> Schedule:
    """Serial schedule generation: each job at its earliest feasible start.

    ``order`` must list every job once with predecessors before successors.
    """
    preds = instance.predecessors()
    starts = [-1] * instance.n
    tl = Timeline(instance)
    for j in order:
        job = instance.jobs[j]
        ready = job.release
        for i in preds[j]:
            if starts[i] < 0:
                raise ValueError(f"order places job {j} before its predecessor {i}")
            ready = max(ready, starts[i] + instance.jobs[i].processing)
        starts[j] = tl.earliest(job, ready)
        tl.place(job, starts[j])
    if min(starts, default=0) < 0:
        raise ValueError("order does not cover every job")
    return Schedule(tuple(starts))
