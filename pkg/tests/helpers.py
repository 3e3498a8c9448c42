"""Instance factories and brute-force oracles shared by the tests.

The enumerators here deliberately avoid the package's own scheduling code;
they check constraints pairwise from the raw job data.
"""

from __future__ import annotations

from fractions import Fraction
from itertools import permutations

from gcp_rcjs.instance import GenConfig, Instance, Job, generate_instance, list_schedule

UTILS = (0.25, 0.5, 0.75)
PROBS = (0.2, 0.5, 0.8)


def make_instance(jobs, precs=(), machines=None, R=10, horizon=None) -> Instance:
    """``jobs`` rows are (machine, release, processing, due, weight, resource)."""
    built = tuple(Job(k, m, r, p, d, Fraction(w), g) for k, (m, r, p, d, w, g) in enumerate(jobs))
    if machines is None:
        machines = 1 + max(j.machine for j in built)
    if horizon is None:
        horizon = max(j.release for j in built) + sum(j.processing for j in built)
    return Instance(machines, built, tuple(precs), R, horizon)


def small_instance(seed: int, jobs_per_machine=(3, 4), machines=2, max_jobs=7) -> Instance:
    """Generated instance with at most ``max_jobs`` jobs (seed-deterministic)."""
    k = 0
    while True:
        cfg = GenConfig(
            machines=machines,
            precedence_probability=PROBS[(seed + k) % 3],
            resource_utilisation=UTILS[(seed // 3 + k) % 3],
            seed=seed * 1000 + k,
            jobs_per_machine=jobs_per_machine,
        )
        inst = generate_instance(cfg)
        if inst.n <= max_jobs:
            return inst
        k += 1


def tight_instance(seed: int, slack: int = 1) -> Instance:
    """At most six jobs with the horizon cut to the list-schedule makespan plus ``slack``."""
    base = small_instance(seed, jobs_per_machine=(2, 3), max_jobs=6)
    sched = list_schedule(base, base.topological_order())
    makespan = max(s + j.processing for s, j in zip(sched.starts, base.jobs))
    return Instance(base.machines, base.jobs, base.precedences, base.resource_limit, makespan + slack)


def feasible(inst: Instance, starts) -> bool:
    jobs = inst.jobs
    for s, j in zip(starts, jobs):
        if s < j.release or s + j.processing > inst.horizon:
            return False
    for a in range(inst.n):
        for b in range(a + 1, inst.n):
            if jobs[a].machine == jobs[b].machine:
                if starts[a] < starts[b] + jobs[b].processing and starts[b] < starts[a] + jobs[a].processing:
                    return False
    for i, j in inst.precedences:
        if starts[j] < starts[i] + jobs[i].processing:
            return False
    for t in range(inst.horizon):
        if sum(j.resource for s, j in zip(starts, jobs) if s <= t < s + j.processing) > inst.resource_limit:
            return False
    return True


def enumerate_feasible(inst: Instance):
    """Yield every feasible integer start vector (DFS with pairwise pruning)."""
    jobs = inst.jobs
    n = inst.n
    T = inst.horizon
    R = inst.resource_limit
    starts = [0] * n
    usage = [0] * (T + 1)

    def ok(k: int, s: int) -> bool:
        jk = jobs[k]
        for i in range(k):
            ji = jobs[i]
            if ji.machine == jk.machine and starts[i] < s + jk.processing and s < starts[i] + ji.processing:
                return False
            if (i, k) in precs and s < starts[i] + ji.processing:
                return False
            if (k, i) in precs and starts[i] < s + jk.processing:
                return False
        return all(usage[t] + jk.resource <= R for t in range(s, s + jk.processing))

    precs = set(inst.precedences)

    def rec(k: int):
        if k == n:
            yield tuple(starts)
            return
        jk = jobs[k]
        for s in range(jk.release, T - jk.processing + 1):
            if ok(k, s):
                starts[k] = s
                for t in range(s, s + jk.processing):
                    usage[t] += jk.resource
                yield from rec(k + 1)
                for t in range(s, s + jk.processing):
                    usage[t] -= jk.resource

    yield from rec(0)


def feasible_hull(inst: Instance):
    """Per-job (min, max) start over all feasible schedules, plus the count."""
    lo = [None] * inst.n
    hi = [None] * inst.n
    count = 0
    for starts in enumerate_feasible(inst):
        count += 1
        for j, s in enumerate(starts):
            lo[j] = s if lo[j] is None else min(lo[j], s)
            hi[j] = s if hi[j] is None else max(hi[j], s)
    return lo, hi, count


def exhaustive_optimum(inst: Instance) -> Fraction | None:
    """Minimum TWT over every feasible start vector (independent of the sequence oracle)."""
    best = None
    for starts in enumerate_feasible(inst):
        twt = sum((j.weight * max(0, s + j.processing - j.due) for s, j in zip(starts, inst.jobs)), Fraction(0))
        if best is None or twt < best:
            best = twt
    return best


def precedence_orders(inst: Instance):
    precs = set(inst.precedences)
    for perm in permutations(range(inst.n)):
        pos = {j: k for k, j in enumerate(perm)}
        if all(pos[i] < pos[j] for i, j in precs):
            yield perm
