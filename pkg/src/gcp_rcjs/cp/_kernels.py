"""Compiled propagation and depth-first branch-and-bound.

All state lives in caller-owned int64 arrays so a search can be suspended
after any node and resumed later (used for wall-clock cutoffs).
"""

import numpy as np
from numba import njit

PROCESS = 0
BACKTRACK = 1

# layout of the scalar state vector
SP, MODE, NODES, BACKTRACKS, PROPS, BEST, HAS_INC, DONE, NHIST = range(9)
STATE_SIZE = 9


@njit(cache=True, nogil=True)
def propagate_bounds(lo, hi, p, g, R, T, pair_a, pair_b, prec_a, prec_b, prof):
    """Fixpoint of precedence, pairwise disjunctive and timetable filtering.

    Returns False on conflict. ``prof`` is scratch of length ``T + 1``.
    """
    n = lo.shape[0]
    for j in range(n):
        if lo[j] > hi[j]:
            return False
    changed = True
    while changed:
        changed = False

        for k in range(prec_a.shape[0]):
            i = prec_a[k]
            j = prec_b[k]
            v = lo[i] + p[i]
            if v > lo[j]:
                lo[j] = v
                changed = True
                if lo[j] > hi[j]:
                    return False
            v = hi[j] - p[i]
            if v < hi[i]:
                hi[i] = v
                changed = True
                if lo[i] > hi[i]:
                    return False

        for k in range(pair_a.shape[0]):
            i = pair_a[k]
            j = pair_b[k]
            i_first = lo[i] + p[i] <= hi[j]
            j_first = lo[j] + p[j] <= hi[i]
            if not i_first and not j_first:
                return False
            if not j_first:
                a = i
                b = j
            elif not i_first:
                a = j
                b = i
            else:
                continue
            v = lo[a] + p[a]
            if v > lo[b]:
                lo[b] = v
                changed = True
                if lo[b] > hi[b]:
                    return False
            v = hi[b] - p[a]
            if v < hi[a]:
                hi[a] = v
                changed = True
                if lo[a] > hi[a]:
                    return False

        # compulsory-part profile
        for t in range(T + 1):
            prof[t] = 0
        any_part = False
        for j in range(n):
            if g[j] > 0 and hi[j] < lo[j] + p[j]:
                prof[hi[j]] += g[j]
                prof[lo[j] + p[j]] -= g[j]
                any_part = True
        if not any_part:
            continue
        acc = 0
        for t in range(T + 1):
            acc += prof[t]
            prof[t] = acc
            if acc > R:
                return False
        for j in range(n):
            gj = g[j]
            if gj == 0 or lo[j] == hi[j]:
                continue
            own_s = hi[j]
            own_e = lo[j] + p[j]
            s = lo[j]
            t = s
            while t < s + p[j]:
                use = prof[t]
                if own_s <= t < own_e:
                    use -= gj
                if use + gj > R:
                    s = t + 1
                    if s > hi[j]:
                        return False
                t += 1
            if s != lo[j]:
                lo[j] = s
                changed = True
    return True


@njit(cache=True, nogil=True)
def tardiness_bound(lo, p, d, w):
    total = 0
    for j in range(lo.shape[0]):
        late = lo[j] + p[j] - d[j]
        if late > 0:
            total += w[j] * late
    return total


@njit(cache=True, nogil=True)
def pick_variable(lo, hi, rank):
    """Unassigned job with smallest minimum; ties go to the smallest rank."""
    best = -1
    for j in range(lo.shape[0]):
        if lo[j] == hi[j]:
            continue
        if best < 0 or lo[j] < lo[best] or (lo[j] == lo[best] and rank[j] < rank[best]):
            best = j
    return best


@njit(cache=True, nogil=True)
def run_search(
    p, d, w, g, R, T, pair_a, pair_b, prec_a, prec_b, rank,
    lo, hi, stk_lo, stk_hi, stk_var, stk_val, state, best_starts,
    hist_obj, hist_node, prof, node_stop,
):
    """Advance the search until it is exhausted or ``node_stop`` nodes are spent.

    Left child fixes the chosen job to its minimum; the right child raises the
    minimum by one. Incumbents are replaced only on strict improvement.
    """
    while True:
        if state[MODE] == PROCESS:
            if state[NODES] >= node_stop:
                return
            state[NODES] += 1
            state[PROPS] += 1
            ok = propagate_bounds(lo, hi, p, g, R, T, pair_a, pair_b, prec_a, prec_b, prof)
            lb = 0
            if ok:
                lb = tardiness_bound(lo, p, d, w)
                if state[HAS_INC] == 1 and lb >= state[BEST]:
                    ok = False
            if not ok:
                state[MODE] = BACKTRACK
                continue
            x = pick_variable(lo, hi, rank)
            if x < 0:
                state[BEST] = lb
                state[HAS_INC] = 1
                best_starts[:] = lo
                k = state[NHIST]
                if k < hist_obj.shape[0]:
                    hist_obj[k] = lb
                    hist_node[k] = state[NODES]
                state[NHIST] = k + 1
                state[MODE] = BACKTRACK
                continue
            sp = state[SP]
            stk_lo[sp, :] = lo
            stk_hi[sp, :] = hi
            stk_var[sp] = x
            stk_val[sp] = lo[x]
            state[SP] = sp + 1
            hi[x] = lo[x]
        else:
            if state[SP] == 0:
                state[DONE] = 1
                return
            sp = state[SP] - 1
            state[SP] = sp
            state[BACKTRACKS] += 1
            lo[:] = stk_lo[sp, :]
            hi[:] = stk_hi[sp, :]
            x = stk_var[sp]
            lo[x] = stk_val[sp] + 1
            if lo[x] <= hi[x]:
                state[MODE] = PROCESS


def new_state() -> np.ndarray:
    return np.zeros(STATE_SIZE, dtype=np.int64)
