"""Greedy interference-aware RB allocation.

Each UE gets one RB that is still free inside its own cluster, choosing the
one with the least accumulated leakage sum_{j on r} g[l(j), u] from UEs that
are already placed.  UEs are visited strongest-first (by serving-beam gain)
so the weak UEs that set the max-min rate choose last, with the full
interference picture in hand.
"""

from dataclasses import dataclass, field

import numpy as np


class AllocationError(ValueError):
    pass


@dataclass
class RBPlan:
    rb_of: np.ndarray  # (U,) RB index per UE
    num_rbs: int
    # (ue, candidate RBs, leakage per candidate, chosen RB) in visiting order
    trace: list = field(default_factory=list, repr=False)

    @property
    def co_scheduled(self):
        return [np.flatnonzero(self.rb_of == r) for r in range(self.num_rbs)]


def processing_order(assignments, gains):
    """UEs by descending serving-beam gain, ties by UE index."""
    assignments = np.asarray(assignments)
    serving = gains[assignments, np.arange(len(assignments))]
    return np.lexsort((np.arange(len(assignments)), -serving))


def allocate_rbs(assignments, gains, num_rbs, order=None) -> RBPlan:
    """Assign one RB per UE, orthogonal within clusters.

    ``assignments`` maps UE -> cluster, ``gains`` is the (L, U) gain matrix.
    ``order`` overrides the visiting order (mostly for tests).
    """
    assignments = np.asarray(assignments)
    n_ue = len(assignments)
    n_cl = gains.shape[0]
    sizes = np.bincount(assignments, minlength=n_cl)
    if sizes.max(initial=0) > num_rbs:
        raise AllocationError(f"cluster of size {sizes.max()} exceeds {num_rbs} RBs")

    if order is None:
        order = processing_order(assignments, gains)
    rb_of = np.full(n_ue, -1, dtype=int)
    used = np.zeros((n_cl, num_rbs), dtype=bool)
    # leakage[r, u] = sum over UEs j already on r of g[l(j), u]
    leakage = np.zeros((num_rbs, n_ue))
    trace = []
    for u in order:
        cl = assignments[u]
        cand = np.flatnonzero(~used[cl])
        costs = leakage[cand, u]
        r = int(cand[np.argmin(costs)])  # argmin returns the first, i.e. lowest index
        rb_of[u] = r
        used[cl, r] = True
        leakage[r] += gains[cl]
        trace.append((int(u), cand, costs.copy(), r))
    return RBPlan(rb_of, num_rbs, trace)
