"""Angular UE clustering with a hard cluster-size cap, and beam steering.

UEs are embedded as ``[theta, cos(phi), sin(phi)]`` so azimuths on either
side of +-pi stay close.  K-means alternates an exact capacitated
assignment (a rectangular assignment problem with ``capacity`` slots per
cluster) with the usual centroid update.
"""

from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import linear_sum_assignment

from .antenna import BeamConfig, dirichlet_sq, element_gain_db

WORST_UE = "worst_ue"
CENTROID = "centroid"

# reward for each cluster's first slot; forces every cluster non-empty
_MANDATORY_BONUS = 1e6


class ClusteringError(ValueError):
    pass


@dataclass
class ClusterPlan:
    assignments: np.ndarray  # (U,) cluster index per UE
    num_clusters: int
    boresights: np.ndarray | None = None  # (L, 2) [theta, phi]
    policy: str | None = None
    cost_trace: list = field(default_factory=list)

    @property
    def members(self):
        return [np.flatnonzero(self.assignments == k) for k in range(self.num_clusters)]

    @property
    def sizes(self):
        return np.bincount(self.assignments, minlength=self.num_clusters)


def features(theta, phi):
    theta = np.asarray(theta, dtype=float)
    phi = np.asarray(phi, dtype=float)
    return np.stack([theta, np.cos(phi), np.sin(phi)], axis=-1)


def _sq_dists(x, centers):
    return ((x[:, None, :] - centers[None, :, :]) ** 2).sum(axis=-1)


def farthest_point_seeds(x, k, rng):
    """Greedy k-center seeding; the first seed is drawn from ``rng``."""
    chosen = [int(rng.integers(len(x)))]
    d = ((x - x[chosen[0]]) ** 2).sum(axis=1)
    for _ in range(1, k):
        nxt = int(np.argmax(d))
        chosen.append(nxt)
        d = np.minimum(d, ((x - x[nxt]) ** 2).sum(axis=1))
    return x[chosen].copy()


def capacitated_assignment(cost, capacity):
    """Min-cost assignment of rows (UEs) to columns (clusters).

    Each column takes at most ``capacity`` rows and at least one.  Returns
    the column index per row.
    """
    n, k = cost.shape
    slots = np.repeat(cost, capacity, axis=1)
    slots[:, ::capacity] -= _MANDATORY_BONUS
    rows, cols = linear_sum_assignment(slots)
    out = np.empty(n, dtype=int)
    out[rows] = cols // capacity
    return out


def within_cluster_cost(x, assignments, centers):
    return float(((x - centers[assignments]) ** 2).sum())


def cluster_ues(x, num_clusters, capacity, rng, max_iters=100) -> ClusterPlan:
    """Capacity-constrained K-means on feature rows ``x`` (U x d)."""
    x = np.asarray(x, dtype=float)
    n = len(x)
    if num_clusters * capacity < n:
        raise ClusteringError(f"{num_clusters} clusters of capacity {capacity} cannot hold {n} UEs")
    if num_clusters > n:
        raise ClusteringError("more clusters than UEs; some beam would serve nobody")
    centers = farthest_point_seeds(x, num_clusters, rng)
    assign = None
    trace = []
    for _ in range(max_iters):
        new = capacitated_assignment(_sq_dists(x, centers), capacity)
        trace.append(within_cluster_cost(x, new, centers))
        if assign is not None and np.array_equal(new, assign):
            break
        assign = new
        centers = np.stack([x[assign == k].mean(axis=0) for k in range(num_clusters)])
        trace.append(within_cluster_cost(x, assign, centers))
    return ClusterPlan(assign, num_clusters, cost_trace=trace)


def steer_centroid(theta, phi):
    """Mean off-nadir angle and circular-mean azimuth of a cluster."""
    theta = np.atleast_1d(theta)
    phi = np.atleast_1d(phi)
    az = np.arctan2(np.sin(phi).mean(), np.cos(phi).mean())
    if az >= np.pi:
        az -= 2 * np.pi
    return float(theta.mean()), float(az)


def _wrap(a):
    return (a + np.pi) % (2 * np.pi) - np.pi


def steering_grid(theta, phi, resolution_deg=0.05, padding_deg=0.5):
    """Candidate boresights covering the cluster's padded angular bounding box.

    The azimuth box is taken around the circular mean so clusters straddling
    +-pi get a tight box.  Returns flat arrays (theta, phi), theta-major.
    """
    res = np.radians(resolution_deg)
    pad = np.radians(padding_deg)
    theta = np.atleast_1d(theta)
    phi = np.atleast_1d(phi)
    t_lo = max(0.0, theta.min() - pad)
    t_hi = min(np.pi / 2, theta.max() + pad)
    t_grid = t_lo + res * np.arange(int(np.floor((t_hi - t_lo) / res + 1e-9)) + 1)

    center = steer_centroid(theta, phi)[1]
    off = _wrap(phi - center)
    p_lo, p_hi = center + off.min() - pad, center + off.max() + pad
    if p_hi - p_lo >= 2 * np.pi:
        p_lo, p_hi = -np.pi, np.pi - res
    p_grid = _wrap(p_lo + res * np.arange(int(np.floor((p_hi - p_lo) / res + 1e-9)) + 1))

    tt, pp = np.meshgrid(t_grid, p_grid, indexing="ij")
    return tt.ravel(), pp.ravel()


def min_member_gain(cand_theta, cand_phi, theta, phi, path_loss, template: BeamConfig,
                    chunk=20000):
    """min_u g(beam steered to candidate, u) for every candidate boresight."""
    theta = np.atleast_1d(theta)
    phi = np.atleast_1d(phi)
    weight = 10.0 ** (element_gain_db(theta, phi, template.element_gain_max, template.beamwidth_3db,
                                      template.front_to_back, template.sla_v) / 10.0)
    weight = weight / np.atleast_1d(path_loss)
    out = np.empty(len(cand_theta))
    st, ct_u, sp_u = np.sin(theta), np.cos(phi), np.sin(phi)
    ux, uy = st * ct_u, st * sp_u
    k = 2 * np.pi * template.spacing
    for s in range(0, len(cand_theta), chunk):
        ct = cand_theta[s:s + chunk, None]
        cp = cand_phi[s:s + chunk, None]
        sc = np.sin(ct)
        psi_x = k * (ux[None, :] - sc * np.cos(cp))
        psi_y = k * (uy[None, :] - sc * np.sin(cp))
        af = dirichlet_sq(psi_x, template.nx) * dirichlet_sq(psi_y, template.ny)
        af /= template.nx * template.ny
        out[s:s + chunk] = (af * weight[None, :]).min(axis=1)
    return out


def steer_worst_ue(theta, phi, path_loss, template: BeamConfig, resolution_deg=0.05,
                   padding_deg=0.5):
    """Grid search for the boresight maximizing the weakest member's gain."""
    ct, cp = steering_grid(theta, phi, resolution_deg, padding_deg)
    scores = min_member_gain(ct, cp, theta, phi, path_loss, template)
    best = int(np.argmax(scores))
    return float(ct[best]), float(cp[best])


def steer_clusters(plan: ClusterPlan, ues, template: BeamConfig, policy,
                   resolution_deg=0.05, padding_deg=0.5) -> ClusterPlan:
    """Return a copy of ``plan`` with boresights chosen by ``policy``."""
    theta = np.array([ue.theta for ue in ues])
    phi = np.array([ue.phi for ue in ues])
    pl = np.array([ue.path_loss for ue in ues])
    bs = np.empty((plan.num_clusters, 2))
    for k, idx in enumerate(plan.members):
        if policy == WORST_UE:
            bs[k] = steer_worst_ue(theta[idx], phi[idx], pl[idx], template, resolution_deg, padding_deg)
        elif policy == CENTROID:
            bs[k] = steer_centroid(theta[idx], phi[idx])
        else:
            raise ValueError(f"unknown steering policy {policy!r}")
    return ClusterPlan(plan.assignments.copy(), plan.num_clusters, bs, policy, list(plan.cost_trace))


def beams_for(plan: ClusterPlan, template: BeamConfig):
    return [template.steered(t, p) for t, p in plan.boresights]
