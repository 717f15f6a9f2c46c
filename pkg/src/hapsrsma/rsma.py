"""RSMA signal model on a multi-beam, multi-RB downlink.

Each RB r carries one common stream, sent on every beam l with power
P[r, l], plus one private stream per co-scheduled UE on its serving beam.
A UE first decodes the RB's common stream treating all private streams on
its RB as noise, then removes it and decodes its private stream.
"""

from dataclasses import dataclass

import numpy as np


@dataclass(frozen=True)
class Network:
    """Fixed link-level context: gains and the cluster/RB plans."""

    gains: np.ndarray  # (L, U) end-to-end power gains
    cluster_of: np.ndarray  # (U,)
    rb_of: np.ndarray  # (U,)
    num_rbs: int
    noise_power: float
    bandwidth: float = 1.0

    @property
    def num_ues(self):
        return self.gains.shape[1]

    @property
    def num_clusters(self):
        return self.gains.shape[0]

    def serving_gain(self):
        return self.gains[self.cluster_of, np.arange(self.num_ues)]

    def cross_gain(self):
        """X[u, k] = g[l(k), u] if k shares u's RB, else 0 (diagonal kept)."""
        same = self.rb_of[:, None] == self.rb_of[None, :]
        return np.where(same, self.gains[self.cluster_of].T, 0.0)

    def rb_members(self, r):
        return np.flatnonzero(self.rb_of == r)

    def normalized(self):
        """Same network with gains divided by the noise power and unit noise."""
        return Network(self.gains / self.noise_power, self.cluster_of, self.rb_of,
                       self.num_rbs, 1.0, self.bandwidth)


@dataclass
class RsmaAllocation:
    common_power: np.ndarray  # (R, L) watts
    private_power: np.ndarray  # (U,) watts
    common_share: np.ndarray  # (U,) bits/s

    @classmethod
    def zeros(cls, num_rbs, num_clusters, num_ues):
        return cls(np.zeros((num_rbs, num_clusters)), np.zeros(num_ues), np.zeros(num_ues))

    def total_power(self):
        return float(self.common_power.sum() + self.private_power.sum())


def common_signal(alloc: RsmaAllocation, net: Network):
    # sum_l P[r_u, l] g[l, u]
    return np.einsum("ul,lu->u", alloc.common_power[net.rb_of], net.gains)


def private_interference(alloc: RsmaAllocation, net: Network, include_self=False):
    x = net.cross_gain()
    if not include_self:
        np.fill_diagonal(x, 0.0)
    return x @ alloc.private_power


def common_sinr(alloc: RsmaAllocation, net: Network):
    """Common-stream SINR per UE.

    The denominator sums private power over every UE on the RB, the UE's own
    private stream included: it is still undecoded at that point.
    """
    den = private_interference(alloc, net, include_self=True) + net.noise_power
    return common_signal(alloc, net) / den


def private_sinr(alloc: RsmaAllocation, net: Network):
    sig = alloc.private_power * net.serving_gain()
    return sig / (private_interference(alloc, net) + net.noise_power)


def rate(sinr, bandwidth=1.0):
    return bandwidth * np.log2(1.0 + np.asarray(sinr, dtype=float))


def common_rates(alloc, net):
    return rate(common_sinr(alloc, net), net.bandwidth)


def private_rates(alloc, net):
    return rate(private_sinr(alloc, net), net.bandwidth)


def rb_common_rate(r, alloc: RsmaAllocation, net: Network, per_ue=None):
    """Decodable common rate on RB r; +inf for an empty RB."""
    members = net.rb_members(r)
    if members.size == 0:
        return np.inf
    if per_ue is None:
        per_ue = common_rates(alloc, net)
    return float(per_ue[members].min())


def rb_common_rates(alloc, net):
    per_ue = common_rates(alloc, net)
    return np.array([rb_common_rate(r, alloc, net, per_ue) for r in range(net.num_rbs)])


def total_rates(alloc: RsmaAllocation, net: Network):
    return alloc.common_share + private_rates(alloc, net)


@dataclass
class ViolationReport:
    """Signed slacks; a negative value is a violation of that size."""

    power_slack: float
    min_common_power: float
    min_private_power: float
    min_common_share: float
    cap_slack: np.ndarray  # (R,) rb common rate minus sum of shares on r

    def worst(self):
        finite = self.cap_slack[np.isfinite(self.cap_slack)]
        return min(self.power_slack, self.min_common_power, self.min_private_power,
                   self.min_common_share, finite.min(initial=np.inf))

    def feasible(self, tol=0.0):
        return self.worst() >= -tol


def validate_allocation(alloc: RsmaAllocation, net: Network, total_power) -> ViolationReport:
    caps = rb_common_rates(alloc, net)
    shares = np.bincount(net.rb_of, weights=alloc.common_share, minlength=net.num_rbs)
    return ViolationReport(
        power_slack=float(total_power - alloc.total_power()),
        min_common_power=float(alloc.common_power.min(initial=0.0)),
        min_private_power=float(alloc.private_power.min(initial=0.0)),
        min_common_share=float(alloc.common_share.min(initial=0.0)),
        cap_slack=caps - shares,
    )
