import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from hapsrsma.rsma import (Network, RsmaAllocation, common_rates, common_sinr, private_rates,
                           private_sinr, rate, rb_common_rate, rb_common_rates, total_rates,
                           validate_allocation)


@pytest.fixture
def two_ue():
    # two beams, two UEs sharing RB 0; an idle RB 1
    gains = np.array([[2.0, 0.5],
                      [0.25, 4.0]])
    net = Network(gains, np.array([0, 1]), np.array([0, 0]), 2, noise_power=1.0)
    alloc = RsmaAllocation(np.array([[2.0, 1.0], [0.0, 0.0]]), np.array([1.0, 1.0]),
                           np.array([0.3, 0.2]))
    return net, alloc


def test_hand_sinrs(two_ue):
    net, alloc = two_ue
    # private: own serving signal over the other UE's private stream plus noise
    assert private_sinr(alloc, net) == pytest.approx([2.0 / 1.25, 4.0 / 1.5])
    # common: both beams' common power over all private streams on the RB plus noise
    assert common_sinr(alloc, net) == pytest.approx([(2 * 2 + 1 * 0.25) / (2 + 0.25 + 1),
                                                     (2 * 0.5 + 1 * 4) / (0.5 + 4 + 1)])


def test_hand_rates(two_ue):
    net, alloc = two_ue
    rc = np.log2(1 + np.array([4.25 / 3.25, 5.0 / 5.5]))
    rp = np.log2(1 + np.array([1.6, 4.0 / 1.5]))
    assert common_rates(alloc, net) == pytest.approx(rc)
    assert private_rates(alloc, net) == pytest.approx(rp)
    assert rb_common_rate(0, alloc, net) == pytest.approx(rc.min())
    assert rb_common_rate(1, alloc, net) == np.inf
    assert rb_common_rates(alloc, net) == pytest.approx([rc.min(), np.inf])
    assert total_rates(alloc, net) == pytest.approx(alloc.common_share + rp, rel=1e-9)


def test_rate_function():
    assert rate(10.0) == pytest.approx(np.log2(11.0))
    assert rate(0.0) == 0.0
    assert rate(3.0, bandwidth=2e6) == pytest.approx(4e6)


def test_audit_against_recomputation(two_ue):
    net, alloc = two_ue
    total = total_rates(alloc, net).sum()
    parts = alloc.common_share.sum() + private_rates(alloc, net).sum()
    assert total == pytest.approx(parts, rel=1e-9)


def test_orthogonal_rbs_do_not_interfere():
    gains = np.array([[3.0, 1.0], [1.0, 3.0]])
    net = Network(gains, np.array([0, 1]), np.array([0, 1]), 2, noise_power=0.5)
    alloc = RsmaAllocation(np.zeros((2, 2)), np.array([1.0, 2.0]), np.zeros(2))
    assert private_sinr(alloc, net) == pytest.approx([3.0 / 0.5, 6.0 / 0.5])
    assert common_sinr(alloc, net) == pytest.approx([0.0, 0.0])


def random_net(rng, n_ue=6, n_cl=3, n_rb=2, noise=1.0):
    gains = rng.lognormal(0, 1, size=(n_cl, n_ue))
    cl = np.arange(n_ue) % n_cl
    rb = (np.arange(n_ue) // n_cl) % n_rb
    return Network(gains, cl, rb, n_rb, noise)


@settings(max_examples=50, deadline=None)
@given(st.integers(0, 2**32 - 1), st.floats(1.01, 100.0))
def test_scaling_without_interference(seed, alpha):
    rng = np.random.default_rng(seed)
    gains = random_net(rng).gains
    net = Network(gains, np.arange(6) % 3, np.arange(6), 6, 1.0)  # one UE per RB
    p = rng.random(6)
    a = RsmaAllocation(np.zeros((6, 3)), p, np.zeros(6))
    b = RsmaAllocation(np.zeros((6, 3)), alpha * p, np.zeros(6))
    assert np.all(private_sinr(b, net) >= private_sinr(a, net))


@settings(max_examples=50, deadline=None)
@given(st.integers(0, 2**32 - 1), st.floats(0.1, 100.0))
def test_scale_invariance_when_noise_negligible(seed, alpha):
    rng = np.random.default_rng(seed)
    # unit-scale gains and powers, noise a millionth of that
    net = random_net(rng, noise=1e-6)
    p = rng.uniform(0.5, 1.0, 6)
    a = RsmaAllocation(np.zeros((2, 3)), p, np.zeros(6))
    b = RsmaAllocation(np.zeros((2, 3)), alpha * p, np.zeros(6))
    np.testing.assert_allclose(private_sinr(b, net), private_sinr(a, net), rtol=1e-4)


def test_validate_allocation(two_ue):
    net, alloc = two_ue
    rep = validate_allocation(alloc, net, total_power=5.0)
    assert rep.power_slack == pytest.approx(5.0 - 5.0)
    assert rep.feasible(1e-12)
    cap = np.log2(1 + 5.0 / 5.5)
    assert rep.cap_slack[0] == pytest.approx(cap - 0.5)
    greedy = RsmaAllocation(alloc.common_power, alloc.private_power, np.array([1.0, 1.0]))
    bad = validate_allocation(greedy, net, total_power=4.0)
    assert not bad.feasible()
    assert bad.worst() == pytest.approx(min(-1.0, cap - 2.0))


def test_network_views(two_ue):
    net, _ = two_ue
    assert (net.num_ues, net.num_clusters) == (2, 2)
    assert net.serving_gain() == pytest.approx([2.0, 4.0])
    np.testing.assert_allclose(net.cross_gain(), [[2.0, 0.25], [0.5, 4.0]])
    norm = Network(net.gains, net.cluster_of, net.rb_of, 2, noise_power=4.0).normalized()
    assert norm.noise_power == 1.0 and norm.gains[0, 0] == pytest.approx(0.5)
