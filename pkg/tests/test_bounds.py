import itertools

import pytest
from hypothesis import given
from hypothesis import strategies as st

from erasurecast.bounds import (
    DemandPair,
    HybridCoefficients,
    bounds_report,
    capacity_c23,
    distortion_at_latency,
    hybrid_coefficients,
    load_L,
    race_probability,
    region_boundaries,
    select_params,
    w_plus,
    w_star,
)
from erasurecast.channel import ChannelParams
from erasurecast.errors import Infeasible, OrderViolation, RangeViolation

P = ChannelParams(0.1, 0.2, 0.02)


def test_w_star():
    assert w_star(0.05, 0.1) == pytest.approx(0.95 / 0.9)
    assert w_star(0.1, 0.2) == pytest.approx(1.125)
    assert w_star(0.0, 0.5) == pytest.approx(2.0)
    assert w_star(1.0, 0.3) == 0.0
    with pytest.raises(RangeViolation):
        w_star(1.2, 0.1)
    with pytest.raises(RangeViolation):
        w_star(0.1, 1.0)


def test_w_plus():
    assert w_plus(DemandPair(0.05, 0.1), P) == pytest.approx(1.125)
    assert w_plus(DemandPair(0.0, 0.15), P) == pytest.approx(1 / 0.9)
    with pytest.raises(OrderViolation):
        w_plus(DemandPair(0, 0), ChannelParams(0.3, 0.2, 0.06))


def test_distortion_at_latency():
    assert distortion_at_latency(0.0, 0.1) == 1.0
    assert distortion_at_latency(1 / 0.9, 0.1) == pytest.approx(0.0, abs=1e-12)
    assert distortion_at_latency(1.05556, 0.1) == pytest.approx(0.05, abs=1e-5)
    with pytest.raises(RangeViolation):
        distortion_at_latency(1.2, 0.1)


@given(st.floats(0.0, 1.0), st.floats(0.01, 0.99))
def test_distortion_inverts_w_star(d, eps):
    assert distortion_at_latency(w_star(d, eps), eps) == pytest.approx(d, abs=1e-9)


def test_hybrid_coefficients_running_example():
    k = hybrid_coefficients(P, 0.05)
    assert k.k1 == pytest.approx(0.18)
    assert k.k2 == pytest.approx(0.04 * 0.05 * 0.9 / 0.98)
    assert k.k3 == pytest.approx(0.2 * 0.05 * 0.8 / 0.98)
    assert k.total == pytest.approx(0.19)


def test_hybrid_coefficients_domain():
    with pytest.raises(RangeViolation):
        hybrid_coefficients(P, 0.2)
    k = hybrid_coefficients(P, 0.1)
    assert k.k2 == 0 and k.k3 == 0


def test_select_params_examples():
    hp = select_params(hybrid_coefficients(P, 0.05), 0.1)
    assert (hp.theta, hp.gamma) == pytest.approx((1.0, 0.5))
    hp = select_params(hybrid_coefficients(P, 0.0), 0.05)
    assert hp.theta == 1.0
    assert hp.gamma == pytest.approx(1 / 6, abs=1e-4)
    hp = select_params(hybrid_coefficients(P, 0.05), 0.0)
    assert (hp.theta, hp.gamma) == (0.0, 0.0)


def test_select_params_theta_branch():
    k = HybridCoefficients(0.3, 0.1, 0.05)
    hp = select_params(k, 0.1)
    assert (hp.theta, hp.gamma) == pytest.approx((0.5, 0.0))


def test_select_params_errors():
    k = hybrid_coefficients(P, 0.05)
    with pytest.raises(Infeasible):
        select_params(k, 0.2)
    with pytest.raises(RangeViolation):
        select_params(k, -0.01)
    # exactly the maximum is still feasible
    assert select_params(k, k.total).gamma == pytest.approx(1.0)


@given(st.floats(0.0, 1.0), st.floats(0.0, 1.0))
def test_select_params_load_and_monotone(a, b):
    k = hybrid_coefficients(P, 0.05)
    lo, hi = sorted((a * k.total, b * k.total))
    p_lo, p_hi = select_params(k, lo), select_params(k, hi)
    assert p_lo.theta <= p_hi.theta and p_lo.gamma <= p_hi.gamma
    for t, hp in ((lo, p_lo), (hi, p_hi)):
        assert load_L(k, hp) == pytest.approx(max(t, k.k3), abs=1e-12)


def test_capacity_and_race():
    c23, w23 = capacity_c23(P, 0.05)
    assert w23 == pytest.approx(0.05 / 0.9)
    assert c23 == pytest.approx(0.05 * 0.8 / 0.9)
    assert race_probability(P) == pytest.approx(0.8 / 0.98)
    assert race_probability(P) == pytest.approx(0.81633, abs=1e-5)


def test_region_boundaries():
    c, d, edges = region_boundaries(P, 0.05)
    assert c == pytest.approx((0.1 * 0.2 * 0.9 + 0.05 * 0.8) / 0.98)
    assert d == pytest.approx((0.9 + 0.05 * 0.8) / 0.98)
    assert edges == pytest.approx((2 * (0.02 - 1) / 0.2, 0.002, 0.1))


def test_bottleneck_equivalence_grid():
    # load fits in the weak user's Phase II-III capacity iff the strong user is the bottleneck
    grid = (0.05, 0.1, 0.2, 0.3, 0.45)
    checked = 0
    for e1, e2 in itertools.combinations(grid, 2):
        p = ChannelParams(e1, e2)
        for f1, f2 in itertools.product((0.0, 0.2, 0.5, 0.8), (0.0, 0.1, 0.3, 0.6, 0.9)):
            d1, d2 = f1 * e1, f2 * e2
            k = hybrid_coefficients(p, d1)
            try:
                hp = select_params(k, e2 - d2)
            except Infeasible:
                continue
            strong_bottleneck = w_star(d1, e1) - w_star(d2, e2)
            if abs(strong_bottleneck) < 1e-12:
                continue
            fits = load_L(k, hp) <= capacity_c23(p, d1)[0] + 1e-12
            assert fits == (strong_bottleneck > 0), (e1, e2, d1, d2)
            checked += 1
    assert checked > 50


def test_bounds_report():
    rep = bounds_report(P, DemandPair(0.05, 0.1))
    assert rep.feasible
    assert rep.w_plus == pytest.approx(1.125)
    assert rep.load_L == pytest.approx(0.1)
    d = rep.to_dict()
    assert d["theta"] == 1.0 and d["gamma"] == pytest.approx(0.5)
    assert not bounds_report(P, DemandPair(0.05, 0.0)).feasible


def test_demand_pair_validation():
    with pytest.raises(RangeViolation):
        DemandPair(-0.1, 0.2)
