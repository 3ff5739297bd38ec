import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from drcn.model import DomainError, validate_config
from drcn.separated import (
    BcPowerSplit, MacPowerSplit, SepOuterPoint, baseline_no_cooperation, bc_c_optimize,
    bc_c_rate_at, mac_c_optimize, mac_c_rate_at, optimize_sep, sep_phases, sep_rate_at,
)


def C(x):
    return 0.5 * math.log2(1.0 + x)


# Second, independent transcription of the two rate formulas.
def mac_oracle(h1, h2, h3, p21, p31, pc1, p12, p32, pc2):
    B1, B2 = p21 + p31 + pc1, p12 + p32 + pc2
    a1 = C(h3 * h3 * p21 / (1 + h3 * h3 * p31))
    a2 = C(h3 * h3 * p12 / (1 + h3 * h3 * p32))
    terms = [
        a1 + C(h2 * h2 * p31),
        a2 + C(h1 * h1 * p32),
        0.5 * C(h2 * h2 * B1 + h1 * h1 * B2 + 2 * math.sqrt(h1 * h1 * h2 * h2 * pc1 * pc2)),
        0.5 * (C(h2 * h2 * p31 + h1 * h1 * p32) + a1 + a2),
    ]
    return min(terms)


def bc_oracle(h1, h2, h3, P1, pc3, p23, p13, p2, e=2):
    g1, g2, g3 = h1 * h1, h2 * h2, h3 * h3
    cf = g1 * abs(h3) ** e * p13 * p2 / (1 + g3 * p2 + (g1 + g2) * p13)
    return min(
        C(g2 * p13 + cf),
        C((g1 * (pc3 + p23) + g3 * P1 + 2 * math.sqrt(g1 * g3 * p23 * P1)) / (1 + g1 * p13)),
        C(g2 * pc3 / (1 + g2 * p13)),
    )


def test_mac_zero_power():
    assert mac_c_rate_at(0.15, 1, 0.5, MacPowerSplit(0, 0, 0, 0, 0, 0)) == 0.0


def test_mac_noncooperative_corner():
    split = MacPowerSplit(p21=0, p31=100, pc1=0, p12=0, p32=100, pc2=0)
    assert mac_c_rate_at(0.15, 1, 0, split) == pytest.approx(C(2.25), abs=1e-12)
    assert mac_c_rate_at(0.15, 1, 0, split) == pytest.approx(0.850218, abs=1e-5)


def test_mac_double_transcription():
    split = MacPowerSplit(p21=50, p31=25, pc1=25, p12=50, p32=25, pc2=25)
    assert mac_c_rate_at(0.15, 1, 0.5, split) == pytest.approx(
        mac_oracle(0.15, 1, 0.5, 50, 25, 25, 50, 25, 25), abs=1e-12)


def test_mac_budget_checks():
    split = MacPowerSplit(p21=50, p31=25, pc1=25, p12=50, p32=25, pc2=25)
    with pytest.raises(DomainError):
        mac_c_rate_at(0.15, 1, 0.5, split, budget1=90, budget2=100)
    with pytest.raises(DomainError):
        MacPowerSplit(p21=-1, p31=0, pc1=0, p12=0, p32=0, pc2=0)


def test_mac_optimize_without_d2d():
    # With h3 = 0 all power goes direct and the rate is the plain MAC value.
    res = mac_c_optimize(0.15, 1, 0, 100, 100, tol=1e-4)
    direct = min(C(100), C(2.25), 0.5 * C(102.25))
    assert direct - 1e-3 <= res.value <= direct + 1e-12
    assert res.argmax.p21 == 0 and res.argmax.p12 == 0


def test_mac_optimize_zero_budget():
    assert mac_c_optimize(0.15, 1, 1, 0, 0).value == 0.0


def test_mac_cooperation_helps():
    assert mac_c_optimize(0.15, 1, 10, 100, 100).value >= mac_c_optimize(0.15, 1, 0, 100, 100).value


def test_mac_optimize_feasible_and_exact():
    res = mac_c_optimize(0.15, 1, 0.7, 30, 80)
    s = res.argmax
    assert s.user1_total <= 30 * (1 + 1e-12) and s.user2_total <= 80 * (1 + 1e-12)
    assert min(vars(s).values()) >= -1e-12
    assert mac_c_rate_at(0.15, 1, 0.7, s, 30, 80) == res.value


def test_bc_zero_power():
    assert bc_c_rate_at(0.15, 1, 1, 0, BcPowerSplit(0, 0, 0, 0)) == 0.0


def test_bc_double_transcription():
    split = BcPowerSplit(pc3=60, p23=20, p13=20, p2=100)
    assert bc_c_rate_at(0.15, 1, 1, 100, split) == pytest.approx(
        bc_oracle(0.15, 1, 1, 100, 60, 20, 20, 100), abs=1e-12)
    assert bc_c_rate_at(0.15, 1, 1.7, 100, split, cf_exponent=3) == pytest.approx(
        bc_oracle(0.15, 1, 1.7, 100, 60, 20, 20, 100, e=3), abs=1e-12)


def test_bc_reduces_to_superposition():
    split = BcPowerSplit(pc3=60, p23=20, p13=20, p2=0)
    expect = min(C(20), C(0.0225 * 80 / (1 + 0.0225 * 20)), C(60 / 21))
    assert bc_c_rate_at(0.15, 1, 0, 0, split) == pytest.approx(expect, abs=1e-12)


def test_bc_checks():
    with pytest.raises(DomainError):
        bc_c_rate_at(0.15, 1, 1, 10, BcPowerSplit(60, 20, 30, 5), bs_budget=100)
    with pytest.raises(DomainError):
        bc_c_rate_at(0.15, 1, 1, 10, BcPowerSplit(60, 20, 20, 5), p2_budget=4)
    with pytest.raises(ValueError):
        bc_c_rate_at(0.15, 1, 1, 10, BcPowerSplit(60, 20, 20, 5), cf_exponent=4)


def test_bc_optimize_matches_superposition_grid():
    # Coarse independent grid over (pc3, p13); p23 only matters with a relay.
    g = np.linspace(0, 100, 401)
    best = max(bc_oracle(0.5, 1, 0, 0, pc, 0, p13, 0) for pc in g for p13 in g if pc + p13 <= 100)
    res = bc_c_optimize(0.5, 1, 0, 0, 0, 100)
    assert res.value >= best - 1e-3
    assert res.argmax.bs_total == pytest.approx(100)


def test_bc_optimize_zero_budget():
    assert bc_c_optimize(0.15, 1, 1, 10, 10, 0).value == 0.0


def test_bc_cooperation_helps():
    coop = bc_c_optimize(0.5, 1, 2, 100, 100, 100).value
    plain = bc_c_optimize(0.5, 1, 0, 0, 0, 100).value
    assert coop > plain


def test_bc_fixes_p2_at_budget():
    res = bc_c_optimize(0.5, 1, 2, 10, 37.0, 100)
    assert res.argmax.p2 == 37.0


def test_outer_point_checks():
    cfg = validate_config(0.15, 1, 1, 100, 100, 100)
    with pytest.raises(DomainError):
        SepOuterPoint(1.2, 1, 1).check(cfg)
    with pytest.raises(DomainError):
        SepOuterPoint(0.5, 101, 1).check(cfg)
    assert SepOuterPoint(0.5, 100, 50).downlink_powers(cfg) == (100.0, 150.0)


@pytest.mark.parametrize("tau", [0.0, 1.0])
def test_sep_endpoints_are_zero(tau):
    cfg = validate_config(0.15, 1, 1, 100, 100, 100)
    assert sep_rate_at(cfg, SepOuterPoint(tau, 50, 50)) == 0.0
    assert sep_phases(cfg, SepOuterPoint(tau, 50, 50)) is None


def test_sep_rate_is_min_of_phases():
    cfg = validate_config(0.15, 1, 0.4, 100, 100, 100)
    pt = SepOuterPoint(0.4, 80, 90)
    ul, dl = sep_phases(cfg, pt)
    assert sep_rate_at(cfg, pt) == min(0.4 * ul.value, 0.6 * dl.value)


def test_sep_zero_power():
    cfg = validate_config(0.15, 1, 1, 0, 0, 0)
    assert optimize_sep(cfg).value == 0.0
    assert baseline_no_cooperation(cfg).value == 0.0


@pytest.fixture(scope="module")
def fig4_low():
    return validate_config(0.5, 1, 2, 1, 1, 1)


def test_optimize_sep_feasible_and_exact(fig4_low):
    res = optimize_sep(fig4_low)
    pt = res.argmax
    pt.check(fig4_low)
    assert 0 < pt.tau < 1
    assert sep_rate_at(fig4_low, pt) == res.value
    ul, dl = res.details["uplink"], res.details["downlink"]
    assert ul.argmax.user1_total <= pt.p1u * (1 + 1e-12) + 1e-12
    assert ul.argmax.user2_total <= pt.p2u * (1 + 1e-12) + 1e-12
    assert dl.argmax.bs_total <= fig4_low.P3 / (1 - pt.tau) * (1 + 1e-12)
    assert res.value == min(pt.tau * ul.value, (1 - pt.tau) * dl.value)


def test_optimize_sep_deterministic(fig4_low):
    from drcn.separated import clear_caches
    a = optimize_sep(fig4_low)
    clear_caches()
    b = optimize_sep(fig4_low)
    assert a == b and a.argmax == b.argmax


def test_sep_dominates_baseline(fig4_low):
    assert optimize_sep(fig4_low).value >= baseline_no_cooperation(fig4_low).value - 5e-3


def test_baseline_ignores_h3():
    a = baseline_no_cooperation(validate_config(0.5, 1, 0.1, 1, 1, 1)).value
    b = baseline_no_cooperation(validate_config(0.5, 1, 7.0, 1, 1, 1)).value
    assert a == b


gains = st.floats(0.01, 3.0)
power = st.floats(0.0, 200.0)


@settings(max_examples=200)
@given(gains, gains, gains, st.lists(power, min_size=6, max_size=6), st.floats(0.01, 100))
def test_mac_scale_invariance(a, b, h3, p, c):
    h1, h2 = sorted([a, b])
    r = math.sqrt(c)
    s = MacPowerSplit(*p)
    t = MacPowerSplit(*(v / c for v in p))
    assert mac_c_rate_at(h1 * r, h2 * r, h3 * r, t) == pytest.approx(mac_c_rate_at(h1, h2, h3, s), abs=1e-12)


@settings(max_examples=200)
@given(gains, gains, gains, power, st.lists(power, min_size=4, max_size=4), st.floats(0.01, 100))
def test_bc_scale_invariance(a, b, h3, P1, p, c):
    h1, h2 = sorted([a, b])
    r = math.sqrt(c)
    s = BcPowerSplit(*p)
    t = BcPowerSplit(*(v / c for v in p))
    assert bc_c_rate_at(h1 * r, h2 * r, h3 * r, P1 / c, t) == pytest.approx(
        bc_c_rate_at(h1, h2, h3, P1, s), abs=1e-12)


def test_cubed_exponent_breaks_scaling():
    # small p13 so that the compress-forward term is the active one
    s = BcPowerSplit(80, 10, 1, 80)
    t = BcPowerSplit(*(v / 4 for v in (80, 10, 1, 80)))
    a = bc_c_rate_at(0.5, 1, 1.5, 20, s, cf_exponent=3)
    b = bc_c_rate_at(1.0, 2, 3.0, 5, t, cf_exponent=3)
    assert abs(a - b) > 1e-6


@settings(max_examples=200)
@given(gains, gains, st.floats(-3, 3), power, st.lists(power, min_size=4, max_size=4),
       st.floats(0, 200), st.sampled_from([2, 3]))
def test_bc_monotone_in_p2(a, b, h3, P1, p, extra, e):
    h1, h2 = sorted([a, b])
    s = BcPowerSplit(*p)
    more = BcPowerSplit(p[0], p[1], p[2], p[3] + extra)
    assert bc_c_rate_at(h1, h2, h3, P1, more, e) >= bc_c_rate_at(h1, h2, h3, P1, s, e) - 1e-15


@settings(max_examples=200)
@given(gains, gains, gains, power, st.lists(power, min_size=4, max_size=4), st.sampled_from([2, 3]))
def test_sign_invariance(a, b, h3, P1, p, e):
    h1, h2 = sorted([a, b])
    s = BcPowerSplit(*p)
    m = MacPowerSplit(*(p + p[:2]))
    assert bc_c_rate_at(-h1, -h2, -h3, P1, s, e) == bc_c_rate_at(h1, h2, h3, P1, s, e)
    assert mac_c_rate_at(-h1, -h2, -h3, m) == mac_c_rate_at(h1, h2, h3, m)


@settings(max_examples=40, deadline=None)
@given(gains, gains, st.floats(-3, 3), power, power, st.floats(0.01, 400), st.sampled_from([2, 3]))
def test_bc_solver_not_beaten_by_grid_search(a, b, h3, P1, p2, S, e):
    # The crossing solver must match or beat a generic refined grid on the full simplex.
    from drcn.optimizer import SearchDomain, Simplex, refine_grid_max
    h1, h2 = sorted([a, b])
    res = bc_c_optimize(h1, h2, h3, P1, p2, S, cf_exponent=e)
    grid = refine_grid_max(
        lambda x: bc_oracle(h1, h2, h3, P1, x[0], x[1], x[2], p2, e),
        SearchDomain([Simplex(3, S, equality=True)]), 9, 6, 3.0)
    assert res.value >= grid.value - 1e-9
    assert res.argmax.bs_total <= S * (1 + 1e-12)
