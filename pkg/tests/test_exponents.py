import math
from fractions import Fraction as Fr

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from sievelevel.exponents import (
    ExponentConfig,
    JBoundInput,
    active_branch,
    balance_point,
    critical_interval,
    evaluate_J_bound,
    factorable_level,
    headline_levels,
    level_theta_t,
    level_theta_t123,
    level_theta_t123_terms,
    level_theta_t123_vec,
    level_theta_t_vec,
    parse_real,
    psi,
)

KS = ExponentConfig()  # theta = 7/32, alpha = 0
KS1 = ExponentConfig(alpha=1)

fractions = st.fractions(min_value=0, max_value=Fr(1, 2), max_denominator=200)


def test_parse_real():
    assert parse_real("7/32") == Fr(7, 32)
    assert parse_real(" 0.25 ") == Fr(1, 4)
    assert parse_real(3) == Fr(3)
    assert parse_real(0.5) == 0.5
    with pytest.raises(TypeError):
        parse_real(None)


def test_config_validation():
    with pytest.raises(ValueError):
        ExponentConfig(theta=Fr(3, 5))
    with pytest.raises(ValueError):
        ExponentConfig(alpha=-1)
    with pytest.raises(ValueError):
        ExponentConfig(delta=-0.1)
    assert KS.exact and not KS.as_float().exact


def test_level_examples():
    assert level_theta_t(Fr(163, 1000), KS) == Fr(5815, 10000)
    assert level_theta_t(Fr(1, 4), KS) == Fr(47, 78)
    mu = balance_point(KS)
    b = [(1 + mu) / 2, (1 - (Fr(3, 2) - 2 * KS.theta) * mu) / (1 + KS.theta)]
    assert b[0] == b[1] == level_theta_t(mu, KS)
    with pytest.raises(ValueError):
        level_theta_t(-0.1, KS)


def test_balance_points():
    assert balance_point(KS) == Fr(25, 107)
    assert balance_point(KS1) == Fr(25, 128)
    assert balance_point(ExponentConfig(theta=0)) == Fr(1, 4)


def test_headline_levels():
    assert headline_levels(KS) == (Fr(66, 107), Fr(153, 256))
    assert headline_levels(ExponentConfig(theta=0))[0] == Fr(5, 8)
    assert factorable_level(KS) == Fr(66, 107)


def test_critical_interval_examples():
    v, u = critical_interval(Fr(3, 5), KS)
    assert v == Fr(1, 5)
    assert u == (1 - Fr(39, 32) * Fr(3, 5)) / Fr(17, 16)
    assert float(u) == pytest.approx(0.252941, abs=1e-6)
    assert critical_interval(Fr(66, 107), KS) == (Fr(25, 107), Fr(25, 107))
    assert critical_interval(Fr(1, 2), KS)[0] == 0
    for bad in (Fr(5, 8), Fr(49, 100)):
        with pytest.raises(ValueError):
            critical_interval(bad, KS)


def test_psi_boundary_inclusive():
    assert psi(Fr(1, 3), Fr(1, 3)) == Fr(1, 3)
    assert psi(0.3, 0.3 + 1e-14) == 0.3
    assert psi(Fr(1, 3), Fr(1, 2)) == 0


def test_t123_examples():
    assert level_theta_t123(0.163, 0.002, 0.002, KS) >= level_theta_t(0.163, KS)
    with pytest.raises(ValueError):
        level_theta_t123(0.1, 0.2, 0.0, KS)


def _t123_oracle(t1, t2, t3, theta, alpha):
    """Second, loop-based evaluation of the eight-candidate maximum."""
    def lvl(t):
        return min((1 + t) / 2, (1 - (Fr(3, 2) - 2 * theta) * t) / (1 + theta), 1 - (alpha * theta + 3 * t) / 2)

    def w(a, b, c):
        cap = min(((5 - 4 * theta) - (3 - 4 * theta) * c) / (8 - 6 * theta), (5 - alpha * theta - 3 * c) / 8, 1 - 2 * b)
        return cap if cap >= (1 + a) / 2 else 0

    cands = [lvl(t1), lvl(t2), lvl(t1 + t2), lvl(t1 + t2 + t3), w(t1, t2, t3), w(t1, t3, t2)]
    x = lvl(t1 + t3)
    cands.append(x if x >= t1 + 2 * t2 + t3 else 0)
    x = lvl(t2 + t3)
    cands.append(x if x >= 2 * t1 + t2 + t3 else 0)
    return max(cands)


def test_t123_against_oracle_fixed():
    t = (Fr(1, 5), Fr(3, 20), Fr(1, 10))
    assert level_theta_t123(*t, KS) == _t123_oracle(*t, KS.theta, KS.alpha)


def test_degenerate_triple():
    t = Fr(3, 10)
    assert level_theta_t123(t, 0, 0, KS) == level_theta_t(t, KS)  # w is 0 or below ϑ(t) here
    terms = level_theta_t123_terms(t, Fr(0), Fr(0), KS)
    assert terms["theta(t1+t2+t3)"] == level_theta_t(t, KS)


def test_active_branch():
    assert active_branch(Fr(1, 10), KS) == "lower"
    assert active_branch(Fr(25, 107), KS) == "lower"
    assert active_branch(Fr(1, 4), KS) == "spectral"
    assert active_branch(Fr(3, 10), KS) == "uniform"
    assert active_branch(Fr(1, 5), ExponentConfig(theta=Fr(7, 32), alpha=20)) == "uniform"


@settings(max_examples=200, deadline=None)
@given(fractions, st.integers(0, 3))
def test_unimodality(theta, alpha):
    cfg = ExponentConfig(theta=theta, alpha=alpha)
    mu = balance_point(cfg)
    grid = [Fr(k, 1000) for k in range(0, 1001, 7)]
    vals = [level_theta_t(t, cfg) for t in grid]
    for (t0, v0), (t1, v1) in zip(zip(grid, vals), zip(grid[1:], vals[1:])):
        if t1 <= mu:
            assert v1 >= v0
        elif t0 >= mu:
            assert v1 <= v0
    # lower branch active exactly up to the balance point
    for t in grid:
        assert (level_theta_t(t, cfg) == (1 + t) / 2) == (t <= mu)


@settings(max_examples=200, deadline=None)
@given(st.lists(st.fractions(0, Fr(1, 3), max_denominator=300), min_size=3, max_size=3),
       fractions, st.integers(0, 2))
def test_t123_properties(ts, theta, alpha):
    t1, t2, t3 = sorted(ts, reverse=True)
    cfg = ExponentConfig(theta=theta, alpha=alpha)
    val = level_theta_t123(t1, t2, t3, cfg)
    assert val >= level_theta_t(t1, cfg)
    assert val == _t123_oracle(t1, t2, t3, theta, Fr(alpha))
    vec = level_theta_t123_vec(float(t1), float(t2), float(t3), float(theta), float(alpha))
    assert float(vec) == pytest.approx(float(val), abs=1e-9)


@settings(max_examples=100, deadline=None)
@given(fractions, st.integers(0, 2))
def test_critical_interval_nonempty_iff_below_level(theta, alpha):
    cfg = ExponentConfig(theta=theta, alpha=alpha)
    top = factorable_level(cfg)
    for k in range(500, 625):
        level = Fr(k, 1000)
        v, u = critical_interval(level, cfg)
        assert (v <= u) == (level <= top)


def test_vector_level_matches_scalar():
    t = np.linspace(0, 0.5, 101)
    got = level_theta_t_vec(t, 7 / 32, 1.0)
    want = [float(level_theta_t(Fr(x).limit_denominator(10**6), KS1)) for x in t]
    assert np.allclose(got, want, atol=1e-9)


# -- J bound ------------------------------------------------------------------

def _j_unit(a, q0, C, D, N, R, S, th):
    div = (a ** th) * (C * S * (N + R * S) * (C + D * R) + a * N * R * S)
    main = C * S * (C * D * math.sqrt(R)) ** (2 * th) * (N + R * S) ** (1 - th) * (C + D * R) ** (1 - 2 * th) + D * D * N * R
    return math.sqrt(q0 * div + main)


def test_J_bound_zero_norms():
    inp = JBoundInput(1, 1, 2, 2, 2, 2, 2, norm_b_sq=0.0)
    assert evaluate_J_bound(inp, KS) == 0.0


def test_J_bound_hand_value():
    inp = JBoundInput(1, 1, 2, 2, 2, 2, 2, norm_b_sq=1.0)
    # 152 from the divisor sum, 16 + 4 (4 sqrt 2)^(7/16) 6^(43/32) from the main term
    expected = math.sqrt(152 + 16 + 4 * (4 * math.sqrt(2)) ** (7 / 16) * 6 ** (25 / 32) * 6 ** (9 / 16))
    assert evaluate_J_bound(inp, KS) == pytest.approx(expected, rel=1e-14)
    assert evaluate_J_bound(inp, KS) == pytest.approx(_j_unit(1, 1, 2, 2, 2, 2, 2, 7 / 32), rel=1e-14)


def test_J_bound_theta_zero_collapses():
    a, q0, C, D, N, R, S, nb = 3.0, 2.0, 5.0, 7.0, 11.0, 2.0, 3.0, 0.7
    inp = JBoundInput(a, q0, C, D, N, R, S, norm_b_sq=nb)
    want = math.sqrt(q0 * (C * S * (N + R * S) * (C + D * R) + a * N * R * S) * nb
                     + (C * S * (N + R * S) * (C + D * R) + D * D * N * R) * nb)
    assert evaluate_J_bound(inp, ExponentConfig(theta=0)) == pytest.approx(want, rel=1e-14)


def test_J_bound_input_validation():
    with pytest.raises(ValueError):
        JBoundInput(1, 1, 2, 2, 2, 2, 2, norm_b_sq=-1.0)
    with pytest.raises(ValueError):
        JBoundInput(1, 1, 2, 2, 2, 2, 2, norm_b_sq=1.0, norms_by_divisor=[(1, 2.0)])
    with pytest.raises(ValueError):
        JBoundInput(1, 1, 2, 2, 2, 2, 2, norm_b_sq=1.0, norms_by_divisor=[(5, 1.0)])
    with pytest.raises(ValueError):
        JBoundInput(0, 1, 2, 2, 2, 2, 2, norm_b_sq=1.0)


positive = st.floats(0.5, 50.0)


@settings(max_examples=150, deadline=None)
@given(st.lists(positive, min_size=8, max_size=8), st.integers(0, 7), st.floats(1.0, 3.0),
       st.floats(0.0, 0.5))
def test_J_bound_monotone(vals, which, factor, theta):
    a, q0, C, D, N, R, S, nb = vals
    extra = 0.3
    base = dict(a=a, q0=q0, C=C, D=D, N=N, R=R, S=S, norm_b_sq=nb)
    names = ["C", "D", "N", "R", "S", "norm_b_sq", "extra"]
    name = names[which % len(names)]
    bumped = dict(base)
    extra_b = extra
    if name == "extra":
        extra_b = extra * factor
    else:
        bumped[name] *= factor
    cfg = ExponentConfig(theta=theta)

    def J(kw, ex):
        terms = [(1, kw["norm_b_sq"])]
        if 2 <= 2 * kw["N"]:
            terms.append((2, ex))
        return evaluate_J_bound(JBoundInput(**kw, norms_by_divisor=terms), cfg)

    assert J(bumped, extra_b) >= J(base, extra) * (1 - 1e-12)
