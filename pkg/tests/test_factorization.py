import itertools
from fractions import Fraction as Fr

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from sievelevel.exponents import ExponentConfig, critical_interval, headline_levels
from sievelevel.factorization import (
    FactorizationFailure,
    FactorizationInstance,
    GreedyTrace,
    InstanceTooLarge,
    PreconditionError,
    TripleFactorization,
    brute_force_factorize,
    check_outline_system,
    check_triple_constraints,
    factor_by_criterion,
    factorize_well,
    greedy_factorize,
    guaranteed_level,
    is_dminus_support,
    is_dplus_support,
    is_well_support,
    random_instance,
    triple_constraint_values,
)

KS = ExponentConfig()
GREEDY_EXAMPLE = FactorizationInstance((0.19, 0.18, 0.02, 0.02, 0.02), 0.61, 0.3, KS.as_float())


def inst(ts, level=0.6, cut=0.2, cfg=KS.as_float()):
    return FactorizationInstance(tuple(ts), level, cut, cfg)


# -- instance validation ------------------------------------------------------

@pytest.mark.parametrize("ts,cut", [((0.1, 0.2), 0.2), ((0.3, -0.1), 0.2), ((0.5, 0.4, 0.3), 0.2),
                                    ((0.1,), 0.34)])
def test_instance_validation(ts, cut):
    with pytest.raises(ValueError):
        FactorizationInstance(ts, 0.6, cut)


def test_instance_parses_strings_exactly():
    i = FactorizationInstance(("1/5",), "3/5", "1/4", KS)
    assert i.exact and i.prime_exponents == (Fr(1, 5),) and i.zero() == 0


# -- supports -------------------------------------------------------------------

def test_well_support_examples():
    assert is_well_support(inst((0.25, 0.15), level=0.6))
    assert not is_well_support(inst((0.31,), level=0.6))


def test_dplus_dminus_single_prime():
    assert is_dplus_support(inst((0.19,), level=0.6))
    assert not is_dplus_support(inst((0.21,), level=0.6))
    assert is_dminus_support(inst((0.29,), level=0.6))
    assert not is_dminus_support(inst((0.31,), level=0.6))


def _direct_well(ts, D):
    return all(sum(ts[:m]) + 2 * ts[m] < D for m in range(len(ts)))


def _direct_pm(ts, D, parity):
    ok = all(sum(ts[:m]) + 3 * ts[m] < D for m in range(len(ts)) if (m + 1) % 2 == parity)
    return ok and (parity == 1 or (not ts or 2 * ts[0] < D))


exps = st.lists(st.fractions(Fr(1, 1000), Fr(1, 5), max_denominator=1000), min_size=0, max_size=5)


@settings(max_examples=300, deadline=None)
@given(exps, st.fractions(Fr(1, 2), Fr(5, 8), max_denominator=500))
def test_supports_match_direct_scan(ts, level):
    ts = sorted(ts, reverse=True)
    if sum(ts) > 1:
        return
    i = FactorizationInstance(tuple(ts), level, Fr(1, 5), KS)
    assert is_well_support(i) == _direct_well(ts, level)
    assert is_dplus_support(i) == _direct_pm(ts, level, 1)
    assert is_dminus_support(i) == _direct_pm(ts, level, 0)
    if is_dplus_support(i) or is_dminus_support(i):
        assert is_well_support(i)


def test_supports_contained_in_well_random():
    rng = np.random.default_rng(7)
    for _ in range(10**4):
        r = int(rng.integers(1, 6))
        ts = tuple(sorted(rng.uniform(0.001, 0.25, r), reverse=True))
        if sum(ts) > 1:
            continue
        i = inst(ts, level=float(rng.uniform(0.5, 0.625)))
        if is_dplus_support(i) or is_dminus_support(i):
            assert is_well_support(i)


# -- constraint systems -------------------------------------------------------

def test_triple_constraints_examples():
    i = FactorizationInstance((Fr(22, 100),), Fr(3, 5), Fr(3, 10), KS)
    f = TripleFactorization.from_assignment(i.prime_exponents, ["b"])
    lhs = triple_constraint_values(f, i)
    assert [x for x, _ in lhs] == [Fr(82, 100), Fr(14, 10), Fr(7, 16) * Fr(8, 100) + Fr(14, 10)]
    assert check_triple_constraints(f, i)
    empty = FactorizationInstance((), Fr(3, 5), Fr(3, 10), KS)
    assert check_triple_constraints(TripleFactorization(0, 0, 0, ()), empty)


def test_alpha_tightens_second_constraint():
    # 5b = 2 - 0.3 - 0 exactly at alpha = 0 is allowed, pushed over by alpha*theta
    b = (Fr(2) - Fr(3, 10)) / 5
    for alpha, ok in ((0, True), (1, False)):
        cfg = ExponentConfig(alpha=alpha)
        i = FactorizationInstance((b,), Fr(3, 5), Fr(3, 10), cfg)
        f = TripleFactorization.from_assignment(i.prime_exponents, ["b"])
        assert check_triple_constraints(f, i) is ok


def test_a_at_most_cut_is_enforced_by_the_algorithms():
    # the checker covers the three inequalities only; a <= cut is separate
    i = inst((0.25,), level=0.6, cut=0.2)
    f = TripleFactorization.from_assignment(i.prime_exponents, ["a"])
    assert check_triple_constraints(f, i)
    found = brute_force_factorize(i)
    assert found and found.a_exp <= 0.2


def test_outline_system_examples():
    level = headline_levels(KS)[0]
    q = (Fr(1, 3), 2 * level - 1, 1 - level - Fr(1, 3))
    assert check_outline_system(*q, KS)
    # the third inequality is tight
    th = KS.theta
    assert 2 * th * (q[0] + q[2] - q[1]) + 2 * q[0] + 5 * q[1] + 2 * q[2] == 2
    assert check_outline_system(0, 0, 0, KS)
    assert not check_outline_system(0, Fr(2, 5) + Fr(1, 1000), 0, ExponentConfig(theta=0))


# -- criterion ------------------------------------------------------------------

def test_criterion_single_prime():
    i = FactorizationInstance((Fr(22, 100),), Fr(3, 5), Fr(1, 5), KS)
    f = factor_by_criterion(i, (0,))
    assert f and (f.a_exp, f.b_exp, f.c_exp) == (0, Fr(22, 100), 0)
    assert check_triple_constraints(f, i)


def test_criterion_fails_on_degenerate_interval():
    level = Fr(62, 100)  # above 66/107, so v > u
    v, u = critical_interval(level, KS)
    assert v > u
    i = FactorizationInstance((Fr(24, 100),), level, Fr(1, 5), KS)
    res = factor_by_criterion(i, (0,))
    assert isinstance(res, FactorizationFailure) and not res


def test_criterion_b_outside_interval():
    i = FactorizationInstance((Fr(1, 10),), Fr(3, 5), Fr(1, 5), KS)
    assert not factor_by_criterion(i, (0,))


# -- greedy ---------------------------------------------------------------------

def test_greedy_example():
    trace = GreedyTrace()
    f = greedy_factorize(GREEDY_EXAMPLE, trace)
    assert f and check_triple_constraints(f, GREEDY_EXAMPLE)
    assert f.a_exp == pytest.approx(0.25) and f.b_exp == pytest.approx(0.18)
    res, tag = factorize_well(GREEDY_EXAMPLE)
    assert tag == "iv:greedy" and check_triple_constraints(res, GREEDY_EXAMPLE)
    assert brute_force_factorize(GREEDY_EXAMPLE)


def test_greedy_bin_invariant():
    trace = GreedyTrace()
    greedy_factorize(GREEDY_EXAMPLE, trace)
    assert trace.steps
    for _, _, sizes in trace.steps:
        assert all(s <= c + 1e-12 for s, c in zip(sizes, trace.capacities))


def test_greedy_preconditions():
    with pytest.raises(PreconditionError):
        greedy_factorize(inst((0.19, 0.18), level=0.61, cut=0.3))
    with pytest.raises(PreconditionError):
        greedy_factorize(inst((0.2, 0.2, 0.1), level=0.61, cut=0.3))


# -- factorize_well -------------------------------------------------------------

def test_single_prime_case_i():
    i = FactorizationInstance((Fr(22, 100),), Fr(3, 5), Fr(1, 5), KS)
    f, tag = factorize_well(i)
    assert tag == "i:p1" and f.b_exp == Fr(22, 100)


def test_empty_modulus():
    f, tag = factorize_well(FactorizationInstance((), Fr(3, 5), Fr(1, 5), KS))
    assert tag == "i:empty" and f.a_exp == f.b_exp == f.c_exp == 0


def test_failure_outside_support():
    res = factorize_well(inst((0.31,), level=0.6))
    assert isinstance(res, FactorizationFailure) and "support" in res.reason


def test_guaranteed_level():
    assert guaranteed_level((), KS) == Fr(5, 8)
    assert guaranteed_level((Fr(1, 10),), KS) == Fr(11, 20)


def test_seeded_instances_guarantee():
    rng = np.random.default_rng(12345)
    tags = {}
    for _ in range(3000):
        i = random_instance(rng)
        out = factorize_well(i)
        assert out, out
        f, tag = out
        assert check_triple_constraints(f, i)
        tags[tag] = tags.get(tag, 0) + 1
    assert sum(tags.values()) == 3000


def test_exact_path_matches_float():
    i = FactorizationInstance((Fr(19, 100), Fr(18, 100), Fr(2, 100), Fr(2, 100), Fr(2, 100)),
                              Fr(61, 100), Fr(3, 10), KS)
    f, tag = factorize_well(i)
    assert tag == "iv:greedy" and isinstance(f.a_exp, Fr)
    assert check_triple_constraints(f, i)


# -- brute force ----------------------------------------------------------------

def test_brute_force_limits():
    with pytest.raises(InstanceTooLarge):
        brute_force_factorize(inst((0.01,) * 21, level=0.6))
    f = brute_force_factorize(FactorizationInstance((), 0.6, 0.2))
    assert f and f.a_exp == 0


def _all_assignments(i):
    for assignment in itertools.product("abc", repeat=i.r):
        f = TripleFactorization.from_assignment(i.prime_exponents, assignment)
        if f.a_exp <= i.cut_exponent + 1e-12 and check_triple_constraints(f, i):
            return True
    return False


@settings(max_examples=150, deadline=None)
@given(st.lists(st.floats(0.005, 0.4), min_size=1, max_size=7), st.floats(0.0, 1 / 3),
       st.floats(0.5, 0.62))
def test_brute_force_agrees_with_enumeration(ts, cut, level):
    ts = sorted(ts, reverse=True)
    if sum(ts) > 1:
        return
    i = inst(ts, level=level, cut=cut)
    found = brute_force_factorize(i)
    assert bool(found) == _all_assignments(i)
    if found:
        assert check_triple_constraints(found, i)


@settings(max_examples=200, deadline=None)
@given(st.integers(0, 2**32 - 1), st.sampled_from([0, 1]))
def test_soundness_property(seed, alpha):
    cfg = ExponentConfig(alpha=alpha)
    i = random_instance(np.random.default_rng(seed), cfg, max_primes=8)
    out = factorize_well(i)
    assert out
    f, _ = out
    assert check_triple_constraints(f, i)
    assert brute_force_factorize(i)
    nofb = factorize_well(i, fallback=False)
    if nofb:
        assert check_triple_constraints(nofb[0], i)
