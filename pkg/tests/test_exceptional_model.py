from fractions import Fraction as Fr

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from sievelevel.exceptional_model import (
    ConvergenceError,
    ModelGrid,
    _sweep,
    _rule_b_refs,
    _apply_base,
    alpha_sequence,
    converge,
    eigen_constant,
    iterate_E,
    k_stab_map,
    lambda_limit,
    lambda_sequence,
    map_M,
    map_Mstar,
    verify_model_rules,
)

KS = Fr(7, 32)
THETAS = [1 / 64, 7 / 32, 0.4, 0.499]


# -- closed forms -----------------------------------------------------------------

def test_map_examples():
    for th in (0.0, 0.1, 0.49):
        assert map_M(1.0, 0.0, th) == 1.0
    for q in np.linspace(1, 3, 21):
        assert map_Mstar(q, q, 7 / 32) == pytest.approx(q)


def test_Mstar_below_M():
    Q, Y = np.meshgrid(np.linspace(0, 3, 300), np.linspace(0, 6, 600), indexing="ij")
    for th in THETAS:
        assert np.all(map_Mstar(Q, Y, th) <= map_M(Q, Y, th) + 1e-15)


def test_alpha_sequence():
    assert alpha_sequence(0, KS) == 1
    assert alpha_sequence(1, KS) == Fr(57, 32)
    a50 = alpha_sequence(50, KS)
    assert isinstance(a50, Fr)
    assert abs(float(a50) - 2) <= float(KS / (1 - KS)) ** 50 + 1e-15
    vals = [alpha_sequence(n, KS) for n in range(10)]
    assert all(x < y for x, y in zip(vals, vals[1:])) and vals[-1] < 2


def test_lambda_sequence_and_limit():
    assert lambda_limit(KS) == Fr(7, 18)
    vals = [lambda_sequence(n, KS) for n in range(30)]
    assert vals[0] == 0
    assert all(x < y < Fr(7, 18) for x, y in zip(vals, vals[1:]))
    assert float(Fr(7, 18) - vals[-1]) < 1e-10


def test_eigen_constant():
    assert eigen_constant(KS) == Fr(25, 18)
    c = eigen_constant(KS)
    # (1, 1) = c (2, 1) + (1 - c) (1/theta, 1)
    assert c * 2 + (1 - c) / KS == 1


def test_sequence_domain():
    for fn in (alpha_sequence, lambda_sequence):
        with pytest.raises(ValueError):
            fn(3, Fr(1, 2))
        with pytest.raises(ValueError):
            fn(-1, KS)
    with pytest.raises(ValueError):
        lambda_limit(0.5)


def test_k_stab_examples():
    assert k_stab_map(1, 1, KS) == (1, 1)
    for lam in (Fr(0), Fr(1, 3), Fr(2)):
        assert k_stab_map(1 + lam, 2 * lam, Fr(1, 2)) == (lam + 2, 2 * lam + 2)
    with pytest.raises(ValueError):
        k_stab_map(Fr(1, 2), 0, KS)
    with pytest.raises(ValueError):
        k_stab_map(2, 4, KS)


@settings(max_examples=200, deadline=None)
@given(st.fractions(1, 5, max_denominator=50), st.fractions(0, 1, max_denominator=50),
       st.fractions(0, Fr(1, 2), max_denominator=64))
def test_k_stab_fixed_points(q, frac, theta):
    y = frac * (2 * q - 1)
    q2, y2 = k_stab_map(q, y, theta)
    assert q2 >= q and y2 >= y
    if theta > 0:
        assert (q2 == q) == (y == 2 * q - 1)


# -- rules -------------------------------------------------------------------------

@pytest.mark.parametrize("theta", THETAS)
def test_maps_satisfy_rules(theta):
    plain = ModelGrid.initial(theta, "plain")
    starred = ModelGrid.initial(theta, "starred")
    assert verify_model_rules(map_M, plain) == []
    assert verify_model_rules(map_Mstar, starred) == []


def test_corrupted_map_is_localized():
    grid = ModelGrid.initial(7 / 32, "plain")

    def corrupted(q, y, th):
        out = np.array(map_M(q, y, th), dtype=float)
        hit = (np.abs(q - 1.5) < 1e-9) & (np.abs(y - 2.0) < 1e-9)
        return np.where(hit, out + 0.1, out)

    violations = verify_model_rules(corrupted, grid)
    assert violations
    assert {(v.q, v.y) for v in violations} == {(1.5, 2.0)}


def test_M_violates_the_starred_rule():
    grid = ModelGrid.initial(7 / 32, "starred")
    rules = {v.rule for v in verify_model_rules(map_M, grid)}
    assert rules == {"star"}


# -- grid iteration ---------------------------------------------------------------

@pytest.mark.parametrize("theta", THETAS)
@pytest.mark.parametrize("variant", ["plain", "starred"])
def test_converged_grid_sandwich(theta, variant):
    grid = converge(theta, variant)
    Q, Y = grid.mesh()
    target = (map_M if variant == "plain" else map_Mstar)(Q, Y, theta)
    diff = grid.values - target
    assert diff.min() >= -1e-9
    assert diff.max() <= 3 * grid.step
    assert verify_model_rules(grid, grid) == []


def test_rule_c_floor():
    grid = converge(7 / 32)
    q_le_1 = grid.q <= 1 + 1e-12
    assert np.all(grid.values[q_le_1, 0] == 1.0)


def test_half_theta_regression():
    grid = converge(0.5, step=0.02)
    for q in np.arange(1.0, 3.0 + 1e-9, 0.02):
        i, j = int(round(q / grid.step)), int(round((2 * q - 2) / grid.step))
        assert grid.values[i, j] == pytest.approx(q, abs=3 * grid.step)


def test_sweeps_never_increase():
    grid = ModelGrid.initial(0.4, "plain")
    refs = _rule_b_refs(grid)
    E = _apply_base(grid, grid.values.copy())
    for _ in range(5):
        new = _sweep(grid, E.copy(), refs, None)
        both = np.isfinite(E)
        assert np.all(new[both] <= E[both])
        assert not np.any(np.isfinite(E) & ~np.isfinite(new))
        E = new


def test_boundary_candidate_option():
    grid = converge(7 / 32, boundary="candidate")
    Q, Y = grid.mesh()
    assert np.max(np.abs(grid.values - map_M(Q, Y, 7 / 32))) <= 3 * grid.step
    with pytest.raises(ValueError):
        converge(7 / 32, boundary="mirror")


def test_nonconvergence_reports_residual():
    with pytest.raises(ConvergenceError) as info:
        iterate_E(ModelGrid.initial(0.499, "starred"), max_sweeps=2)
    assert info.value.residual > 0
    assert info.value.grid.sweeps == 2
