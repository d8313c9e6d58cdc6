import math

import numpy as np
import pytest

from sievelevel.quadrature import (
    QuadratureError,
    QuadratureSpec,
    Var,
    integrate,
    is_empty,
    map_cube,
    worker_count,
)


def one_over_product(xs):
    out = np.ones_like(xs[0])
    for x in xs:
        out = out / x
    return out


def test_ordered_pair_log_measure():
    # int_{a<x<y<b} dx dy / (x y) = log(b/a)^2 / 2
    dom = [Var(0.1, 0.3), Var(0.1, 0.3, lo_ref=0)]
    res = integrate(dom, one_over_product)
    assert res.value == pytest.approx(math.log(3) ** 2 / 2, rel=1e-10)


def test_budget_cap():
    # x in [0.1, 0.5], y in [0.1, 1 - x]: area = int (0.9 - x) dx
    dom = [Var(0.1, 0.5), Var(0.1, 1.0, budget=True)]
    res = integrate(dom, lambda xs: np.ones_like(xs[0]))
    assert res.value == pytest.approx(0.9 * 0.4 - (0.25 - 0.01) / 2, rel=1e-10)


def test_upper_reference():
    # y < x on [0.1, 0.2]^2 with weight 1: area = 0.005
    dom = [Var(0.1, 0.2), Var(0.1, 0.2, hi_ref=0)]
    assert integrate(dom, lambda xs: np.ones_like(xs[0])).value == pytest.approx(0.005, rel=1e-10)


def test_empty_domains():
    assert is_empty([Var(0.3, 0.2)])
    assert is_empty([Var(0.5, 0.6), Var(0.5, 0.9, budget=True)])
    assert integrate([Var(0.3, 0.2)], one_over_product).value == 0.0
    with pytest.raises(ValueError):
        integrate([], one_over_product)


def test_map_cube_jacobian():
    dom = [Var(0.1, 0.4)]
    xs, jac = map_cube(dom, np.array([[0.0], [0.5], [1.0]]))
    assert np.allclose(xs[0], [0.1, 0.2, 0.4])
    assert np.allclose(jac, xs[0] * math.log(4))


def test_qmc_five_dimensions():
    # ordered 5-chain in [0.1, 0.2] with weight 1/prod: log(2)^5 / 5!
    dom = [Var(0.1, 0.2)] + [Var(0.1, 0.2, lo_ref=i) for i in range(4)]
    spec = QuadratureSpec(qmc_points=2**17)
    res = integrate(dom, one_over_product, spec)
    assert res.value == pytest.approx(math.log(2) ** 5 / 120, rel=1e-3)
    assert res.error < 1e-3 * res.value


def test_qmc_is_seeded():
    dom = [Var(0.1, 0.2)] * 5
    spec = QuadratureSpec(qmc_points=2**17)
    assert integrate(dom, one_over_product, spec, "qmc") == integrate(dom, one_over_product, spec, "qmc")


def test_failure_raises_with_estimate():
    spec = QuadratureSpec(rel_tol=1e-14, abs_tol=1e-16, max_subdivisions=2)
    dom = [Var(0.1, 0.9), Var(0.1, 0.9)]
    with pytest.raises(QuadratureError) as info:
        integrate(dom, lambda xs: np.where(xs[0] + xs[1] > 1.0, 1.0, 0.0), spec)
    assert info.value.estimate > 0


def test_spec_validation():
    with pytest.raises(ValueError):
        QuadratureSpec(rel_tol=0)
    with pytest.raises(ValueError):
        QuadratureSpec(qmc_replicates=1)
    with pytest.raises(ValueError):
        integrate([Var(0.1, 0.2)], one_over_product, method="simpson")


def test_worker_count(monkeypatch):
    monkeypatch.setenv("SIEVELEVEL_WORKERS", "3")
    assert worker_count() == 3
    monkeypatch.setenv("SIEVELEVEL_WORKERS", "x")
    with pytest.raises(ValueError):
        worker_count()
