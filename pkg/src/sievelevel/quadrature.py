"""Integration over nested (ordered-simplex type) domains.

A domain is a sequence of variables, each with constant limits optionally
tightened by an earlier variable: the lower limit of variable i is
``max(lo, x[lo_ref])`` and the upper limit ``min(hi, x[hi_ref])``. A
variable flagged ``budget`` is also capped by 1 minus the sum of the
earlier ones. The unit cube is mapped onto such a domain one coordinate at
a time, so that any cube rule becomes a rule on the domain. Coordinates are
mapped logarithmically because every weight in this package behaves like
1/t.

Low dimensions use scipy's adaptive Gauss-Kronrod cubature; higher ones use
randomized scrambled Sobol points, with the spread over independent
scramblings as the error estimate.
"""

from __future__ import annotations

import itertools
import math
import os
from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np
from scipy.integrate import cubature
from scipy.stats import qmc


class QuadratureError(RuntimeError):
    """Tolerance not reached; carries the best estimate and its error bound."""

    def __init__(self, message: str, estimate: float, error: float):
        super().__init__(f"{message} (estimate {estimate:.10g}, error {error:.3g})")
        self.estimate = estimate
        self.error = error


@dataclass(frozen=True)
class QuadratureSpec:
    """Tolerances for all integrals.

    ``sieve_abs_tol`` is the absolute target for the F - 1 and f - 1 parts
    of the G-family, whose integrands jump across the level map's
    switching surfaces; the adaptive error estimate there is pessimistic by
    one to two orders of magnitude.
    """

    rel_tol: float = 1e-6
    abs_tol: float = 1e-7
    max_subdivisions: int = 20000
    qmc_points: int = 2**23
    seed: int = 20240101
    qmc_replicates: int = 8
    qmc_rel_tol: float = 1e-2
    sieve_abs_tol: float = 1e-4
    initial_split: int = 2

    def __post_init__(self) -> None:
        if min(self.rel_tol, self.abs_tol, self.qmc_rel_tol, self.sieve_abs_tol) <= 0:
            raise ValueError("tolerances must be positive")
        if self.initial_split < 1:
            raise ValueError("initial_split must be positive")
        if self.max_subdivisions < 1:
            raise ValueError("max_subdivisions must be positive")
        if self.qmc_points < 10**5:
            raise ValueError("qmc_points must be at least 1e5")
        if self.qmc_replicates < 2:
            raise ValueError("need at least two QMC replicates for an error estimate")


@dataclass(frozen=True)
class Var:
    lo: float
    hi: float
    lo_ref: int | None = None
    hi_ref: int | None = None
    budget: bool = False


@dataclass(frozen=True)
class Result:
    value: float
    error: float


Integrand = Callable[[Sequence[np.ndarray]], np.ndarray]


def is_empty(domain: Sequence[Var]) -> bool:
    """True when the domain has empty interior (checked on the constant limits)."""
    his = [v.hi for v in domain]
    los = [v.lo for v in domain]
    for i, v in enumerate(domain):
        lo = max(v.lo, los[v.lo_ref]) if v.lo_ref is not None else v.lo
        hi = min(v.hi, his[v.hi_ref]) if v.hi_ref is not None else v.hi
        if v.budget:
            hi = min(hi, 1.0 - sum(los[:i]))
        if not hi > lo:
            return True
        los[i], his[i] = lo, hi
    return False


def map_cube(domain: Sequence[Var], z: np.ndarray):
    """Map cube points z (npts, d) to domain points and Jacobians."""
    npts = z.shape[0]
    xs: list[np.ndarray] = []
    jac = np.ones(npts)
    for i, v in enumerate(domain):
        lo = np.full(npts, v.lo) if v.lo_ref is None else np.maximum(v.lo, xs[v.lo_ref])
        hi = np.full(npts, v.hi) if v.hi_ref is None else np.minimum(v.hi, xs[v.hi_ref])
        if v.budget:
            hi = np.minimum(hi, 1.0 - (np.sum(xs, axis=0) if xs else 0.0))
        ok = hi > lo
        llo = np.log(lo)
        span = np.where(ok, np.log(np.where(ok, hi, lo)) - llo, 0.0)
        x = np.exp(llo + z[:, i] * span)
        xs.append(x)
        jac = jac * span * x
    return xs, jac


def integrate(domain: Sequence[Var], integrand: Integrand, spec: QuadratureSpec = QuadratureSpec(),
              method: str = "auto") -> Result:
    """Integrate ``integrand(xs)`` over ``domain``.

    ``method`` is "cubature", "qmc" or "auto" (cubature up to four dimensions).
    Raises QuadratureError when the tolerance is not met.
    """
    d = len(domain)
    if d == 0:
        raise ValueError("empty variable list")
    if is_empty(domain):
        return Result(0.0, 0.0)
    if method == "auto":
        method = "cubature" if d <= 4 else "qmc"
    if method == "cubature":
        return _adaptive(domain, integrand, spec)
    if method == "qmc":
        return _sobol(domain, integrand, spec)
    raise ValueError(f"unknown method {method!r}")


def _adaptive(domain, integrand, spec: QuadratureSpec) -> Result:
    d = len(domain)

    def f(z):
        xs, jac = map_cube(domain, z)
        vals = np.where(jac > 0, integrand(xs), 0.0)
        return vals * jac

    # A coarse initial grid keeps the first error estimates honest for
    # integrands that jump across surfaces.
    k = spec.initial_split
    edges = np.linspace(0.0, 1.0, k + 1)
    boxes = list(itertools.product(range(k), repeat=d))
    rule = "gk15" if d <= 3 else "genz-malik"
    value = error = 0.0
    converged = True
    for box in boxes:
        a = edges[list(box)]
        b = edges[[i + 1 for i in box]]
        res = cubature(f, a, b, rule=rule, rtol=spec.rel_tol,
                       atol=spec.abs_tol / len(boxes), max_subdivisions=spec.max_subdivisions)
        value += float(res.estimate)
        error += float(res.error)
        converged &= res.status == "converged"
    if not converged and error > max(spec.abs_tol, spec.rel_tol * abs(value)):
        raise QuadratureError("adaptive cubature did not converge", value, error)
    return Result(value, error)


def worker_count() -> int:
    """Worker count from SIEVELEVEL_WORKERS (default 1)."""
    raw = os.environ.get("SIEVELEVEL_WORKERS", "1")
    try:
        n = int(raw)
    except ValueError:
        raise ValueError(f"SIEVELEVEL_WORKERS must be an integer, got {raw!r}") from None
    return max(1, n)


def _sobol(domain, integrand, spec: QuadratureSpec, block: int = 2**18) -> Result:
    d = len(domain)
    reps = spec.qmc_replicates
    per_rep = 2 ** math.ceil(math.log2(max(spec.qmc_points // reps, 1)))
    seeds = np.random.SeedSequence(spec.seed).spawn(reps)
    estimates = []
    for ss in seeds:
        eng = qmc.Sobol(d, scramble=True, seed=np.random.default_rng(ss))
        total = 0.0
        remaining = per_rep
        while remaining:
            m = min(block, remaining)
            z = eng.random(m)
            xs, jac = map_cube(domain, z)
            vals = np.where(jac > 0, integrand(xs), 0.0) * jac
            total += float(vals.sum())
            remaining -= m
        estimates.append(total / per_rep)
    est = np.asarray(estimates)
    value = float(est.mean())
    # three standard errors of the replicate mean
    error = float(3.0 * est.std(ddof=1) / math.sqrt(reps))
    if error > max(spec.abs_tol, spec.qmc_rel_tol * abs(value)):
        raise QuadratureError("QMC error estimate above tolerance", value, error)
    return Result(value, error)
