"""Integrals of the weighted Buchstab decomposition.

Two families are evaluated:

* I_9..I_21: integrals of Buchstab's function over ordered boxes, in 3 to 6
  variables. They depend only on the sieve parameters.
* The G-family G(c), G_bar(c), G_0..G_8 and Wu's saving H_2: integrals of
  the linear sieve functions F, f evaluated at (level - sum)/smallest prime.

Several G-family terms carry a factor 1/eps (eps = 0.002), and they cancel
down to numbers of size ~1. Each F or f term is therefore split as
F = 1 + (F - 1). The constant part is integrated with a smooth quadrature
close to machine precision. The deviation F - 1 vanishes identically once
its argument passes the tabulated range, which covers every 1/eps term at
the parameters of interest.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace
from functools import partial
from typing import Callable, Literal, Sequence

import numpy as np
from scipy.integrate import quad
from scipy.special import roots_legendre

from .exponents import (
    ExponentConfig,
    balance_point,
    level_theta_t123_vec,
    level_theta_t_vec,
)
from .quadrature import QuadratureError, QuadratureSpec, Result, Var, integrate, is_empty, map_cube
from .special_functions import (
    E_GAMMA,
    WU_SAVINGS_TABLE,
    linear_sieve_F,
    linear_sieve_f,
    omega_table,
)

EpsLevel = Literal["theta(eps)", "theta(eps,eps,eps)"]


@dataclass(frozen=True)
class SieveParams:
    """Cut points of the Buchstab decomposition, as exponents of x."""

    rho: float
    rho_prime: float
    tau1: float
    tau2: float
    tau3: float
    mu: float
    eps: float

    def __post_init__(self) -> None:
        for name in ("rho", "rho_prime", "tau1", "tau2", "tau3", "mu", "eps"):
            object.__setattr__(self, name, float(getattr(self, name)))
        p = self
        ok = (0 < p.eps <= 0.1 <= p.rho_prime <= p.tau1 < p.mu <= p.tau2 < p.tau3 <= p.rho <= 0.3)
        if not ok:
            raise ValueError(
                "sieve parameters must satisfy "
                "0 < eps <= 0.1 <= rho' <= tau1 < mu <= tau2 < tau3 <= rho <= 0.3"
            )

    def check_against(self, cfg: ExponentConfig) -> None:
        if self.mu > float(balance_point(cfg)) + 1e-12:
            raise ValueError("mu must not exceed the balance point of the exponent map")

    def as_dict(self) -> dict[str, float]:
        return {k: getattr(self, k) for k in
                ("rho", "rho_prime", "tau1", "tau2", "tau3", "mu", "eps")}


TWIN_PARAMS = SieveParams(rho=0.275, rho_prime=0.12313, tau1=0.163, tau2=0.211,
                          tau3=0.24589, mu=0.210, eps=0.002)
GOLDBACH_PARAMS = SieveParams(rho=0.2445, rho_prime=0.128, tau1=0.163, tau2=0.205,
                              tau3=0.224, mu=0.169, eps=0.002)


# -- I_n ----------------------------------------------------------------------


LowArgument = Literal["unit", "measure"]


def _chain(lo: float, hi: float, k: int, start: int) -> list[Var]:
    """k increasing variables in (lo, hi); the first one is variable ``start``."""
    return [Var(lo, hi, lo_ref=None if j == 0 else start + j - 1) for j in range(k)]


def domain_In(n: int, p: SieveParams, budget: bool = False) -> list[Var]:
    """Ordered-box domain of I_n as a list of nested variables.

    With ``budget`` the last variable is also cut at 1 - (sum of the others),
    i.e. the product of the primes stays below x.
    """
    r, r1, t1, t2, t3 = p.rho, p.rho_prime, p.tau1, p.tau2, p.tau3
    table: dict[int, list[tuple[float, float, int]]] = {
        9: [(t1, t3, 3)],
        10: [(t1, t2, 2), (t2, r, 1)],
        11: [(t1, t2, 1), (t2, t3, 2)],
        12: [(r1, t1, 2), (t3, r, 1)],
        13: [(r1, t1, 1), (t1, t2, 1), (t2, r, 1)],
        14: [(r1, t1, 1), (t2, r, 2)],
        15: [(t1, t2, 1), (t2, t3, 1), (t3, r, 1)],
        16: [(t2, t3, 4)],
        17: [(t2, t3, 3), (t3, r, 1)],
        18: [(t2, t3, 2), (t3, r, 2)],
        19: [(t1, t2, 1), (t3, r, 3)],
        20: [(t2, t3, 1), (t3, r, 4)],
        21: [(t3, r, 6)],
    }
    if n not in table:
        raise ValueError("I_n is defined for 9 <= n <= 21")
    out: list[Var] = []
    for lo, hi, k in table[n]:
        out.extend(_chain(lo, hi, k, len(out)))
    if budget:
        out[-1] = replace(out[-1], budget=True)
    return out


def dimension_In(n: int) -> int:
    return len(domain_In(n, TWIN_PARAMS))


def _omega_integrand(xs: Sequence[np.ndarray]) -> np.ndarray:
    # omega((1 - sum)/x_{d-1}) / (prod x_i * x_{d-1}); arguments below 1 are
    # clamped to omega(1) = 1
    d = len(xs)
    total = np.sum(xs, axis=0)
    key = xs[d - 2]
    om = omega_table()(np.maximum((1.0 - total) / key, 1.0))
    assert np.all(om >= 0.0), "Buchstab function went negative"
    return om / (np.prod(xs, axis=0) * key)


def integral_In(n: int, p: SieveParams, q: QuadratureSpec = QuadratureSpec(),
                low_argument: LowArgument = "unit") -> float:
    return integral_In_result(n, p, q, low_argument).value


def integral_In_result(n: int, p: SieveParams, q: QuadratureSpec = QuadratureSpec(),
                       low_argument: LowArgument = "unit") -> Result:
    """I_n with its error estimate.

    In the 4- to 6-variable domains the omega argument (1 - sum)/x_{d-1}
    drops below 1, outside the domain of Buchstab's function. There omega
    is replaced by its value 1 at the left end (an upper bound for the
    count of the cofactor, which must be 1). ``low_argument`` picks what
    happens where the primes alone already exceed x (argument <= 0):
    "unit" drops those points, "measure" keeps weight 1 there as well.
    """
    if low_argument not in ("unit", "measure"):
        raise ValueError(f"unknown low_argument {low_argument!r}")
    return integrate(domain_In(n, p, budget=low_argument == "unit"), _omega_integrand, q)


# -- G-family -----------------------------------------------------------------


@dataclass(frozen=True)
class _Term:
    """coef * int_domain weight(x) * S(arg(x)) where S is F or f.

    ``weight`` is a product of powers of the variables; ``powers[i]`` is the
    exponent of x_i in the denominator.
    """

    coef: float
    domain: tuple[Var, ...]
    powers: tuple[int, ...]
    func: Literal["F", "f"]
    arg: Callable[[Sequence[np.ndarray]], np.ndarray]


# tensor Gauss-Legendre nodes per dimension for the smooth masses
_GL_NODES = {1: 64, 2: 48, 3: 32, 4: 16, 5: 10, 6: 8}


def _smooth_mass(domain: Sequence[Var], powers: Sequence[int]) -> float:
    """Integral of 1/prod x_i^powers over the domain, by tensor Gauss-Legendre.

    The integrand is analytic after the log substitution, so a fixed tensor
    rule converges to machine precision. The one kink (a max/min against a
    constant) is removed by splitting at the constant.
    """
    if is_empty(domain):
        return 0.0
    return _mass_split(list(domain), tuple(powers))


def _mass_split(domain: list[Var], powers: tuple[int, ...]) -> float:
    # Split any variable whose chained limit crosses its constant limit, so
    # each piece has limits that are smooth in the outer variables.
    for i, v in enumerate(domain):
        for ref, const, kind in ((v.lo_ref, v.lo, "lo"), (v.hi_ref, v.hi, "hi")):
            if ref is None:
                continue
            r = domain[ref]
            if r.lo < const < r.hi:
                left = list(domain)
                right = list(domain)
                left[ref] = replace(r, hi=const)
                right[ref] = replace(r, lo=const)
                if kind == "lo":
                    # x_ref < const: lower limit is the constant
                    left[i] = replace(v, lo_ref=None)
                    right[i] = replace(v, lo=const)
                else:
                    # x_ref < const: upper limit is x_ref
                    left[i] = replace(v, hi=const)
                    right[i] = replace(v, hi_ref=None)
                return sum(_smooth_mass(part, powers) for part in (left, right))
            if r.hi <= const and kind == "lo":
                domain = list(domain)
                domain[i] = replace(v, lo_ref=None)
            elif r.lo >= const and kind == "lo":
                domain = list(domain)
                domain[i] = replace(v, lo=r.lo)
            elif r.hi <= const and kind == "hi":
                domain = list(domain)
                domain[i] = replace(v, hi=r.hi)
            elif r.lo >= const and kind == "hi":
                domain = list(domain)
                domain[i] = replace(v, hi_ref=None)
    d = len(domain)
    x, w = roots_legendre(_GL_NODES[d])
    x = (x + 1) / 2
    w = w / 2
    grids = np.meshgrid(*([x] * d), indexing="ij")
    z = np.stack([g.ravel() for g in grids], axis=1)
    wts = np.ones(z.shape[0])
    for g in np.meshgrid(*([w] * d), indexing="ij"):
        wts = wts * g.ravel()
    xs, jac = map_cube(domain, z)
    dens = np.ones(z.shape[0])
    for xi, pw in zip(xs, powers):
        dens = dens / xi**pw
    return float(np.sum(wts * jac * dens))


def _sieve(func: str, s: np.ndarray) -> np.ndarray:
    return linear_sieve_F(s) if func == "F" else linear_sieve_f(s)


def _evaluate_term(term: _Term, q: QuadratureSpec) -> Result:
    if is_empty(term.domain):
        return Result(0.0, 0.0)

    def dens(xs):
        out = np.ones_like(xs[0])
        for xi, pw in zip(xs, term.powers):
            out = out / xi**pw
        return out

    mass = _smooth_mass(term.domain, term.powers)

    def deviation(xs):
        s = term.arg(xs)
        # F and f are exactly 1 beyond the table; skip those points
        return dens(xs) * (_sieve(term.func, s) - 1.0)

    # the deviation is O(1) or smaller, so its target accuracy is absolute
    dq = replace(q, abs_tol=max(q.abs_tol, q.sieve_abs_tol / abs(term.coef)))
    dev = integrate(term.domain, deviation, dq)
    return Result(term.coef * (mass + dev.value), abs(term.coef) * dev.error)


def _sum_terms(terms: Sequence[_Term], q: QuadratureSpec) -> Result:
    value = 0.0
    error = 0.0
    for t in terms:
        r = _evaluate_term(t, q)
        value += r.value
        error += r.error
    return Result(value, error)


class _Levels:
    """Vectorised level maps for a fixed configuration."""

    def __init__(self, cfg: ExponentConfig, eps: float, eps_level: EpsLevel):
        self.theta = float(cfg.theta)
        self.alpha = float(cfg.alpha)
        self.eps = eps
        if eps_level == "theta(eps)":
            self.theta_eps = float(level_theta_t_vec(eps, self.theta, self.alpha))
        elif eps_level == "theta(eps,eps,eps)":
            self.theta_eps = float(level_theta_t123_vec(eps, eps, eps, self.theta, self.alpha))
        else:
            raise ValueError(f"unknown eps_level {eps_level!r}")

    def t1(self, t):
        return level_theta_t_vec(t, self.theta, self.alpha)

    def t3(self, t, u, v):
        return level_theta_t123_vec(t, u, v, self.theta, self.alpha)


def _g_terms(c: float, p: SieveParams, L: _Levels) -> list[_Term]:
    e = p.eps
    E = L.eps
    return [
        # (1/eps) F(theta_eps/eps) as a one-variable "integral" is handled apart
        _Term(-1 / e, (Var(e, c),), (1,), "f",
              lambda xs: (L.t3(xs[0], E, E) - xs[0]) / E),
        _Term(1 / e, (Var(e, c), Var(e, c, hi_ref=0)), (1, 1), "F",
              lambda xs: (L.t3(xs[0], xs[1], E) - xs[0] - xs[1]) / E),
        _Term(-1.0, (Var(e, c), Var(e, c, hi_ref=0), Var(e, c, hi_ref=1)), (1, 1, 2), "f",
              lambda xs: (L.t3(xs[0], xs[1], xs[2]) - xs[0] - xs[1] - xs[2]) / xs[2]),
    ]


def _check_cfg(p: SieveParams, cfg: ExponentConfig) -> None:
    p.check_against(cfg)


def G_of_c(c: float, p: SieveParams, cfg: ExponentConfig = ExponentConfig(),
           q: QuadratureSpec = QuadratureSpec(), eps_level: EpsLevel = "theta(eps)") -> float:
    """G(c) for eps <= c <= mu."""
    _check_cfg(p, cfg)
    if not (p.eps <= c <= p.mu):
        raise ValueError("G(c) requires eps <= c <= mu; use gbar_of_c above mu")
    L = _Levels(cfg, p.eps, eps_level)
    head = float(linear_sieve_F(L.theta_eps / p.eps)) / p.eps
    return head + _sum_terms(_g_terms(c, p, L), q).value


def g_zero(p: SieveParams, cfg: ExponentConfig = ExponentConfig(),
           q: QuadratureSpec = QuadratureSpec(), eps_level: EpsLevel = "theta(eps)") -> float:
    _check_cfg(p, cfg)
    L = _Levels(cfg, p.eps, eps_level)
    return _sum_terms(_g0_terms(p, L), q).value


def _g0_terms(p: SieveParams, L: _Levels) -> list[_Term]:
    e, r1, mu = p.eps, p.rho_prime, p.mu
    E = L.eps
    return [
        _Term(-1 / e, (Var(r1, mu),), (1,), "f",
              lambda xs: (L.t3(xs[0], E, E) - xs[0]) / E),
        _Term(1 / e, (Var(r1, mu), Var(e, r1)), (1, 1), "F",
              lambda xs: (L.t3(xs[0], xs[1], E) - xs[0] - xs[1]) / E),
        _Term(-1.0, (Var(r1, mu), Var(e, r1), Var(e, r1, hi_ref=1)), (1, 1, 2), "f",
              lambda xs: (L.t3(xs[0], xs[1], xs[2]) - xs[0] - xs[1] - xs[2]) / xs[2]),
    ]


def _gbar_terms(c: float, p: SieveParams, L: _Levels) -> list[_Term]:
    e, r1, mu = p.eps, p.rho_prime, p.mu
    return [
        _Term(-1 / e, (Var(mu, c),), (1,), "f",
              lambda xs: (L.t1(xs[0]) - xs[0]) / e),
        _Term(1.0, (Var(mu, c), Var(e, r1)), (1, 2), "F",
              lambda xs: (L.t1(xs[0]) - xs[0] - xs[1]) / xs[1]),
    ]


def gbar_of_c(c: float, p: SieveParams, cfg: ExponentConfig = ExponentConfig(),
              q: QuadratureSpec = QuadratureSpec()) -> float:
    """G_bar(c) for mu <= c <= rho (0 at c = mu)."""
    _check_cfg(p, cfg)
    if not (p.mu <= c <= p.rho):
        raise ValueError("G_bar(c) requires mu <= c <= rho")
    L = _Levels(cfg, p.eps, "theta(eps)")
    return _sum_terms(_gbar_terms(c, p, L), q).value


def _g5_terms(p: SieveParams, L: _Levels) -> list[_Term]:
    e, r1, mu, t2 = p.eps, p.rho_prime, p.mu, p.tau2
    E = L.eps
    return [
        _Term(1 / e, (Var(r1, mu), Var(r1, mu, hi_ref=0)), (1, 1), "F",
              lambda xs: (L.t3(xs[0], xs[1], E) - xs[0] - xs[1]) / E),
        _Term(1 / r1, (Var(mu, t2), Var(r1, t2, hi_ref=0)), (1, 1), "F",
              lambda xs: (L.t1(xs[0]) - xs[0] - xs[1]) / r1),
        _Term(-1.0, (Var(r1, mu), Var(r1, mu, hi_ref=0), Var(e, r1)), (1, 1, 2), "f",
              lambda xs: (L.t3(xs[0], xs[1], xs[2]) - xs[0] - xs[1] - xs[2]) / xs[2]),
    ]


def _g6_terms(p: SieveParams, L: _Levels) -> list[_Term]:
    r1 = p.rho_prime
    return [
        _Term(1 / r1, (Var(p.tau2, p.tau3), Var(r1, p.tau1)), (1, 1), "F",
              lambda xs: (L.t1(xs[0]) - xs[0] - xs[1]) / r1),
    ]


def _g7_terms(p: SieveParams, L: _Levels) -> list[_Term]:
    e, r1, t1 = p.eps, p.rho_prime, p.tau1
    te = L.theta_eps
    return [
        _Term(1 / e, (Var(r1, t1), Var(r1, t1, hi_ref=0)), (1, 1), "F",
              lambda xs: (te - xs[0] - xs[1]) / e),
        _Term(-1.0, (Var(r1, t1), Var(r1, t1, hi_ref=0), Var(e, t1, hi_ref=1)), (1, 1, 2), "f",
              lambda xs: (L.t3(xs[0], xs[1], xs[2]) - xs[0] - xs[1] - xs[2]) / xs[2]),
    ]


def _g8_terms(p: SieveParams, L: _Levels) -> list[_Term]:
    e, r1, t1, mu, t2 = p.eps, p.rho_prime, p.tau1, p.mu, p.tau2
    E = L.eps
    return [
        _Term(1 / e, (Var(t1, mu), Var(r1, t1)), (1, 1), "F",
              lambda xs: (L.t3(xs[0], xs[1], E) - xs[0] - xs[1]) / E),
        _Term(1.0, (Var(mu, t2), Var(r1, t1)), (1, 2), "F",
              lambda xs: (L.t1(xs[0]) - xs[0] - xs[1]) / xs[1]),
        _Term(-1.0, (Var(t1, mu), Var(r1, t1), Var(e, t1, hi_ref=1)), (1, 1, 2), "f",
              lambda xs: (L.t3(xs[0], xs[1], xs[2]) - xs[0] - xs[1] - xs[2]) / xs[2]),
    ]


def G_n(n: int, p: SieveParams, cfg: ExponentConfig = ExponentConfig(),
        q: QuadratureSpec = QuadratureSpec(), eps_level: EpsLevel = "theta(eps)") -> float:
    """G_1..G_8."""
    _check_cfg(p, cfg)
    L = _Levels(cfg, p.eps, eps_level)
    Gc = partial(G_of_c, p=p, cfg=cfg, q=q, eps_level=eps_level)
    if n == 1:
        return 4 * Gc(p.rho_prime) + Gc(p.tau1)
    if n in (2, 3, 4):
        c = {2: p.rho, 3: p.tau2, 4: p.tau3}[n]
        return g_zero(p, cfg, q, eps_level) + gbar_of_c(c, p, cfg, q)
    builders = {5: _g5_terms, 6: _g6_terms, 7: _g7_terms, 8: _g8_terms}
    if n not in builders:
        raise ValueError("G_n is defined for 1 <= n <= 8")
    return _sum_terms(builders[n](p, L), q).value


def H2_wu(p: SieveParams, cfg: ExponentConfig = ExponentConfig(),
          q: QuadratureSpec = QuadratureSpec()) -> float:
    """Wu's saving over G_2; nonnegative.

    F^Wu = F * H is nonzero only for 2 <= s <= 3, where F(s) = 2e^gamma/s.
    With A = theta(t) - t and s = A/u - 1, every band of the H table is an
    interval in u and the inner integral is
    2e^gamma * h * [log(u/(A-u))/A] over that interval. What is left is a
    smooth one-dimensional integral in t.
    """
    _check_cfg(p, cfg)
    th, al = float(cfg.theta), float(cfg.alpha)

    def inner(t: float) -> float:
        A = float(level_theta_t_vec(t, th, al)) - t
        if A <= 0:
            return 0.0
        total = 0.0
        for lo, hi, h in WU_SAVINGS_TABLE:
            if h == 0.0 or lo >= 3.0 + 1e-12:
                continue
            u_lo = max(p.eps, A / (1.0 + hi))
            u_hi = min(p.rho_prime, A / (1.0 + lo))
            if u_hi > u_lo:
                total += h * (math.log(u_hi / (A - u_hi)) - math.log(u_lo / (A - u_lo))) / A
        return 2.0 * E_GAMMA * total / t

    bp = float(balance_point(cfg))
    points = [bp] if p.mu < bp < p.rho else None
    value, error = quad(inner, p.mu, p.rho, points=points, epsabs=1e-13, epsrel=1e-10, limit=200)
    if error > max(q.abs_tol, 1e-6 * abs(value)):
        raise QuadratureError("H2 quadrature did not converge", value, error)
    return max(0.0, value)
