"""Singular series, Hardy-Littlewood main terms and the assembled upper bound.

The sieve upper bound for the number of prime pairs is a multiple of the
Hardy-Littlewood prediction Pi_a(x) = 2 S_a x / (log x)^2. Its coefficient
is

    ratio = (G_1 + ... + G_8 - H_2 + G(mu) * (I_9 + ... + I_21)) / (5 e^gamma).
"""

from __future__ import annotations

import math
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np
from scipy.integrate import quad
from scipy.optimize import minimize

from .exponents import ExponentConfig, balance_point
from .quadrature import QuadratureError, QuadratureSpec, worker_count
from .sieve_integrals import (
    EpsLevel,
    LowArgument,
    SieveParams,
    G_n,
    G_of_c,
    H2_wu,
    integral_In,
)
from .special_functions import E_GAMMA

G_INDICES = tuple(range(1, 9))
I_INDICES = tuple(range(9, 22))
FROZEN_DURING_SEARCH = (20, 21)


def _primes_upto(n: int) -> np.ndarray:
    sieve = np.ones(n + 1, dtype=bool)
    sieve[:2] = False
    sieve[4::2] = False
    for p in range(3, math.isqrt(n) + 1, 2):
        if sieve[p]:
            sieve[p * p::2 * p] = False
    return np.flatnonzero(sieve)


def _log_factor(p):
    # log of (1 - 2/p)/(1 - 1/p)^2, accurate for large p
    return np.log1p(-2.0 / p) - 2.0 * np.log1p(-1.0 / p)


def singular_series(a: int, prime_cutoff: int = 10**7) -> float:
    """Twin/Goldbach singular series S_a for even a.

    Primes up to ``prime_cutoff`` are multiplied out; the remaining tail
    sum over primes is replaced by the integral of log(factor)/log t, whose
    error is far below the size of the tail (about 1/(N log N)).
    """
    if isinstance(a, bool) or not isinstance(a, (int, np.integer)):
        raise TypeError("a must be an integer")
    if a == 0 or a % 2:
        raise ValueError("a must be a nonzero even integer")
    if prime_cutoff < 10**3:
        raise ValueError("prime_cutoff must be at least 1000")
    primes = _primes_upto(int(prime_cutoff))
    odd = primes[1:].astype(float)
    log_total = math.fsum(_log_factor(odd))
    # with t = e^s the tail integrand decays like e^-s / s
    tail, _ = quad(lambda s: float(_log_factor(math.exp(s))) * math.exp(s) / s,
                   math.log(prime_cutoff), math.log(prime_cutoff) + 80.0,
                   epsabs=1e-16, epsrel=1e-10, limit=200)
    log_total += tail
    m = abs(int(a))
    while m % 2 == 0:
        m //= 2
    p = 3
    while p * p <= m:
        if m % p == 0:
            log_total += math.log((1 - 1 / p) / (1 - 2 / p))
            while m % p == 0:
                m //= p
        p += 2
    if m > 1:
        log_total += math.log((1 - 1 / m) / (1 - 2 / m))
    return math.exp(log_total)


def hardy_littlewood_main(a: int, x: float, prime_cutoff: int = 10**7) -> float:
    """Pi_a(x) = 2 S_a x / (log x)^2."""
    if not x > 1:
        raise ValueError("x must exceed 1")
    return 2.0 * singular_series(a, prime_cutoff) * x / math.log(x) ** 2


@dataclass(frozen=True)
class BoundReport:
    params: SieveParams
    cfg: ExponentConfig
    g_values: tuple[float, ...]
    g_mu: float
    i_values: tuple[float, ...]
    h2wu: float
    ratio: float
    seconds: float = 0.0
    budget_exhausted: bool = False
    notes: tuple[str, ...] = ()

    def __post_init__(self) -> None:
        if len(self.g_values) != len(G_INDICES) or len(self.i_values) != len(I_INDICES):
            raise ValueError("expected eight G values and thirteen I values")
        if not math.isclose(self.ratio, self.recompute_ratio(), rel_tol=0, abs_tol=1e-12):
            raise ValueError("ratio does not match its parts")

    @property
    def sum_g(self) -> float:
        return math.fsum(self.g_values)

    @property
    def sum_i(self) -> float:
        return math.fsum(self.i_values)

    def recompute_ratio(self) -> float:
        return combine(self.g_values, self.h2wu, self.g_mu, self.i_values)

    def g(self, n: int) -> float:
        return self.g_values[n - 1]

    def i(self, n: int) -> float:
        return self.i_values[n - 9]

    def as_dict(self) -> dict:
        return {
            "params": self.params.as_dict(),
            "theta": str(self.cfg.theta),
            "alpha": str(self.cfg.alpha),
            "G": {f"G{n}": v for n, v in zip(G_INDICES, self.g_values)},
            "G_mu": self.g_mu,
            "I": {f"I{n}": v for n, v in zip(I_INDICES, self.i_values)},
            "sum_G": self.sum_g,
            "sum_I": self.sum_i,
            "H2_wu": self.h2wu,
            "ratio": self.ratio,
            "seconds": self.seconds,
            "budget_exhausted": self.budget_exhausted,
            "notes": list(self.notes),
        }


def combine(g_values: Sequence[float], h2wu: float, g_mu: float, i_values: Sequence[float]) -> float:
    return (math.fsum(g_values) - h2wu + g_mu * math.fsum(i_values)) / (5.0 * E_GAMMA)


class BoundAssemblyError(QuadratureError):
    """A quadrature failed; ``partial`` holds everything computed before it."""

    def __init__(self, stage: str, cause: QuadratureError, partial: dict):
        super().__init__(f"{stage}: {cause}", cause.estimate, cause.error)
        self.stage = stage
        self.partial = partial


def assemble_bound(p: SieveParams, cfg: ExponentConfig = ExponentConfig(),
                   q: QuadratureSpec = QuadratureSpec(),
                   low_argument: LowArgument = "unit",
                   eps_level: EpsLevel = "theta(eps)",
                   frozen_i: dict[int, float] | None = None) -> BoundReport:
    """Evaluate every integral and combine them.

    ``frozen_i`` supplies fixed values for some I_n instead of computing them.
    With SIEVELEVEL_WORKERS > 1 the integrals run in a process pool; each
    value lands in a fixed slot, so the result does not depend on the
    worker count.
    """
    p.check_against(cfg)
    frozen_i = dict(frozen_i or {})
    start = time.perf_counter()
    tasks: list[tuple[str, Callable, tuple]] = [("G(mu)", G_of_c, (p.mu, p, cfg, q, eps_level))]
    tasks += [(f"G{n}", G_n, (n, p, cfg, q, eps_level)) for n in G_INDICES]
    tasks += [(f"I{n}", integral_In, (n, p, q, low_argument)) for n in I_INDICES if n not in frozen_i]
    tasks.append(("H2", H2_wu, (p, cfg, q)))
    values: dict[str, float] = {}
    workers = min(worker_count(), len(tasks))
    try:
        if workers == 1:
            for stage, fn, args in tasks:
                values[stage] = fn(*args)
        else:
            with ProcessPoolExecutor(workers) as pool:
                futures = [(stage, pool.submit(fn, *args)) for stage, fn, args in tasks]
                for stage, fut in futures:
                    values[stage] = fut.result()
    except QuadratureError as exc:
        partial = {"G_mu": values.get("G(mu)"),
                   "G": {n: values[f"G{n}"] for n in G_INDICES if f"G{n}" in values},
                   "I": {n: values[f"I{n}"] for n in I_INDICES if f"I{n}" in values}}
        raise BoundAssemblyError(stage, exc, partial) from exc
    g_mu, h2 = values["G(mu)"], values["H2"]
    g_values = tuple(values[f"G{n}"] for n in G_INDICES)
    i_values = tuple(frozen_i[n] if n in frozen_i else values[f"I{n}"] for n in I_INDICES)
    notes = tuple(f"I{n} frozen" for n in sorted(frozen_i))
    return BoundReport(p, cfg, g_values, g_mu, i_values, h2,
                       combine(g_values, h2, g_mu, i_values),
                       seconds=time.perf_counter() - start, notes=notes)


# -- parameter search -----------------------------------------------------------

_LOW, _HIGH = 0.1, 0.3
_ORDER = ("rho_prime", "tau1", "mu", "tau2", "tau3", "rho")


def _to_free(p: SieveParams) -> np.ndarray:
    """Log-gaps of the chain 0.1 < rho' < tau1 < mu < tau2 < tau3 < rho < 0.3."""
    points = [_LOW] + [getattr(p, k) for k in _ORDER] + [_HIGH]
    gaps = np.maximum(np.diff(points), 1e-9)
    return np.log(gaps[:-1] / gaps[-1])


def _from_free(z: np.ndarray, eps: float) -> SieveParams:
    w = np.exp(np.append(z - np.max(z), -np.max(z)))
    gaps = (_HIGH - _LOW) * w / w.sum()
    points = _LOW + np.cumsum(gaps)[:-1]
    return SieveParams(eps=eps, **dict(zip(_ORDER, (float(x) for x in points))))


# evaluate(params, frozen_i) -> report; frozen_i maps n to a fixed I_n or is None
Evaluator = Callable[[SieveParams, "dict[int, float] | None"], BoundReport]


def optimize_params(cfg: ExponentConfig, initial: SieveParams, budget: int = 40,
                    q: QuadratureSpec = QuadratureSpec(), evaluate: Evaluator | None = None,
                    low_argument: LowArgument = "unit") -> BoundReport:
    """Nelder-Mead search for smaller ratios, starting from ``initial``.

    The six cut points are encoded by log-ratios of consecutive gaps of the
    chain 0.1 < rho' < tau1 < mu < tau2 < tau3 < rho < 0.3, so every
    iterate is ordered; mu above the balance point is rejected. eps stays
    fixed, and I_20, I_21 are frozen at their initial values during the
    search and recomputed for the final report. ``budget`` counts
    evaluations after the initial one. The result is never worse than the
    initial report.
    """
    if budget < 0:
        raise ValueError("budget must be nonnegative")
    initial.check_against(cfg)
    if evaluate is None:
        def evaluate(par, frozen):
            return assemble_bound(par, cfg, q, low_argument, frozen_i=frozen)
    base = evaluate(initial, None)
    if budget == 0:
        return base
    frozen = {n: base.i(n) for n in FROZEN_DURING_SEARCH}
    mu_cap = float(balance_point(cfg))
    seen: dict[tuple, float] = {}
    best = [base.ratio, initial]
    calls = [0]

    def objective(z: np.ndarray) -> float:
        try:
            par = _from_free(z, initial.eps)
        except ValueError:
            return math.inf
        if par.mu > mu_cap:
            return math.inf
        key = tuple(round(v, 12) for v in par.as_dict().values())
        if key in seen:
            return seen[key]
        if calls[0] >= budget:
            return math.inf
        calls[0] += 1
        try:
            value = evaluate(par, frozen).ratio
        except QuadratureError:
            value = math.inf
        seen[key] = value
        if value < best[0] or (value == best[0] and key < tuple(best[1].as_dict().values())):
            best[0], best[1] = value, par
        return value

    z0 = _to_free(initial)
    minimize(objective, z0, method="Nelder-Mead",
             options={"maxfev": budget + 1, "xatol": 1e-5, "fatol": 1e-7,
                      "initial_simplex": z0 + 0.05 * np.vstack([np.zeros(6), np.eye(6)])})
    exhausted = calls[0] >= budget
    if best[1] is initial:
        return _flag(base, exhausted)
    final = evaluate(best[1], None)
    if final.ratio > base.ratio:
        return _flag(base, exhausted)
    return _flag(final, exhausted)


def _flag(report: BoundReport, exhausted: bool) -> BoundReport:
    if not exhausted:
        return report
    return BoundReport(report.params, report.cfg, report.g_values, report.g_mu, report.i_values,
                       report.h2wu, report.ratio, report.seconds, True,
                       report.notes + ("evaluation budget exhausted",))
