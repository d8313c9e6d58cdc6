"""Closed-form exponent maps for the level of distribution.

Every map here accepts ``fractions.Fraction`` inputs and then computes
exactly; floats are accepted everywhere and compared with a 1e-12 slack.
The ``*_vec`` variants are numpy versions used inside integrands.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from numbers import Rational, Real
from typing import Iterable, Literal, Sequence

import numpy as np

SLACK = 1e-12

WOrder = Literal["printed", "derived"]


def parse_real(value) -> Real:
    """Parse ``"7/32"``, ``"0.25"``, ints, floats or Fractions.

    Strings become exact Fractions so rational inputs stay exact.
    """
    if isinstance(value, (Fraction, int)):
        return Fraction(value)
    if isinstance(value, str):
        return Fraction(value.strip())
    if isinstance(value, Real):
        return value
    raise TypeError(f"cannot interpret {value!r} as a real number")


@dataclass(frozen=True)
class ExponentConfig:
    """Exceptional-eigenvalue exponent, residue range and slack.

    theta: the bound towards Selberg's conjecture, 0 <= theta <= 1/2.
    alpha: residues satisfy |a| < x^alpha.
    delta: slack subtracted from the right-hand sides of the factorization
        inequalities; 0 in numeric work.
    """

    theta: Real = Fraction(7, 32)
    alpha: Real = Fraction(0)
    delta: Real = Fraction(0)

    def __post_init__(self) -> None:
        for name in ("theta", "alpha", "delta"):
            object.__setattr__(self, name, parse_real(getattr(self, name)))
        if not 0 <= self.theta <= Fraction(1, 2):
            raise ValueError("theta must lie in [0, 1/2]")
        if self.alpha < 0:
            raise ValueError("alpha must be nonnegative")
        if self.delta < 0:
            raise ValueError("delta must be nonnegative")

    @property
    def exact(self) -> bool:
        return all(isinstance(x, Rational) for x in (self.theta, self.alpha, self.delta))

    def as_float(self) -> "ExponentConfig":
        return ExponentConfig(float(self.theta), float(self.alpha), float(self.delta))


def le(a, b) -> bool:
    """a <= b, exactly for rationals and with SLACK otherwise."""
    if isinstance(a, Rational) and isinstance(b, Rational):
        return a <= b
    return a <= b + SLACK


def _branches(t, cfg: ExponentConfig):
    th, al = cfg.theta, cfg.alpha
    return (
        (1 + t) / 2,
        (1 - (Fraction(3, 2) - 2 * th) * t) / (1 + th),
        1 - (al * th + 3 * t) / 2,
    )


def level_theta_t(t, cfg: ExponentConfig = ExponentConfig()):
    """Level attainable when some divisor has size x^t.

    The minimum of the three linear branches; unimodal in t with its
    peak at ``balance_point(cfg)``.
    """
    if t < 0:
        raise ValueError("t must be nonnegative")
    return min(_branches(t, cfg))


def active_branch(t, cfg: ExponentConfig = ExponentConfig()) -> str:
    """Name of the branch attaining ``level_theta_t``; ties go to the lower branch."""
    vals = _branches(t, cfg)
    names = ("lower", "spectral", "uniform")
    best = min(vals)
    for name, v in zip(names, vals):
        if v == best or (not isinstance(best, Rational) and abs(v - best) <= SLACK):
            return name
    raise AssertionError("unreachable")


def balance_point(cfg: ExponentConfig = ExponentConfig()):
    th, al = cfg.theta, cfg.alpha
    return min((1 - th) / (4 - 3 * th), (1 - al * th) / 4)


def psi(x, y):
    """x if x >= y else 0 (the boundary x == y counts as x >= y)."""
    return x if le(y, x) else 0 * x


def w_term(t1, t2, t3, cfg: ExponentConfig = ExponentConfig()):
    th, al = cfg.theta, cfg.alpha
    cap = min(
        ((5 - 4 * th) - (3 - 4 * th) * t3) / (8 - 6 * th),
        (5 - al * th - 3 * t3) / 8,
        1 - 2 * t2,
    )
    return psi(cap, (1 + t1) / 2)


def level_theta_t123_terms(t1, t2, t3, cfg: ExponentConfig = ExponentConfig(),
                           w_order: WOrder = "printed") -> dict[str, Real]:
    """The eight candidates whose maximum is ``level_theta_t123``."""
    lt = lambda s: level_theta_t(s, cfg)  # noqa: E731
    w2 = w_term(t1, t3, t2, cfg) if w_order == "printed" else w_term(t2, t1, t3, cfg)
    return {
        "theta(t1)": lt(t1),
        "theta(t2)": lt(t2),
        "theta(t1+t2)": lt(t1 + t2),
        "theta(t1+t2+t3)": lt(t1 + t2 + t3),
        "w(t1,t2,t3)": w_term(t1, t2, t3, cfg),
        "w2": w2,
        "psi13": psi(lt(t1 + t3), t1 + 2 * t2 + t3),
        "psi23": psi(lt(t2 + t3), 2 * t1 + t2 + t3),
    }


def level_theta_t123(t1, t2, t3, cfg: ExponentConfig = ExponentConfig(),
                     w_order: WOrder = "printed"):
    """Level for a modulus whose three largest prime factors are x^t1 >= x^t2 >= x^t3.

    ``w_order="printed"`` uses w(t1, t3, t2) as the sixth candidate;
    ``"derived"`` uses w(t2, t1, t3), the form the second greedy
    alternative actually produces.
    """
    if not (t1 >= t2 >= t3 >= 0):
        raise ValueError("expected t1 >= t2 >= t3 >= 0")
    return max(level_theta_t123_terms(t1, t2, t3, cfg, w_order).values())


def critical_interval(vartheta, cfg: ExponentConfig = ExponentConfig()):
    """Range (v, u) of exponents for the middle factor b; may be empty (v > u)."""
    if not (Fraction(1, 2) <= vartheta < Fraction(5, 8)):
        raise ValueError("critical_interval requires 1/2 <= vartheta < 5/8")
    th, al = cfg.theta, cfg.alpha
    v = 2 * vartheta - 1
    u = min((1 - (1 + th) * vartheta) / (Fraction(3, 2) - 2 * th),
            (2 - 2 * vartheta - al * th) / 3)
    return v, u


def headline_levels(cfg: ExponentConfig = ExponentConfig()):
    """(triply well-factorable level, level uniform in |a| < x^(1+eps))."""
    th = cfg.theta
    return (5 - 4 * th) / (8 - 6 * th), (5 - th) / 8


def factorable_level(cfg: ExponentConfig = ExponentConfig()):
    """Level for residues |a| < x^alpha: min of the two headline shapes."""
    th, al = cfg.theta, cfg.alpha
    return min((5 - 4 * th) / (8 - 6 * th), (5 - al * th) / 8)


# -- vectorised versions (float only) ---------------------------------------


def level_theta_t_vec(t, theta: float, alpha: float):
    t = np.asarray(t, dtype=float)
    return np.minimum(
        np.minimum((1 + t) / 2, (1 - (1.5 - 2 * theta) * t) / (1 + theta)),
        1 - (alpha * theta + 3 * t) / 2,
    )


def _psi_vec(x, y):
    return np.where(x >= y - SLACK, x, 0.0)


def _w_vec(t1, t2, t3, theta, alpha):
    cap = np.minimum(
        np.minimum(((5 - 4 * theta) - (3 - 4 * theta) * t3) / (8 - 6 * theta),
                   (5 - alpha * theta - 3 * t3) / 8),
        1 - 2 * t2,
    )
    return _psi_vec(cap, (1 + t1) / 2)


def level_theta_t123_vec(t1, t2, t3, theta: float, alpha: float,
                         w_order: WOrder = "printed"):
    t1, t2, t3 = np.broadcast_arrays(*(np.asarray(a, dtype=float) for a in (t1, t2, t3)))
    lt = lambda s: level_theta_t_vec(s, theta, alpha)  # noqa: E731
    w2 = _w_vec(t1, t3, t2, theta, alpha) if w_order == "printed" else _w_vec(t2, t1, t3, theta, alpha)
    return np.maximum.reduce([
        lt(t1), lt(t2), lt(t1 + t2), lt(t1 + t2 + t3),
        _w_vec(t1, t2, t3, theta, alpha), w2,
        _psi_vec(lt(t1 + t3), t1 + 2 * t2 + t3),
        _psi_vec(lt(t2 + t3), 2 * t1 + t2 + t3),
    ])


# -- bound shape for quintilinear Kloosterman sums ----------------------------


@dataclass(frozen=True)
class JBoundInput:
    """Sizes and coefficient norms entering the bound shape J(a, C, D, N, R, S).

    ``norms_by_divisor`` lists (n'', ||b~(n'')||_2^2) for n'' | a^infinity,
    n'' <= 2N; the n'' = 1 entry must equal ``norm_b_sq``.
    """

    a: float
    q0: float
    C: float
    D: float
    N: float
    R: float
    S: float
    norm_b_sq: float
    norms_by_divisor: Sequence[tuple[int, float]] = ()

    def __post_init__(self) -> None:
        for name in ("a", "q0", "C", "D", "N", "R", "S"):
            if not getattr(self, name) > 0:
                raise ValueError(f"{name} must be positive")
        if self.norm_b_sq < 0 or any(ns < 0 for _, ns in self.norms_by_divisor):
            raise ValueError("norms must be nonnegative")
        for n2, ns in self.norms_by_divisor:
            if n2 < 1 or n2 > 2 * self.N:
                raise ValueError("divisor n'' must satisfy 1 <= n'' <= 2N")
            if n2 == 1 and not math.isclose(ns, self.norm_b_sq, rel_tol=1e-12, abs_tol=0.0):
                raise ValueError("the n''=1 norm must equal norm_b_sq")


def evaluate_J_bound(inp: JBoundInput, cfg: ExponentConfig = ExponentConfig()) -> float:
    th = float(cfg.theta)
    a, q0, C, D, N, R, S = (float(getattr(inp, k)) for k in ("a", "q0", "C", "D", "N", "R", "S"))
    divisor_part = 0.0
    for n2, norm_sq in _divisor_terms(inp):
        divisor_part += (a * n2) ** th * (C * S * (N / n2 + R * S) * (C + D * R) + a * N * R * S) * norm_sq
    main = (C * S * (C * D * math.sqrt(R)) ** (2 * th) * (N + R * S) ** (1 - th)
            * (C + D * R) ** (1 - 2 * th) + D * D * N * R)
    return math.sqrt(q0 * divisor_part + main * inp.norm_b_sq)


def _divisor_terms(inp: JBoundInput) -> Iterable[tuple[int, float]]:
    terms = list(inp.norms_by_divisor)
    if not any(n2 == 1 for n2, _ in terms):
        terms.insert(0, (1, inp.norm_b_sq))
    return terms
