"""Buchstab's function and the linear sieve functions F, f.

All three are solutions of delay differential equations with unit delay:

    omega(u) = 1/u                        on [1, 2],   (u omega(u))' = omega(u - 1)
    F(s)     = 2 e^gamma / s              on (0, 3],   (s F(s))'     = f(s - 1)
    f(s)     = 2 e^gamma log(s - 1) / s   on [2, 4],   (s f(s))'     = F(s - 1)

They are tabulated once on a uniform grid (step 1e-4) up to 25, one unit
segment at a time: every value on [k, k+1] only needs an integral over
[k-1, k], which is obtained from the cubic spline of the previous segment.
Splines are built per unit segment because the derivatives jump at the
integers. Beyond the table the functions are replaced by their asymptotes.
"""

from __future__ import annotations

import math
import threading
from dataclasses import dataclass, field
from typing import Literal

import numpy as np
from scipy.interpolate import CubicSpline, PPoly

EULER_GAMMA = 0.57721566490153286060651209008240243
E_GAMMA = math.exp(EULER_GAMMA)
E_MINUS_GAMMA = math.exp(-EULER_GAMMA)

GRID_STEP = 1e-4
TABLE_END = 25.0

# Wu's lower bounds for the savings function H at level 4/7, as printed:
# (lower end, upper end, value); the first row is closed on the left.
WU_SAVINGS_TABLE: tuple[tuple[float, float, float], ...] = (
    (2.0, 2.1, 0.0287118),
    (2.1, 2.2, 0.0280509),
    (2.2, 2.3, 0.0264697),
    (2.3, 2.4, 0.0241936),
    (2.4, 2.5, 0.0214619),
    (2.5, 2.6, 0.0183875),
    (2.6, 2.7, 0.0149960),
    (2.7, 2.8, 0.0117724),
    (2.8, 2.9, 0.0094724),
    (2.9, 3.0, 0.0090024),
)


class DomainError(ValueError):
    """Argument outside the domain of a special function."""


@dataclass(frozen=True)
class TabulatedDelayFunction:
    """Grid solution of a delay differential equation.

    ``values[i]`` is the function at ``domain_start + i * step``. Evaluation
    uses piecewise cubic interpolation and returns ``asymptote`` past the
    last node.
    """

    name: Literal["omega", "bigF", "smallf"]
    domain_start: float
    step: float
    values: np.ndarray
    asymptote: float
    _poly: PPoly = field(repr=False, compare=False)

    def __post_init__(self) -> None:
        if self.step <= 0:
            raise ValueError("step must be positive")
        if len(self.values) == 0:
            raise ValueError("values must be nonempty")
        self.values.setflags(write=False)

    @property
    def domain_end(self) -> float:
        return self.domain_start + (len(self.values) - 1) * self.step

    @property
    def nodes(self) -> np.ndarray:
        return self.domain_start + self.step * np.arange(len(self.values))

    def __call__(self, x):
        x = np.asarray(x, dtype=float)
        out = np.full(x.shape, self.asymptote)
        inside = x <= self.domain_end
        if np.any(inside):
            xi = np.clip(x[inside], self.domain_start, self.domain_end)
            out[inside] = self._poly(xi)
        return out if out.ndim else float(out)


def _segment_nodes(k: int, n: int) -> np.ndarray:
    # exact multiples of the step so node u-1 on segment k-1 matches node u
    return k + np.arange(n + 1) / n


def _join_segments(splines: list[CubicSpline]) -> PPoly:
    x = np.concatenate([s.x[:-1] for s in splines] + [splines[-1].x[-1:]])
    c = np.concatenate([s.c for s in splines], axis=1)
    return PPoly(c, x, extrapolate=True)


def _cumulative(spline: CubicSpline) -> np.ndarray:
    """Integral of the spline from its left end to each node."""
    return spline.antiderivative()(spline.x)


def _build_omega(step: float, end: float) -> TabulatedDelayFunction:
    n = round(1 / step)
    last = math.ceil(end)
    splines: list[CubicSpline] = []
    vals = [1.0 / _segment_nodes(1, n)]
    splines.append(CubicSpline(_segment_nodes(1, n), vals[0]))
    # running integral of omega over [1, k]
    base = 0.0
    for k in range(2, last):
        u = _segment_nodes(k, n)
        prev = splines[-1]
        integral = base + _cumulative(prev)
        w = (1.0 + integral) / u
        base = integral[-1]
        vals.append(w)
        splines.append(CubicSpline(u, w))
    values = np.concatenate([v[:-1] for v in vals] + [vals[-1][-1:]])
    return TabulatedDelayFunction("omega", 1.0, 1.0 / n, values, E_MINUS_GAMMA,
                                  _join_segments(splines))


def _build_sieve_pair(step: float, end: float):
    n = round(1 / step)
    last = math.ceil(end)
    two_eg = 2.0 * E_GAMMA
    F_spl: dict[int, CubicSpline] = {}
    f_spl: dict[int, CubicSpline] = {}
    for k in (1, 2):
        s = _segment_nodes(k, n)
        F_spl[k] = CubicSpline(s, two_eg / s)
    for k in (2, 3):
        s = _segment_nodes(k, n)
        f_spl[k] = CubicSpline(s, two_eg * np.log(s - 1.0) / s)
    # int_2^k f  and  int_3^k F, accumulated segment by segment
    f_int = {2: 0.0}
    F_int = {3: 0.0}
    for k in range(3, last):
        s = _segment_nodes(k, n)
        # F on [k, k+1] needs f on [k-1, k]
        cum_f = f_int[k - 1] + _cumulative(f_spl[k - 1])
        f_int[k] = cum_f[-1]
        F_spl[k] = CubicSpline(s, (two_eg + cum_f) / s)
        if k + 1 < last:
            # f on [k+1, k+2] needs F on [k, k+1]
            s1 = _segment_nodes(k + 1, n)
            cum_F = F_int[k] + _cumulative(F_spl[k])
            F_int[k + 1] = cum_F[-1]
            f_spl[k + 1] = CubicSpline(s1, (two_eg * math.log(3.0) + cum_F) / s1)

    def table(name, spl, start):
        ks = sorted(spl)
        vals = [spl[k](spl[k].x) for k in ks]
        values = np.concatenate([v[:-1] for v in vals] + [vals[-1][-1:]])
        return TabulatedDelayFunction(name, float(start), 1.0 / n, values, 1.0,
                                      _join_segments([spl[k] for k in ks]))

    return table("bigF", F_spl, 1), table("smallf", f_spl, 2)


_lock = threading.Lock()
_tables: dict[str, TabulatedDelayFunction] = {}


def _table(name: str) -> TabulatedDelayFunction:
    tab = _tables.get(name)
    if tab is None:
        with _lock:
            if name not in _tables:
                if name == "omega":
                    _tables["omega"] = _build_omega(GRID_STEP, TABLE_END)
                else:
                    F, f = _build_sieve_pair(GRID_STEP, TABLE_END)
                    _tables["bigF"] = F
                    _tables["smallf"] = f
            tab = _tables[name]
    return tab


def omega_table() -> TabulatedDelayFunction:
    return _table("omega")


def sieve_F_table() -> TabulatedDelayFunction:
    return _table("bigF")


def sieve_f_table() -> TabulatedDelayFunction:
    return _table("smallf")


def buchstab_omega(u):
    """Buchstab's function; raises DomainError for u < 1."""
    arr = np.asarray(u, dtype=float)
    if np.any(arr < 1.0):
        raise DomainError("buchstab_omega requires u >= 1")
    return omega_table()(arr)


def omega_or_zero(u):
    """Buchstab's function extended by 0 below 1, for use inside integrands."""
    u = np.asarray(u, dtype=float)
    out = np.zeros(u.shape)
    ok = u >= 1.0
    if np.any(ok):
        out[ok] = omega_table()(u[ok])
    return out if out.ndim else float(out)


def linear_sieve_F(s):
    """Upper linear sieve function. Arguments below 1 are clamped to F(1) = 2e^gamma."""
    s = np.maximum(np.asarray(s, dtype=float), 1.0)
    return sieve_F_table()(s)


def linear_sieve_f(s):
    """Lower linear sieve function; zero for s <= 2."""
    s = np.asarray(s, dtype=float)
    out = np.zeros(s.shape)
    ok = s > 2.0
    if np.any(ok):
        out[ok] = sieve_f_table()(s[ok])
    return out if out.ndim else float(out)


def wu_savings_H(t):
    """Piecewise-constant savings table of Wu at level 4/7; 0 off [2, 3]."""
    t = np.asarray(t, dtype=float)
    out = np.zeros(t.shape)
    for i, (lo, hi, val) in enumerate(WU_SAVINGS_TABLE):
        lower = t >= lo if i == 0 else t > lo
        out[lower & (t <= hi)] = val
    return out if out.ndim else float(out)


def wu_F(s):
    """Wu's corrected F: F(s) * H(s)."""
    return linear_sieve_F(s) * wu_savings_H(s)
