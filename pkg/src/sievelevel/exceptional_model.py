"""Exponent calculus for large-sieve sums with exceptional eigenvalues.

E(q, y) is the exponent of the sum S(N^q, N, N^y). Three rules constrain it
from above:

    (a) E(q, z) <= E(q, y) <= E(q, z) + theta (y - z)      for z <= y
    (b) E(q, y) <= max(E(1 + y - q, y), q, 1, 1 + y - q)    for q <= y + 1
    (c) E(q, y) <= max(q, 1)                               for y <= max(0, q - 1)

and the starred variant adds E(q, y) <= y at y = max(q, 1). The largest
map obeying (a)-(c) is ``map_M``; with the extra rule it is ``map_Mstar``.
``iterate_E`` computes the largest solution on a grid by applying the rules
downward from E = +inf.
"""

from __future__ import annotations

from dataclasses import dataclass, replace
from fractions import Fraction
from numbers import Rational, Real
from typing import Callable, Literal

import numpy as np

from .exponents import le, parse_real

Variant = Literal["plain", "starred"]


def map_M(q, y, theta):
    """max(q, 1 + theta y, q + theta (1 + y - 2q)); works on arrays."""
    return np.maximum(np.maximum(q, 1 + theta * y), q + theta * (1 + y - 2 * q))


def map_Mstar(q, y, theta):
    """max(q, 1, 1 + theta (y - 1), q + theta (1 + y - 2q))."""
    return np.maximum(np.maximum(np.maximum(q, 1), 1 + theta * (y - 1)),
                      q + theta * (1 + y - 2 * q))


def _scalar_M(q, y, theta):
    return max(q, 1 + theta * y, q + theta * (1 + y - 2 * q))


def _scalar_Mstar(q, y, theta):
    return max(q, 1, 1 + theta * (y - 1), q + theta * (1 + y - 2 * q))


def _theta_below_half(theta) -> Real:
    theta = parse_real(theta)
    if not 0 <= theta < Fraction(1, 2):
        raise ValueError("theta must lie in [0, 1/2)")
    return theta


def alpha_sequence(n: int, theta) -> Real:
    """alpha_0 = 1, alpha_{k+1} = (2 - theta alpha_k) / (1 - theta (alpha_k - 1)).

    Exact for rational theta; tends to 2.
    """
    if n < 0:
        raise ValueError("n must be nonnegative")
    theta = _theta_below_half(theta)
    a = Fraction(1) if isinstance(theta, Rational) else 1.0
    for _ in range(n):
        a = (2 - theta * a) / (1 - theta * (a - 1))
    return a


def lambda_sequence(n: int, theta) -> Real:
    """lambda_0 = 0, lambda_{k+1} = theta/(1 - theta) * (1 + lambda_k)."""
    if n < 0:
        raise ValueError("n must be nonnegative")
    theta = _theta_below_half(theta)
    lam = Fraction(0) if isinstance(theta, Rational) else 0.0
    for _ in range(n):
        lam = theta / (1 - theta) * (1 + lam)
    return lam


def lambda_limit(theta) -> Real:
    theta = _theta_below_half(theta)
    return theta / (1 - 2 * theta)


def eigen_constant(theta) -> Real:
    """c with (1, 1) = c (2, 1) + (1 - c) (1/theta, 1)."""
    theta = _theta_below_half(theta)
    return (1 - theta) / (1 - 2 * theta)


def k_stab_map(q, y, theta):
    """Point (q', y') forced into the optimal region by a point (q, y) in it."""
    q, y, theta = parse_real(q), parse_real(y), parse_real(theta)
    if not 0 <= theta <= Fraction(1, 2):
        raise ValueError("theta must lie in [0, 1/2]")
    if not (le(1, q) and le(y, 2 * q - 1)):
        raise ValueError("k_stab_map needs q >= 1 and y <= 2q - 1")
    if theta == 1:
        raise ValueError("theta = 1 is degenerate")
    q2 = ((1 + theta) * q - theta * (1 + y)) / (1 - theta)
    y2 = q - 1 + q2
    assert le(q, q2) and le(y, y2), "the map must move up and to the right"
    return q2, y2


# -- grid fixed point ---------------------------------------------------------


@dataclass(frozen=True)
class ModelGrid:
    """E values at q = i*step (i <= q_max/step), y = j*step (j <= y_max/step)."""

    q_max: float
    y_max: float
    step: float
    theta: float
    values: np.ndarray
    variant: Variant = "plain"
    sweeps: int = 0

    def __post_init__(self) -> None:
        if not self.step > 0:
            raise ValueError("step must be positive")
        if not 0 <= self.theta <= 0.5:
            raise ValueError("theta must lie in [0, 1/2]")
        if self.variant not in ("plain", "starred"):
            raise ValueError(f"unknown variant {self.variant!r}")
        if self.values.shape != (self.nq, self.ny):
            raise ValueError(f"values must have shape {(self.nq, self.ny)}")
        inv = 1.0 / self.step
        if abs(inv - round(inv)) > 1e-9:
            raise ValueError("1/step must be an integer so that 1 + y - q stays on the grid")

    @property
    def nq(self) -> int:
        return int(round(self.q_max / self.step)) + 1

    @property
    def ny(self) -> int:
        return int(round(self.y_max / self.step)) + 1

    @property
    def q(self) -> np.ndarray:
        return np.arange(self.nq) * self.step

    @property
    def y(self) -> np.ndarray:
        return np.arange(self.ny) * self.step

    def mesh(self):
        return np.meshgrid(self.q, self.y, indexing="ij")

    @classmethod
    def initial(cls, theta: float, variant: Variant = "plain", q_max: float = 3.0,
                y_max: float = 6.0, step: float = 0.01) -> "ModelGrid":
        """E = +inf except where the base rules apply."""
        nq = int(round(q_max / step)) + 1
        ny = int(round(y_max / step)) + 1
        grid = cls(q_max, y_max, step, float(theta), np.full((nq, ny), np.inf), variant)
        return replace(grid, values=_apply_base(grid, grid.values.copy()))

    def candidate(self) -> np.ndarray:
        Q, Y = self.mesh()
        f = map_M if self.variant == "plain" else map_Mstar
        return f(Q, Y, self.theta)


def _base_caps(grid: ModelGrid) -> np.ndarray:
    Q, Y = grid.mesh()
    h = grid.step
    caps = np.full(Q.shape, np.inf)
    # rule (c); the 1e-9*h keeps boundary points such as y = q - 1 inside
    caps = np.where(Y <= np.maximum(0.0, Q - 1) + 1e-9 * h, np.maximum(Q, 1.0), caps)
    if grid.variant == "starred":
        on_line = np.abs(Y - np.maximum(Q, 1.0)) <= 1e-9 * h
        caps = np.where(on_line, np.minimum(caps, Y), caps)
    return caps


def _apply_base(grid: ModelGrid, E: np.ndarray) -> np.ndarray:
    return np.minimum(E, _base_caps(grid))


def _rule_b_refs(grid: ModelGrid):
    """Index arrays (i, j, i') with i' the grid index of 1 + y - q."""
    n1 = int(round(1.0 / grid.step))
    i, j = np.meshgrid(np.arange(grid.nq), np.arange(grid.ny), indexing="ij")
    iref = n1 + j - i
    ok = (iref >= 0) & (iref < grid.nq)  # q <= y + 1 is iref >= 0
    return i[ok], j[ok], iref[ok]


def _sweep(grid: ModelGrid, E: np.ndarray, refs, outside: np.ndarray | None) -> np.ndarray:
    th = grid.theta
    y = grid.y[None, :]
    # rule (a), upper half: E(q, y) <= min_{z<=y} E(q, z) + theta (y - z)
    E = np.minimum(E, np.minimum.accumulate(E - th * y, axis=1) + th * y)
    # rule (a), lower half: E nondecreasing in y
    E = np.minimum(E, np.minimum.accumulate(E[:, ::-1], axis=1)[:, ::-1])
    i, j, iref = refs
    q_i = i * grid.step
    y_j = j * grid.step
    bound = np.maximum(np.maximum(E[iref, j], np.maximum(q_i, 1.0)), 1.0 + y_j - q_i)
    E[i, j] = np.minimum(E[i, j], bound)
    if outside is not None:
        E = np.minimum(E, outside)
    return E


def _outside_bound(grid: ModelGrid) -> np.ndarray:
    """Rule (b) with the reference point off the grid, evaluated on the candidate map."""
    Q, Y = grid.mesh()
    R = 1.0 + Y - Q
    cand = map_M if grid.variant == "plain" else map_Mstar
    out = (R > grid.q_max + 1e-9 * grid.step)
    vals = np.maximum(np.maximum(cand(R, Y, grid.theta), np.maximum(Q, 1.0)), R)
    return np.where(out, vals, np.inf)


class ConvergenceError(RuntimeError):
    def __init__(self, message: str, residual: float, grid: ModelGrid):
        super().__init__(f"{message} (residual {residual:.3g})")
        self.residual = residual
        self.grid = grid


Boundary = Literal["none", "candidate"]


def iterate_E(grid: ModelGrid, max_sweeps: int = 10**4, tol: float = 1e-9,
              boundary: Boundary = "none") -> ModelGrid:
    """Apply the rules until no cell moves by more than ``tol``.

    Cells only decrease. With ``boundary="none"`` rule (b) is skipped when
    1 + y - q falls off the grid; ``"candidate"`` uses the candidate map
    there instead.
    """
    if boundary not in ("none", "candidate"):
        raise ValueError(f"unknown boundary {boundary!r}")
    refs = _rule_b_refs(grid)
    outside = _outside_bound(grid) if boundary == "candidate" else None
    E = _apply_base(grid, grid.values.copy())
    residual = np.inf
    for sweep in range(1, max_sweeps + 1):
        new = _sweep(grid, E.copy(), refs, outside)
        finite = np.isfinite(E)
        if np.any(np.isfinite(new) & ~finite):
            residual = np.inf
        else:
            diff = np.where(finite, E - new, 0.0)
            residual = float(diff.max(initial=0.0))
        E = new
        if residual < tol:
            return replace(grid, values=E, sweeps=sweep)
    raise ConvergenceError("grid iteration did not converge", residual,
                           replace(grid, values=E, sweeps=max_sweeps))


@dataclass(frozen=True)
class Violation:
    rule: str
    q: float
    y: float
    lhs: float
    rhs: float


def verify_model_rules(candidate: Callable | ModelGrid, grid: ModelGrid,
                       tol: float = 1e-9) -> list[Violation]:
    """Check every rule at every grid point.

    ``candidate`` is a map f(q, y, theta) (vectorized) or a converged grid.
    For a map, rule (b) is checked at its exact reference point; for a grid,
    only where that point is on the grid.
    """
    Q, Y = grid.mesh()
    th = grid.theta
    if isinstance(candidate, ModelGrid):
        E = candidate.values
        lookup = None
    else:
        E = np.asarray(candidate(Q, Y, th), dtype=float)
        lookup = candidate
    out: list[Violation] = []

    def report(rule, mask, lhs, rhs):
        for i, j in zip(*np.nonzero(mask)):
            out.append(Violation(rule, float(Q[i, j]), float(Y[i, j]),
                                 float(lhs[i, j]), float(rhs[i, j])))

    y = grid.y[None, :]
    best = np.minimum.accumulate(E - th * y, axis=1) + th * y
    report("a:lipschitz", E > best + tol, E, best)
    later = np.minimum.accumulate(E[:, ::-1], axis=1)[:, ::-1]
    report("a:monotone", E > later + tol, E, later)

    R = 1.0 + Y - Q
    applies = R >= -1e-12
    if lookup is not None:
        ref = np.asarray(lookup(R, Y, th), dtype=float)
    else:
        ref = np.full(E.shape, np.inf)
        i, j, iref = _rule_b_refs(grid)
        ref[i, j] = E[iref, j]
    rhs_b = np.maximum(np.maximum(ref, np.maximum(Q, 1.0)), R)
    report("b", applies & (E > rhs_b + tol), E, rhs_b)

    cap_c = np.maximum(Q, 1.0)
    in_c = Y <= np.maximum(0.0, Q - 1) + 1e-9 * grid.step
    report("c", in_c & (E > cap_c + tol), E, cap_c)
    if grid.variant == "starred":
        on_line = np.abs(Y - np.maximum(Q, 1.0)) <= 1e-9 * grid.step
        report("star", on_line & (E > Y + tol), E, Y)
    return out


def converge(theta, variant: Variant = "plain", step: float = 0.01, q_max: float = 3.0,
             y_max: float = 6.0, tol: float = 1e-9, max_sweeps: int = 10**4,
             boundary: Boundary = "none") -> ModelGrid:
    return iterate_E(ModelGrid.initial(float(theta), variant, q_max, y_max, step),
                     max_sweeps, tol, boundary)
