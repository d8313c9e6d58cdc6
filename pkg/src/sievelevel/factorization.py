"""Factorizations d = abc of sieve moduli with a bounded middle factor.

Everything is in exponent space: a prime p = x^t is represented by t, the
sifting level D by ``level - 2*delta`` and the splitting parameter A by
``cut``. Comparisons are exact for Fractions and use a 1e-12 slack for
floats (see ``exponents.le``).

The three inequalities checked by ``check_triple_constraints`` are

    2*cut + b + 2c                          <= 1 - 3*delta
    alpha*theta + cut + a + 5b + 2c         <= 2 - 3*delta
    2*theta*(cut + c - b) + cut + a + 5b + 2c <= 2 - 2*delta

together with a <= cut, which every algorithm enforces separately.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field, replace
from fractions import Fraction
from numbers import Rational, Real
from typing import Iterable, Literal, Sequence

import numpy as np

from .exponents import (
    ExponentConfig,
    balance_point,
    critical_interval,
    le,
    level_theta_t,
    level_theta_t123,
    parse_real,
)

Bin = Literal["a", "b", "c"]

MAX_BRUTE_FORCE = 20


def lt(x, y) -> bool:
    """Strict x < y; floats get the same slack as ``le``."""
    if isinstance(x, Rational) and isinstance(y, Rational):
        return x < y
    return x < y + 1e-12


@dataclass(frozen=True)
class FactorizationInstance:
    """Prime exponents t_1 >= ... >= t_r of d, the level and the cut log_x A."""

    prime_exponents: tuple[Real, ...]
    level_exponent: Real
    cut_exponent: Real
    cfg: ExponentConfig = ExponentConfig()

    def __post_init__(self) -> None:
        ts = tuple(parse_real(t) for t in self.prime_exponents)
        object.__setattr__(self, "prime_exponents", ts)
        object.__setattr__(self, "level_exponent", parse_real(self.level_exponent))
        object.__setattr__(self, "cut_exponent", parse_real(self.cut_exponent))
        if any(not t > 0 for t in ts):
            raise ValueError("prime exponents must be positive")
        if any(ts[i] < ts[i + 1] for i in range(len(ts) - 1)):
            raise ValueError("prime exponents must be sorted in descending order")
        if not le(sum(ts, Fraction(0)) if self.exact else sum(ts), 1):
            raise ValueError("the modulus must not exceed x (sum of exponents <= 1)")
        delta = self.cfg.delta
        if not (le(delta, self.cut_exponent) and le(self.cut_exponent, Fraction(1, 3) - delta / 2)):
            raise ValueError("cut exponent must lie in [delta, 1/3 - delta/2]")

    @property
    def exact(self) -> bool:
        vals = (*self.prime_exponents, self.level_exponent, self.cut_exponent)
        return self.cfg.exact and all(isinstance(v, Rational) for v in vals)

    @property
    def r(self) -> int:
        return len(self.prime_exponents)

    @property
    def sift_exponent(self):
        """log_x D = level - 2 delta."""
        return self.level_exponent - 2 * self.cfg.delta

    def zero(self):
        return Fraction(0) if self.exact else 0.0


@dataclass(frozen=True)
class TripleFactorization:
    a_exp: Real
    b_exp: Real
    c_exp: Real
    assignment: tuple[Bin, ...]

    @classmethod
    def from_assignment(cls, exps: Sequence[Real], assignment: Sequence[Bin]) -> "TripleFactorization":
        if len(exps) != len(assignment):
            raise ValueError("assignment length must match the number of primes")
        zero = Fraction(0) if all(isinstance(t, Rational) for t in exps) else 0.0
        sums = {"a": zero, "b": zero, "c": zero}
        for t, bin_ in zip(exps, assignment):
            if bin_ not in sums:
                raise ValueError(f"unknown bin {bin_!r}")
            sums[bin_] += t
        return cls(sums["a"], sums["b"], sums["c"], tuple(assignment))

    def bins(self) -> dict[Bin, list[int]]:
        out: dict[Bin, list[int]] = {"a": [], "b": [], "c": []}
        for i, bin_ in enumerate(self.assignment):
            out[bin_].append(i)
        return out


@dataclass(frozen=True)
class FactorizationFailure:
    """No factorization found; ``reason`` says which step gave up."""

    reason: str

    def __bool__(self) -> bool:
        return False


class PreconditionError(ValueError):
    """Hypotheses of the greedy packing are not met."""


class InstanceTooLarge(ValueError):
    """Brute force asked for too many primes."""


# -- support sets ---------------------------------------------------------------


def _prefix_ok(ts: Sequence[Real], bound, power: int, ms: Iterable[int]) -> bool:
    # sum_{i<m} t_i + power * t_m < bound for each 1-based m in ms
    for m in ms:
        if not lt(sum(ts[: m - 1], 0 * bound) + power * ts[m - 1], bound):
            return False
    return True


def is_well_support(inst: FactorizationInstance) -> bool:
    """p_1...p_{m-1} p_m^2 < D for all m."""
    ts = inst.prime_exponents
    return _prefix_ok(ts, inst.sift_exponent, 2, range(1, inst.r + 1))


def is_dplus_support(inst: FactorizationInstance) -> bool:
    """p_1...p_{m-1} p_m^3 < D for odd m."""
    ts = inst.prime_exponents
    return _prefix_ok(ts, inst.sift_exponent, 3, range(1, inst.r + 1, 2))


def is_dminus_support(inst: FactorizationInstance) -> bool:
    """p_1...p_{m-1} p_m^3 < D for even m, and p_1^2 < D."""
    ts = inst.prime_exponents
    if ts and not lt(2 * ts[0], inst.sift_exponent):
        return False
    return _prefix_ok(ts, inst.sift_exponent, 3, range(2, inst.r + 1, 2))


def is_well_box(sizes: Sequence[Real], level: Real) -> bool:
    """Box condition D_1...D_{m-1} D_m^2 < D on a sequence of box exponents."""
    return _prefix_ok(list(sizes), level, 2, range(1, len(sizes) + 1))


# -- constraint systems -----------------------------------------------------------


def triple_constraint_values(f: TripleFactorization, inst: FactorizationInstance):
    """[(lhs, rhs)] for the three inequalities, in exponent space."""
    th, al, de = inst.cfg.theta, inst.cfg.alpha, inst.cfg.delta
    A, a, b, c = inst.cut_exponent, f.a_exp, f.b_exp, f.c_exp
    base = A + a + 5 * b + 2 * c
    return [
        (2 * A + b + 2 * c, 1 - 3 * de),
        (al * th + base, 2 - 3 * de),
        (2 * th * (A + c - b) + base, 2 - 2 * de),
    ]


def check_triple_constraints(f: TripleFactorization, inst: FactorizationInstance) -> bool:
    total = f.a_exp + f.b_exp + f.c_exp
    s = sum(inst.prime_exponents, inst.zero())
    if not (le(total, s) and le(s, total)):
        raise ValueError("factorization does not multiply back to d")
    return all(le(lhs, rhs) for lhs, rhs in triple_constraint_values(f, inst))


def check_outline_system(q1, q2, q3, cfg: ExponentConfig = ExponentConfig()) -> bool:
    """Exponent form of the three size conditions on Q_1, Q_2, Q_3 (boundary included)."""
    q1, q2, q3 = (parse_real(q) for q in (q1, q2, q3))
    if min(q1, q2, q3) < 0:
        raise ValueError("exponents must be nonnegative")
    th, al = cfg.theta, cfg.alpha
    core = 2 * q1 + 5 * q2 + 2 * q3
    return (
        le(2 * q1 + q2 + 2 * q3, 1)
        and le(al * th + core, 2)
        and le(2 * th * (q1 + q3 - q2) + core, 2)
    )


# -- criterion --------------------------------------------------------------------


def _verify(inst: FactorizationInstance, assignment: Sequence[Bin]):
    f = TripleFactorization.from_assignment(inst.prime_exponents, assignment)
    if le(f.a_exp, inst.cut_exponent) and check_triple_constraints(f, inst):
        return f
    return FactorizationFailure("candidate failed the constraint check")


def factor_by_criterion(inst: FactorizationInstance, b_indices: Sequence[int]):
    """Put the primes ``b_indices`` (0-based) into b and pack the rest.

    Requires b in the critical interval. Primes before the last b-prime are
    placed by exhaustive search; the later ones greedily into a (capacity
    cut) or else c (capacity D - cut - b), which always succeeds for a
    well-supported d once the earlier primes fit.
    """
    b_idx = sorted(set(b_indices))
    if any(i < 0 or i >= inst.r for i in b_idx):
        return FactorizationFailure("b index out of range")
    ts = inst.prime_exponents
    try:
        v, u = critical_interval(inst.level_exponent, inst.cfg)
    except ValueError as exc:
        return FactorizationFailure(str(exc))
    if not le(v, u):
        return FactorizationFailure("critical interval is empty")
    b = sum((ts[i] for i in b_idx), inst.zero())
    if not (le(v, b) and le(b, u)):
        return FactorizationFailure("b outside the critical interval")
    cap_a = inst.cut_exponent
    cap_c = inst.sift_exponent - inst.cut_exponent - b
    last = b_idx[-1] if b_idx else -1
    head = [i for i in range(last) if i not in b_idx]
    tail = list(range(last + 1, inst.r))
    for head_bins in itertools.product("ac", repeat=len(head)):
        assignment: list[Bin] = ["b"] * inst.r
        a = c = inst.zero()
        ok = True
        for i, bin_ in zip(head, head_bins):
            assignment[i] = bin_
            if bin_ == "a":
                a += ts[i]
                ok &= le(a, cap_a)
            else:
                c += ts[i]
                ok &= le(c, cap_c)
        if not ok:
            continue
        packed = _pack_tail(ts, tail, assignment, a, c, cap_a, cap_c)
        if packed is None:
            continue
        res = _verify(inst, packed)
        if res:
            return res
    return FactorizationFailure("remaining primes do not pack into a and c")


def _pack_tail(ts, tail, assignment, a, c, cap_a, cap_c):
    assignment = list(assignment)
    for j in tail:
        if le(a + ts[j], cap_a):
            assignment[j] = "a"
            a += ts[j]
        elif le(c + ts[j], cap_c):
            assignment[j] = "c"
            c += ts[j]
        else:
            return None
    return assignment


# -- greedy -----------------------------------------------------------------------


@dataclass
class GreedyTrace:
    """Bin exponents (d1, d2, d3) after each greedy step, plus the capacities."""

    capacities: tuple[Real, Real, Real] = (0, 0, 0)
    steps: list[tuple[int, int, tuple[Real, Real, Real]]] = field(default_factory=list)
    terminal_index: int | None = None


def greedy_preconditions(inst: FactorizationInstance) -> list[str]:
    """Unmet hypotheses of the greedy packing (empty when it applies)."""
    problems = []
    cfg = inst.cfg
    th, al = cfg.theta, cfg.alpha
    level = inst.level_exponent
    ts = inst.prime_exponents
    if inst.r < 3:
        return ["needs at least three primes"]
    if not lt(level, (5 - al * th) / 8):
        problems.append("level must be below (5 - alpha*theta)/8")
        return problems
    if not le(Fraction(1, 2), level):
        problems.append("level must be at least 1/2")
        return problems
    if not is_well_support(inst):
        problems.append("d is not in the well-factorable support")
    v, u = critical_interval(level, cfg)
    if not le(ts[2], u - v):
        problems.append("p_3 exceeds the width of the critical interval")
    alt1 = le(2 * ts[1], 1 - level) and le(ts[0], v)
    alt2 = le(2 * ts[0], 1 - level) and le(ts[1], v)
    if not (alt1 or alt2):
        problems.append("neither (p_1 <= x^v, p_2^2 <= x^(1-level)) nor the swapped pair holds")
    return problems


def greedy_factorize(inst: FactorizationInstance, trace: GreedyTrace | None = None):
    """Greedy packing into bins of sizes (A, D^2/x, x^(1-2 delta)/(DA)).

    p_1 and p_2 are placed by trying every bin pair; from p_3 on each prime
    goes to the first of bins 1, 2, 3 with room. If some p_j fits nowhere,
    b = d_2 p_j lands in the critical interval and the rest is packed into
    a (starting from d_1) and c (starting from d_3) as in the criterion.
    Raises PreconditionError when the hypotheses fail.
    """
    problems = greedy_preconditions(inst)
    if problems:
        raise PreconditionError("; ".join(problems))
    ts = inst.prime_exponents
    D = inst.sift_exponent
    de = inst.cfg.delta
    caps = (inst.cut_exponent, 2 * D - 1, 1 - 2 * de - D - inst.cut_exponent)
    v, u = critical_interval(inst.level_exponent, inst.cfg)
    last_reason = "no placement of p_1, p_2 fits the bins"
    for first_two in itertools.product(range(3), repeat=2):
        local = GreedyTrace(capacities=caps)
        bins = [inst.zero()] * 3
        members: list[list[int]] = [[], [], []]
        ok = True
        for j, k in enumerate(first_two):
            bins[k] += ts[j]
            members[k].append(j)
            ok &= le(bins[k], caps[k])
            local.steps.append((j, k, tuple(bins)))
        if not ok:
            continue
        terminal = None
        for j in range(2, inst.r):
            for k in range(3):
                if le(bins[k] + ts[j], caps[k]):
                    bins[k] += ts[j]
                    members[k].append(j)
                    local.steps.append((j, k, tuple(bins)))
                    break
            else:
                terminal = j
                break
        assignment: list[Bin] = ["a"] * inst.r
        for k, bin_ in enumerate("abc"):
            for j in members[k]:
                assignment[j] = bin_
        if terminal is not None:
            local.terminal_index = terminal
            b = bins[1] + ts[terminal]
            if not (le(v, b) and le(b, u)):
                last_reason = "terminal b outside the critical interval"
                continue
            assignment[terminal] = "b"
            cap_c = D - inst.cut_exponent - b
            packed = _pack_tail(ts, range(terminal + 1, inst.r), assignment,
                                bins[0], bins[2], caps[0], cap_c)
            if packed is None:
                last_reason = "tail after the terminal index does not pack"
                continue
            assignment = packed
        res = _verify(inst, assignment)
        if res:
            if trace is not None:
                trace.capacities = local.capacities
                trace.steps = local.steps
                trace.terminal_index = local.terminal_index
            return res
        last_reason = res.reason
    return FactorizationFailure(last_reason)


# -- case analysis ------------------------------------------------------------------


CaseTag = Literal["i:p1", "i:p2", "i:p1p2", "i:p1p2p3", "ii:p1p3", "iii:p2p3", "iv:greedy"]


def factorize_well(inst: FactorizationInstance, fallback: bool = True):
    """Try the four sufficient cases in order; return (factorization, case tag).

    The constraints on (a, b, c) do not involve the level, which only
    enters the sufficient criterion through the critical interval. So when
    no case applies at the requested level, the cases are retried at the
    guaranteed level for these primes (if higher and below 5/8), where d is
    still well supported; such tags carry the suffix "@raised".

    The cases can miss instances with a large cut, where the bound
    c <= D - cut - b goes negative although putting p_1 into a works. With
    ``fallback`` the exhaustive search then runs (tag "search").
    Returns FactorizationFailure when nothing applies, which is legal when
    the level exceeds the guaranteed threshold.
    """
    if not is_well_support(inst):
        return FactorizationFailure("d is not in the well-factorable support")
    if not (le(Fraction(1, 2), inst.level_exponent) and inst.level_exponent < Fraction(5, 8)):
        return FactorizationFailure("level must lie in [1/2, 5/8)")
    if inst.r == 0:
        return TripleFactorization(inst.zero(), inst.zero(), inst.zero(), ()), "i:empty"
    res = _factorize_cases(inst)
    if res:
        return res
    raised = guaranteed_level(inst.prime_exponents, inst.cfg) - (0 if inst.exact else 1e-13)
    if raised > inst.level_exponent and raised < Fraction(5, 8):
        again = _factorize_cases(replace(inst, level_exponent=raised))
        if again:
            f, tag = again
            return f, tag + "@raised"
    if fallback and inst.r <= MAX_BRUTE_FORCE:
        found = brute_force_factorize(inst)
        if found:
            return found, "search"
    return res


def _factorize_cases(inst: FactorizationInstance):
    ts = inst.prime_exponents
    v, u = critical_interval(inst.level_exponent, inst.cfg)
    if not le(ts[0], u):
        return FactorizationFailure("largest prime exceeds x^u")
    D = inst.sift_exponent
    reasons = []
    for tag, idx in (("i:p1", (0,)), ("i:p2", (1,)), ("i:p1p2", (0, 1)), ("i:p1p2p3", (0, 1, 2))):
        if max(idx) < inst.r:
            res = factor_by_criterion(inst, idx)
            if res:
                return res, tag
            reasons.append(f"{tag}: {res.reason}")
    if inst.r >= 3:
        if le(2 * ts[1], D - ts[0] - ts[2]):
            res = factor_by_criterion(inst, (0, 2))
            if res:
                return res, "ii:p1p3"
            reasons.append(f"ii: {res.reason}")
        if le(2 * ts[0], D - ts[1] - ts[2]):
            res = factor_by_criterion(inst, (1, 2))
            if res:
                return res, "iii:p2p3"
            reasons.append(f"iii: {res.reason}")
        try:
            res = greedy_factorize(inst)
        except PreconditionError as exc:
            reasons.append(f"iv: {exc}")
        else:
            if res:
                return res, "iv:greedy"
            reasons.append(f"iv: {res.reason}")
    return FactorizationFailure("no case applies (" + " | ".join(reasons) + ")")


def guaranteed_level(ts: Sequence[Real], cfg: ExponentConfig = ExponentConfig()):
    """Level up to which factorize_well must succeed for primes x^t_i."""
    if not ts:
        return Fraction(5, 8)
    best = level_theta_t(ts[0], cfg)
    if len(ts) >= 3 and le(ts[0], balance_point(cfg)):
        best = max(best, level_theta_t123(ts[0], ts[1], ts[2], cfg))
    return best


# -- brute force ------------------------------------------------------------------



def brute_force_factorize(inst: FactorizationInstance):
    """Search all 3^r assignments (depth first, pruned) for a valid one with a <= cut.

    Every left-hand side is increasing in a, b and c (b enters the third
    with coefficient 5 - 2 theta > 0), so a partial assignment that already
    violates a constraint is abandoned.
    """
    if inst.r > MAX_BRUTE_FORCE:
        raise InstanceTooLarge(f"brute force supports at most {MAX_BRUTE_FORCE} primes")
    ts = inst.prime_exponents
    zero = inst.zero()
    if inst.r == 0:
        return TripleFactorization(zero, zero, zero, ())
    total = sum(ts, zero)
    th, al, de = inst.cfg.theta, inst.cfg.alpha, inst.cfg.delta
    A = inst.cut_exponent

    def feasible(a, b, c) -> bool:
        base = A + a + 5 * b + 2 * c
        return (le(a, A) and le(2 * A + b + 2 * c, 1 - 3 * de)
                and le(al * th + base, 2 - 3 * de)
                and le(2 * th * (A + c - b) + base, 2 - 2 * de))

    assignment: list[Bin] = ["a"] * inst.r

    def rec(i, a, b, c):
        if not feasible(a, b, c):
            return None
        if i == inst.r:
            return list(assignment)
        t = ts[i]
        for bin_, (na, nb, nc) in (("b", (a, b + t, c)), ("a", (a + t, b, c)), ("c", (a, b, c + t))):
            assignment[i] = bin_
            found = rec(i + 1, na, nb, nc)
            if found is not None:
                return found
        return None

    found = rec(0, zero, zero, zero)
    if found is None:
        return FactorizationFailure("no assignment satisfies the constraints")
    f = TripleFactorization.from_assignment(ts, found)
    assert le(f.a_exp + f.b_exp + f.c_exp, total)
    return f


# -- random instances -------------------------------------------------------------


def random_instance(rng: np.random.Generator, cfg: ExponentConfig = ExponentConfig(),
                    max_primes: int = 12, at_threshold: float = 0.5,
                    gap: float = 1e-6) -> FactorizationInstance:
    """Random instance satisfying the guarantee's hypotheses.

    Prime exponents decrease geometrically with random ratios; the level is
    the guaranteed threshold minus ``gap`` with probability ``at_threshold``,
    and uniform between 1/2 and the threshold otherwise. Draws that leave
    the well-factorable support, put t_1 above u, or push the modulus past
    x are rejected.
    """
    fcfg = cfg.as_float()
    delta = float(fcfg.delta)
    while True:
        r = int(rng.integers(1, max_primes + 1))
        ts = [float(rng.uniform(0.005, 0.32))]
        for _ in range(r - 1):
            ts.append(ts[-1] * float(rng.uniform(0.15, 1.0)))
        threshold = float(guaranteed_level(ts, fcfg))
        top = min(threshold - gap, 0.625 - 1e-9)
        if top < 0.5:
            continue
        level = top if rng.random() < at_threshold else float(rng.uniform(0.5, top))
        cut = float(rng.uniform(delta, 1 / 3 - delta / 2))
        if sum(ts) > 1:
            continue
        inst = FactorizationInstance(tuple(ts), level, cut, fcfg)
        if not is_well_support(inst):
            continue
        v, u = critical_interval(level, fcfg)
        if not le(ts[0], u):
            continue
        return inst
