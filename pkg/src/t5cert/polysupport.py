"""Support data for the polyconvex energy at the five configuration points.

A candidate configuration lies on the gradient graph of a strongly
polyconvex energy ``(eps/2)|A|^2 + G(A, det A)`` exactly when the convex
component G can interpolate prescribed values c_j, gradients Q_j and
det-slopes d_j at the points ``(A_j, det A_j)``. This module computes and
verifies the exact inequality tables governing that interpolation, the
admissible range of the quadratic margin eps, and the prescribed jet
itself.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction

from .errors import (DuplicatePoints, EpsilonTooLarge, Ineq1Failed,
                     Ineq3Failed)
from .ratlin import RatMatrix, frobenius_inner, rat, rat_str
from .tconfig import J, TauConfiguration


class _UnboundedType:
    """Sentinel: no pair constrains the quadratic margin."""

    def __repr__(self):
        return "Unbounded"


UNBOUNDED = _UnboundedType()


def cofactor(a: RatMatrix) -> RatMatrix:
    """Exact 2x2 cofactor matrix; satisfies <cof A, A> = 2 det A."""
    if (a.rows, a.cols) != (2, 2):
        raise ValueError("cofactor expects a 2x2 matrix")
    return RatMatrix([[a[1, 1], -a[1, 0]], [-a[0, 1], a[0, 0]]])


def _det2(m: RatMatrix) -> Fraction:
    return m[0, 0] * m[1, 1] - m[0, 1] * m[1, 0]


def _split_points(config) -> tuple:
    """Accept a TauConfiguration or a sequence of 4x2 points; return (A, B)."""
    if isinstance(config, TauConfiguration):
        points = config.points()
    else:
        points = tuple(config)
    uppers, lowers = [], []
    for x in points:
        if (x.rows, x.cols) != (4, 2):
            raise ValueError("configuration points must be 4x2 matrices")
        uppers.append(x.submatrix(0, 2, 0, 2))
        lowers.append(x.submatrix(2, 4, 0, 2))
    return tuple(uppers), tuple(lowers)


@dataclass(frozen=True)
class SlackTable:
    """Exact slacks of the strict pairwise inequality, lexicographic order."""

    entries: tuple  # of ((i, j), Fraction), 1-based ordered pairs

    @property
    def all_negative(self) -> bool:
        return all(s < 0 for _, s in self.entries)

    def get(self, i: int, j: int) -> Fraction:
        for (a, b), s in self.entries:
            if (a, b) == (i, j):
                return s
        raise KeyError((i, j))

    def values(self) -> tuple:
        return tuple(s for _, s in self.entries)


def check_ineq3(config, c, d) -> SlackTable:
    """Exact slack c_i - c_j + d_i det(A_i - A_j) + <A_i - A_j, B_i J>
    for every ordered pair; the condition passes iff all slacks are < 0."""
    uppers, lowers = _split_points(config)
    n = len(uppers)
    c = [rat(v) for v in c]
    d = [rat(v) for v in d]
    if len(c) != n or len(d) != n:
        raise ValueError("need one c and one d per configuration point")
    entries = []
    for i in range(n):
        bij = lowers[i] @ J
        for j in range(n):
            if i == j:
                continue
            diff = uppers[i] - uppers[j]
            slack = c[i] - c[j] + d[i] * _det2(diff) + frobenius_inner(diff, bij)
            entries.append(((i + 1, j + 1), slack))
    return SlackTable(entries=tuple(entries))


def _alignment_terms(uppers) -> dict:
    """g_ij = <A_i, A_i - A_j>, the coefficient of eps in the margin check."""
    out = {}
    n = len(uppers)
    for i in range(n):
        for j in range(n):
            if i != j:
                out[(i + 1, j + 1)] = frobenius_inner(uppers[i],
                                                      uppers[i] - uppers[j])
    return out


def max_epsilon(config, c, d):
    """Exact supremum of quadratic margins compatible with the slack table.

    Every eps below the returned value keeps all margined slacks strictly
    negative; at the returned value at least one pair becomes tight.
    Returns UNBOUNDED when no pair has positive alignment g_ij.
    """
    table = check_ineq3(config, c, d)
    if not table.all_negative:
        raise Ineq3Failed("strict inequality table has a non-negative slack")
    uppers, _ = _split_points(config)
    g = _alignment_terms(uppers)
    candidates = [-s / g[key] for key, s in table.entries if g[key] > 0]
    if not candidates:
        return UNBOUNDED
    return min(candidates)


@dataclass(frozen=True)
class SupportData:
    """The prescribed jet of the convex component at the anchor points."""

    c: tuple
    d: tuple
    epsilon: Fraction
    qgrad: tuple  # 2x2 RatMatrix per point

    def to_dict(self) -> dict:
        return {
            "c": [rat_str(v) for v in self.c],
            "d": [rat_str(v) for v in self.d],
            "epsilon": rat_str(self.epsilon),
            "qgrad": [[[rat_str(x) for x in row] for row in m.tolist()]
                      for m in self.qgrad],
        }

    @classmethod
    def from_dict(cls, payload: dict) -> "SupportData":
        return cls(c=tuple(rat(v) for v in payload["c"]),
                   d=tuple(rat(v) for v in payload["d"]),
                   epsilon=rat(payload["epsilon"]),
                   qgrad=tuple(RatMatrix(m) for m in payload["qgrad"]))


def support_jet(config, c, d, epsilon) -> SupportData:
    """Prescribed jet Q_j = -eps A_j - B_j J - d_j cof A_j, fully verified.

    Requires 0 < eps strictly below the bound of :func:`max_epsilon` (at the
    bound a margined slack becomes tight and EpsilonTooLarge is raised).
    The gradient identity eps A_j + Q_j + d_j cof A_j + B_j J = 0 holds by
    construction and is re-checked; the convex-interpolation inequality is
    re-verified from (Q, d, c) alone and failures raise Ineq1Failed.
    """
    epsilon = rat(epsilon)
    if epsilon <= 0:
        raise EpsilonTooLarge("the quadratic margin must be positive")
    uppers, lowers = _split_points(config)
    n = len(uppers)
    c = [rat(v) for v in c]
    d = [rat(v) for v in d]
    table = check_ineq3(config, c, d)
    g = _alignment_terms(uppers)
    for key, slack in table.entries:
        if slack + epsilon * g[key] >= 0:
            raise EpsilonTooLarge(
                f"margined slack for pair {key} is {rat_str(slack + epsilon * g[key])} >= 0")

    qgrad = tuple(-epsilon * uppers[i] - lowers[i] @ J - d[i] * cofactor(uppers[i])
                  for i in range(n))
    for i in range(n):
        residual = epsilon * uppers[i] + qgrad[i] + d[i] * cofactor(uppers[i]) + lowers[i] @ J
        assert residual == RatMatrix.zeros(2, 2)

    # Convex interpolation from the jet data alone.
    dets = [_det2(a) for a in uppers]
    for i in range(n):
        for j in range(n):
            if i == j:
                continue
            rhs = frobenius_inner(qgrad[i], uppers[j] - uppers[i]) \
                + d[i] * (dets[j] - dets[i])
            if not c[j] - c[i] > rhs:
                raise Ineq1Failed(
                    f"interpolation inequality fails for pair ({i + 1}, {j + 1})")
    return SupportData(c=tuple(c), d=tuple(d), epsilon=epsilon, qgrad=qgrad)


def min_separation(config) -> Fraction:
    """Smallest squared Frobenius distance between distinct upper blocks.

    Squared distance keeps the value rational; positivity is what matters.
    """
    uppers, _ = _split_points(config)
    n = len(uppers)
    if n < 2:
        raise ValueError("need at least two points")
    best = None
    for i in range(n):
        for j in range(i + 1, n):
            diff = uppers[i] - uppers[j]
            dist = frobenius_inner(diff, diff)
            if dist == 0:
                raise DuplicatePoints(f"points {i + 1} and {j + 1} share an upper block")
            if best is None or dist < best:
                best = dist
    return best


@dataclass(frozen=True)
class PolyconvexGerm:
    """A configuration presented as gradient-graph data (A_j, B_j) plus jet."""

    points: tuple  # of (A, B) pairs, 2x2 RatMatrix each
    support: SupportData
    hessians: tuple | None = None

    def lifted_points(self) -> tuple:
        from .tconfig import special_lift
        return tuple(special_lift(a, b) for a, b in self.points)


def germ_from_configuration(config: TauConfiguration, support: SupportData,
                            hessians=None) -> PolyconvexGerm:
    uppers, lowers = _split_points(config)
    pairs = tuple((a, b @ J_NEG) for a, b in zip(uppers, lowers))
    return PolyconvexGerm(points=pairs, support=support, hessians=hessians)


# B recovers from the lower block via right-multiplication by J^{-1} = -J.
J_NEG = RatMatrix([[0, 1], [-1, 0]])


def _sqrt_brackets(value: Fraction, digits: int) -> tuple:
    """Rational lower/upper bounds of sqrt(value) with 10^-digits spread."""
    scale = 10 ** digits
    lo = math.isqrt(value.numerator * scale * scale // value.denominator)
    return Fraction(lo, scale), Fraction(lo + 2, scale)


def _sum_sqrt_lt(values, bound: Fraction) -> bool:
    """Exactly decide sum_j sqrt(values_j) < bound for rational inputs.

    A sum of square roots of nonnegative rationals is rational only when
    every root is, so interval refinement terminates whenever the exact
    comparison is not decided by the all-rational case.
    """
    values = [rat(v) for v in values]
    if any(v < 0 for v in values):
        raise ValueError("norms cannot be negative")
    roots = []
    irrational = False
    for v in values:
        m = v.numerator * v.denominator
        r = math.isqrt(m)
        if r * r == m:
            roots.append(Fraction(r, v.denominator))
        else:
            irrational = True
    if not irrational:
        return sum(roots, Fraction(0)) < bound
    digits = 12
    while True:
        lo = Fraction(0)
        hi = Fraction(0)
        for v in values:
            l, h = _sqrt_brackets(v, digits)
            lo += l
            hi += h
        if hi < bound:
            return True
        if lo >= bound:
            return False
        digits *= 2


@dataclass(frozen=True)
class PerturbationBudget:
    """Report of the smallness condition on the Hessian perturbations.

    Neither the cut-off constant nor the unperturbed Hessians are derivable
    inside the toolkit, so both are inputs; the verdict is recorded, not
    asserted. Norms are Frobenius.
    """

    epsilon: Fraction
    cutoff_constant: Fraction
    bound: Fraction
    tilde_norms_squared: tuple
    satisfied: bool


def budget_report(hessians, baseline_hessians, epsilon,
                  cutoff_constant) -> PerturbationBudget:
    """Check sum_j |H_j - H0_j| < epsilon / (2 C) with user-supplied H0, C."""
    epsilon = rat(epsilon)
    cutoff_constant = rat(cutoff_constant)
    if cutoff_constant <= 0:
        raise ValueError("cut-off constant must be positive")
    bound = epsilon / (2 * cutoff_constant)
    norms_sq = []
    for h, h0 in zip(hessians, baseline_hessians):
        diff = h - h0
        norms_sq.append(frobenius_inner(diff, diff))
    return PerturbationBudget(epsilon=epsilon, cutoff_constant=cutoff_constant,
                              bound=bound, tilde_norms_squared=tuple(norms_sq),
                              satisfied=_sum_sqrt_lt(norms_sq, bound))
