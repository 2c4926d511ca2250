"""Strict-feasibility search for the pairwise support inequalities.

With the first two direction coordinates pinned to zero, the base vertex at
the origin and ``c_1 = 0``, the strict inequality table

    c_i - c_j + d_i det(A_i - A_j) + <A_i - A_j, B_i J>  <  0   (i != j)

is homogeneous and linear in the 13 remaining unknowns
``(c_2..c_5, d_1..d_5, q_4, q_5)``; the points ``A_i`` depend only on the 14
fixed scalars ``(y5, z3, z4, kappa_1..kappa_5, p_3, p_4, p_5)``. This module
builds the exact 20x13 coefficient matrix, decides strict feasibility of
``A x < 0`` by an exact phase-1 simplex on the normalized system
``A x <= -1``, and returns either a verified witness or a verified Farkas
certificate.
"""

from __future__ import annotations

import itertools
import logging
from dataclasses import dataclass
from fractions import Fraction

from . import tconfig
from .errors import DegenerateParameters
from .ratlin import RatMatrix, frobenius_inner, rat, rat_str
from .tconfig import J, ParameterVector

log = logging.getLogger(__name__)

COLUMN_LABELS = ("c2", "c3", "c4", "c5",
                 "d1", "d2", "d3", "d4", "d5",
                 "q41", "q42", "q51", "q52")

ROW_LABELS = tuple((i, j) for i in range(1, 6) for j in range(1, 6) if i != j)

PARAM_NAMES = ("y5", "z3", "z4",
               "kappa1", "kappa2", "kappa3", "kappa4", "kappa5",
               "p31", "p32", "p41", "p42", "p51", "p52")


@dataclass(frozen=True)
class FixedParameters:
    """The 14 scalars fixed before the linear program is posed."""

    y5: Fraction
    z3: Fraction
    z4: Fraction
    kappa: tuple
    p3: tuple
    p4: tuple
    p5: tuple

    def __post_init__(self):
        object.__setattr__(self, "y5", rat(self.y5))
        object.__setattr__(self, "z3", rat(self.z3))
        object.__setattr__(self, "z4", rat(self.z4))
        object.__setattr__(self, "kappa", tuple(rat(k) for k in self.kappa))
        for name in ("p3", "p4", "p5"):
            pair = getattr(self, name)
            object.__setattr__(self, name, (rat(pair[0]), rat(pair[1])))

    @classmethod
    def baseline(cls) -> "FixedParameters":
        return cls(y5=2, z3=1, z4=4, kappa=(2, 3, 4, 3, 2),
                   p3=(1, 0), p4=(1, 1), p5=(0, 1))

    @classmethod
    def from_scalars(cls, scalars) -> "FixedParameters":
        scalars = list(scalars)
        if len(scalars) != 14:
            raise ValueError(f"expected 14 scalars, got {len(scalars)}")
        return cls(y5=scalars[0], z3=scalars[1], z4=scalars[2],
                   kappa=tuple(scalars[3:8]),
                   p3=(scalars[8], scalars[9]), p4=(scalars[10], scalars[11]),
                   p5=(scalars[12], scalars[13]))

    def scalars(self) -> tuple:
        return (self.y5, self.z3, self.z4, *self.kappa,
                *self.p3, *self.p4, *self.p5)

    def to_parameter_vector(self, q4=(0, 0), q5=(0, 0)) -> ParameterVector:
        return ParameterVector(z1=0, y2=0, z3=self.z3, z4=self.z4, y5=self.y5,
                               p3=self.p3, p4=self.p4, p5=self.p5,
                               q4=q4, q5=q5, kappa=self.kappa)


@dataclass(frozen=True)
class InequalitySystem:
    """Exact 20x13 coefficient matrix of the strict inequality table."""

    matrix: RatMatrix
    row_labels: tuple
    column_labels: tuple
    params: FixedParameters

    def evaluate(self, x) -> tuple:
        """The 20 row values A x for a candidate 13-vector."""
        x = [rat(v) for v in x]
        if len(x) != self.matrix.cols:
            raise ValueError(f"expected {self.matrix.cols} unknowns, got {len(x)}")
        return tuple(
            sum((self.matrix[r, c] * x[c] for c in range(self.matrix.cols)),
                Fraction(0))
            for r in range(self.matrix.rows))


@dataclass(frozen=True)
class FeasibleSolution:
    """A verified strict witness: every row value is negative."""

    x: tuple
    margin: Fraction  # max over rows of A x, < 0


@dataclass(frozen=True)
class Infeasible:
    """A verified Farkas certificate: y >= 0, y != 0, y^T A = 0."""

    farkas: tuple


def _upper_blocks(params: FixedParameters) -> tuple:
    pv = params.to_parameter_vector()
    return tuple(x.submatrix(0, 2, 0, 2)
                 for x in tconfig.assemble_X(1, pv))


def _lower_blocks(params: FixedParameters, q4, q5) -> tuple:
    pv = params.to_parameter_vector(q4=q4, q5=q5)
    return tuple(x.submatrix(2, 4, 0, 2)
                 for x in tconfig.assemble_X(1, pv))


def _det2(m: RatMatrix) -> Fraction:
    return m[0, 0] * m[1, 1] - m[0, 1] * m[1, 0]


def build_system(params: FixedParameters) -> InequalitySystem:
    """Exact coefficients of the 20 strict inequalities in the 13 unknowns.

    Row (i, j) carries: +1 at c_i and -1 at c_j (c_1 is pinned to zero and
    has no column), det(A_i - A_j) at d_i, and the linear coefficients of
    ``<A_i - A_j, B_i J>`` over the four q-coordinates.
    """
    if params.z3 == 0:
        raise DegenerateParameters("z3")
    uppers = _upper_blocks(params)

    # B_i is linear in (q41, q42, q51, q52) with no constant term; extract
    # columns by evaluating at the four unit settings.
    zero_pair = (Fraction(0), Fraction(0))
    unit_settings = (((1, 0), zero_pair), ((0, 1), zero_pair),
                     (zero_pair, (1, 0)), (zero_pair, (0, 1)))
    lower_columns = [_lower_blocks(params, q4, q5) for q4, q5 in unit_settings]

    rows = []
    for (i, j) in ROW_LABELS:
        coeffs = [Fraction(0)] * 13
        if i != 1:
            coeffs[i - 2] += 1
        if j != 1:
            coeffs[j - 2] -= 1
        diff = uppers[i - 1] - uppers[j - 1]
        coeffs[4 + (i - 1)] = _det2(diff)
        for k in range(4):
            coeffs[9 + k] = frobenius_inner(diff, lower_columns[k][i - 1] @ J)
        rows.append(coeffs)
    return InequalitySystem(matrix=RatMatrix(rows), row_labels=ROW_LABELS,
                            column_labels=COLUMN_LABELS, params=params)


def baseline_witness() -> tuple:
    """The reference solution vector for the baseline parameter point."""
    from ._golden import C_CONSTANTS, D_CONSTANTS
    base = ParameterVector.baseline()
    return (*C_CONSTANTS[1:], *D_CONSTANTS, *base.q4, *base.q5)


def solve_strict(system: InequalitySystem):
    """Decide strict feasibility of ``A x < 0`` exactly.

    By homogeneity this is equivalent to feasibility of ``A x <= -1``,
    which a phase-1 simplex (Bland pivoting, exact arithmetic) decides.
    Returns a :class:`FeasibleSolution` whose witness is re-verified row by
    row, or an :class:`Infeasible` whose Farkas multipliers are re-verified
    to satisfy ``y >= 0``, ``y != 0``, ``y^T A = 0``.
    """
    a = system.matrix
    m, n = a.rows, a.cols
    # Equality form -A u + A v - s + w = 1 over u, v, s, w >= 0, where
    # x = u - v and w are the phase-1 artificials.
    ncols = 2 * n + 2 * m
    art0 = 2 * n + m
    tableau = []
    for i in range(m):
        row = [Fraction(0)] * (ncols + 1)
        for jc in range(n):
            row[jc] = -a[i, jc]
            row[n + jc] = a[i, jc]
        row[2 * n + i] = Fraction(-1)
        row[art0 + i] = Fraction(1)
        row[ncols] = Fraction(1)
        tableau.append(row)
    basis = list(range(art0, art0 + m))
    # z_j - c_j row for the phase-1 objective (minimize the artificial sum).
    obj = [Fraction(0)] * (ncols + 1)
    for i in range(m):
        for jc in range(ncols + 1):
            obj[jc] += tableau[i][jc]
    for jc in range(art0, art0 + m):
        obj[jc] -= 1

    while True:
        enter = next((jc for jc in range(ncols) if obj[jc] > 0), None)
        if enter is None:
            break
        leave, best = None, None
        for i in range(m):
            t = tableau[i][enter]
            if t > 0:
                ratio = tableau[i][ncols] / t
                if best is None or ratio < best or (ratio == best and basis[i] < basis[leave]):
                    best, leave = ratio, i
        if leave is None:
            raise RuntimeError("phase-1 objective unbounded; tableau corrupt")
        pivot = tableau[leave][enter]
        tableau[leave] = [v / pivot for v in tableau[leave]]
        for i in range(m):
            if i != leave and tableau[i][enter] != 0:
                f = tableau[i][enter]
                tableau[i] = [v - f * w for v, w in zip(tableau[i], tableau[leave])]
        if obj[enter] != 0:
            f = obj[enter]
            obj = [v - f * w for v, w in zip(obj, tableau[leave])]
        basis[leave] = enter

    if obj[ncols] > 0:
        # Infeasible: phase-1 duals are the Farkas multipliers. The
        # artificial columns started as the identity, so the dual vector is
        # read off the objective row under them.
        y = [obj[art0 + k] + 1 for k in range(m)]
        assert all(v >= 0 for v in y) and any(v != 0 for v in y)
        for jc in range(n):
            s = sum((y[i] * a[i, jc] for i in range(m)), Fraction(0))
            assert s == 0, "Farkas certificate failed exact verification"
        return Infeasible(farkas=tuple(y))

    x = [Fraction(0)] * n
    for i, b in enumerate(basis):
        if b < n:
            x[b] += tableau[i][ncols]
        elif b < 2 * n:
            x[b - n] -= tableau[i][ncols]
    values = system.evaluate(x)
    margin = max(values)
    assert margin < 0, "feasible witness failed exact verification"
    return FeasibleSolution(x=tuple(x), margin=margin)


@dataclass(frozen=True)
class GridHit:
    params: FixedParameters
    solution: FeasibleSolution


def _expand_range(name: str, spec) -> list:
    """A range spec is a single value or an inclusive (start, stop, step)."""
    if isinstance(spec, (tuple, list)):
        start, stop, step = (rat(v) for v in spec)
        if step <= 0:
            raise ValueError(f"{name}: step must be positive")
        out = []
        v = start
        while v <= stop:
            out.append(v)
            v += step
        if not out:
            raise ValueError(f"{name}: empty range")
        return out
    return [rat(spec)]


def grid_search(ranges: dict, allow_kappa_le_1: bool = False) -> list:
    """Enumerate a finite parameter grid and collect all strict-feasible hits.

    ``ranges`` maps each of the 14 scalar names to a value or an inclusive
    (start, stop, step) triple. Degenerate points (z3 = 0) and, unless
    allowed, points with some kappa <= 1 are skipped and logged. Every
    feasible point is returned, in grid order.
    """
    missing = [n for n in PARAM_NAMES if n not in ranges]
    if missing:
        raise ValueError(f"missing grid parameters: {', '.join(missing)}")
    extra = [k for k in ranges if k not in PARAM_NAMES]
    if extra:
        raise ValueError(f"unknown grid parameters: {', '.join(sorted(extra))}")
    axes = [_expand_range(n, ranges[n]) for n in PARAM_NAMES]
    hits = []
    for point in itertools.product(*axes):
        params = FixedParameters.from_scalars(point)
        if params.z3 == 0:
            log.info("skipping degenerate grid point (z3 = 0): %s",
                     [rat_str(v) for v in point])
            continue
        if not allow_kappa_le_1 and any(k <= 1 for k in params.kappa):
            log.info("skipping grid point with kappa <= 1: %s",
                     [rat_str(v) for v in point])
            continue
        solution = solve_strict(build_system(params))
        if isinstance(solution, FeasibleSolution):
            hits.append(GridHit(params=params, solution=solution))
    return hits
