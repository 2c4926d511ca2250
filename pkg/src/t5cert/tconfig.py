"""Configuration domain: parameters, rank-one increments, points, vertices.

A configuration is a closed 5-cycle of rank-one increments
``C_j = (p_j; (a_j . delta) q_j) (x) a_j`` in the space of 4x2 matrices,
together with ray weights ``kappa_j`` placing the outer points
``X_j = P_j + kappa_j C_j`` over the pentagon vertices ``P_j``. The 20 free
coordinates are collected in :class:`ParameterVector`; the remaining vectors
``p_1, p_2, q_1, q_2, q_3`` are determined by the two closure identities

    sum_j p_j (x) a_j = 0,      sum_j q_j (x) a_j (x) a_j = 0

via exact closed forms (:func:`derive_dependent`).

The formula core in this module is generic over the scalar type: it is
evaluated with ``Fraction`` for certificates, with dual numbers for exact
Jacobians, and with ``float`` for the Newton continuation.
"""

from __future__ import annotations

import dataclasses
from dataclasses import dataclass
from fractions import Fraction

from .errors import DegenerateParameters
from .ratlin import RatMatrix, rank, rat, rat_str

#: Fixed weight vector pairing the two halves of the increment direction.
#: It is never perturbed; the 20-dimensional parameter contract assumes it.
DELTA = (Fraction(1), Fraction(1))

#: Quarter-turn matrix used to pass between gradient pairs and lower blocks.
J = RatMatrix([[0, -1], [1, 0]])
J_INV = RatMatrix([[0, 1], [-1, 0]])

_COORD_NAMES = (
    "z1", "y2", "z3", "z4", "y5",
    "p31", "p32", "p41", "p42", "p51", "p52",
    "q41", "q42", "q51", "q52",
    "kappa1", "kappa2", "kappa3", "kappa4", "kappa5",
)


@dataclass(frozen=True)
class ParameterVector:
    """The 20 free coordinates of a configuration.

    Direction coordinates enter as ``a1 = (-1, z1)``, ``a2 = (y2, -1)``,
    ``a3 = (1, z3)``, ``a4 = (1, z4)``, ``a5 = (y5, 1)``.
    """

    z1: Fraction
    y2: Fraction
    z3: Fraction
    z4: Fraction
    y5: Fraction
    p3: tuple
    p4: tuple
    p5: tuple
    q4: tuple
    q5: tuple
    kappa: tuple

    def __post_init__(self):
        for name in ("z1", "y2", "z3", "z4", "y5"):
            object.__setattr__(self, name, rat(getattr(self, name)))
        for name in ("p3", "p4", "p5", "q4", "q5"):
            pair = getattr(self, name)
            if len(pair) != 2:
                raise ValueError(f"{name} must be a pair")
            object.__setattr__(self, name, (rat(pair[0]), rat(pair[1])))
        if len(self.kappa) != 5:
            raise ValueError("kappa must have five entries")
        object.__setattr__(self, "kappa", tuple(rat(k) for k in self.kappa))

    @classmethod
    def baseline(cls) -> "ParameterVector":
        """The reference parameter point of the built-in configuration."""
        return cls(z1=0, y2=0, z3=1, z4=4, y5=2,
                   p3=(1, 0), p4=(1, 1), p5=(0, 1),
                   q4=(-19, 0), q5=(-63, -82),
                   kappa=(2, 3, 4, 3, 2))

    def coords(self) -> tuple:
        """The 20 scalars in the fixed documented order."""
        return (self.z1, self.y2, self.z3, self.z4, self.y5,
                *self.p3, *self.p4, *self.p5, *self.q4, *self.q5,
                *self.kappa)

    @classmethod
    def from_coords(cls, coords) -> "ParameterVector":
        coords = list(coords)
        if len(coords) != 20:
            raise ValueError(f"expected 20 coordinates, got {len(coords)}")
        return cls(z1=coords[0], y2=coords[1], z3=coords[2], z4=coords[3],
                   y5=coords[4],
                   p3=(coords[5], coords[6]), p4=(coords[7], coords[8]),
                   p5=(coords[9], coords[10]),
                   q4=(coords[11], coords[12]), q5=(coords[13], coords[14]),
                   kappa=tuple(coords[15:20]))

    def replace(self, **kw) -> "ParameterVector":
        return dataclasses.replace(self, **kw)

    def to_strings(self) -> dict:
        return {name: rat_str(value)
                for name, value in zip(_COORD_NAMES, self.coords())}

    @classmethod
    def from_strings(cls, mapping: dict) -> "ParameterVector":
        missing = [n for n in _COORD_NAMES if n not in mapping]
        if missing:
            raise ValueError(f"missing parameter entries: {', '.join(missing)}")
        extra = [k for k in mapping if k not in _COORD_NAMES]
        if extra:
            raise ValueError(f"unknown parameter entries: {', '.join(sorted(extra))}")
        return cls.from_coords([rat(mapping[n]) for n in _COORD_NAMES])


# -- scalar-generic formula core ----------------------------------------------
#
# Pairs are 2-tuples, 4x2 matrices are 4-tuples of 2-tuples. The scalar type
# only needs +, -, *, / and comparison of the primal value with zero.

def _primal(x):
    return getattr(x, "val", x)


def _pair_add(*pairs):
    a = pairs[0]
    for b in pairs[1:]:
        a = (a[0] + b[0], a[1] + b[1])
    return a


def _pair_scale(s, p):
    return (s * p[0], s * p[1])


def _mat_add(a, b):
    return tuple(tuple(x + y for x, y in zip(ra, rb)) for ra, rb in zip(a, b))


def _mat_scale(s, a):
    return tuple(tuple(s * x for x in row) for row in a)


_ZERO_4X2 = ((0, 0),) * 4


def direction_vectors(z1, y2, z3, z4, y5) -> tuple:
    """The five increment directions as functions of the free coordinates."""
    return ((-1, z1), (y2, -1), (1, z3), (1, z4), (y5, 1))


def dependent_vectors(z1, y2, z3, z4, y5, p3, p4, p5, q4, q5) -> tuple:
    """Closed forms for (p1, p2, q1, q2, q3) enforcing both closure sums.

    Raises DegenerateParameters when one of the three structural
    denominators ``1 - y2*z1``, ``z1 + z3``, ``y2*z3 + 1`` vanishes.
    """
    d_p = 1 - y2 * z1
    d_q1 = z1 + z3
    d_q2 = y2 * z3 + 1
    if _primal(d_p) == 0:
        raise DegenerateParameters("1 - y2*z1")
    if _primal(d_q1) == 0:
        raise DegenerateParameters("z1 + z3")
    if _primal(d_q2) == 0:
        raise DegenerateParameters("y2*z3 + 1")

    p1 = _pair_scale(1 / d_p, _pair_add(
        _pair_scale(y2 * z3 + 1, p3),
        _pair_scale(y2 * z4 + 1, p4),
        _pair_scale(y2 + y5, p5)))
    p2 = _pair_scale(1 / d_p, _pair_add(
        _pair_scale(z1 + z3, p3),
        _pair_scale(z1 + z4, p4),
        _pair_scale(y5 * z1 + 1, p5)))

    m = y2 * z1 - 1
    q1 = _pair_scale(1 / (d_q1 * m), _pair_add(
        _pair_scale((y2 * z4 + 1) * (z3 - z4), q4),
        _pair_scale((y2 + y5) * (y5 * z3 - 1), q5)))
    q2 = _pair_scale(-1 / (m * d_q2), _pair_add(
        _pair_scale((z1 + z4) * (z3 - z4), q4),
        _pair_scale((y5 * z1 + 1) * (y5 * z3 - 1), q5)))
    q3 = _pair_scale(-1 / (d_q1 * d_q2), _pair_add(
        _pair_scale((z1 + z4) * (y2 * z4 + 1), q4),
        _pair_scale((y2 + y5) * (y5 * z1 + 1), q5)))
    return p1, p2, q1, q2, q3


def rank_one_tuples(alphas, pvecs, qvecs) -> tuple:
    """The five increments ``C_j`` as 4x2 tuples of scalars."""
    out = []
    for a, p, q in zip(alphas, pvecs, qvecs):
        w = a[0] * DELTA[0] + a[1] * DELTA[1]
        gamma = (p[0], p[1], w * q[0], w * q[1])
        out.append(tuple((g * a[0], g * a[1]) for g in gamma))
    return tuple(out)


def cycle_tuples(z1, y2, z3, z4, y5, p3, p4, p5, q4, q5) -> tuple:
    """Directions, all five p/q vectors, and the C_j tuples from free coords."""
    alphas = direction_vectors(z1, y2, z3, z4, y5)
    p1, p2, q1, q2, q3 = dependent_vectors(z1, y2, z3, z4, y5, p3, p4, p5, q4, q5)
    pvecs = (p1, p2, p3, p4, p5)
    qvecs = (q1, q2, q3, q4, q5)
    return alphas, pvecs, qvecs, rank_one_tuples(alphas, pvecs, qvecs)


def z_block_tuples(nu0: int, cmats, kappa) -> tuple:
    """The five ray offsets Z_j for the cycle starting at 0-based index nu0."""
    out = []
    for j0 in range(5):
        idx = (nu0 + j0) % 5
        m = _mat_scale(kappa[idx], cmats[idx])
        for k in range(j0):
            m = _mat_add(m, cmats[(nu0 + k) % 5])
        out.append(m)
    return tuple(out)


def vertex_offset_tuples(nu0: int, cmats) -> tuple:
    """Partial sums of C along the cycle: vertex j sits at Q + out[j]."""
    out = []
    acc = _ZERO_4X2
    for j0 in range(5):
        out.append(acc)
        acc = _mat_add(acc, cmats[(nu0 + j0) % 5])
    return tuple(out)


# -- exact typed API -----------------------------------------------------------

def _index0(idx: int, name: str = "index") -> int:
    if not 1 <= idx <= 5:
        raise ValueError(f"{name} must be in 1..5, got {idx}")
    return idx - 1


def derive_dependent(params: ParameterVector) -> tuple:
    """Exact (p1, p2, q1, q2, q3) for a parameter point."""
    return dependent_vectors(params.z1, params.y2, params.z3, params.z4,
                             params.y5, params.p3, params.p4, params.p5,
                             params.q4, params.q5)


def build_rank_one(params: ParameterVector) -> tuple:
    """The five rank-one increments C_1..C_5 as exact 4x2 matrices."""
    _, _, _, cmats = cycle_tuples(*_free_coords(params))
    return tuple(RatMatrix(c) for c in cmats)


def _free_coords(params: ParameterVector) -> tuple:
    return (params.z1, params.y2, params.z3, params.z4, params.y5,
            params.p3, params.p4, params.p5, params.q4, params.q5)


def assemble_X(nu: int, params: ParameterVector, base: RatMatrix | None = None) -> tuple:
    """The five points X_j = base + Z_j of the cycle starting at nu (1..5)."""
    nu0 = _index0(nu, "nu")
    base = RatMatrix.zeros(4, 2) if base is None else base
    _, _, _, cmats = cycle_tuples(*_free_coords(params))
    blocks = z_block_tuples(nu0, cmats, params.kappa)
    return tuple(base + RatMatrix(b) for b in blocks)


def vertices(nu: int, params: ParameterVector, base: RatMatrix | None = None) -> tuple:
    """The five pentagon vertices P_j of the cycle starting at nu (1..5)."""
    nu0 = _index0(nu, "nu")
    base = RatMatrix.zeros(4, 2) if base is None else base
    _, _, _, cmats = cycle_tuples(*_free_coords(params))
    offs = vertex_offset_tuples(nu0, cmats)
    return tuple(base + RatMatrix(o) for o in offs)


@dataclass(frozen=True)
class TauConfiguration:
    """A candidate configuration: base point plus full vector data.

    ``pvecs`` and ``qvecs`` carry all five vectors including the dependent
    ones, so the object is self-contained (no back-reference to the
    parametrization that produced it).
    """

    base: RatMatrix
    alphas: tuple
    pvecs: tuple
    qvecs: tuple
    kappa: tuple
    delta: tuple = DELTA

    def rank_one_matrices(self) -> tuple:
        return tuple(RatMatrix(c)
                     for c in rank_one_tuples(self.alphas, self.pvecs, self.qvecs))

    def points(self, nu: int = 1) -> tuple:
        """The outer points X_j (cycle starting at nu)."""
        nu0 = _index0(nu, "nu")
        cmats = rank_one_tuples(self.alphas, self.pvecs, self.qvecs)
        return tuple(self.base + RatMatrix(b)
                     for b in z_block_tuples(nu0, cmats, self.kappa))

    def vertex_points(self, nu: int = 1) -> tuple:
        nu0 = _index0(nu, "nu")
        cmats = rank_one_tuples(self.alphas, self.pvecs, self.qvecs)
        return tuple(self.base + RatMatrix(o)
                     for o in vertex_offset_tuples(nu0, cmats))

    def upper_blocks(self) -> tuple:
        """The 2x2 upper blocks A_j of the five points."""
        return tuple(x.submatrix(0, 2, 0, 2) for x in self.points())

    def lower_blocks(self) -> tuple:
        """The 2x2 lower blocks B_j of the five points."""
        return tuple(x.submatrix(2, 4, 0, 2) for x in self.points())


def configuration(params: ParameterVector, base: RatMatrix | None = None) -> TauConfiguration:
    """Build the full configuration value for a parameter point."""
    base = RatMatrix.zeros(4, 2) if base is None else base
    alphas, pvecs, qvecs, _ = cycle_tuples(*_free_coords(params))
    return TauConfiguration(base=base, alphas=alphas, pvecs=pvecs,
                            qvecs=qvecs, kappa=params.kappa)


@dataclass(frozen=True)
class ValidityReport:
    """Exact truth values for the structural membership conditions."""

    closure_p: bool
    closure_q: bool
    rank_one: tuple
    noncollinear: bool
    kappa_gt_one: tuple
    kappa_enforced: bool

    @property
    def passed(self) -> bool:
        ok = (self.closure_p and self.closure_q and all(self.rank_one)
              and self.noncollinear)
        if self.kappa_enforced:
            ok = ok and all(self.kappa_gt_one)
        return ok

    def failures(self) -> list:
        out = []
        if not self.closure_p:
            out.append("p-closure sum nonzero")
        if not self.closure_q:
            out.append("q-closure sum nonzero")
        for j, ok in enumerate(self.rank_one, start=1):
            if not ok:
                out.append(f"C_{j} not rank one")
        if not self.noncollinear:
            out.append("no mutually non-collinear triple of directions")
        if self.kappa_enforced:
            for j, ok in enumerate(self.kappa_gt_one, start=1):
                if not ok:
                    out.append(f"kappa_{j} <= 1")
        return out


def validate(config: TauConfiguration, allow_kappa_le_1: bool = False) -> ValidityReport:
    """Check the structural membership conditions exactly.

    The report carries individual verdicts; nothing is raised. The weight
    condition ``kappa_j > 1`` can be relaxed for exploratory search.
    """
    zero = Fraction(0)
    closure_p = all(
        sum(p[r] * a[c] for p, a in zip(config.pvecs, config.alphas)) == zero
        for r in range(2) for c in range(2))
    closure_q = all(
        sum(q[r] * a[b] * a[c] for q, a in zip(config.qvecs, config.alphas)) == zero
        for r in range(2) for b in range(2) for c in range(2))
    rank_one = tuple(rank(c) == 1 for c in config.rank_one_matrices())

    def _det2(a, b):
        return a[0] * b[1] - a[1] * b[0]

    noncollinear = any(
        _det2(config.alphas[i], config.alphas[j]) != 0
        and _det2(config.alphas[i], config.alphas[k]) != 0
        and _det2(config.alphas[j], config.alphas[k]) != 0
        for i in range(5) for j in range(i + 1, 5) for k in range(j + 1, 5))
    kappa_gt_one = tuple(k > 1 for k in config.kappa)
    return ValidityReport(closure_p=closure_p, closure_q=closure_q,
                          rank_one=rank_one, noncollinear=noncollinear,
                          kappa_gt_one=kappa_gt_one,
                          kappa_enforced=not allow_kappa_le_1)


def special_lift(a: RatMatrix, b: RatMatrix) -> RatMatrix:
    """Embed a gradient pair (A, B) as the 4x2 point [A; B J]."""
    if (a.rows, a.cols) != (2, 2) or (b.rows, b.cols) != (2, 2):
        raise ValueError("special_lift expects two 2x2 matrices")
    bj = b @ J
    return RatMatrix(a.tolist() + bj.tolist())


def special_project(x: RatMatrix) -> tuple:
    """Invert :func:`special_lift`: recover (A, B) from a 4x2 point."""
    if (x.rows, x.cols) != (4, 2):
        raise ValueError("special_project expects a 4x2 matrix")
    a = x.submatrix(0, 2, 0, 2)
    b = x.submatrix(2, 4, 0, 2) @ J_INV
    return a, b
