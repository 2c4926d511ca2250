"""Exact rational scalars and dense rational matrices.

Every certificate produced by this toolkit bottoms out in the arithmetic
of this module: arbitrary-precision rationals (``fractions.Fraction``,
always reduced, positive denominator) and small dense matrices over them.
All operations are pure and all values are immutable after construction,
so they are safe to share between threads.

Serialization convention: a rational is written as the string ``"p/q"``,
or ``"p"`` when the denominator is 1.
"""

from __future__ import annotations

from fractions import Fraction
from typing import Iterable, Sequence

from .errors import SingularMatrix

Rational = Fraction


def rat(value) -> Fraction:
    """Parse a rational from an int, Fraction, or a ``"p/q"`` string."""
    if isinstance(value, Fraction):
        return value
    if isinstance(value, int):
        return Fraction(value)
    if isinstance(value, str):
        return Fraction(value.strip())
    if isinstance(value, float):
        raise TypeError(f"refusing to coerce float {value!r} to an exact rational")
    raise TypeError(f"cannot interpret {value!r} as a rational")


def rat_str(value: Fraction) -> str:
    """Format a rational as ``"p/q"`` (or ``"p"`` for integers)."""
    if value.denominator == 1:
        return str(value.numerator)
    return f"{value.numerator}/{value.denominator}"


class RatMatrix:
    """Immutable dense matrix with exact rational entries, row-major."""

    __slots__ = ("rows", "cols", "_e")

    def __init__(self, data: Sequence[Sequence]):
        rows = len(data)
        if rows == 0:
            raise ValueError("matrix needs at least one row")
        cols = len(data[0])
        if cols == 0:
            raise ValueError("matrix needs at least one column")
        entries = []
        for r in data:
            if len(r) != cols:
                raise ValueError("ragged rows")
            entries.extend(rat(x) for x in r)
        object.__setattr__(self, "rows", rows)
        object.__setattr__(self, "cols", cols)
        object.__setattr__(self, "_e", tuple(entries))

    def __setattr__(self, name, value):
        raise AttributeError("RatMatrix is immutable")

    # -- construction helpers ------------------------------------------------

    @classmethod
    def from_flat(cls, rows: int, cols: int, entries: Iterable) -> "RatMatrix":
        entries = list(entries)
        if len(entries) != rows * cols:
            raise ValueError(f"expected {rows * cols} entries, got {len(entries)}")
        return cls([entries[i * cols:(i + 1) * cols] for i in range(rows)])

    @classmethod
    def zeros(cls, rows: int, cols: int) -> "RatMatrix":
        return cls.from_flat(rows, cols, [0] * (rows * cols))

    @classmethod
    def identity(cls, n: int) -> "RatMatrix":
        return cls([[1 if i == j else 0 for j in range(n)] for i in range(n)])

    @classmethod
    def diagonal(cls, values: Sequence) -> "RatMatrix":
        n = len(values)
        return cls([[values[i] if i == j else 0 for j in range(n)] for i in range(n)])

    @classmethod
    def column(cls, values: Sequence) -> "RatMatrix":
        return cls([[v] for v in values])

    # -- element access ------------------------------------------------------

    def __getitem__(self, key) -> Fraction:
        i, j = key
        if not (0 <= i < self.rows and 0 <= j < self.cols):
            raise IndexError(f"index ({i}, {j}) out of range for {self.rows}x{self.cols}")
        return self._e[i * self.cols + j]

    def row(self, i: int) -> tuple:
        if not 0 <= i < self.rows:
            raise IndexError(f"row {i} out of range")
        return self._e[i * self.cols:(i + 1) * self.cols]

    def col(self, j: int) -> tuple:
        if not 0 <= j < self.cols:
            raise IndexError(f"column {j} out of range")
        return tuple(self._e[i * self.cols + j] for i in range(self.rows))

    def tolist(self) -> list:
        return [list(self.row(i)) for i in range(self.rows)]

    def to_floats(self) -> list:
        return [[float(x) for x in self.row(i)] for i in range(self.rows)]

    @property
    def is_square(self) -> bool:
        return self.rows == self.cols

    def is_symmetric(self) -> bool:
        return self.is_square and all(
            self[i, j] == self[j, i] for i in range(self.rows) for j in range(i)
        )

    def submatrix(self, r0: int, r1: int, c0: int, c1: int) -> "RatMatrix":
        """Rows r0..r1-1 and columns c0..c1-1."""
        if not (0 <= r0 < r1 <= self.rows and 0 <= c0 < c1 <= self.cols):
            raise IndexError("submatrix bounds out of range")
        return RatMatrix([self.row(i)[c0:c1] for i in range(r0, r1)])

    # -- arithmetic ----------------------------------------------------------

    def __add__(self, other: "RatMatrix") -> "RatMatrix":
        self._check_same_shape(other)
        return RatMatrix.from_flat(self.rows, self.cols,
                                   (a + b for a, b in zip(self._e, other._e)))

    def __sub__(self, other: "RatMatrix") -> "RatMatrix":
        self._check_same_shape(other)
        return RatMatrix.from_flat(self.rows, self.cols,
                                   (a - b for a, b in zip(self._e, other._e)))

    def __neg__(self) -> "RatMatrix":
        return RatMatrix.from_flat(self.rows, self.cols, (-a for a in self._e))

    def __mul__(self, scalar) -> "RatMatrix":
        s = rat(scalar)
        return RatMatrix.from_flat(self.rows, self.cols, (s * a for a in self._e))

    __rmul__ = __mul__

    def __matmul__(self, other: "RatMatrix") -> "RatMatrix":
        if self.cols != other.rows:
            raise ValueError(f"shape mismatch {self.rows}x{self.cols} @ {other.rows}x{other.cols}")
        out = []
        for i in range(self.rows):
            ri = self.row(i)
            for j in range(other.cols):
                out.append(sum(ri[k] * other._e[k * other.cols + j]
                               for k in range(self.cols)))
        return RatMatrix.from_flat(self.rows, other.cols, out)

    def transpose(self) -> "RatMatrix":
        return RatMatrix([[self[i, j] for i in range(self.rows)] for j in range(self.cols)])

    def trace(self) -> Fraction:
        if not self.is_square:
            raise ValueError("trace of non-square matrix")
        return sum((self[i, i] for i in range(self.rows)), Fraction(0))

    def __eq__(self, other) -> bool:
        return (isinstance(other, RatMatrix) and self.rows == other.rows
                and self.cols == other.cols and self._e == other._e)

    def __hash__(self) -> int:
        return hash((self.rows, self.cols, self._e))

    def __repr__(self) -> str:
        body = "; ".join(" ".join(rat_str(x) for x in self.row(i)) for i in range(self.rows))
        return f"RatMatrix({self.rows}x{self.cols}: {body})"

    def _check_same_shape(self, other: "RatMatrix") -> None:
        if self.rows != other.rows or self.cols != other.cols:
            raise ValueError(f"shape mismatch {self.rows}x{self.cols} vs {other.rows}x{other.cols}")


def frobenius_inner(a: RatMatrix, b: RatMatrix) -> Fraction:
    """Entrywise inner product ``sum_ij a_ij b_ij``."""
    a._check_same_shape(b)
    return sum((x * y for x, y in zip(a._e, b._e)), Fraction(0))


def vstack(blocks: Sequence[RatMatrix]) -> RatMatrix:
    cols = blocks[0].cols
    rows = []
    for b in blocks:
        if b.cols != cols:
            raise ValueError("vstack column mismatch")
        rows.extend(b.tolist())
    return RatMatrix(rows)


def determinant(m: RatMatrix) -> Fraction:
    """Exact determinant by fraction-free (Bareiss) elimination."""
    if not m.is_square:
        raise ValueError("determinant of non-square matrix")
    n = m.rows
    a = [list(m.row(i)) for i in range(n)]
    sign = 1
    prev = Fraction(1)
    for k in range(n - 1):
        if a[k][k] == 0:
            for r in range(k + 1, n):
                if a[r][k] != 0:
                    a[k], a[r] = a[r], a[k]
                    sign = -sign
                    break
            else:
                return Fraction(0)
        pivot = a[k][k]
        for i in range(k + 1, n):
            aik = a[i][k]
            for j in range(k + 1, n):
                a[i][j] = (a[i][j] * pivot - aik * a[k][j]) / prev
            a[i][k] = Fraction(0)
        prev = pivot
    return sign * a[n - 1][n - 1]


def rank(m: RatMatrix) -> int:
    """Exact rank by fraction-free row reduction."""
    a = [list(m.row(i)) for i in range(m.rows)]
    nr, nc = m.rows, m.cols
    r = 0
    prev = Fraction(1)
    for c in range(nc):
        pivot_row = next((i for i in range(r, nr) if a[i][c] != 0), None)
        if pivot_row is None:
            continue
        a[r], a[pivot_row] = a[pivot_row], a[r]
        pivot = a[r][c]
        for i in range(r + 1, nr):
            aic = a[i][c]
            for j in range(c + 1, nc):
                a[i][j] = (a[i][j] * pivot - aic * a[r][j]) / prev
            a[i][c] = Fraction(0)
        prev = pivot
        r += 1
        if r == nr:
            break
    return r


def _faddeev_leverrier(m: RatMatrix) -> tuple:
    """Characteristic polynomial coefficients and the adjugate, both exact.

    Returns ``(coeffs, adj)`` where ``coeffs`` lists the monic polynomial
    from the leading power down, and ``adj`` satisfies
    ``m @ adj == det(m) * I``.
    """
    if not m.is_square:
        raise ValueError("square matrix required")
    n = m.rows
    ident = RatMatrix.identity(n)
    coeffs = [Fraction(1)]
    b = ident
    b_prev = ident
    for k in range(1, n + 1):
        mk = m @ b
        c = -mk.trace() / k
        coeffs.append(c)
        b_prev = b
        b = mk + c * ident
    adj = b_prev if (n - 1) % 2 == 0 else -b_prev
    return tuple(coeffs), adj


def char_poly(m: RatMatrix) -> tuple:
    """Monic characteristic polynomial, coefficients from highest power down."""
    return _faddeev_leverrier(m)[0]


def adjugate(m: RatMatrix) -> RatMatrix:
    """Exact adjugate: ``m @ adjugate(m) == determinant(m) * I``."""
    return _faddeev_leverrier(m)[1]


def inverse(m: RatMatrix) -> RatMatrix:
    """Exact inverse by Gauss-Jordan elimination.

    Raises SingularMatrix when the determinant is zero.
    """
    if not m.is_square:
        raise ValueError("inverse of non-square matrix")
    n = m.rows
    a = [list(m.row(i)) + [Fraction(1) if i == j else Fraction(0) for j in range(n)]
         for i in range(n)]
    for c in range(n):
        pivot_row = next((i for i in range(c, n) if a[i][c] != 0), None)
        if pivot_row is None:
            raise SingularMatrix(f"singular {n}x{n} matrix has no inverse")
        a[c], a[pivot_row] = a[pivot_row], a[c]
        pivot = a[c][c]
        a[c] = [x / pivot for x in a[c]]
        for i in range(n):
            if i != c and a[i][c] != 0:
                f = a[i][c]
                a[i] = [x - f * y for x, y in zip(a[i], a[c])]
    return RatMatrix([row[n:] for row in a])


def nullspace(m: RatMatrix) -> tuple:
    """Basis of the exact kernel, as column matrices.

    ``rank(m) + len(nullspace(m)) == m.cols`` always.
    """
    nr, nc = m.rows, m.cols
    a = [list(m.row(i)) for i in range(nr)]
    pivots = []
    r = 0
    for c in range(nc):
        pivot_row = next((i for i in range(r, nr) if a[i][c] != 0), None)
        if pivot_row is None:
            continue
        a[r], a[pivot_row] = a[pivot_row], a[r]
        p = a[r][c]
        a[r] = [x / p for x in a[r]]
        for i in range(nr):
            if i != r and a[i][c] != 0:
                f = a[i][c]
                a[i] = [x - f * y for x, y in zip(a[i], a[r])]
        pivots.append(c)
        r += 1
        if r == nr:
            break
    free = [c for c in range(nc) if c not in pivots]
    basis = []
    for fc in free:
        v = [Fraction(0)] * nc
        v[fc] = Fraction(1)
        for i, pc in enumerate(pivots):
            v[pc] = -a[i][fc]
        basis.append(RatMatrix.column(v))
    return tuple(basis)


_VEC_SHAPES = ((2, 2), (4, 2))


def vec(m: RatMatrix) -> RatMatrix:
    """Column-major vectorization of a 2x2 or 4x2 matrix."""
    if (m.rows, m.cols) not in _VEC_SHAPES:
        raise ValueError(f"vec expects a 2x2 or 4x2 matrix, got {m.rows}x{m.cols}")
    return RatMatrix.column([m[i, j] for j in range(m.cols) for i in range(m.rows)])


def unvec(v: RatMatrix) -> RatMatrix:
    """Inverse of :func:`vec`: a length-4 column becomes 2x2, length-8 becomes 4x2."""
    if v.cols != 1 or v.rows not in (4, 8):
        raise ValueError(f"unvec expects a 4- or 8-entry column, got {v.rows}x{v.cols}")
    rows = v.rows // 2
    return RatMatrix([[v[i, 0], v[i + rows, 0]] for i in range(rows)])
