"""First-derivative machinery for the stacked graph equations.

The map under study sends (Y, Q) to the five residuals
``Phi(X_j) = DF(A_j) + B_j J`` stacked into R^20. Its Y-Jacobian is built
from two kinds of blocks:

* ``R_j = dphi(H)``: the 4x8 derivative of the residual at a point, which
  depends only on the local Hessian tensor H (a symmetric 4x4 matrix in the
  column-major identification), and
* ``S_j = dz_dy(...)``: the exact 8x20 Jacobian of the ray offsets Z_j with
  respect to the 20 free coordinates.

Derivatives are computed with forward-mode dual numbers over exact
rationals; the same code path also runs on floats for the numeric module.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache

from . import tconfig
from .ratlin import RatMatrix, determinant, rat, vstack
from .tconfig import ParameterVector

#: 4x8 selector extracting the upper block A from a vectorized 4x2 point.
P_SELECT = RatMatrix([
    [1, 0, 0, 0, 0, 0, 0, 0],
    [0, 1, 0, 0, 0, 0, 0, 0],
    [0, 0, 0, 0, 1, 0, 0, 0],
    [0, 0, 0, 0, 0, 1, 0, 0],
])

#: 4x8 selector computing vec(B J) from a vectorized 4x2 point.
E_SELECT = RatMatrix([
    [0, 0, 0, 0, 0, 0, 1, 0],
    [0, 0, 0, 0, 0, 0, 0, 1],
    [0, 0, -1, 0, 0, 0, 0, 0],
    [0, 0, 0, -1, 0, 0, 0, 0],
])


class Dual:
    """Forward-mode dual number: value plus a gradient tuple.

    The gradient length is fixed by the seeding context (20 coordinates
    here). Arithmetic mixes freely with plain scalars.
    """

    __slots__ = ("val", "grad")

    def __init__(self, val, grad):
        self.val = val
        self.grad = grad

    def __add__(self, other):
        if isinstance(other, Dual):
            return Dual(self.val + other.val,
                        tuple(a + b for a, b in zip(self.grad, other.grad)))
        return Dual(self.val + other, self.grad)

    __radd__ = __add__

    def __sub__(self, other):
        if isinstance(other, Dual):
            return Dual(self.val - other.val,
                        tuple(a - b for a, b in zip(self.grad, other.grad)))
        return Dual(self.val - other, self.grad)

    def __rsub__(self, other):
        return Dual(other - self.val, tuple(-a for a in self.grad))

    def __mul__(self, other):
        if isinstance(other, Dual):
            return Dual(self.val * other.val,
                        tuple(self.val * b + a * other.val
                              for a, b in zip(self.grad, other.grad)))
        return Dual(self.val * other, tuple(a * other for a in self.grad))

    __rmul__ = __mul__

    def __truediv__(self, other):
        if isinstance(other, Dual):
            v = other.val
            return Dual(self.val / v,
                        tuple((a * v - self.val * b) / (v * v)
                              for a, b in zip(self.grad, other.grad)))
        return Dual(self.val / other, tuple(a / other for a in self.grad))

    def __rtruediv__(self, other):
        v = self.val
        return Dual(other / v, tuple(-other * a / (v * v) for a in self.grad))

    def __neg__(self):
        return Dual(-self.val, tuple(-a for a in self.grad))

    def __repr__(self):
        return f"Dual({self.val!r})"


def seed_duals(values, zero, one) -> list:
    """One dual per value, gradients forming the identity."""
    n = len(values)
    return [Dual(v, tuple(one if k == i else zero for k in range(n)))
            for i, v in enumerate(values)]


def _vec8(mat) -> tuple:
    """Column-major vectorization of a 4x2 tuple-of-tuples."""
    return (mat[0][0], mat[1][0], mat[2][0], mat[3][0],
            mat[0][1], mat[1][1], mat[2][1], mat[3][1])


def _dual_z_blocks(nu0: int, coords) -> tuple:
    """All five Z_j as 4x2 matrices of duals (or plain scalars)."""
    z1, y2, z3, z4, y5 = coords[0:5]
    p3, p4, p5 = (coords[5], coords[6]), (coords[7], coords[8]), (coords[9], coords[10])
    q4, q5 = (coords[11], coords[12]), (coords[13], coords[14])
    kappa = coords[15:20]
    _, _, _, cmats = tconfig.cycle_tuples(z1, y2, z3, z4, y5, p3, p4, p5, q4, q5)
    return tconfig.z_block_tuples(nu0, cmats, kappa)


@lru_cache(maxsize=64)
def _s_blocks_exact(nu0: int, params: ParameterVector) -> tuple:
    """The five exact 8x20 Jacobians S_j at a parameter point."""
    duals = seed_duals([rat(c) for c in params.coords()],
                       zero=Fraction(0), one=Fraction(1))
    blocks = _dual_z_blocks(nu0, tuple(duals))
    out = []
    for block in blocks:
        entries = _vec8(block)
        out.append(RatMatrix([list(e.grad) for e in entries]))
    return tuple(out)


def dz_dy(nu: int, j: int, params: ParameterVector) -> RatMatrix:
    """Exact 8x20 Jacobian of the ray offset Z_j for the cycle at nu (1..5)."""
    if not 1 <= j <= 5:
        raise ValueError(f"j must be in 1..5, got {j}")
    nu0 = tconfig._index0(nu, "nu")
    return _s_blocks_exact(nu0, params)[j - 1]


@dataclass(frozen=True)
class HessianSet:
    """Five symmetric 4x4 tensors, one per configuration point."""

    matrices: tuple

    def __post_init__(self):
        if len(self.matrices) != 5:
            raise ValueError("need exactly five tensors")
        for m in self.matrices:
            if (m.rows, m.cols) != (4, 4):
                raise ValueError("tensors must be 4x4")
            if not m.is_symmetric():
                raise ValueError("tensors must be symmetric")

    @classmethod
    def identity(cls) -> "HessianSet":
        return cls(tuple(RatMatrix.identity(4) for _ in range(5)))

    @classmethod
    def from_entries(cls, rows_of_16) -> "HessianSet":
        return cls(tuple(RatMatrix.from_flat(4, 4, e) for e in rows_of_16))

    def __getitem__(self, idx: int) -> RatMatrix:
        """1-based access matching the point numbering."""
        if not 1 <= idx <= 5:
            raise IndexError(f"tensor index must be 1..5, got {idx}")
        return self.matrices[idx - 1]


def dphi(h: RatMatrix) -> RatMatrix:
    """The 4x8 residual derivative ``H P + E`` for a symmetric tensor H.

    Has exact rank 4 for every symmetric H: the four columns contributed
    by E alone form an invertible 4x4 block.
    """
    if (h.rows, h.cols) != (4, 4):
        raise ValueError("Hessian tensor must be 4x4")
    if not h.is_symmetric():
        raise ValueError("Hessian tensor must be symmetric")
    return h @ P_SELECT + E_SELECT


def test_tensor(kind: int, s) -> RatMatrix:
    """Block-diagonal probe tensors: kind 1 scales the first 2x2 diagonal
    block, kind 2 the second."""
    s = rat(s)
    if kind == 1:
        return RatMatrix.diagonal([s, s, 1, 1])
    if kind == 2:
        return RatMatrix.diagonal([1, 1, s, s])
    raise ValueError(f"kind must be 1 or 2, got {kind}")


def canonical_assignment(nu: int) -> tuple:
    """Tensor index for each block when the cycle starts at nu: j -> nu+j-1."""
    nu0 = tconfig._index0(nu, "nu")
    return tuple((nu0 + j0) % 5 + 1 for j0 in range(5))


@dataclass(frozen=True)
class JetAssembly:
    """The stacked Jacobian data of the residual map at one cycle start."""

    nu: int
    S: tuple
    R: tuple
    dPsi_dY: RatMatrix
    dPsi_dQ: RatMatrix


def assemble(nu: int, params: ParameterVector, hessians: HessianSet,
             assignment: tuple | None = None) -> JetAssembly:
    """Exact 20x20 and 20x8 Jacobians of the stacked residual map.

    ``assignment`` lists, for each block j = 1..5, which tensor of the set
    governs the residual derivative there; at the baseline parameters with
    base vertex nu this is the canonical cyclic assignment.
    """
    nu0 = tconfig._index0(nu, "nu")
    if assignment is None:
        assignment = canonical_assignment(nu)
    if len(assignment) != 5:
        raise ValueError("assignment must list five tensor indices")
    s_blocks = _s_blocks_exact(nu0, params)
    r_blocks = tuple(dphi(hessians[assignment[j0]]) for j0 in range(5))
    d_psi_dy = vstack([r_blocks[j0] @ s_blocks[j0] for j0 in range(5)])
    d_psi_dq = vstack(list(r_blocks))
    return JetAssembly(nu=nu, S=s_blocks, R=r_blocks,
                       dPsi_dY=d_psi_dy, dPsi_dQ=d_psi_dq)


def j_nu(nu: int, hessians: HessianSet) -> Fraction:
    """Exact cycle Jacobian determinant at the baseline parameter point."""
    jet = assemble(nu, ParameterVector.baseline(), hessians)
    return determinant(jet.dPsi_dY)


def test_tensor_set(s, t) -> HessianSet:
    """The probe family (h1(s), h2(t), h1(s), h1(s), h2(t))."""
    h1 = test_tensor(1, s)
    h2 = test_tensor(2, t)
    return HessianSet((h1, h2, h1, h1, h2))


def probe_hessians(nu: int, s, t) -> HessianSet:
    """The probe family laid out along the cycle starting at nu.

    Jacobian block j receives the j-th member of the probe sequence, so
    the tensor attached to base point nu+j-1 is that member. For nu = 1
    this coincides with :func:`test_tensor_set`.
    """
    nu0 = tconfig._index0(nu, "nu")
    seq = test_tensor_set(s, t).matrices
    placed = [None] * 5
    for j0 in range(5):
        placed[(nu0 + j0) % 5] = seq[j0]
    return HessianSet(tuple(placed))


def probe_jacobian(nu: int, s, t) -> Fraction:
    """Cycle Jacobian determinant with the probe family along the cycle."""
    return j_nu(nu, probe_hessians(nu, s, t))
