"""Floating-point Newton continuation of the implicitly defined parameters.

The graph equations pin the 20 free coordinates to the base vertex: near
the reference point, for every cycle start nu there is a map Q -> Y_nu(Q)
with stacked residual zero. The energy is only known through its 2-jets at
the five anchor points, so this module drives Newton's method against an
explicit local model (quadratic jet per anchor, optional cubic correction)
inside disjoint trust regions; leaving a trust region is an error, never an
extrapolation.

Distances and ball radii are Frobenius/Euclidean throughout.
"""

from __future__ import annotations

import random
from dataclasses import dataclass, field

import numpy as np

from . import tconfig, varjet
from .errors import (AmbiguousAnchor, MaxIterExceeded, OutOfTrustRegion,
                     SingularJacobian)
from .polysupport import min_separation
from .tconfig import ParameterVector
from .varjet import HessianSet

P_FLOAT = np.array(varjet.P_SELECT.to_floats())
E_FLOAT = np.array(varjet.E_SELECT.to_floats())
J_FLOAT = np.array([[0.0, -1.0], [1.0, 0.0]])
J_INV_FLOAT = np.array([[0.0, 1.0], [-1.0, 0.0]])


def vec_f(m: np.ndarray) -> np.ndarray:
    """Column-major vectorization (matches the exact modules)."""
    return np.asarray(m, dtype=float).flatten(order="F")


def unvec_f(v: np.ndarray, rows: int = None) -> np.ndarray:
    v = np.asarray(v, dtype=float)
    rows = rows or v.size // 2
    return v.reshape((rows, 2), order="F")


@dataclass(frozen=True)
class LocalModel:
    """Jet data of the energy gradient at the five anchors.

    ``gradients[j]`` is the value of the gradient map at ``anchors[j]``;
    ``hessians[j]`` its derivative there (symmetric 4x4 in the column-major
    identification); ``cubic[j]``, when present, a symmetric third-order
    correction tensor of shape (4, 4, 4).
    """

    anchors: tuple
    gradients: tuple
    hessians: tuple
    trust_radius: float
    cubic: tuple | None = None

    @classmethod
    def from_hessians(cls, hessians: HessianSet,
                      params: ParameterVector | None = None,
                      trust_radius: float | None = None,
                      cubic: tuple | None = None) -> "LocalModel":
        """Model anchored at a configuration's points, gradient = -B J."""
        params = ParameterVector.baseline() if params is None else params
        config = tconfig.configuration(params)
        uppers = [np.array(a.to_floats()) for a in config.upper_blocks()]
        lowers = [np.array(b.to_floats()) for b in config.lower_blocks()]
        grads = [-(b @ J_FLOAT) for b in lowers]
        if trust_radius is None:
            trust_radius = float(np.sqrt(float(min_separation(config)))) / 4.0
        hs = [np.array(h.to_floats()) for h in hessians.matrices]
        return cls(anchors=tuple(uppers), gradients=tuple(grads),
                   hessians=tuple(hs), trust_radius=trust_radius,
                   cubic=cubic)

    def assign(self, uppers) -> tuple:
        """Nearest anchor for each upper block, all within trust radius."""
        out = []
        for k, a in enumerate(uppers):
            dists = sorted((float(np.linalg.norm(a - anchor)), idx)
                           for idx, anchor in enumerate(self.anchors))
            best, idx = dists[0]
            if best > self.trust_radius:
                raise OutOfTrustRegion(
                    f"point {k + 1} is {best:.3g} from its nearest anchor "
                    f"(trust radius {self.trust_radius:.3g})")
            if len(dists) > 1 and dists[1][0] <= self.trust_radius:
                raise AmbiguousAnchor(
                    f"point {k + 1} lies inside two trust regions")
            out.append(idx)
        return tuple(out)

    def gradient(self, j: int, a: np.ndarray) -> np.ndarray:
        v = vec_f(a - self.anchors[j])
        g = vec_f(self.gradients[j]) + self.hessians[j] @ v
        if self.cubic is not None:
            g = g + 0.5 * np.einsum("ijk,j,k->i", self.cubic[j], v, v)
        return unvec_f(g, 2)

    def hessian_at(self, j: int, a: np.ndarray) -> np.ndarray:
        h = self.hessians[j]
        if self.cubic is not None:
            v = vec_f(a - self.anchors[j])
            h = h + np.einsum("ijk,k->ij", self.cubic[j], v)
        return h


def _float_coords(y) -> tuple:
    y = np.asarray(y, dtype=float)
    if y.shape != (20,):
        raise ValueError(f"expected 20 coordinates, got shape {y.shape}")
    return tuple(float(v) for v in y)


def baseline_coords() -> np.ndarray:
    return np.array([float(v) for v in ParameterVector.baseline().coords()])


def z_blocks_float(nu: int, y) -> list:
    """The five ray offsets Z_j as float 4x2 arrays."""
    nu0 = tconfig._index0(nu, "nu")
    coords = _float_coords(y)
    blocks = varjet._dual_z_blocks(nu0, coords)
    return [np.array(b, dtype=float) for b in blocks]


def vertex_offsets_float(nu: int, y) -> list:
    nu0 = tconfig._index0(nu, "nu")
    c = _float_coords(y)
    _, _, _, cmats = tconfig.cycle_tuples(
        c[0], c[1], c[2], c[3], c[4], (c[5], c[6]), (c[7], c[8]),
        (c[9], c[10]), (c[11], c[12]), (c[13], c[14]))
    offs = tconfig.vertex_offset_tuples(nu0, cmats)
    return [np.array(o, dtype=float) for o in offs]


def psi(nu: int, y, q: np.ndarray, model: LocalModel,
        assignment: tuple | None = None) -> np.ndarray:
    """The stacked residual (20 floats) of the graph equations."""
    q = np.asarray(q, dtype=float)
    blocks = z_blocks_float(nu, y)
    points = [q + b for b in blocks]
    uppers = [x[:2, :] for x in points]
    if assignment is None:
        assignment = model.assign(uppers)
    out = np.empty(20)
    for j in range(5):
        a, b = points[j][:2, :], points[j][2:, :]
        anchor = assignment[j]
        if np.linalg.norm(a - model.anchors[anchor]) > model.trust_radius:
            raise OutOfTrustRegion(f"block {j + 1} left its trust region")
        phi = model.gradient(anchor, a) + b @ J_FLOAT
        out[4 * j:4 * j + 4] = vec_f(phi)
    return out


def _s_blocks_float(nu: int, y) -> list:
    coords = _float_coords(y)
    duals = varjet.seed_duals(list(coords), zero=0.0, one=1.0)
    blocks = varjet._dual_z_blocks(tconfig._index0(nu, "nu"), tuple(duals))
    out = []
    for block in blocks:
        entries = varjet._vec8(block)
        out.append(np.array([e.grad for e in entries]))
    return out


def jacobian(nu: int, y, q: np.ndarray, model: LocalModel,
             assignment: tuple) -> np.ndarray:
    """Float 20x20 Y-Jacobian of the stacked residual."""
    q = np.asarray(q, dtype=float)
    s_blocks = _s_blocks_float(nu, y)
    z_blocks = z_blocks_float(nu, y)
    rows = []
    for j in range(5):
        a = (q + z_blocks[j])[:2, :]
        r = model.hessian_at(assignment[j], a) @ P_FLOAT + E_FLOAT
        rows.append(r @ s_blocks[j])
    return np.vstack(rows)


def q_jacobian(nu: int, y, q: np.ndarray, model: LocalModel,
               assignment: tuple) -> np.ndarray:
    """Float 20x8 Q-Jacobian: the stacked residual derivatives R_j."""
    q = np.asarray(q, dtype=float)
    z_blocks = z_blocks_float(nu, y)
    rows = []
    for j in range(5):
        a = (q + z_blocks[j])[:2, :]
        rows.append(model.hessian_at(assignment[j], a) @ P_FLOAT + E_FLOAT)
    return np.vstack(rows)


@dataclass
class NewtonResult:
    y: np.ndarray
    residual: float
    iterations: int
    converged: bool
    nu: int
    assignment: tuple


def newton_solve(nu: int, q: np.ndarray, model: LocalModel,
                 y_init=None, tol: float = 1e-10, max_iter: int = 50,
                 raise_on_fail: bool = True) -> NewtonResult:
    """Newton iteration for the implicit parameter map at base point q.

    The anchor assignment is fixed from the initial iterate. Non-convergence
    raises MaxIterExceeded (carrying the partial result) unless
    ``raise_on_fail`` is off, in which case the result reports
    ``converged=False``; a wrong answer is never returned silently.
    """
    q = np.asarray(q, dtype=float)
    y = baseline_coords() if y_init is None else np.array(y_init, dtype=float)
    blocks = z_blocks_float(nu, y)
    assignment = model.assign([(q + b)[:2, :] for b in blocks])
    iterations = 0
    while True:
        r = psi(nu, y, q, model, assignment)
        res = float(np.max(np.abs(r)))
        if res < tol:
            return NewtonResult(y=y, residual=res, iterations=iterations,
                                converged=True, nu=nu, assignment=assignment)
        if iterations >= max_iter:
            result = NewtonResult(y=y, residual=res, iterations=iterations,
                                  converged=False, nu=nu, assignment=assignment)
            if raise_on_fail:
                raise MaxIterExceeded(
                    f"residual {res:.3g} after {iterations} iterations", result)
            return result
        jac = jacobian(nu, y, q, model, assignment)
        try:
            delta = np.linalg.solve(jac, r)
        except np.linalg.LinAlgError as exc:
            raise SingularJacobian(f"float Jacobian singular at nu={nu}") from exc
        y = y - delta
        iterations += 1


def hat_points(nu: int, q: np.ndarray, model: LocalModel, **newton_kw) -> tuple:
    """Solved outer points and vertices at q: (X_hat list, P_hat list, result)."""
    result = newton_solve(nu, q, model, **newton_kw)
    q = np.asarray(q, dtype=float)
    xs = [q + b for b in z_blocks_float(nu, result.y)]
    ps = [q + o for o in vertex_offsets_float(nu, result.y)]
    return xs, ps, result


def dz_matrix(nu: int, q: np.ndarray, model: LocalModel,
              **newton_kw) -> np.ndarray:
    """Float 8x8 derivative of the solved first ray offset at base point q."""
    result = newton_solve(nu, q, model, **newton_kw)
    y, assignment = result.y, result.assignment
    q = np.asarray(q, dtype=float)
    s_blocks = _s_blocks_float(nu, y)
    jac_y = jacobian(nu, y, q, model, assignment)
    jac_q = q_jacobian(nu, y, q, model, assignment)
    return -s_blocks[0] @ np.linalg.solve(jac_y, jac_q)


def dz_matrix_fd(nu: int, q: np.ndarray, model: LocalModel,
                 step: float = 1e-5, tol: float = 1e-12) -> np.ndarray:
    """Central finite-difference estimate of the same 8x8 derivative."""
    q = np.asarray(q, dtype=float)

    def z_of(qq):
        result = newton_solve(nu, qq, model, tol=tol)
        return vec_f(z_blocks_float(nu, result.y)[0])

    cols = []
    for k in range(8):
        e = unvec_f(np.eye(8)[k], 4)
        cols.append((z_of(q + step * e) - z_of(q - step * e)) / (2 * step))
    return np.column_stack(cols)


@dataclass
class CycleReport:
    """Residuals of the two cyclic identities plus vertex-map determinants."""

    y_residuals: tuple
    q_residuals: tuple
    vertex_map_dets: tuple
    max_residual: float
    dets_nonzero: bool


def verify_cycle(q: np.ndarray, model: LocalModel, tol: float = 1e-11,
                 fd_step: float = 1e-6) -> CycleReport:
    """Check consistency of the five re-anchored solutions at base point q.

    Solving from the first vertex and re-solving from each moved vertex
    must give the same parameters, and following the remaining edges must
    return to q. Also estimates det of each vertex relocation map by
    central differences and reports a nonzero verdict.
    """
    q = np.asarray(q, dtype=float)
    r1 = newton_solve(1, q, model, tol=tol)
    moved = [q + o for o in vertex_offsets_float(1, r1.y)]
    y_res, q_res, dets = [], [], []
    for i in range(1, 6):
        u = moved[i - 1]
        ri = newton_solve(i, u, model, tol=tol)
        y_res.append(float(np.max(np.abs(r1.y - ri.y))))
        back_idx = (7 - i - 1) % 5  # 0-based position of vertex 7-i
        back = u + vertex_offsets_float(i, ri.y)[back_idx]
        q_res.append(float(np.max(np.abs(back - q))))

        def vertex_map(qq, i=i):
            rr = newton_solve(1, qq, model, tol=tol)
            return vec_f(qq + vertex_offsets_float(1, rr.y)[i - 1])

        cols = []
        for k in range(8):
            e = unvec_f(np.eye(8)[k], 4)
            cols.append((vertex_map(q + fd_step * e) - vertex_map(q - fd_step * e))
                        / (2 * fd_step))
        dets.append(float(np.linalg.det(np.column_stack(cols))))
    max_res = max(max(y_res), max(q_res))
    return CycleReport(y_residuals=tuple(y_res), q_residuals=tuple(q_res),
                       vertex_map_dets=tuple(dets), max_residual=max_res,
                       dets_nonzero=all(abs(d) > 0 for d in dets))


def sample_ball(center: np.ndarray, radius: float, count: int,
                seed: int = 0) -> list:
    """Uniform samples from the Frobenius ball around a 4x2 center."""
    rng = random.Random(seed)
    center = np.asarray(center, dtype=float)
    out = []
    for _ in range(count):
        g = np.array([rng.gauss(0.0, 1.0) for _ in range(8)])
        norm = float(np.linalg.norm(g))
        if norm == 0.0:
            g[0], norm = 1.0, 1.0
        r = radius * rng.random() ** (1.0 / 8.0)
        out.append(center + unvec_f(g * (r / norm), 4))
    return out


@dataclass
class SigmaPoint:
    sample: int
    branch: int      # 1..5
    lam: float
    coords: tuple    # 8 floats, column-major


@dataclass
class SigmaSamples:
    points: list
    det_checks: list              # (sample, branch, lam, det)
    margin: float | None
    lambdas: tuple
    preimages: list = field(default_factory=list)


FULL_SEGMENT = tuple(k / 10.0 for k in range(1, 11))


def preimage(coords) -> tuple:
    """Gradient-pair (A, B) whose lift is the given 8-vector."""
    x = unvec_f(np.asarray(coords, dtype=float), 4)
    return x[:2, :], x[2:, :] @ J_INV_FLOAT


def sample_sigma(lam, qs, model: LocalModel, check_dets: bool = True,
                 with_preimages: bool = False, **newton_kw) -> SigmaSamples:
    """Sample the segment family between solved vertices and outer points.

    ``lam`` is a number in (0, 1], a sequence of such, or "full-segment"
    for a fixed ten-point subdivision. For each base sample Q and branch i
    the emitted point is ``lam * Xhat_i(Q) + (1 - lam) * Phat_i(Q)``. When
    ``check_dets`` is on, the determinant ``det(I + lam * Dz)`` at the
    moved vertex is recorded for every lambda, with the smallest absolute
    value reported as the margin.
    """
    if isinstance(lam, str):
        if lam not in ("full-segment", "full"):
            raise ValueError(f"unknown lambda mode {lam!r}")
        lambdas = FULL_SEGMENT
    elif isinstance(lam, (int, float)):
        lambdas = (float(lam),)
    else:
        lambdas = tuple(float(v) for v in lam)
    if not lambdas or any(not 0.0 < v <= 1.0 for v in lambdas):
        raise ValueError("lambda values must lie in (0, 1]")

    points, det_checks, preimages = [], [], []
    margin = None
    for s_idx, q in enumerate(qs):
        xs, ps, _ = hat_points(1, q, model, **newton_kw)
        for i in range(1, 6):
            vx, vp = vec_f(xs[i - 1]), vec_f(ps[i - 1])
            if check_dets:
                m = dz_matrix(i, ps[i - 1], model, **newton_kw)
            for lv in lambdas:
                coords = tuple(lv * vx + (1.0 - lv) * vp)
                points.append(SigmaPoint(sample=s_idx, branch=i, lam=lv,
                                         coords=coords))
                if with_preimages:
                    a, b = preimage(coords)
                    preimages.append((a.tolist(), b.tolist()))
                if check_dets:
                    det = float(np.linalg.det(np.eye(8) + lv * m))
                    det_checks.append((s_idx, i, lv, det))
                    margin = abs(det) if margin is None else min(margin, abs(det))
    return SigmaSamples(points=points, det_checks=det_checks, margin=margin,
                        lambdas=lambdas, preimages=preimages)
