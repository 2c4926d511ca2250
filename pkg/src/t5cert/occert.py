"""Openness-condition certification for a candidate Hessian assignment.

The finite checks certified here, for each cycle start nu = 1..5:

1. the 20x20 cycle Jacobian determinant is nonzero,
2. the induced 8x8 ray-derivative matrix M has characteristic polynomial
   ``l^a (l+1)^b (l - mu)`` with a >= 3, b >= 4 and simple ``mu = 4 + tr M``
   outside {-1, 0},
3. the adjugate vector ``adj(I - mu^{-1} M) z`` at the ray direction
   ``z = vec(kappa_nu C_nu)`` is nonzero (equivalently its squared length
   is), with ``adj(I - mu^{-1} M)`` of rank one.

All three are decided in exact rational arithmetic; the resulting
certificate records every intermediate value and is bit-reproducible.
"""

from __future__ import annotations

import functools
import itertools
import random
from dataclasses import dataclass
from fractions import Fraction

from . import polysupport, tconfig, varjet
from .errors import BadMu, SingularJacobian, StructureViolation
from .polysupport import SupportData
from .ratlin import (RatMatrix, adjugate, char_poly, determinant,
                     frobenius_inner, inverse, rank, rat_str, vec)
from .tconfig import ParameterVector
from .varjet import HessianSet


def m_matrix(nu: int, hessians: HessianSet,
             params: ParameterVector | None = None) -> RatMatrix:
    """The exact 8x8 ray-derivative matrix M for cycle start nu.

    ``M = -S_1 (dPsi/dY)^{-1} (dPsi/dQ)`` evaluated at the baseline
    parameter point (or another valid one) with the canonical cyclic tensor
    assignment. Raises SingularJacobian when the 20x20 Jacobian determinant
    vanishes.
    """
    params = ParameterVector.baseline() if params is None else params
    jet = varjet.assemble(nu, params, hessians)
    if determinant(jet.dPsi_dY) == 0:
        raise SingularJacobian(f"cycle Jacobian vanishes at nu={nu}")
    inv = inverse(jet.dPsi_dY)
    m = -1 * (jet.S[0] @ inv @ jet.dPsi_dQ)
    # Structural identities guaranteed by the construction; cheap to check
    # on every evaluation.
    r1 = jet.R[0]
    assert r1 @ (RatMatrix.identity(8) + m) == RatMatrix.zeros(4, 8)
    assert rank(m) <= 5
    return m


def _poly_divide_root(coeffs: tuple, root: Fraction):
    """Synthetic division by (l - root); returns (quotient, remainder)."""
    quot = [coeffs[0]]
    for c in coeffs[1:-1]:
        quot.append(c + root * quot[-1])
    rem = coeffs[-1] + root * quot[-1]
    return tuple(quot), rem


def _root_multiplicity(coeffs: tuple, root: Fraction):
    mult = 0
    while len(coeffs) > 1:
        quot, rem = _poly_divide_root(coeffs, root)
        if rem != 0:
            break
        coeffs = quot
        mult += 1
    return mult, coeffs


@dataclass(frozen=True)
class SpectralReport:
    """Eigenvalue multiplicities and the distinguished eigenvalue."""

    mu: Fraction
    mult_minus_one: int
    mult_zero: int
    factored: bool


def spectral(m: RatMatrix) -> SpectralReport:
    """Factor the characteristic polynomial over {0, -1, mu} exactly.

    ``mu`` is always reported as 4 + tr(m). Multiplicities of the roots 0
    and -1 are full algebraic multiplicities. ``factored`` records whether
    the polynomial equals ``l^a (l+1)^b (l - mu)``; a leftover factor that
    is neither a power of l, of (l+1), nor the single linear (l - mu)
    raises StructureViolation.
    """
    if not m.is_square:
        raise ValueError("square matrix required")
    mu = Fraction(4) + m.trace()
    coeffs = char_poly(m)
    mult_zero, rest = _root_multiplicity(coeffs, Fraction(0))
    mult_minus_one, rest = _root_multiplicity(rest, Fraction(-1))
    degree_left = len(rest) - 1
    if degree_left == 0:
        factored = (mu == 0 and mult_zero >= 1) or (mu == -1 and mult_minus_one >= 1)
    elif degree_left == 1:
        c = -rest[1]  # monic remainder l - c
        if c != mu:
            raise StructureViolation(
                f"characteristic polynomial has unexpected factor (l - {rat_str(c)})")
        factored = True
    else:
        raise StructureViolation(
            "characteristic polynomial has a factor of degree "
            f"{degree_left} outside {{0, -1, mu}}")
    return SpectralReport(mu=mu, mult_minus_one=mult_minus_one,
                          mult_zero=mult_zero, factored=factored)


def adjugate_vector(m: RatMatrix, z) -> tuple:
    """The vector ``adj(I - mu^{-1} m) z`` and the adjugate's exact rank.

    ``z`` may be an 8-entry column matrix or a plain sequence. Raises BadMu
    when ``mu = 4 + tr(m)`` lies in {0, -1}.
    """
    mu = Fraction(4) + m.trace()
    if mu == 0 or mu == -1:
        raise BadMu(f"distinguished eigenvalue mu = {rat_str(mu)} is inadmissible")
    if not isinstance(z, RatMatrix):
        z = RatMatrix.column(list(z))
    n = m.rows
    adj = adjugate(RatMatrix.identity(n) - (1 / mu) * m)
    return adj @ z, rank(adj)


def ray_direction(nu: int, params: ParameterVector | None = None) -> RatMatrix:
    """The vectorized scaled increment ``kappa_nu C_nu`` (8-entry column)."""
    params = ParameterVector.baseline() if params is None else params
    cmats = tconfig.build_rank_one(params)
    nu0 = tconfig._index0(nu, "nu")
    return vec(params.kappa[nu0] * cmats[nu0])


@dataclass(frozen=True)
class OCCertificate:
    """Full record of the openness-condition checks for one Hessian set."""

    parameters: ParameterVector
    hessians: HessianSet
    j_values: tuple            # five Fractions
    spectral: tuple            # five SpectralReport or None
    adj_vectors: tuple         # five 8-entry columns or None
    adj_ranks: tuple           # five ints or None
    adj_norms_squared: tuple   # five Fractions or None
    support: SupportData | None
    checks: dict
    passed: bool

    def to_dict(self) -> dict:
        def col(v):
            return [rat_str(x) for x in v.col(0)] if v is not None else None

        def spec(s):
            if s is None:
                return None
            return {"mu": rat_str(s.mu), "mult_minus_one": s.mult_minus_one,
                    "mult_zero": s.mult_zero, "factored": s.factored}

        return {
            "parameters": self.parameters.to_strings(),
            "hessians": [[[rat_str(x) for x in row] for row in h.tolist()]
                         for h in self.hessians.matrices],
            "jacobian_values": [rat_str(v) for v in self.j_values],
            "spectral": [spec(s) for s in self.spectral],
            "adjugate_vectors": [col(v) for v in self.adj_vectors],
            "adjugate_ranks": list(self.adj_ranks),
            "adjugate_norms_squared": [rat_str(v) if v is not None else None
                                       for v in self.adj_norms_squared],
            "support": self.support.to_dict() if self.support else None,
            "checks": {k: list(v) if isinstance(v, tuple) else v
                       for k, v in self.checks.items()},
            "passed": self.passed,
        }


def verify_support(config, support: SupportData) -> bool:
    """Re-run the exact support checks for an existing jet record."""
    try:
        polysupport.support_jet(config, support.c, support.d, support.epsilon)
    except Exception:
        return False
    recomputed = polysupport.support_jet(config, support.c, support.d,
                                         support.epsilon)
    return recomputed.qgrad == support.qgrad


def certify(params: ParameterVector, hessians: HessianSet,
            support: SupportData | None = None,
            allow_kappa_le_1: bool = False) -> OCCertificate:
    """Run every openness-condition check and assemble the certificate.

    Individual check failures are recorded in the certificate, never
    raised; the overall verdict requires all five cycle Jacobians nonzero,
    all five distinguished eigenvalues outside {-1, 0}, all five adjugate
    vectors nonzero, a structurally valid configuration, and (when a jet is
    attached) verified support data.
    """
    config = tconfig.configuration(params)
    validity = tconfig.validate(config, allow_kappa_le_1=allow_kappa_le_1)
    support_ok = verify_support(config, support) if support is not None else None

    j_values, spectra, vectors, ranks, norms = [], [], [], [], []
    jac_ok, mu_ok, adj_ok = [], [], []
    for nu in range(1, 6):
        jv = varjet.j_nu(nu, hessians) if params == ParameterVector.baseline() \
            else determinant(varjet.assemble(nu, params, hessians).dPsi_dY)
        j_values.append(jv)
        if jv == 0:
            jac_ok.append(False)
            mu_ok.append(False)
            adj_ok.append(False)
            spectra.append(None)
            vectors.append(None)
            ranks.append(None)
            norms.append(None)
            continue
        jac_ok.append(True)
        m = m_matrix(nu, hessians, params)
        report = spectral(m)
        spectra.append(report)
        if report.mu == 0 or report.mu == -1:
            mu_ok.append(False)
            adj_ok.append(False)
            vectors.append(None)
            ranks.append(None)
            norms.append(None)
            continue
        mu_ok.append(True)
        z = ray_direction(nu, params)
        bvec, adj_rank = adjugate_vector(m, z)
        norm_sq = frobenius_inner(bvec, bvec)
        vectors.append(bvec)
        ranks.append(adj_rank)
        norms.append(norm_sq)
        adj_ok.append(norm_sq != 0)

    checks = {
        "configuration_valid": validity.passed,
        "support_verified": support_ok,
        "jacobian_nonzero": tuple(jac_ok),
        "mu_admissible": tuple(mu_ok),
        "adjugate_nonzero": tuple(adj_ok),
    }
    passed = (validity.passed and all(jac_ok) and all(mu_ok) and all(adj_ok)
              and (support_ok is None or support_ok))
    return OCCertificate(parameters=params, hessians=hessians,
                         j_values=tuple(j_values), spectral=tuple(spectra),
                         adj_vectors=tuple(vectors), adj_ranks=tuple(ranks),
                         adj_norms_squared=tuple(norms), support=support,
                         checks=checks, passed=passed)


def _random_symmetric(rng: random.Random, scale: int = 3) -> RatMatrix:
    entries = [[Fraction(0)] * 4 for _ in range(4)]
    for i in range(4):
        for j in range(i, 4):
            v = Fraction(rng.randint(-scale, scale), rng.randint(1, 4))
            entries[i][j] = v
            entries[j][i] = v
    return RatMatrix(entries)


def find_admissible_hessians(seed: int = 0, max_tries: int = 200,
                             params: ParameterVector | None = None) -> HessianSet:
    """Search for a Hessian set passing every certification check.

    Candidates start from the identity set and convex combinations of the
    probe tensors, then move to small random symmetric perturbations of the
    identity. Deterministic for a fixed seed.
    """
    params = ParameterVector.baseline() if params is None else params
    rng = random.Random(seed)

    def candidates():
        yield HessianSet.identity()
        for s, t in itertools.product((1, 2, Fraction(1, 2)), repeat=2):
            yield varjet.test_tensor_set(s, t)
        while True:
            base = HessianSet.identity()
            yield HessianSet(tuple(
                base.matrices[k] + Fraction(1, 8) * _random_symmetric(rng)
                for k in range(5)))

    for i, h in enumerate(candidates()):
        if i >= max_tries:
            break
        cert = certify(params, h)
        if cert.passed:
            return h
    raise RuntimeError(f"no admissible Hessian set found in {max_tries} tries")


@functools.lru_cache(maxsize=1)
def default_certified_hessians() -> HessianSet:
    """The toolkit's canonical admissible Hessian set (deterministic)."""
    return find_admissible_hessians(seed=0)
