"""Exception types shared across the toolkit."""


class T5CertError(Exception):
    """Base class for all toolkit errors."""


class SingularMatrix(T5CertError):
    """Exact inverse requested for a matrix with zero determinant."""


class DegenerateParameters(T5CertError):
    """A parameter point makes one of the closed-form denominators vanish.

    Carries the name of the vanishing expression so search drivers can log
    which degeneracy was hit.
    """

    def __init__(self, which: str):
        super().__init__(f"degenerate parameters: {which} = 0")
        self.which = which


class Ineq3Failed(T5CertError):
    """The strict pairwise inequality table has a non-negative slack."""


class EpsilonTooLarge(T5CertError):
    """Requested quadratic margin is at or beyond the exact feasibility bound."""


class Ineq1Failed(T5CertError):
    """Convex-interpolation condition violated for the prescribed jet."""


class DuplicatePoints(T5CertError):
    """Two configuration points share the same upper block."""


class BadMu(T5CertError):
    """Adjugate vector requested with the distinguished eigenvalue in {0, -1}."""


class StructureViolation(T5CertError):
    """Characteristic polynomial does not factor into the certified pattern."""


class SingularJacobian(T5CertError):
    """The 20x20 system Jacobian is singular (exactly, or numerically)."""


class MaxIterExceeded(T5CertError):
    """Newton iteration did not reach tolerance within the iteration budget."""

    def __init__(self, message: str, result=None):
        super().__init__(message)
        self.result = result


class OutOfTrustRegion(T5CertError):
    """A configuration point left the local model's trust region."""


class AmbiguousAnchor(T5CertError):
    """A configuration point sits inside two anchors' trust regions."""


class ConfigError(T5CertError):
    """Malformed run configuration or input file."""
