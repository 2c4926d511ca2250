"""Exact construction, search, and certification of special T5-configurations
on the gradient graphs of strongly polyconvex planar energies."""

__version__ = "0.1.0"

from . import errors, implicit, lpfeas, occert, polysupport, ratlin, tconfig, varjet
from .ratlin import RatMatrix, Rational, rat, rat_str
from .tconfig import ParameterVector, TauConfiguration
from .varjet import HessianSet

__all__ = [
    "__version__",
    "errors", "ratlin", "tconfig", "lpfeas", "polysupport", "varjet",
    "occert", "implicit",
    "RatMatrix", "Rational", "rat", "rat_str",
    "ParameterVector", "TauConfiguration", "HessianSet",
]
