"""Quantized spacetime coordinates: twisted products, operator
representations, uncertainty relations and quantum-geometry spectra.

Subpackages and modules
-----------------------
core
    Minkowski conventions, the antisymmetric tensor ``sigma`` and its
    invariants, Poincare transformations.
star
    Gaussian closed forms and the FFT grid engine for twisted products,
    Moyal expansions and twisted covariance.
weylalg
    Exact polynomial algebra with constant commutators.
rep
    Truncated oscillator representations, Weyl operators and the
    two-parameter family of spatial commutators.
bundle
    Fiberwise products over a finite sample of ``sigma`` and sharp-time
    conditional expectations.
localisation
    States, uncertainty relations, distance and volume operators.
io
    File containers for symbols, matrices, manifests and spectra.
"""
__version__ = "0.1.0"

from .core import (  # noqa: E402
    METRIC,
    S,
    PoincareTransform,
    invariant_1,
    invariant_2,
    is_in_orbit,
    lorentz_act_sigma,
    random_lorentz,
    theta_matrix,
)
from .star import GaussianSymbol, Grid, GridSymbol, star_product  # noqa: E402
from .weylalg import NCPolynomial, parse_polynomial, poly_star  # noqa: E402
from .rep import build_coordinates, timespace_classify  # noqa: E402

__all__ = [
    "METRIC",
    "S",
    "PoincareTransform",
    "invariant_1",
    "invariant_2",
    "is_in_orbit",
    "lorentz_act_sigma",
    "random_lorentz",
    "theta_matrix",
    "GaussianSymbol",
    "Grid",
    "GridSymbol",
    "star_product",
    "NCPolynomial",
    "parse_polynomial",
    "poly_star",
    "build_coordinates",
    "timespace_classify",
]
