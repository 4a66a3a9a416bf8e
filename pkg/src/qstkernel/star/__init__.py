"""Symbols, twisted products and twisted covariance.

The public functions dispatch on the symbol representation: Gaussian-class
symbols use exact closed forms, grid symbols use the FFT engine.
"""
import numpy as np

from ..core import PoincareTransform, as_antisymmetric, lorentz_act_sigma
from . import grid as _grid
from .gaussian import (
    AffineGaussian,
    GaussianSum,
    GaussianSymbol,
    relative_difference,
    sample_points,
    star_product_gaussian,
)
from .grid import (
    Grid,
    GridSymbol,
    locality_probe,
    moyal_product,
    moyal_terms,
    supports_disjoint,
    twisted_convolution,
)
from .twist import (
    TwoSlotSymbol,
    coassociativity_probe,
    multiply,
    twist_operator,
    twisted_action,
    untwisted_action,
)

_GAUSSIAN = (GaussianSymbol, AffineGaussian, GaussianSum)


def _is_gaussian(f):
    return isinstance(f, _GAUSSIAN)


def fourier(f):
    """Fourier transform ``fhat(k) = (2 pi)^-d int f(x) exp(-i k.x) dx``."""
    if isinstance(f, GaussianSymbol):
        return f.fourier()
    if isinstance(f, GridSymbol):
        f.check_decay()
        return _grid.fourier(f)
    raise TypeError(f"no Fourier transform for {type(f).__name__}")


def inverse_fourier(fh):
    if isinstance(fh, GaussianSymbol):
        return fh.inverse_fourier()
    if isinstance(fh, GridSymbol):
        return _grid.inverse_fourier(fh)
    raise TypeError(f"no inverse Fourier transform for {type(fh).__name__}")


def star_product(f, g, theta, check=True):
    """Twisted product ``f * g`` for the commutator matrix ``theta``."""
    if _is_gaussian(f) and _is_gaussian(g):
        return star_product_gaussian(f, g, theta, check=check)
    if isinstance(f, GridSymbol) and isinstance(g, GridSymbol):
        return _grid.star_product(f, g, theta, check=check)
    raise TypeError("both symbols must be Gaussian-class or both grid symbols")


def lorentz_pullback(f, L, check=True):
    """``f'(x) = f(Lambda^-1 (x - a))``.

    Gaussian-class symbols are transformed exactly; grid symbols return a
    ``(symbol, interpolation_error_bound)`` pair.
    """
    if _is_gaussian(f):
        return f.pullback(L)
    if isinstance(f, GridSymbol):
        return _grid.lorentz_pullback(f, L, check=check)
    raise TypeError(f"cannot transform {type(f).__name__}")


def derivative(f, mu):
    """Partial derivative along coordinate ``mu``."""
    if isinstance(f, (GaussianSymbol, GaussianSum)):
        return f.derivative(mu)
    if isinstance(f, GridSymbol):
        return _grid.derivative(f, mu)
    raise TypeError(f"cannot differentiate {type(f).__name__}")


def covariance_defect(f, g, sigma, L, points=None):
    """Relative defects of the transformed and fixed twisted products.

    Returns ``(transformed, fixed)`` where ``transformed`` compares
    ``f' *_{sigma'} g'`` with ``(f *_sigma g)'`` and ``fixed`` compares
    ``f' *_sigma g'`` with the same reference.  Both are relative discrete
    ``l2`` norms over deterministic sample points.
    """
    if not (_is_gaussian(f) and _is_gaussian(g)):
        raise TypeError("covariance_defect uses the exact Gaussian path")
    if not isinstance(L, PoincareTransform):
        L = PoincareTransform(L)
    sigma = as_antisymmetric(sigma)
    if sigma.shape[0] == 4:
        sigma_t = lorentz_act_sigma(L, sigma)
    else:
        L.validate()
        out = L.Lambda @ sigma @ L.Lambda.T
        sigma_t = 0.5 * (out - out.T)
    if points is None:
        points = sample_points(f.dim, spread=2.0)
    reference = star_product(f, g, sigma).pullback(L)
    fp, gp = f.pullback(L), g.pullback(L)
    transformed = relative_difference(star_product(fp, gp, sigma_t), reference, points)
    fixed = relative_difference(star_product(fp, gp, sigma), reference, points)
    return transformed, fixed


__all__ = [
    "AffineGaussian",
    "GaussianSum",
    "GaussianSymbol",
    "Grid",
    "GridSymbol",
    "TwoSlotSymbol",
    "coassociativity_probe",
    "covariance_defect",
    "derivative",
    "fourier",
    "inverse_fourier",
    "locality_probe",
    "lorentz_pullback",
    "moyal_product",
    "moyal_terms",
    "multiply",
    "relative_difference",
    "sample_points",
    "star_product",
    "star_product_gaussian",
    "supports_disjoint",
    "twist_operator",
    "twisted_action",
    "twisted_convolution",
    "untwisted_action",
]

del np
