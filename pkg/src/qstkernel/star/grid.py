"""Grid engine for the twisted product.

Symbols are sampled on a centred periodic grid ``x_j = (j - N/2) dx`` and
treated as trigonometric polynomials.  The dual grid ``k_m = (m - N/2) dk``
with ``dk = 2 pi / (N dx)`` carries Fourier coefficients in the convention
``fhat(k) = (2 pi)^-d int f(x) exp(-i k.x) dx``.
"""
from __future__ import annotations

import math
import warnings
from dataclasses import dataclass

import numpy as np

from ..core import PoincareTransform

DECAY_TOL = 1e-6


@dataclass(frozen=True)
class Grid:
    """Centred uniform grid with ``n`` points of spacing ``dx`` per axis."""

    n: int
    dx: float
    dim: int = 2

    def __post_init__(self):
        if self.n < 8 or self.n % 2:
            raise ValueError("grid size must be even and at least 8")
        if self.dx <= 0:
            raise ValueError("grid spacing must be positive")
        if self.dim < 1:
            raise ValueError("dimension must be positive")

    @classmethod
    def from_extent(cls, n, extent, dim=2):
        """Grid of ``n`` points covering the periodic box ``[-extent/2, extent/2)``."""
        return cls(n, extent / n, dim)

    @property
    def shape(self):
        return (self.n,) * self.dim

    @property
    def size(self):
        return self.n**self.dim

    @property
    def extent(self):
        return self.n * self.dx

    def axis(self):
        return (np.arange(self.n) - self.n // 2) * self.dx

    def points(self):
        """Grid points as an array of shape ``shape + (dim,)``."""
        ax = self.axis()
        return np.stack(np.meshgrid(*([ax] * self.dim), indexing="ij"), axis=-1)

    def dual(self):
        """Dual (momentum) grid."""
        return Grid(self.n, 2 * np.pi / (self.n * self.dx), self.dim)

    def boundary_mask(self):
        """Mask of the outermost shell of grid points."""
        idx = np.indices(self.shape)
        return np.any((idx == 0) | (idx == self.n - 1), axis=0)


@dataclass
class GridSymbol:
    """Samples of a symbol on a :class:`Grid`.

    ``domain`` is ``"x"`` for position-space samples and ``"k"`` for Fourier
    coefficients on the dual grid.
    """

    grid: Grid
    values: np.ndarray
    domain: str = "x"

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=complex)
        if self.values.shape != self.grid.shape:
            raise ValueError(f"values have shape {self.values.shape}, grid is {self.grid.shape}")
        if self.domain not in ("x", "k"):
            raise ValueError("domain must be 'x' or 'k'")

    @classmethod
    def sample(cls, fn, grid, check=True):
        """Sample a callable ``fn(points)`` on ``grid``."""
        sym = cls(grid, fn(grid.points()))
        if check:
            sym.check_decay()
        return sym

    @property
    def dim(self):
        return self.grid.dim

    def decay_ratio(self):
        """Largest boundary magnitude relative to the largest magnitude."""
        peak = np.max(np.abs(self.values))
        if peak == 0:
            return 0.0
        return float(np.max(np.abs(self.values[self.grid.boundary_mask()])) / peak)

    def check_decay(self, tol=DECAY_TOL):
        r = self.decay_ratio()
        if r > tol:
            raise ValueError(f"decay violation: boundary/peak = {r:.2e} > {tol:.0e}")
        return self

    def conj(self):
        if self.domain != "x":
            raise ValueError("conjugation is defined on position samples")
        return GridSymbol(self.grid, np.conj(self.values))

    def scale(self, s):
        return GridSymbol(self.grid, self.values * s, self.domain)

    def __call__(self, x):
        """Trigonometric interpolant at arbitrary points ``x`` (shape ``(..., d)``)."""
        if self.domain != "x":
            raise ValueError("evaluate position samples only")
        return evaluate_interpolant(fourier(self), x)


def _axes(d):
    return tuple(range(-d, 0))


def fourier(f):
    """Fourier coefficients of a position-space grid symbol."""
    if f.domain != "x":
        raise ValueError("expected a position-space symbol")
    g, d = f.grid, f.dim
    ax = _axes(d)
    out = np.fft.fftshift(np.fft.fftn(np.fft.ifftshift(f.values, axes=ax), axes=ax), axes=ax)
    return GridSymbol(g.dual(), out * (g.dx / (2 * np.pi)) ** d, "k")


def inverse_fourier(fh):
    """Position samples of the trigonometric polynomial with coefficients ``fh``."""
    if fh.domain != "k":
        raise ValueError("expected a Fourier-space symbol")
    k, d = fh.grid, fh.dim
    ax = _axes(d)
    out = np.fft.fftshift(np.fft.ifftn(np.fft.ifftshift(fh.values, axes=ax), axes=ax), axes=ax)
    return GridSymbol(k.dual(), out * (k.dx * k.n) ** d, "x")


def _ifft_centered(vals, d):
    ax = _axes(d)
    return np.fft.fftshift(np.fft.ifftn(np.fft.ifftshift(vals, axes=ax), axes=ax), axes=ax)


def _check_theta(theta, d):
    theta = np.asarray(theta, dtype=float)
    if theta.shape != (d, d):
        raise ValueError(f"theta must be {d}x{d}")
    if np.max(np.abs(theta + theta.T), initial=0.0) > 1e-12 * max(1.0, np.max(np.abs(theta))):
        raise ValueError("theta is not antisymmetric")
    return 0.5 * (theta - theta.T)


def _same_grid(f, g):
    if f.grid != g.grid:
        raise ValueError("symbols live on different grids")


def _significant(fh, rel=1e-16):
    flat = fh.values.reshape(-1)
    cut = rel * np.max(np.abs(flat))
    return np.nonzero(np.abs(flat) > cut)[0]


def star_product(f, g, theta, batch=128, check=True):
    """Twisted product of two grid symbols.

    Uses ``(f * g)(x) = int fhat(h) exp(i h.x) g(x + theta h / 2) dh`` with
    ``g`` shifted exactly through its trigonometric interpolant.  For
    trigonometric polynomials the result is exact at every grid point.
    """
    _same_grid(f, g)
    d = f.dim
    theta = _check_theta(theta, d)
    grid = f.grid
    fh, gh = fourier(f), fourier(g)
    kpts = fh.grid.points().reshape(-1, d)
    xpts = grid.points().reshape(-1, d)
    dk = fh.grid.dx
    idx = _significant(fh)
    out = np.zeros(grid.size, dtype=complex)
    gvals = gh.values.reshape(-1)
    for start in range(0, idx.size, batch):
        sel = idx[start : start + batch]
        h = kpts[sel]
        shifts = 0.5 * h @ theta.T
        # g evaluated at x + shift, for every shift in the batch
        spec = gvals[None, :] * np.exp(1j * shifts @ kpts.T)
        shifted = _ifft_centered(spec.reshape((-1,) + grid.shape), d).reshape(sel.size, -1)
        shifted *= (dk * grid.n) ** d
        weights = fh.values.reshape(-1)[sel] * dk**d
        out += np.einsum("b,bx,bx->x", weights, np.exp(1j * h @ xpts.T), shifted)
    res = GridSymbol(grid, out.reshape(grid.shape))
    if check and res.decay_ratio() > DECAY_TOL:
        warnings.warn(
            f"product violates the decay invariant (ratio {res.decay_ratio():.2e})",
            RuntimeWarning,
            stacklevel=2,
        )
    return res


def twisted_convolution(fh, gh, theta):
    """``(fh x gh)(k) = int fh(h) gh(k - h) exp(-i h.theta.k / 2) dh`` on the dual grid.

    Contributions with ``k - h`` off the grid are dropped (no wrap-around).
    """
    if fh.domain != "k" or gh.domain != "k":
        raise ValueError("twisted convolution acts on Fourier coefficients")
    _same_grid(fh, gh)
    d = fh.dim
    theta = _check_theta(theta, d)
    kg = fh.grid
    n = kg.n
    kpts = kg.points()
    out = np.zeros(kg.shape, dtype=complex)
    flat = fh.values.reshape(-1)
    for lin in _significant(fh):
        m = np.unravel_index(lin, kg.shape)
        off = [mi - n // 2 for mi in m]
        # gh(k - h) as an index shift with zero fill
        src, dst = [], []
        for o in off:
            if o >= 0:
                dst.append(slice(o, n))
                src.append(slice(0, n - o))
            else:
                dst.append(slice(0, n + o))
                src.append(slice(-o, n))
        h = kpts[tuple(m)]
        phase = np.exp(-0.5j * np.einsum("...j,j->...", kpts[tuple(dst)], h @ theta))
        out[tuple(dst)] += flat[lin] * gh.values[tuple(src)] * phase
    return GridSymbol(kg, out * kg.dx**d, "k")


def evaluate_interpolant(fh, x, chunk=2048):
    """Evaluate ``sum_k fhat(k) exp(i k.x) dk^d`` at arbitrary points."""
    d = fh.dim
    x = np.asarray(x, dtype=float)
    shape = x.shape[:-1]
    xs = x.reshape(-1, d)
    kpts = fh.grid.points().reshape(-1, d)
    coef = fh.values.reshape(-1) * fh.grid.dx**d
    out = np.empty(xs.shape[0], dtype=complex)
    for s in range(0, xs.shape[0], chunk):
        out[s : s + chunk] = np.exp(1j * xs[s : s + chunk] @ kpts.T) @ coef
    return out.reshape(shape)


def lorentz_pullback(f, L, check=True):
    """``f'(x) = f(Lambda^-1 (x - a))`` through spectral interpolation.

    Returns the transformed symbol and a bound on the interpolation error,
    taken as the spectral weight on the outermost Fourier shell relative to
    the peak coefficient.
    """
    if not isinstance(L, PoincareTransform):
        L = PoincareTransform(L)
    if L.dim != f.dim:
        raise ValueError("dimension mismatch between transform and symbol")
    fh = fourier(f)
    W = np.linalg.inv(L.Lambda)
    y = (f.grid.points() - L.a) @ W.T
    res = GridSymbol(f.grid, evaluate_interpolant(fh, y))
    peak = np.max(np.abs(fh.values))
    bound = float(np.max(np.abs(fh.values[fh.grid.boundary_mask()])) / peak) if peak else 0.0
    if check:
        res.check_decay()
    return res, bound


def derivative(f, mu):
    """Spectral partial derivative along axis ``mu``."""
    fh = fourier(f)
    k = fh.grid.points()[..., mu]
    return inverse_fourier(GridSymbol(fh.grid, 1j * k * fh.values, "k"))


def multi_derivative(f, alpha):
    """Spectral ``d^alpha f`` for a multi-index ``alpha``."""
    fh = fourier(f)
    kp = fh.grid.points()
    factor = np.ones(fh.grid.shape, dtype=complex)
    for mu, a in enumerate(alpha):
        factor *= (1j * kp[..., mu]) ** a
    return inverse_fourier(GridSymbol(fh.grid, factor * fh.values, "k"))


def moyal_terms(theta, order):
    """Multi-index expansion of ``(theta^{mu nu} d_mu (x) d_nu)^order``.

    Returns ``{(alpha, beta): coeff}`` with ``alpha`` acting on the first and
    ``beta`` on the second factor.
    """
    d = theta.shape[0]
    terms = {((0,) * d, (0,) * d): 1.0}
    for _ in range(order):
        nxt = {}
        for (al, be), c in terms.items():
            for mu in range(d):
                for nu in range(d):
                    t = theta[mu, nu]
                    if t == 0:
                        continue
                    a2 = list(al)
                    b2 = list(be)
                    a2[mu] += 1
                    b2[nu] += 1
                    key = (tuple(a2), tuple(b2))
                    nxt[key] = nxt.get(key, 0.0) + c * t
        terms = {k: v for k, v in nxt.items() if v != 0}
    return terms


def moyal_product(f, g, theta, order):
    """Truncated asymptotic expansion ``sum_j (i/2)^j / j! m((theta d x d)^j f x g)``."""
    _same_grid(f, g)
    if order < 0:
        raise ValueError("order must be non-negative")
    theta = _check_theta(theta, f.dim)
    out = np.zeros(f.grid.shape, dtype=complex)
    dcache = {}

    def deriv(sym, key, alpha):
        if (key, alpha) not in dcache:
            dcache[(key, alpha)] = multi_derivative(sym, alpha).values
        return dcache[(key, alpha)]

    for j in range(order + 1):
        pref = (0.5j) ** j / math.factorial(j)
        for (al, be), c in moyal_terms(theta, j).items():
            out += pref * c * deriv(f, 0, al) * deriv(g, 1, be)
    return GridSymbol(f.grid, out)


def moyal_order_fit(f, g, theta, order, scales=(0.4, 0.2, 0.1, 0.05)):
    """Log-log slope of the truncation error along ``t * theta``.

    Returns ``(slope, errors)`` with ``errors[i] = |moyal - star| / |star|``
    (discrete ``l2``) at ``t = scales[i]``; the expected slope is
    ``order + 1``.
    """
    theta = _check_theta(theta, f.dim)
    errors = []
    for t in scales:
        ref = star_product(f, g, t * theta, check=False).values
        mo = moyal_product(f, g, t * theta, order).values
        errors.append(float(np.linalg.norm(mo - ref) / np.linalg.norm(ref)))
    slope = np.polyfit(np.log(scales), np.log(errors), 1)[0]
    return float(slope), errors


def numerical_support(f, rel=1e-12):
    """Bounding box ``(lo, hi)`` of points where ``|f| > rel * max|f|``."""
    mag = np.abs(f.values)
    mask = mag > rel * mag.max()
    pts = f.grid.points()[mask]
    return pts.min(axis=0), pts.max(axis=0)


def supports_disjoint(f, g, rel=1e-12):
    lo1, hi1 = numerical_support(f, rel)
    lo2, hi2 = numerical_support(g, rel)
    return bool(np.any((hi1 < lo2) | (hi2 < lo1)))


def locality_probe(f, g, theta, order=4, rel=1e-12):
    """Compare the exact and truncated products of symbols with disjoint supports.

    Returns ``(sup_star, sup_moyal)``, both relative to ``max|f| max|g|``.
    The truncated expansion is local and vanishes up to the support
    threshold, while the exact product need not.
    """
    if not supports_disjoint(f, g, rel):
        raise ValueError("numerical supports of the two symbols overlap")
    scale = np.max(np.abs(f.values)) * np.max(np.abs(g.values))
    fg = star_product(f, g, theta, check=False)
    mo = moyal_product(f, g, theta, order)
    return float(np.max(np.abs(fg.values)) / scale), float(np.max(np.abs(mo.values)) / scale)
