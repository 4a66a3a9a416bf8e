"""Generalized symbols over finite samples of commutator tensors.

A generalized symbol assigns to each sampled ``sigma`` a fiber symbol
``f(sigma; x)``.  Products are taken fiberwise with ``theta = lam^2 sigma``,
Poincare transformations move both the sample points (``sigma -> Lambda
sigma Lambda^T``) and the fibers, and states combine per-``sigma`` states of
the fiber representation with probability weights.

Fibers may be Gaussian-class symbols, grid symbols, or plain numbers.  A
number stands for a fiber that does not depend on ``x``; it acts as a
central multiplier (it is not integrable, so slice integrals reject it).
"""
from __future__ import annotations

import numbers
from dataclasses import dataclass, field

import numpy as np
import scipy.linalg

from .core import (
    S,
    PoincareTransform,
    as_antisymmetric,
    is_in_orbit,
    random_lorentz,
    random_rotation,
)
from .rep import build_coordinates, weyl_quantize
from .star import star_product
from .star.gaussian import GaussianSum, GaussianSymbol, gaussian_integral, sqrt_det
from .star.grid import Grid, GridSymbol, fourier as grid_fourier
from .star.grid import lorentz_pullback as grid_pullback

SAMPLE_TOL = 1e-10


def darboux_frame(sigma, tol=1e-10):
    """Real ``Lambda`` with ``Lambda S Lambda^T = sigma`` for nondegenerate ``sigma``.

    Built from the real Schur form, which block-diagonalizes an
    antisymmetric matrix by an orthogonal change of basis.
    """
    sigma = as_antisymmetric(sigma, tol=1e-8)
    T, Z = scipy.linalg.schur(sigma, output="real")
    G = np.zeros((4, 4))
    for blk in (0, 2):
        t = T[blk, blk + 1]
        if abs(t) < tol:
            raise ValueError("sigma is degenerate")
        s = np.sqrt(abs(t))
        # [[0, t], [-t, 0]] = -t J0 with J0 = [[0, -1], [1, 0]]; a swap flips J0
        if t < 0:
            G[blk:blk + 2, blk:blk + 2] = s * np.eye(2)
        else:
            G[blk:blk + 2, blk:blk + 2] = s * np.array([[0.0, 1.0], [1.0, 0.0]])
    # S = Pi^T blockdiag(J0, J0) Pi with the mode pairs (0, 2), (1, 3)
    Pi = np.zeros((4, 4))
    for row, col in enumerate((0, 2, 1, 3)):
        Pi[row, col] = 1.0
    Lambda = Z @ G @ Pi
    if np.max(np.abs(Lambda @ S @ Lambda.T - sigma)) > 1e-8 * max(1.0, np.max(np.abs(sigma))):
        raise ValueError("frame construction failed")
    return Lambda


@dataclass
class SigmaSample:
    """Finite sample of points of one orbit, with weights and frames.

    ``frames[i]`` satisfies ``frames[i] S frames[i]^T = points[i]``.
    """

    points: np.ndarray
    weights: np.ndarray = None
    orbit: str = "sigma"
    frames: np.ndarray = None

    def __post_init__(self):
        pts = np.asarray(self.points, dtype=float)
        if pts.ndim == 2:
            pts = pts[None]
        self.points = pts
        m = len(pts)
        if self.weights is None:
            self.weights = np.full(m, 1.0 / m)
        self.weights = np.asarray(self.weights, dtype=float)
        if self.weights.shape != (m,) or np.any(self.weights < 0):
            raise ValueError("weights must be non-negative, one per point")
        for p in pts:
            if not is_in_orbit(p, self.orbit, tol=1e-8 * max(1.0, np.max(np.abs(p)))):
                raise ValueError(f"sample point is not in orbit {self.orbit!r}")
        if self.frames is None and self.orbit != "sigma_conf":
            self.frames = np.array([darboux_frame(p) for p in pts])

    def __len__(self):
        return len(self.points)

    @classmethod
    def single(cls, sigma=S, orbit="sigma"):
        return cls(np.asarray(sigma)[None], orbit=orbit)

    @classmethod
    def sigma1(cls, n, seed):
        """Rotated copies of ``S`` (the rotation sub-orbit)."""
        frames = np.array([random_rotation(seed * 100003 + i).Lambda for i in range(n)])
        points = np.einsum("iab,bc,idc->iad", frames, S, frames)
        return cls(points, orbit="sigma1", frames=frames)

    @classmethod
    def boosted(cls, n, seed, rapidity_max=1.0):
        frames = np.array([random_lorentz(seed * 100003 + i, rapidity_max).Lambda for i in range(n)])
        points = np.einsum("iab,bc,idc->iad", frames, S, frames)
        return cls(points, orbit="sigma", frames=frames)

    def normalized(self):
        total = self.weights.sum()
        if total <= 0:
            raise ValueError("weights sum to zero")
        return SigmaSample(self.points, self.weights / total, self.orbit, self.frames)

    def matches(self, other, tol=SAMPLE_TOL):
        return len(self) == len(other) and np.allclose(self.points, other.points, atol=tol, rtol=0)

    def pushforward(self, L):
        """Image sample ``Lambda sigma Lambda^T`` with frames ``Lambda F``."""
        L = L if isinstance(L, PoincareTransform) else PoincareTransform(L)
        L.validate()
        Lam = L.Lambda
        pts = np.einsum("ab,ibc,dc->iad", Lam, self.points, Lam)
        pts = 0.5 * (pts - np.swapaxes(pts, 1, 2))
        frames = None if self.frames is None else np.einsum("ab,ibc->iac", Lam, self.frames)
        # rotations and parity keep the rotation sub-orbit, boosts leave it
        orbit = self.orbit
        if orbit == "sigma1" and not _is_rotation(Lam):
            orbit = "sigma"
        return SigmaSample(pts, self.weights.copy(), orbit, frames)


def _is_rotation(Lam, tol=1e-10):
    return abs(Lam[0, 0] - 1.0) < tol and np.allclose(Lam[0, 1:], 0, atol=tol) and np.allclose(Lam[1:, 0], 0, atol=tol)


def _is_scalar(f):
    return isinstance(f, numbers.Number)


@dataclass
class GeneralizedSymbol:
    """One fiber symbol per sample point."""

    sample: SigmaSample
    fibers: list = field(default_factory=list)

    def __post_init__(self):
        self.fibers = list(self.fibers)
        if len(self.fibers) != len(self.sample):
            raise ValueError("one fiber per sample point required")
        dims = {f.dim for f in self.fibers if not _is_scalar(f)}
        if len(dims) > 1:
            raise ValueError("fibers have different dimensions")

    @classmethod
    def constant(cls, sample, fiber):
        """The same fiber at every ``sigma``."""
        return cls(sample, [fiber] * len(sample))

    @classmethod
    def central(cls, sample, values):
        """Fibers independent of ``x`` (central multipliers)."""
        values = np.broadcast_to(np.asarray(values, dtype=complex), (len(sample),))
        return cls(sample, [complex(v) for v in values])

    @classmethod
    def from_function(cls, sample, fn):
        """``fn(sigma) -> fiber``."""
        return cls(sample, [fn(p) for p in sample.points])

    def __len__(self):
        return len(self.fibers)

    def restrict(self, i):
        """The single-point generalized symbol at sample index ``i``."""
        sub = SigmaSample(self.sample.points[i:i + 1], np.ones(1), self.sample.orbit,
                          None if self.sample.frames is None else self.sample.frames[i:i + 1])
        return GeneralizedSymbol(sub, [self.fibers[i]])

    def conj(self):
        return GeneralizedSymbol(self.sample, [np.conj(f) if _is_scalar(f) else f.conj() for f in self.fibers])

    def scale(self, s):
        return GeneralizedSymbol(self.sample, [f * s if _is_scalar(f) else f.scale(s) for f in self.fibers])

    def __add__(self, other):
        _check_samples(self, other)
        return GeneralizedSymbol(self.sample, [_add(f, g) for f, g in zip(self.fibers, other.fibers)])

    def __call__(self, x):
        """Fiber values at ``x`` (one row per sample point)."""
        x = np.asarray(x, float)
        shape = x.shape[:-1]
        return np.array([np.full(shape, f, dtype=complex) if _is_scalar(f) else f(x) for f in self.fibers])


def _add(f, g):
    if _is_scalar(f) and _is_scalar(g):
        return f + g
    if _is_scalar(f) or _is_scalar(g):
        raise TypeError("cannot add a central fiber to an integrable fiber")
    if isinstance(f, GridSymbol):
        if not isinstance(g, GridSymbol) or f.grid != g.grid:
            raise TypeError("grid fibers must share a grid")
        return GridSymbol(f.grid, f.values + g.values, f.domain)
    terms = []
    for h in (f, g):
        terms.extend(h.terms if isinstance(h, GaussianSum) else [h])
    return GaussianSum(terms)


def _check_samples(f, g):
    if not f.sample.matches(g.sample):
        raise ValueError("generalized symbols live on different samples")


def _fiber_star(f, g, theta):
    if _is_scalar(f) and _is_scalar(g):
        return f * g
    if _is_scalar(f):
        return g.scale(f)
    if _is_scalar(g):
        return f.scale(g)
    return star_product(f, g, theta)


def fiberwise_star(f, g, lam=1.0):
    """``(f * g)(sigma) = f(sigma) *_{lam^2 sigma} g(sigma)``."""
    _check_samples(f, g)
    out = [
        _fiber_star(a, b, lam**2 * sigma)
        for a, b, sigma in zip(f.fibers, g.fibers, f.sample.points)
    ]
    return GeneralizedSymbol(f.sample, out)


def _pull_fiber(fiber, L, check=True):
    if _is_scalar(fiber):
        return fiber
    if isinstance(fiber, GridSymbol):
        return grid_pullback(fiber, L, check=check)[0]
    return fiber.pullback(L)


def poincare_action(L, f, check=True):
    """``(gamma(L) f)(Lambda sigma Lambda^T; x') = det(Lambda) f(sigma; x)`` with ``x' = L x``."""
    L = L if isinstance(L, PoincareTransform) else PoincareTransform(L)
    sample = f.sample.pushforward(L)
    det = float(L.det)
    fibers = []
    for fib in f.fibers:
        g = _pull_fiber(fib, L, check)
        fibers.append(g * det if _is_scalar(g) else g.scale(det))
    return GeneralizedSymbol(sample, fibers)


def action_covariance_defect(L, f, g, lam=1.0, points=None):
    """Relative defect of ``gamma(L)(f * g) = det(Lambda) gamma(L) f * gamma(L) g``.

    Returns ``(defect, defect_without_det)``; the second compares with the
    product of the transformed factors without the ``det`` factor.
    """
    from .star.gaussian import relative_difference, sample_points

    L = L if isinstance(L, PoincareTransform) else PoincareTransform(L)
    lhs = poincare_action(L, fiberwise_star(f, g, lam))
    rhs = fiberwise_star(poincare_action(L, f), poincare_action(L, g), lam)
    det = float(L.det)
    d = next(fb.dim for fb in f.fibers if not _is_scalar(fb))
    pts = sample_points(d, spread=2.0) if points is None else points
    with_det = max(relative_difference(a, b.scale(det), pts) for a, b in zip(lhs.fibers, rhs.fibers))
    plain = max(relative_difference(a, b, pts) for a, b in zip(lhs.fibers, rhs.fibers))
    return with_det, plain


# ------------------------------------------------------ conditional expectation


def _grid_slice(f, t, axis=0):
    grid = f.grid
    half = grid.extent / 2
    if not -half <= t < half:
        raise ValueError(f"slice t={t} outside the grid extent [{-half}, {half})")
    fh = grid_fourier(f)
    c = grid.n // 2
    idx = [c] * grid.dim
    idx[axis] = slice(None)
    line = fh.values[tuple(idx)]
    k = fh.grid.axis()
    dk = fh.grid.dx
    return complex(np.sum(line * np.exp(1j * k * t)) * dk * (2 * np.pi) ** (grid.dim - 1))


def slice_integral(fiber, t, axis=0):
    """``int fiber(x) delta(x^axis - t) dx``."""
    if _is_scalar(fiber):
        raise ValueError("central fibers are not integrable over a slice")
    if isinstance(fiber, GridSymbol):
        return _grid_slice(fiber, t, axis)
    return complex(fiber.slice_integral(t, axis))


def conditional_expectation(f, t, axis=0):
    """Per-sample-point slice integrals at time ``t``."""
    return np.array([slice_integral(fib, t, axis) for fib in f.fibers])


def slice_quadrature(fiber, t, extent=16.0, n=96, axis=0):
    """Trapezoidal slice integral on a uniform grid (reference oracle)."""
    d = fiber.dim
    ax = (np.arange(n) - n // 2) * (extent / n)
    grids = np.meshgrid(*([ax] * (d - 1)), indexing="ij")
    pts = np.zeros(grids[0].shape + (d,))
    rest = [i for i in range(d) if i != axis]
    for j, i in enumerate(rest):
        pts[..., i] = grids[j]
    pts[..., axis] = t
    return complex(np.sum(fiber(pts)) * (extent / n) ** (d - 1))


def gaussian_inner(f, g):
    """``int conj(f) g dx`` for Gaussian or Gaussian-sum fibers."""
    fs = f.terms if isinstance(f, GaussianSum) else (f,)
    gs = g.terms if isinstance(g, GaussianSum) else (g,)
    total = 0j
    for a in fs:
        for b in gs:
            if not (isinstance(a, GaussianSymbol) and isinstance(b, GaussianSymbol)):
                raise TypeError("inner products need plain Gaussian terms")
            M = np.conj(a.A) + b.A
            beta = np.conj(a.b) + b.b
            total += np.conj(a.c) * b.c * np.exp(gaussian_integral(M, beta))
    return complex(total)


def fiber_norm_sq(fiber):
    if isinstance(fiber, GridSymbol):
        return float(np.sum(np.abs(fiber.values) ** 2) * fiber.grid.dx**fiber.grid.dim)
    return gaussian_inner(fiber, fiber).real


def positivity_scan(f, ts, lam=1.0):
    """Minimum of ``Re E_t(conj(f) * f)`` relative to ``max |f|^2`` and the worst imaginary part."""
    h = fiberwise_star(f.conj(), f, lam)
    norm = max(fiber_norm_sq(fb) for fb in f.fibers)
    vals = np.array([conditional_expectation(h, t) for t in ts])
    return {
        "min_real": float(vals.real.min()),
        "max_abs_imag": float(np.abs(vals.imag).max()),
        "norm_sq": norm,
        "relative_min": float(vals.real.min() / norm),
        "passed": bool(vals.real.min() >= -1e-8 * norm),
    }


def negativity_witness(f, points, lam=1.0):
    """Search for ``Re (conj(f) * f)(sigma; a) < 0`` over sample points and ``points``.

    Returns the most negative value relative to ``max |f|^2`` together
    with the sample index and the point.
    """
    h = fiberwise_star(f.conj(), f, lam)
    vals = h(np.asarray(points, float)).real
    norm = max(fiber_norm_sq(fb) for fb in f.fibers)
    i, j = np.unravel_index(np.argmin(vals), vals.shape)
    return {
        "value": float(vals[i, j]),
        "relative": float(vals[i, j] / norm),
        "sigma_index": int(i),
        "point": np.asarray(points)[j].tolist(),
        "found": bool(vals[i, j] < 0),
    }


# ------------------------------------------------------------- states


@dataclass
class BundleState:
    """Weighted per-``sigma`` states of the fiber representation."""

    sample: SigmaSample
    states: list
    lam: float = 1.0

    def __post_init__(self):
        if len(self.states) != len(self.sample):
            raise ValueError("one fiber state per sample point required")
        w = self.sample.weights
        if abs(w.sum() - 1.0) > 1e-12:
            raise ValueError("state weights must sum to one")
        N = {s.space.N for s in self.states}
        if len(N) != 1 or any(s.space.modes != 2 for s in self.states):
            raise ValueError("fiber states must share a two-mode truncation")

    @property
    def N(self):
        return self.states[0].space.N

    def coordinates(self, i):
        return build_coordinates(self.sample.frames[i], self.lam, self.N)


def default_kgrid(lam=1.0):
    """Quadrature grid for Gaussian fibers of unit width (in ``kappa`` variables)."""
    return Grid.from_extent(20, 16.0 * lam, 4)


def fiber_expectation(fiber, state, coords, kgrid):
    """``<Q(fiber)>`` in ``state`` via Weyl quantization."""
    if _is_scalar(fiber):
        return complex(fiber)
    Q = weyl_quantize(fiber, coords, kgrid)
    return state.expect(Q)


def gaussian_state_expectation(fiber, mean, cov):
    """``<Q(f)>`` in a Gaussian state with coordinate ``mean`` and symmetric ``cov``.

    In such a state ``<W(k)> = exp(i k.mean - k.cov.k / 2)``, so the
    expectation is the integral of ``f`` against the normal density.
    """
    if _is_scalar(fiber):
        return complex(fiber)
    terms = fiber.terms if isinstance(fiber, GaussianSum) else (fiber,)
    Ci = np.linalg.inv(cov)
    d = len(mean)
    norm = -0.5 * d * np.log(2 * np.pi) - np.log(sqrt_det(cov)) - 0.5 * mean @ Ci @ mean
    total = 0j
    for g in terms:
        if not isinstance(g, GaussianSymbol):
            raise TypeError("closed-form state expectation needs plain Gaussian terms")
        total += g.c * np.exp(norm + gaussian_integral(g.A + Ci, g.b + Ci @ mean))
    return complex(total)


def evaluate_state(omega, f, kgrid=None):
    """``sum_sigma w_sigma <Q_sigma(f(sigma))>_sigma``."""
    if not omega.sample.matches(f.sample):
        raise ValueError("state and symbol live on different samples")
    kgrid = default_kgrid(omega.lam) if kgrid is None else kgrid
    total = 0j
    for i, (w, fib, st) in enumerate(zip(omega.sample.weights, f.fibers, omega.states)):
        if w == 0:
            continue
        coords = None if _is_scalar(fib) else omega.coordinates(i)
        total += w * fiber_expectation(fib, st, coords, kgrid)
    return complex(total)


__all__ = [
    "BundleState",
    "GeneralizedSymbol",
    "SigmaSample",
    "action_covariance_defect",
    "conditional_expectation",
    "darboux_frame",
    "default_kgrid",
    "evaluate_state",
    "fiber_expectation",
    "fiber_norm_sq",
    "fiberwise_star",
    "gaussian_inner",
    "gaussian_state_expectation",
    "negativity_witness",
    "poincare_action",
    "positivity_scan",
    "slice_integral",
    "slice_quadrature",
]
