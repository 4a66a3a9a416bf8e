"""Closed-form calculus on complex Gaussians.

A :class:`GaussianSymbol` represents ``f(x) = c exp(-x.A.x/2 + b.x)`` with
``A`` complex symmetric and ``Re A`` positive definite.  The class is closed
under the Fourier transform, affine pullbacks and the twisted product, so it
provides exact reference values for the grid engine.

Derivatives of Gaussians are carried by :class:`AffineGaussian`
(``(p0 + p.x) G(x)``); finite linear combinations by :class:`GaussianSum`.

Fourier convention: ``fhat(k) = (2 pi)^-d int f(x) exp(-i k.x) dx`` with the
inverse ``f(x) = int fhat(k) exp(i k.x) dk``.
"""
from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np

from ..core import PoincareTransform


def sqrt_det(M):
    """Analytic branch of ``det(M)^(1/2)`` for ``Re M`` positive definite.

    Every eigenvalue of such a matrix lies in the open right half plane, so
    the product of principal square roots is continuous on the whole class
    and equals the positive root for real ``M``.
    """
    return np.prod(np.sqrt(np.linalg.eigvals(M).astype(complex)))


def _sym(A):
    A = np.asarray(A, dtype=complex)
    return 0.5 * (A + A.T)


def re_min_eig(A):
    """Smallest eigenvalue of ``Re A``."""
    return float(np.linalg.eigvalsh(np.real(_sym(A)))[0])


def gaussian_integral(M, beta):
    """``log`` of ``int exp(-u.M.u/2 + beta.u) du`` over ``R^n``."""
    n = M.shape[0]
    Minv_beta = np.linalg.solve(M, beta)
    return 0.5 * n * np.log(2 * np.pi) - np.log(sqrt_det(M)) + 0.5 * beta @ Minv_beta


@dataclass(frozen=True)
class GaussianSymbol:
    """``c * exp(-x.A.x/2 + b.x)``."""

    c: complex
    A: np.ndarray
    b: np.ndarray

    def __init__(self, c, A, b=None, check=True):
        A = _sym(np.atleast_2d(A))
        d = A.shape[0]
        b = np.zeros(d, dtype=complex) if b is None else np.asarray(b, dtype=complex)
        if b.shape != (d,):
            raise ValueError("linear term has the wrong shape")
        object.__setattr__(self, "c", complex(c))
        object.__setattr__(self, "A", A)
        object.__setattr__(self, "b", b)
        if check and re_min_eig(A) <= 0:
            raise ValueError("Re(A) is not positive definite")

    @property
    def dim(self):
        return self.A.shape[0]

    @classmethod
    def isotropic(cls, dim, width=1.0, center=None, momentum=None, amplitude=1.0):
        """``amplitude * exp(-|x - center|^2 / (2 width^2) + i momentum.(x - center))``."""
        A = np.eye(dim) / width**2
        center = np.zeros(dim) if center is None else np.asarray(center, float)
        momentum = np.zeros(dim) if momentum is None else np.asarray(momentum, float)
        b = A @ center + 1j * momentum
        logc = -0.5 * center @ A @ center - 1j * momentum @ center
        return cls(amplitude * np.exp(logc), A, b)

    @classmethod
    def random(cls, rng, dim, scale=1.0, complex_form=True):
        """Random Gaussian with ``Re A`` well conditioned around ``1/scale^2``."""
        X = rng.normal(size=(dim, dim)) * 0.3
        ReA = (np.eye(dim) + X @ X.T) / scale**2
        A = ReA.astype(complex)
        if complex_form:
            Y = rng.normal(size=(dim, dim)) * 0.2
            A = A + 1j * (Y + Y.T) / scale**2
        b = (rng.normal(size=dim) + 1j * rng.normal(size=dim)) * 0.5 / scale
        c = rng.normal() + 1j * rng.normal()
        return cls(c, A, b)

    def __call__(self, x):
        x = np.asarray(x, dtype=float)
        quad = np.einsum("...i,ij,...j->...", x, self.A, x)
        return self.c * np.exp(-0.5 * quad + x @ self.b)

    def log_at(self, x):
        x = np.asarray(x, dtype=float)
        quad = np.einsum("...i,ij,...j->...", x, self.A, x)
        return np.log(self.c) - 0.5 * quad + x @ self.b

    def conj(self):
        return GaussianSymbol(np.conj(self.c), np.conj(self.A), np.conj(self.b))

    def scale(self, s):
        return GaussianSymbol(self.c * s, self.A, self.b, check=False)

    def with_b(self, b):
        return GaussianSymbol(self.c, self.A, b, check=False)

    def fourier(self):
        """Exact Fourier transform, a Gaussian in the dual variable."""
        d = self.dim
        Ainv = np.linalg.inv(self.A)
        Ainv_b = Ainv @ self.b
        logc = (
            np.log(self.c)
            - 0.5 * d * np.log(2 * np.pi)
            - np.log(sqrt_det(self.A))
            + 0.5 * self.b @ Ainv_b
        )
        return GaussianSymbol(np.exp(logc), Ainv, -1j * Ainv_b)

    def inverse_fourier(self):
        """Inverse of :meth:`fourier` (``f(x) = int fhat(k) exp(ik.x) dk``)."""
        d = self.dim
        Ainv = np.linalg.inv(self.A)
        Ainv_b = Ainv @ self.b
        logc = (
            np.log(self.c)
            + 0.5 * d * np.log(2 * np.pi)
            - np.log(sqrt_det(self.A))
            + 0.5 * self.b @ Ainv_b
        )
        return GaussianSymbol(np.exp(logc), Ainv, 1j * Ainv_b)

    def pullback(self, L):
        """``f'(x) = f(Lambda^-1 (x - a))``."""
        L = _as_transform(L, self.dim)
        W = np.linalg.inv(L.Lambda)
        w = W @ L.a
        A2 = W.T @ self.A @ W
        b2 = W.T @ (self.A @ w + self.b)
        c2 = self.c * np.exp(-0.5 * w @ self.A @ w - self.b @ w)
        return GaussianSymbol(c2, A2, b2)

    def derivative(self, mu):
        """``d f / d x^mu`` as an :class:`AffineGaussian`."""
        return AffineGaussian(self.b[mu], -self.A[mu, :], self)

    def slice_integral(self, t, axis=0):
        """``int f(x) delta(x^axis - t) dx`` in closed form."""
        d = self.dim
        rest = [i for i in range(d) if i != axis]
        Arr = self.A[np.ix_(rest, rest)]
        Ar0 = self.A[rest, axis]
        beta = self.b[rest] - t * Ar0
        log0 = np.log(self.c) - 0.5 * self.A[axis, axis] * t**2 + self.b[axis] * t
        return complex(np.exp(log0 + gaussian_integral(Arr, beta)))

    def l2_norm(self):
        """Exact ``L^2`` norm."""
        M = self.A + np.conj(self.A)
        beta = self.b + np.conj(self.b)
        return float(np.sqrt(abs(self.c) ** 2 * np.real(np.exp(gaussian_integral(M, beta)))))


@dataclass(frozen=True)
class AffineGaussian:
    """``(p0 + p.x) * G(x)`` for a :class:`GaussianSymbol` ``G``."""

    p0: complex
    p: np.ndarray
    gaussian: GaussianSymbol

    def __init__(self, p0, p, gaussian):
        object.__setattr__(self, "p0", complex(p0))
        object.__setattr__(self, "p", np.asarray(p, dtype=complex))
        object.__setattr__(self, "gaussian", gaussian)

    @property
    def dim(self):
        return self.gaussian.dim

    def __call__(self, x):
        x = np.asarray(x, dtype=float)
        return (self.p0 + x @ self.p) * self.gaussian(x)

    def conj(self):
        return AffineGaussian(np.conj(self.p0), np.conj(self.p), self.gaussian.conj())

    def scale(self, s):
        return AffineGaussian(self.p0 * s, self.p * s, self.gaussian)

    def pullback(self, L):
        L = _as_transform(L, self.dim)
        W = np.linalg.inv(L.Lambda)
        return AffineGaussian(self.p0 - self.p @ (W @ L.a), W.T @ self.p, self.gaussian.pullback(L))

    def slice_integral(self, t, axis=0):
        G = self.gaussian
        rest = [i for i in range(G.dim) if i != axis]
        Arr = G.A[np.ix_(rest, rest)]
        beta = G.b[rest] - t * G.A[rest, axis]
        mean = np.linalg.solve(Arr, beta)
        return G.slice_integral(t, axis) * (self.p0 + self.p[axis] * t + self.p[rest] @ mean)


@dataclass(frozen=True)
class GaussianSum:
    """Finite linear combination of Gaussian-class terms."""

    terms: tuple

    def __init__(self, terms):
        terms = tuple(terms)
        if not terms:
            raise ValueError("empty sum")
        dims = {t.dim for t in terms}
        if len(dims) != 1:
            raise ValueError("terms have different dimensions")
        object.__setattr__(self, "terms", terms)

    @property
    def dim(self):
        return self.terms[0].dim

    def __call__(self, x):
        return sum(t(x) for t in self.terms)

    def conj(self):
        return GaussianSum(t.conj() for t in self.terms)

    def scale(self, s):
        return GaussianSum(t.scale(s) for t in self.terms)

    def pullback(self, L):
        return GaussianSum(t.pullback(L) for t in self.terms)

    def slice_integral(self, t, axis=0):
        return sum(term.slice_integral(t, axis) for term in self.terms)

    def derivative(self, mu):
        return GaussianSum(t.derivative(mu) for t in self.terms)


def _as_transform(L, dim):
    if not isinstance(L, PoincareTransform):
        L = PoincareTransform(L)
    if L.dim != dim:
        raise ValueError(f"transform acts in dimension {L.dim}, symbol has {dim}")
    return L


def _check_theta(theta, d):
    theta = np.asarray(theta, dtype=float)
    if theta.shape != (d, d):
        raise ValueError(f"theta must be {d}x{d}")
    if np.max(np.abs(theta + theta.T), initial=0.0) > 1e-12 * max(1.0, np.max(np.abs(theta))):
        raise ValueError("theta is not antisymmetric")
    return 0.5 * (theta - theta.T)


def _star_core(f, g, theta):
    """Joint quadratic form of the twisted product of two Gaussians.

    Returns ``(M, beta0, log_pref, D, b)`` where the product equals
    ``exp(log_pref) * int exp(-u.M.u/2 + (beta0 + i E x).u) du``.
    """
    d = f.dim
    fh, gh = f.fourier(), g.fourier()
    M = np.zeros((2 * d, 2 * d), dtype=complex)
    M[:d, :d] = fh.A
    M[d:, d:] = gh.A
    M[:d, d:] = 0.5j * theta
    M[d:, :d] = -0.5j * theta
    beta0 = np.concatenate([fh.b, gh.b])
    log_pref = np.log(fh.c) + np.log(gh.c)
    return M, beta0, log_pref, fh, gh


def star_product_gaussian(f, g, theta, check=True):
    """Exact twisted product of Gaussian-class symbols.

    ``f`` and ``g`` may be :class:`GaussianSymbol`, :class:`GaussianSum`, or
    an :class:`AffineGaussian` on one side.  A result whose quadratic form
    loses ``Re``-positivity is returned with a warning.
    """
    if isinstance(f, GaussianSum) or isinstance(g, GaussianSum):
        fs = f.terms if isinstance(f, GaussianSum) else (f,)
        gs = g.terms if isinstance(g, GaussianSum) else (g,)
        return GaussianSum(star_product_gaussian(a, b, theta, check) for a in fs for b in gs)
    if isinstance(f, AffineGaussian) and isinstance(g, AffineGaussian):
        raise TypeError("product of two affine Gaussians leaves the affine class")
    theta = _check_theta(theta, f.dim)
    if isinstance(f, AffineGaussian):
        base = star_product_gaussian(f.gaussian, g, theta, check)
        off, slope = _b_gradient(f.gaussian, g, theta, slot=0)
        return AffineGaussian(f.p0 + f.p @ off, slope.T @ f.p, base)
    if isinstance(g, AffineGaussian):
        base = star_product_gaussian(f, g.gaussian, theta, check)
        off, slope = _b_gradient(f, g.gaussian, theta, slot=1)
        return AffineGaussian(g.p0 + g.p @ off, slope.T @ g.p, base)

    d = f.dim
    M, beta0, log_pref, _, _ = _star_core(f, g, theta)
    E = np.vstack([np.eye(d), np.eye(d)])
    Minv = np.linalg.inv(M)
    A_out = E.T @ Minv @ E
    b_out = 1j * E.T @ Minv @ beta0
    logc = log_pref + gaussian_integral(M, beta0)
    if re_min_eig(A_out) <= 0:
        msg = "twisted product lost Re-positivity of its quadratic form"
        if check:
            warnings.warn(msg, RuntimeWarning, stacklevel=2)
    return GaussianSymbol(np.exp(logc), A_out, b_out, check=False)


def _b_gradient(f, g, theta, slot):
    """Gradient of ``log (f * g)(x)`` with respect to the linear term of one factor.

    The gradient is affine in ``x``; returns ``(offset, slope)`` with
    ``grad = offset + slope @ x``.
    """
    d = f.dim
    M, beta0, _, _, _ = _star_core(f, g, theta)
    D = np.zeros((2 * d, 2 * d), dtype=complex)
    D[:d, :d] = np.linalg.inv(f.A)
    D[d:, d:] = np.linalg.inv(g.A)
    b = np.concatenate([f.b, g.b])
    E = np.vstack([np.eye(d), np.eye(d)])
    Minv = np.linalg.inv(M)
    offset = D @ b - 1j * D @ Minv @ beta0
    slope = D @ Minv @ E
    sl = slice(0, d) if slot == 0 else slice(d, 2 * d)
    return offset[sl], slope[sl]


def sample_points(dim, n=64, spread=2.0, seed=0):
    """Deterministic evaluation points used for closed-form comparisons."""
    return np.random.default_rng(seed).normal(scale=spread, size=(n, dim))


def relative_difference(u, v, points):
    """Discrete relative ``l2`` difference of two symbols over ``points``."""
    uu, vv = u(points), v(points)
    denom = np.sqrt(np.mean(np.abs(vv) ** 2))
    return float(np.sqrt(np.mean(np.abs(uu - vv) ** 2)) / denom)
