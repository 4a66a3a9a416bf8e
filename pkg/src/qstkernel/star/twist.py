"""Twists as Fourier multipliers and the twisted Lorentz action.

A two-slot symbol ``F(h, k)`` lives on the product of two copies of the dual
grid.  The twist multiplies it by ``exp(-i h.sigma.k / 2)`` so that the
untwisted product ``m2`` of the twisted symbol is the twisted product of the
factors.  Lorentz transformations act on each slot by
``fhat(k) -> |det L| exp(-i k.a) fhat(L^T k)``, evaluated off-grid through
the exact discrete Fourier sums.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..core import PoincareTransform
from .grid import Grid, GridSymbol, fourier

#: default budget for multi-slot arrays, in complex entries
MAX_ELEMENTS = 2**24


@dataclass
class TwoSlotSymbol:
    """Coefficients ``F(h, k)`` on ``kgrid x kgrid``, flattened per slot."""

    kgrid: Grid
    values: np.ndarray

    def __post_init__(self):
        n = self.kgrid.size
        self.values = np.asarray(self.values, dtype=complex)
        if self.values.shape != (n, n):
            raise ValueError(f"expected shape {(n, n)}, got {self.values.shape}")

    @classmethod
    def from_pair(cls, f, g, max_elements=MAX_ELEMENTS):
        """``fhat (x) ghat`` for two position-space grid symbols."""
        if f.grid != g.grid:
            raise ValueError("symbols live on different grids")
        _check_budget(f.grid.size**2, max_elements)
        fh, gh = fourier(f), fourier(g)
        return cls(fh.grid, np.outer(fh.values.reshape(-1), gh.values.reshape(-1)))

    def slot_decay(self):
        """Boundary-to-peak ratio of the marginal magnitudes in each slot."""
        mask = self.kgrid.boundary_mask().reshape(-1)
        mag = np.abs(self.values)
        peak = mag.max()
        if peak == 0:
            return 0.0, 0.0
        return float(mag[mask, :].max() / peak), float(mag[:, mask].max() / peak)

    def __mul__(self, other):
        if isinstance(other, TwoSlotSymbol):
            if other.kgrid != self.kgrid:
                raise ValueError("grid mismatch")
            return TwoSlotSymbol(self.kgrid, self.values * other.values)
        return TwoSlotSymbol(self.kgrid, self.values * other)

    __rmul__ = __mul__


def _check_budget(n, max_elements):
    if n > max_elements:
        raise MemoryError(f"array of {n} entries exceeds the budget of {max_elements}")


def _phase(sigma, kgrid):
    d = kgrid.dim
    sigma = np.asarray(sigma, dtype=float)
    if sigma.shape != (d, d) or np.max(np.abs(sigma + sigma.T), initial=0.0) > 0:
        raise ValueError(f"sigma must be an antisymmetric {d}x{d} matrix")
    k = kgrid.points().reshape(-1, d)
    return -0.5 * (k @ sigma @ k.T)


def twist_operator(sigma, kgrid, inverse=False, max_elements=MAX_ELEMENTS):
    """Multiplier ``exp(-+ i h.sigma.k / 2)`` on the two-slot grid."""
    _check_budget(kgrid.size**2, max_elements)
    ph = _phase(sigma, kgrid)
    return TwoSlotSymbol(kgrid, np.exp(-1j * ph if inverse else 1j * ph))


def slot_action_matrix(L, kgrid):
    """Matrix of ``fhat -> |det L| exp(-i k.a) fhat(L^T k)`` on one slot."""
    if not isinstance(L, PoincareTransform):
        L = PoincareTransform(L)
    d = kgrid.dim
    if L.dim != d:
        raise ValueError("dimension mismatch")
    xgrid = kgrid.dual()
    k = kgrid.points().reshape(-1, d)
    x = xgrid.points().reshape(-1, d)
    # coefficients -> samples, then samples -> transform at L^T k
    to_x = np.exp(1j * x @ k.T) * kgrid.dx**d
    to_k = np.exp(-1j * (k @ L.Lambda) @ x.T) * (xgrid.dx / (2 * np.pi)) ** d
    det = abs(np.linalg.det(L.Lambda))
    return (det * np.exp(-1j * k @ L.a))[:, None] * (to_k @ to_x)


def untwisted_action(L, F):
    """``gamma_2(L)`` acting on both slots."""
    U = slot_action_matrix(L, F.kgrid)
    return TwoSlotSymbol(F.kgrid, U @ F.values @ U.T)


def twisted_action(L, sigma, F, max_elements=MAX_ELEMENTS):
    """``T^-1 gamma_2(L) T`` applied to ``F``."""
    T = twist_operator(sigma, F.kgrid, max_elements=max_elements)
    Tinv = twist_operator(sigma, F.kgrid, inverse=True, max_elements=max_elements)
    return Tinv * untwisted_action(L, T * F)


def multiply(F, sigma=None):
    """``m2`` (or the twisted ``m2`` when ``sigma`` is given) to position samples."""
    kg = F.kgrid
    vals = F.values if sigma is None else F.values * twist_operator(sigma, kg).values
    d = kg.dim
    shape = kg.shape + kg.shape
    arr = vals.reshape(shape)
    ax = tuple(range(-2 * d, 0))
    xy = np.fft.fftshift(np.fft.ifftn(np.fft.ifftshift(arr, axes=ax), axes=ax), axes=ax)
    xy *= (kg.dx * kg.n) ** (2 * d)
    diag = np.diagonal(xy.reshape(kg.size, kg.size))
    return GridSymbol(kg.dual(), diag.reshape(kg.shape))


# -- three slots --------------------------------------------------------------


def _three_slot_phase(sigma, kgrid, order):
    """Phase of the iterated twist; ``order`` is ``"left"``, ``"right"`` or ``"sym"``."""
    P = _phase(sigma, kgrid)
    n = kgrid.size
    d = kgrid.dim
    k = kgrid.points().reshape(-1, d)
    if order == "sym":
        # exp(-i/2 sum_{a<b} p_a.sigma.p_b)
        return P[:, :, None] + P[:, None, :] + P[None, :, :]
    if order == "left":
        # (F (x) 1)(Delta (x) id) F : the coproduct adds the first two momenta
        s = (k[:, None, :] + k[None, :, :]).reshape(-1, d)
        outer = -0.5 * (s @ np.asarray(sigma, float) @ k.T).reshape(n, n, n)
        return P[:, :, None] + outer
    if order == "right":
        s = (k[:, None, :] + k[None, :, :]).reshape(-1, d)
        outer = -0.5 * (k @ np.asarray(sigma, float) @ s.T).reshape(n, n, n)
        return outer + P[None, :, :]
    raise ValueError(f"unknown ordering {order!r}")


def _apply_three(U, G):
    G = np.einsum("ai,ijk->ajk", U, G)
    G = np.einsum("bj,ajk->abk", U, G)
    return np.einsum("ck,abk->abc", U, G)


def coassociativity_probe(sigma, f, g, h, L=None, max_elements=MAX_ELEMENTS):
    """Defect between the two iterated twisted coproduct actions on three slots.

    Builds ``T_L = (F (x) 1)(Delta (x) id)F`` and ``T_R = (1 (x) F)(id (x) Delta)F``
    as Fourier multipliers, applies ``T^-1 gamma_3(L) T`` for both, and
    compares each with the symmetric three-slot twist.  Returns the largest
    relative max-norm difference.
    """
    if not (f.grid == g.grid == h.grid):
        raise ValueError("symbols live on different grids")
    if f.dim != 2 or f.grid.n > 16:
        raise ValueError("three-slot probe requires d = 2 and at most 16 points per axis")
    kg = f.grid.dual()
    n = kg.size
    _check_budget(n**3, max_elements)
    if L is None:
        L = PoincareTransform.boost(0.3, (1.0,))
    F3 = np.einsum(
        "i,j,k->ijk",
        fourier(f).values.reshape(-1),
        fourier(g).values.reshape(-1),
        fourier(h).values.reshape(-1),
    )
    U = slot_action_matrix(L, kg)
    results = {}
    for order in ("left", "right", "sym"):
        ph = _three_slot_phase(sigma, kg, order)
        results[order] = np.exp(-1j * ph) * _apply_three(U, np.exp(1j * ph) * F3)
    scale = np.max(np.abs(results["sym"]))
    if scale == 0:
        return 0.0
    return float(
        max(
            np.max(np.abs(results["left"] - results["right"])),
            np.max(np.abs(results["left"] - results["sym"])),
            np.max(np.abs(results["right"] - results["sym"])),
        )
        / scale
    )
