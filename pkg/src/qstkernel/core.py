"""Tensor-level geometry of antisymmetric commutator tensors.

Conventions
-----------
* Minkowski metric ``g = diag(1, -1, -1, -1)`` (in dimension ``d`` the
  metric is ``diag(1, -1, ..., -1)``).
* Levi-Civita orientation ``eps_{0123} = +1`` (lower indices).
* Electric/magnetic split of an antisymmetric ``sigma`` with upper indices:
  ``e_j = sigma^{0j}`` and ``m_i = sigma^{jk}`` for ``(i, j, k)`` cyclic.

With these conventions ``invariant_1 = 2(|m|^2 - |e|^2)`` and
``invariant_2 = 4 e.m``.  Only the square of ``invariant_2`` is
convention independent.
"""
from __future__ import annotations

import itertools
import json
from dataclasses import dataclass, field

import numpy as np
from scipy.spatial.transform import Rotation

METRIC = np.diag([1.0, -1.0, -1.0, -1.0])

#: Standard symplectic matrix ``S`` (upper indices).
S = np.array(
    [
        [0.0, 0.0, -1.0, 0.0],
        [0.0, 0.0, 0.0, -1.0],
        [1.0, 0.0, 0.0, 0.0],
        [0.0, 1.0, 0.0, 0.0],
    ]
)

ORBITS = ("sigma", "sigma1", "sigma_conf")

LORENTZ_TOL = 1e-8


def minkowski(dim=4):
    """Metric ``diag(1, -1, ..., -1)`` in dimension ``dim``."""
    g = -np.eye(dim)
    g[0, 0] = 1.0
    return g


def _levi_civita(dim=4):
    eps = np.zeros((dim,) * dim)
    for perm in itertools.permutations(range(dim)):
        inversions = sum(
            1 for i in range(dim) for j in range(i + 1, dim) if perm[i] > perm[j]
        )
        eps[perm] = -1.0 if inversions % 2 else 1.0
    return eps


EPSILON = _levi_civita(4)


def as_antisymmetric(sigma, tol=0.0):
    """Return ``sigma`` as a float array, raising if it is not antisymmetric.

    ``tol`` is an absolute tolerance on ``|sigma + sigma^T|``; the default
    demands exact antisymmetry.
    """
    sigma = np.asarray(sigma, dtype=float)
    if sigma.ndim != 2 or sigma.shape[0] != sigma.shape[1]:
        raise ValueError(f"expected a square matrix, got shape {sigma.shape}")
    if np.max(np.abs(sigma + sigma.T), initial=0.0) > tol:
        raise ValueError("matrix is not antisymmetric")
    return sigma


def sigma_standard():
    """The standard point ``S`` of the orbit ``Sigma``."""
    return S.copy()


def sigma_conf_standard():
    """The point ``(e, m) = ((1,0,0), (0,1,0))`` of the degenerate orbit."""
    return em_compose([1.0, 0.0, 0.0], [0.0, 1.0, 0.0])


def em_decompose(sigma):
    """Split an antisymmetric 4x4 tensor into its electric and magnetic parts."""
    sigma = np.asarray(sigma, dtype=float)
    e = sigma[0, 1:].copy()
    m = np.array([sigma[2, 3], sigma[3, 1], sigma[1, 2]])
    return e, m


def em_compose(e, m):
    """Inverse of :func:`em_decompose`."""
    e1, e2, e3 = e
    m1, m2, m3 = m
    return np.array(
        [
            [0.0, e1, e2, e3],
            [-e1, 0.0, m3, -m2],
            [-e2, -m3, 0.0, m1],
            [-e3, m2, -m1, 0.0],
        ],
        dtype=float,
    )


def lower(tensor, metric=METRIC):
    """Lower both indices of a rank-2 tensor."""
    return metric @ np.asarray(tensor) @ metric


def hodge_dual(sigma):
    """Hodge dual ``(*sigma)_{mu nu} = 1/2 eps_{mu nu rho tau} sigma^{rho tau}``.

    The result carries lower indices.
    """
    sigma = np.asarray(sigma, dtype=float)
    return 0.5 * np.einsum("abcd,cd->ab", EPSILON, sigma)


def invariant_1(sigma):
    """``sigma_{mu nu} sigma^{mu nu}`` by direct contraction."""
    sigma = np.asarray(sigma, dtype=float)
    return float(np.sum(lower(sigma) * sigma))


def invariant_2(sigma):
    """``sigma^{mu nu} (*sigma)_{mu nu}`` by direct contraction."""
    sigma = np.asarray(sigma, dtype=float)
    return float(np.sum(sigma * hodge_dual(sigma)))


def invariants_em(sigma):
    """Both invariants from the closed forms in ``(e, m)``."""
    e, m = em_decompose(sigma)
    return 2.0 * (m @ m - e @ e), 4.0 * (e @ m)


def is_in_orbit(sigma, orbit="sigma", tol=1e-9):
    """Membership test for the orbits ``sigma``, ``sigma1`` and ``sigma_conf``.

    * ``sigma``: ``|e| = |m|`` and ``e.m = +-1`` (Lorentz orbit of ``S``
      together with its parity image).
    * ``sigma1``: ``|e| = |m| = 1`` and ``m = +-e``, the orbit of ``S`` under
      spatial orthogonal transformations.
    * ``sigma_conf``: ``|e| = |m| > 0`` and ``e.m = 0``.
    """
    if orbit not in ORBITS:
        raise ValueError(f"unknown orbit {orbit!r}; expected one of {ORBITS}")
    sigma = as_antisymmetric(sigma, tol=tol)
    if sigma.shape != (4, 4):
        return False
    e, m = em_decompose(sigma)
    ne, nm = np.linalg.norm(e), np.linalg.norm(m)
    if orbit == "sigma":
        return bool(abs(ne - nm) <= tol and abs(abs(e @ m) - 1.0) <= tol)
    if orbit == "sigma1":
        return bool(
            abs(ne - 1.0) <= tol
            and abs(nm - 1.0) <= tol
            and min(np.linalg.norm(m - e), np.linalg.norm(m + e)) <= tol
        )
    return bool(abs(ne - nm) <= tol and ne > tol and abs(e @ m) <= tol)


@dataclass(frozen=True)
class PoincareTransform:
    """A Poincare transformation ``x -> Lambda x + a``."""

    Lambda: np.ndarray
    a: np.ndarray = field(default=None)

    def __post_init__(self):
        lam = np.array(self.Lambda, dtype=float)
        dim = lam.shape[0]
        if lam.shape != (dim, dim):
            raise ValueError("Lambda must be square")
        a = np.zeros(dim) if self.a is None else np.array(self.a, dtype=float)
        object.__setattr__(self, "Lambda", lam)
        object.__setattr__(self, "a", a)

    @property
    def dim(self):
        return self.Lambda.shape[0]

    @property
    def det(self):
        return float(np.round(np.linalg.det(self.Lambda)))

    @property
    def orthochronous(self):
        return bool(self.Lambda[0, 0] >= 1.0 - LORENTZ_TOL)

    def metric_residual(self):
        g = minkowski(self.dim)
        return float(np.max(np.abs(self.Lambda.T @ g @ self.Lambda - g)))

    def is_lorentz(self, tol=LORENTZ_TOL):
        return self.metric_residual() <= tol

    def validate(self, tol=LORENTZ_TOL):
        res = self.metric_residual()
        if res > tol:
            raise ValueError(f"not a Lorentz transformation (residual {res:.3e})")
        return self

    def compose(self, other):
        """``self o other``: apply ``other`` first."""
        return PoincareTransform(
            self.Lambda @ other.Lambda, self.Lambda @ other.a + self.a
        )

    def inverse(self):
        inv = np.linalg.inv(self.Lambda)
        return PoincareTransform(inv, -inv @ self.a)

    @classmethod
    def identity(cls, dim=4):
        return cls(np.eye(dim))

    @classmethod
    def translation(cls, a):
        a = np.asarray(a, dtype=float)
        return cls(np.eye(a.size), a)

    @classmethod
    def rotation(cls, R):
        lam = np.eye(4)
        lam[1:, 1:] = R
        return cls(lam)

    @classmethod
    def boost(cls, rapidity, direction=(1.0, 0.0, 0.0)):
        n = np.asarray(direction, dtype=float)
        dim = n.size + 1
        n = n / np.linalg.norm(n)
        ch, sh = np.cosh(rapidity), np.sinh(rapidity)
        lam = np.eye(dim)
        lam[0, 0] = ch
        lam[0, 1:] = sh * n
        lam[1:, 0] = sh * n
        lam[1:, 1:] += (ch - 1.0) * np.outer(n, n)
        return cls(lam)

    @classmethod
    def parity(cls, dim=4):
        return cls(minkowski(dim))


def lorentz_act_sigma(L, sigma, tol=LORENTZ_TOL):
    """``sigma'^{mu nu} = Lambda^mu_a Lambda^nu_b sigma^{ab}``."""
    if not isinstance(L, PoincareTransform):
        L = PoincareTransform(L)
    L.validate(tol)
    sigma = as_antisymmetric(sigma)
    out = L.Lambda @ sigma @ L.Lambda.T
    # restore exact antisymmetry lost to rounding
    return 0.5 * (out - out.T)


def random_lorentz(seed, rapidity_max=1.0, dim=4):
    """Seeded random proper orthochronous Lorentz transformation.

    A uniformly random rotation composed with a boost of rapidity drawn
    uniformly from ``[0, rapidity_max]`` along a uniformly random direction.
    """
    if rapidity_max < 0:
        raise ValueError("rapidity_max must be non-negative")
    rng = np.random.default_rng(seed)
    if dim == 2:
        eta = rng.uniform(-rapidity_max, rapidity_max)
        return PoincareTransform.boost(eta, (1.0,))
    if dim != 4:
        raise ValueError("random_lorentz supports dim 2 and 4")
    R = Rotation.random(random_state=rng).as_matrix()
    direction = rng.normal(size=3)
    eta = rng.uniform(0.0, rapidity_max)
    boost = PoincareTransform.boost(eta, direction)
    return boost.compose(PoincareTransform.rotation(R))


def random_rotation(seed):
    """Seeded uniformly random spatial rotation as a 4x4 Lorentz matrix."""
    rng = np.random.default_rng(seed)
    return PoincareTransform.rotation(Rotation.random(random_state=rng).as_matrix())


def random_antisymmetric(rng, dim=4, scale=1.0):
    a = rng.normal(scale=scale, size=(dim, dim))
    return a - a.T


def theta_matrix(sigma, lam=1.0):
    """``theta = lam^2 sigma``."""
    if lam <= 0:
        raise ValueError("length scale must be positive")
    return lam**2 * as_antisymmetric(sigma)


# -- serialization -----------------------------------------------------------


def matrix_to_json(matrix):
    matrix = np.asarray(matrix, dtype=float)
    return {"dim": int(matrix.shape[0]), "rows": [[float(v) for v in row] for row in matrix]}


def matrix_from_json(obj):
    rows = np.array(obj["rows"], dtype=float)
    dim = int(obj.get("dim", rows.shape[0]))
    if rows.shape != (dim, dim):
        raise ValueError(f"rows do not form a {dim}x{dim} matrix")
    return rows


def dumps_matrix(matrix):
    # json uses repr for floats, which round-trips exactly
    return json.dumps(matrix_to_json(matrix))


def loads_matrix(text):
    return matrix_from_json(json.loads(text))
