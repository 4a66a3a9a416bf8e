"""States, uncertainties and localisation operators.

Single-event computations use the two-mode representation of ``rep``
(``X = (P_1, P_2, Q_1, Q_2)``, ``q = lam Lambda X``).  Moments are evaluated
as ``<X^a psi, X^b psi>``, which is exact for the truncated matrices as long
as the state has no weight on the top level of any mode.

Multi-event systems are tensor products of copies of that representation,
all with the same ``sigma``; they are stored as sparse matrices.
"""
from __future__ import annotations

import functools
import itertools
import math
from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp
from scipy.sparse import linalg as spla

from .core import EPSILON, S
from .rep import Coordinates, OscillatorSpace, build_coordinates, hermitian_expm, lowering

#: leakage outside the safe subspace tolerated by ``stur_check``
LEAKAGE_TOL = 1e-10
#: sparse event-system dimension cap
MAX_EVENT_DIM = 60000
#: dense eigensolver cap for separation spectra
MAX_DENSE_DIM = 4096


# ---------------------------------------------------------------- states


@dataclass
class QuantumState:
    """Unit vector or density matrix on an ``OscillatorSpace``."""

    data: np.ndarray
    space: OscillatorSpace
    tol: float = 1e-10

    def __post_init__(self):
        data = np.asarray(self.data, dtype=complex)
        D = self.space.dim
        if data.shape == (D,):
            norm = np.linalg.norm(data)
            if abs(norm - 1.0) > self.tol:
                raise ValueError(f"state vector has norm {norm}")
        elif data.shape == (D, D):
            if np.max(np.abs(data - data.conj().T)) > self.tol:
                raise ValueError("density matrix is not Hermitian")
            tr = np.trace(data).real
            if abs(tr - 1.0) > self.tol:
                raise ValueError(f"density matrix has trace {tr}")
            if np.linalg.eigvalsh(data).min() < -1e-12:
                raise ValueError("density matrix is not positive")
        else:
            raise ValueError(f"state shape {data.shape} does not match dimension {D}")
        self.data = data

    @classmethod
    def from_vector(cls, vec, space, normalize=True):
        vec = np.asarray(vec, dtype=complex)
        if normalize:
            vec = vec / np.linalg.norm(vec)
        return cls(vec, space)

    @classmethod
    def random(cls, space, rng, rank=None, safe=True):
        """Haar-like random state; ``rank`` > 1 gives a mixed state."""
        idx = space.safe_indices() if safe else np.arange(space.dim)
        r = 1 if rank is None else rank
        Z = np.zeros((space.dim, r), dtype=complex)
        Z[idx] = rng.normal(size=(idx.size, r)) + 1j * rng.normal(size=(idx.size, r))
        if rank is None:
            return cls.from_vector(Z[:, 0], space)
        rho = Z @ Z.conj().T
        return cls(rho / np.trace(rho).real, space)

    @property
    def is_pure(self):
        return self.data.ndim == 1

    def density(self):
        if self.is_pure:
            return np.outer(self.data, self.data.conj())
        return self.data

    def expect(self, A):
        if self.is_pure:
            return complex(np.vdot(self.data, A @ self.data))
        return complex(np.sum((A @ self.data).diagonal()))

    def second_moment(self, A, B):
        """``<A B>``; exact for truncated ``A, B`` when the top level is empty."""
        if self.is_pure:
            return complex(np.vdot(A.conj().T @ self.data, B @ self.data))
        return complex(np.sum((A @ (B @ self.data)).diagonal()))

    def leakage(self):
        """Probability outside the safe subspace."""
        idx = self.space.safe_indices()
        if self.is_pure:
            return float(max(0.0, 1.0 - np.sum(np.abs(self.data[idx]) ** 2)))
        return float(max(0.0, 1.0 - np.trace(self.data[np.ix_(idx, idx)]).real))

    def top_level_weight(self):
        """Weight on basis states with some mode at level ``N - 1``."""
        occ = self.space.occupations()
        top = np.any(occ == self.space.N - 1, axis=1)
        p = np.abs(self.data) ** 2 if self.is_pure else self.data.diagonal().real
        return float(np.sum(p[top]))


def _check_hermitian(A, name="operator", tol=1e-10):
    diff = A - A.conj().T
    scale = max(1.0, abs(A).max())
    err = abs(diff).max() if sp.issparse(diff) else np.max(np.abs(diff))
    if err > tol * scale:
        raise ValueError(f"{name} is not Hermitian (defect {err:.3g})")


def uncertainty(state, A, check=True):
    """``Delta(A) = sqrt(<A^2> - <A>^2)``."""
    if check:
        _check_hermitian(A)
    m1 = state.expect(A).real
    m2 = state.second_moment(A, A).real
    return math.sqrt(max(0.0, m2 - m1 * m1))


def heisenberg_check(state, A, B, tol=1e-10):
    """Robertson inequality ``Delta(A) Delta(B) >= |<[A, B]>| / 2``."""
    _check_hermitian(A, "A")
    _check_hermitian(B, "B")
    dA, dB = uncertainty(state, A, False), uncertainty(state, B, False)
    comm = state.second_moment(A, B) - state.second_moment(B, A)
    bound = 0.5 * abs(comm)
    scale = max(1.0, math.sqrt(abs(state.second_moment(A, A) * state.second_moment(B, B))))
    return {
        "delta_a": dA,
        "delta_b": dB,
        "product": dA * dB,
        "bound": bound,
        "margin": dA * dB - bound,
        "passed": dA * dB >= bound - tol * scale,
    }


# ------------------------------------------------------- one-mode states


def _mode_state(N, generator, pad=40):
    """``exp(-i G)|0>`` computed with ``pad`` extra levels, then truncated to ``N``."""
    G = generator(N + pad)
    U = hermitian_expm(G, -1j)
    return U[:N, 0]


def _displacement_generator(alpha):
    def gen(M):
        a = lowering(M)
        # exp(alpha a^dag - conj(alpha) a) = exp(-i G)
        return 1j * (alpha * a.conj().T - np.conj(alpha) * a)

    return gen


def _squeeze_generator(zeta):
    def gen(M):
        a = lowering(M)
        ad = a.conj().T
        # exp((conj(zeta) a^2 - zeta a^dag^2)/2) = exp(-i G)
        return 0.5j * (np.conj(zeta) * a @ a - zeta * ad @ ad)

    return gen


def _per_mode(value, modes):
    arr = np.atleast_1d(np.asarray(value, dtype=complex))
    if arr.size == 1:
        arr = np.repeat(arr, modes)
    if arr.size != modes:
        raise ValueError(f"expected {modes} per-mode values")
    return arr


def _product_state(vectors, N, n_safe=None):
    out = np.ones(1, dtype=complex)
    for v in vectors:
        out = np.kron(out, v)
    space = OscillatorSpace(len(vectors), N, n_safe)
    return QuantumState.from_vector(out, space)


def coherent_state(alpha, N, modes=2, n_safe=None, pad=40):
    """Displaced vacuum ``D(alpha)|0>`` per mode.

    Raises ``ValueError`` when ``|alpha|^2 > n_safe / 4`` for some mode.
    """
    alpha = _per_mode(alpha, modes)
    n_safe = N // 2 if n_safe is None else n_safe
    if np.max(np.abs(alpha) ** 2) > n_safe / 4:
        raise ValueError("alpha too large for the truncation")
    vecs = [_mode_state(N, _displacement_generator(a), pad) for a in alpha]
    return _product_state(vecs, N, n_safe)


def squeezed_vacuum_amplitudes(r, N, phi=0.0):
    """Closed-form number-basis amplitudes of ``S(r e^{i phi})|0>``."""
    n = np.arange(0, N, 2)
    m = n // 2
    from scipy.special import gammaln

    mag = np.exp(0.5 * gammaln(n + 1) - gammaln(m + 1) - m * np.log(2.0))
    amp = np.zeros(N, dtype=complex)
    amp[n] = (-np.exp(1j * phi) * np.tanh(r)) ** m * mag / np.sqrt(np.cosh(r))
    return amp


def squeezed_truncation(r, tol=1e-12, n_min=8):
    """Smallest even ``N`` whose safe subspace holds ``S(r)|0>`` up to ``tol``."""
    N = n_min
    while True:
        amp = squeezed_vacuum_amplitudes(r, 4 * N)
        if np.sum(np.abs(amp[N // 2:]) ** 2) <= tol:
            return N
        N += 2


def squeezed_state(r, N=None, modes=2, phi=0.0, alpha=0.0, n_safe=None, pad=40):
    """``D(alpha) S(r e^{i phi})|0>`` per mode.

    ``N=None`` picks the smallest truncation with leakage below ``1e-12``.
    """
    r = _per_mode(r, modes).real
    phi = _per_mode(phi, modes).real
    alpha = _per_mode(alpha, modes)
    if N is None:
        N = max(squeezed_truncation(float(np.max(np.abs(r)))), 8)
        while np.max(np.abs(alpha) ** 2) > (N // 2) / 4:
            N += 2
    vecs = []
    for rj, pj, aj in zip(r, phi, alpha):
        zeta = rj * np.exp(1j * pj)
        M = N + pad
        U = hermitian_expm(_displacement_generator(aj)(M), -1j) @ hermitian_expm(
            _squeeze_generator(zeta)(M), -1j
        )
        vecs.append(U[:N, 0])
    return _product_state(vecs, N, n_safe)


# ------------------------------------------------------ sparse operators


@functools.lru_cache(maxsize=16)
def _sparse_pair(N):
    a = sp.diags(np.sqrt(np.arange(1, N)), 1, format="csr").astype(complex)
    ad = a.conj().T.tocsr()
    P = (1j * (ad - a) / np.sqrt(2)).tocsr()
    Q = ((a + ad) / np.sqrt(2)).tocsr()
    return P, Q


def _sparse_embed(op, mode, modes, N):
    left = sp.identity(N**mode, dtype=complex, format="csr")
    right = sp.identity(N ** (modes - mode - 1), dtype=complex, format="csr")
    return sp.kron(sp.kron(left, op), right, format="csr")


def sparse_X(N, modes=2, first=0, total=None):
    """Sparse ``(P_a, P_b, Q_a, Q_b)`` for modes ``first, first+1`` of ``total``."""
    total = modes if total is None else total
    P, Q = _sparse_pair(N)
    Ps = [_sparse_embed(P, first + j, total, N) for j in range(modes)]
    Qs = [_sparse_embed(Q, first + j, total, N) for j in range(modes)]
    return Ps + Qs


def _frame(coords):
    """``(Lambda, lam)`` from coordinates or a bare 4x4 matrix."""
    if isinstance(coords, Coordinates):
        return np.asarray(coords.Lambda, float), float(coords.lam)
    Lambda = np.asarray(getattr(coords, "Lambda", coords), float)
    if Lambda.shape != (4, 4):
        raise ValueError("expected DFR coordinates or a 4x4 frame")
    return Lambda, 1.0


def coordinate_moments(state, Lambda, lam):
    """Means and second moments of ``q = lam Lambda X`` in ``state``."""
    if state.space.modes != 2:
        raise ValueError("single-event moments need a two-mode state")
    X = sparse_X(state.space.N)
    mean_X = np.array([state.expect(x) for x in X])
    G = np.array([[state.second_moment(x, y) for y in X] for x in X])
    mean = lam * Lambda @ mean_X
    second = lam**2 * Lambda @ G @ Lambda.T
    return mean, second


def coordinate_uncertainties(state, coords, lam=None):
    """``Delta(q^mu)`` for the coordinates ``q = lam Lambda X``."""
    Lambda, lam0 = _frame(coords)
    lam = lam0 if lam is None else lam
    mean, second = coordinate_moments(state, Lambda, lam)
    var = np.real(np.diag(second)) - np.real(mean) ** 2
    return np.sqrt(np.maximum(var, 0.0))


def stur_lhs(deltas):
    d0, d1, d2, d3 = deltas
    return d0 * (d1 + d2 + d3), d1 * d2 + d1 * d3 + d2 * d3


def stur_check(state, coords, lam=None, rtol=1e-6, leakage_tol=LEAKAGE_TOL):
    """Space-time uncertainty relations for one state.

    ``coords`` is a ``Coordinates`` object (its ``Lambda`` and ``lam`` are
    used, the operators are rebuilt sparsely on the state's space) or a bare
    4x4 frame with ``lam`` given explicitly.
    """
    leak = state.leakage()
    if leak > leakage_tol:
        raise ValueError(f"state leaks {leak:.3g} outside the safe subspace")
    Lambda, lam0 = _frame(coords)
    lam = lam0 if lam is None else lam
    deltas = coordinate_uncertainties(state, Lambda, lam)
    lhs1, lhs2 = stur_lhs(deltas)
    bound = lam**2
    return {
        "deltas": deltas.tolist(),
        "lhs1": float(lhs1),
        "lhs2": float(lhs2),
        "bound": bound,
        "margin1": float(lhs1 - bound),
        "margin2": float(lhs2 - bound),
        "leakage": leak,
        "passed": bool(min(lhs1, lhs2) >= bound * (1 - rtol)),
    }


def _batched_moments(Psi, X):
    """Means and second moments of Hermitian ``X`` over columns of ``Psi``."""
    XPsi = [x @ Psi for x in X]
    mean = np.array([np.einsum("ij,ij->j", Psi.conj(), y).real for y in XPsi])
    G = np.array([[np.einsum("ij,ij->j", y.conj(), z) for z in XPsi] for y in XPsi])
    return mean, G


def stur_scan(n_states=10000, seed=0, N=8, Lambda=None, lam=1.0, rtol=1e-6, batch=1000):
    """STUR and Heisenberg checks on seeded random safe-subspace states.

    The Heisenberg layer compares ``Delta q^mu Delta q^nu`` with half the
    modulus of the commutator expectation, using the truncated matrices.
    """
    rng = np.random.default_rng(seed)
    space = OscillatorSpace(2, N)
    Lambda = np.eye(4) if Lambda is None else np.asarray(getattr(Lambda, "Lambda", Lambda), float)
    idx = space.safe_indices()
    X = sparse_X(N)
    violations = heisenberg_violations = 0
    worst = np.inf
    worst_heis = np.inf
    done = 0
    while done < n_states:
        b = min(batch, n_states - done)
        Psi = np.zeros((space.dim, b), dtype=complex)
        Psi[idx] = rng.normal(size=(idx.size, b)) + 1j * rng.normal(size=(idx.size, b))
        Psi /= np.linalg.norm(Psi, axis=0)
        mX, GX = _batched_moments(Psi, X)
        mean = lam * np.einsum("ma,aj->mj", Lambda, mX)
        second = lam**2 * np.einsum("ma,abj,nb->mnj", Lambda, GX, Lambda)
        var = np.einsum("mmj->mj", second).real - mean**2
        deltas = np.sqrt(np.maximum(var, 0.0))
        lhs1, lhs2 = stur_lhs(deltas)
        margin = np.minimum(lhs1, lhs2) - lam**2 * (1 - rtol)
        violations += int(np.sum(margin < 0))
        worst = min(worst, float(np.min(np.minimum(lhs1, lhs2) - lam**2)))
        # Heisenberg: <[q^mu, q^nu]> = second[mu, nu] - second[nu, mu]
        for mu, nu in itertools.combinations(range(4), 2):
            bound = 0.5 * np.abs(second[mu, nu] - second[nu, mu])
            scale = np.maximum(1.0, np.sqrt(np.abs(second[mu, mu] * second[nu, nu])))
            gap = deltas[mu] * deltas[nu] - bound
            heisenberg_violations += int(np.sum(gap < -1e-10 * scale))
            worst_heis = min(worst_heis, float(np.min(gap / scale)))
        done += b
    return {
        "seed": seed,
        "N": N,
        "lambda": lam,
        "samples": n_states,
        "violations": violations,
        "worst_margin": worst,
        "heisenberg_violations": heisenberg_violations,
        "heisenberg_worst_relative_margin": worst_heis,
        "passed": violations == 0 and heisenberg_violations == 0,
    }


def squeezed_stur_family(rs=np.linspace(0.0, 1.0, 11), lam=1.0, Lambda=None):
    """STUR left-hand sides for equal squeezing ``r`` in both modes."""
    Lambda = np.eye(4) if Lambda is None else Lambda
    rows = []
    for r in rs:
        st = squeezed_state(float(r))
        rep = stur_check(st, Lambda, lam)
        rows.append({"r": float(r), "N": st.space.N, "lhs1": rep["lhs1"], "lhs2": rep["lhs2"]})
    lhs_min = min(min(row["lhs1"], row["lhs2"]) for row in rows)
    return {"rows": rows, "min_lhs": lhs_min, "passed": lhs_min >= lam**2 * (1 - 1e-6)}


def single_mode_squeeze_probe(rs=np.linspace(0.0, 2.0, 21), lam=1.0):
    """STUR left-hand sides when only the first mode is squeezed.

    Both modes enter every relation, so squeezing one mode lowers the second
    relation towards ``lam^2 / 2``; the result documents how far a single
    ``sigma`` fiber can go below ``lam^2``.
    """
    rows = []
    for r in rs:
        st = squeezed_state([float(r), 0.0])
        rep = stur_check(st, np.eye(4), lam)
        rows.append({"r": float(r), "lhs1": rep["lhs1"], "lhs2": rep["lhs2"]})
    return rows


def sum_of_variances(state, coords, lam=None):
    return float(np.sum(coordinate_uncertainties(state, coords, lam) ** 2))


def optimal_localization_scan(coords, lam=None, alphas=None, rs=(0.05, 0.1, 0.2, 0.3)):
    """Scan ``sum_mu Delta(q^mu)^2`` over coherent and squeezed states.

    Returns the coherent minimum, its deviation from ``2 lam^2`` and whether
    every squeezed perturbation (same displacement, ``r > 0``) is larger.
    """
    Lambda, lam0 = _frame(coords)
    lam = lam0 if lam is None else lam
    N = coords.space.N if isinstance(coords, Coordinates) else 16
    if alphas is None:
        ax = np.array([-0.6, 0.0, 0.6])
        alphas = [complex(x, y) for x in ax for y in ax]
    coherent = []
    for a in alphas:
        st = coherent_state([a, -0.5 * a], N)
        coherent.append(sum_of_variances(st, Lambda, lam))
    squeezed = []
    for r in rs:
        for a in (0.0, alphas[-1]):
            st = squeezed_state(r, N=N, alpha=[a, -0.5 * a])
            squeezed.append(sum_of_variances(st, Lambda, lam))
    c_min = min(coherent)
    return {
        "lambda": lam,
        "N": N,
        "coherent_min": c_min,
        "coherent_max": max(coherent),
        "bound": 2 * lam**2,
        "deviation": abs(c_min - 2 * lam**2) / (2 * lam**2),
        "squeezed_min": min(squeezed),
        "squeezing_increases": bool(min(squeezed) > max(coherent)),
    }


# ------------------------------------------------------------- spectra


def spectrum_levels(eigs, rtol=1e-8):
    """Group sorted eigenvalues into ``(value, multiplicity)`` levels."""
    eigs = np.sort(np.asarray(eigs, float))
    levels = []
    for e in eigs:
        if levels and abs(e - levels[-1][0]) <= rtol * max(1.0, abs(e)):
            levels[-1][1] += 1
        else:
            levels.append([float(e), 1])
    return [(v, m) for v, m in levels]


def distance_sq_operator(coords, pad=2):
    """``sum_mu (q^mu)^2`` compressed to the truncated basis, and its spectrum.

    The squares are formed with ``pad`` extra levels per mode, so the
    returned matrix is the exact compression of the untruncated operator.
    """
    Lambda, lam = _frame(coords)
    N = coords.space.N
    big = build_coordinates(Lambda, lam, N + pad)
    D = np.einsum("mij,mjk->ik", big.q, big.q)
    occ = big.space.occupations()
    keep = np.nonzero(np.all(occ < N, axis=1))[0]
    D = D[np.ix_(keep, keep)]
    D = 0.5 * (D + D.conj().T)
    return D, np.linalg.eigvalsh(D)


# ------------------------------------------------------------- events


@dataclass
class EventSystem:
    """``n`` independent events sharing one ``sigma`` (sparse operators)."""

    n: int
    N: int
    Lambda: np.ndarray
    lam: float
    q: list = field(repr=False)
    theta: np.ndarray = None

    @property
    def modes(self):
        return 2 * self.n

    @property
    def dim(self):
        return self.N**self.modes

    @property
    def space(self):
        return OscillatorSpace(self.modes, self.N)

    def separation(self, j, k):
        """``q_j - q_k`` (four sparse components)."""
        return [self.q[j][m] - self.q[k][m] for m in range(4)]

    def barycenter(self):
        return [sum(self.q[j][m] for j in range(self.n)) / self.n for m in range(4)]


def independent_events(coords, n, N=None, max_dim=MAX_EVENT_DIM, lam=None):
    """Tensor product of ``n`` copies of the coordinates in ``coords``.

    ``lam`` overrides the length scale (needed with a bare frame).
    """
    Lambda, lam0 = _frame(coords)
    lam = lam0 if lam is None else float(lam)
    if N is None:
        if not isinstance(coords, Coordinates):
            raise ValueError("truncation N required with a bare frame")
        N = coords.space.N
    if n < 1:
        raise ValueError("need at least one event")
    dim = N ** (2 * n)
    if dim > max_dim:
        raise MemoryError(f"event system dimension {dim} exceeds {max_dim}")
    q = []
    for j in range(n):
        X = sparse_X(N, 2, 2 * j, 2 * n)
        q.append([lam * sum(Lambda[m, a] * X[a] for a in range(4) if Lambda[m, a]) for m in range(4)])
    theta = lam**2 * Lambda @ S @ Lambda.T
    return EventSystem(n, N, Lambda, lam, q, 0.5 * (theta - theta.T))


def _safe_block(space):
    return space.safe_indices()


def _block_residual(C, idx, target):
    """``max |C - target * 1|`` on the safe block of sparse ``C``."""
    B = C[idx][:, idx].toarray()
    return float(np.max(np.abs(B - target * np.eye(len(idx)))))


def _comm(A, B):
    return (A @ B - B @ A).tocsr()


def event_commutators(ev):
    """Same-event and cross-event commutator residuals."""
    idx = _safe_block(ev.space)
    same = cross = 0.0
    slots = []
    for j in range(ev.n):
        measured = np.zeros((4, 4), dtype=complex)
        for mu in range(4):
            for nu in range(4):
                C = _comm(ev.q[j][mu], ev.q[j][nu])
                same = max(same, _block_residual(C, idx, 1j * ev.theta[mu, nu]))
                measured[mu, nu] = np.mean(C[idx][:, idx].diagonal())
                for k in range(ev.n):
                    if k != j:
                        Ck = _comm(ev.q[j][mu], ev.q[k][nu])
                        cross = max(cross, abs(Ck).max() if Ck.nnz else 0.0)
        slots.append(measured)
    slot_spread = max(float(np.max(np.abs(s - slots[0]))) for s in slots)
    return {"same_event": same, "cross_event": float(cross), "slot_spread": slot_spread}


def separation_and_barycenter(ev):
    """Commutators of separations and of barycenter with separations."""
    if ev.n < 2:
        raise ValueError("need at least two events")
    idx = _safe_block(ev.space)
    qbar = ev.barycenter()
    sep_res = 0.0
    bary = 0.0
    tables = {}
    for j, k in itertools.combinations(range(ev.n), 2):
        d = ev.separation(j, k)
        table = np.zeros((4, 4), dtype=complex)
        for mu in range(4):
            for nu in range(4):
                C = _comm(d[mu], d[nu])
                sep_res = max(sep_res, _block_residual(C, idx, 2j * ev.theta[mu, nu]))
                table[mu, nu] = np.mean(C[idx][:, idx].diagonal())
                Cb = _comm(qbar[mu], d[nu])
                bary = max(bary, float(np.max(np.abs(Cb[idx][:, idx].toarray()))) if Cb.nnz else 0.0)
        tables[(j, k)] = table
    first = next(iter(tables.values()))
    spread = max(float(np.max(np.abs(t - first))) for t in tables.values())
    return {
        "separation_residual": sep_res,
        "barycenter_commutator": bary,
        "pair_spread": spread,
        "separation_theta": (first / 1j).real.tolist(),
    }


def separation_distance_spectrum(coords, N=8, pad=2, dense=True, k=40, truncation="box"):
    """Spectrum of ``sum_mu (q_1^mu - q_2^mu)^2`` for two events.

    The operator is built with ``pad`` extra levels per mode and compressed.
    ``truncation="box"`` keeps every occupation below ``N`` (dimension
    ``N^4``); only the bottom of that spectrum is exact because the free
    centre-of-mass modes are cut.  ``truncation="total"`` keeps total
    occupation below ``N``; for frames with orthogonal ``Lambda`` the
    operator conserves total occupation, so that spectrum is exact.
    ``dense`` diagonalizes the full compression, otherwise the ``k`` lowest
    eigenvalues are computed iteratively.
    """
    if isinstance(coords, EventSystem):
        if coords.n != 2:
            raise ValueError("separation spectrum needs two events")
        Lambda, lam, N = coords.Lambda, coords.lam, coords.N
    else:
        Lambda, lam = _frame(coords)
    if truncation not in ("box", "total"):
        raise ValueError("truncation must be 'box' or 'total'")
    M = N + pad if truncation == "box" else N + 1
    ev = independent_events(Lambda, 2, M, max_dim=M**4)
    d = [lam * x for x in ev.separation(0, 1)]
    D = sum((x @ x) for x in d).tocsr()
    occ = OscillatorSpace(4, M).occupations()
    if truncation == "box":
        keep = np.nonzero(np.all(occ < N, axis=1))[0]
    else:
        keep = np.nonzero(occ.sum(axis=1) < N)[0]
    D = D[keep][:, keep]
    D = 0.5 * (D + D.conj().T)
    if dense:
        if D.shape[0] > MAX_DENSE_DIM:
            raise MemoryError(f"dense dimension {D.shape[0]} exceeds {MAX_DENSE_DIM}")
        A = D.toarray()
        if np.max(np.abs(A.imag)) == 0.0:
            A = A.real
        return np.linalg.eigvalsh(A)
    w = spla.eigsh(D, k=k, which="SA", return_eigenvectors=False)
    return np.sort(w)


# -------------------------------------------------------------- volumes


def _separations(ev, order=None):
    order = list(range(ev.n)) if order is None else list(order)
    return [[ev.q[order[i + 1]][m] - ev.q[order[i]][m] for m in range(4)] for i in range(len(order) - 1)]


def volume_from_separations(d):
    """``eps_{mu nu rho sigma} d_1^mu d_2^nu d_3^rho d_4^sigma`` in the given operator order."""
    if len(d) != 4:
        raise ValueError("need four separation vectors")
    shape = d[0][0].shape
    V = sp.csr_matrix(shape, dtype=complex)
    for a, b in itertools.permutations(range(4), 2):
        W = sp.csr_matrix(shape, dtype=complex)
        for c, e in itertools.permutations([m for m in range(4) if m not in (a, b)], 2):
            W = W + EPSILON[a, b, c, e] * (d[2][c] @ d[3][e])
        V = V + (d[0][a] @ d[1][b]) @ W
    return V.tocsr()


def volume_operator(ev, order=None):
    """Four-volume operator of five events (sparse)."""
    if ev.n != 5 and order is None:
        raise ValueError("the four-volume needs five events")
    return volume_from_separations(_separations(ev, order))


def area_operator(ev, events=(0, 1, 2)):
    """Antisymmetric area components ``d_1^mu d_2^nu - d_1^nu d_2^mu``."""
    d = _separations(ev, events)
    return {(mu, nu): (d[0][mu] @ d[1][nu] - d[0][nu] @ d[1][mu]).tocsr()
            for mu, nu in itertools.combinations(range(4), 2)}


def three_volume_operator(ev, events=(0, 1, 2, 3)):
    """Dual three-volume ``V_sigma = eps_{mu nu rho sigma} d_1^mu d_2^nu d_3^rho``."""
    d = _separations(ev, events)
    shape = d[0][0].shape
    out = []
    for s in range(4):
        V = sp.csr_matrix(shape, dtype=complex)
        for a, b, c in itertools.permutations([m for m in range(4) if m != s], 3):
            V = V + EPSILON[a, b, c, s] * (d[0][a] @ d[1][b] @ d[2][c])
        out.append(V.tocsr())
    return out


def _sparse_norm(A):
    return float(spla.norm(A)) if A.nnz else 0.0


def volume_report(ev, eig=True, swap=1, k=4):
    """Diagnostics of the four-volume operator.

    Reports the relative size of the anti-Hermitian part, the Hermiticity
    defect of the Hermitian part, the sign-flip defect when events ``swap``
    and ``swap + 1`` are exchanged, and (with ``eig``) a shift-invert
    estimate of the smallest-magnitude eigenvalue of the Hermitian part
    with its residual.  The eigenvalue probe is qualitative only.
    """
    V = volume_operator(ev)
    norm = _sparse_norm(V)
    H = ((V + V.conj().T) * 0.5).tocsr()
    order = list(range(ev.n))
    order[swap], order[swap + 1] = order[swap + 1], order[swap]
    Vs = volume_operator(ev, order)
    out = {
        "N": ev.N,
        "n": ev.n,
        "dim": ev.dim,
        "nnz": int(V.nnz),
        "anti_hermitian_relative": _sparse_norm(V - V.conj().T) / norm,
        "hermitian_part_defect": _sparse_norm(H - H.conj().T),
        "swap_reordering_defect": _sparse_norm(Vs + V) / norm,
        "lambda4": ev.lam**4,
    }
    if eig:
        try:
            w, v = spla.eigsh(H, k=k, sigma=0.0, which="LM")
            i = int(np.argmin(np.abs(w)))
            out["smallest_magnitude_eigenvalue"] = float(w[i])
            out["eigen_residual"] = float(np.linalg.norm(H @ v[:, i] - w[i] * v[:, i]))
            out["converged"] = True
        except (spla.ArpackNoConvergence, RuntimeError) as exc:
            out["smallest_magnitude_eigenvalue"] = None
            out["eigen_residual"] = None
            out["converged"] = False
            out["solver_error"] = str(exc)
    return out


def volume_spectrum(ev, k=4):
    """Eigenvalues of the Hermitian part of the four-volume closest to zero.

    Small systems are diagonalized densely; larger ones use shift-invert
    Lanczos around zero.
    """
    V = volume_operator(ev)
    H = ((V + V.conj().T) * 0.5).tocsr()
    if ev.dim <= MAX_DENSE_DIM:
        w = np.linalg.eigvalsh(H.toarray())
    else:
        w = spla.eigsh(H, k=k, sigma=0.0, which="LM", return_eigenvectors=False)
    w = w[np.argsort(np.abs(w))][:k]
    return np.sort(w)


def classical_volume_check(n_points=50, seed=0):
    """Commutative surrogate: diagonal event coordinates reproduce the determinant."""
    rng = np.random.default_rng(seed)
    pos = rng.normal(size=(5, 4, n_points))
    d = [[sp.diags(pos[i + 1, m] - pos[i, m]).tocsr().astype(complex) for m in range(4)] for i in range(4)]
    V = volume_from_separations(d).diagonal()
    det = np.array([np.linalg.det((pos[1:, :, p] - pos[:-1, :, p])) for p in range(n_points)])
    return float(np.max(np.abs(V - det)) / max(1.0, np.max(np.abs(det))))
