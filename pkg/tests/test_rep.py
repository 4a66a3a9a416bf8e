from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from qstkernel.acceptance import homomorphism_symbols
from qstkernel.core import S, random_lorentz
from qstkernel.rep import (
    OscillatorSpace,
    build_coordinates,
    build_pi,
    build_planar,
    commutator,
    commutator_residuals,
    flipped_pi,
    hermitian_expm,
    homomorphism_defect,
    measured_theta,
    pi_residuals,
    schrodinger_pair,
    spatial_theta,
    timespace_classify,
    timespace_sweep,
    universal_xi,
    weyl_operator,
    weyl_quantize,
    weyl_relation_residual,
)
from qstkernel.star import GaussianSymbol, Grid

seeds = st.integers(0, 2**31 - 1)


def test_schrodinger_pair():
    P, Q = schrodinger_pair(12)
    np.testing.assert_allclose(P, P.conj().T)
    np.testing.assert_allclose(Q, Q.conj().T)
    C = commutator(P, Q)
    np.testing.assert_allclose(C[:-1, :-1], -1j * np.eye(11), atol=1e-13)
    # the top level carries the truncation defect
    assert abs(C[-1, -1] + 1j) > 1


def test_space_validation():
    with pytest.raises(ValueError):
        OscillatorSpace(2, 1)
    with pytest.raises(MemoryError):
        OscillatorSpace(4, 16).check_budget()
    assert len(OscillatorSpace(2, 8).safe_indices()) == 16


def test_coordinates_standard():
    c = build_coordinates(N=10)
    assert c.max_residual() < 1e-12
    assert c.hermiticity_defect() == 0.0
    np.testing.assert_allclose(measured_theta(c.space, c.q), S, atol=1e-12)


@settings(max_examples=10, deadline=None)
@given(seeds, st.floats(0.5, 2.0))
def test_coordinates_boosted(seed, lam):
    L = random_lorentz(seed, 1.0)
    c = build_coordinates(L, lam=lam, N=8)
    np.testing.assert_allclose(c.theta, lam**2 * L.Lambda @ S @ L.Lambda.T, atol=1e-12)
    assert c.max_residual() < 1e-10 * max(1.0, np.abs(c.theta).max())


def test_translation_generators():
    pp, px = pi_residuals(*build_pi(4))
    assert pp < 1e-12 and px < 1e-12
    # the opposite overall sign fails [Pi, X] = -i g by exactly 2
    _, px_flip = pi_residuals(*flipped_pi(4))
    assert px_flip == pytest.approx(2.0)


def test_weyl_operator_zero_and_unitarity():
    c = build_coordinates(N=12)
    np.testing.assert_allclose(weyl_operator(np.zeros(4), c), np.eye(144), atol=1e-14)
    W = weyl_operator(np.array([0.3, -0.2, 0.1, 0.4]), c)
    idx = c.space.safe_indices()
    U = (W.conj().T @ W)[np.ix_(idx, idx)]
    np.testing.assert_allclose(U, np.eye(idx.size), atol=1e-8)


def test_weyl_mode_factor_matches_dense_exponential():
    c = build_planar(N=20)
    k = np.array([0.4, -0.7])
    W = weyl_operator(k, c)
    Pb, Qb = schrodinger_pair(80)
    ref = hermitian_expm(k[0] * Pb + k[1] * Qb)[:20, :20]
    np.testing.assert_allclose(W, ref, atol=1e-12)


@settings(max_examples=10, deadline=None)
@given(seeds)
def test_weyl_relation(seed):
    rng = np.random.default_rng(seed)
    c = build_coordinates(N=20)
    h = rng.uniform(-0.5, 0.5, 4)
    k = rng.uniform(-0.5, 0.5, 4)
    assert weyl_relation_residual(h, k, c) < 1e-8


def test_weyl_relation_reversed_order_fails():
    c = build_coordinates(N=20)
    h = np.array([0.8, 0.0, 0.0, 0.0])
    k = np.array([0.0, 0.0, 0.8, 0.0])
    assert weyl_relation_residual(h, k, c) < 1e-8
    assert weyl_relation_residual(h, k, c, reversed_order=True) > 0.1


def test_quantized_gaussian_is_vacuum_projector():
    # 2 exp(-|x|^2) is the Weyl symbol of the ground-state projector
    c = build_planar(N=24)
    Qf = weyl_quantize(GaussianSymbol(2.0, 2 * np.eye(2)), c, Grid.from_extent(64, 24.0, 2))
    P0 = np.zeros((24, 24))
    P0[0, 0] = 1.0
    idx = c.space.safe_indices()
    np.testing.assert_allclose(Qf[np.ix_(idx, idx)], P0[np.ix_(idx, idx)], atol=1e-12)


def test_quantization_bandwidth_check():
    c = build_planar(N=16)
    with pytest.raises(ValueError, match="bandwidth"):
        weyl_quantize(GaussianSymbol(1.0, 0.2 * np.eye(2)), c, Grid.from_extent(16, 4.0, 2))


def test_planar_homomorphism_improves_with_N():
    f, g = homomorphism_symbols()
    kgrid = Grid.from_extent(80, 20.0, 2)
    d16 = homomorphism_defect(f, g, build_planar(N=16), kgrid)
    d24 = homomorphism_defect(f, g, build_planar(N=24), kgrid)
    assert d24 < d16 / 100


# --- spatial commutator family --------------------------------------------------


def test_spatial_theta():
    th = spatial_theta(1, 2, 3)
    assert th[1, 2] == -1 and th[1, 3] == -2 and th[2, 3] == -3
    np.testing.assert_array_equal(th, -th.T)


def test_classify_standard_example():
    r = timespace_classify(1, 1, -1, N=24)
    assert r["verified"] and r["max_residual"] <= 1e-10
    assert r["stated_conditions"] is True and not r["discrepancy"]
    assert r["stated_reduction_residual"] <= 1e-10
    assert r["central_element_residual"] <= 1e-10


def test_classify_flags_discrepancy():
    r = timespace_classify(1, 1, 0, N=16)
    assert r["verified"]
    assert r["stated_conditions"] is False
    assert r["discrepancy"] and "note" in r


def test_classify_abelian():
    r = timespace_classify(0, 0, 0, N=8)
    assert r["branch"] == "abelian" and r["verified"]
    assert r["stated_conditions"] is None


@settings(max_examples=20, deadline=None)
@given(*(st.fractions(-3, 3, max_denominator=4) for _ in range(3)))
def test_classify_always_verified(a, b, c):
    # a nonzero theta(a, b, c) has rank two, so one oscillator suffices
    r = timespace_classify(float(a), float(b), float(c), N=12)
    assert r["verified"]


def test_sweep_fields():
    rows = timespace_sweep(N=8, seed=1, n=5)
    assert len(rows) == 5
    for r in rows:
        assert {"verdict", "stated_conditions", "discrepancy", "exact"} <= set(r)
        Fraction(r["exact"][0])


def test_universal_xi():
    xi, th, space = universal_xi(N=6)
    assert commutator_residuals(space, xi, th).max() < 1e-12
