import math

import numpy as np
import pytest
import scipy.linalg
from hypothesis import given, settings
from hypothesis import strategies as st

from qstkernel import localisation as loc
from qstkernel.core import S, random_rotation
from qstkernel.rep import OscillatorSpace, build_coordinates, lowering

seeds = st.integers(0, 2**31 - 1)


# --- states ---------------------------------------------------------------------


def test_coherent_state_is_poisson():
    alpha = 0.7 - 0.4j
    st_ = loc.coherent_state([alpha, 0.0], 16)
    amps = st_.data.reshape(16, 16)[:, 0]
    n = np.arange(16)
    poisson = np.exp(-abs(alpha) ** 2) * abs(alpha) ** (2 * n) / np.array([math.factorial(k) for k in n])
    np.testing.assert_allclose(np.abs(amps) ** 2, poisson, atol=1e-12)


def test_coherent_state_amplitude_cap():
    with pytest.raises(ValueError):
        loc.coherent_state(2.0, 8)


def test_squeezed_amplitudes_match_dense_exponential():
    r, phi, N = 0.6, 0.3, 24
    M = 120
    a = lowering(M)
    z = r * np.exp(1j * phi)
    gen = 0.5 * (np.conj(z) * a @ a - z * a.conj().T @ a.conj().T)
    vac = np.zeros(M)
    vac[0] = 1
    ref = (scipy.linalg.expm(gen) @ vac)[:N]
    np.testing.assert_allclose(loc.squeezed_vacuum_amplitudes(r, N, phi), ref, atol=1e-12)


def test_squeezed_state_minimum_uncertainty():
    st_ = loc.squeezed_state([0.5, 0.0])
    d = loc.coordinate_uncertainties(st_, np.eye(4), 1.0)
    # X = (P1, P2, Q1, Q2): the squeezed mode keeps Delta P Delta Q = 1/2
    assert d[0] * d[2] == pytest.approx(0.5, rel=1e-10)
    assert {round(d[0], 10), round(d[2], 10)} == {round(math.exp(0.5) / math.sqrt(2), 10), round(math.exp(-0.5) / math.sqrt(2), 10)}


def test_state_validation():
    space = OscillatorSpace(2, 4)
    with pytest.raises(ValueError):
        loc.QuantumState(np.ones(16), space)
    with pytest.raises(ValueError):
        loc.QuantumState(np.ones(5), space)
    with pytest.raises(ValueError):
        loc.QuantumState(-np.eye(16) / 16, space)


def test_mixed_state_matches_pure():
    space = OscillatorSpace(2, 6)
    psi = loc.QuantumState.random(space, np.random.default_rng(0))
    rho = loc.QuantumState(psi.density(), space)
    X = loc.sparse_X(6)
    for A in X:
        assert rho.expect(A) == pytest.approx(psi.expect(A), abs=1e-12)
        assert rho.second_moment(A, X[2]) == pytest.approx(psi.second_moment(A, X[2]), abs=1e-12)
    assert psi.leakage() < 1e-14 and psi.top_level_weight() == 0.0


@settings(max_examples=20, deadline=None)
@given(seeds, st.integers(1, 3))
def test_heisenberg_on_random_states(seed, rank):
    space = OscillatorSpace(2, 8)
    rng = np.random.default_rng(seed)
    state = loc.QuantumState.random(space, rng, rank=None if rank == 1 else rank)
    X = [x.toarray() for x in loc.sparse_X(8)]
    for i in range(4):
        for j in range(i + 1, 4):
            assert loc.heisenberg_check(state, X[i], X[j])["passed"]


def test_uncertainty_rejects_non_hermitian():
    space = OscillatorSpace(1, 4)
    state = loc.QuantumState.random(space, np.random.default_rng(1))
    with pytest.raises(ValueError):
        loc.uncertainty(state, lowering(4))


# --- uncertainty relations ----------------------------------------------------------


def test_vacuum_lhs():
    rep = loc.stur_check(loc.coherent_state(0.0, 8), build_coordinates(N=8))
    assert rep["lhs1"] == pytest.approx(1.5) and rep["lhs2"] == pytest.approx(1.5)
    assert rep["passed"]


@pytest.mark.parametrize("lam", [0.5, 2.0])
def test_lhs_scales_with_lambda_squared(lam):
    st_ = loc.coherent_state([0.3, -0.2j], 16)
    base = loc.stur_check(st_, np.eye(4), 1.0)
    scaled = loc.stur_check(st_, np.eye(4), lam)
    assert scaled["lhs1"] == pytest.approx(lam**2 * base["lhs1"])
    assert scaled["lhs2"] == pytest.approx(lam**2 * base["lhs2"])


def test_leaky_state_rejected():
    space = OscillatorSpace(2, 6)
    v = np.zeros(36)
    v[-1] = 1.0
    with pytest.raises(ValueError, match="leaks"):
        loc.stur_check(loc.QuantumState(v, space), np.eye(4), 1.0)


def test_scan_small_and_deterministic():
    a = loc.stur_scan(n_states=300, seed=4, N=6)
    b = loc.stur_scan(n_states=300, seed=4, N=6)
    assert a == b
    assert a["violations"] == 0 and a["heisenberg_violations"] == 0 and a["passed"]


def test_equal_squeezing_stays_above_bound():
    fam = loc.squeezed_stur_family(rs=[0.0, 0.3, 0.6])
    assert fam["passed"] and fam["min_lhs"] > 1.0


def test_single_mode_squeezing_drops_second_relation():
    rows = loc.single_mode_squeeze_probe(rs=[0.0, 0.5, 1.0])
    assert rows[0]["lhs2"] == pytest.approx(1.5)
    assert rows[1]["lhs2"] > 1.0
    assert rows[2]["lhs2"] < 1.0
    assert all(r["lhs1"] >= 1.0 for r in rows)


def test_optimal_localization():
    out = loc.optimal_localization_scan(build_coordinates(N=12), alphas=[0.0, 0.4], rs=(0.1,))
    assert out["deviation"] < 1e-10
    assert out["squeezing_increases"]


# --- spectra -----------------------------------------------------------------------


def test_spectrum_levels_grouping():
    assert loc.spectrum_levels([1.0, 1.0 + 1e-12, 2.0]) == [(1.0, 2), (2.0, 1)]


@pytest.mark.parametrize("lam", [1.0, 1.5])
def test_distance_spectrum(lam):
    _, w = loc.distance_sq_operator(build_coordinates(lam=lam, N=10))
    levels = loc.spectrum_levels(w)[:4]
    for n, (value, mult) in enumerate(levels):
        assert value == pytest.approx(2 * lam**2 * (n + 1), rel=1e-10)
        assert mult == n + 1


def test_distance_spectrum_rotation_invariant():
    _, w0 = loc.distance_sq_operator(build_coordinates(N=8))
    _, w1 = loc.distance_sq_operator(build_coordinates(random_rotation(3), N=8))
    np.testing.assert_allclose(w0[:10], w1[:10], atol=1e-12)


def test_separation_spectrum_total_truncation():
    w = loc.separation_distance_spectrum(build_coordinates(N=6), N=6, truncation="total")
    values = [v for v, _ in loc.spectrum_levels(w)[:3]]
    np.testing.assert_allclose(values, [4.0, 8.0, 12.0], rtol=1e-10)


def test_separation_spectrum_scales():
    w = loc.separation_distance_spectrum(build_coordinates(lam=2.0, N=5), N=5, truncation="total")
    assert w[0] == pytest.approx(16.0, rel=1e-10)


# --- event systems -----------------------------------------------------------------


@pytest.fixture(scope="module")
def events():
    return loc.independent_events(build_coordinates(N=4), 2)


def test_event_commutators(events):
    out = loc.event_commutators(events)
    assert out["same_event"] < 1e-12
    assert out["cross_event"] == 0.0
    assert out["slot_spread"] < 1e-12


def test_separation_commutator(events):
    out = loc.separation_and_barycenter(events)
    assert out["separation_residual"] < 1e-12
    np.testing.assert_allclose(out["separation_theta"], 2 * S, atol=1e-12)
    assert out["barycenter_commutator"] < 1e-12


def test_event_budget():
    with pytest.raises(MemoryError):
        loc.independent_events(np.eye(4), 5, N=4)


def test_classical_volume():
    assert loc.classical_volume_check(20, seed=1) < 1e-12


def test_volume_reordering_sign():
    # with commuting (diagonal) separations, reversing two events flips the volume
    rng = np.random.default_rng(2)
    import scipy.sparse as sp

    d = [[sp.diags(rng.normal(size=6)).tocsr().astype(complex) for _ in range(4)] for _ in range(4)]
    V = loc.volume_from_separations(d)
    Vs = loc.volume_from_separations([d[1], d[0], d[2], d[3]])
    assert abs(V + Vs).max() < 1e-12
    with pytest.raises(ValueError):
        loc.volume_from_separations(d[:3])


def test_volume_report_small():
    ev = loc.independent_events(np.eye(4), 5, N=2)
    rep = loc.volume_report(ev, eig=False)
    assert rep["dim"] == 1024
    assert rep["hermitian_part_defect"] < 1e-12
