import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from qstkernel import bundle as b
from qstkernel import localisation as loc
from qstkernel.acceptance import positivity_symbol
from qstkernel.core import PoincareTransform, S, random_lorentz, random_rotation
from qstkernel.rep import OscillatorSpace, build_coordinates
from qstkernel.star import star_product
from qstkernel.star.gaussian import GaussianSum, GaussianSymbol
from qstkernel.star.grid import Grid, GridSymbol

seeds = st.integers(0, 2**31 - 1)


def _gauss(center, momentum=None, dim=4):
    return GaussianSymbol.isotropic(dim, 1.0, center=center, momentum=momentum)


# --- frames and samples ---------------------------------------------------------


@settings(max_examples=30, deadline=None)
@given(seeds)
def test_darboux_frame(seed):
    rng = np.random.default_rng(seed)
    M = rng.normal(size=(4, 4))
    sigma = M - M.T
    Lam = b.darboux_frame(sigma)
    np.testing.assert_allclose(Lam @ S @ Lam.T, sigma, atol=1e-9 * max(1, np.abs(sigma).max()))


def test_darboux_frame_degenerate():
    sigma = np.zeros((4, 4))
    sigma[0, 1], sigma[1, 0] = 1.0, -1.0
    with pytest.raises(ValueError, match="degenerate"):
        b.darboux_frame(sigma)


def test_sample_validation():
    with pytest.raises(ValueError):
        b.SigmaSample(2 * S)  # wrong orbit: both invariants scale
    with pytest.raises(ValueError):
        b.SigmaSample(np.array([S, S]), weights=[1.0, -0.5])
    s = b.SigmaSample.boosted(3, seed=2)
    for p, F in zip(s.points, s.frames):
        np.testing.assert_allclose(F @ S @ F.T, p, atol=1e-10)


def test_pushforward_orbit_labels():
    s = b.SigmaSample.sigma1(3, seed=0)
    assert s.pushforward(random_rotation(5)).orbit == "sigma1"
    assert s.pushforward(PoincareTransform.boost(0.4, (1.0, 0.0, 0.0))).orbit == "sigma"
    w = s.pushforward(random_rotation(5)).normalized().weights
    assert w.sum() == pytest.approx(1.0)


# --- algebra ----------------------------------------------------------------------


def test_fiberwise_star_matches_per_point_product():
    sample = b.SigmaSample.boosted(3, seed=1, rapidity_max=0.5)
    f = b.GeneralizedSymbol.constant(sample, _gauss([0.1, 0.2, 0.0, 0.0]))
    g = b.GeneralizedSymbol.constant(sample, _gauss([0.0, -0.3, 0.2, 0.1], momentum=[0, 0.5, 0, 0]))
    lam = 1.3
    h = b.fiberwise_star(f, g, lam)
    x = np.random.default_rng(0).normal(size=(16, 4))
    for i, sigma in enumerate(sample.points):
        ref = star_product(f.fibers[i], g.fibers[i], lam**2 * sigma)
        np.testing.assert_allclose(h(x)[i], ref(x), rtol=1e-12)


def test_central_fibers():
    sample = b.SigmaSample.sigma1(2, seed=0)
    c = b.GeneralizedSymbol.central(sample, [2.0, 3j])
    f = b.GeneralizedSymbol.constant(sample, _gauss(np.zeros(4)))
    h = b.fiberwise_star(c, f)
    x = np.zeros((1, 4))
    np.testing.assert_allclose(h(x)[:, 0], [2.0, 3j])
    with pytest.raises(TypeError):
        c + f
    with pytest.raises(ValueError):
        b.conditional_expectation(c, 0.0)


def test_mismatched_samples():
    f = b.GeneralizedSymbol.constant(b.SigmaSample.sigma1(2, seed=0), _gauss(np.zeros(4)))
    g = b.GeneralizedSymbol.constant(b.SigmaSample.sigma1(2, seed=1), _gauss(np.zeros(4)))
    with pytest.raises(ValueError):
        b.fiberwise_star(f, g)


@settings(max_examples=8, deadline=None)
@given(seeds)
def test_covariance_with_determinant(seed):
    rng = np.random.default_rng(seed)
    sample = b.SigmaSample.boosted(2, seed=seed % 1000, rapidity_max=0.5)
    f = b.GeneralizedSymbol.constant(sample, GaussianSymbol.random(rng, 4))
    g = b.GeneralizedSymbol.constant(sample, GaussianSymbol.random(rng, 4))
    L = random_lorentz(seed % 997, 0.5)
    with_det, plain = b.action_covariance_defect(L, f, g)
    assert with_det < 1e-8
    if L.det < 0:
        # improper transformations need the det factor
        assert plain > 0.5
    else:
        assert plain < 1e-8


def test_parity_needs_determinant():
    rng = np.random.default_rng(3)
    sample = b.SigmaSample.single()
    f = b.GeneralizedSymbol.constant(sample, GaussianSymbol.random(rng, 4))
    g = b.GeneralizedSymbol.constant(sample, GaussianSymbol.random(rng, 4))
    P = PoincareTransform(np.diag([1.0, -1.0, -1.0, -1.0]))
    with_det, plain = b.action_covariance_defect(P, f, g)
    assert with_det < 1e-10 and plain > 0.5


# --- conditional expectation and positivity ---------------------------------------


@pytest.mark.parametrize("t", [-0.7, 0.0, 0.4])
def test_slice_closed_form_vs_quadrature(t):
    fib = GaussianSum([_gauss([0.2, 0.3, 0.0, -0.1]), _gauss([0.0, -0.5, 0.4, 0.0], [0, 0, 0.8, 0]).scale(0.5j)])
    closed = b.slice_integral(fib, t)
    quad = b.slice_quadrature(fib, t, extent=14.0, n=40)
    assert closed == pytest.approx(quad, rel=1e-10)


def test_grid_slice_matches_closed_form():
    g2 = GaussianSymbol.isotropic(2, 0.8, center=[0.1, -0.2], momentum=[0.0, 0.6])
    grid = Grid.from_extent(64, 16.0, 2)
    val = b.slice_integral(GridSymbol.sample(g2, grid), 0.3)
    assert val == pytest.approx(g2.slice_integral(0.3), rel=1e-10)
    with pytest.raises(ValueError, match="outside"):
        b.slice_integral(GridSymbol.sample(g2, grid), 9.0)


def test_gaussian_inner_vs_grid():
    f = GaussianSum([GaussianSymbol.isotropic(2, 1.0, center=[0.5, 0.0]),
                     GaussianSymbol.isotropic(2, 0.7, center=[0.0, -0.4], momentum=[0.3, 0.2]).scale(1j)])
    grid = Grid.from_extent(64, 16.0, 2)
    fg = GridSymbol.sample(f, grid)
    assert b.gaussian_inner(f, f).real == pytest.approx(b.fiber_norm_sq(fg), rel=1e-10)


def test_positivity_and_witness():
    f = positivity_symbol(b.SigmaSample.sigma1(3, seed=0))
    pos = b.positivity_scan(f, [-0.5, 0.0, 0.5])
    assert pos["passed"] and pos["max_abs_imag"] < 1e-10 * pos["norm_sq"]
    ax = np.linspace(-2.0, 2.0, 7)
    pts = np.stack(np.meshgrid(ax, ax, ax, ax, indexing="ij"), axis=-1).reshape(-1, 4)
    wit = b.negativity_witness(f, pts)
    assert wit["found"] and wit["value"] < 0


# --- states -----------------------------------------------------------------------


def test_quantized_expectation_matches_gaussian_formula():
    L = random_lorentz(3, 0.3)
    c = build_coordinates(L, 1.0, N=8)
    f = _gauss([0.2, -0.1, 0.3, 0.0])
    v = b.fiber_expectation(f, loc.coherent_state(0.0, 8), c, b.default_kgrid())
    # the vacuum of q = Lambda X has covariance Lambda Lambda^T / 2
    ref = b.gaussian_state_expectation(f, np.zeros(4), 0.5 * L.Lambda @ L.Lambda.T)
    assert v == pytest.approx(ref, rel=1e-6)


def test_evaluate_state_central():
    sample = b.SigmaSample(np.array([S, S]), weights=[0.25, 0.75])
    space = OscillatorSpace(2, 4)
    states = [loc.QuantumState.random(space, np.random.default_rng(i)) for i in range(2)]
    omega = b.BundleState(sample, states)
    val = b.evaluate_state(omega, b.GeneralizedSymbol.central(sample, [2.0, 4.0]))
    assert val == pytest.approx(3.5)


def test_bundle_state_validation():
    sample = b.SigmaSample(np.array([S, S]), weights=[0.5, 0.4])
    space = OscillatorSpace(2, 4)
    states = [loc.QuantumState.random(space, np.random.default_rng(i)) for i in range(2)]
    with pytest.raises(ValueError, match="sum to one"):
        b.BundleState(sample, states)
    with pytest.raises(ValueError):
        b.BundleState(sample.normalized(), states[:1])
