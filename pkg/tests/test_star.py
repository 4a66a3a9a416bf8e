import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from qstkernel.core import S, PoincareTransform, random_lorentz
from qstkernel.star import (
    GaussianSum,
    GaussianSymbol,
    Grid,
    GridSymbol,
    TwoSlotSymbol,
    coassociativity_probe,
    covariance_defect,
    derivative,
    fourier,
    inverse_fourier,
    locality_probe,
    lorentz_pullback,
    moyal_product,
    multiply,
    relative_difference,
    sample_points,
    star_product,
    supports_disjoint,
    twisted_action,
    untwisted_action,
)
from qstkernel.star.grid import moyal_order_fit

S2 = np.array([[0.0, 1.0], [-1.0, 0.0]])
seeds = st.integers(0, 2**31 - 1)


def _rel(u, v):
    return np.linalg.norm(u - v) / np.linalg.norm(v)


def trapz_grid(n=201, L=14.0, d=2):
    ax = np.linspace(-L / 2, L / 2, n)
    pts = np.stack(np.meshgrid(*([ax] * d), indexing="ij"), axis=-1)
    return pts, (ax[1] - ax[0]) ** d


# --- Gaussian closed forms against quadrature -------------------------------------


def test_fourier_closed_form_against_quadrature():
    rng = np.random.default_rng(0)
    f = GaussianSymbol.random(rng, 2)
    pts, w = trapz_grid()
    vals = f(pts)
    for k in ([0.0, 0.0], [0.7, -0.4], [-1.1, 0.3]):
        k = np.array(k)
        quad = np.sum(vals * np.exp(-1j * pts @ k)) * w / (2 * np.pi) ** 2
        assert abs(f.fourier()(k) - quad) < 1e-10 * max(1.0, abs(quad))


def test_inverse_fourier_roundtrip():
    f = GaussianSymbol.random(np.random.default_rng(1), 3)
    pts = sample_points(3)
    assert relative_difference(f.fourier().inverse_fourier(), f, pts) < 1e-12


def test_gaussian_star_against_quadrature():
    rng = np.random.default_rng(2)
    f = GaussianSymbol.random(rng, 2)
    g = GaussianSymbol.random(rng, 2)
    theta = 0.8 * S2
    fg = star_product(f, g, theta)
    fh = f.fourier()
    hs, w = trapz_grid(n=241, L=16.0)
    hs = hs.reshape(-1, 2)
    for x in ([0.0, 0.0], [0.5, -0.2], [-0.8, 0.6]):
        x = np.array(x)
        integrand = fh(hs) * np.exp(1j * hs @ x) * g(x + 0.5 * hs @ theta.T)
        quad = np.sum(integrand) * w
        assert abs(fg(x) - quad) < 1e-9 * max(1.0, abs(quad))


def test_moyal_first_order_limit():
    rng = np.random.default_rng(3)
    f = GaussianSymbol.random(rng, 2)
    g = GaussianSymbol.random(rng, 2)
    x = sample_points(2, n=16)
    errs = []
    for t in (1e-2, 5e-3):
        exact = star_product(f, g, t * S2)(x)
        df = [derivative(f, m)(x) for m in range(2)]
        dg = [derivative(g, m)(x) for m in range(2)]
        first = f(x) * g(x) + 0.5j * t * (df[0] * dg[1] - df[1] * dg[0])
        errs.append(np.max(np.abs(exact - first)))
    # second-order remainder: halving theta divides the error by four
    assert errs[0] / errs[1] == pytest.approx(4.0, rel=0.05)


@settings(max_examples=20, deadline=None)
@given(seeds)
def test_gaussian_associativity_and_involution(seed):
    rng = np.random.default_rng(seed)
    f, g, h = (GaussianSymbol.random(rng, 4) for _ in range(3))
    pts = sample_points(4, spread=1.0)
    lhs = star_product(star_product(f, g, S), h, S)
    rhs = star_product(f, star_product(g, h, S), S)
    assert relative_difference(lhs, rhs, pts) < 1e-9
    a = star_product(f, g, S).conj()
    b = star_product(g.conj(), f.conj(), S)
    assert relative_difference(a, b, pts) < 1e-10


def test_zero_theta_is_pointwise():
    rng = np.random.default_rng(5)
    f, g = GaussianSymbol.random(rng, 2), GaussianSymbol.random(rng, 2)
    pts = sample_points(2)
    out = star_product(f, g, np.zeros((2, 2)))
    np.testing.assert_allclose(out(pts), f(pts) * g(pts), rtol=1e-12)


def test_gaussian_sum_linearity():
    rng = np.random.default_rng(6)
    f1, f2, g = (GaussianSymbol.random(rng, 2) for _ in range(3))
    pts = sample_points(2)
    lhs = star_product(GaussianSum([f1, f2]), g, S2)(pts)
    rhs = star_product(f1, g, S2)(pts) + star_product(f2, g, S2)(pts)
    np.testing.assert_allclose(lhs, rhs, rtol=1e-12)


def test_l2_norm_closed_form():
    f = GaussianSymbol.random(np.random.default_rng(7), 2)
    pts, w = trapz_grid()
    assert f.l2_norm() == pytest.approx(np.sqrt(np.sum(np.abs(f(pts)) ** 2) * w), rel=1e-9)


def test_invalid_gaussian():
    with pytest.raises(ValueError):
        GaussianSymbol(1.0, -np.eye(2))
    with pytest.raises(ValueError):
        star_product(GaussianSymbol.isotropic(2), GaussianSymbol.isotropic(2), np.ones((2, 2)))


# --- grid engine -------------------------------------------------------------------


@pytest.fixture(scope="module")
def grid_pair():
    grid = Grid.from_extent(48, 16.0, 2)
    rng = np.random.default_rng(11)
    f, g = GaussianSymbol.random(rng, 2), GaussianSymbol.random(rng, 2)
    return f, g, GridSymbol.sample(f, grid), GridSymbol.sample(g, grid)


def test_grid_fourier_matches_closed_form(grid_pair):
    f, _, fg, _ = grid_pair
    fh = fourier(fg)
    exact = f.fourier()(fh.grid.points())
    assert _rel(fh.values, exact) < 1e-10
    assert _rel(inverse_fourier(fh).values, fg.values) < 1e-13


def test_cross_engine(grid_pair):
    f, g, fg, gg = grid_pair
    out = star_product(fg, gg, S2)
    exact = GridSymbol.sample(star_product(f, g, S2), fg.grid).values
    assert _rel(out.values, exact) < 1e-10


def test_grid_trace_property(grid_pair):
    _, _, fg, gg = grid_pair
    prod = star_product(fg, gg, 1.5 * S2)
    assert np.sum(prod.values) == pytest.approx(np.sum(fg.values * gg.values), rel=1e-10)


def test_grid_derivative(grid_pair):
    f, _, fg, _ = grid_pair
    d0 = derivative(fg, 0).values
    exact = derivative(f, 0)(fg.grid.points())
    assert _rel(d0, exact) < 1e-9


def test_grid_pullback(grid_pair):
    f, _, fg, _ = grid_pair
    L = PoincareTransform(PoincareTransform.boost(0.2, (1.0,)).Lambda, [0.3, -0.1])
    out, bound = lorentz_pullback(fg, L, check=False)
    exact = f.pullback(L)(fg.grid.points())
    assert _rel(out.values, exact) < 1e-8
    assert bound < 1e-6


def test_decay_violation_raises():
    grid = Grid.from_extent(16, 4.0, 2)
    with pytest.raises(ValueError, match="decay"):
        GridSymbol.sample(GaussianSymbol.isotropic(2, 1.0), grid)


def test_grid_validation():
    with pytest.raises(ValueError):
        Grid(7, 0.1)
    grid = Grid.from_extent(16, 12.0)
    with pytest.raises(ValueError):
        GridSymbol(grid, np.zeros((4, 4)))


@pytest.fixture(scope="module")
def moyal_pair():
    grid = Grid.from_extent(48, 16.0, 2)
    f = GridSymbol.sample(GaussianSymbol.isotropic(2, 1.0, center=[0.5, -0.3], momentum=[0.4, 0.0]), grid)
    g = GridSymbol.sample(GaussianSymbol.isotropic(2, 1.0, center=[-0.4, 0.2], momentum=[0.0, -0.3]), grid)
    return f, g


def test_moyal_order_zero_is_pointwise(moyal_pair):
    f, g = moyal_pair
    np.testing.assert_allclose(moyal_product(f, g, S2, 0).values, f.values * g.values, atol=1e-14)


@pytest.mark.parametrize("order", [1, 2])
def test_moyal_order_fit(moyal_pair, order):
    f, g = moyal_pair
    slope, errors = moyal_order_fit(f, g, S2, order)
    assert abs(slope - (order + 1)) <= 0.1 * (order + 1)
    assert errors == sorted(errors, reverse=True)


def test_locality_probe_small():
    grid = Grid.from_extent(96, 24.0, 2)
    f = GridSymbol.sample(GaussianSymbol.isotropic(2, 0.6, center=[5.0, 0.0]), grid)
    g = GridSymbol.sample(GaussianSymbol.isotropic(2, 0.6, center=[-5.0, 0.0]), grid)
    assert supports_disjoint(f, g)
    star, moyal = locality_probe(f, g, 4 * S2, order=2)
    assert star > 1e-4
    assert moyal < 1e-8
    with pytest.raises(ValueError):
        locality_probe(f, f, S2)


# --- covariance and twists ----------------------------------------------------------


@settings(max_examples=10, deadline=None)
@given(seeds)
def test_covariance_with_transformed_sigma(seed):
    rng = np.random.default_rng(seed)
    f, g = GaussianSymbol.random(rng, 4), GaussianSymbol.random(rng, 4)
    transformed, fixed = covariance_defect(f, g, S, random_lorentz(seed, 1.0))
    assert transformed < 1e-8
    assert fixed >= 0.0


def test_fixed_sigma_not_covariant():
    rng = np.random.default_rng(0)
    f, g = GaussianSymbol.random(rng, 4), GaussianSymbol.random(rng, 4)
    _, fixed = covariance_defect(f, g, S, PoincareTransform.boost(0.8, (1.0, 0.0, 0.0)))
    assert fixed > 1e-3


@pytest.fixture(scope="module")
def two_slot():
    grid = Grid.from_extent(32, 14.0, 2)
    f = GridSymbol.sample(GaussianSymbol.isotropic(2, 1.0, center=[0.4, -0.3]), grid)
    g = GridSymbol.sample(GaussianSymbol.isotropic(2, 1.0, center=[-0.2, 0.5], momentum=[0.3, 0.0]), grid)
    return f, g, TwoSlotSymbol.from_pair(f, g)


def test_multiply(two_slot):
    f, g, F = two_slot
    assert np.max(np.abs(multiply(F).values - f.values * g.values)) < 1e-12
    ref = star_product(f, g, S2).values
    assert np.max(np.abs(multiply(F, S2).values - ref)) < 1e-12


def test_untwisted_action_is_pointwise_pullback(two_slot):
    f, g, F = two_slot
    L = PoincareTransform.boost(0.2, (1.0,))
    lhs = multiply(untwisted_action(L, F)).values
    fp = lorentz_pullback(f, L, check=False)[0].values
    gp = lorentz_pullback(g, L, check=False)[0].values
    assert _rel(lhs, fp * gp) < 1e-6


@pytest.mark.parametrize("scale", [1.0, 1.1])
def test_twisted_action_equivalence(two_slot, scale):
    f, g, F = two_slot
    L = PoincareTransform(scale * PoincareTransform.boost(0.3, (1.0,)).Lambda)
    lhs = multiply(twisted_action(L, S2, F), S2).values
    rhs = lorentz_pullback(star_product(f, g, S2, check=False), L, check=False)[0].values
    assert _rel(lhs, rhs) < 1e-5


def test_twisted_action_differs_from_untwisted_when_det_not_one(two_slot):
    _, _, F = two_slot
    L = PoincareTransform(1.1 * PoincareTransform.boost(0.3, (1.0,)).Lambda)
    a = multiply(twisted_action(L, S2, F), S2).values
    b = multiply(untwisted_action(L, F), S2).values
    assert _rel(a, b) > 1e-3


def test_coassociativity():
    grid = Grid.from_extent(8, 16.0, 2)
    mk = lambda c: GridSymbol.sample(GaussianSymbol.isotropic(2, 1.2, center=c), grid, check=False)
    f, g, h = mk([0.3, 0.0]), mk([-0.3, 0.2]), mk([0.0, -0.2])
    assert coassociativity_probe(S2, f, g, h) < 1e-12
    with pytest.raises(ValueError):
        coassociativity_probe(S2, f, g, GridSymbol.sample(GaussianSymbol.isotropic(2), Grid.from_extent(16, 16.0)))
