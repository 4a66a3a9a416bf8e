import json

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from qstkernel.core import (
    METRIC,
    S,
    PoincareTransform,
    as_antisymmetric,
    dumps_matrix,
    em_compose,
    em_decompose,
    hodge_dual,
    invariant_1,
    invariant_2,
    invariants_em,
    is_in_orbit,
    loads_matrix,
    lorentz_act_sigma,
    minkowski,
    random_antisymmetric,
    random_lorentz,
    random_rotation,
    sigma_conf_standard,
    theta_matrix,
)

seeds = st.integers(0, 2**31 - 1)


def pfaffian4(a):
    return a[0, 1] * a[2, 3] - a[0, 2] * a[1, 3] + a[0, 3] * a[1, 2]


def test_standard_values():
    assert invariant_1(S) == 0.0
    assert invariant_2(S) == -4.0
    assert invariant_2(S) ** 2 == 16.0
    e, m = em_decompose(S)
    np.testing.assert_array_equal(e, [0, -1, 0])
    np.testing.assert_array_equal(m, [0, 1, 0])


def test_em_roundtrip():
    rng = np.random.default_rng(3)
    a = random_antisymmetric(rng)
    np.testing.assert_array_equal(em_compose(*em_decompose(a)), a)


@given(seeds)
def test_contraction_matches_closed_form(seed):
    a = random_antisymmetric(np.random.default_rng(seed))
    i1, i2 = invariants_em(a)
    assert invariant_1(a) == pytest.approx(i1, abs=1e-10)
    assert invariant_2(a) == pytest.approx(i2, abs=1e-10)
    # second invariant is four times the Pfaffian; its square is 16 det
    assert invariant_2(a) == pytest.approx(4 * pfaffian4(a), abs=1e-10)
    assert invariant_2(a) ** 2 == pytest.approx(16 * np.linalg.det(a), rel=1e-9, abs=1e-9)


def test_double_dual_is_minus_identity():
    a = random_antisymmetric(np.random.default_rng(0))
    star1 = hodge_dual(a)  # lower indices
    star2 = hodge_dual(METRIC @ star1 @ METRIC)
    np.testing.assert_allclose(star2, -METRIC @ a @ METRIC, atol=1e-12)


@settings(max_examples=50)
@given(seeds, st.floats(0.0, 2.0))
def test_lorentz_invariance(seed, eta):
    L = random_lorentz(seed, eta)
    assert L.is_lorentz()
    assert L.det == 1.0 and L.orthochronous
    a = random_antisymmetric(np.random.default_rng(seed))
    b = lorentz_act_sigma(L, a)
    scale = 1 + np.cosh(eta) ** 2 * np.max(np.abs(a)) ** 2
    assert invariant_1(b) == pytest.approx(invariant_1(a), abs=1e-10 * scale)
    assert invariant_2(b) == pytest.approx(invariant_2(a), abs=1e-10 * scale)


def test_parity_flips_second_invariant():
    P = PoincareTransform.parity()
    b = lorentz_act_sigma(P, S)
    assert invariant_2(b) == -invariant_2(S)
    assert invariant_1(b) == invariant_1(S)
    assert is_in_orbit(b, "sigma")


def test_explicit_boost_matrix():
    eta = 0.7
    L = PoincareTransform.boost(eta, (1, 0, 0)).Lambda
    expected = np.eye(4)
    expected[:2, :2] = [[np.cosh(eta), np.sinh(eta)], [np.sinh(eta), np.cosh(eta)]]
    np.testing.assert_allclose(L, expected, atol=1e-15)


def test_orbits():
    assert is_in_orbit(S, "sigma") and is_in_orbit(S, "sigma1")
    assert not is_in_orbit(S, "sigma_conf")
    c = sigma_conf_standard()
    assert is_in_orbit(c, "sigma_conf") and not is_in_orbit(c, "sigma")
    with pytest.raises(ValueError):
        is_in_orbit(S, "nope")


@settings(max_examples=30)
@given(seeds)
def test_orbit_stability(seed):
    moved = lorentz_act_sigma(random_lorentz(seed, 1.0), S)
    assert is_in_orbit(moved, "sigma", tol=1e-8)
    rotated = lorentz_act_sigma(random_rotation(seed), S)
    assert is_in_orbit(rotated, "sigma1", tol=1e-10)


def test_compose_inverse():
    L = random_lorentz(5).compose(PoincareTransform.translation([1, 2, 3, 4]))
    I = L.compose(L.inverse())
    np.testing.assert_allclose(I.Lambda, np.eye(4), atol=1e-12)
    np.testing.assert_allclose(I.a, 0, atol=1e-12)


def test_validation_errors():
    with pytest.raises(ValueError):
        as_antisymmetric(np.ones((4, 4)))
    with pytest.raises(ValueError):
        lorentz_act_sigma(np.diag([2.0, 1, 1, 1]), S)
    with pytest.raises(ValueError):
        theta_matrix(S, lam=0)
    with pytest.raises(ValueError):
        random_lorentz(0, -1)


def test_theta_scaling():
    np.testing.assert_array_equal(theta_matrix(S, 2.0), 4 * S)


def test_metric():
    np.testing.assert_array_equal(minkowski(), METRIC)


def test_matrix_json_roundtrip():
    a = random_antisymmetric(np.random.default_rng(1))
    text = dumps_matrix(a)
    np.testing.assert_array_equal(loads_matrix(text), a)
    assert json.loads(text)["dim"] == 4
