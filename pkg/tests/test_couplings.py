import math

import mpmath
import numpy as np
import pytest
from scipy import integrate

from kirlab.catalog import square
from kirlab.core import ScalarField, TwoPointField, constant_field, grad0
from kirlab.couplings import (
    DeterministicCoupling, IndependentCoupling, QuadMeasure, deterministic_kir,
    deterministic_laplacian, independent_kir, independent_laplacian, measure_division, no_solution_example,
    non_unique_example, positive_order_kir_x, positive_order_kir_y, positive_order_laplacian_x,
    positive_order_laplacian_y, pushforward_integral,
)

TESTS = [constant_field(1.0), ScalarField(lambda x: x[0]), ScalarField(lambda x: x[0] ** 2),
         ScalarField(lambda x: math.exp(x[0]))]


def test_quad_measure_validation():
    with pytest.raises(ValueError):
        QuadMeasure([[0.0], [1.0]], [1.0, -1.0])
    with pytest.raises(ValueError):
        QuadMeasure([[0.0]], [1.0, 2.0])
    with pytest.raises(ValueError):
        QuadMeasure.density_on_box(None, [1.0], [0.0])


def test_density_on_box_integrates():
    m = QuadMeasure.density_on_box(ScalarField(lambda x: math.exp(x[0])), [0.0], [2.0])
    assert m.integrate(ScalarField(lambda x: x[0])) == pytest.approx(math.exp(2) + 1, rel=1e-14)
    m2 = QuadMeasure.density_on_box(None, [0.0, 0.0], [1.0, 2.0], order=8, panels=2)
    assert m2.total == pytest.approx(2.0)


def test_deterministic_values():
    c = DeterministicCoupling(lambda x: 2.0 * x, h=0.5)
    P = TwoPointField(lambda x, y: float(y[0] - x[0] ** 2))
    assert deterministic_kir(c, P, [3.0]) == pytest.approx((6.0 - 9.0) / 0.5)
    assert deterministic_laplacian(c, square(1), [3.0]) == pytest.approx((36.0 - 9.0) / 0.5)


def test_deterministic_dimension_check():
    c = DeterministicCoupling(lambda x: np.append(x, 0.0))
    with pytest.raises(ValueError):
        deterministic_kir(c, TwoPointField(lambda x, y: 0.0), [1.0])


def test_pushforward_identity():
    F = lambda x: np.sin(x) + 1.0
    c = DeterministicCoupling(F, h=0.25)
    mu = QuadMeasure.density_on_box(ScalarField(lambda x: 1 + x[0] ** 2), [-1.0], [2.0])
    Theta = TwoPointField(lambda x, y: float(x[0] * y[0] ** 2))
    a = c.pair_measure(mu).integrate(Theta)
    b = pushforward_integral(c, mu, Theta)
    exact, _ = integrate.quad(lambda t: t * (math.sin(t) + 1) ** 2 * (1 + t * t), -1, 2, epsabs=1e-14)
    assert a == pytest.approx(b, rel=1e-14)
    assert a == pytest.approx(exact / 0.25, rel=1e-12)


def test_deterministic_division():
    c = DeterministicCoupling(lambda x: x**2, h=0.5)
    mu = QuadMeasure.density_on_box(None, [0.0], [1.0])
    Phi = TwoPointField(lambda x, y: float(np.cos(y[0]) - x[0]))
    psi = ScalarField(lambda x: deterministic_kir(c, Phi, x))
    rep = measure_division(mu, c.pair_measure(mu), Phi, psi, TESTS)
    assert rep.max_residual < 1e-14


def test_independent_values_and_division():
    leb = QuadMeasure.density_on_box(None, [0.0], [1.0])
    dens = ScalarField(lambda x: 2.0 + x[0])
    c = IndependentCoupling(dens, leb)
    Phi = TwoPointField(lambda x, y: float(y[0] ** 2 + x[0]))
    for x in (0.0, 0.3, 0.9):
        assert independent_kir(c, Phi, [x]) == pytest.approx((2 + x) * (1 / 3 + x), rel=1e-14)
        assert independent_laplacian(c, ScalarField(lambda p: p[0]), [x]) == pytest.approx((2 + x) * (0.5 - x))
    mu = leb
    psi = ScalarField(lambda x: independent_kir(c, Phi, x))
    rep = measure_division(mu, c.pair_measure(mu), Phi, psi, TESTS)
    assert rep.max_residual < 1e-13


def test_independent_laplacian_uses_second_marginal_mass():
    leb = QuadMeasure.density_on_box(None, [0.0], [1.0])
    c = IndependentCoupling(constant_field(1.0), leb, mass=math.inf)
    with pytest.raises(ValueError):
        independent_laplacian(c, square(1), [0.5])
    c = IndependentCoupling(constant_field(1.0), leb, mass=2.0)
    # the declared mass replaces pi2(X) = 1
    assert independent_laplacian(c, constant_field(1.0), [0.5]) == pytest.approx(1.0 - 2.0)


def test_independent_kir_of_grad0_is_laplacian():
    leb = QuadMeasure.density_on_box(None, [-1.0], [1.0])
    c = IndependentCoupling(ScalarField(lambda x: math.exp(x[0])), leb)
    f = ScalarField(lambda x: math.sin(x[0]))
    for x in (-0.5, 0.2):
        assert independent_kir(c, grad0(f), [x]) == pytest.approx(independent_laplacian(c, f, [x]), rel=1e-13)


# positive order ------------------------------------------------------------


def _pos_x_oracle(i, Phi_mp, F_mp, g_mp, x):
    """(1/g) d_i [g Phi(x, F(x))] - (d_{x_i} Phi)(x, F(x)), all derivatives by mpmath."""
    mpmath.mp.dps = 30
    x = [mpmath.mpf(v) for v in x]

    def moved(t, k=i):
        z = list(x)
        z[k] = t
        return z

    total = mpmath.diff(lambda t: g_mp(moved(t)) * Phi_mp(moved(t), F_mp(moved(t))), x[i]) / g_mp(x)
    y = F_mp(x)
    partial = mpmath.diff(lambda t: Phi_mp(moved(t), y), x[i])
    return float(total - partial)


def test_positive_order_x_one_dim():
    Phi_mp = lambda x, y: mpmath.sin(x[0]) * y[0] ** 2 + x[0] * y[0]
    F_mp = lambda x: [x[0] ** 2 + x[0]]
    g_mp = lambda x: mpmath.exp(x[0])
    Phi = TwoPointField(lambda x, y: math.sin(x[0]) * y[0] ** 2 + x[0] * y[0],
                        y_gradient=lambda x, y: np.array([2 * math.sin(x[0]) * y[0] + x[0]]))
    g = ScalarField(lambda x: math.exp(x[0]), gradient=lambda x: np.array([math.exp(x[0])]))
    c = DeterministicCoupling(lambda x: x**2 + x, g=g, jacobian=lambda x: np.array([[2 * x[0] + 1]]))
    for x in (0.3, 1.1, -0.7):
        assert positive_order_kir_x(c, 0, Phi, [x]) == pytest.approx(
            _pos_x_oracle(0, Phi_mp, F_mp, g_mp, [x]), rel=1e-13)
    # without declared derivatives the central differences get close
    c2 = DeterministicCoupling(lambda x: x**2 + x, g=ScalarField(lambda x: math.exp(x[0])))
    P2 = TwoPointField(lambda x, y: math.sin(x[0]) * y[0] ** 2 + x[0] * y[0])
    assert positive_order_kir_x(c2, 0, P2, [0.3]) == pytest.approx(
        _pos_x_oracle(0, Phi_mp, F_mp, g_mp, [0.3]), rel=1e-7)


def test_positive_order_x_plane():
    Phi_mp = lambda x, y: mpmath.exp(y[0] - x[1]) * y[1] + x[0] * y[1] ** 2
    F_mp = lambda x: [x[0] * x[1], x[0] + mpmath.sin(x[1])]
    g_mp = lambda x: 1 + x[0] ** 2 + x[1] ** 2
    Phi = TwoPointField(lambda x, y: math.exp(y[0] - x[1]) * y[1] + x[0] * y[1] ** 2)
    g = ScalarField(lambda x: 1 + x[0] ** 2 + x[1] ** 2)
    c = DeterministicCoupling(lambda x: np.array([x[0] * x[1], x[0] + math.sin(x[1])]), g=g)
    for i in (0, 1):
        assert positive_order_kir_x(c, i, Phi, [0.4, -0.3]) == pytest.approx(
            _pos_x_oracle(i, Phi_mp, F_mp, g_mp, [0.4, -0.3]), rel=1e-7)


def test_positive_order_hand_values():
    c = DeterministicCoupling(lambda x: x**2, g=constant_field(1.0))
    Phi = TwoPointField(lambda x, y: float((y[0] - x[0]) ** 2))
    # d_y Phi at y = F(x): 2 (x^2 - x)
    assert positive_order_kir_y(c, 0, Phi, [0.5]) == pytest.approx(-0.5, abs=1e-8)
    # g = 1: Kir_x = 2 (F - x) F' = 2 (x^2 - x) 2x
    assert positive_order_kir_x(c, 0, Phi, [0.5]) == pytest.approx(-0.5, abs=1e-7)


def test_positive_order_laplacians_match_grad0():
    g = ScalarField(lambda x: 2 + math.cos(x[0]))
    c = DeterministicCoupling(lambda x: np.exp(x), g=g)
    f = ScalarField(lambda x: x[0] ** 3, gradient=lambda x: np.array([3 * x[0] ** 2]))
    for x in (0.1, 0.8):
        assert positive_order_laplacian_x(c, 0, f, [x]) == pytest.approx(
            positive_order_kir_x(c, 0, grad0(f), [x]), rel=1e-12)
        assert positive_order_laplacian_y(c, 0, f, [x]) == pytest.approx(3 * math.exp(2 * x), rel=1e-14)
        assert positive_order_kir_y(c, 0, grad0(f), [x]) == pytest.approx(3 * math.exp(2 * x), rel=1e-14)


def test_positive_order_needs_density():
    c = DeterministicCoupling(lambda x: x)
    with pytest.raises(ValueError):
        positive_order_kir_x(c, 0, TwoPointField(lambda x, y: 1.0), [0.0])
    c = DeterministicCoupling(lambda x: x, g=ScalarField(lambda x: x[0]))
    with pytest.raises(ValueError):
        positive_order_kir_x(c, 0, TwoPointField(lambda x, y: 1.0), [-1.0])
    with pytest.raises(ValueError):
        positive_order_kir_x(c, 3, TwoPointField(lambda x, y: 1.0), [1.0])


# counterexamples -----------------------------------------------------------


def test_no_solution_example():
    mu, pi, Phi = no_solution_example()
    # phi(x) = x vanishes on the atom but integrates to 1/2 against pi
    for c in (-3.0, 0.0, 1.0, 10.0):
        rep = measure_division(mu, pi, Phi, constant_field(c), TESTS)
        assert rep.residuals[1] == pytest.approx(0.5, rel=1e-14)


def test_non_unique_example():
    mu, pi, Phi = non_unique_example()
    cands = [constant_field(1.0), ScalarField(lambda x: 1 + x[0]), ScalarField(lambda x: math.cos(3 * x[0]))]
    values = [p([0.5]) for p in cands]
    assert len(set(values)) == 3
    for p in cands:
        assert measure_division(mu, pi, Phi, p, TESTS).max_residual == 0.0
