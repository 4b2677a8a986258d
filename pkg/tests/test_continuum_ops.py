import math

import mpmath
import numpy as np
import pytest

from kirlab.catalog import bump, cauchy_section, gaussian, sqdiff
from kirlab.continuum_ops import (
    FracKernelSpec, PVHilbertSpec, classical_kir, frac_bound, frac_kir_pv, frac_kir_regular,
    frac_kirchhoff, hilbert_kir_eps, hilbert_kir_limit, hilbert_laplacian, hilbert_pv,
)
from kirlab.core import ConvergenceError, ScalarField, TwoPointField, grad0


def line_oracle(c, r, x, s):
    """int (B(y) - B(x)) |x - y|^{-1-2s} dy for the bump B centred at c with radius r, in mpmath."""
    mpmath.mp.dps = 40
    c, r, x = mpmath.mpf(c), mpmath.mpf(r), mpmath.mpf(x)

    def B(y):
        u2 = ((y - c) / r) ** 2
        return mpmath.exp(1 - 1 / (1 - u2)) if u2 < 1 else mpmath.mpf(0)

    g = lambda t: (B(x + t) + B(x - t) - 2 * B(x)) * t ** (-1 - 2 * s)
    # tanh-sinh samples far below any working precision near t = 0, so the
    # first stretch uses the even Taylor terms of the second difference
    d = mpmath.mpf("1e-3")
    head = sum(2 * mpmath.diff(B, x, 2 * k) / mpmath.factorial(2 * k) * d ** (2 * k - 2 * s) / (2 * k - 2 * s)
               for k in range(1, 6))
    edges = sorted({abs(c - r - x), abs(c + r - x)} - {0})
    pts = [d] + [e for e in edges if e > d]
    body = head + mpmath.quad(g, pts)
    tail = -2 * B(x) * pts[-1] ** (-2 * s) / (2 * s)
    return float(body + tail)


def test_classical_kir_paths():
    Phi = sqdiff(3)
    assert classical_kir(Phi, [0.1, 0.2, 0.3]) == pytest.approx(6.0)
    P = TwoPointField(lambda x, y: float(np.sum(y**3)))
    assert classical_kir(P, [0.5, -1.0]) == pytest.approx(6 * (0.5 - 1.0), abs=1e-6)


def test_spec_validation():
    with pytest.raises(ValueError):
        FracKernelSpec(4, 0.3)
    with pytest.raises(ValueError):
        FracKernelSpec(1, 1.0)
    with pytest.raises(ValueError):
        frac_kir_regular(FracKernelSpec(1, 0.7), grad0(bump(1)), [0.0])
    with pytest.raises(ValueError):
        frac_kir_pv(FracKernelSpec(1, 0.3), grad0(bump(1)), [0.0])


@pytest.mark.parametrize("s", [0.1, 0.25, 0.45])
@pytest.mark.parametrize("x", [0.0, 0.4, 1.5])
def test_regular_against_mpmath(s, x):
    f = bump(1, center=[0.3], radius=0.8)
    res = frac_kir_regular(FracKernelSpec(1, s), grad0(f), [x])
    assert res.value == pytest.approx(line_oracle(0.3, 0.8, x, s), rel=1e-8, abs=1e-10)


@pytest.mark.parametrize("s", [0.2, 0.4])
def test_regular_plane_radial_gaussian(s):
    # int (e^{-|y|^2} - 1) |y|^{-2-2s} dy = 2 pi int_0^inf (e^{-r^2} - 1) r^{-1-2s} dr = pi Gamma(-s)
    f = gaussian(2)
    res = frac_kir_regular(FracKernelSpec(2, s, tol=1e-11), grad0(f), [0.0, 0.0])
    assert res.value == pytest.approx(math.pi * math.gamma(-s), rel=1e-8)


@pytest.mark.parametrize("s", [0.6, 0.75, 0.9])
def test_pv_plane_radial_gaussian(s):
    f = gaussian(2)
    res = frac_kir_pv(FracKernelSpec(2, s, tol=1e-11, levels=14), grad0(f), [0.0, 0.0])
    assert res.value == pytest.approx(math.pi * math.gamma(-s), rel=1e-7)
    assert res.rate == pytest.approx(2 - 2 * s, abs=0.05)


@pytest.mark.parametrize("s", [0.5, 0.7])
def test_pv_line_against_mpmath(s):
    f = bump(1, center=[0.0], radius=1.0)
    res = frac_kir_pv(FracKernelSpec(1, s, levels=14), grad0(f), [0.35])
    assert res.value == pytest.approx(line_oracle(0.0, 1.0, 0.35, s), rel=1e-7)
    # Cauchy differences shrink like eps^{2-2s}
    assert res.rate == pytest.approx(2 - 2 * s, abs=0.05)


def test_pv_non_smooth_section_detected():
    # |y - x|^{1.2}: the Cauchy differences grow like eps^{1.2 - 2s} for 2s > 1.2
    P = TwoPointField(lambda x, y: float(abs(y[0] - x[0]) ** 1.2 * (abs(y[0]) < 3)), support_radius=3.0,
                      y_gradient=lambda x, y: np.zeros(1))
    with pytest.raises(ConvergenceError):
        frac_kir_pv(FracKernelSpec(1, 0.8, levels=10), P, [0.0])


def test_regular_bound():
    f = bump(1)
    Phi = grad0(f)
    spec = FracKernelSpec(1, 0.3)
    b = frac_bound(spec, sup_norm=2.0, grad_norm=f.lipschitz)
    for x in np.linspace(-1.5, 1.5, 7):
        assert abs(frac_kirchhoff(spec, Phi, [x])) <= b


def test_hilbert_closed_form():
    f = ScalarField(lambda X: 1.0 / (1.0 + X[:, 0] ** 2), vectorized=True)
    for x in (-2.0, 0.3, 1.0, 4.0):
        assert hilbert_pv(f, x).value == pytest.approx(math.pi * x / (1 + x * x), rel=1e-10)
        assert hilbert_laplacian(f, x).value == pytest.approx(math.pi * x * x / (1 + x * x), rel=1e-10)


def test_hilbert_kirchhoff_limit_and_eps():
    Phi = cauchy_section(1)
    x = 0.8
    exact = x * x * math.exp(-(x - 1) ** 2) * math.pi / (1 + x * x)
    assert hilbert_kir_limit(Phi, x).value == pytest.approx(exact, rel=1e-10)
    errs = [abs(hilbert_kir_eps(PVHilbertSpec(10.0**-m), Phi, x) - exact) for m in range(1, 5)]
    assert all(b < a for a, b in zip(errs, errs[1:]))
    assert hilbert_kir_eps(PVHilbertSpec(0.1), Phi, 0.0) == 0.0


def test_hilbert_constant_annihilated():
    one = ScalarField(lambda X: np.ones(len(X)), vectorized=True)
    assert abs(hilbert_laplacian(one, 0.7).value) < 1e-14
