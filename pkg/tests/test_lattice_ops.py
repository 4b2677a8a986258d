import math

import mpmath
import numpy as np
import pytest

from kirlab.catalog import bump, square
from kirlab.core import ScalarField, grad0
from kirlab.graph_ops import laplacian
from kirlab.lattice_ops import (
    FracSpec, LatticeSpec, fd_is_harmonic, fd_kirchhoff, fd_laplacian, fd_system,
    frac_is_harmonic, frac_kirchhoff, frac_lattice_constant, frac_laplacian, frac_system,
)


def test_spec_validation():
    with pytest.raises(ValueError):
        LatticeSpec(1, 0.0, 5)
    with pytest.raises(ValueError):
        LatticeSpec(1, 0.1, 0)
    with pytest.raises(ValueError):
        FracSpec(2.0, 10)
    with pytest.raises(ValueError):
        FracSpec(0.0, 10)
    FracSpec(2.5, 10, relaxed=True)


@pytest.mark.parametrize("n", [1, 2, 3])
@pytest.mark.parametrize("h", [1.0, 0.1, 0.01])
def test_fd_exact_on_quadratics(n, h, rng):
    spec = LatticeSpec(n, h, 20)
    f = square(n)
    for _ in range(5):
        k = rng.integers(-15, 16, size=n)
        assert fd_laplacian(spec, f, k) == pytest.approx(2.0 * n, rel=1e-11)


def test_fd_kirchhoff_of_grad0_is_laplacian(rng):
    spec = LatticeSpec(2, 0.3, 6)
    f = ScalarField(lambda x: math.sin(x[0]) * math.exp(x[1]))
    for _ in range(5):
        k = rng.integers(-5, 6, size=2)
        assert fd_kirchhoff(spec, grad0(f), k) == pytest.approx(fd_laplacian(spec, f, k), rel=1e-13, abs=1e-13)


def test_fd_second_order_consistency():
    # sin has Laplacian -sin; the error shrinks like h^2
    f = ScalarField(lambda x: math.sin(x[0]))
    errs = []
    for h in (0.1, 0.05, 0.025):
        k = round(0.5 / h)
        errs.append(abs(fd_laplacian(LatticeSpec(1, h, k + 2), f, [k]) + math.sin(0.5)))
    assert 3.8 < errs[0] / errs[1] < 4.2 and 3.8 < errs[1] / errs[2] < 4.2


def test_fd_window_edge_rejected():
    with pytest.raises(ValueError):
        fd_laplacian(LatticeSpec(1, 1.0, 3), square(1), [3])


def test_fd_harmonic_linear():
    ok, dev = fd_is_harmonic(LatticeSpec(2, 0.5, 5), ScalarField(lambda x: 2 * x[0] - x[1]), [1, 2])
    assert ok and dev < 1e-14


def test_fd_system_matches_direct():
    spec = LatticeSpec(2, 0.5, 3)
    sys = fd_system(spec)
    f = ScalarField(lambda X: X[:, 0] ** 3 + X[:, 1], vectorized=True)
    lap = laplacian(sys, f)
    nodes = sys.measure.nodes
    for i, p in enumerate(nodes):
        k = np.rint(p / spec.h).astype(int)
        if np.max(np.abs(k)) < spec.N:
            assert lap[i] == pytest.approx(fd_laplacian(spec, f, k), rel=1e-12, abs=1e-12)


@pytest.mark.parametrize("alpha", [0.3, 1.0, 1.7])
def test_lattice_constant_one_dim_is_two_zeta(alpha):
    c = frac_lattice_constant(1, alpha, 2000)
    exact = float(2 * mpmath.zeta(1 + alpha))
    assert c.contains(exact)
    assert c.lower <= c.value <= c.upper


def test_lattice_constant_two_dim_brute():
    # sum over |j|_inf <= 400 plus an integral tail, done independently
    alpha, M = 1.0, 400
    r = np.arange(-M, M + 1, dtype=float)
    X, Y = np.meshgrid(r, r)
    D2 = X**2 + Y**2
    D2[M, M] = np.inf
    brute = math.fsum((D2 ** (-(2 + alpha) / 2)).ravel())
    c = frac_lattice_constant(2, alpha, 400)
    assert abs(c.partial - brute) < 1e-10
    # the remainder is roughly 2 pi / (alpha M^alpha) up to the square/disc mismatch
    assert c.upper - c.partial > 0


def test_frac_laplacian_direct_sum():
    f = bump(1, center=[0.0], radius=1.0)
    spec, fs = LatticeSpec(1, 0.1, 30), FracSpec(0.8, 2000)
    res = frac_laplacian(spec, fs, f, [3])
    # direct: compact support means the far terms are -f(x) |k-j|^{-1-a}
    J = np.arange(-2000, 2001)
    J = J[J != 0]
    vals = f.many((0.1 * (3 + J)).reshape(-1, 1))
    direct = math.fsum((vals - f([0.3])) * np.abs(J) ** (-1.8))
    tail = 2 * float(mpmath.zeta(1.8, 2001))
    direct = (direct - f([0.3]) * tail) / 0.1**0.8
    assert abs(res.value - direct) <= res.bound + 1e-12 * abs(direct)


def test_frac_kirchhoff_of_grad0(rng):
    f = bump(2, center=[0.1, 0.0], radius=0.8)
    spec, fs = LatticeSpec(2, 0.2, 6), FracSpec(1.2, 30)
    for _ in range(3):
        k = rng.integers(-3, 4, size=2)
        a = frac_kirchhoff(spec, fs, grad0(f), k)
        b = frac_laplacian(spec, fs, f, k)
        assert a.value == pytest.approx(b.value, rel=1e-12)


def test_frac_maximum_at_peak_is_negative():
    f = bump(1)
    assert frac_laplacian(LatticeSpec(1, 0.1, 20), FracSpec(1.0, 500), f, [0]).value < 0


def test_frac_harmonic_constant():
    one = ScalarField(lambda X: np.ones(len(X)), vectorized=True, sup_norm=1.0)
    ok, dev, bound = frac_is_harmonic(LatticeSpec(1, 1.0, 3), FracSpec(1.0, 1000), one, [0])
    assert ok


def test_frac_system_weights():
    spec, fs = LatticeSpec(1, 0.5, 3), FracSpec(1.0, 10)
    W = frac_system(spec, fs).coupling.matrix.toarray()
    # nodes at distance 1 and 2 in index units: h^{n-a} |d|^{-n-a}
    assert W[0, 1] == pytest.approx(0.5**0 * 1.0)
    assert W[0, 2] == pytest.approx(2.0**-2)
