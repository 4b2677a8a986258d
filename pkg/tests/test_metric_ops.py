import math

import numpy as np
import pytest
from scipy import integrate

from kirlab.catalog import bump, square
from kirlab.core import ContractError, ScalarField, TwoPointField, grad0
from kirlab.dyadic_ops import HaarFunction, haar_eigenvalue, rho
from kirlab.graph_ops import laplacian
from kirlab.lattice_ops import LatticeSpec, fd_laplacian
from kirlab.metric_ops import (
    ComparableKernel, DyadicHalfLine, EuclideanSpace, MetricMeasureNet, ahlfors_kirchhoff, check_metric,
    dyadic_net, haar_lipschitz, lattice_net, net_frac_laplacian, net_frac_system, net_kirchhoff,
    net_laplacian, net_system,
)


def test_lattice_net_reproduces_finite_differences():
    h, N = 0.1, 10
    net = lattice_net(h, N)
    H = np.full((len(net), len(net)), 1.0 / (2 * h * h))
    f = ScalarField(lambda x: math.sin(3 * x[0]))
    spec = LatticeSpec(1, h, N)
    for k in range(1, 2 * N):
        assert net_laplacian(net, H, f, k) == pytest.approx(fd_laplacian(spec, f, [k - N]), rel=1e-12, abs=1e-12)


def test_kirchhoff_of_grad0_and_system(rng):
    net = lattice_net(0.25, 6)
    N = len(net)
    A = rng.uniform(0.5, 2.0, size=(N, N))
    H = (A + A.T) / 2
    f = square(1)
    sys = net_system(net, H)
    lap = laplacian(sys, f)
    for k in range(N):
        a = net_kirchhoff(net, H, grad0(f), k)
        assert a == pytest.approx(net_laplacian(net, H, f, k), rel=1e-13, abs=1e-13)
        assert lap[k] == pytest.approx(a, rel=1e-13, abs=1e-13)


def test_H_must_be_positive_where_used():
    net = lattice_net(0.5, 3)
    H = np.zeros((7, 7))
    with pytest.raises(ValueError):
        net_laplacian(net, H, square(1), 3)
    with pytest.raises(ValueError):
        net_laplacian(net, np.triu(np.ones((7, 7))), square(1), 3)


def test_dyadic_net_neighbours():
    net = dyadic_net(2, 15, C=0.5)
    # radius C 2^-2 = 1/8: only rho = 2^-2 is excluded, so no neighbours
    assert net.neighbours(5).size == 0
    # rho(x_5, x_4) = 1/2 and rho(x_5, x_6) = rho(x_5, x_7) = 1 at level 2
    net = dyadic_net(2, 15, C=2.5)
    assert sorted(net.neighbours(5).tolist()) == [4]


def test_net_frac_example():
    # two unit-mass points at distance 1, ball masses 1: weight 1 / (1 + 1)
    net = MetricMeasureNet(points=[[0.0], [1.0]], masses=[1.0, 1.0],
                           metric=lambda x, y: float(abs(x[0] - y[0])),
                           ball_mass=lambda x, r: 1.0)
    f = ScalarField(lambda x: x[0])
    assert net_frac_laplacian(net, 0.7, f, 0) == pytest.approx(0.5)


def test_net_frac_system_symmetric_and_matches(rng):
    net = lattice_net(0.2, 5)
    sys = net_frac_system(net, 0.8)
    W = sys.coupling.matrix.toarray()
    assert np.array_equal(W, W.T)
    f = bump(1, radius=0.7)
    lap = laplacian(sys, f)
    for k in (0, 3, 5):
        assert lap[k] == pytest.approx(net_frac_laplacian(net, 0.8, f, k), rel=1e-12, abs=1e-14)


def test_json_round_trip():
    net = dyadic_net(1, 5)
    back = MetricMeasureNet.from_json(net.to_json())
    assert np.array_equal(back.points, net.points) and back.metric_name == "dyadic"
    obj = net.to_json()
    obj["extra"] = 1
    with pytest.raises(ValueError):
        MetricMeasureNet.from_json(obj)
    custom = MetricMeasureNet(points=[[0.0]], masses=[1.0], metric=lambda x, y: 0.0)
    with pytest.raises(ValueError):
        custom.to_json()


def test_non_metric_rejected():
    pts = np.linspace(0, 1, 12).reshape(-1, 1)
    with pytest.raises(ContractError):
        check_metric(lambda x, y: float((x[0] - y[0]) ** 2), pts, n_triples=500)
    with pytest.raises(ContractError):
        MetricMeasureNet(points=pts, masses=np.ones(12), metric=lambda x, y: float((x[0] - y[0]) ** 2))
    check_metric(lambda x, y: rho(x[0], y[0]), pts)


def test_bad_kernel_rejected():
    space = EuclideanSpace(1)
    good = ComparableKernel.pure_power(space, 0.2)
    good.check(space)
    bad = ComparableKernel(lambda x, Y: 2.0 * space.distances(x, Y) ** -1.4, 0.4, 1.0)
    with pytest.raises(ContractError):
        bad.check(space)
    Phi = grad0(bump(1))
    with pytest.raises(ContractError):
        ahlfors_kirchhoff(bad, space, Phi, [0.1])


def test_kernel_parameter_validation():
    with pytest.raises(ValueError):
        ComparableKernel(lambda x, Y: 1.0, 1.5, 1.0)
    with pytest.raises(ValueError):
        ComparableKernel(lambda x, Y: 1.0, 0.5, 1.0, c1=2.0, c2=1.0)


@pytest.mark.parametrize("s", [0.15, 0.35])
def test_euclidean_line_against_scipy(s):
    f = bump(1, center=[0.2], radius=1.0)
    x = 0.5
    space = EuclideanSpace(1)
    res = ahlfors_kirchhoff(ComparableKernel.pure_power(space, s), space, grad0(f), [x])
    g = lambda t: (f([x + t]) + f([x - t]) - 2 * f([x])) * t ** (-1 - 2 * s)
    # below d the second difference is f''(x) t^2 up to O(t^4); the support in t ends at 0.7 and 1.3
    d = 1e-3
    head = f.hessian([x])[0, 0] * d ** (2 - 2 * s) / (2 - 2 * s)
    a, _ = integrate.quad(g, d, 0.7, epsabs=1e-13, epsrel=1e-13, limit=400)
    b, _ = integrate.quad(g, 0.7, 1.3, epsabs=1e-13, epsrel=1e-13, limit=400)
    tail = -2 * f([x]) * 1.3 ** (-2 * s) / (2 * s)
    assert res.value == pytest.approx(head + a + b + tail, rel=1e-8)
    assert abs(res.value) <= res.near_bound + res.far_bound


def test_comparable_kernel_scaling():
    space = EuclideanSpace(1)
    K = ComparableKernel.pure_power(space, 0.25)
    Phi = grad0(bump(1))
    v = ahlfors_kirchhoff(K, space, Phi, [0.3]).value
    assert ahlfors_kirchhoff(K.scaled(3.0), space, Phi, [0.3]).value == pytest.approx(3 * v, rel=1e-10)


@pytest.mark.parametrize("s", [0.1, 0.25, 0.4])
def test_dyadic_half_line_haar_eigenvalue(s):
    space = DyadicHalfLine(resolution=1)
    K = ComparableKernel.pure_power(space, s)
    Phi = TwoPointField(lambda x, y: HaarFunction(0, 0)(float(y[0])), support_radius=1.0, sup_norm=1.0)
    for x in (0.1, 0.7):
        res = ahlfors_kirchhoff(K, space, Phi, [x], lipschitz=haar_lipschitz(0), check_pairs=32)
        assert res.value == pytest.approx(haar_eigenvalue(s) * HaarFunction(0, 0)(x), rel=1e-12)


def test_haar_lipschitz_is_an_upper_bound(rng):
    for j in (-1, 0, 2):
        h = HaarFunction(j, 1)
        X = rng.uniform(0, 4 * 2.0**-j, size=400)
        Y = rng.uniform(0, 4 * 2.0**-j, size=400)
        for x, y in zip(X, Y):
            d = rho(x, y)
            if d > 0:
                assert abs(h(x) - h(y)) <= haar_lipschitz(j) * d
