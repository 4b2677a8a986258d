import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from kirlab.core import CouplingWeights, NodeMeasure, ScalarField, TwoPointField, grad0
from kirlab.graph_ops import GraphSystem, is_harmonic, kirchhoff, laplacian, path_graph, random_system


def three_nodes():
    m = NodeMeasure([[0.0], [1.0], [2.0]], [1.0, 2.0, 1.0])
    W = CouplingWeights.from_entries(3, [(0, 1, 1.0), (1, 0, 1.0), (1, 2, 2.0), (2, 1, 2.0)], symmetric=True)
    return GraphSystem(m, W)


def test_hand_values():
    sys = three_nodes()
    f = ScalarField(lambda x: float(x[0] ** 2))
    # node 1: (1*(0 - 1) + 2*(4 - 1)) / 2 = 2.5
    np.testing.assert_allclose(laplacian(sys, f), [1.0, 2.5, -6.0])
    Phi = TwoPointField(lambda x, y: float(y[0]))
    np.testing.assert_allclose(kirchhoff(sys, Phi), [1.0, 2.0, 2.0])


def test_kirchhoff_of_grad0_is_laplacian(rng):
    sys = random_system(rng, 10, 2)
    f = ScalarField(lambda X: np.sin(X[:, 0]) + X[:, 1], vectorized=True)
    np.testing.assert_allclose(kirchhoff(sys, grad0(f)), laplacian(sys, f), rtol=1e-14, atol=1e-15)


def test_path_graph_linear_is_harmonic():
    sys = path_graph(np.arange(6.0))
    ok, dev = is_harmonic(sys, ScalarField(lambda x: 3.0 * x[0] + 1.0), nodes=range(1, 5))
    assert ok and dev < 1e-14
    ok, _ = is_harmonic(sys, ScalarField(lambda x: x[0] ** 2), nodes=range(1, 5))
    assert not ok


def test_isolated_node_has_no_mean():
    m = NodeMeasure([[0.0], [1.0]], [1.0, 1.0])
    sys = GraphSystem(m, CouplingWeights.from_entries(2, []))
    with pytest.raises(ValueError):
        is_harmonic(sys, ScalarField(lambda x: 0.0))


def test_size_mismatch():
    with pytest.raises(ValueError):
        GraphSystem(NodeMeasure([[0.0]], [1.0]), CouplingWeights.from_entries(2, []))


def test_json_round_trip_and_unknown_fields():
    sys = three_nodes()
    back = GraphSystem.from_json(sys.to_json())
    np.testing.assert_array_equal(back.coupling.matrix.toarray(), sys.coupling.matrix.toarray())
    bad = sys.to_json()
    bad["colour"] = "red"
    with pytest.raises(ValueError):
        GraphSystem.from_json(bad)


@settings(max_examples=40, deadline=None)
@given(st.integers(0, 10**6), st.integers(3, 14))
def test_flux_conservation(seed, n):
    rng = np.random.default_rng(seed)
    sys = random_system(rng, n, 2, symmetric=True)
    f = ScalarField(lambda X: np.cos(3 * X[:, 0]) * X[:, 1], vectorized=True)
    lap = laplacian(sys, f)
    total = math.fsum(sys.measure.weights * lap)
    scale = math.fsum(sys.measure.weights * np.abs(lap)) + 1e-300
    assert abs(total) <= 1e-12 * scale


@settings(max_examples=40, deadline=None)
@given(st.integers(0, 10**6))
def test_maximum_principle(seed):
    rng = np.random.default_rng(seed)
    sys = random_system(rng, 12, 2, symmetric=True)
    vals = rng.random(12)
    k = int(np.argmax(vals))
    m = sys.measure
    lookup = {tuple(p): v for p, v in zip(m.nodes, vals)}
    f = ScalarField(lambda x: lookup[tuple(x)])
    assert laplacian(sys, f)[k] <= 0.0


def test_non_finite_phi_reported():
    sys = three_nodes()
    with pytest.raises(ArithmeticError):
        kirchhoff(sys, TwoPointField(lambda x, y: float("inf")))
