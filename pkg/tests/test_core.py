import math

import numpy as np
import pytest

from kirlab.core import (
    ContractError, ConvergenceError, CouplingWeights, EvaluationError, KirlabError, NodeMeasure,
    ScalarField, TwoPointField, as_point, as_points, central_difference, check_division,
    constant_field, coupling_pairing, default_test_functions, grad0, node_values_field,
    num_y_derivs, tensor_bump,
)


def test_exception_hierarchy():
    assert issubclass(EvaluationError, KirlabError) and issubclass(EvaluationError, ArithmeticError)
    assert issubclass(ConvergenceError, KirlabError)
    assert issubclass(ContractError, KirlabError)


def test_points_shapes():
    assert as_point(2.0).shape == (1,)
    assert as_points([1.0, 2.0, 3.0]).shape == (3, 1)
    assert as_points([[1.0, 2.0]]).shape == (1, 2)


def test_scalar_field_support_is_enforced():
    f = ScalarField(lambda X: np.ones(len(X)), vectorized=True, support_radius=1.0)
    assert f([0.5]) == 1.0
    assert f([1.5]) == 0.0
    np.testing.assert_array_equal(f.many([[0.0], [2.0], [-0.9]]), [1.0, 0.0, 1.0])


def test_scalar_field_scalar_and_vectorized_agree():
    a = ScalarField(lambda x: float(x @ x))
    b = ScalarField(lambda X: np.sum(X * X, axis=1), vectorized=True)
    X = np.array([[1.0, 2.0], [0.5, -1.0]])
    np.testing.assert_allclose(a.many(X), b.many(X))
    assert a([3.0, 4.0]) == b([3.0, 4.0]) == 25.0


def test_two_point_far_value():
    P = TwoPointField(lambda x, y: 7.0, support_radius=1.0, far_value=lambda x: -float(x[0]))
    assert P([2.0], [0.5]) == 7.0
    assert P([2.0], [3.0]) == -2.0
    np.testing.assert_array_equal(P.many([[2.0]], [[0.5], [3.0]]), [7.0, -2.0])


def test_many_reads_single_nd_point():
    P = TwoPointField(lambda X, Y: np.sum(Y - X, axis=1), vectorized=True)
    x = np.array([1.0, 2.0])
    Y = np.array([[1.0, 2.0], [2.0, 4.0], [0.0, 0.0]])
    np.testing.assert_array_equal(P.many(x, Y), [0.0, 3.0, -3.0])
    with pytest.raises(ValueError):
        P.many(np.array([1.0, 2.0, 3.0]), Y)


def test_grad0():
    f = ScalarField(lambda x: float(x[0] ** 2), gradient=lambda x: 2 * x, sup_norm=4.0, lipschitz=4.0)
    g = grad0(f)
    assert g([1.0], [3.0]) == 8.0
    assert g.sup_norm == 8.0
    np.testing.assert_array_equal(g.y_gradient([1.0], [3.0]), [6.0])


def test_grad0_far_value_keeps_constant_sections():
    f = ScalarField(lambda X: np.ones(len(X)), vectorized=True, support_radius=1.0)
    g = grad0(f)
    # beyond the support f(y) = 0, so Phi = -f(x)
    assert g([0.0], [5.0]) == -1.0


def test_constant_field():
    c = constant_field(2.5)
    assert c([1.0, 2.0]) == 2.5
    assert c.lipschitz == 0.0


def test_node_measure_validation():
    with pytest.raises(ValueError):
        NodeMeasure([[0.0], [1.0]], [1.0, -1.0])
    with pytest.raises(ValueError):
        NodeMeasure([[0.0], [1.0]], [1.0])


def test_coupling_weights_validation():
    with pytest.raises(ValueError):
        CouplingWeights.from_dense(np.array([[1.0, 1.0], [1.0, 0.0]]))
    with pytest.raises(ValueError):
        CouplingWeights.from_dense(np.array([[0.0, -1.0], [1.0, 0.0]]))
    with pytest.raises(ValueError):
        CouplingWeights.from_dense(np.array([[0.0, 1.0], [2.0, 0.0]]), symmetric=True)


def test_coupling_json_round_trip():
    W = CouplingWeights.from_entries(3, [(0, 1, 2.0), (1, 0, 2.0), (1, 2, 0.5), (2, 1, 0.5)], symmetric=True)
    back = CouplingWeights.from_json(W.to_json())
    np.testing.assert_array_equal(back.matrix.toarray(), W.matrix.toarray())
    assert back.symmetric


def test_node_values_field():
    m = NodeMeasure([[0.0], [1.0]], [1.0, 1.0])
    f = node_values_field(m, [3.0, 4.0])
    np.testing.assert_array_equal(f.many([[0.0], [1.0], [0.5]]), [3.0, 4.0, 0.0])


def test_check_division_hand_example():
    # two nodes, one edge each way: Kir Phi(x_k) = w Phi(x_k, x_j) / a_k
    m = NodeMeasure([[0.0], [1.0]], [2.0, 1.0])
    W = CouplingWeights.from_entries(2, [(0, 1, 3.0), (1, 0, 3.0)], symmetric=True)
    Phi = TwoPointField(lambda x, y: float(y[0] - x[0]))
    psi = [3.0 * 1.0 / 2.0, 3.0 * -1.0 / 1.0]
    rep = check_division(m, coupling_pairing(m, W), psi, Phi, default_test_functions(m.nodes))
    assert rep.max_residual < 1e-15
    bad = check_division(m, coupling_pairing(m, W), [0.0, 0.0], Phi, default_test_functions(m.nodes))
    assert bad.max_relative > 0.5


def test_check_division_rejects_non_finite():
    m = NodeMeasure([[0.0]], [1.0])
    Phi = TwoPointField(lambda x, y: 0.0)
    with pytest.raises(EvaluationError):
        check_division(m, lambda th: float("nan"), [0.0], Phi, [constant_field(1.0)])


def test_tensor_bump():
    b = tensor_bump([0.0, 0.0], 1.0)
    assert b([0.0, 0.0]) == 1.0
    assert b([0.5, 0.0]) == pytest.approx(0.75**3)
    assert b([1.2, 0.0]) == 0.0


def test_num_y_derivs_against_analytic():
    P = TwoPointField(lambda x, y: math.sin(y[0]) * math.exp(y[1]) + x[0] * y[1] ** 2)
    x = np.array([0.3, -0.2])
    g = num_y_derivs(P, x, 1)
    np.testing.assert_allclose(g, [math.cos(0.3) * math.exp(-0.2), math.sin(0.3) * math.exp(-0.2) + 2 * 0.3 * -0.2],
                               atol=1e-8)
    H = num_y_derivs(P, x, 2)
    exact = [[-math.sin(0.3) * math.exp(-0.2), math.cos(0.3) * math.exp(-0.2)],
             [math.cos(0.3) * math.exp(-0.2), math.sin(0.3) * math.exp(-0.2) + 2 * 0.3]]
    np.testing.assert_allclose(H, exact, atol=1e-6)


def test_central_difference():
    assert central_difference(lambda p: float(p[0] ** 3), [2.0], 0) == pytest.approx(12.0, abs=1e-7)
