"""Shared domain types and the division-contract checker.

A Kirchhoff divergence of a two-point field ``Phi`` with respect to a node
distribution ``T`` and a pair distribution ``S`` is any function ``psi`` with

    <T, phi * psi> = <<S, phi * Phi>>      for every test function phi.

Everything in this package represents ``T`` and ``S`` concretely (node
weights, densities, kernels, pushforwards), so the identity above can be
checked numerically on a finite family of test functions.  That check is
``check_division``; it is used as an oracle throughout the test-suite.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from typing import Callable, Iterable, Optional, Sequence, Union

import numpy as np
from scipy import sparse


class KirlabError(Exception):
    """Base class for numerical-contract failures (CLI exit code 3)."""


class EvaluationError(KirlabError, ArithmeticError):
    """A field or pairing produced a non-finite value."""


class ConvergenceError(KirlabError, ArithmeticError):
    """A limit, tail or principal value failed to converge."""


class ContractError(KirlabError):
    """A stated numerical contract (kernel bounds, admissibility, ...) is violated."""


def as_point(x) -> np.ndarray:
    """Return ``x`` as a 1-D float array of coordinates."""
    p = np.atleast_1d(np.asarray(x, dtype=float))
    if p.ndim != 1:
        raise ValueError(f"a point must be 1-D, got shape {p.shape}")
    return p


def as_points(xs) -> np.ndarray:
    """Return ``xs`` as an ``(m, n)`` float array of points."""
    p = np.asarray(xs, dtype=float)
    if p.ndim == 0:
        p = p.reshape(1, 1)
    elif p.ndim == 1:
        p = p.reshape(-1, 1)
    return p


def _pair_points(xs, ys):
    a, b = np.asarray(xs, dtype=float), np.asarray(ys, dtype=float)
    if a.ndim == 1 and b.ndim == 2 and len(a) == b.shape[1]:
        return a.reshape(1, -1), b
    if b.ndim == 1 and a.ndim == 2 and len(b) == a.shape[1]:
        return a, b.reshape(1, -1)
    X, Y = as_points(a), as_points(b)
    if X.shape[1] != Y.shape[1]:
        raise ValueError(f"x and y have dimensions {X.shape[1]} and {Y.shape[1]}")
    return X, Y


def _readonly(a: np.ndarray) -> np.ndarray:
    a = np.array(a, dtype=float, copy=True)
    a.flags.writeable = False
    return a


@dataclass(frozen=True)
class ScalarField:
    """A real function ``f`` on X = R^n.

    Parameters
    ----------
    func : callable
        ``func(x)`` for a single point ``x`` of shape ``(n,)``, or, when
        ``vectorized`` is true, ``func(X)`` for ``X`` of shape ``(m, n)``
        returning shape ``(m,)``.
    support_radius : float, optional
        ``f(x) = 0`` whenever ``|x|_2 > support_radius``; enforced on evaluation.
    gradient, hessian : callable, optional
        Analytic derivatives at a single point.
    sup_norm, lipschitz : float, optional
        Declared bounds, used by truncation and near-field error bounds.
    """

    func: Callable
    vectorized: bool = False
    support_radius: Optional[float] = None
    gradient: Optional[Callable] = None
    hessian: Optional[Callable] = None
    sup_norm: Optional[float] = None
    lipschitz: Optional[float] = None
    name: str = ""

    def __call__(self, x) -> float:
        p = as_point(x)
        if self.support_radius is not None and np.linalg.norm(p) > self.support_radius:
            return 0.0
        if self.vectorized:
            return float(np.asarray(self.func(p[None, :]), dtype=float).reshape(-1)[0])
        return float(self.func(p))

    def many(self, xs) -> np.ndarray:
        """Evaluate at every row of ``xs`` (shape ``(m, n)``)."""
        pts = as_points(xs)
        if self.vectorized:
            out = np.asarray(self.func(pts), dtype=float).reshape(-1).copy()
        else:
            out = np.array([float(self.func(p)) for p in pts])
        if self.support_radius is not None:
            out[np.linalg.norm(pts, axis=1) > self.support_radius] = 0.0
        return out


def _zero_far(x):
    return 0.0


@dataclass(frozen=True)
class TwoPointField:
    """A real function ``Phi(x, y)`` on X x X.

    ``support_radius`` declares that the y-sections are constant far away:
    ``Phi(x, y) = far_value(x)`` whenever ``|y|_2 > support_radius`` (the
    default far value is 0, i.e. compact support in y).  Operators that sum or
    integrate over all of X use this to close their tails exactly.
    """

    func: Callable
    vectorized: bool = False
    support_radius: Optional[float] = None
    far_value: Callable = _zero_far
    y_gradient: Optional[Callable] = None
    y_hessian: Optional[Callable] = None
    sup_norm: Optional[float] = None
    y_lipschitz: Optional[float] = None
    name: str = ""

    def __call__(self, x, y) -> float:
        px, py = as_point(x), as_point(y)
        if self.support_radius is not None and np.linalg.norm(py) > self.support_radius:
            return float(self.far_value(px))
        if self.vectorized:
            v = self.func(px[None, :], py[None, :])
            return float(np.asarray(v, dtype=float).reshape(-1)[0])
        return float(self.func(px, py))

    def many(self, xs, ys) -> np.ndarray:
        """Evaluate at matching rows of ``xs`` and ``ys``; either may be a single point.

        A 1-D argument whose length equals the other argument's dimension is
        read as one point, otherwise as a column of 1-D points.
        """
        X, Y = _pair_points(xs, ys)
        m = max(len(X), len(Y))
        if len(X) == 1 and m > 1:
            X = np.repeat(X, m, axis=0)
        if len(Y) == 1 and m > 1:
            Y = np.repeat(Y, m, axis=0)
        if self.vectorized:
            out = np.asarray(self.func(X, Y), dtype=float).reshape(-1).copy()
        else:
            out = np.array([float(self.func(a, b)) for a, b in zip(X, Y)])
        if self.support_radius is not None:
            far = np.linalg.norm(Y, axis=1) > self.support_radius
            if far.any():
                out[far] = [float(self.far_value(a)) for a in X[far]]
        return out

    def section(self, x) -> ScalarField:
        """The scalar field ``y -> Phi(x, y)``."""
        px = as_point(x)
        grad = None
        if self.y_gradient is not None:
            grad = lambda y: np.asarray(self.y_gradient(px, as_point(y)), dtype=float)
        hess = None
        if self.y_hessian is not None:
            hess = lambda y: np.asarray(self.y_hessian(px, as_point(y)), dtype=float)
        far = float(self.far_value(px)) if self.support_radius is not None else 0.0

        def f(Y):
            return self.many(px, Y)

        # a nonzero far value is not "support", so the radius is only kept for far == 0
        return ScalarField(
            f,
            vectorized=True,
            support_radius=self.support_radius if far == 0.0 else None,
            gradient=grad,
            hessian=hess,
            sup_norm=self.sup_norm,
            lipschitz=self.y_lipschitz,
        )


def grad0(f: ScalarField) -> TwoPointField:
    """Order-zero gradient ``(x, y) -> f(y) - f(x)``."""

    if f.vectorized:
        def func(X, Y):
            return f.many(Y) - f.many(X)
    else:
        def func(x, y):
            return f(y) - f(x)

    grad = None
    if f.gradient is not None:
        grad = lambda x, y: np.asarray(f.gradient(as_point(y)), dtype=float)
    hess = None
    if f.hessian is not None:
        hess = lambda x, y: np.asarray(f.hessian(as_point(y)), dtype=float)
    return TwoPointField(
        func,
        vectorized=f.vectorized,
        support_radius=f.support_radius,
        far_value=lambda x: -f(x),
        y_gradient=grad,
        y_hessian=hess,
        sup_norm=None if f.sup_norm is None else 2.0 * f.sup_norm,
        y_lipschitz=f.lipschitz,
        name=f"grad0({f.name})" if f.name else "",
    )


def constant_field(c: float) -> ScalarField:
    return ScalarField(
        lambda X: np.full(len(X), float(c)),
        vectorized=True,
        gradient=lambda x: np.zeros_like(as_point(x)),
        hessian=lambda x: np.zeros((len(as_point(x)),) * 2),
        sup_norm=abs(float(c)),
        lipschitz=0.0,
        name=f"const({c})",
    )


# ---------------------------------------------------------------------------
# discrete distributions


@dataclass(frozen=True)
class NodeMeasure:
    """Weighted node set ``T = sum_k a_k delta_{x_k}``."""

    nodes: np.ndarray
    weights: np.ndarray

    def __post_init__(self):
        nodes = as_points(self.nodes)
        weights = np.asarray(self.weights, dtype=float).reshape(-1)
        if len(nodes) != len(weights):
            raise ValueError(f"{len(nodes)} nodes but {len(weights)} weights")
        if not np.all(np.isfinite(nodes)):
            raise ValueError("node coordinates must be finite")
        if not np.all(weights > 0) or not np.all(np.isfinite(weights)):
            raise ValueError("node weights must be finite and strictly positive")
        if len(np.unique(nodes, axis=0)) != len(nodes):
            raise ValueError("nodes must be pairwise distinct")
        object.__setattr__(self, "nodes", _readonly(nodes))
        object.__setattr__(self, "weights", _readonly(weights))

    def __len__(self) -> int:
        return len(self.weights)

    @property
    def dim(self) -> int:
        return self.nodes.shape[1]

    def pair(self, g: ScalarField) -> float:
        """``<T, g> = sum_k a_k g(x_k)``."""
        return math.fsum(self.weights * g.many(self.nodes))

    def to_json(self) -> dict:
        return {"nodes": self.nodes.tolist(), "weights": self.weights.tolist()}

    @classmethod
    def from_json(cls, obj) -> "NodeMeasure":
        if isinstance(obj, str):
            obj = json.loads(obj)
        unknown = set(obj) - {"nodes", "weights"}
        if unknown:
            raise ValueError(f"unknown NodeMeasure fields: {sorted(unknown)}")
        return cls(np.asarray(obj["nodes"], dtype=float), np.asarray(obj["weights"], dtype=float))


@dataclass(frozen=True)
class CouplingWeights:
    """Sparse pair weights ``S = sum_{k,j} w_kj delta_{(x_k, x_j)}``.

    ``matrix`` holds ``w_kj`` in row ``k`` (outgoing from node ``k``).
    """

    matrix: sparse.csr_array
    symmetric: bool = False

    def __post_init__(self):
        W = sparse.csr_array(self.matrix, dtype=float)
        W.sum_duplicates()
        W.eliminate_zeros()
        if W.shape[0] != W.shape[1]:
            raise ValueError(f"coupling matrix must be square, got {W.shape}")
        if W.nnz and (np.any(W.data < 0) or not np.all(np.isfinite(W.data))):
            raise ValueError("coupling weights must be finite and nonnegative")
        if np.any(W.diagonal() != 0):
            raise ValueError("coupling weights must vanish on the diagonal (w_kk = 0)")
        if self.symmetric and (W - W.T).count_nonzero():
            raise ValueError("coupling flagged symmetric but w_kj != w_jk")
        W.data.flags.writeable = False
        object.__setattr__(self, "matrix", W)

    @classmethod
    def from_entries(cls, size: int, entries: Iterable[Sequence], symmetric: bool = False):
        rows, cols, vals = [], [], []
        for k, j, w in entries:
            if not (0 <= int(k) < size and 0 <= int(j) < size):
                raise ValueError(f"coupling index ({k}, {j}) outside node range 0..{size - 1}")
            rows.append(int(k))
            cols.append(int(j))
            vals.append(float(w))
        W = sparse.coo_array((vals, (rows, cols)), shape=(size, size))
        return cls(W.tocsr(), symmetric=symmetric)

    @classmethod
    def from_dense(cls, W, symmetric: bool = False):
        return cls(sparse.csr_array(np.asarray(W, dtype=float)), symmetric=symmetric)

    @property
    def size(self) -> int:
        return self.matrix.shape[0]

    @property
    def total(self) -> float:
        return math.fsum(self.matrix.data)

    def entries(self):
        W = self.matrix.tocoo()
        order = np.lexsort((W.col, W.row))
        return [(int(W.row[i]), int(W.col[i]), float(W.data[i])) for i in order]

    def to_json(self) -> dict:
        return {"entries": [list(e) for e in self.entries()], "symmetric": self.symmetric}

    @classmethod
    def from_json(cls, obj, size: Optional[int] = None) -> "CouplingWeights":
        if isinstance(obj, str):
            obj = json.loads(obj)
        unknown = set(obj) - {"entries", "symmetric", "size"}
        if unknown:
            raise ValueError(f"unknown CouplingWeights fields: {sorted(unknown)}")
        entries = obj["entries"]
        if size is None:
            size = obj.get("size")
        if size is None:
            size = 1 + max((max(int(k), int(j)) for k, j, _ in entries), default=-1)
        return cls.from_entries(size, entries, symmetric=bool(obj.get("symmetric", False)))


def coupling_pairing(measure: NodeMeasure, coupling: CouplingWeights) -> Callable[[TwoPointField], float]:
    """Direct double-summation pairing ``Theta -> sum_{k,j} w_kj Theta(x_k, x_j)``."""
    W = coupling.matrix.tocoo()
    X = measure.nodes

    def sigma(theta: TwoPointField) -> float:
        if W.nnz == 0:
            return 0.0
        vals = theta.many(X[W.row], X[W.col])
        return math.fsum(W.data * vals)

    return sigma


# ---------------------------------------------------------------------------
# division contract


@dataclass(frozen=True)
class DivisionReport:
    """Residuals ``|<T, phi_i psi> - <<S, phi_i Phi>>|`` over a test family."""

    max_residual: float
    residuals: np.ndarray
    lhs: np.ndarray = field(repr=False)
    rhs: np.ndarray = field(repr=False)

    @property
    def relative(self) -> np.ndarray:
        scale = np.maximum(np.abs(self.lhs), np.abs(self.rhs))
        return np.where(scale > 0, self.residuals / np.where(scale > 0, scale, 1.0), self.residuals)

    @property
    def max_relative(self) -> float:
        return float(np.max(self.relative)) if len(self.residuals) else 0.0


def _product_scalar(phi: ScalarField, psi: ScalarField) -> ScalarField:
    return ScalarField(lambda X: phi.many(X) * psi.many(X), vectorized=True)


def _product_two_point(phi: ScalarField, Phi: TwoPointField) -> TwoPointField:
    return TwoPointField(lambda X, Y: phi.many(X) * Phi.many(X, Y), vectorized=True)


def node_values_field(measure: NodeMeasure, values) -> ScalarField:
    """Scalar field equal to ``values[k]`` at node ``k`` and 0 elsewhere."""
    values = np.asarray(values, dtype=float).reshape(-1)
    if len(values) != len(measure):
        raise ValueError("need one value per node")
    lookup = {tuple(p): v for p, v in zip(measure.nodes, values)}

    def f(X):
        return np.array([lookup.get(tuple(p), 0.0) for p in X])

    return ScalarField(f, vectorized=True)


PairingT = Union[NodeMeasure, Callable[[ScalarField], float]]


def check_division(
    T: PairingT,
    sigma: Callable[[TwoPointField], float],
    psi,
    Phi: TwoPointField,
    test_functions: Sequence[ScalarField],
) -> DivisionReport:
    """Evaluate the division identity on each test function.

    Parameters
    ----------
    T : NodeMeasure or callable
        Either a node measure or a pairing ``g -> <T, g>``.
    sigma : callable
        Pairing ``Theta -> <<S, Theta>>`` on two-point fields.
    psi : ScalarField or array
        Candidate divergence; an array is read as node values of ``T``.
    Phi : TwoPointField
    test_functions : sequence of ScalarField

    Returns
    -------
    DivisionReport
    """
    if isinstance(T, NodeMeasure):
        pair_T = T.pair
        if not isinstance(psi, ScalarField):
            psi = node_values_field(T, psi)
    else:
        pair_T = T
    lhs, rhs = [], []
    for i, phi in enumerate(test_functions):
        a = pair_T(_product_scalar(phi, psi))
        b = sigma(_product_two_point(phi, Phi))
        if not (math.isfinite(a) and math.isfinite(b)):
            raise EvaluationError(f"non-finite pairing for test function {i}: <T,.>={a}, <<S,.>>={b}")
        lhs.append(a)
        rhs.append(b)
    lhs, rhs = np.array(lhs), np.array(rhs)
    res = np.abs(lhs - rhs)
    return DivisionReport(float(res.max()) if len(res) else 0.0, res, lhs, rhs)


def tensor_bump(center, radius: float) -> ScalarField:
    """C^2 tensor bump ``prod_m (1 - u_m^2)^3`` with ``u = (x - center) / radius``."""
    c = as_point(center)
    r = float(radius)

    def f(X):
        u = (X - c) / r
        prof = np.where(np.abs(u) < 1.0, (1.0 - u * u) ** 3, 0.0)
        return np.prod(prof, axis=1)

    return ScalarField(f, vectorized=True, sup_norm=1.0, name="bump")


def default_test_functions(nodes, radius: Optional[float] = None, n_random: int = 8, seed: int = 0):
    """Tensor bumps centred at every node plus ``n_random`` random centres.

    The default radius is 1.5 times the median nearest-neighbour distance, so
    each bump overlaps its neighbours and the cross terms are exercised.
    """
    P = as_points(nodes)
    if radius is None:
        if len(P) > 1:
            D = np.linalg.norm(P[:, None, :] - P[None, :, :], axis=2)
            np.fill_diagonal(D, np.inf)
            radius = 1.5 * float(np.median(D.min(axis=1)))
        else:
            radius = 1.0
    rng = np.random.default_rng(seed)
    lo, hi = P.min(axis=0), P.max(axis=0)
    extra = lo + (hi - lo) * rng.random((n_random, P.shape[1]))
    return [tensor_bump(c, radius) for c in np.vstack([P, extra])]


# ---------------------------------------------------------------------------
# numerical differentiation


def num_y_derivs(Phi: TwoPointField, x, order: int, h: float = 1e-4):
    """Central-difference y-derivatives of ``Phi(x, .)`` at ``y = x``.

    Returns the gradient (``order=1``, shape ``(n,)``) or the Hessian
    (``order=2``, shape ``(n, n)``); both carry O(h^2) error.
    """
    if not h > 0:
        raise ValueError(f"step h must be positive, got {h}")
    if order not in (1, 2):
        raise ValueError(f"order must be 1 or 2, got {order}")
    x = as_point(x)
    n = len(x)
    E = np.eye(n) * h
    if order == 1:
        Y = np.vstack([x + E, x - E])
        v = Phi.many(x, Y)
        return (v[:n] - v[n:]) / (2.0 * h)
    # second order: diagonal from the 3-point stencil, off-diagonal from the 4-point cross
    f0 = Phi(x, x)
    Yd = np.vstack([x + E, x - E])
    vd = Phi.many(x, Yd)
    H = np.zeros((n, n))
    H[np.diag_indices(n)] = (vd[:n] - 2.0 * f0 + vd[n:]) / h**2
    for a in range(n):
        for b in range(a + 1, n):
            ys = np.array([x + E[a] + E[b], x + E[a] - E[b], x - E[a] + E[b], x - E[a] - E[b]])
            pp, pm, mp, mm = Phi.many(x, ys)
            H[a, b] = H[b, a] = (pp - pm - mp + mm) / (4.0 * h * h)
    return H


def central_difference(func: Callable, x, axis: int, h: float = 1e-4) -> float:
    """``d func / d x_axis`` at ``x`` by a central difference."""
    if not h > 0:
        raise ValueError(f"step h must be positive, got {h}")
    x = as_point(x)
    e = np.zeros_like(x)
    e[axis] = h
    return (float(func(x + e)) - float(func(x - e))) / (2.0 * h)
