"""Kirchhoff divergence and Laplacian on finite weighted node systems.

With ``T = sum_k a_k delta_{x_k}`` and ``S = sum_{k,j} w_kj delta_{(x_k, x_j)}``
the division problem has the explicit solution

    Kir Phi(x_k) = (1 / a_k) sum_j w_kj Phi(x_k, x_j),

and ``Delta f = Kir grad0(f)``.  Row ``k`` of the coupling matrix holds the
outgoing weights of node ``k``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .core import (
    CouplingWeights,
    EvaluationError,
    NodeMeasure,
    ScalarField,
    TwoPointField,
    coupling_pairing,
    grad0,
)


@dataclass(frozen=True)
class GraphSystem:
    """A node measure ``T`` together with pair weights ``S`` on the same nodes."""

    measure: NodeMeasure
    coupling: CouplingWeights

    def __post_init__(self):
        if self.coupling.size != len(self.measure):
            raise ValueError(
                f"coupling has size {self.coupling.size} but there are {len(self.measure)} nodes"
            )

    @property
    def total_weight(self) -> float:
        return self.coupling.total

    @property
    def finite(self) -> bool:
        return math.isfinite(self.total_weight)

    def sigma(self):
        """The pairing ``Theta -> <<S, Theta>>`` by direct double summation."""
        return coupling_pairing(self.measure, self.coupling)

    def to_json(self) -> dict:
        out = self.measure.to_json()
        out.update(self.coupling.to_json())
        return out

    @classmethod
    def from_json(cls, obj) -> "GraphSystem":
        unknown = set(obj) - {"nodes", "weights", "entries", "symmetric"}
        if unknown:
            raise ValueError(f"unknown graph fields: {sorted(unknown)}")
        m = NodeMeasure.from_json({"nodes": obj["nodes"], "weights": obj["weights"]})
        c = CouplingWeights.from_json(
            {"entries": obj.get("entries", []), "symmetric": obj.get("symmetric", False)}, size=len(m)
        )
        return cls(m, c)


def _pair_values(sys: GraphSystem, Phi: TwoPointField):
    W = sys.coupling.matrix.tocoo()
    X = sys.measure.nodes
    vals = Phi.many(X[W.row], X[W.col]) if W.nnz else np.zeros(0)
    bad = np.flatnonzero(~np.isfinite(vals))
    if bad.size:
        i = bad[0]
        raise EvaluationError(f"Phi is not finite at coupled pair ({W.row[i]}, {W.col[i]})")
    return W, vals


def kirchhoff(sys: GraphSystem, Phi: TwoPointField) -> np.ndarray:
    """Kirchhoff divergence of ``Phi`` at every node.

    Parameters
    ----------
    sys : GraphSystem
    Phi : TwoPointField

    Returns
    -------
    ndarray
        ``out[k] = (1/a_k) sum_j w_kj Phi(x_k, x_j)``.
    """
    W, vals = _pair_values(sys, Phi)
    out = np.zeros(len(sys.measure))
    if W.nnz:
        prod = W.data * vals
        # per-row compensated sums, rows in ascending order
        order = np.lexsort((W.col, W.row))
        rows, prod = W.row[order], prod[order]
        starts = np.flatnonzero(np.r_[True, rows[1:] != rows[:-1]])
        ends = np.r_[starts[1:], len(rows)]
        for s, e in zip(starts, ends):
            out[rows[s]] = math.fsum(prod[s:e])
    return out / sys.measure.weights


def laplacian(sys: GraphSystem, f: ScalarField) -> np.ndarray:
    """``Delta f(x_k) = (1/a_k) sum_j w_kj (f(x_j) - f(x_k))``."""
    if not sys.finite:
        raise ValueError("the Laplacian needs a finite coupling mass")
    return kirchhoff(sys, grad0(f))


def is_harmonic(sys: GraphSystem, f: ScalarField, tol: float = 1e-12, nodes=None):
    """Mean-value test ``f(x_k) = sum_j w_kj f(x_j) / sum_j w_kj``.

    Parameters
    ----------
    nodes : sequence of int, optional
        Restrict the test to these nodes (e.g. the interior of a window).

    Returns
    -------
    (bool, float)
        Whether the sup-norm deviation is within ``tol``, and the deviation.
    """
    W = sys.coupling.matrix
    idx = np.arange(len(sys.measure)) if nodes is None else np.asarray(nodes, dtype=int)
    rowsum = np.asarray(W.sum(axis=1)).reshape(-1)
    vals = f.many(sys.measure.nodes)
    dev = 0.0
    for k in idx:
        if rowsum[k] <= 0:
            raise ValueError(f"node {k} has no outgoing weight; its mean value is undefined")
        row = W[[k], :].tocoo()
        mean = math.fsum(row.data * vals[row.col]) / rowsum[k]
        dev = max(dev, abs(vals[k] - mean))
    return dev <= tol, dev


def path_graph(points, weights=None, w: float = 1.0) -> GraphSystem:
    """Nearest-neighbour chain on 1-D points with symmetric weight ``w``."""
    pts = np.asarray(points, dtype=float).reshape(-1, 1)
    n = len(pts)
    a = np.ones(n) if weights is None else weights
    entries = [(k, k + 1, w) for k in range(n - 1)] + [(k + 1, k, w) for k in range(n - 1)]
    return GraphSystem(NodeMeasure(pts, a), CouplingWeights.from_entries(n, entries, symmetric=True))


def random_system(rng, n_nodes: int = 12, dim: int = 2, density: float = 0.4, symmetric: bool = True):
    """Random connected-ish system used by property tests and the acceptance suite."""
    X = rng.random((n_nodes, dim))
    a = 0.5 + rng.random(n_nodes)
    W = rng.random((n_nodes, n_nodes)) * (rng.random((n_nodes, n_nodes)) < density)
    np.fill_diagonal(W, 0.0)
    if symmetric:
        W = np.triu(W, 1)
        W = W + W.T
    return GraphSystem(NodeMeasure(X, a), CouplingWeights.from_dense(W, symmetric=symmetric))
