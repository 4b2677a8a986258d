"""Kirchhoff and Laplace operators of coupling measures.

The node distribution is a measure ``mu`` and the pair distribution a measure
``pi`` on X x X (or a derivative of one).  The division problem reads

    int phi psi dmu = iint phi(x) Phi(x, y) dpi(x, y)   for every test phi.

Independent couplings ``pi = pi1 x pi2`` with ``pi1 << mu`` give
``Kir Phi(x) = (dpi1/dmu)(x) int Phi(x, y) dpi2(y)``.  Deterministic couplings
``pi = mu o G^-1``, ``G(x) = (x, F(x))``, give ``Kir Phi = Phi o G``.
Differentiating a deterministic coupling in ``x_i`` or ``y_j`` produces the
positive-order operators below.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Optional, Sequence

import numpy as np

from ._quad import gauss_legendre
from .core import (
    DivisionReport,
    EvaluationError,
    ScalarField,
    TwoPointField,
    as_point,
    central_difference,
)

NUM_H = 1e-4


# ---------------------------------------------------------------------------
# quadrature measures


@dataclass(frozen=True)
class QuadMeasure:
    """A measure on R^n represented by nodes and nonnegative weights.

    Atom lists are exact; densities on boxes use tensor Gauss-Legendre rules
    (see ``density_on_box``).
    """

    points: np.ndarray
    weights: np.ndarray

    def __post_init__(self):
        P = np.asarray(self.points, dtype=float)
        if P.ndim == 1:
            P = P.reshape(-1, 1)
        w = np.asarray(self.weights, dtype=float).reshape(-1)
        if len(P) != len(w):
            raise ValueError(f"{len(P)} points but {len(w)} weights")
        if not (np.all(np.isfinite(P)) and np.all(np.isfinite(w))):
            raise ValueError("points and weights must be finite")
        if np.any(w < 0):
            raise ValueError("weights must be nonnegative")
        P.flags.writeable = False
        w.flags.writeable = False
        object.__setattr__(self, "points", P)
        object.__setattr__(self, "weights", w)

    def __len__(self) -> int:
        return len(self.weights)

    @property
    def dim(self) -> int:
        return self.points.shape[1]

    @property
    def total(self) -> float:
        return math.fsum(self.weights)

    def integrate(self, f: ScalarField) -> float:
        return math.fsum(self.weights * f.many(self.points))

    @classmethod
    def atoms(cls, points, masses) -> "QuadMeasure":
        return cls(points, masses)

    @classmethod
    def density_on_box(cls, density, lo, hi, order: int = 16, panels: int = 4) -> "QuadMeasure":
        """``density(y) dy`` on the box ``[lo, hi]`` (per-axis bounds).

        ``density`` is a ScalarField or ``None`` for Lebesgue measure.
        """
        lo, hi = as_point(lo), as_point(hi)
        if lo.shape != hi.shape or np.any(hi <= lo):
            raise ValueError("box needs lo < hi in every coordinate")
        t, w = gauss_legendre(order)
        axes, wts = [], []
        for a, b in zip(lo, hi):
            width = (b - a) / panels
            axes.append((a + width * (np.arange(panels)[:, None] + t[None, :])).ravel())
            wts.append(np.tile(w, panels) * width)
        grids = np.meshgrid(*axes, indexing="ij")
        P = np.column_stack([g.ravel() for g in grids])
        W = np.ones(len(P))
        for g in np.meshgrid(*wts, indexing="ij"):
            W = W * g.ravel()
        if density is not None:
            d = density.many(P)
            if np.any(d < 0):
                raise ValueError("density must be nonnegative")
            W = W * d
        return cls(P, W)


@dataclass(frozen=True)
class PairMeasure:
    """A measure on X x X as weighted pairs ``(x_i, y_i)``."""

    xs: np.ndarray
    ys: np.ndarray
    weights: np.ndarray

    def __post_init__(self):
        X = np.asarray(self.xs, dtype=float)
        Y = np.asarray(self.ys, dtype=float)
        X = X.reshape(len(X), -1)
        Y = Y.reshape(len(Y), -1)
        w = np.asarray(self.weights, dtype=float).reshape(-1)
        if not len(X) == len(Y) == len(w):
            raise ValueError("xs, ys and weights must have the same length")
        object.__setattr__(self, "xs", X)
        object.__setattr__(self, "ys", Y)
        object.__setattr__(self, "weights", w)

    def integrate(self, Theta: TwoPointField) -> float:
        if len(self.weights) == 0:
            return 0.0
        return math.fsum(self.weights * Theta.many(self.xs, self.ys))

    @classmethod
    def product(cls, m1: QuadMeasure, m2: QuadMeasure) -> "PairMeasure":
        i, j = np.meshgrid(np.arange(len(m1)), np.arange(len(m2)), indexing="ij")
        i, j = i.ravel(), j.ravel()
        return cls(m1.points[i], m2.points[j], m1.weights[i] * m2.weights[j])


def measure_division(mu: QuadMeasure, pi: PairMeasure, Phi: TwoPointField, psi: ScalarField,
                     test_functions: Sequence[ScalarField]) -> DivisionReport:
    """Residuals of ``int phi psi dmu = iint phi(x) Phi dpi`` over the test functions."""
    lhs, rhs = [], []
    for phi in test_functions:
        left = math.fsum(mu.weights * phi.many(mu.points) * psi.many(mu.points))
        if len(pi.weights):
            right = math.fsum(pi.weights * phi.many(pi.xs) * Phi.many(pi.xs, pi.ys))
        else:
            right = 0.0
        lhs.append(left)
        rhs.append(right)
    lhs, rhs = np.array(lhs), np.array(rhs)
    res = np.abs(lhs - rhs)
    return DivisionReport(float(res.max()) if len(res) else 0.0, res, lhs, rhs)


def no_solution_example(order: int = 16):
    """``mu = delta_0`` against ``pi = dx dy`` on the unit square, ``Phi = 1``.

    Any ``psi`` fails on a test function vanishing at 0 with positive integral.
    Returns ``(mu, pi, Phi)``.
    """
    mu = QuadMeasure.atoms([[0.0]], [1.0])
    leb = QuadMeasure.density_on_box(None, [0.0], [1.0], order=order, panels=1)
    return mu, PairMeasure.product(leb, leb), TwoPointField(lambda x, y: 1.0)


def non_unique_example():
    """``mu = delta_0``, ``pi = delta_0 x delta_0``, ``Phi = 1``: every ``psi`` with
    ``psi(0) = 1`` solves the division.  Returns ``(mu, pi, Phi)``."""
    mu = QuadMeasure.atoms([[0.0]], [1.0])
    return mu, PairMeasure.product(mu, mu), TwoPointField(lambda x, y: 1.0)


# ---------------------------------------------------------------------------
# independent couplings


@dataclass(frozen=True)
class IndependentCoupling:
    """``pi = pi1 x pi2`` with ``dpi1 = density dmu``.

    ``mass`` overrides ``pi2(X)`` (use ``inf`` for measures that the
    quadrature only truncates, e.g. Lebesgue measure on R).
    """

    density: ScalarField
    pi2: QuadMeasure
    mass: Optional[float] = None

    @property
    def total_mass(self) -> float:
        return self.pi2.total if self.mass is None else float(self.mass)

    def pair_measure(self, mu: QuadMeasure) -> PairMeasure:
        """``pi1 x pi2`` with ``pi1 = density mu``."""
        d = self.density.many(mu.points)
        return PairMeasure.product(QuadMeasure(mu.points, mu.weights * d), self.pi2)


def _density_at(c: IndependentCoupling, x) -> float:
    d = c.density(x)
    if not (d >= 0 and math.isfinite(d)):
        raise EvaluationError(f"density must be finite and nonnegative, got {d} at {np.ravel(x).tolist()}")
    return d


def independent_kir(c: IndependentCoupling, Phi: TwoPointField, x) -> float:
    """``(dpi1/dmu)(x) int Phi(x, y) dpi2(y)``."""
    x = as_point(x)
    d = _density_at(c, x)
    if d == 0.0:
        return 0.0
    return d * math.fsum(c.pi2.weights * Phi.many(x, c.pi2.points))


def independent_laplacian(c: IndependentCoupling, f: ScalarField, x) -> float:
    """``(dpi1/dmu)(x) (int f dpi2 - f(x) pi2(X))``."""
    x = as_point(x)
    M = c.total_mass
    if not math.isfinite(M):
        raise ValueError("the Laplacian needs pi2(X) < inf")
    d = _density_at(c, x)
    if d == 0.0:
        return 0.0
    fx = f(x)
    if c.mass is None:
        return d * math.fsum(c.pi2.weights * (f.many(c.pi2.points) - fx))
    return d * (math.fsum(c.pi2.weights * f.many(c.pi2.points)) - fx * M)


# ---------------------------------------------------------------------------
# deterministic couplings


@dataclass(frozen=True)
class DeterministicCoupling:
    """``pi_h = (1/h) mu o G^-1`` with ``G(x) = (x, F(x))``.

    Parameters
    ----------
    F : callable
        Point to point map on R^n.
    g : ScalarField, optional
        Density of ``mu``; required by the positive-order operators.  Its
        ``gradient`` is used when declared.
    h : float
        Scale, default 1.
    jacobian : callable, optional
        ``x -> dF/dx`` as an (n, n) array with ``[a, i] = dF_a/dx_i``;
        central differences are used otherwise.
    """

    F: Callable
    g: Optional[ScalarField] = None
    h: float = 1.0
    jacobian: Optional[Callable] = None
    name: str = ""

    def __post_init__(self):
        if not self.h > 0:
            raise ValueError(f"h must be positive, got {self.h}")

    def image(self, x) -> np.ndarray:
        x = as_point(x)
        y = as_point(self.F(x))
        if y.shape != x.shape:
            raise ValueError(f"F maps a point of dimension {len(x)} to dimension {len(y)}")
        if not np.all(np.isfinite(y)):
            raise EvaluationError(f"F is not finite at {x.tolist()}")
        return y

    def dF(self, x) -> np.ndarray:
        x = as_point(x)
        if self.jacobian is not None:
            return np.asarray(self.jacobian(x), dtype=float).reshape(len(x), len(x))
        J = np.empty((len(x), len(x)))
        for i in range(len(x)):
            e = np.zeros(len(x))
            e[i] = NUM_H
            J[:, i] = (self.image(x + e) - self.image(x - e)) / (2.0 * NUM_H)
        return J

    def pair_measure(self, mu: QuadMeasure) -> PairMeasure:
        ys = np.array([self.image(p) for p in mu.points])
        return PairMeasure(mu.points, ys, mu.weights / self.h)


def deterministic_kir(c: DeterministicCoupling, Phi: TwoPointField, x) -> float:
    """``Phi(x, F(x)) / h``."""
    x = as_point(x)
    return Phi(x, c.image(x)) / c.h


def deterministic_laplacian(c: DeterministicCoupling, f: ScalarField, x) -> float:
    """``(f(F(x)) - f(x)) / h``."""
    x = as_point(x)
    return (f(c.image(x)) - f(x)) / c.h


def pushforward_integral(c: DeterministicCoupling, mu: QuadMeasure, Theta: TwoPointField) -> float:
    """``int Theta(x, F(x)) dmu(x) / h``, the right side of the pushforward identity."""
    vals = [Theta(p, c.image(p)) for p in mu.points]
    return math.fsum(mu.weights * np.array(vals)) / c.h


# ---------------------------------------------------------------------------
# positive order


def _axis(i, n):
    i = int(i)
    if not 0 <= i < n:
        raise ValueError(f"axis {i} outside 0..{n - 1}")
    return i


def _dlog_g(c: DeterministicCoupling, x, i) -> float:
    if c.g is None:
        raise ValueError("positive-order operators need the density g of mu")
    gx = c.g(x)
    if not gx > 0:
        raise ValueError(f"g must be positive, got g = {gx} at {x.tolist()}")
    if c.g.gradient is not None:
        dg = float(np.asarray(c.g.gradient(x), dtype=float).reshape(-1)[i])
    else:
        dg = central_difference(c.g, x, i, NUM_H)
    return dg / gx


def _y_grad(Phi: TwoPointField, x, y) -> np.ndarray:
    if Phi.y_gradient is not None:
        return np.asarray(Phi.y_gradient(x, y), dtype=float).reshape(-1)
    return np.array([central_difference(lambda b: Phi(x, b), y, a, NUM_H) for a in range(len(y))])


def positive_order_kir_x(c: DeterministicCoupling, i: int, Phi: TwoPointField, x) -> float:
    """``(1/g) d/dx_i [g (Phi o G)] - (dPhi/dx_i) o G``.

    Expanding the total derivative of ``Phi(x, F(x))`` the x-partials of
    ``Phi`` cancel, leaving

        (d_i log g) Phi(x, F(x)) + grad_y Phi(x, F(x)) . dF/dx_i,

    which is what is evaluated (analytic derivatives when declared, central
    differences with step 1e-4 otherwise).
    """
    x = as_point(x)
    i = _axis(i, len(x))
    y = c.image(x)
    return _dlog_g(c, x, i) * Phi(x, y) + float(np.dot(_y_grad(Phi, x, y), c.dF(x)[:, i]))


def positive_order_laplacian_x(c: DeterministicCoupling, i: int, f: ScalarField, x) -> float:
    """``dF/dx_i . (grad f o F) + (f o F - f) d_i log g``."""
    x = as_point(x)
    i = _axis(i, len(x))
    y = c.image(x)
    if f.gradient is not None:
        gf = np.asarray(f.gradient(y), dtype=float).reshape(-1)
    else:
        gf = np.array([central_difference(f, y, a, NUM_H) for a in range(len(y))])
    return float(np.dot(c.dF(x)[:, i], gf)) + (f(y) - f(x)) * _dlog_g(c, x, i)


def positive_order_kir_y(c: DeterministicCoupling, j: int, Phi: TwoPointField, x) -> float:
    """``(dPhi/dy_j) o G``."""
    x = as_point(x)
    j = _axis(j, len(x))
    if c.g is not None and not c.g(x) > 0:
        raise ValueError(f"g must be positive at {x.tolist()}")
    return float(_y_grad(Phi, x, c.image(x))[j])


def positive_order_laplacian_y(c: DeterministicCoupling, j: int, f: ScalarField, x) -> float:
    """``(df/dx_j) o F``."""
    x = as_point(x)
    j = _axis(j, len(x))
    y = c.image(x)
    if f.gradient is not None:
        return float(np.asarray(f.gradient(y), dtype=float).reshape(-1)[j])
    return central_difference(f, y, j, NUM_H)
