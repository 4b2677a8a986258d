"""Named builtin fields and maps used by the command line and the acceptance suite.

Every entry is a factory taking the dimension ``n`` (scalar and two-point
fields) so the same name works on the line, the plane and in space.
"""

from __future__ import annotations

import math
from functools import lru_cache

import numpy as np

from .convergence import pow1ph
from .core import ScalarField, TwoPointField, as_point, constant_field, grad0


# ---------------------------------------------------------------------------
# scalar fields


def square(n: int) -> ScalarField:
    """``|x|^2``."""
    return ScalarField(
        lambda X: np.sum(X * X, axis=1), vectorized=True,
        gradient=lambda x: 2.0 * as_point(x),
        hessian=lambda x: 2.0 * np.eye(len(as_point(x))),
        name="sq",
    )


def cubic(n: int) -> ScalarField:
    """``x_1^3 + x_2^2`` (just ``x_1^3`` on the line)."""

    def f(X):
        out = X[:, 0] ** 3
        if X.shape[1] > 1:
            out = out + X[:, 1] ** 2
        return out

    def grad(x):
        x = as_point(x)
        g = np.zeros(len(x))
        g[0] = 3.0 * x[0] ** 2
        if len(x) > 1:
            g[1] = 2.0 * x[1]
        return g

    def hess(x):
        x = as_point(x)
        H = np.zeros((len(x), len(x)))
        H[0, 0] = 6.0 * x[0]
        if len(x) > 1:
            H[1, 1] = 2.0
        return H

    return ScalarField(f, vectorized=True, gradient=grad, hessian=hess, name="cubic")


def gaussian(n: int) -> ScalarField:
    """``exp(-|x|^2)``."""

    def grad(x):
        x = as_point(x)
        return -2.0 * x * math.exp(-x @ x)

    def hess(x):
        x = as_point(x)
        return (4.0 * np.outer(x, x) - 2.0 * np.eye(len(x))) * math.exp(-x @ x)

    return ScalarField(
        lambda X: np.exp(-np.sum(X * X, axis=1)), vectorized=True,
        gradient=grad, hessian=hess, sup_norm=1.0,
        lipschitz=math.sqrt(2.0) * math.exp(-0.5), name="gauss",
    )


def _bump_profile(u):
    """``exp(1 - 1/u)`` for ``u = 1 - r^2 > 0``, else 0."""
    out = np.zeros_like(u)
    inside = u > 0
    out[inside] = np.exp(1.0 - 1.0 / u[inside])
    return out


@lru_cache(maxsize=None)
def _bump_lipschitz() -> float:
    # sup_r |d/dr exp(1 - 1/(1 - r^2))|, attained well inside (0, 1)
    r = np.linspace(0.0, 1.0, 200001)[:-1]
    u = 1.0 - r * r
    return float(np.max(2.0 * r / u**2 * _bump_profile(u))) * 1.0001


def bump(n: int, center=None, radius: float = 1.0) -> ScalarField:
    """Smooth bump ``exp(1 - 1/(1 - |u|^2))``, ``u = (x - center) / radius``, with peak 1."""
    c = np.zeros(n) if center is None else as_point(center)
    r = float(radius)

    def f(X):
        U = (X - c) / r
        return _bump_profile(1.0 - np.sum(U * U, axis=1))

    def grad(x):
        u = (as_point(x) - c) / r
        w = 1.0 - u @ u
        if w <= 0:
            return np.zeros(len(u))
        return _bump_profile(np.array([w]))[0] * (-2.0 * u / w**2) / r

    def hess(x):
        u = (as_point(x) - c) / r
        w = 1.0 - u @ u
        if w <= 0:
            return np.zeros((len(u), len(u)))
        v = _bump_profile(np.array([w]))[0]
        uu = np.outer(u, u)
        return v * (4.0 * uu / w**4 - 8.0 * uu / w**3 - 2.0 * np.eye(len(u)) / w**2) / r**2

    supp = float(np.linalg.norm(c)) + r
    return ScalarField(f, vectorized=True, support_radius=supp, gradient=grad, hessian=hess,
                       sup_norm=1.0, lipschitz=_bump_lipschitz() / r, name="bump")


def quartic(n: int) -> ScalarField:
    """``sum_i x_i^4``."""
    return ScalarField(
        lambda X: np.sum(X**4, axis=1), vectorized=True,
        gradient=lambda x: 4.0 * as_point(x) ** 3,
        hessian=lambda x: np.diag(12.0 * as_point(x) ** 2),
        name="quartic",
    )


def linear(n: int) -> ScalarField:
    """``sum_i x_i``."""
    return ScalarField(
        lambda X: np.sum(X, axis=1), vectorized=True,
        gradient=lambda x: np.ones(len(as_point(x))),
        hessian=lambda x: np.zeros((len(as_point(x)),) * 2),
        name="linear",
    )


SCALAR_FIELDS = {
    "sq": square,
    "cubic": cubic,
    "gauss": gaussian,
    "bump": bump,
    "quartic": quartic,
    "linear": linear,
    "one": lambda n: constant_field(1.0),
}


# ---------------------------------------------------------------------------
# two-point fields


def sqdiff(n: int) -> TwoPointField:
    """``|y - x|^2``."""
    return TwoPointField(
        lambda X, Y: np.sum((Y - X) ** 2, axis=1), vectorized=True,
        y_gradient=lambda x, y: 2.0 * (as_point(y) - as_point(x)),
        y_hessian=lambda x, y: 2.0 * np.eye(len(as_point(x))),
        name="sqdiff",
    )


def ones(n: int) -> TwoPointField:
    return TwoPointField(
        lambda X, Y: np.ones(len(X)), vectorized=True,
        y_gradient=lambda x, y: np.zeros(len(as_point(y))),
        y_hessian=lambda x, y: np.zeros((len(as_point(y)),) * 2),
        sup_norm=1.0, y_lipschitz=0.0, name="one",
    )


def cosy(n: int) -> TwoPointField:
    """``cos y_1``."""

    def grad(x, y):
        g = np.zeros(len(as_point(y)))
        g[0] = -math.sin(as_point(y)[0])
        return g

    return TwoPointField(lambda X, Y: np.cos(Y[:, 0]), vectorized=True, y_gradient=grad,
                         sup_norm=1.0, y_lipschitz=1.0, name="cosy")


def diff(n: int) -> TwoPointField:
    """``y_1 - x_1``."""

    def grad(x, y):
        g = np.zeros(len(as_point(y)))
        g[0] = 1.0
        return g

    return TwoPointField(lambda X, Y: Y[:, 0] - X[:, 0], vectorized=True, y_gradient=grad,
                         y_hessian=lambda x, y: np.zeros((len(as_point(y)),) * 2), name="diff")


def xdiff(n: int) -> TwoPointField:
    """``x_1 (y_1 - x_1)``."""

    def grad(x, y):
        g = np.zeros(len(as_point(y)))
        g[0] = as_point(x)[0]
        return g

    return TwoPointField(lambda X, Y: X[:, 0] * (Y[:, 0] - X[:, 0]), vectorized=True,
                         y_gradient=grad, name="xdiff")


def cauchy_section(n: int) -> TwoPointField:
    """``exp(-(x_1 - 1)^2) / (1 + y_1^2)``, whose Hilbert data are known in closed form."""

    def grad(x, y):
        x, y = as_point(x), as_point(y)
        g = np.zeros(len(y))
        g[0] = -2.0 * y[0] * math.exp(-(x[0] - 1.0) ** 2) / (1.0 + y[0] ** 2) ** 2
        return g

    return TwoPointField(
        lambda X, Y: np.exp(-(X[:, 0] - 1.0) ** 2) / (1.0 + Y[:, 0] ** 2), vectorized=True,
        y_gradient=grad, sup_norm=1.0, name="cauchy",
    )


def bump_section(n: int) -> TwoPointField:
    """``Phi(x, y) = bump(y)``: nonnegative sections with positive integral."""
    B = bump(n)
    return TwoPointField(lambda X, Y: B.many(Y), vectorized=True, support_radius=B.support_radius,
                         y_gradient=lambda x, y: B.gradient(y), y_hessian=lambda x, y: B.hessian(y),
                         sup_norm=1.0, y_lipschitz=B.lipschitz, name="bumpy")


TWO_POINT_FIELDS = {
    "sqdiff": sqdiff,
    "one": ones,
    "cosy": cosy,
    "diff": diff,
    "xdiff": xdiff,
    "cauchy": cauchy_section,
    "bumpy": bump_section,
}


def two_point(name: str, n: int = 1) -> TwoPointField:
    """Look up a two-point field; ``grad0:<scalar>`` gives ``f(y) - f(x)``."""
    if name.startswith("grad0:"):
        return grad0(scalar(name[len("grad0:"):], n))
    if name not in TWO_POINT_FIELDS:
        raise ValueError(f"unknown two-point field {name!r}; builtins are "
                         f"{sorted(TWO_POINT_FIELDS)} or grad0:<scalar>")
    return TWO_POINT_FIELDS[name](n)


def scalar(name: str, n: int = 1) -> ScalarField:
    if name not in SCALAR_FIELDS:
        raise ValueError(f"unknown scalar field {name!r}; builtins are {sorted(SCALAR_FIELDS)}")
    return SCALAR_FIELDS[name](n)


# ---------------------------------------------------------------------------
# maps and densities for couplings


POINT_MAPS = {
    "identity": lambda x: as_point(x),
    "double": lambda x: 2.0 * as_point(x),
    "square": lambda x: as_point(x) ** 2,
    "shift": lambda x: as_point(x) + 1.0,
}

DENSITIES = {
    "one": lambda n: constant_field(1.0),
    "exp": lambda n: ScalarField(lambda X: np.exp(X[:, 0]), vectorized=True,
                                 gradient=lambda x: np.eye(len(as_point(x)))[0] * math.exp(as_point(x)[0]),
                                 name="exp"),
    "gauss": gaussian,
}

# one-parameter maps F(h, x) with F(0, x) = x, and their h-derivative at 0
FLOWS = {
    "pow1ph": (pow1ph, lambda h, x: as_point(x) * np.log(as_point(x))),
    "identity": (lambda h, x: as_point(x), lambda h, x: np.zeros(len(as_point(x)))),
    "sin": (lambda h, x: as_point(x) + h * np.sin(as_point(x)), lambda h, x: np.sin(as_point(x))),
}


def lookup(table: dict, name: str, what: str):
    if name not in table:
        raise ValueError(f"unknown {what} {name!r}; builtins are {sorted(table)}")
    return table[name]
