"""Finite differences and the discrete fractional Laplacian on the lattice hZ^n.

Nodes are ``x_k = h k`` with ``k`` an integer vector, node weights ``h^n``.
Nearest neighbours (Euclidean index distance 1) couple with weight ``h^{n-2}``;
the fractional system couples every pair with ``h^{n-alpha} |k - j|^{-n-alpha}``.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass

import numpy as np

from ._quad import sphere_rule
from .core import CouplingWeights, NodeMeasure, ScalarField, TwoPointField
from .graph_ops import GraphSystem


@dataclass(frozen=True)
class LatticeSpec:
    """Window ``{h k : |k|_inf <= N}`` of the lattice hZ^n."""

    dim: int
    h: float
    N: int

    def __post_init__(self):
        if int(self.dim) < 1:
            raise ValueError("dim must be >= 1")
        if not (self.h > 0 and math.isfinite(self.h)):
            raise ValueError(f"spacing h must be positive, got {self.h}")
        if int(self.N) < 1:
            raise ValueError("window radius N must be >= 1")

    def index(self, k) -> np.ndarray:
        k = np.atleast_1d(np.asarray(k, dtype=np.int64))
        if k.shape != (self.dim,):
            raise ValueError(f"index must have {self.dim} components, got {k.tolist()}")
        return k

    def inside(self, k) -> bool:
        return bool(np.max(np.abs(k)) <= self.N)

    def indices(self) -> np.ndarray:
        r = np.arange(-self.N, self.N + 1)
        grid = np.meshgrid(*([r] * self.dim), indexing="ij")
        return np.column_stack([g.ravel() for g in grid])

    def point(self, k) -> np.ndarray:
        return self.h * np.asarray(k, dtype=float)


@dataclass(frozen=True)
class FracSpec:
    """Exponent ``alpha`` and truncation radius ``R`` (in index units, inf-norm).

    ``alpha`` must lie in (0, 2) unless ``relaxed`` is set, which allows any
    ``alpha > 0`` for the series-only routines.
    """

    alpha: float
    R: int
    relaxed: bool = False

    def __post_init__(self):
        a = float(self.alpha)
        if not a > 0:
            raise ValueError(f"alpha must be positive, got {a}")
        if not self.relaxed and not a < 2:
            raise ValueError(f"alpha must lie in (0, 2), got {a}")
        if int(self.R) < 1:
            raise ValueError("truncation radius R must be >= 1")

    def tail_bound(self, n: int) -> float:
        """Upper bound for ``sum_{|j|_inf > R} |j|^{-n-alpha}``."""
        return _tail_bracket(n, self.alpha, self.R)[1]


def _neighbours(k: np.ndarray):
    n = len(k)
    E = np.eye(n, dtype=np.int64)
    return np.vstack([k + E, k - E])


def fd_kirchhoff(spec: LatticeSpec, Phi: TwoPointField, k) -> float:
    """``(1/h^2) sum_m [Phi(hk, h(k+e_m)) + Phi(hk, h(k-e_m))]``."""
    k = spec.index(k)
    nb = _neighbours(k)
    if not spec.inside(k) or np.max(np.abs(nb)) > spec.N:
        raise ValueError(f"index {k.tolist()} has a neighbour outside the window |k|_inf <= {spec.N}")
    vals = Phi.many(spec.point(k), spec.h * nb.astype(float))
    return math.fsum(vals) / spec.h**2


def fd_laplacian(spec: LatticeSpec, f: ScalarField, k) -> float:
    """``sum_m [f(h(k+e_m)) - 2 f(hk) + f(h(k-e_m))] / h^2``."""
    k = spec.index(k)
    nb = _neighbours(k)
    if not spec.inside(k) or np.max(np.abs(nb)) > spec.N:
        raise ValueError(f"index {k.tolist()} has a neighbour outside the window |k|_inf <= {spec.N}")
    n = spec.dim
    v = f.many(spec.h * nb.astype(float))
    f0 = f(spec.point(k))
    return math.fsum(v[m] - 2.0 * f0 + v[n + m] for m in range(n)) / spec.h**2


def fd_is_harmonic(spec: LatticeSpec, f: ScalarField, k, tol: float = 1e-12):
    """Mean-value test over the ``2n`` axis neighbours."""
    k = spec.index(k)
    nb = _neighbours(k)
    mean = math.fsum(f.many(spec.h * nb.astype(float))) / len(nb)
    dev = abs(f(spec.point(k)) - mean)
    return dev <= tol, dev


def fd_system(spec: LatticeSpec) -> GraphSystem:
    """The window restriction of ``(T_h, S_h)`` as a graph system."""
    idx = spec.indices()
    pos = {tuple(i): p for p, i in enumerate(idx)}
    n, h = spec.dim, spec.h
    entries = []
    for p, k in enumerate(idx):
        for j in _neighbours(k):
            q = pos.get(tuple(j))
            if q is not None:
                entries.append((p, q, h ** (n - 2)))
    m = NodeMeasure(h * idx.astype(float), np.full(len(idx), h**n))
    return GraphSystem(m, CouplingWeights.from_entries(len(idx), entries, symmetric=True))


# ---------------------------------------------------------------------------
# fractional lattice sums


def _offsets(n: int, R: int) -> np.ndarray:
    """All nonzero integer vectors with ``|j|_inf <= R``."""
    r = np.arange(-R, R + 1)
    grid = np.meshgrid(*([r] * n), indexing="ij")
    J = np.column_stack([g.ravel() for g in grid])
    return J[np.any(J != 0, axis=1)]


def _partial_sum(n: int, alpha: float, R: int) -> float:
    if n == 1:
        m = np.arange(R, 0, -1, dtype=float)
        return 2.0 * math.fsum(m ** (-1.0 - alpha))
    parts = []
    for m in range(R, 0, -1):
        parts.append(_shell_sum(n, alpha, m))
    return math.fsum(parts)


def _shell_sum(n: int, alpha: float, m: int) -> float:
    """``sum_{|j|_inf = m} |j|_2^{-n-alpha}``."""
    r = np.arange(-m, m + 1)
    grid = np.meshgrid(*([r] * n), indexing="ij")
    J = np.column_stack([g.ravel() for g in grid])
    J = J[np.max(np.abs(J), axis=1) == m]
    return math.fsum(np.sum(J.astype(float) ** 2, axis=1) ** (-(n + alpha) / 2.0))


def _tail_bracket(n: int, alpha: float, R: int):
    # shell m holds (2m+1)^n - (2m-1)^n points with Euclidean norm in [m, m sqrt(n)]
    up = n * 2.0**n * (1.0 + 1.0 / (2 * R + 2)) ** (n - 1) * R ** (-alpha) / alpha
    lo = (2.0 * n * 2.0 ** (n - 1) * (1.0 - 1.0 / (2 * R + 2)) ** (n - 1)
          * n ** (-(n + alpha) / 2.0) * (R + 1.0) ** (-alpha) / alpha)
    return lo, up


def _tail_estimate(n: int, alpha: float, R: int, lo: float, up: float) -> float:
    # integral of |y|^{-n-alpha} outside the cube of half-side R + 1/2
    if n > 3:
        return 0.5 * (lo + up)
    dirs, w = sphere_rule(n, 96)
    ang = float(np.dot(w, np.max(np.abs(dirs), axis=1) ** alpha))
    est = (R + 0.5) ** (-alpha) / alpha * ang
    return min(max(est, lo), up)


@dataclass(frozen=True)
class LatticeConstant:
    """``c(alpha)`` with a rigorous enclosure ``[lower, upper]``."""

    value: float
    half_width: float
    lower: float
    upper: float
    partial: float

    def contains(self, v: float) -> bool:
        return self.lower <= v <= self.upper


def frac_lattice_constant(n: int, alpha: float, R: int) -> LatticeConstant:
    """``c(alpha) = sum_{j != 0} |j|^{-n-alpha}`` over Z^n.

    The partial sum runs over ``0 < |j|_inf <= R``; the remainder is enclosed
    by comparing each inf-norm shell with ``int t^{-1-alpha} dt`` using the
    norm equivalence ``|j|_inf <= |j|_2 <= sqrt(n) |j|_inf``.  The point value
    adds the continuum estimate of the remainder and the half-width covers
    the whole enclosure.
    """
    if not alpha > 0:
        raise ValueError(f"alpha must be positive, got {alpha}")
    if int(R) < 1:
        raise ValueError("R must be >= 1")
    n, R = int(n), int(R)
    S = _partial_sum(n, float(alpha), R)
    tlo, tup = _tail_bracket(n, float(alpha), R)
    est = _tail_estimate(n, float(alpha), R, tlo, tup)
    value = S + est
    hw = max(est - tlo, tup - est)
    return LatticeConstant(value, hw, S + tlo, S + tup, S)


def _sup_bound(f: ScalarField, vals: np.ndarray) -> float:
    if f.sup_norm is not None:
        return float(f.sup_norm)
    if f.support_radius is not None:
        return float(np.max(np.abs(vals))) if len(vals) else 0.0
    raise ValueError("the fractional Laplacian needs a bounded f: declare sup_norm or support_radius")


@dataclass(frozen=True)
class FracResult:
    value: float
    bound: float


def _frac_window(spec: LatticeSpec, fspec: FracSpec, k):
    k = spec.index(k)
    if not spec.inside(k):
        raise ValueError(f"index {k.tolist()} lies outside the window |k|_inf <= {spec.N}")
    J = _offsets(spec.dim, int(fspec.R))
    r = np.sum(J.astype(float) ** 2, axis=1) ** (-(spec.dim + fspec.alpha) / 2.0)
    return k, J, r


def _covers_support(spec: LatticeSpec, fspec: FracSpec, k, radius) -> bool:
    return radius is not None and radius / spec.h + np.max(np.abs(k)) <= fspec.R


def frac_laplacian(spec: LatticeSpec, fspec: FracSpec, f: ScalarField, k) -> FracResult:
    """Discrete fractional Laplacian with a truncation bound.

    ``h^{-alpha} sum_{j != k} (f(hj) - f(hk)) / |k - j|^{n+alpha}`` summed
    over ``0 < |j - k|_inf <= R``.  When the window covers the support of
    ``f`` the only missing part is ``-f(hk) * tail``; it is added from the
    lattice-constant estimate and bounded by its half-width.  Otherwise the
    bound is ``2 |f|_inf tail / h^alpha``.
    """
    k, J, r = _frac_window(spec, fspec, k)
    n, h, a = spec.dim, spec.h, float(fspec.alpha)
    vals = f.many(h * (k + J).astype(float))
    f0 = f(spec.point(k))
    sup = _sup_bound(f, np.append(vals, f0))
    S = math.fsum(r * (vals - f0))
    if _covers_support(spec, fspec, k, f.support_radius):
        tlo, tup = _tail_bracket(n, a, int(fspec.R))
        est = _tail_estimate(n, a, int(fspec.R), tlo, tup)
        S -= f0 * est
        bound = abs(f0) * max(est - tlo, tup - est)
    else:
        bound = 2.0 * sup * fspec.tail_bound(n)
    return FracResult(S / h**a, bound / h**a)


def frac_kirchhoff(spec: LatticeSpec, fspec: FracSpec, Phi: TwoPointField, k) -> FracResult:
    """``h^{-alpha} sum_{j != k} Phi(hk, hj) / |k - j|^{n+alpha}``, truncated.

    A far value of ``Phi`` (constant beyond its support radius) contributes
    ``far * tail`` exactly as in ``frac_laplacian``.
    """
    k, J, r = _frac_window(spec, fspec, k)
    n, h, a = spec.dim, spec.h, float(fspec.alpha)
    x = spec.point(k)
    vals = Phi.many(x, h * (k + J).astype(float))
    S = math.fsum(r * vals)
    tlo, tup = _tail_bracket(n, a, int(fspec.R))
    if _covers_support(spec, fspec, k, Phi.support_radius):
        far = float(Phi.far_value(x))
        est = _tail_estimate(n, a, int(fspec.R), tlo, tup)
        S += far * est
        bound = abs(far) * max(est - tlo, tup - est)
    else:
        if Phi.sup_norm is None:
            raise ValueError("Phi must declare sup_norm or a support radius covered by the window")
        bound = Phi.sup_norm * tup
    return FracResult(S / h**a, bound / h**a)


def frac_is_harmonic(spec: LatticeSpec, fspec: FracSpec, f: ScalarField, k, tol: float = 1e-12):
    """Mean-value test ``f(hk) = c(alpha)^{-1} sum_{j != k} f(hj) |k - j|^{-n-alpha}``.

    Returns ``(harmonic, deviation, bound)`` where ``bound`` covers the
    truncation of the sum and of ``c(alpha)``.
    """
    k, J, r = _frac_window(spec, fspec, k)
    n, h, a = spec.dim, spec.h, float(fspec.alpha)
    vals = f.many(h * (k + J).astype(float))
    f0 = f(spec.point(k))
    sup = _sup_bound(f, np.append(vals, f0))
    c = frac_lattice_constant(n, a, int(fspec.R))
    T = math.fsum(r * vals)
    mean = T / c.value
    # uncertainty of c(alpha) plus, unless f vanishes beyond the window, the missing terms
    bound = abs(T) * (1.0 / c.lower - 1.0 / c.upper)
    if not _covers_support(spec, fspec, k, f.support_radius):
        bound += sup * (c.upper - c.partial) / c.lower
    dev = abs(f0 - mean)
    return dev <= tol + bound, dev, bound


def frac_system(spec: LatticeSpec, fspec: FracSpec) -> GraphSystem:
    """Window restriction of ``(T_h, S_h^alpha)`` (all window pairs coupled)."""
    idx = spec.indices()
    n, h, a = spec.dim, spec.h, float(fspec.alpha)
    D = np.sqrt(np.sum((idx[:, None, :] - idx[None, :, :]).astype(float) ** 2, axis=2))
    with np.errstate(divide="ignore"):
        W = np.where(D > 0, h ** (n - a) * D ** (-(n + a)), 0.0)
    m = NodeMeasure(h * idx.astype(float), np.full(len(idx), h**n))
    return GraphSystem(m, CouplingWeights.from_dense(W, symmetric=True))


def lattice_points(spec: LatticeSpec):
    """Index/point pairs of the window in lexicographic order."""
    for k in itertools.product(range(-spec.N, spec.N + 1), repeat=spec.dim):
        yield np.array(k), spec.point(k)
