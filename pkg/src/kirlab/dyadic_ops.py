"""Dyadic intervals on [0, inf), the dyadic metric and Haar-based operators.

``rho(x, y)`` is the length of the smallest dyadic interval
``[k 2^-j, (k+1) 2^-j)`` containing both points.  It is computed exactly from
the binary expansions of the two floats, so annulus membership never suffers
from rounding.

The dyadic fractional Laplacian

    Delta_s f(x) = int_0^inf (f(y) - f(x)) rho(x, y)^{-1-2s} dy,   0 < s < 1/2,

is diagonal in the Haar basis.  The set ``{y : rho(x, y) = 2^-m}`` is the
sibling half of the length-``2^-m`` ancestor of ``x`` and has length
``2^-m-1``; summing over these annuli gives the eigenvalue returned by
``haar_eigenvalue``.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from typing import Dict, Tuple, Union

import numpy as np

from ._quad import gauss_legendre
from .core import CouplingWeights, NodeMeasure, ScalarField, TwoPointField
from .graph_ops import GraphSystem


def _check_nonneg(*xs):
    for x in xs:
        if not (x >= 0 and math.isfinite(x)):
            raise ValueError(f"dyadic points must be finite and nonnegative, got {x}")


def rho(x: float, y: float) -> float:
    """Dyadic distance between two nonnegative reals (exact for floats)."""
    x, y = float(x), float(y)
    _check_nonneg(x, y)
    if x == y:
        return 0.0
    nx, dx = x.as_integer_ratio()
    ny, dy = y.as_integer_ratio()
    # denominators are powers of two; bring both to the common scale 2^E
    E = max(dx.bit_length(), dy.bit_length()) - 1
    X = nx << (E - (dx.bit_length() - 1))
    Y = ny << (E - (dy.bit_length() - 1))
    return math.ldexp(1.0, (X ^ Y).bit_length() - E)


def rho_index(j: int, k, i) -> np.ndarray:
    """``rho(x^j_k, x^j_i)`` for lattice points ``x^j_i = i 2^-j`` (vectorized in ``i``)."""
    i = np.asarray(i, dtype=np.int64)
    xor = np.bitwise_xor(np.int64(k), i)
    # frexp exponent of a positive integer below 2^53 is its bit length
    g = np.frexp(xor.astype(float))[1]
    return np.where(xor == 0, 0.0, np.ldexp(1.0, g - int(j)))


def rho_ball_measure(x: float, r: float) -> float:
    """Lebesgue measure of ``{y : rho(x, y) < r}``: the largest dyadic interval
    around ``x`` shorter than ``r``."""
    _check_nonneg(x)
    if not r > 0:
        raise ValueError("radius must be positive")
    m, e = math.frexp(r)
    return math.ldexp(1.0, e - 2) if m == 0.5 else math.ldexp(1.0, e - 1)


@dataclass(frozen=True)
class DyadicInterval:
    """``I^j_k = [k 2^-j, (k+1) 2^-j)``."""

    j: int
    k: int

    def __post_init__(self):
        if int(self.k) < 0:
            raise ValueError("position k must be nonnegative")

    @property
    def length(self) -> float:
        return math.ldexp(1.0, -int(self.j))

    @property
    def left(self) -> float:
        return math.ldexp(float(self.k), -int(self.j))

    @property
    def right(self) -> float:
        return math.ldexp(float(self.k + 1), -int(self.j))

    def contains(self, x: float) -> bool:
        return self.left <= x < self.right

    def parent(self) -> "DyadicInterval":
        return DyadicInterval(self.j - 1, self.k // 2)

    def children(self):
        return DyadicInterval(self.j + 1, 2 * self.k), DyadicInterval(self.j + 1, 2 * self.k + 1)

    @classmethod
    def containing(cls, x: float, j: int) -> "DyadicInterval":
        _check_nonneg(x)
        return cls(int(j), int(math.floor(math.ldexp(x, int(j)))))


# ---------------------------------------------------------------------------
# Haar system


@dataclass(frozen=True)
class HaarFunction:
    """``h^j_k(x) = 2^{j/2} h^0_0(2^j x - k)`` with ``h^0_0 = 1`` on [0, 1/2), ``-1`` on [1/2, 1)."""

    j: int
    k: int

    def __post_init__(self):
        if int(self.k) < 0:
            raise ValueError("position k must be nonnegative")

    @property
    def support(self) -> DyadicInterval:
        return DyadicInterval(self.j, self.k)

    def __call__(self, x) -> np.ndarray | float:
        xa = np.asarray(x, dtype=float)
        u = np.ldexp(xa, int(self.j)) - self.k
        amp = math.ldexp(1.0, 0) * 2.0 ** (self.j / 2.0)
        v = np.where((u >= 0) & (u < 0.5), amp, np.where((u >= 0.5) & (u < 1.0), -amp, 0.0))
        return float(v) if np.ndim(x) == 0 else v


def haar_eval(h: HaarFunction, x: float) -> float:
    _check_nonneg(float(x))
    return float(h(float(x)))


@dataclass(frozen=True)
class HaarExpansion:
    """Finite combination ``sum c_{jk} h^j_k``."""

    terms: Dict[Tuple[int, int], float] = field(default_factory=dict)

    def __post_init__(self):
        clean = {}
        for (j, k), c in dict(self.terms).items():
            if int(k) < 0:
                raise ValueError("Haar positions must be nonnegative")
            c = float(c)
            if not math.isfinite(c):
                raise ValueError("Haar coefficients must be finite")
            if c != 0.0:
                clean[(int(j), int(k))] = clean.get((int(j), int(k)), 0.0) + c
        object.__setattr__(self, "terms", clean)

    def __call__(self, x) -> np.ndarray | float:
        xa = np.asarray(x, dtype=float)
        out = np.zeros_like(xa)
        for (j, k), c in sorted(self.terms.items()):
            out = out + c * HaarFunction(j, k)(xa)
        return float(out) if np.ndim(x) == 0 else out

    @property
    def finest(self) -> int:
        return max((j for j, _ in self.terms), default=0)

    @property
    def support_end(self) -> float:
        return max((DyadicInterval(j, k).right for j, k in self.terms), default=0.0)

    def as_field(self) -> ScalarField:
        return ScalarField(lambda X: self(X[:, 0]), vectorized=True, support_radius=self.support_end)

    @classmethod
    def single(cls, j: int, k: int, coef: float = 1.0) -> "HaarExpansion":
        return cls({(j, k): coef})

    @classmethod
    def from_json(cls, obj) -> "HaarExpansion":
        if isinstance(obj, str):
            obj = json.loads(obj)
        terms = {}
        for t in obj:
            unknown = set(t) - {"j", "k", "coef"}
            if unknown:
                raise ValueError(f"unknown Haar term fields: {sorted(unknown)}")
            key = (int(t["j"]), int(t["k"]))
            terms[key] = terms.get(key, 0.0) + float(t.get("coef", 1.0))
        return cls(terms)


@dataclass(frozen=True)
class HaarExpansion2:
    """Finite combination ``sum c h(x) h~(y)`` over pairs of Haar functions."""

    terms: Dict[Tuple[Tuple[int, int], Tuple[int, int]], float] = field(default_factory=dict)

    def __post_init__(self):
        clean = {}
        for (a, b), c in dict(self.terms).items():
            key = ((int(a[0]), int(a[1])), (int(b[0]), int(b[1])))
            if key[0][1] < 0 or key[1][1] < 0:
                raise ValueError("Haar positions must be nonnegative")
            c = float(c)
            if not math.isfinite(c):
                raise ValueError("Haar coefficients must be finite")
            if c != 0.0:
                clean[key] = clean.get(key, 0.0) + c
        object.__setattr__(self, "terms", clean)

    def __call__(self, x, y) -> float:
        return math.fsum(c * HaarFunction(*a)(float(x)) * HaarFunction(*b)(float(y))
                         for (a, b), c in sorted(self.terms.items()))

    def section(self, x: float) -> HaarExpansion:
        """The one-variable expansion ``y -> Phi(x, y)``."""
        terms = {}
        for (a, b), c in sorted(self.terms.items()):
            v = c * HaarFunction(*a)(float(x))
            if v != 0.0:
                terms[b] = terms.get(b, 0.0) + v
        return HaarExpansion(terms)

    def as_field(self) -> TwoPointField:
        end = max((DyadicInterval(*b).right for _, b in self.terms), default=0.0)
        return TwoPointField(lambda x, y: self(x[0], y[0]), support_radius=end)

    @classmethod
    def from_json(cls, obj) -> "HaarExpansion2":
        if isinstance(obj, str):
            obj = json.loads(obj)
        terms = {}
        for t in obj:
            unknown = set(t) - {"j", "k", "j2", "k2", "coef"}
            if unknown:
                raise ValueError(f"unknown Haar term fields: {sorted(unknown)}")
            a = (int(t["j"]), int(t["k"]))
            b = (int(t.get("j2", a[0])), int(t.get("k2", a[1])))
            terms[(a, b)] = terms.get((a, b), 0.0) + float(t.get("coef", 1.0))
        return cls(terms)


# ---------------------------------------------------------------------------
# eigenvalues


def _check_s(s: float):
    if not 0.0 < s < 0.5:
        raise ValueError(f"s must lie in (0, 1/2) for the absolutely convergent kernel, got {s}")


def haar_eigenvalue(s: float) -> float:
    """``lambda_s`` with ``Delta_s h = lambda_s |supp h|^{-2s} h`` for every Haar function.

    The sibling half of ``supp h`` contributes ``-1`` and the ancestors'
    sibling halves a geometric series ``-1 / (2 (2^{2s} - 1))``.
    """
    _check_s(s)
    q = 2.0 ** (2.0 * s)
    return -(2.0 * q - 1.0) / (2.0 * (q - 1.0))


def haar_constant_cs(s: float) -> float:
    """The closed-form constant ``c_s = 2^{2s} / (2^{2s} - 1)``.

    Kept for comparison; it does not match the eigenvalue of the kernel
    above (see ``haar_eigenvalue``).
    """
    _check_s(s)
    q = 2.0 ** (2.0 * s)
    return q / (q - 1.0)


@dataclass(frozen=True)
class DyadicResult:
    value: float
    error: float


def _annulus(x: float, m: int):
    """``[lo, hi)`` with ``rho(x, y) = 2^-m`` exactly on it."""
    anc = DyadicInterval.containing(x, m)
    left, right = anc.children()
    sib = right if left.contains(x) else left
    return sib.left, sib.right


def _annulus_integral(f, lo: float, hi: float, cells: int, order: int = 8) -> float:
    t, w = gauss_legendre(order)
    edges = np.linspace(lo, hi, cells + 1)
    width = (hi - lo) / cells
    pts = (edges[:-1, None] + width * t[None, :]).ravel()
    vals = np.asarray(f(pts), dtype=float)
    if not np.all(np.isfinite(vals)):
        raise ValueError(f"f is not finite on [{lo}, {hi})")
    return width * math.fsum((vals.reshape(cells, order) * w[None, :]).ravel())


def _delta_s_quadrature(s: float, f, x: float, support_end: float, finest: int | None,
                        lipschitz: float | None, tol: float, max_cells: int = 4096) -> DyadicResult:
    fx = float(f(np.array([x]))[0])
    q = 2.0 ** (2.0 * s)
    # outer annuli lie past the support once both x and the support fit in [0, 2^-m-1)
    reach = max(support_end, x)
    M0 = -math.frexp(reach)[1] - 1 if reach > 0 else 0
    while math.ldexp(1.0, -M0 - 1) <= reach:
        M0 -= 1
    outer = -0.5 * fx * q**M0 / (1.0 - 1.0 / q)
    if finest is not None:
        m_stop, err = finest + 1, 0.0
    elif lipschitz is not None:
        # annulus m contributes at most L/2 2^{-m(1-2s)}; rounding of the nodes
        # near x and of f itself adds about (L ulp(x) + 2 eps |f(x)|) 2^{2sm} / 2,
        # so refining stops once that noise outgrows the remaining tail
        r = 2.0 ** (-(1.0 - 2.0 * s))
        tail = lambda m: lipschitz / 2.0 * r**m / (1.0 - r)
        unit = lipschitz * math.ulp(max(x, 1.0)) + 2.0 * np.finfo(float).eps * abs(fx)
        noise = lambda m: unit * q**m / 2.0
        m_stop = M0 + 1
        while tail(m_stop) > tol and noise(m_stop) < tail(m_stop):
            m_stop += 1
        err = tail(m_stop) + math.fsum(noise(m) for m in range(max(M0 + 1, 0), m_stop))
    else:
        raise ValueError("quadrature needs a finite Haar expansion or a declared Lipschitz constant")
    parts = [outer]
    res = finest if finest is not None else m_stop + 2
    for m in range(M0 + 1, m_stop):
        lo, hi = _annulus(x, m)
        cells = int(min(max_cells, max(1, 2 ** max(0, res + 1 - (m + 1)))))
        # integrate f - f(x) directly; subtracting afterwards loses digits on small annuli
        integ = _annulus_integral(lambda t: np.asarray(f(t), dtype=float) - fx, lo, hi, cells)
        parts.append(integ * 2.0 ** (m * (1.0 + 2.0 * s)))
    return DyadicResult(math.fsum(parts), err)


def delta_s_apply(s: float, f: Union[HaarFunction, HaarExpansion, ScalarField], x: float,
                  method: str = "closed", eigenvalue: float | None = None, tol: float = 1e-12) -> DyadicResult:
    """Apply the dyadic fractional Laplacian at ``x``.

    Parameters
    ----------
    s : float in (0, 1/2)
    f : HaarFunction, HaarExpansion or ScalarField
        Scalar fields need a support radius and a Lipschitz constant, and are
        only supported by the quadrature path.
    method : {"closed", "quadrature"}
        ``closed`` uses the Haar eigenvalue; ``quadrature`` integrates the
        kernel over rho-annuli (Gauss-Legendre on dyadic cells), with the
        outer annuli summed as a geometric series.
    eigenvalue : float, optional
        Override the eigenvalue in the closed path (used for comparisons).
    """
    _check_s(s)
    x = float(x)
    _check_nonneg(x)
    if isinstance(f, HaarFunction):
        f = HaarExpansion.single(f.j, f.k)
    if method == "closed":
        if not isinstance(f, HaarExpansion):
            raise ValueError("the closed-form path needs a Haar function or expansion")
        lam = haar_eigenvalue(s) if eigenvalue is None else float(eigenvalue)
        parts = [c * lam * DyadicInterval(j, k).length ** (-2.0 * s) * HaarFunction(j, k)(x)
                 for (j, k), c in sorted(f.terms.items())]
        return DyadicResult(math.fsum(parts), 0.0)
    if method != "quadrature":
        raise ValueError(f"unknown method {method!r}")
    if isinstance(f, HaarExpansion):
        if not f.terms:
            return DyadicResult(0.0, 0.0)
        return _delta_s_quadrature(s, f, x, f.support_end, f.finest, None, tol)
    if f.support_radius is None:
        raise ValueError("quadrature over rho-annuli needs a bounded support")
    g = lambda t: f.many(np.asarray(t, dtype=float).reshape(-1, 1))
    return _delta_s_quadrature(s, g, x, float(f.support_radius), None, f.lipschitz, tol)


def spectral_kirchhoff(s: float, Phi: HaarExpansion2, x: float, eigenvalue: float | None = None) -> float:
    """``lambda_s sum c |supp h~|^{-2s} h(x) h~(x)`` over the terms of ``Phi``.

    ``eigenvalue`` defaults to ``haar_eigenvalue(s)``.
    """
    _check_s(s)
    x = float(x)
    _check_nonneg(x)
    lam = haar_eigenvalue(s) if eigenvalue is None else float(eigenvalue)
    parts = [c * DyadicInterval(*b).length ** (-2.0 * s) * HaarFunction(*a)(x) * HaarFunction(*b)(x)
             for (a, b), c in sorted(Phi.terms.items())]
    return lam * math.fsum(parts)


def kernel_kirchhoff(s: float, Phi: Union[HaarExpansion2, TwoPointField], x: float, tol: float = 1e-12) -> DyadicResult:
    """``int (Phi(x, y) - Phi(x, x)) rho(x, y)^{-1-2s} dy`` by annulus quadrature."""
    if isinstance(Phi, HaarExpansion2):
        return delta_s_apply(s, Phi.section(x), x, method="quadrature", tol=tol)
    return delta_s_apply(s, Phi.section([x]), x, method="quadrature", tol=tol)


# ---------------------------------------------------------------------------
# discrete dyadic operators on x^j_i = i 2^-j


def dyadic_point(j: int, i) -> np.ndarray:
    return np.ldexp(np.asarray(i, dtype=float), -int(j))


def dyadic_laplacian(j: int, f: ScalarField, k: int) -> float:
    """Sum over the other three points of the quad block of ``k`` minus ``3 f(x^j_k)``."""
    k = int(k)
    if k < 0:
        raise ValueError("index k must be nonnegative")
    base = 4 * (k // 4)
    others = [base + m for m in range(4) if base + m != k]
    vals = f.many(dyadic_point(j, others).reshape(-1, 1))
    return math.fsum(vals) - 3.0 * f([dyadic_point(j, k)])


def dyadic_frac_laplacian(j: int, alpha: float, f: ScalarField, k: int, K: int = 4096) -> DyadicResult:
    """``sum_{i != k} (f(x^j_i) - f(x^j_k)) 2^-j / rho(x^j_k, x^j_i)^{1+alpha}``.

    Indices ``0 <= i <= K`` are summed directly.  The weights of all ``i != k``
    sum to ``2^{j alpha} / (2 (2^alpha - 1))`` (annulus ``g`` holds ``2^{g-1}``
    points at distance ``2^{g-j}``), so the ``f(x^j_k)`` part of the remainder
    is exact; the ``f(x^j_i)`` part vanishes when the support of ``f`` ends
    before ``x^j_{K+1}`` and is otherwise bounded by ``|f|_inf`` times the
    remaining weight.
    """
    if not alpha > 0:
        raise ValueError(f"alpha must be positive, got {alpha}")
    k, K = int(k), int(K)
    if k < 0 or K < 1:
        raise ValueError("need k >= 0 and K >= 1")
    i = np.arange(0, max(K, k) + 1)
    i = i[i != k]
    r = rho_index(j, k, i)
    w = math.ldexp(1.0, -int(j)) * r ** (-(1.0 + alpha))
    vals = f.many(dyadic_point(j, i).reshape(-1, 1))
    fk = f([dyadic_point(j, k)])
    total_w = 2.0 ** (j * alpha) / (2.0 * (2.0**alpha - 1.0))
    rem = max(total_w - math.fsum(w), 0.0)
    value = math.fsum(w * (vals - fk)) - fk * rem
    covered = f.support_radius is not None and f.support_radius < dyadic_point(j, i[-1] + 1)
    if covered:
        err = 0.0
    elif f.sup_norm is not None:
        err = f.sup_norm * rem
    else:
        raise ValueError("f must declare sup_norm or a support radius")
    return DyadicResult(value, err)


def dyadic_system(j: int, K: int) -> GraphSystem:
    """Nodes ``x^j_0..x^j_K`` with weights ``2^-j``; pairs in the same quad block
    (``rho <= 2^{2-j}``) coupled with ``2^-j``."""
    i = np.arange(K + 1)
    entries = [(a, b, math.ldexp(1.0, -j)) for a in i for b in i if a != b and a // 4 == b // 4]
    m = NodeMeasure(dyadic_point(j, i).reshape(-1, 1), np.full(K + 1, math.ldexp(1.0, -j)))
    return GraphSystem(m, CouplingWeights.from_entries(K + 1, entries, symmetric=True))


def dyadic_frac_system(j: int, alpha: float, K: int) -> GraphSystem:
    """Nodes ``x^j_0..x^j_K`` coupled with ``4^-j / rho^{1+alpha}``."""
    i = np.arange(K + 1)
    R = np.array([rho_index(j, a, i) for a in i])
    with np.errstate(divide="ignore"):
        W = np.where(R > 0, math.ldexp(1.0, -2 * j) * R ** (-(1.0 + alpha)), 0.0)
    m = NodeMeasure(dyadic_point(j, i).reshape(-1, 1), np.full(K + 1, math.ldexp(1.0, -j)))
    return GraphSystem(m, CouplingWeights.from_dense(W, symmetric=True))
