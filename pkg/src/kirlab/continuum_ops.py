"""Continuum Kirchhoff operators on R^n.

* ``classical_kir``: the trace of the y-Hessian on the diagonal.
* ``frac_kir_regular`` / ``frac_kir_pv``: the unnormalized fractional kernel
  ``|x - y|^{-n-2s}`` (no ``c_{n,s}`` constant), absolutely convergent for
  ``s < 1/2`` and a principal value for ``1/2 <= s < 1``.
* ``hilbert_*``: the kernel ``1/(x - y)`` on R with no ``1/pi`` factor.

Radial integrals are written in polar form around ``x``,

    int (Phi(x, y) - Phi(x, x)) |x - y|^{-n-2s} dy = int_0^inf r^{-1-2s} A(r) dr,

    A(r) = int_{S^{n-1}} (Phi(x, x + r theta) - Phi(x, x)) dtheta,

with antipodally symmetric direction rules, so odd parts cancel pairwise.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from ._quad import QuadResult, adaptive, sphere_area, sphere_rule, to_infinity
from .core import ConvergenceError, ScalarField, TwoPointField, as_point, num_y_derivs


@dataclass(frozen=True)
class FracKernelSpec:
    """Kernel ``|x - y|^{-n-2s}`` together with quadrature settings.

    Parameters
    ----------
    n : int
        Dimension, 1 to 3.
    s : float in (0, 1)
    angular : int
        Resolution of the direction rule (ignored for n = 1).
    tol : float
        Absolute tolerance for each radial integral.
    eps0, levels : float, int
        Principal-value sequence ``eps_m = eps0 2^-m``, ``m = 0..levels``.
    """

    n: int
    s: float
    angular: int = 64
    tol: float = 1e-12
    eps0: float = 0.25
    levels: int = 12

    def __post_init__(self):
        if int(self.n) not in (1, 2, 3):
            raise ValueError(f"dimension must be 1, 2 or 3, got {self.n}")
        if not 0.0 < self.s < 1.0:
            raise ValueError(f"s must lie in (0, 1), got {self.s}")
        if not self.eps0 > 0 or self.eps0 >= 1.0:
            raise ValueError("eps0 must lie in (0, 1)")
        if int(self.levels) < 4:
            raise ValueError("need at least 4 levels")

    @property
    def regime(self) -> str:
        return "regular" if self.s < 0.5 else "pv"

    @property
    def split(self) -> float:
        return 1.0


@dataclass(frozen=True)
class PVResult:
    """Principal value with its Cauchy-difference history."""

    value: float
    error: float
    rate: float
    eps: np.ndarray
    psi: np.ndarray
    diffs: np.ndarray


def classical_kir(Phi: TwoPointField, x, h: float = 1e-4) -> float:
    """``(Delta_y Phi)(x, x)``; analytic Hessian if declared, else central differences."""
    x = as_point(x)
    if Phi.y_hessian is not None:
        H = np.asarray(Phi.y_hessian(x, x), dtype=float).reshape(len(x), len(x))
    else:
        H = num_y_derivs(Phi, x, 2, h)
    return float(np.trace(H))


class _Radial:
    """``A(r)`` for fixed ``x`` on a symmetric direction rule."""

    def __init__(self, Phi: TwoPointField, x: np.ndarray, angular: int, grad=None):
        self.Phi, self.x = Phi, x
        self.dirs, self.w = sphere_rule(len(x), angular)
        self.c = Phi(x, x)
        self.grad = grad
        self.omega = float(np.sum(self.w))
        self.scale = abs(self.c)

    def __call__(self, r):
        r = np.atleast_1d(np.asarray(r, dtype=float))
        M = len(self.w)
        Y = self.x[None, None, :] + r[:, None, None] * self.dirs[None, :, :]
        raw = self.Phi.many(self.x, Y.reshape(-1, len(self.x))).reshape(len(r), M)
        if raw.size:
            self.scale = max(self.scale, float(np.max(np.abs(raw))))
        v = raw - self.c
        if self.grad is not None:
            v = v - r[:, None] * (self.dirs @ self.grad)[None, :]
        return v @ self.w

    def noise(self, r):
        """Rounding level of ``A(r)`` from cancelling against ``Phi(x, x)``."""
        r = np.atleast_1d(np.asarray(r, dtype=float))
        g = 0.0 if self.grad is None else float(np.linalg.norm(self.grad))
        return 8.0 * np.finfo(float).eps * self.omega * (self.scale + g * r)


def _outer_radius(Phi: TwoPointField, x: np.ndarray):
    if Phi.support_radius is None:
        return None
    return float(Phi.support_radius) + float(np.linalg.norm(x))


def _far_field(A: _Radial, Phi: TwoPointField, x: np.ndarray, s: float, tol: float) -> QuadResult:
    """``int_1^inf r^{-1-2s} A(r) dr``."""
    omega = float(np.sum(A.w))
    rmax = _outer_radius(Phi, x)
    f = lambda r: r ** (-1.0 - 2.0 * s) * A(r)
    nz = lambda r: r ** (-1.0 - 2.0 * s) * A.noise(r)
    if rmax is None:
        return to_infinity(f, 1.0, tol=tol)
    far = float(Phi.far_value(x))
    parts, err = [], 0.0
    if rmax > 1.0:
        r = adaptive(f, 1.0, rmax, tol=tol, rel=1e-13, noise=nz)
        parts.append(r.value)
        err += r.error
    start = max(rmax, 1.0)
    # beyond rmax every section value equals the far value
    parts.append((far - A.c) * omega * start ** (-2.0 * s) / (2.0 * s))
    return QuadResult(math.fsum(parts), err)


def frac_kir_regular(spec: FracKernelSpec, Phi: TwoPointField, x) -> QuadResult:
    """``int (Phi(x, y) - Phi(x, x)) |x - y|^{-n-2s} dy`` for ``0 < s < 1/2``.

    The near field ``r < 1`` uses a Gauss-Jacobi panel for the ``r^{-2s}``
    endpoint behaviour of ``A(r)/r``; the far field is integrated out to the
    support of ``Phi`` and the constant remainder is added in closed form.
    """
    if spec.regime != "regular":
        raise ValueError(f"s = {spec.s} is in the principal-value regime; use frac_kir_pv")
    x = as_point(x)
    if len(x) != spec.n:
        raise ValueError(f"x has dimension {len(x)}, spec has {spec.n}")
    s = float(spec.s)
    A = _Radial(Phi, x, spec.angular)
    near = adaptive(lambda r: A(r) / r, 0.0, 1.0, tol=spec.tol, rel=1e-13, left_power=-2.0 * s,
                    noise=lambda r: A.noise(r) / r)
    far = _far_field(A, Phi, x, s, spec.tol)
    return QuadResult(near.value + far.value, near.error + far.error)


def frac_bound(spec: FracKernelSpec, Phi: TwoPointField = None, sup_norm: float = None,
               grad_norm: float = None) -> float:
    """``omega_{n-1} (|grad_y Phi|_inf / (1 - 2s) + |Phi|_inf / s)``.

    Norms are taken from the keyword arguments if given, else from the
    field's declared ``sup_norm`` and ``y_lipschitz``.
    """
    if spec.regime != "regular":
        raise ValueError("the bound holds for 0 < s < 1/2 only")
    P = sup_norm if sup_norm is not None else (Phi.sup_norm if Phi is not None else None)
    G = grad_norm if grad_norm is not None else (Phi.y_lipschitz if Phi is not None else None)
    if P is None or G is None:
        raise ValueError("need sup norms of Phi and grad_y Phi (declare sup_norm and y_lipschitz)")
    s = float(spec.s)
    return sphere_area(spec.n) * (G / (1.0 - 2.0 * s) + P / s)


def _richardson(psi: np.ndarray, s: float, columns: int = 3):
    """Eliminate ``eps^{2k - 2s}`` terms, ``k = 1..columns``, from the last rows."""
    T = [np.asarray(psi, dtype=float)]
    for k in range(1, columns + 1):
        prev = T[-1]
        q = 2.0 ** (2 * k - 2.0 * s) - 1.0
        T.append(prev[1:] + (prev[1:] - prev[:-1]) / q)
    return T


def frac_kir_pv(spec: FracKernelSpec, Phi: TwoPointField, x, monotone_tail: int = 4) -> PVResult:
    """Principal value of the fractional kernel for ``1/2 <= s < 1``.

    ``psi_eps = int_{|y-x| >= eps} (Phi(x, y) - Phi(x, x)) |x-y|^{-n-2s} dy`` is
    accumulated over the shells ``eps_{m+1} <= r < eps_m`` with the linear
    term ``grad_y Phi(x, x) . (y - x)`` removed (its integral over every shell
    vanishes).  Each shell is integrated on its own, so the Cauchy
    differences carry no cancellation error.  The limit is extrapolated with
    the rates ``2k - 2s``.

    Raises
    ------
    ConvergenceError
        If the last ``monotone_tail`` Cauchy differences fail to decrease in
        magnitude above the rounding floor.
    """
    if spec.regime != "pv":
        raise ValueError(f"s = {spec.s} is in the regular regime; use frac_kir_regular")
    x = as_point(x)
    if len(x) != spec.n:
        raise ValueError(f"x has dimension {len(x)}, spec has {spec.n}")
    s = float(spec.s)
    if Phi.y_gradient is not None:
        g = np.asarray(Phi.y_gradient(x, x), dtype=float).reshape(-1)
    else:
        g = num_y_derivs(Phi, x, 1)
    A = _Radial(Phi, x, spec.angular, grad=g)
    f = lambda r: r ** (-1.0 - 2.0 * s) * A(r)
    nz = lambda r: r ** (-1.0 - 2.0 * s) * A.noise(r)

    eps = spec.eps0 * 2.0 ** -np.arange(spec.levels + 1)
    mid = adaptive(f, eps[0], 1.0, tol=spec.tol, rel=1e-13, noise=nz)
    far = _far_field(A, Phi, x, s, spec.tol)
    err = mid.error + far.error
    diffs = []
    for m in range(spec.levels):
        r = adaptive(f, eps[m + 1], eps[m], tol=spec.tol * 1e-2, rel=1e-13, noise=nz)
        diffs.append(r.value)
        err += r.error
    diffs = np.array(diffs)
    psi = np.array([math.fsum([mid.value, far.value, *diffs[:m]]) for m in range(spec.levels + 1)])

    scale = max(abs(psi[-1]), 1.0)
    floor = 1e3 * np.finfo(float).eps * scale
    live = np.abs(diffs) > floor
    tail = np.abs(diffs[-monotone_tail:])
    tail_live = live[-monotone_tail:]
    for a, b, la, lb in zip(tail[:-1], tail[1:], tail_live[:-1], tail_live[1:]):
        if la and lb and b > a * (1.0 + 1e-6):
            raise ConvergenceError(
                f"Cauchy differences grow ({a:.3e} -> {b:.3e}); Phi may not be C^2 near the diagonal"
            )
    idx = np.flatnonzero(live)
    if len(idx) >= 3:
        use = idx[-min(len(idx), 6):]
        rate = float(np.polyfit(np.log2(eps[use]), np.log2(np.abs(diffs[use])), 1)[0])
    else:
        rate = float("inf")

    T = _richardson(psi, s)
    value = float(T[-1][-1])
    err += abs(T[-1][-1] - T[-1][-2]) + abs(T[-1][-1] - T[-2][-1])
    return PVResult(value, err, rate, eps, psi, diffs)


def frac_kirchhoff(spec: FracKernelSpec, Phi: TwoPointField, x) -> float:
    """Dispatch on the regime and return the value only."""
    if spec.regime == "regular":
        return frac_kir_regular(spec, Phi, x).value
    return frac_kir_pv(spec, Phi, x).value


# ---------------------------------------------------------------------------
# Hilbert kernel


@dataclass(frozen=True)
class PVHilbertSpec:
    """Truncation ``eps`` of ``p.v. 1/x`` and quadrature settings."""

    eps: float
    tol: float = 1e-12
    max_blocks: int = 60

    def __post_init__(self):
        if not self.eps > 0:
            raise ValueError(f"eps must be positive, got {self.eps}")


def _sym_integral(g, a: float, tol: float, max_blocks: int = 60) -> QuadResult:
    """``int_a^inf g(t) / t dt`` with ``g`` vectorized: [a, max(a,1)] then doubling blocks."""
    f = lambda t: g(t) / t
    parts, err = [], 0.0
    b = max(a, 1.0)
    if b > a:
        r = adaptive(f, a, b, tol=tol, rel=1e-13)
        parts.append(r.value)
        err += r.error
    r = to_infinity(f, b, tol=tol, max_blocks=max_blocks)
    parts.append(r.value)
    return QuadResult(math.fsum(parts), err + r.error)


def hilbert_pv(f: ScalarField, x: float, tol: float = 1e-12) -> QuadResult:
    """``H f(x) = lim int_{|x-y|>eps} f(y) / (x - y) dy = int_0^inf (f(x-t) - f(x+t)) / t dt``.

    Raises ``ConvergenceError`` when the tail does not settle (e.g. for
    functions that do not decay).
    """
    x = float(x)
    g = lambda t: f.many((x - t).reshape(-1, 1)) - f.many((x + t).reshape(-1, 1))
    return _sym_integral(g, 0.0, tol)


def hilbert_kir_eps(spec: PVHilbertSpec, Phi: TwoPointField, x: float) -> float:
    """``(1 / h^eps(x)) int_{|x-y|>eps} Phi(x, y) / (x - y) dy``.

    ``1/h^eps(x)`` is ``x`` for ``|x| > eps`` and ``eps sign(x)`` otherwise, so
    the value at ``x = 0`` is 0.
    """
    x = float(x)
    if x == 0.0:
        return 0.0
    xp = np.array([x])
    g = lambda t: Phi.many(xp, (x - t).reshape(-1, 1)) - Phi.many(xp, (x + t).reshape(-1, 1))
    I = _sym_integral(g, spec.eps, spec.tol, spec.max_blocks).value
    factor = x if abs(x) > spec.eps else spec.eps * math.copysign(1.0, x)
    return factor * I


def hilbert_kir_limit(Phi: TwoPointField, x: float, tol: float = 1e-12) -> QuadResult:
    """``x H_y Phi(x, x)``."""
    x = float(x)
    r = hilbert_pv(Phi.section([x]), x, tol)
    return QuadResult(x * r.value, abs(x) * r.error)


def hilbert_laplacian(f: ScalarField, x: float, tol: float = 1e-12) -> QuadResult:
    """``x H f(x)``; constants are annihilated (``H 1 = 0``)."""
    x = float(x)
    r = hilbert_pv(f, x, tol)
    return QuadResult(x * r.value, abs(x) * r.error)
