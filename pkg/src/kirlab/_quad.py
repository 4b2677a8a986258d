"""Deterministic quadrature building blocks.

All routines visit panels in a fixed left-to-right order and accumulate with
``math.fsum``, so repeated calls return bit-identical results.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np
from scipy import special

from .core import ConvergenceError, EvaluationError


@dataclass(frozen=True)
class QuadResult:
    value: float
    error: float


@lru_cache(maxsize=64)
def gauss_legendre(m: int):
    """Nodes and weights of the ``m``-point rule on [0, 1]."""
    t, w = np.polynomial.legendre.leggauss(m)
    return 0.5 * (t + 1.0), 0.5 * w


@lru_cache(maxsize=64)
def gauss_jacobi_left(m: int, beta: float):
    """Rule for ``int_0^1 u^beta g(u) du`` (beta > -1), nodes on [0, 1]."""
    t, w = special.roots_jacobi(m, 0.0, beta)
    # (1+t)^beta on [-1,1] maps to 2^(beta+1) u^beta du on [0,1]
    return 0.5 * (t + 1.0), w / 2.0 ** (beta + 1.0)


def _check(vals, a, b):
    if not np.all(np.isfinite(vals)):
        raise EvaluationError(f"integrand not finite on [{a:.6g}, {b:.6g}]")
    return vals


def adaptive(f, a: float, b: float, tol: float = 1e-12, rel: float = 1e-12,
             order: int = 20, max_panels: int = 20000, left_power: float | None = None,
             noise=None) -> QuadResult:
    """Adaptive composite Gauss-Legendre on [a, b].

    ``f`` is vectorized over a 1-D array of abscissae.  When ``left_power``
    is given the integrand is ``(t - a)^left_power * f(t)`` and every panel
    touching ``a`` uses a Gauss-Jacobi rule for that weight, which makes
    algebraic endpoint singularities harmless.

    A panel is accepted when its rule and the sum over its two halves agree
    to within ``max(tol * (panel length / (b - a)), rel * |panel|)``.  If
    ``noise(t)`` is given (absolute rounding error of ``f(t)``), a panel is
    also accepted once the disagreement is at the level of that rounding, so
    cancellation-dominated regions do not trigger endless refinement.
    """
    if not b > a:
        return QuadResult(0.0, 0.0)
    L = b - a
    xg, wg = gauss_legendre(order)
    if left_power is not None:
        xj, wj = gauss_jacobi_left(order, float(left_power))

    def rule(lo, hi):
        h = hi - lo
        if left_power is not None and lo == a:
            t = lo + h * xj
            v = _check(np.asarray(f(t), dtype=float), lo, hi)
            nz = 0.0 if noise is None else h ** (left_power + 1.0) * float(np.dot(wj, noise(t)))
            return h ** (left_power + 1.0) * float(np.dot(wj, v)), nz
        t = lo + h * xg
        v = _check(np.asarray(f(t), dtype=float), lo, hi)
        wt = 1.0 if left_power is None else (t - a) ** left_power
        nz = 0.0 if noise is None else h * float(np.dot(wg, wt * noise(t)))
        return h * float(np.dot(wg, v * wt)), nz

    accepted, errors = [], []
    stack = [(a, b, rule(a, b)[0])]
    panels = 0
    while stack:
        lo, hi, whole = stack.pop()
        mid = 0.5 * (lo + hi)
        (left, nl), (right, nr) = rule(lo, mid), rule(mid, hi)
        err = abs(left + right - whole)
        allowed = max(tol * (hi - lo) / L, rel * abs(left + right), 4.0 * (nl + nr))
        panels += 1
        if err <= allowed or panels > max_panels or (hi - lo) < 1e-15 * max(1.0, abs(lo)):
            accepted.append((lo, left + right))
            errors.append(max(err, nl + nr))
        else:
            # right pushed first so the left half is refined first
            stack.append((mid, hi, right))
            stack.append((lo, mid, left))
    if panels > max_panels:
        raise ConvergenceError(f"adaptive quadrature on [{a}, {b}] exceeded {max_panels} panels")
    accepted.sort(key=lambda p: p[0])
    return QuadResult(math.fsum(v for _, v in accepted), math.fsum(errors))


def to_infinity(f, a: float, tol: float = 1e-12, first: float = 1.0, max_blocks: int = 60,
                order: int = 20) -> QuadResult:
    """``int_a^inf f`` over doubling blocks ``[a + w(2^b - 1), a + w(2^{b+1} - 1)]``.

    Stops once two successive blocks are below ``tol`` relative to the running
    total and shrinking, or once the block ratio has settled (power-law tails
    decay geometrically over doubling blocks); the remaining tail is then
    summed geometrically from the last ratio.  Raises ``ConvergenceError`` if
    neither happens.
    """
    parts, errs = [], []
    lo, w = a, first
    prev = None
    q_prev = None
    small = 0
    for _ in range(max_blocks):
        hi = lo + w
        r = adaptive(f, lo, hi, tol=tol * 1e-2, rel=1e-13, order=order)
        parts.append(r.value)
        errs.append(r.error)
        total = math.fsum(parts)
        scale = max(abs(total), 1e-300)
        shrinking = prev is None or abs(r.value) <= abs(prev)
        if abs(r.value) <= max(tol, 1e-14 * scale) and shrinking:
            small += 1
        else:
            small = 0
        if small >= 2:
            q = abs(r.value) / abs(prev) if prev else 0.0
            tail = abs(r.value) * q / (1.0 - q) if q < 1.0 else abs(r.value)
            return QuadResult(total, math.fsum(errs) + tail)
        if prev:
            q = r.value / prev
            if 0.0 < q < 1.0 and q_prev is not None and abs(q - q_prev) <= 1e-9 * q:
                rest = r.value * q / (1.0 - q)
                return QuadResult(total + rest, math.fsum(errs) + abs(rest) * abs(q - q_prev) / (1.0 - q))
            q_prev = q
        prev = r.value
        lo, w = hi, 2.0 * w
    raise ConvergenceError(
        f"tail integral from {a} did not settle after {max_blocks} doubling blocks "
        f"(last block {parts[-1]:.3e})"
    )


# ---------------------------------------------------------------------------
# sphere rules


def sphere_area(n: int) -> float:
    """Surface measure of the unit sphere S^{n-1} in R^n (2 for n = 1)."""
    return 2.0 * math.pi ** (n / 2.0) / math.gamma(n / 2.0)


@lru_cache(maxsize=32)
def sphere_rule(n: int, m: int = 64):
    """Antipodally symmetric directions and weights on S^{n-1}, n <= 3.

    Rows ``i`` and ``i + M/2`` are opposite directions.  Weights sum to the
    sphere area.
    """
    if n == 1:
        dirs = np.array([[1.0], [-1.0]])
        w = np.array([1.0, 1.0])
    elif n == 2:
        phi = (np.arange(m) + 0.5) * (math.pi / m)
        half = np.column_stack([np.cos(phi), np.sin(phi)])
        dirs = np.vstack([half, -half])
        w = np.full(2 * m, math.pi / m)
    elif n == 3:
        # Gauss-Legendre in z = cos(theta) on (0, 1] times trapezoid in phi
        z, wz = np.polynomial.legendre.leggauss(m)
        keep = z > 0
        z, wz = z[keep], wz[keep]
        mp = 2 * m
        phi = np.arange(mp) * (2.0 * math.pi / mp)
        Z, P = np.meshgrid(z, phi, indexing="ij")
        rr = np.sqrt(1.0 - Z * Z)
        half = np.column_stack([(rr * np.cos(P)).ravel(), (rr * np.sin(P)).ravel(), Z.ravel()])
        hw = np.outer(wz, np.full(mp, 2.0 * math.pi / mp)).ravel()
        dirs = np.vstack([half, -half])
        w = np.concatenate([hw, hw])
    else:
        raise ValueError(f"direction rules are provided for n <= 3, got n={n}")
    dirs.flags.writeable = False
    w.flags.writeable = False
    return dirs, w
