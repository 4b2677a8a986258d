"""Limits of quotient operators ``Q(Phi, h) = Sigma(Phi, h) / T(h)`` as ``h -> 0``.

A ``ConvergenceFamily`` packages the quotient evaluator with its claimed
limit.  ``estimate_limit`` evaluates ``Q`` at ``h_m = h0 2^-m``, reads the
observed order from successive differences and Richardson-extrapolates.

Builtin families
----------------
fd          nearest-neighbour lattice sums over ``h^2``; limit ``Delta_y Phi(x, x)``
frac        fractional lattice sums over ``h^alpha``; limit the continuum
            fractional operator with ``s = alpha / 2``
poisson     Cauchy-density nodes against a diagonal band of width ``2h``;
            limit ``2 pi x^2 Phi(x, x)``
gaussian    Gaussian nodes against area measure; diverges where the section
            integral is positive
dichotomy   nodes ``eta_k``, pairs ``zeta_k(x) dx dy``; the limit depends on
            the tails of ``zeta``
coupling    ``(1/h) Phi(x, F(h, x))``; limit ``dF/dh(0, x) . grad_y Phi(x, x)``
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np

from ._quad import adaptive, to_infinity
from .continuum_ops import FracKernelSpec, classical_kir, frac_kirchhoff as continuum_frac
from .core import ContractError, KirlabError, TwoPointField, as_point, num_y_derivs
from .lattice_ops import FracSpec, LatticeSpec, fd_kirchhoff, frac_kirchhoff as lattice_frac

SQRT_PI = math.sqrt(math.pi)


@dataclass(frozen=True)
class ConvergenceFamily:
    """Quotient evaluator ``Q(Phi, h, x)`` with optional claimed limit and order.

    ``admissible(Phi, x)`` raises ``ValueError`` when ``Phi`` is outside the
    family's hypotheses.
    """

    name: str
    quotient: Callable
    limit: Optional[Callable] = None
    order: Optional[float] = None
    admissible: Optional[Callable] = None


@dataclass(frozen=True)
class LimitReport:
    """Outcome of ``estimate_limit``.

    ``order`` is ``inf`` when the quotients stop changing (differences at the
    rounding level) and ``nan`` when it cannot be read off.  ``failed_level``
    is the first level whose evaluation raised, if any.
    """

    value: float
    order: float
    error: float
    verdict: str
    h: np.ndarray
    Q: np.ndarray
    diffs: np.ndarray
    orders: np.ndarray
    failed_level: Optional[int] = None
    message: str = ""

    def to_json(self) -> dict:
        def num(v):
            v = float(v)
            return v if math.isfinite(v) else str(v)

        return {
            "value": num(self.value), "order": num(self.order), "error": num(self.error),
            "verdict": self.verdict, "h": [float(v) for v in self.h],
            "Q": [num(v) for v in self.Q], "failed_level": self.failed_level,
            "message": self.message,
        }


def _grows(Q: np.ndarray) -> bool:
    """``|Q|`` at least doubles twice in a row somewhere (three levels)."""
    a = np.abs(Q)
    for m in range(len(a) - 2):
        if a[m] > 0 and a[m + 1] >= 2.0 * a[m] and a[m + 2] >= 2.0 * a[m + 1]:
            return True
    return False


def estimate_limit(fam: ConvergenceFamily, Phi: TwoPointField, x, h0: float = 0.25,
                   levels: int = 8, check: bool = True) -> LimitReport:
    """Evaluate ``Q`` at ``h_m = h0 2^-m``, ``m < levels``, and extrapolate.

    The order is ``p = log2(|d_{m-1}| / |d_m|)`` from the last two differences
    ``d_m = Q_{m+1} - Q_m`` and the limit ``Q_last + d_last / (2^p - 1)``.  The
    verdict is "diverged" when ``|Q|`` doubles twice in a row or overflows,
    "converged" when the last three differences shrink monotonically with a
    positive order (or vanish), and "inconclusive" otherwise.
    """
    if not h0 > 0:
        raise ValueError(f"h0 must be positive, got {h0}")
    levels = int(levels)
    if levels < 3:
        raise ValueError("need at least 3 levels")
    if check and fam.admissible is not None:
        fam.admissible(Phi, x)
    hs = h0 * 2.0 ** -np.arange(levels)
    Q, failed, msg = [], None, ""
    for m, h in enumerate(hs):
        try:
            with np.errstate(over="raise", invalid="raise"):
                q = float(fam.quotient(Phi, float(h), x))
        except (FloatingPointError, OverflowError):
            q = math.inf
        except (KirlabError, ArithmeticError) as exc:
            failed, msg = m, f"level {m} (h = {h:.6g}): {exc}"
            break
        Q.append(q)
        if not math.isfinite(q):
            break
    Q = np.array(Q)
    hs = hs[: len(Q)]
    d = np.diff(Q) if len(Q) > 1 else np.zeros(0)
    nan = float("nan")

    def report(value, order, err, verdict, orders=np.zeros(0), extra=""):
        return LimitReport(value, order, err, verdict, hs, Q, d, orders, failed,
                           "; ".join(s for s in (msg, extra) if s))

    if len(Q) and (not np.all(np.isfinite(Q)) or _grows(Q)):
        return report(math.inf if np.all(Q >= 0) else nan, nan, math.inf, "diverged",
                      extra="quotients grow without bound")
    if len(Q) < 3:
        return report(Q[-1] if len(Q) else nan, nan, math.inf, "inconclusive",
                      extra="too few levels evaluated")
    scale = max(float(np.max(np.abs(Q))), 1e-300)
    floor = 64.0 * np.finfo(float).eps * scale
    ad = np.abs(d)
    with np.errstate(divide="ignore", invalid="ignore"):
        orders = np.log2(ad[:-1] / ad[1:])
    if np.all(ad[-2:] <= floor):
        return report(float(Q[-1]), math.inf, float(ad[-1]), "converged", orders)
    p = float(orders[-1])
    if not (math.isfinite(p) and p > 0):
        return report(float(Q[-1]), p, float(ad[-1]), "inconclusive", orders,
                      "differences do not shrink")
    value = float(Q[-1] + d[-1] / (2.0**p - 1.0))
    err = abs(d[-1]) / (2.0**p - 1.0)
    if len(d) >= 3 and math.isfinite(orders[-2]) and orders[-2] > 0:
        prev = Q[-2] + d[-2] / (2.0 ** orders[-2] - 1.0)
        err = max(err * 1e-3, abs(value - prev))
    tail = ad[-3:]
    shrinking = all(b < a or b <= floor for a, b in zip(tail[:-1], tail[1:]))
    verdict = "converged" if shrinking else "inconclusive"
    return report(value, p, float(err), verdict, orders)


# ---------------------------------------------------------------------------
# builtin families


def _vanishes_on_diagonal(Phi: TwoPointField, x):
    x = as_point(x)
    v = Phi(x, x)
    if abs(v) > 1e-12:
        raise ValueError(f"Phi must vanish on the diagonal; Phi(x, x) = {v:.3e}")


def _cell(x, h) -> np.ndarray:
    """Index of the cube ``prod [h k_m, h (k_m + 1))`` containing ``x``.

    Points within 1e-9 cells of a node are assigned to it so that lattice
    points stay lattice points after rounding.
    """
    return np.floor(as_point(x) / h + 1e-9).astype(np.int64)


def family_fd(dim: int = 1) -> ConvergenceFamily:
    """``Q(Phi, h)(x) = (1/h^2) sum_m [Phi(hk, h(k + e_m)) + Phi(hk, h(k - e_m))]`` on the cube of ``x``."""

    def quotient(Phi, h, x):
        k = _cell(x, h)
        if len(k) != dim:
            raise ValueError(f"x has dimension {len(k)}, family has {dim}")
        return fd_kirchhoff(LatticeSpec(dim, h, int(np.max(np.abs(k))) + 1), Phi, k)

    return ConvergenceFamily("fd", quotient, lambda Phi, x: classical_kir(Phi, x), 2.0,
                             _vanishes_on_diagonal)


def family_frac(alpha: float, dim: int = 1) -> ConvergenceFamily:
    """``Q(Phi, h)(x) = h^{-alpha} sum_{j != k} Phi(hk, hj) / |k - j|^{n + alpha}`` on the cube of ``x``.

    The window covers the support of ``Phi`` plus a unit ring; the limit is
    the continuum operator with ``s = alpha / 2``.
    """
    alpha = float(alpha)
    if not 0.0 < alpha < 2.0:
        raise ValueError(f"alpha must lie in (0, 2), got {alpha}")

    def quotient(Phi, h, x):
        if Phi.support_radius is None:
            raise ValueError("the lattice window needs a support radius for Phi")
        k = _cell(x, h)
        R = int(math.ceil((Phi.support_radius + 1.0) / h)) + int(np.max(np.abs(k)))
        spec = LatticeSpec(dim, h, max(int(np.max(np.abs(k))), 1))
        return lattice_frac(spec, FracSpec(alpha, R), Phi, k).value

    def limit(Phi, x):
        return continuum_frac(FracKernelSpec(dim, alpha / 2.0), Phi, x)

    def admissible(Phi, x):
        _vanishes_on_diagonal(Phi, x)
        if Phi.support_radius is None:
            raise ValueError("Phi must declare a support radius")

    return ConvergenceFamily(f"frac(alpha={alpha:g})", quotient, limit, None, admissible)


def _band_integral(Phi, x: float, lo: float, hi: float) -> float:
    xp = np.array([x])
    return adaptive(lambda y: Phi.many(xp, y.reshape(-1, 1)), lo, hi, tol=1e-14, rel=1e-13).value


def _section_integral(Phi: TwoPointField, x: float) -> float:
    """``int_R Phi(x, y) dy``."""
    xp = np.array([x])
    g = lambda y: Phi.many(xp, y.reshape(-1, 1))
    if Phi.support_radius is not None:
        if float(Phi.far_value(xp)) != 0.0:
            raise ValueError("the section integral diverges: Phi has a nonzero far value")
        R = float(Phi.support_radius)
        return adaptive(g, -R, R, tol=1e-14, rel=1e-13).value
    right = to_infinity(g, 0.0, tol=1e-14)
    left = to_infinity(lambda t: g(-t), 0.0, tol=1e-14)
    return right.value + left.value


def family_poisson_cutoff() -> ConvergenceFamily:
    """``Q = pi (h + x^2 / h) int_{x-h}^{x+h} Phi(x, y) dy`` (``h = 1/k``); limit ``2 pi x^2 Phi(x, x)``."""

    def quotient(Phi, h, x):
        x = float(as_point(x)[0])
        return math.pi * (h + x * x / h) * _band_integral(Phi, x, x - h, x + h)

    def limit(Phi, x):
        x = float(as_point(x)[0])
        return 2.0 * math.pi * x * x * Phi([x], [x])

    return ConvergenceFamily("poisson", quotient, limit)


def family_gaussian_area() -> ConvergenceFamily:
    """``Q = sqrt(pi) h e^{x^2/h^2} int Phi(x, y) dy``: Gaussian nodes against area measure.

    The claimed limit is 0 at ``x = 0`` or where the section integral
    vanishes and ``+inf`` where it is positive (for ``Phi >= 0``).
    """

    def quotient(Phi, h, x):
        x = float(as_point(x)[0])
        I = _section_integral(Phi, x)
        if I == 0.0:
            return 0.0
        return SQRT_PI * h * math.exp(x * x / (h * h)) * I

    def limit(Phi, x):
        x = float(as_point(x)[0])
        I = _section_integral(Phi, x)
        if x == 0.0 or I == 0.0:
            return 0.0
        return math.copysign(math.inf, I)

    return ConvergenceFamily("gaussian", quotient, limit)


def _gauss_eta(t):
    return math.exp(-t * t) / SQRT_PI


def zeta_cauchy(t: float) -> float:
    return 1.0 / (math.pi * (1.0 + t * t))


def zeta_epanechnikov(t: float) -> float:
    """Compactly supported probability density ``3/4 (1 - t^2)`` on [-1, 1]."""
    return 0.75 * (1.0 - t * t) if abs(t) < 1.0 else 0.0


ZETAS = {"cauchy": (zeta_cauchy, False), "epanechnikov": (zeta_epanechnikov, True)}


def family_tail_dichotomy(zeta: Callable[[float], float] | str = "epanechnikov",
                          compact_support: Optional[bool] = None) -> ConvergenceFamily:
    """``Q = (zeta(x/h) / eta(x/h)) int Phi(x, y) dy`` with ``eta(t) = e^{-t^2} / sqrt(pi)``.

    For compactly supported ``zeta`` the limit is ``sqrt(pi) zeta(0) int Phi(0, y) dy``
    at ``x = 0`` and 0 elsewhere; for heavy tails it is infinite wherever the
    section integral is positive.
    """
    if isinstance(zeta, str):
        if zeta not in ZETAS:
            raise ValueError(f"unknown density {zeta!r}; builtins are {sorted(ZETAS)}")
        zeta, compact = ZETAS[zeta]
        compact_support = compact if compact_support is None else compact_support
    if compact_support is None:
        raise ValueError("say whether zeta has compact support")

    def ratio(t):
        z = zeta(t)
        if z == 0.0:
            return 0.0
        # zeta / eta = sqrt(pi) zeta e^{t^2}, computed without underflowing eta
        return SQRT_PI * z * math.exp(t * t)

    def quotient(Phi, h, x):
        x = float(as_point(x)[0])
        I = _section_integral(Phi, x)
        if I == 0.0:
            return 0.0
        return ratio(x / h) * I

    def limit(Phi, x):
        x = float(as_point(x)[0])
        I = _section_integral(Phi, x)
        if x == 0.0:
            return SQRT_PI * zeta(0.0) * I
        if compact_support or I == 0.0:
            return 0.0
        return math.copysign(math.inf, I)

    return ConvergenceFamily("dichotomy", quotient, limit)


def pow1ph(h: float, x):
    """``F(h, x) = x^{1 + h}``."""
    return np.asarray(x, dtype=float) ** (1.0 + h)


def family_coupling(F: Callable, dF_dh: Optional[Callable] = None, samples=None) -> ConvergenceFamily:
    """``Q = (1/h) Phi(x, F(h, x))``; limit ``dF/dh(0, x) . grad_y Phi(x, x)``.

    ``F(0, x) = x`` is checked at ``x`` and at ``samples`` (contract error
    otherwise).  ``dF/dh`` defaults to a central difference with step 1e-5.
    """

    def check_identity(pts):
        for p in pts:
            p = as_point(p)
            y = as_point(F(0.0, p))
            if not np.allclose(y, p, rtol=1e-12, atol=1e-14):
                raise ContractError(f"F(0, x) != x at x = {p.tolist()} (got {y.tolist()})")

    if samples is not None:
        check_identity(samples)

    def quotient(Phi, h, x):
        x = as_point(x)
        return Phi(x, as_point(F(h, x))) / h

    def limit(Phi, x):
        x = as_point(x)
        if dF_dh is not None:
            v = as_point(dF_dh(0.0, x))
        else:
            e = 1e-5
            v = (as_point(F(e, x)) - as_point(F(-e, x))) / (2.0 * e)
        if Phi.y_gradient is not None:
            g = np.asarray(Phi.y_gradient(x, x), dtype=float).reshape(-1)
        else:
            g = num_y_derivs(Phi, x, 1)
        return float(np.dot(v, g))

    def admissible(Phi, x):
        check_identity([x])
        _vanishes_on_diagonal(Phi, x)

    return ConvergenceFamily("coupling", quotient, limit, 1.0, admissible)
