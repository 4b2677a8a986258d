"""Operators on metric measure spaces.

Two settings are covered.

Discrete nets
    A level ``j`` of a dyadic-type partition, given as points ``x^j_k`` with
    cube masses ``mu(Q^j_k)``, a metric ``d`` and a ball-mass function
    ``mu(B(x, r))``.  Pairs closer than ``C delta^j`` are coupled through a
    symmetric matrix ``H``.

Ahlfors-regular spaces
    Kirchhoff divergence with a kernel comparable to ``d^{-(gamma + sigma)}``,

        Kir Phi(x) = int (Phi(x, y) - Phi(x, x)) K(x, y) dmu(y),

    on Euclidean space (Lebesgue measure, polar quadrature) or on the dyadic
    half line (Lebesgue measure, ``rho``-annulus quadrature).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np

from ._quad import adaptive, gauss_legendre, sphere_rule
from .core import (
    ContractError,
    CouplingWeights,
    NodeMeasure,
    ScalarField,
    TwoPointField,
    as_point,
)
from .dyadic_ops import DyadicInterval, rho, rho_ball_measure
from .graph_ops import GraphSystem


def euclidean_metric(x, y) -> float:
    return float(np.linalg.norm(np.asarray(x, dtype=float) - np.asarray(y, dtype=float)))


def dyadic_metric(x, y) -> float:
    return rho(float(np.ravel(x)[0]), float(np.ravel(y)[0]))


def euclidean_ball_mass(dim: int) -> Callable[[np.ndarray, float], float]:
    """``mu(B(x, r)) = V_n r^n`` for Lebesgue measure on R^n."""
    vol = math.pi ** (dim / 2.0) / math.gamma(dim / 2.0 + 1.0)
    return lambda x, r: vol * float(r) ** dim


def dyadic_ball_mass(x, r) -> float:
    return rho_ball_measure(float(np.ravel(x)[0]), float(r))


BUILTIN_METRICS = ("euclidean", "dyadic")


def check_metric(metric, points, n_triples: int = 64, seed: int = 0, rtol: float = 1e-12):
    """Check identity, symmetry and the triangle inequality on sampled triples.

    Raises
    ------
    ContractError
        Naming the first offending triple.
    """
    pts = np.asarray(points, dtype=float)
    N = len(pts)
    if N == 0:
        return
    rng = np.random.default_rng(seed)
    for _ in range(n_triples):
        a, b, c = rng.integers(0, N, size=3)
        dab, dba = metric(pts[a], pts[b]), metric(pts[b], pts[a])
        dac, dcb = metric(pts[a], pts[c]), metric(pts[c], pts[b])
        daa = metric(pts[a], pts[a])
        scale = max(abs(dab), abs(dac), abs(dcb), 1e-300)
        if daa != 0.0:
            raise ContractError(f"d(x, x) = {daa} at point {a}")
        if dab < 0 or abs(dab - dba) > rtol * scale:
            raise ContractError(f"metric is not symmetric or not nonnegative at points ({a}, {b})")
        if dab > dac + dcb + rtol * scale:
            raise ContractError(f"triangle inequality fails at points ({a}, {c}, {b})")
        if a != b and not np.array_equal(pts[a], pts[b]) and dab == 0.0:
            raise ContractError(f"distinct points {a} and {b} are at distance 0")


@dataclass(frozen=True)
class MetricMeasureNet:
    """One level of a dyadic-type partition of a metric measure space.

    Parameters
    ----------
    points : array_like, shape (N, d)
        Representative points ``x^j_k``.
    masses : array_like, shape (N,)
        Cube masses ``mu(Q^j_k) > 0``.
    metric : callable or {"euclidean", "dyadic"}
    ball_mass : callable, optional
        ``(x, r) -> mu(B(x, r))``.  Defaults to the builtin for the named
        metric (Lebesgue measure).
    delta, j, C : float, int, float
        Pairs with ``d < C delta^j`` are coupled.
    """

    points: np.ndarray
    masses: np.ndarray
    metric: object = "euclidean"
    ball_mass: Optional[Callable] = None
    delta: float = 0.5
    j: int = 0
    C: float = 1.0
    metric_name: str = field(default="", compare=False)

    def __post_init__(self):
        P = np.asarray(self.points, dtype=float)
        if P.ndim == 1:
            P = P.reshape(-1, 1)
        m = np.asarray(self.masses, dtype=float).reshape(-1)
        if P.ndim != 2 or len(P) != len(m):
            raise ValueError(f"{len(P)} points but {len(m)} masses")
        if not np.all(np.isfinite(P)):
            raise ValueError("points must be finite")
        if not np.all((m > 0) & np.isfinite(m)):
            raise ValueError("cube masses must be positive and finite")
        if not 0.0 < self.delta < 1.0:
            raise ValueError(f"delta must lie in (0, 1), got {self.delta}")
        if not self.C > 0:
            raise ValueError(f"C must be positive, got {self.C}")
        name = ""
        d = self.metric
        if isinstance(d, str):
            name = d
            if d == "euclidean":
                d = euclidean_metric
                bm = self.ball_mass or euclidean_ball_mass(P.shape[1])
            elif d == "dyadic":
                if P.shape[1] != 1 or np.any(P < 0):
                    raise ValueError("the dyadic metric needs nonnegative 1-D points")
                d = dyadic_metric
                bm = self.ball_mass or dyadic_ball_mass
            else:
                raise ValueError(f"unknown metric {d!r}; builtins are {BUILTIN_METRICS}")
        else:
            if not callable(d):
                raise ValueError("metric must be callable or a builtin name")
            bm = self.ball_mass
        P.flags.writeable = False
        m.flags.writeable = False
        object.__setattr__(self, "points", P)
        object.__setattr__(self, "masses", m)
        object.__setattr__(self, "metric", d)
        object.__setattr__(self, "ball_mass", bm)
        object.__setattr__(self, "metric_name", name)
        if not name:
            check_metric(d, P)

    def __len__(self) -> int:
        return len(self.masses)

    @property
    def radius(self) -> float:
        """Coupling range ``C delta^j``."""
        return self.C * self.delta ** self.j

    def distances(self, k: int) -> np.ndarray:
        k = self._index(k)
        return np.array([self.metric(self.points[k], p) for p in self.points])

    def neighbours(self, k: int) -> np.ndarray:
        """Indices ``i != k`` with ``d(x_k, x_i) < C delta^j``."""
        k = self._index(k)
        d = self.distances(k)
        idx = np.flatnonzero(d < self.radius)
        return idx[idx != k]

    def _index(self, k) -> int:
        k = int(k)
        if not 0 <= k < len(self):
            raise ValueError(f"index {k} outside 0..{len(self) - 1}")
        return k

    def to_json(self) -> dict:
        if not self.metric_name:
            raise ValueError("only nets with a builtin metric serialize to JSON")
        return {
            "delta": self.delta, "j": self.j, "C": self.C,
            "points": self.points.tolist(), "masses": self.masses.tolist(),
            "metric": self.metric_name,
        }

    @classmethod
    def from_json(cls, obj) -> "MetricMeasureNet":
        allowed = {"delta", "j", "C", "points", "masses", "metric"}
        unknown = set(obj) - allowed
        if unknown:
            raise ValueError(f"unknown net fields: {sorted(unknown)}")
        missing = {"delta", "j", "C", "points", "masses"} - set(obj)
        if missing:
            raise ValueError(f"missing net fields: {sorted(missing)}")
        return cls(
            points=obj["points"], masses=obj["masses"], metric=obj.get("metric", "euclidean"),
            delta=float(obj["delta"]), j=int(obj["j"]), C=float(obj["C"]),
        )


def _check_H(net: MetricMeasureNet, H) -> np.ndarray:
    H = np.asarray(H, dtype=float)
    N = len(net)
    if H.shape != (N, N):
        raise ValueError(f"H must be {N}x{N}, got {H.shape}")
    if not np.all(np.isfinite(H)):
        raise ValueError("H must be finite")
    if not np.allclose(H, H.T, rtol=1e-14, atol=0.0):
        raise ValueError("H must be symmetric")
    return H


def _used(net, H, k):
    nb = net.neighbours(k)
    if np.any(H[k, nb] <= 0):
        bad = nb[np.flatnonzero(H[k, nb] <= 0)[0]]
        raise ValueError(f"H[{k}, {bad}] must be positive on the coupled range")
    return nb


def net_kirchhoff(net: MetricMeasureNet, H, Phi: TwoPointField, k: int) -> float:
    """``(1/mu_k) sum_{d < C delta^j} Phi(x_k, x_i) (mu_k + mu_i) H_ki``."""
    H = _check_H(net, H)
    k = net._index(k)
    nb = _used(net, H, k)
    if nb.size == 0:
        return 0.0
    m = net.masses
    vals = Phi.many(net.points[k], net.points[nb])
    return math.fsum(vals * (m[k] + m[nb]) * H[k, nb]) / m[k]


def net_laplacian(net: MetricMeasureNet, H, f: ScalarField, k: int) -> float:
    """``sum_{d < C delta^j} (f(x_i) - f(x_k)) (1 + mu_i / mu_k) H_ki``."""
    H = _check_H(net, H)
    k = net._index(k)
    nb = _used(net, H, k)
    if nb.size == 0:
        return 0.0
    m = net.masses
    fk = f(net.points[k])
    vals = f.many(net.points[nb])
    return math.fsum((vals - fk) * (1.0 + m[nb] / m[k]) * H[k, nb])


def _frac_weights(net: MetricMeasureNet, alpha: float, k: int):
    if not alpha > 0:
        raise ValueError(f"alpha must be positive, got {alpha}")
    if net.ball_mass is None:
        raise ValueError("the fractional operator needs a ball-mass function")
    others = np.array([i for i in range(len(net)) if i != k], dtype=int)
    d = net.distances(k)[others]
    w = np.empty(len(others))
    for n, (i, r) in enumerate(zip(others, d)):
        if not r > 0:
            raise ValueError(f"points {k} and {i} coincide")
        b = net.ball_mass(net.points[k], r) + net.ball_mass(net.points[i], r)
        if not b > 0:
            raise ValueError(f"zero ball mass around points {k} and {i} at radius {r}")
        w[n] = net.masses[i] / (r**alpha * b)
    return others, w


def net_frac_laplacian(net: MetricMeasureNet, alpha: float, f: ScalarField, k: int) -> float:
    """``sum_{i != k} mu_i (f_i - f_k) / (d^alpha [mu(B(x_k, d)) + mu(B(x_i, d))])``."""
    k = net._index(k)
    others, w = _frac_weights(net, alpha, k)
    if others.size == 0:
        return 0.0
    fk = f(net.points[k])
    return math.fsum(w * (f.many(net.points[others]) - fk))


def net_system(net: MetricMeasureNet, H) -> GraphSystem:
    """Graph form: node weights ``mu_k``, pair weights ``(mu_k + mu_i) H_ki`` on the coupled range."""
    H = _check_H(net, H)
    m = net.masses
    entries = []
    for k in range(len(net)):
        for i in _used(net, H, k):
            entries.append((k, int(i), (m[k] + m[i]) * H[k, i]))
    return GraphSystem(NodeMeasure(net.points, m), CouplingWeights.from_entries(len(net), entries, symmetric=True))


def net_frac_system(net: MetricMeasureNet, alpha: float) -> GraphSystem:
    """Graph form of the fractional operator: pair weights ``mu_k mu_i / (d^alpha [..])``."""
    m = net.masses
    entries = []
    for k in range(len(net)):
        others, w = _frac_weights(net, alpha, k)
        # each pair is computed once (from its smaller index) and mirrored,
        # so the weights are symmetric bit for bit
        for i, wi in zip(others, w):
            if i > k:
                entries.append((k, int(i), m[k] * wi))
                entries.append((int(i), k, m[k] * wi))
    return GraphSystem(NodeMeasure(net.points, m), CouplingWeights.from_entries(len(net), entries, symmetric=True))


def lattice_net(h: float, N: int, C: float = 1.5) -> MetricMeasureNet:
    """Points ``h i``, ``|i| <= N``, with masses ``h``; ``delta = h`` and ``j = 1``."""
    i = np.arange(-N, N + 1)
    return MetricMeasureNet(points=(h * i).reshape(-1, 1), masses=np.full(len(i), h),
                            metric="euclidean", delta=h, j=1, C=C)


def dyadic_net(j: int, K: int, C: float = 4.0) -> MetricMeasureNet:
    """Points ``i 2^-j``, ``0 <= i <= K``, masses ``2^-j``, dyadic metric, ``delta = 1/2``."""
    i = np.arange(K + 1)
    return MetricMeasureNet(points=np.ldexp(i.astype(float), -j).reshape(-1, 1),
                            masses=np.full(K + 1, math.ldexp(1.0, -j)), metric="dyadic",
                            delta=0.5, j=j, C=C)


# ---------------------------------------------------------------------------
# Ahlfors-regular spaces


@dataclass(frozen=True)
class ComparableKernel:
    """Kernel ``K(x, Y)`` (vectorized over the rows of ``Y``) with

        c1 1_{d < 1} d^{-(gamma + sigma)} <= K <= c2 d^{-(gamma + sigma)}.

    ``power`` marks a multiple ``power * d^{-(gamma + sigma)}`` of the pure
    power (0 for a generic kernel), whose far tails are summed in closed form.
    """

    K: Callable
    sigma: float
    gamma: float
    c1: float = 1.0
    c2: float = 1.0
    power: float = 0.0

    def __post_init__(self):
        if not 0.0 < self.sigma < 1.0:
            raise ValueError(f"sigma must lie in (0, 1), got {self.sigma}")
        if not self.gamma > 0:
            raise ValueError(f"gamma must be positive, got {self.gamma}")
        if not 0.0 < self.c1 <= self.c2:
            raise ValueError("need 0 < c1 <= c2")

    @classmethod
    def pure_power(cls, space, s: float) -> "ComparableKernel":
        """``d^{-(gamma + 2s)}`` on ``space`` for ``0 < s < 1/2``."""
        if not 0.0 < s < 0.5:
            raise ValueError(f"s must lie in (0, 1/2), got {s}")
        e = space.gamma + 2.0 * s
        d = space.distances
        return cls(lambda x, Y: d(x, Y) ** (-e), 2.0 * s, space.gamma, 1.0, 1.0, power=1.0)

    def scaled(self, c: float) -> "ComparableKernel":
        if not c > 0:
            raise ValueError("scale must be positive")
        K = self.K
        return ComparableKernel(lambda x, Y: c * K(x, Y), self.sigma, self.gamma,
                                c * self.c1, c * self.c2, power=c * self.power)

    def check(self, space, n_pairs: int = 256, seed: int = 0, rtol: float = 1e-12):
        """Verify the comparison bounds at sampled off-diagonal pairs.

        Raises
        ------
        ContractError
        """
        rng = np.random.default_rng(seed)
        X, Y = space.sample_pairs(rng, n_pairs)
        e = self.gamma + self.sigma
        for x, y in zip(X, Y):
            d = float(space.distances(x, y[None, :])[0])
            if d == 0.0:
                continue
            k = float(np.asarray(self.K(x, y[None, :]), dtype=float).reshape(-1)[0])
            lo = self.c1 * (d < 1.0) * d ** (-e)
            hi = self.c2 * d ** (-e)
            if not (k >= lo * (1 - rtol) and k <= hi * (1 + rtol)):
                raise ContractError(
                    f"kernel value {k:.6g} at d = {d:.6g} violates "
                    f"{self.c1} 1{{d<1}} d^-{e:g} <= K <= {self.c2} d^-{e:g} (x={x.tolist()}, y={y.tolist()})"
                )


@dataclass(frozen=True)
class EuclideanSpace:
    """R^n with Lebesgue measure (``gamma = n``), n <= 3."""

    n: int
    angular: int = 64

    def __post_init__(self):
        if int(self.n) not in (1, 2, 3):
            raise ValueError(f"dimension must be 1, 2 or 3, got {self.n}")

    @property
    def gamma(self) -> float:
        return float(self.n)

    def distances(self, x, Y) -> np.ndarray:
        return np.linalg.norm(np.asarray(Y, dtype=float) - np.asarray(x, dtype=float), axis=-1)

    def sample_pairs(self, rng, m):
        X = rng.uniform(-2, 2, size=(m, self.n))
        r = 10.0 ** rng.uniform(-4, 2, size=m)
        U = rng.normal(size=(m, self.n))
        U /= np.linalg.norm(U, axis=1)[:, None]
        return X, X + r[:, None] * U


@dataclass(frozen=True)
class DyadicHalfLine:
    """[0, inf) with Lebesgue measure and the dyadic metric (``gamma = 1``).

    ``resolution`` is the finest dyadic level on which the integrands may
    jump (e.g. the finest Haar level); annuli are then cut into cells of
    that length so Gauss-Legendre never straddles a jump.
    """

    resolution: Optional[int] = None
    cells: int = 8

    @property
    def gamma(self) -> float:
        return 1.0

    def distances(self, x, Y) -> np.ndarray:
        x0 = float(np.ravel(x)[0])
        return np.array([rho(x0, float(y)) for y in np.ravel(Y)])

    def sample_pairs(self, rng, m):
        X = rng.uniform(0, 4, size=(m, 1))
        Y = rng.uniform(0, 4, size=(m, 1))
        return X, Y


@dataclass(frozen=True)
class AhlforsResult:
    """Value, quadrature error estimate and the a-priori near/far bounds."""

    value: float
    error: float
    near_bound: float
    far_bound: float


def _tail_blocks(block, start: int, step: int, tol: float, max_blocks: int = 200):
    """Sum ``block(start), block(start + step), ...`` until blocks fall below
    ``tol``, or extrapolate geometrically once their ratio settles."""
    parts, m, q_prev = [], start, None
    for _ in range(max_blocks):
        v = block(m)
        parts.append(v)
        if abs(v) <= tol:
            return math.fsum(parts), abs(v)
        if len(parts) >= 2 and parts[-2] != 0.0:
            q = v / parts[-2]
            if 0.0 < q < 1.0 and q_prev is not None and abs(q - q_prev) <= 1e-9 * q:
                rest = v * q / (1.0 - q)
                return math.fsum(parts) + rest, abs(rest) * abs(q - q_prev) / (1.0 - q)
            q_prev = q
        m += step
    raise ContractError("far-field tail of the kernel did not settle")


def _lipschitz(Phi: TwoPointField, lipschitz):
    L = lipschitz if lipschitz is not None else Phi.y_lipschitz
    if L is None:
        raise ValueError("need the Lipschitz constant of y -> Phi(x, y) (declare y_lipschitz)")
    return float(L)


def _euclid(kernel, space: EuclideanSpace, Phi, x, L, tol):
    n = space.n
    dirs, w = sphere_rule(n, space.angular)
    omega = float(np.sum(w))
    c = Phi(x, x)
    sig = kernel.sigma

    def I(r):
        r = np.atleast_1d(np.asarray(r, dtype=float))
        Y = (x[None, None, :] + r[:, None, None] * dirs[None, :, :]).reshape(-1, n)
        v = Phi.many(x[None, :], Y) - c
        k = np.asarray(kernel.K(x, Y), dtype=float)
        return ((v * k).reshape(len(r), -1) @ w) * r ** (n - 1)

    scale = max(abs(c), abs(float(Phi.far_value(x))), Phi.sup_norm or 0.0, 1.0)
    noise = lambda r: 8.0 * np.finfo(float).eps * omega * scale * kernel.c2 * np.asarray(r) ** (-1.0 - sig)
    near = adaptive(lambda r: I(r) * r**sig, 0.0, 1.0, tol=tol, rel=1e-13, left_power=-sig,
                    noise=lambda r: noise(r) * np.asarray(r) ** sig)
    R = Phi.support_radius
    parts, err = [near.value], near.error
    if R is None:
        raise ValueError("Phi needs a support radius for the far field")
    rmax = float(R) + float(np.linalg.norm(x))
    if rmax > 1.0:
        r = adaptive(I, 1.0, rmax, tol=tol, rel=1e-13, noise=noise)
        parts.append(r.value)
        err += r.error
    start = max(rmax, 1.0)
    jump = float(Phi.far_value(x)) - c
    if jump != 0.0:
        if kernel.power:
            parts.append(kernel.power * jump * omega * start ** (-sig) / sig)
        else:
            def block(b):
                lo, hi = start * 2.0**b, start * 2.0 ** (b + 1)
                g = lambda r: (np.asarray(kernel.K(x, (x[None, None, :] + np.atleast_1d(r)[:, None, None]
                                                   * dirs[None, :, :]).reshape(-1, n)), dtype=float)
                               .reshape(len(np.atleast_1d(r)), -1) @ w) * np.atleast_1d(r) ** (n - 1)
                return adaptive(g, lo, hi, tol=tol * 1e-3, rel=1e-13).value

            tail, terr = _tail_blocks(block, 0, 1, tol / max(abs(jump), 1e-300))
            parts.append(jump * tail)
            err += abs(jump) * terr
    near_bound = L * kernel.c2 * omega / (1.0 - sig)
    sup = Phi.sup_norm
    far_bound = 2.0 * sup * kernel.c2 * omega / sig if sup is not None else math.inf
    return AhlforsResult(math.fsum(parts), err, near_bound, far_bound)


def _dyadic(kernel, space: DyadicHalfLine, Phi, x, L, tol):
    x0 = float(x[0])
    if x0 < 0:
        raise ValueError("points of the dyadic half line are nonnegative")
    c = Phi(x, x)
    sig = kernel.sigma
    t, wg = gauss_legendre(8)

    def annulus(m):
        anc = DyadicInterval.containing(x0, m)
        a, b = anc.children()
        sib = b if a.contains(x0) else a
        lo, hi = sib.left, sib.right
        res = space.resolution
        cells = space.cells if res is None else int(max(1, 2 ** max(0, res - m - 1)))
        cells = min(cells, 1 << 14)
        width = (hi - lo) / cells
        pts = (lo + width * (np.arange(cells)[:, None] + t[None, :])).reshape(-1, 1)
        v = Phi.many(x[None, :], pts) - c
        k = np.asarray(kernel.K(x, pts), dtype=float)
        return width * math.fsum(((v * k).reshape(cells, -1) * wg[None, :]).ravel())

    R = Phi.support_radius
    if R is None:
        raise ValueError("Phi needs a support radius for the far field")
    reach = max(float(R), x0)
    # annulus m lies inside [0, 2^-m); beyond level M0 everything is outside the support
    M0 = 0
    while math.ldexp(1.0, -M0 - 1) <= reach:
        M0 -= 1
    M0 = min(M0, 0)
    # near field, rho <= 1: annuli m >= 0, truncated by the Lipschitz bound
    r = 2.0 ** (-(1.0 - sig))
    m_stop = 0
    while L * kernel.c2 / 2.0 * r**m_stop / (1.0 - r) > tol:
        m_stop += 1
    if space.resolution is not None:
        # annuli below the resolution lie inside one cell where Phi is constant in y
        m_stop = min(m_stop, max(space.resolution + 1, 0))
        err = 0.0
    else:
        err = L * kernel.c2 / 2.0 * r**m_stop / (1.0 - r)
    parts = [annulus(m) for m in range(M0 + 1, m_stop)]
    jump = float(Phi.far_value(x)) - c
    if jump != 0.0:
        if kernel.power:
            # annulus m has length 2^-m-1 and kernel 2^{m(1 + sigma)}
            parts.append(kernel.power * 0.5 * jump * 2.0 ** (M0 * sig) / (1.0 - 2.0 ** (-sig)))
        else:
            def block(m):
                anc = DyadicInterval.containing(x0, m)
                a, b = anc.children()
                sib = b if a.contains(x0) else a
                pts = (sib.left + sib.length * t).reshape(-1, 1)
                return sib.length * float(np.dot(wg, np.asarray(kernel.K(x, pts), dtype=float)))
            tail, terr = _tail_blocks(block, M0, -1, tol / max(abs(jump), 1e-300))
            parts.append(jump * tail)
            err += abs(jump) * terr
    near_bound = L * kernel.c2 / 2.0 / (1.0 - r)
    sup = Phi.sup_norm
    far_bound = 2.0 * sup * kernel.c2 / 2.0 / (1.0 - 2.0 ** (-sig)) if sup is not None else math.inf
    return AhlforsResult(math.fsum(parts), err, near_bound, far_bound)


def ahlfors_kirchhoff(kernel: ComparableKernel, space, Phi: TwoPointField, x,
                      lipschitz: float | None = None, tol: float = 1e-12,
                      check_pairs: int = 256) -> AhlforsResult:
    """``int (Phi(x, y) - Phi(x, x)) K(x, y) dmu(y)`` on an Ahlfors-regular space.

    Parameters
    ----------
    kernel : ComparableKernel
        Checked against its comparison bounds on ``check_pairs`` sampled
        pairs before integrating.
    space : EuclideanSpace or DyadicHalfLine
    Phi : TwoPointField
        Needs a support radius; the near-field bound uses its Lipschitz
        constant in ``y`` (taken from ``lipschitz`` or ``Phi.y_lipschitz``,
        with respect to the metric of ``space``).
    x : point

    Returns
    -------
    AhlforsResult
        ``near_bound = L c2 int_{d<1} d^{1-gamma-sigma} dmu`` and
        ``far_bound = 2 |Phi|_inf c2 int_{d>=1} d^{-gamma-sigma} dmu``;
        ``|value|`` never exceeds their sum.

    Raises
    ------
    ContractError
        If the kernel violates its bounds at a sampled pair.
    """
    if kernel.gamma != space.gamma:
        raise ValueError(f"kernel gamma {kernel.gamma} does not match the space ({space.gamma})")
    if check_pairs:
        kernel.check(space, check_pairs)
    x = as_point(x)
    L = _lipschitz(Phi, lipschitz)
    if isinstance(space, EuclideanSpace):
        if len(x) != space.n:
            raise ValueError(f"x has dimension {len(x)}, space has {space.n}")
        return _euclid(kernel, space, Phi, x, L, tol)
    if isinstance(space, DyadicHalfLine):
        if len(x) != 1:
            raise ValueError("points of the dyadic half line are scalars")
        return _dyadic(kernel, space, Phi, x, L, tol)
    raise ValueError(f"unsupported space {type(space).__name__}")


def haar_lipschitz(j: int) -> float:
    """``rho``-Lipschitz constant of a Haar function at level ``j``: ``2^{3j/2 + 2}``."""
    return 2.0 ** (1.5 * j + 2.0)
