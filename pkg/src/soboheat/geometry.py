"""Model Riemannian manifolds as analytic coordinate charts.

Every chart in the catalog is conformally flat: g_ij(x) = f(x) delta_ij
with a closed-form conformal factor f.  Partial derivatives of the
metric up to order 3 are generated symbolically at construction time and
compiled to vectorized numpy callables, so Christoffel symbols, their
derivatives, and the Ricci tensor come from analytic data, not finite
differences (the one exception is the second Christoffel derivative,
which uses central differences of the analytic first derivative).

Geodesic distance is closed form for the flat and hyperbolic models.
For the perturbed-Euclidean metric no closed form exists; there the
chord length along the straight chart segment is used (Gauss-Legendre
quadrature), which is exact in the flat limit and within the factor
sqrt((1+a)/(1-a)) of the true distance.
"""

from __future__ import annotations

import itertools
import math
from typing import Callable

import numpy as np
import sympy as sp


class DomainError(ValueError):
    """A point or ball left the chart's working domain."""


class CapabilityError(RuntimeError):
    """An operation was asked for data the chart does not provide."""


class NumericalError(ArithmeticError):
    """A numeric contract (SPD metric, solver residual, ...) failed."""


M_MAX = 3  # highest analytic metric-derivative order


def multi_indices(n: int, order: int) -> list[tuple[int, ...]]:
    """All multi-indices over n variables with |beta| == order."""
    out = []
    for combo in itertools.combinations_with_replacement(range(n), order):
        beta = [0] * n
        for axis in combo:
            beta[axis] += 1
        out.append(tuple(beta))
    return out


def multi_indices_up_to(n: int, m: int, start: int = 1) -> list[tuple[int, ...]]:
    out = []
    for order in range(start, m + 1):
        out.extend(multi_indices(n, order))
    return out


# 16-point Gauss-Legendre nodes/weights on [0, 1], for chord lengths.
_GL_X, _GL_W = np.polynomial.legendre.leggauss(16)
_GL_X = 0.5 * (_GL_X + 1.0)
_GL_W = 0.5 * _GL_W


class MetricChart:
    """A conformally flat analytic chart g_ij = f(x) delta_ij on a box."""

    def __init__(
        self,
        name: str,
        dim: int,
        factor_expr: sp.Expr,
        symbols: tuple[sp.Symbol, ...],
        lo,
        hi,
        periodic: tuple[bool, ...],
        distance_fn: Callable,
        params: dict | None = None,
    ):
        self.name = name
        self.n = dim
        self.lo = np.asarray(lo, dtype=float)
        self.hi = np.asarray(hi, dtype=float)
        self.periodic = tuple(periodic)
        self.params = dict(params or {})
        self._distance_fn = distance_fn
        self._symbols = symbols
        self._factor_expr = factor_expr
        self._derivs: dict[tuple[int, ...], Callable] = {}
        zero = tuple([0] * dim)
        exprs = {zero: factor_expr}
        for beta in multi_indices_up_to(dim, M_MAX):
            expr = factor_expr
            for axis, k in enumerate(beta):
                if k:
                    expr = sp.diff(expr, symbols[axis], k)
            exprs[beta] = sp.simplify(expr)
        for beta, expr in exprs.items():
            self._derivs[beta] = sp.lambdify(symbols, expr, modules="numpy")
        self.is_flat = all(expr == 0 for beta, expr in exprs.items() if sum(beta) > 0)
        # Conformal-factor range over the working box, for chart<->geodesic
        # distance conversion factors.
        probe = self.box_grid(33)
        fvals = self.conformal_factor(probe.reshape(-1, dim))
        self.f_min = float(np.min(fvals))
        self.f_max = float(np.max(fvals))
        if self.f_min <= 0:
            raise NumericalError(f"chart {name}: conformal factor not positive on the box")

    # -- basic queries -------------------------------------------------

    def box_grid(self, per_axis: int) -> np.ndarray:
        axes = [np.linspace(self.lo[i], self.hi[i], per_axis) for i in range(self.n)]
        mesh = np.meshgrid(*axes, indexing="ij")
        return np.stack(mesh, axis=-1)

    def contains(self, x, margin: float = 0.0):
        x = np.asarray(x, dtype=float)
        ok = np.ones(x.shape[:-1], dtype=bool)
        for i in range(self.n):
            if self.periodic[i]:
                continue
            ok &= (x[..., i] >= self.lo[i] + margin) & (x[..., i] <= self.hi[i] - margin)
        return ok

    def wrap(self, x):
        """Fold periodic coordinates back into [lo, hi)."""
        x = np.array(x, dtype=float)
        for i in range(self.n):
            if self.periodic[i]:
                L = self.hi[i] - self.lo[i]
                x[..., i] = self.lo[i] + np.mod(x[..., i] - self.lo[i], L)
        return x

    def _eval(self, beta: tuple[int, ...], x) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        cols = [x[..., i] for i in range(self.n)]
        val = self._derivs[beta](*cols)
        return np.broadcast_to(np.asarray(val, dtype=float), x.shape[:-1]).copy()

    def conformal_factor(self, x) -> np.ndarray:
        return self._eval(tuple([0] * self.n), x)

    def conformal_derivative(self, x, beta) -> np.ndarray:
        beta = tuple(int(b) for b in beta)
        if sum(beta) > M_MAX:
            raise CapabilityError(f"metric derivatives available up to order {M_MAX}")
        return self._eval(beta, x)

    # -- metric data ---------------------------------------------------

    def metric(self, x) -> np.ndarray:
        f = self.conformal_factor(x)
        eye = np.eye(self.n)
        return f[..., None, None] * eye

    def metric_inverse(self, x) -> np.ndarray:
        f = self.conformal_factor(x)
        eye = np.eye(self.n)
        return eye / f[..., None, None]

    def metric_derivatives(self, x, beta) -> np.ndarray:
        df = self.conformal_derivative(x, beta)
        eye = np.eye(self.n)
        return df[..., None, None] * eye

    def sqrt_det(self, x) -> np.ndarray:
        return self.conformal_factor(x) ** (self.n / 2.0)

    def distance(self, x, y) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        y = np.asarray(y, dtype=float)
        return self._distance_fn(self, x, y)


# -- catalog ----------------------------------------------------------


def _dist_euclidean(chart, x, y):
    return np.linalg.norm(x - y, axis=-1)


def _dist_torus(chart, x, y):
    L = chart.hi - chart.lo
    d = np.abs(x - y)
    d = np.minimum(d, L - d)
    return np.linalg.norm(d, axis=-1)


def _dist_halfplane(chart, x, y):
    dx2 = np.sum((x - y) ** 2, axis=-1)
    arg = 1.0 + dx2 / (2.0 * x[..., 1] * y[..., 1])
    return np.arccosh(np.maximum(arg, 1.0))


def _dist_poincare_ball(chart, x, y):
    dx2 = np.sum((x - y) ** 2, axis=-1)
    den = (1.0 - np.sum(x**2, axis=-1)) * (1.0 - np.sum(y**2, axis=-1))
    arg = 1.0 + 2.0 * dx2 / den
    return np.arccosh(np.maximum(arg, 1.0))


def _dist_chord(chart, x, y):
    """Length of the straight chart segment in the conformal metric."""
    x, y = np.broadcast_arrays(x, y)
    seg = np.linalg.norm(y - x, axis=-1)
    pts = x[..., None, :] + _GL_X[:, None] * (y - x)[..., None, :]
    f = chart.conformal_factor(pts)
    integral = np.sum(_GL_W * np.sqrt(f), axis=-1)
    return seg * integral


CATALOG = ("euclidean", "perturbed-euclidean", "hyperbolic-halfplane", "hyperbolic-ball", "flat-torus")


def make_chart(name: str, **params) -> MetricChart:
    """Instantiate a catalog chart by name.

    Accepted parameters: n (euclidean, 2 or 3), box (all non-periodic
    models, list of per-axis [lo, hi]), a and frequency (perturbed
    euclidean), L (flat torus side).
    """
    if name == "euclidean":
        n = int(params.get("n", 2))
        if n not in (2, 3):
            raise DomainError(f"euclidean chart supports n in (2, 3), got {n}")
        syms = sp.symbols(f"x0:{n}")
        box = params.get("box", [[0.0, 10.0]] * n)
        lo = [b[0] for b in box]
        hi = [b[1] for b in box]
        return MetricChart(name, n, sp.Integer(1), syms, lo, hi, (False,) * n, _dist_euclidean, params)
    if name == "perturbed-euclidean":
        n = int(params.get("n", 2))
        a = float(params.get("a", 0.1))
        freq = float(params.get("frequency", 1.0))
        if not 0 <= a < 1:
            raise DomainError(f"perturbation amplitude must be in [0, 1), got {a}")
        syms = sp.symbols(f"x0:{n}")
        expr = 1 + sp.Float(a) * sp.sin(sp.Float(freq) * syms[0])
        box = params.get("box", [[0.0, 10.0]] * n)
        lo = [b[0] for b in box]
        hi = [b[1] for b in box]
        return MetricChart(name, n, expr, syms, lo, hi, (False,) * n, _dist_chord,
                           {"a": a, "frequency": freq})
    if name == "hyperbolic-halfplane":
        syms = sp.symbols("x0:2")
        expr = 1 / syms[1] ** 2
        box = params.get("box", [[-2.0, 2.0], [0.25, 4.0]])
        if box[1][0] <= 0:
            raise DomainError("half-plane box must satisfy y > 0")
        lo = [b[0] for b in box]
        hi = [b[1] for b in box]
        return MetricChart(name, 2, expr, syms, lo, hi, (False, False), _dist_halfplane, params)
    if name == "hyperbolic-ball":
        syms = sp.symbols("x0:2")
        rho2 = syms[0] ** 2 + syms[1] ** 2
        expr = 4 / (1 - rho2) ** 2
        box = params.get("box", [[-0.6, 0.6], [-0.6, 0.6]])
        corner = math.hypot(max(abs(box[0][0]), abs(box[0][1])), max(abs(box[1][0]), abs(box[1][1])))
        if corner >= 1.0:
            raise DomainError("hyperbolic-ball box must stay inside the unit disc")
        lo = [b[0] for b in box]
        hi = [b[1] for b in box]
        return MetricChart(name, 2, expr, syms, lo, hi, (False, False), _dist_poincare_ball, params)
    if name == "flat-torus":
        L = float(params.get("L", 2 * math.pi))
        n = int(params.get("n", 2))
        syms = sp.symbols(f"x0:{n}")
        return MetricChart(name, n, sp.Integer(1), syms, [0.0] * n, [L] * n, (True,) * n,
                           _dist_torus, {"L": L})
    raise DomainError(f"unknown model {name!r}; catalog: {', '.join(CATALOG)}")


# -- connection and curvature ----------------------------------------


def _require_inside(chart: MetricChart, x):
    if not np.all(chart.contains(x)):
        raise DomainError(f"point outside the working domain of chart {chart.name}")


def christoffel(chart: MetricChart, x) -> np.ndarray:
    """Levi-Civita Christoffel symbols Gamma^i_{kj}, axes (..., i, k, j)."""
    x = np.asarray(x, dtype=float)
    _require_inside(chart, x)
    n = chart.n
    ginv = chart.metric_inverse(x)
    dg = np.stack(
        [chart.metric_derivatives(x, tuple(1 if a == l else 0 for a in range(n))) for l in range(n)],
        axis=-3,
    )  # (..., l, i, j)
    # T[l, k, j] = d_j g_kl + d_k g_lj - d_l g_jk
    T = dg.swapaxes(-3, -1)  # T[l,k,j] = dg[j,k,l] = d_j g_kl
    T2 = np.swapaxes(dg, -3, -2)  # T2[l,k,j] = dg[k,l,j] = d_k g_lj
    T3 = dg  # T3[l,k,j] = d_l g_kj = d_l g_jk
    Tfull = T + T2 - T3
    return 0.5 * np.einsum("...il,...lkj->...ikj", ginv, Tfull)


def christoffel_derivative(chart: MetricChart, x) -> np.ndarray:
    """Analytic first derivatives d_m Gamma^i_{kj}, axes (..., m, i, k, j)."""
    x = np.asarray(x, dtype=float)
    _require_inside(chart, x)
    n = chart.n
    ginv = chart.metric_inverse(x)

    def e(l):
        return tuple(1 if a == l else 0 for a in range(n))

    def e2(l, m):
        beta = [0] * n
        beta[l] += 1
        beta[m] += 1
        return tuple(beta)

    dg = np.stack([chart.metric_derivatives(x, e(l)) for l in range(n)], axis=-3)
    d2g = np.stack(
        [np.stack([chart.metric_derivatives(x, e2(l, m)) for l in range(n)], axis=-3) for m in range(n)],
        axis=-4,
    )  # (..., m, l, i, j)
    Tfull = dg.swapaxes(-3, -1) + np.swapaxes(dg, -3, -2) - dg  # (..., l, k, j)
    dT = (
        d2g.swapaxes(-3, -1) + np.swapaxes(d2g, -3, -2) - d2g
    )  # (..., m, l, k, j), same index gymnastics one level deeper
    dginv = -np.einsum("...ia,...mab,...bl->...mil", ginv, dg, ginv)
    term1 = 0.5 * np.einsum("...mil,...lkj->...mikj", dginv, Tfull)
    term2 = 0.5 * np.einsum("...il,...mlkj->...mikj", ginv, dT)
    return term1 + term2


def ricci(chart: MetricChart, x) -> np.ndarray:
    """Ricci tensor Rc_ij from Christoffels and their analytic derivatives."""
    gamma = christoffel(chart, x)  # (..., i, k, j)
    dgamma = christoffel_derivative(chart, x)  # (..., m, i, k, j)
    # Rc_sn = d_m Gamma^m_{ns} - d_n Gamma^m_{ms}
    #         + Gamma^m_{ml} Gamma^l_{ns} - Gamma^m_{nl} Gamma^l_{ms}
    t1 = np.einsum("...mmns->...ns", dgamma)
    t2 = np.einsum("...nmms->...ns", dgamma)
    t3 = np.einsum("...mml,...lns->...ns", gamma, gamma)
    t4 = np.einsum("...mnl,...lms->...ns", gamma, gamma)
    rc = t1 - t2 + t3 - t4
    return 0.5 * (rc + np.swapaxes(rc, -2, -1))


def ricci_sup_norm(chart: MetricChart, points) -> float:
    """Sup over sample points of the g-operator norm of the Ricci tensor."""
    points = np.asarray(points, dtype=float).reshape(-1, chart.n)
    rc = ricci(chart, points)
    f = chart.conformal_factor(points)
    op = rc / f[:, None, None]  # g^{-1} Rc for conformal metrics
    eig = np.linalg.eigvalsh(0.5 * (op + np.swapaxes(op, -2, -1)))
    return float(np.max(np.abs(eig)))


# -- geodesic balls in chart coordinates ------------------------------


def ball_bbox(chart: MetricChart, center, radius: float, per_axis: int = 17):
    """Chart bounding box of a geodesic ball, by sublevel-set scanning.

    Starting from the flat-limit guess (half-width radius/sqrt(f(center))),
    the box is grown until the sampled set {d(center, .) <= radius} no
    longer touches the box faces, then shrunk to that set plus one cell
    of margin.  Returns (lo, hi, inside); inside=False means the ball
    reaches the boundary of the working domain.
    """
    center = np.asarray(center, dtype=float)
    n = chart.n
    fc = float(chart.conformal_factor(center[None])[0])
    w = np.full(n, radius / math.sqrt(fc))
    inside = bool(np.all(chart.contains(center)))
    lo = center - w
    hi = center + w
    half_period = np.array(
        [(chart.hi[i] - chart.lo[i]) / 2.0 if chart.periodic[i] else np.inf for i in range(n)]
    )
    for _ in range(12):
        lo_c = np.empty(n)
        hi_c = np.empty(n)
        clip_lo = np.zeros(n, dtype=bool)
        clip_hi = np.zeros(n, dtype=bool)
        for i in range(n):
            if chart.periodic[i]:
                lo_c[i] = max(lo[i], center[i] - half_period[i])
                hi_c[i] = min(hi[i], center[i] + half_period[i])
                clip_lo[i] = lo_c[i] > lo[i]
                clip_hi[i] = hi_c[i] < hi[i]
            else:
                lo_c[i] = max(lo[i], chart.lo[i])
                hi_c[i] = min(hi[i], chart.hi[i])
                clip_lo[i] = lo_c[i] > lo[i]
                clip_hi[i] = hi_c[i] < hi[i]
        axes = [np.linspace(lo_c[i], hi_c[i], per_axis) for i in range(n)]
        mesh = np.meshgrid(*axes, indexing="ij")
        pts = chart.wrap(np.stack(mesh, axis=-1).reshape(-1, n))
        ok = chart.contains(pts)
        d = np.full(len(pts), np.inf)
        d[ok] = chart.distance(pts[ok], center[None, :])
        mask = (d <= radius).reshape((per_axis,) * n)
        if not mask.any():
            # radius below grid resolution; keep the flat-limit box
            return center - w, center + w, inside
        cell = (hi_c - lo_c) / (per_axis - 1)
        idx = np.argwhere(mask)
        new_lo = lo_c + (idx.min(axis=0) - 1) * cell
        new_hi = lo_c + (idx.max(axis=0) + 1) * cell
        touch_lo = idx.min(axis=0) == 0
        touch_hi = idx.max(axis=0) == per_axis - 1
        need_lo = touch_lo & ~clip_lo
        need_hi = touch_hi & ~clip_hi
        if not (need_lo.any() or need_hi.any()):
            lo, hi = new_lo, new_hi
            break
        lo = center - np.where(need_lo, 1.8, 1.0) * np.maximum(center - new_lo, 1e-12)
        hi = center + np.where(need_hi, 1.8, 1.0) * np.maximum(new_hi - center, 1e-12)
    for i in range(n):
        if chart.periodic[i]:
            lo[i] = max(lo[i], center[i] - half_period[i])
            hi[i] = min(hi[i], center[i] + half_period[i])
        else:
            lo[i] = max(lo[i], chart.lo[i])
            hi[i] = min(hi[i], chart.hi[i])
    if inside:
        # the ball leaves the domain iff some boundary-face point is
        # within the radius; sample each face over the box extent
        for i in range(n):
            if chart.periodic[i]:
                continue
            for bound in (chart.lo[i], chart.hi[i]):
                axes = [
                    np.array([bound]) if j == i else np.linspace(lo[j], hi[j], 65)
                    for j in range(n)
                ]
                face = np.stack(np.meshgrid(*axes, indexing="ij"), axis=-1).reshape(-1, n)
                if np.any(chart.distance(face, center[None, :]) <= radius):
                    inside = False
                    break
            if not inside:
                break
    return lo, hi, inside


def ball_fits_domain(chart: MetricChart, center, radius: float) -> bool:
    center = np.asarray(center, dtype=float)
    if not np.all(chart.contains(center)):
        return False
    if chart.is_flat:
        # constant factor: geodesic ball = chart ball of radius R/sqrt(f)
        f = float(chart.conformal_factor(center[None])[0])
        gap = min(
            (chart.hi[i] - chart.lo[i]) / 2.0
            if chart.periodic[i]
            else min(center[i] - chart.lo[i], chart.hi[i] - center[i])
            for i in range(chart.n)
        )
        return gap * math.sqrt(f) >= radius
    _, _, inside = ball_bbox(chart, center, radius)
    return inside


def ball_sample_points(chart: MetricChart, center, radius: float, per_axis):
    """Grid sample of a geodesic ball: (points_inside, cell_volume)."""
    center = np.asarray(center, dtype=float)
    lo, hi, _ = ball_bbox(chart, center, radius)
    per_axis = np.broadcast_to(np.asarray(per_axis, dtype=int), (chart.n,))
    axes = [np.linspace(lo[i], hi[i], int(per_axis[i])) for i in range(chart.n)]
    mesh = np.meshgrid(*axes, indexing="ij")
    pts = np.stack([m.ravel() for m in mesh], axis=-1)
    pts_eval = chart.wrap(pts)
    mask = chart.distance(pts_eval, center[None, :]) <= radius
    cell = float(np.prod([(hi[i] - lo[i]) / max(int(per_axis[i]) - 1, 1) for i in range(chart.n)]))
    sel = pts_eval[mask]
    if len(sel) == 0:
        sel = center[None, :]
    return sel, cell


def volume_of_ball(chart: MetricChart, center, radius: float, quadrature_resolution: int = 256) -> float:
    """Midpoint-rule Riemannian volume of a geodesic ball.

    Cells cut by the ball boundary are weighted by an 8x8 subsample of
    the indicator, keeping the midpoint rule's error well below the
    stated tolerances at moderate resolutions.
    """
    center = np.asarray(center, dtype=float)
    lo, hi, inside = ball_bbox(chart, center, radius, per_axis=33)
    if not inside:
        raise DomainError("geodesic ball exits the working domain")
    n = chart.n
    res = int(quadrature_resolution)
    h = (hi - lo) / res
    cell = float(np.prod(h))
    # chart-to-geodesic conversion for the boundary band, from the local
    # factor range over the bbox (the chart-wide range can be far wider)
    probe = np.stack(
        np.meshgrid(*[np.linspace(lo[i], hi[i], 9) for i in range(n)], indexing="ij"),
        axis=-1,
    ).reshape(-1, n)
    f_probe = chart.conformal_factor(probe)
    # geodesic radius of a cell is at most (|h|/2) sqrt(f); the full
    # diagonal keeps a 2x safety margin
    band = float(np.linalg.norm(h)) * math.sqrt(float(np.max(f_probe)))
    sub_per_axis = 8 if n == 2 else 4
    sub = (np.arange(sub_per_axis) + 0.5) / sub_per_axis - 0.5
    offsets = np.stack(np.meshgrid(*([sub] * n), indexing="ij"), axis=-1).reshape(-1, n) * h
    axes = [lo[i] + (np.arange(res) + 0.5) * h[i] for i in range(n)]
    total = 0.0
    # slab over the first axis in blocks of ~256k cells to bound memory
    mesh_rest = np.meshgrid(*axes[1:], indexing="ij")
    rest = np.stack([m.ravel() for m in mesh_rest], axis=-1) if n > 1 else np.zeros((1, 0))
    rows_per_block = max(1, (1 << 18) // max(1, len(rest)))
    for start in range(0, res, rows_per_block):
        x0 = axes[0][start : start + rows_per_block]
        pts = np.concatenate(
            [np.repeat(x0, len(rest))[:, None], np.tile(rest, (len(x0), 1))], axis=1
        )
        d = chart.distance(pts, center[None, :])
        weights = (d <= radius - band).astype(float)
        boundary = (weights == 0.0) & (d <= radius + band)
        if np.any(boundary):
            bpts = pts[boundary]
            frac = np.empty(len(bpts))
            for s in range(0, len(bpts), 4096):
                blk = bpts[s : s + 4096]
                subpts = blk[:, None, :] + offsets[None, :, :]
                dsub = chart.distance(subpts, center[None, None, :])
                frac[s : s + 4096] = np.mean(dsub <= radius, axis=1)
            weights[boundary] = frac
        total += float(np.sum(chart.sqrt_det(pts) * weights))
    return total * cell


# -- the Christoffel-control bound ------------------------------------


def cmt_bound_check(chart: MetricChart, center, radius: float, m: int, sample_density: float = 16.0) -> dict:
    """Smallest C with |d^{k-1} Gamma| <= C * sum_{|b|<=k} sup_ij |d^b g_ij|
    over a sample grid of the ball, for every k <= m.
    """
    if m < 1:
        raise CapabilityError("need derivative order m >= 1")
    if m > M_MAX:
        raise CapabilityError(f"metric derivatives available up to order {M_MAX}")
    center = np.asarray(center, dtype=float)
    if not ball_fits_domain(chart, center, radius):
        raise DomainError("ball exits the working domain")
    per_axis = max(9, int(math.ceil(2 * radius * sample_density)) + 1)
    pts, _ = ball_sample_points(chart, center, radius, per_axis)
    n = chart.n

    def metric_sum(k):
        total = np.abs(chart.conformal_factor(pts))  # |beta| = 0 term (g_ij itself)
        for beta in multi_indices_up_to(n, k):
            total = total + np.abs(chart.conformal_derivative(pts, beta))
        return total

    witness = 0.0
    for k in range(1, m + 1):
        if k == 1:
            lhs = np.max(np.abs(christoffel(chart, pts)), axis=(-3, -2, -1))
        elif k == 2:
            lhs = np.max(np.abs(christoffel_derivative(chart, pts)), axis=(-4, -3, -2, -1))
        else:  # k == 3: central differences of the analytic first derivative
            step = 1e-4
            pieces = []
            for axis in range(n):
                ee = np.zeros(n)
                ee[axis] = step
                dplus = christoffel_derivative(chart, chart.wrap(pts + ee))
                dminus = christoffel_derivative(chart, chart.wrap(pts - ee))
                pieces.append((dplus - dminus) / (2 * step))
            lhs = np.max(np.abs(np.stack(pieces, axis=1)), axis=(-5, -4, -3, -2, -1))
        rhs = metric_sum(k)
        witness = max(witness, float(np.max(lhs / rhs)))
    return {"holds": math.isfinite(witness), "witness_constant": witness, "m": m, "samples": len(pts)}


def cgt_injectivity_lower_bound(r: float, vol_ball: float, vol_tangent_ball: float) -> float:
    """Injectivity-radius lower bound r * V / (V + V_tangent)."""
    if r <= 0 or vol_ball <= 0 or vol_tangent_ball <= 0:
        raise DomainError("all inputs must be positive")
    return r * vol_ball / (vol_ball + vol_tangent_ball)
