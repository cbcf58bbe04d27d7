"""Weighted Lebesgue/Sobolev norms of gridded fields on chart domains.

Fields live on rectangular chart grids; the quadrature weight per node is
h^n sqrt(det g).  Covariant derivatives use second-order finite
differences plus Christoffel corrections:

  scalars   (grad u)_i   = d_i u
            (Hess u)_ij  = d_i d_j u - Gamma^k_ij d_k u
  one-forms (D w)_ij     = d_i w_j - Gamma^k_ij w_k

and one further covariant step for second derivatives of one-forms.
Pointwise moduli contract all lower indices with g^{-1}; for a conformal
metric that is a factor f^(-rank/2) on the Euclidean modulus.  Time-
dependent fields get Bochner norms: L^s in time (trapezoid rule) of the
spatial norm.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .geometry import CapabilityError, DomainError, MetricChart, christoffel


class Grid:
    """Uniform rectangular chart grid with metric quadrature weights."""

    def __init__(self, chart: MetricChart, axes):
        self.chart = chart
        self.axes = [np.asarray(a, dtype=float) for a in axes]
        if len(self.axes) != chart.n:
            raise DomainError("one axis per chart dimension required")
        self.shape = tuple(len(a) for a in self.axes)
        self.h = np.array([a[1] - a[0] for a in self.axes])
        for i, a in enumerate(self.axes):
            if not np.allclose(np.diff(a), self.h[i]):
                raise DomainError("grid axes must be uniform")
        mesh = np.meshgrid(*self.axes, indexing="ij")
        self.points = np.stack(mesh, axis=-1)
        flat = self.points.reshape(-1, chart.n)
        self.f = chart.conformal_factor(flat).reshape(self.shape)
        self.quadrature = float(np.prod(self.h)) * self.f ** (chart.n / 2.0)
        # trapezoid end-weights on non-periodic axes
        for i in range(chart.n):
            if chart.periodic[i]:
                continue
            w = np.ones(self.shape[i])
            w[0] = w[-1] = 0.5
            shp = [1] * chart.n
            shp[i] = self.shape[i]
            self.quadrature = self.quadrature * w.reshape(shp)
        self._gamma = None

    @classmethod
    def over_box(cls, chart: MetricChart, box, per_axis):
        per_axis = np.broadcast_to(np.asarray(per_axis, dtype=int), (chart.n,))
        axes = []
        for i in range(chart.n):
            lo, hi = box[i]
            if chart.periodic[i] and abs((hi - lo) - (chart.hi[i] - chart.lo[i])) < 1e-12:
                axes.append(np.linspace(lo, hi, int(per_axis[i]), endpoint=False))
            else:
                axes.append(np.linspace(lo, hi, int(per_axis[i])))
        return cls(chart, axes)

    @property
    def gamma(self):
        if self._gamma is None:
            flat = self.points.reshape(-1, self.chart.n)
            self._gamma = christoffel(self.chart, flat).reshape(
                self.shape + (self.chart.n,) * 3
            )
        return self._gamma

    def partial(self, arr: np.ndarray, axis: int) -> np.ndarray:
        """Second-order d/dx_axis; periodic axes wrap, others use
        one-sided second-order stencils at the edges."""
        if self.chart.periodic[axis]:
            padded = np.concatenate(
                [np.take(arr, [-2, -1], axis=axis), arr, np.take(arr, [0, 1], axis=axis)],
                axis=axis,
            )
            g = np.gradient(padded, self.h[axis], axis=axis, edge_order=2)
            sl = [slice(None)] * g.ndim
            sl[axis] = slice(2, -2)
            return g[tuple(sl)]
        return np.gradient(arr, self.h[axis], axis=axis, edge_order=2)

    def ball_mask(self, center, radius: float) -> np.ndarray:
        flat = self.points.reshape(-1, self.chart.n)
        d = self.chart.distance(flat, np.asarray(center, dtype=float)[None, :])
        return (d <= radius).reshape(self.shape)


@dataclass
class DiscreteField:
    """Scalar or one-form samples on a Grid, optionally time-indexed.

    values shape: (*grid.shape) or (*grid.shape, n) without a time axis,
    with a leading time axis of len(times) otherwise.
    """

    grid: Grid
    values: np.ndarray
    kind: str = "scalar"
    times: np.ndarray | None = None

    def __post_init__(self):
        if self.kind not in ("scalar", "one-form"):
            raise DomainError(f"unknown field kind {self.kind!r}")
        if self.kind == "one-form" and self.grid.chart.n != 2:
            raise CapabilityError("one-form fields are supported in dimension 2 only")
        self.values = np.asarray(self.values, dtype=float)
        expect = self.grid.shape + ((self.grid.chart.n,) if self.kind == "one-form" else ())
        if self.times is not None:
            self.times = np.asarray(self.times, dtype=float)
            if self.values.shape != (len(self.times),) + expect:
                raise DomainError("value array shape does not match grid/time axes")
        elif self.values.shape != expect:
            raise DomainError("value array shape does not match the grid")

    @classmethod
    def from_function(cls, grid: Grid, fn, kind="scalar", times=None):
        pts = grid.points
        if times is None:
            return cls(grid, np.asarray(fn(pts), dtype=float), kind)
        vals = np.stack([np.asarray(fn(t, pts), dtype=float) for t in times])
        return cls(grid, vals, kind, np.asarray(times, dtype=float))

    def at_time(self, j: int) -> np.ndarray:
        return self.values[j] if self.times is not None else self.values


def _covariant_step(grid: Grid, tensor: np.ndarray, rank: int) -> np.ndarray:
    """One covariant derivative of a rank-(0, rank) lower-index tensor
    field (rank <= 2); the new index is inserted after the grid axes."""
    n = grid.chart.n
    nd = len(grid.shape)
    parts = np.stack([grid.partial(tensor, ax) for ax in range(n)], axis=nd)
    if rank == 0:
        return parts
    gamma = grid.gamma  # (*shape, u, i, j) = Gamma^u_{ij}
    if rank == 1:
        return parts - np.einsum("...lij,...l->...ij", gamma, tensor)
    if rank == 2:
        c1 = np.einsum("...lmi,...lj->...mij", gamma, tensor)
        c2 = np.einsum("...lmj,...il->...mij", gamma, tensor)
        return parts - c1 - c2
    raise CapabilityError("covariant derivative implemented for rank <= 2")


def covariant_tensors(field: DiscreteField, order: int, values=None) -> list:
    """[T_0, ..., T_order] where T_j is the j-th covariant derivative."""
    grid = field.grid
    if order > 2:
        raise CapabilityError("covariant derivatives available up to order 2")
    vals = field.values if values is None else values
    base_rank = 1 if field.kind == "one-form" else 0
    tensors = [vals]
    cur, rank = vals, base_rank
    for _ in range(order):
        cur = _covariant_step(grid, cur, rank)
        rank += 1
        tensors.append(cur)
    return tensors


def tensor_modulus(grid: Grid, tensor: np.ndarray, rank: int) -> np.ndarray:
    """Pointwise |T|_g, indices raised with g^{-1} = f^{-1} delta."""
    nd = len(grid.shape)
    sq = tensor**2
    for _ in range(tensor.ndim - nd):
        sq = sq.sum(axis=-1)
    return np.sqrt(sq) * grid.f ** (-rank / 2.0)


@dataclass
class NormRequest:
    r: float = 2.0
    l: int = 0
    weight: np.ndarray | None = None  # per-node weight, or None for 1
    region: tuple | None = None  # (center, radius) geodesic ball, or None
    s: float | None = None  # time integrability (defaults to r)
    window: tuple | None = None  # (t0, t1), defaults to the whole axis

    def __post_init__(self):
        if self.r < 1:
            raise DomainError("integrability r must be >= 1")
        if not 0 <= self.l <= 2:
            raise DomainError("Sobolev order l must be in {0, 1, 2}")


def _spatial_norm(field: DiscreteField, vals, req: NormRequest) -> float:
    grid = field.grid
    mask = None
    if req.region is not None:
        mask = grid.ball_mask(*req.region)
    q = grid.quadrature if mask is None else grid.quadrature * mask
    if req.weight is not None:
        q = q * req.weight
    base_rank = 1 if field.kind == "one-form" else 0
    tensors = covariant_tensors(field, req.l, values=vals)
    total = 0.0
    for j, T in enumerate(tensors):
        mod = tensor_modulus(grid, T, base_rank + j)
        total += float(np.sum(mod**req.r * q)) ** (1.0 / req.r)
    return total


def sobolev_norm(field: DiscreteField, req: NormRequest) -> float:
    """Sum over j <= l of weighted L^r norms of |D^j field|; Bochner L^s
    in time when the field carries a time axis."""
    if field.times is None:
        return _spatial_norm(field, field.values, req)
    s = req.s if req.s is not None else req.r
    t = field.times
    if req.window is not None:
        t0, t1 = req.window
        sel = (t >= t0 - 1e-12) & (t <= t1 + 1e-12)
    else:
        sel = np.ones(len(t), dtype=bool)
    idx = np.flatnonzero(sel)
    vals = np.array([_spatial_norm(field, field.values[j], req) for j in idx])
    return float(np.trapezoid(vals**s, t[idx]) ** (1.0 / s))


def lebesgue_norm(field: DiscreteField, r: float, weight=None, region=None,
                  s=None, window=None) -> float:
    return sobolev_norm(field, NormRequest(r=r, l=0, weight=weight, region=region,
                                           s=s, window=window))


def holder_volume_check(field: DiscreteField, ball, r: float) -> dict:
    """||w||_{L^2(B)} <= |B|^(1/2 - 1/r) ||w||_{L^r(B)}, exact for any
    discrete measure when r >= 2."""
    if r < 2:
        raise DomainError("needs r >= 2")
    grid = field.grid
    mask = grid.ball_mask(*ball)
    vol = float(np.sum(grid.quadrature * mask))
    lhs = _spatial_norm(field, field.at_time(0), NormRequest(r=2.0, region=ball))
    lr = _spatial_norm(field, field.at_time(0), NormRequest(r=r, region=ball))
    rhs = vol ** (0.5 - 1.0 / r) * lr
    return {"lhs": lhs, "rhs": rhs, "volume": vol, "holds": lhs <= rhs * (1 + 1e-12)}


def _chart_side_norm(field: DiscreteField, ball, m: int, r: float) -> float:
    """Flat Sobolev norm in the chart rescaled at the ball center: plain
    partials d_xi = f(c)^(-1/2) d_x, Lebesgue measure dxi = f(c)^(n/2) dx."""
    grid = field.grid
    chart = grid.chart
    center = np.asarray(ball[0], dtype=float)
    fc = float(chart.conformal_factor(center[None])[0])
    mask = grid.ball_mask(*ball)
    q = float(np.prod(grid.h)) * fc ** (chart.n / 2.0) * mask
    total = 0.0
    cur = field.at_time(0)
    for j in range(m + 1):
        sq = cur**2
        for _ in range(j + (1 if field.kind == "one-form" else 0)):
            sq = sq.sum(axis=-1)
        mod = np.sqrt(sq) * fc ** (-j / 2.0)  # chart rescaling of each d_xi
        total += float(np.sum(mod**r * q)) ** (1.0 / r)
        if j < m:
            cur = np.stack([grid.partial(cur, ax) for ax in range(chart.n)],
                           axis=len(grid.shape))
    return total


def chart_norm_comparison(field: DiscreteField, ball, m: int, r: float,
                          variant: str = "sections") -> dict:
    """Manifold-side vs rescaled-chart Sobolev norms on an admissible ball.

    The two ratios are normalized by the radius power R^-m (sections) or
    R^(1-m) (functions); both stay bounded across admissible balls.
    """
    if m > 2:
        raise CapabilityError("norm comparison available for m <= 2")
    center, R = ball
    manifold = sobolev_norm(field, NormRequest(r=r, l=m, region=ball))
    chart_side = _chart_side_norm(field, ball, m, r)
    p = -m if variant == "sections" else 1 - m
    scale = R**p
    return {
        "manifold_norm": manifold,
        "chart_norm": chart_side,
        "ratio_m_over_c": manifold / (scale * chart_side) if chart_side else math.inf,
        "ratio_c_over_m": chart_side / (scale * manifold) if manifold else math.inf,
    }


def sobolev_embedding_check(field: DiscreteField, ball, m: int, rho: float,
                            variant: str = "sections") -> dict:
    """||u||_{L^tau(B(x, R/2))} against R^(-2m) ||u||_{W^(m,rho)(B(x, R))}
    with 1/tau = 1/rho - m/n; reports the dimensionless constant."""
    center, R = ball
    n = field.grid.chart.n
    inv_tau = 1.0 / rho - m / n
    if inv_tau <= 0:
        raise DomainError("needs 1/rho - m/n > 0")
    tau = 1.0 / inv_tau
    lhs = sobolev_norm(field, NormRequest(r=tau, l=0, region=(center, R / 2.0)))
    rhs = sobolev_norm(field, NormRequest(r=rho, l=m, region=ball))
    p = -2 * m if variant == "sections" else 1 - 2 * m
    c_emp = 0.0 if rhs == 0 else lhs / (R**p * rhs)
    return {"lhs": lhs, "rhs": rhs, "tau": tau, "c_emp": c_emp}


def covering_sum_norm(field: DiscreteField, covering, weight_exp: float, l: int,
                      tau: float, use_full_balls: bool = False) -> float:
    """(sum over members of R(x)^(weight_exp * tau) * member-norm^tau)^(1/tau),
    members being the cover balls or the full B(x, R(x)/10) family."""
    radii = covering.r_eps / covering.eta if use_full_balls else covering.cover_radii
    total = 0.0
    for j in range(len(covering.centers)):
        nrm = sobolev_norm(field, NormRequest(r=tau, l=l,
                                              region=(covering.centers[j], radii[j])))
        total += covering.r_eps[j] ** (weight_exp * tau) * nrm**tau
    return total ** (1.0 / tau)
