"""Implicit-Euler heat flow on chart grids, with estimate experiments.

The scalar operator is the positive Laplace-Beltrami operator in
divergence form, assembled as a stiffness matrix K with half-node
metric coefficients so that u^T K v approximates the Dirichlet energy
integral f^(n/2-1) grad u . grad v dx (conformal metric f delta).  With
the lumped mass matrix W of quadrature weights, each implicit Euler step
solves the SPD system (W + dt K) u+ = W (u + dt forcing) by conjugate
gradients.  Homogeneous Dirichlet data is imposed by restriction to
interior nodes; fully periodic grids need no boundary handling.

One-forms (2-D, fully periodic grids only) use a discrete-exterior-
calculus Hodge Laplacian d delta + delta d with diagonal Hodge stars on
the staggered edge grid.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field as dc_field

import numpy as np
import scipy.sparse as sp
from scipy.sparse.linalg import cg

from .geometry import CapabilityError, DomainError, MetricChart, NumericalError
from .norms import DiscreteField, Grid, NormRequest, sobolev_norm

# re-exported: the injectivity-radius calculator lives with the metric code
from .geometry import cgt_injectivity_lower_bound  # noqa: F401


def _flat_index(shape):
    return np.arange(int(np.prod(shape))).reshape(shape)


def discrete_laplacian(grid: Grid):
    """(K, W): stiffness and lumped mass for the scalar Laplace-Beltrami
    operator; the operator is W^-1 K, symmetric PSD in the W inner
    product."""
    chart = grid.chart
    n = chart.n
    shape = grid.shape
    N = int(np.prod(shape))
    idx = _flat_index(shape)
    hvol = float(np.prod(grid.h))
    rows, cols, vals = [], [], []
    for ax in range(n):
        # half-node metric coefficient f^(n/2-1) on each axis edge
        p_idx = idx
        if chart.periodic[ax]:
            q_idx = np.roll(idx, -1, axis=ax)
            mid = grid.points.copy()
            step = np.zeros(n)
            step[ax] = grid.h[ax] / 2.0
            mid = chart.wrap(mid + step)
            fmid = chart.conformal_factor(mid.reshape(-1, n)).reshape(shape)
        else:
            sl_p = [slice(None)] * n
            sl_p[ax] = slice(0, shape[ax] - 1)
            p_idx = idx[tuple(sl_p)]
            sl_q = [slice(None)] * n
            sl_q[ax] = slice(1, shape[ax])
            q_idx = idx[tuple(sl_q)]
            step = np.zeros(n)
            step[ax] = grid.h[ax] / 2.0
            mid = grid.points[tuple(sl_p)] + step
            fmid = chart.conformal_factor(mid.reshape(-1, n)).reshape(p_idx.shape)
        a = (fmid ** (n / 2.0 - 1.0) * hvol / grid.h[ax] ** 2).ravel()
        p = p_idx.ravel()
        q = q_idx.ravel()
        rows += [p, q, p, q]
        cols += [p, q, q, p]
        vals += [a, a, -a, -a]
    K = sp.coo_matrix(
        (np.concatenate(vals), (np.concatenate(rows), np.concatenate(cols))), shape=(N, N)
    ).tocsr()
    W = grid.quadrature.ravel()
    return K, W


def interior_mask(grid: Grid) -> np.ndarray:
    mask = np.ones(grid.shape, dtype=bool)
    for ax in range(grid.chart.n):
        if grid.chart.periodic[ax]:
            continue
        sl = [slice(None)] * grid.chart.n
        for edge in (0, -1):
            sl[ax] = edge
            mask[tuple(sl)] = False
    return mask.ravel()


@dataclass
class ParabolicProblem:
    grid: Grid
    forcing: callable  # (t, points) -> values
    horizon: float  # T
    margin: float  # alpha
    dt: float
    kind: str = "scalar"

    def __post_init__(self):
        if self.dt <= 0 or self.horizon <= 0 or self.margin < 0:
            raise DomainError("need dt > 0, horizon > 0, margin >= 0")
        if self.kind == "one-form":
            chart = self.grid.chart
            if chart.n != 2 or not all(chart.periodic):
                raise CapabilityError("one-form problems need a fully periodic 2-D grid")
        elif self.kind != "scalar":
            raise DomainError(f"unknown problem kind {self.kind!r}")


@dataclass
class ParabolicSolution:
    problem: ParabolicProblem
    times: np.ndarray
    u: DiscreteField
    dt_u: DiscreteField
    forcing_values: np.ndarray
    iterations: list = dc_field(default_factory=list)

    def forcing_field(self) -> DiscreteField:
        return DiscreteField(self.problem.grid, self.forcing_values,
                             self.u.kind, self.times)


def _cg_solve(A, b, x0, wdiag):
    M = sp.diags(1.0 / A.diagonal())
    x, info = cg(A, b, x0=x0, rtol=1e-10, atol=0.0, maxiter=10 * len(b), M=M)
    if info != 0:
        raise NumericalError(f"conjugate gradients failed to converge (info={info})")
    return x


def solve_parabolic(problem: ParabolicProblem) -> ParabolicSolution:
    """Implicit Euler from u(0) = 0 to horizon + margin."""
    if problem.kind == "one-form":
        return _solve_one_form(problem)
    grid = problem.grid
    K, W = discrete_laplacian(grid)
    inner = interior_mask(grid)
    Ki = K[inner][:, inner]
    Wi = W[inner]
    A = sp.diags(Wi) + problem.dt * Ki
    steps = int(round((problem.horizon + problem.margin) / problem.dt))
    times = problem.dt * np.arange(steps + 1)
    pts = grid.points
    u = np.zeros((steps + 1,) + grid.shape)
    omegas = np.stack([np.asarray(problem.forcing(t, pts), dtype=float) for t in times])
    iters = []
    ui = np.zeros(int(inner.sum()))
    for j in range(steps):
        # step-averaged forcing: the discrete L2 bound then telescopes to
        # exactly the trapezoid time integral of the forcing norm
        om = 0.5 * (omegas[j] + omegas[j + 1]).ravel()[inner]
        rhs = Wi * (ui + problem.dt * om)
        ui = _cg_solve(A, rhs, ui, Wi)
        frame = np.zeros(inner.shape)
        frame[inner] = ui
        u[j + 1] = frame.reshape(grid.shape)
        iters.append(j)
    dtu = np.zeros_like(u)
    dtu[1:] = (u[1:] - u[:-1]) / problem.dt
    dtu[0] = dtu[1]
    return ParabolicSolution(
        problem,
        times,
        DiscreteField(grid, u, "scalar", times),
        DiscreteField(grid, dtu, "scalar", times),
        omegas,
        iters,
    )


# -- one-forms via DEC on periodic grids -------------------------------


def _dec_operators(grid: Grid):
    """d0, d1 and diagonal Hodge stars for a fully periodic 2-D grid.

    Edge order: all x-edges (node -> node + e_x) then all y-edges.  In
    two dimensions the star on 1-forms is conformally invariant, so *1
    carries only the flat length ratios; *0 and *2 carry the area factor.
    """
    chart = grid.chart
    shape = grid.shape
    N = int(np.prod(shape))
    idx = _flat_index(shape)
    h1, h2 = grid.h
    ex = np.roll(idx, -1, axis=0).ravel()
    ey = np.roll(idx, -1, axis=1).ravel()
    base = idx.ravel()
    rows = np.concatenate([np.arange(N), np.arange(N), np.arange(N) + N, np.arange(N) + N])
    cols = np.concatenate([ex, base, ey, base])
    vals = np.concatenate([np.ones(N), -np.ones(N), np.ones(N), -np.ones(N)])
    d0 = sp.coo_matrix((vals, (rows, cols)), shape=(2 * N, N)).tocsr()
    # faces at (i+1/2, j+1/2): boundary = +x-edge(i,j) +y-edge(i+1,j) -x-edge(i,j+1) -y-edge(i,j)
    f = np.arange(N)
    x_lo = base
    x_hi = np.roll(idx, -1, axis=1).ravel()  # x-edge shifted in y
    y_lo = base + 0  # y-edge at (i, j)
    y_hi = np.roll(idx, -1, axis=0).ravel()  # y-edge at (i+1, j)
    rows = np.concatenate([f, f, f, f])
    cols = np.concatenate([x_lo, y_hi + N, x_hi, y_lo + N])
    vals = np.concatenate([np.ones(N), np.ones(N), -np.ones(N), -np.ones(N)])
    d1 = sp.coo_matrix((vals, (rows, cols)), shape=(N, 2 * N)).tocsr()
    fnode = grid.f.ravel()
    star0 = fnode * h1 * h2
    star1 = np.concatenate([np.full(N, h2 / h1), np.full(N, h1 / h2)])
    fcent = grid.points + 0.5 * np.array([h1, h2])
    fcent = chart.conformal_factor(chart.wrap(fcent).reshape(-1, 2))
    star2 = 1.0 / (fcent * h1 * h2)
    return d0, d1, star0, star1, star2


def one_form_hodge_matrices(grid: Grid):
    """(B, S1): S1-weighted Hodge Laplacian B = S1 Delta_1 (symmetric PSD)
    and the diagonal edge inner product S1."""
    d0, d1, s0, s1, s2 = _dec_operators(grid)
    S1 = sp.diags(s1)
    B = S1 @ d0 @ sp.diags(1.0 / s0) @ d0.T @ S1 + d1.T @ sp.diags(s2) @ d1
    return B.tocsr(), s1


def sample_one_form_on_edges(grid: Grid, fn, t: float) -> np.ndarray:
    """Average a nodal one-form callable onto the staggered edge grid."""
    chart = grid.chart
    h1, h2 = grid.h
    xmid = chart.wrap(grid.points + np.array([h1 / 2.0, 0.0]))
    ymid = chart.wrap(grid.points + np.array([0.0, h2 / 2.0]))
    wx = np.asarray(fn(t, xmid), dtype=float)[..., 0].ravel()
    wy = np.asarray(fn(t, ymid), dtype=float)[..., 1].ravel()
    return np.concatenate([wx, wy])


def _solve_one_form(problem: ParabolicProblem) -> ParabolicSolution:
    grid = problem.grid
    B, s1 = one_form_hodge_matrices(grid)
    A = sp.diags(s1) + problem.dt * B
    steps = int(round((problem.horizon + problem.margin) / problem.dt))
    times = problem.dt * np.arange(steps + 1)
    omegas = np.stack([sample_one_form_on_edges(grid, problem.forcing, t) for t in times])
    u = np.zeros((steps + 1, 2 * int(np.prod(grid.shape))))
    x = u[0].copy()
    for j in range(steps):
        rhs = s1 * (x + problem.dt * 0.5 * (omegas[j] + omegas[j + 1]))
        x = _cg_solve(A, rhs, x, s1)
        u[j + 1] = x
    dtu = np.zeros_like(u)
    dtu[1:] = (u[1:] - u[:-1]) / problem.dt
    dtu[0] = dtu[1]
    # edge arrays are packaged as nodal two-component fields for norms:
    # averaging the two staggered samples back onto nodes
    N = int(np.prod(grid.shape))

    def to_nodes(arr):
        wx = arr[:, :N].reshape((-1,) + grid.shape)
        wy = arr[:, N:].reshape((-1,) + grid.shape)
        wx = 0.5 * (wx + np.roll(wx, 1, axis=1))
        wy = 0.5 * (wy + np.roll(wy, 1, axis=2))
        return np.stack([wx, wy], axis=-1)

    return ParabolicSolution(
        problem,
        times,
        DiscreteField(grid, to_nodes(u), "one-form", times),
        DiscreteField(grid, to_nodes(dtu), "one-form", times),
        to_nodes(omegas),
    )


# -- verification harnesses --------------------------------------------


def l2_norm_at_times(field: DiscreteField) -> np.ndarray:
    grid = field.grid
    q = grid.quadrature
    if field.kind == "one-form":
        mod2 = np.sum(field.values**2, axis=-1) / grid.f
    else:
        mod2 = field.values**2
    return np.sqrt(np.sum(mod2 * q, axis=tuple(range(1, mod2.ndim))))


def check_threshold_contraction(solution: ParabolicSolution, slack: float = 1e-8) -> dict:
    """||u(t_j)||_L2 <= integral_0^t_j ||forcing||_L2 ds at every node."""
    un = l2_norm_at_times(solution.u)
    fn = l2_norm_at_times(solution.forcing_field())
    t = solution.times
    cum = np.concatenate([[0.0], np.cumsum(0.5 * (fn[1:] + fn[:-1]) * np.diff(t))])
    ok = un <= cum * (1 + slack) + 1e-300
    return {
        "holds": bool(np.all(ok)),
        "worst_margin": float(np.max(un - cum)),
        "u_norms": un,
        "forcing_integral": cum,
    }


def local_estimate_experiment(solution: ParabolicSolution, ball, m: int = 2,
                              r: float = 2.0, s: float = 2.0) -> dict:
    """Interior-vs-exterior norm ratio on the half ball B(x, R/2) with the
    two time windows [0, T + margin/2] and [0, T + margin]."""
    prob = solution.problem
    center, R = ball
    half = (center, R / 2.0)
    w_half = (0.0, prob.horizon + prob.margin / 2.0)
    w_full = (0.0, prob.horizon + prob.margin)
    lhs = sobolev_norm(solution.dt_u, NormRequest(r=r, l=0, region=half, s=s, window=w_half))
    lhs += R**m * sobolev_norm(solution.u, NormRequest(r=r, l=m, region=half, s=s, window=w_half))
    omega = solution.forcing_field()
    rhs = sobolev_norm(omega, NormRequest(r=r, l=0, region=ball, s=s, window=w_full))
    rhs += R**-m * sobolev_norm(solution.u, NormRequest(r=r, l=0, region=ball, s=s, window=w_full))
    return {"lhs": lhs, "rhs": rhs, "c_emp": 0.0 if rhs == 0 else lhs / rhs}


def global_estimate_experiment(solution: ParabolicSolution, rad_field, table, r=None) -> dict:
    """Weighted global estimate ratio: time-derivative and Sobolev-2 norms
    of u with weights R^(r delta), R^(r gamma) against forcing norms with
    weight R^(r beta) plus a plain L2 term."""
    from .exponents import weight_spec

    prob = solution.problem
    grid = prob.grid
    spec = weight_spec(table, r)
    rr = float(table.r if r is None else r)
    rvals = rad_field.lower_bound_at(grid.points.reshape(-1, grid.chart.n)).reshape(grid.shape)
    w1 = rvals ** float(spec.w1_exp)
    w2 = rvals ** float(spec.w2_exp)
    w3 = rvals ** float(spec.w3_exp)
    w_sol = (0.0, prob.horizon)
    w_src = (0.0, prob.horizon + prob.margin)
    lhs = sobolev_norm(solution.dt_u, NormRequest(r=rr, l=0, weight=w1, s=rr, window=w_sol))
    lhs += sobolev_norm(solution.u, NormRequest(r=rr, l=2, weight=w2, s=rr, window=w_sol))
    omega = solution.forcing_field()
    rhs = sobolev_norm(omega, NormRequest(r=rr, l=0, weight=w3, s=rr, window=w_src))
    rhs += sobolev_norm(omega, NormRequest(r=2.0, l=0, s=rr, window=w_src))
    if rhs == 0:
        return {"lhs": lhs, "rhs": rhs, "ratio": None, "vacuous": True}
    return {"lhs": lhs, "rhs": rhs, "ratio": lhs / rhs, "vacuous": False}
