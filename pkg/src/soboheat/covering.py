"""Vitali ball selection and dyadic admissible coverings with certificates.

At level k every sample center x proposes a core ball of radius
r_k(x) = 2^(-k) R(x) / 50 (dilation denominator eta = 10, so 5 eta = 50).
A greedy pass in decreasing-radius order keeps a pairwise disjoint core
family; the 5-fold dilates form the cover.  Certificates are measured on
a probe grid: full coverage, and a maximum overlap count bounded by
T = ((1+eps)/(1-eps))^(n/2) * 100^n; the dilated family B(x, R(x)/10)
obeys the level-scaled bound T * 2^(n k).
"""

from __future__ import annotations

import json
import math

import numpy as np
from scipy.spatial import cKDTree

from .admissible import AdmissibilityParams, RadiusField, is_admissible
from .geometry import DomainError, MetricChart

ETA = 10  # dilation denominator; the overlap constants depend on it


def overlap_bound(n: int, eps: float) -> float:
    return ((1 + eps) / (1 - eps)) ** (n / 2.0) * 100.0**n


def vitali_select(balls, distance_fn) -> list:
    """Greedy disjoint subfamily, decreasing radius, ties by input index.

    Returns the selected indices.  Every input ball intersects a selected
    ball of larger-or-equal radius and is contained in its 5-fold dilate.
    """
    if len(balls) == 0:
        return []
    centers = np.asarray([b[0] for b in balls], dtype=float)
    radii = np.asarray([b[1] for b in balls], dtype=float)
    if np.any(radii <= 0):
        raise DomainError("all radii must be positive")
    order = np.lexsort((np.arange(len(balls)), -radii))
    selected = []
    for i in order:
        ok = True
        for j in selected:
            if distance_fn(centers[i], centers[j]) <= radii[i] + radii[j]:
                ok = False
                break
        if ok:
            selected.append(int(i))
    return sorted(selected)


def _grid_points(lo, hi, spacing, periodic_hi=None):
    axes = []
    for i in range(len(lo)):
        count = max(2, int(math.ceil((hi[i] - lo[i]) / spacing)) + 1)
        if periodic_hi is not None and periodic_hi[i]:
            axes.append(np.linspace(lo[i], hi[i], count, endpoint=False))
        else:
            axes.append(np.linspace(lo[i], hi[i], count))
    mesh = np.meshgrid(*axes, indexing="ij")
    return np.stack([m.ravel() for m in mesh], axis=-1)


class Covering:
    """Finite (k, eps)-admissible covering with its measured certificate."""

    def __init__(self, chart, k, eps, centers, core_radii, cover_radii,
                 r_eps, overlap, coverage_fraction, t_bound):
        self.chart = chart
        self.k = int(k)
        self.eta = ETA
        self.eps = float(eps)
        self.centers = np.asarray(centers, dtype=float)
        self.core_radii = np.asarray(core_radii, dtype=float)
        self.cover_radii = np.asarray(cover_radii, dtype=float)
        self.r_eps = np.asarray(r_eps, dtype=float)
        self.overlap_certificate = int(overlap)
        self.coverage_fraction = float(coverage_fraction)
        self.t_bound = float(t_bound)

    def to_json(self) -> str:
        return json.dumps(
            {
                "schema_version": 1,
                "k": self.k,
                "eta": self.eta,
                "eps": self.eps,
                "centers": [list(map(float, c)) for c in self.centers],
                "core_radii": [float(v) for v in self.core_radii],
                "cover_radii": [float(v) for v in self.cover_radii],
                "overlap": self.overlap_certificate,
                "coverage_fraction": self.coverage_fraction,
                "T_bound": self.t_bound,
            },
            indent=1,
        )


def _factor_range_on_box(chart: MetricChart, lo, hi, inflate=0.0):
    """(f_min, f_max) of the conformal factor over a box, slightly inflated
    and clipped to the working domain."""
    lo = np.maximum(np.asarray(lo, dtype=float) - inflate, chart.lo)
    hi = np.minimum(np.asarray(hi, dtype=float) + inflate, chart.hi)
    axes = [np.linspace(lo[i], hi[i], 33) for i in range(chart.n)]
    pts = np.stack(np.meshgrid(*axes, indexing="ij"), axis=-1).reshape(-1, chart.n)
    f = chart.conformal_factor(pts)
    return float(f.min()), float(f.max())


def _count_memberships(chart: MetricChart, probes, centers, radii, f_min_box):
    """Per-probe count of geodesic balls containing the probe."""
    n = chart.n
    boxsize = None
    probes_t = probes
    centers_t = centers
    if all(chart.periodic):
        boxsize = [chart.hi[i] - chart.lo[i] for i in range(n)]
        probes_t = probes - chart.lo
        centers_t = centers - chart.lo
    tree = cKDTree(probes_t, boxsize=boxsize)
    # chart radius that surely contains the geodesic ball
    chart_r = radii / math.sqrt(f_min_box)
    counts = np.zeros(len(probes), dtype=int)
    hits = tree.query_ball_point(centers_t, chart_r, workers=-1)
    for j, h in enumerate(hits):
        if not h:
            continue
        h = np.asarray(h, dtype=int)
        d = chart.distance(probes[h], centers[j][None, :])
        counts[h[d <= radii[j]]] += 1
    return counts


def build_admissible_covering(field: RadiusField, k: int, box=None,
                              candidate_factor: float = 3.0) -> Covering:
    """Level-k covering of a working box, with measured certificates.

    Candidate centers sit on a grid of spacing ~candidate_factor times
    the smallest core radius (certified from the field's Lipschitz lower
    bound), which guarantees every probe lands inside the 5-fold dilate
    of a selected ball.  Raises DomainError if a probe stays uncovered.
    """
    chart = field.chart
    n = chart.n
    eps = field.params.eps
    if box is None:
        lo = chart.lo.copy()
        hi = chart.hi.copy()
    else:
        lo = np.asarray([b[0] for b in box], dtype=float)
        hi = np.asarray([b[1] for b in box], dtype=float)
    periodic_hi = [chart.periodic[i] and hi[i] - lo[i] >= (chart.hi[i] - chart.lo[i]) - 1e-12
                   for i in range(n)]

    # certified R at a coarse probe of the box to size the candidate grid
    corners = _grid_points(lo, hi, float(np.max(hi - lo)) / 8.0)
    r_min_est = float(np.min(field.lower_bound_at(corners)))
    if r_min_est <= 0:
        raise DomainError("radius field lower bound vanishes on the box")
    r_core_min = 2.0**-k * r_min_est / (5 * ETA)
    f_min_box, f_max_box = _factor_range_on_box(chart, lo, hi, inflate=r_min_est)
    # geodesic candidate spacing ~ candidate_factor * r_core_min, so a
    # probe's nearest candidate ball reaches it through the 5-fold dilate
    spacing = candidate_factor * r_core_min / math.sqrt(f_max_box)
    candidates = _grid_points(lo, hi, spacing, periodic_hi)
    r_eps_cand = field.lower_bound_at(candidates)
    keep = r_eps_cand > 0
    candidates, r_eps_cand = candidates[keep], r_eps_cand[keep]
    core = 2.0**-k * r_eps_cand / (5 * ETA)

    # greedy selection with a neighbor prefilter (balls can only meet
    # within chart distance (r_i + r_j)/sqrt(f_min))
    cutoff = 2.0 * float(np.max(core)) / math.sqrt(f_min_box)
    boxsize = None
    cand_t = candidates
    if all(chart.periodic):
        boxsize = [chart.hi[i] - chart.lo[i] for i in range(n)]
        cand_t = candidates - chart.lo
    tree = cKDTree(cand_t, boxsize=boxsize)
    neighbor_pairs = tree.query_pairs(cutoff, output_type="ndarray")
    adj = [[] for _ in range(len(candidates))]
    if len(neighbor_pairs):
        a_idx, b_idx = neighbor_pairs[:, 0], neighbor_pairs[:, 1]
        d_pairs = chart.distance(candidates[a_idx], candidates[b_idx])
        touching = d_pairs <= core[a_idx] + core[b_idx]
        for a, b in neighbor_pairs[touching]:
            adj[a].append(b)
            adj[b].append(a)
    order = np.lexsort((np.arange(len(candidates)), -core))
    chosen = np.zeros(len(candidates), dtype=bool)
    for i in order:
        if not any(chosen[j] for j in adj[i]):
            chosen[i] = True
    sel = np.flatnonzero(chosen)
    centers = candidates[sel]
    core_sel = core[sel]
    cover_sel = 5.0 * core_sel

    probes = _grid_points(lo, hi, float(np.min(cover_sel)) / (4.0 * math.sqrt(f_max_box)),
                          periodic_hi)
    counts = _count_memberships(chart, probes, centers, cover_sel, f_min_box)
    coverage = float(np.mean(counts >= 1))
    if coverage < 1.0:
        raise DomainError(
            f"{int(np.sum(counts == 0))} probe points uncovered at level {k}; "
            "densify the radius-field sample grid or shrink the box"
        )
    return Covering(chart, k, eps, centers, core_sel, cover_sel, r_eps_cand[sel],
                    int(counts.max()), coverage, overlap_bound(n, eps))


def check_core_disjointness(covering: Covering) -> dict:
    """Exact pairwise check d(x_i, x_j) > r_i + r_j on the core family."""
    chart = covering.chart
    c = covering.centers
    r = covering.core_radii
    f_min_box, _ = _factor_range_on_box(chart, c.min(axis=0), c.max(axis=0),
                                        inflate=float(np.max(covering.r_eps)))
    cutoff = 2.0 * float(np.max(r)) / math.sqrt(f_min_box)
    boxsize = None
    c_t = c
    if all(chart.periodic):
        boxsize = [chart.hi[i] - chart.lo[i] for i in range(chart.n)]
        c_t = c - chart.lo
    tree = cKDTree(c_t, boxsize=boxsize)
    pairs = tree.query_pairs(cutoff, output_type="ndarray")
    bad = 0
    if len(pairs):
        d = chart.distance(c[pairs[:, 0]], c[pairs[:, 1]])
        bad = int(np.count_nonzero(d <= r[pairs[:, 0]] + r[pairs[:, 1]]))
    return {"pairs_screened": len(pairs), "violations": bad}


def certify_dilated_overlap(covering: Covering, box=None) -> dict:
    """Overlap of the full-size family B(x, R(x)/10), x in the core set,
    against the level-scaled bound T * 2^(n k)."""
    chart = covering.chart
    n = chart.n
    radii = covering.r_eps / ETA
    if box is None:
        lo, hi = chart.lo, chart.hi
    else:
        lo = np.asarray([b[0] for b in box], dtype=float)
        hi = np.asarray([b[1] for b in box], dtype=float)
    periodic_hi = [chart.periodic[i] and hi[i] - lo[i] >= (chart.hi[i] - chart.lo[i]) - 1e-12
                   for i in range(n)]
    f_min_box, f_max_box = _factor_range_on_box(chart, lo, hi, inflate=float(np.max(radii)))
    probes = _grid_points(lo, hi, float(np.min(radii)) / (4.0 * math.sqrt(f_max_box)),
                          periodic_hi)
    counts = _count_memberships(chart, probes, covering.centers, radii, f_min_box)
    bound = covering.t_bound * 2.0 ** (n * covering.k)
    return {
        "max_overlap": int(counts.max()),
        "bound": bound,
        "holds": bool(counts.max() <= bound),
        "probes": len(probes),
    }


def ball_tower(chart: MetricChart, center, field: RadiusField, k: int,
               params: AdmissibilityParams | None = None) -> list:
    """Nested dyadic balls B(x, 2^-j R(x)/10), j = 0..k, each re-verified
    admissible; returns [(radius, admissible_flag)] from j=0 down."""
    params = params or field.params
    center = np.asarray(center, dtype=float)
    r_top = float(field.lower_bound_at(center[None])[0]) / ETA
    out = []
    for j in range(k + 1):
        rad = 2.0**-j * r_top
        out.append((rad, is_admissible(chart, center, rad, params)))
    return out
