"""Command-line front end: radius fields, coverings, exponent tables,
solver experiments, and the verification suites.

Config is a flat JSON object (--config file); command-line flags override
file values.  All outputs land under --out and are deterministic for a
fixed config.  MP_THREADS caps BLAS/OpenMP worker counts.
"""

from __future__ import annotations

import argparse
import json
import math
import os
import sys
from fractions import Fraction
from pathlib import Path

if os.environ.get("MP_THREADS"):
    for var in ("OMP_NUM_THREADS", "OPENBLAS_NUM_THREADS", "MKL_NUM_THREADS"):
        os.environ.setdefault(var, os.environ["MP_THREADS"])

import numpy as np

from . import admissible, covering, exponents, heatflow, norms
from .geometry import DomainError, make_chart

SCHEMA_VERSION = 1


class ConfigError(ValueError):
    pass


def _load_config(args) -> dict:
    cfg = {}
    if getattr(args, "config", None):
        path = Path(args.config)
        try:
            cfg = json.loads(path.read_text())
        except json.JSONDecodeError as exc:
            raise ConfigError(f"{path}: line {exc.lineno}, column {exc.colno}: {exc.msg}")
        if not isinstance(cfg, dict):
            raise ConfigError(f"{path}: top-level value must be an object")
    for key, val in vars(args).items():
        if key in ("config", "func") or val is None:
            continue
        cfg[key.replace("_", "-")] = val
    return cfg


def _get(cfg, key, default=None, required=False, cast=None):
    if key not in cfg:
        if required:
            raise ConfigError(f"missing config field {key!r}")
        return default
    val = cfg[key]
    if cast is not None:
        try:
            val = cast(val)
        except (TypeError, ValueError) as exc:
            raise ConfigError(f"field {key!r}: {exc}")
    return val


MODEL_DEFAULTS = {
    "euclidean": {},
    "perturbed-euclidean": {},
    "hyperbolic-halfplane": {},
    "hyperbolic-ball": {},
    "flat-torus": {},
}


def _chart_from_config(cfg):
    name = _get(cfg, "model", required=True)
    if name not in MODEL_DEFAULTS:
        raise ConfigError(f"unknown model {name!r}; choose from {sorted(MODEL_DEFAULTS)}")
    kwargs = {}
    if name == "euclidean":
        kwargs["n"] = _get(cfg, "n", 2, cast=int)
    if name == "perturbed-euclidean":
        kwargs["a"] = _get(cfg, "a", 0.1, cast=float)
        freq = _get(cfg, "frequency", None, cast=float)
        if freq is not None:
            kwargs["frequency"] = freq
    if name == "flat-torus":
        kwargs["n"] = _get(cfg, "n", 2, cast=int)
        kwargs["L"] = _get(cfg, "L", 4.0, cast=float)
    return make_chart(name, **kwargs)


def _params_from_config(cfg):
    return admissible.AdmissibilityParams(
        m=_get(cfg, "m", 2, cast=int),
        eps=_get(cfg, "eps", 0.2, cast=float),
        sample_density=_get(cfg, "density", 16.0, cast=float),
        bisection_tol=_get(cfg, "tol", 1e-3, cast=float),
    )


def _parse_grid(text, n):
    parts = str(text).lower().split("x")
    if len(parts) == 1:
        parts = parts * n
    if len(parts) != n:
        raise ConfigError(f"grid spec {text!r} does not match dimension {n}")
    return [int(p) for p in parts]


def _parse_box(text, n):
    """Box syntax: 'lo:hi,lo:hi' one pair per axis."""
    if text is None:
        return None
    pairs = str(text).split(",")
    if len(pairs) != n:
        raise ConfigError(f"box spec {text!r} does not match dimension {n}")
    box = []
    for p in pairs:
        lo, hi = (float(v) for v in p.split(":"))
        if hi <= lo:
            raise ConfigError(f"box interval {p!r} is empty")
        box.append((lo, hi))
    return box


def _outdir(cfg) -> Path:
    out = Path(_get(cfg, "out", "."))
    out.mkdir(parents=True, exist_ok=True)
    return out


def _json_dump(obj) -> str:
    return json.dumps(obj, indent=1, sort_keys=True)


def _radius_points(chart, cfg):
    per_axis = _parse_grid(_get(cfg, "grid", "8x8"), chart.n)
    margin = _get(cfg, "margin", 0.0, cast=float)
    box = _parse_box(_get(cfg, "box"), chart.n)
    if box is not None:
        axes = [np.linspace(lo + margin, hi - margin, k) for (lo, hi), k in zip(box, per_axis)]
    else:
        axes = [
            np.linspace(chart.lo[i] + margin, chart.hi[i] - margin, per_axis[i])
            if not chart.periodic[i]
            else np.linspace(chart.lo[i], chart.hi[i], per_axis[i], endpoint=False)
            for i in range(chart.n)
        ]
    mesh = np.meshgrid(*axes, indexing="ij")
    return np.stack(mesh, axis=-1).reshape(-1, chart.n)


def cmd_radius(cfg) -> int:
    chart = _chart_from_config(cfg)
    params = _params_from_config(cfg)
    pts = _radius_points(chart, cfg)
    fld = admissible.radius_field(chart, pts, params)
    out = _outdir(cfg)
    fld.to_csv(out / "radius.csv")
    summary = {
        "schema_version": SCHEMA_VERSION,
        "model": cfg["model"],
        "m": params.m,
        "eps": params.eps,
        "points": int(len(pts)),
        "uniform_lower_bound": admissible.uniform_lower_bound(fld),
        "truncated_count": int(np.count_nonzero(fld.truncated)),
        "slow_variation": admissible.check_slow_variation(fld),
        "lipschitz": admissible.check_lipschitz(fld),
    }
    (out / "radius_summary.json").write_text(_json_dump(summary) + "\n")
    print(f"wrote {out / 'radius.csv'} and radius_summary.json ({len(pts)} centers)")
    return 0


def cmd_cover(cfg) -> int:
    chart = _chart_from_config(cfg)
    params = _params_from_config(cfg)
    pts = _radius_points(chart, cfg)
    fld = admissible.radius_field(chart, pts, params)
    k = _get(cfg, "k", 0, cast=int)
    box = _parse_box(_get(cfg, "cover-box"), chart.n)
    cov = covering.build_admissible_covering(fld, k, box=box)
    disjoint = covering.check_core_disjointness(cov)
    dilated = covering.certify_dilated_overlap(cov, box=box)
    out = _outdir(cfg)
    payload = json.loads(cov.to_json())
    payload["core_disjointness"] = disjoint
    payload["dilated_overlap"] = dilated
    payload["model"] = cfg["model"]
    (out / "covering.json").write_text(_json_dump(payload) + "\n")
    print(
        f"wrote {out / 'covering.json'}: {len(cov.centers)} balls, "
        f"overlap {cov.overlap_certificate} <= {cov.t_bound:g}"
    )
    return 0


def cmd_exponents(cfg) -> int:
    m = _get(cfg, "m", required=True, cast=int)
    n = _get(cfg, "n", required=True, cast=int)
    r = _get(cfg, "r", required=True, cast=Fraction)
    variant = _get(cfg, "variant", "sections")
    table = exponents.bootstrap_table(m, n, r, variant)
    out = _outdir(cfg)
    payload = {"schema_version": SCHEMA_VERSION, **table.to_dict()}
    ws = exponents.weight_spec(table)
    payload["weights"] = {
        "w1_exp": str(ws.w1_exp),
        "w2_exp": str(ws.w2_exp),
        "w3_exp": str(ws.w3_exp),
    }
    (out / "exponents.json").write_text(_json_dump(payload) + "\n")
    print(exponents.render_table(table))
    return 0


FORCINGS = {
    "zero": lambda cfg, chart: (lambda t, pts: np.zeros(pts.shape[:-1])),
    "eigen": None,  # handled below, needs the chart period
    "bump": None,
}


def _forcing_from_config(cfg, chart, box):
    name = _get(cfg, "forcing", "bump")
    if name not in FORCINGS:
        raise ConfigError(f"unknown forcing {name!r}; choose from {sorted(FORCINGS)}")
    if name == "zero":
        return lambda t, pts: np.zeros(pts.shape[:-1])
    if name == "eigen":
        w = 2 * math.pi / (chart.hi[0] - chart.lo[0])
        return lambda t, pts: np.sin(w * pts[..., 0]) * np.sin(w * pts[..., 1])
    center = np.array([(lo + hi) / 2.0 for lo, hi in box])
    width = _get(cfg, "width", min(hi - lo for lo, hi in box) / 6.0, cast=float)
    tfreq = _get(cfg, "tfreq", 3.0, cast=float)

    def bump(t, pts):
        r2 = np.sum((pts - center) ** 2, axis=-1)
        return np.exp(-r2 / width**2) * math.sin(tfreq * t)

    return bump


def cmd_solve(cfg) -> int:
    chart = _chart_from_config(cfg)
    box = _parse_box(_get(cfg, "box"), chart.n)
    if box is None:
        box = [(chart.lo[i], chart.hi[i]) for i in range(chart.n)]
    per_axis = _parse_grid(_get(cfg, "grid", "33x33"), chart.n)
    grid = norms.Grid.over_box(chart, box, per_axis)
    forcing = _forcing_from_config(cfg, chart, box)
    try:
        prob = heatflow.ParabolicProblem(
            grid,
            forcing,
            horizon=_get(cfg, "T", 0.3, cast=float),
            margin=_get(cfg, "alpha", 0.1, cast=float),
            dt=_get(cfg, "dt", 0.01, cast=float),
            kind=_get(cfg, "kind", "scalar"),
        )
    except DomainError as exc:
        raise ConfigError(str(exc))
    sol = heatflow.solve_parabolic(prob)
    contraction = heatflow.check_threshold_contraction(sol)
    out = _outdir(cfg)

    un = contraction["u_norms"]
    cum = contraction["forcing_integral"]
    with open(out / "solve_timeseries.csv", "w") as fh:
        fh.write("t,u_l2,forcing_integral\n")
        for t, a, b in zip(sol.times, un, cum):
            fh.write(f"{float(t)!r},{float(a)!r},{float(b)!r}\n")
    with open(out / "solve_plot.dat", "w") as fh:
        for t, a in zip(sol.times, un):
            fh.write(f"{float(t)!r} {float(a)!r}\n")

    reports = [
        {
            "schema_version": SCHEMA_VERSION,
            "kind": "contraction",
            "holds": contraction["holds"],
            "worst_margin": contraction["worst_margin"],
        }
    ]
    if _get(cfg, "estimates", False):
        params = _params_from_config(cfg)
        margin = 0.25 * min(hi - lo for lo, hi in box)
        fpts = _radius_points(chart, {**cfg, "grid": "5x5", "margin": margin,
                                      "box": None})
        fld = admissible.radius_field(chart, fpts, params)
        table = exponents.bootstrap_table(
            _get(cfg, "m", 2, cast=int), chart.n, _get(cfg, "r", 4, cast=Fraction)
        )
        center = np.array([(lo + hi) / 2.0 for lo, hi in box])
        R = 0.4 * min(hi - lo for lo, hi in box)
        loc = heatflow.local_estimate_experiment(sol, (center, R), r=float(table.r))
        glob = heatflow.global_estimate_experiment(sol, fld, table)
        reports.append({"schema_version": SCHEMA_VERSION, "kind": "local-estimate", **loc})
        reports.append({"schema_version": SCHEMA_VERSION, "kind": "global-estimate", **glob})
    with open(out / "solve_report.jsonl", "w") as fh:
        for rep in reports:
            fh.write(json.dumps(rep, sort_keys=True) + "\n")
    print(f"wrote solve outputs to {out} ({len(sol.times)} time nodes)")
    return 0


def cmd_verify(cfg) -> int:
    from . import acceptance

    suite = _get(cfg, "suite", "all")
    try:
        results = acceptance.run_suite(suite)
    except KeyError as exc:
        raise ConfigError(str(exc))
    out = _outdir(cfg)
    with open(out / f"verify_{suite}.jsonl", "w") as fh:
        for res in results:
            fh.write(json.dumps(res, sort_keys=True, default=str) + "\n")
    print(acceptance.render_report(results))
    return 0 if all(res["passed"] for res in results) else 1


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="soboheat",
        description="Admissible radius fields, Vitali coverings, weighted norms, "
        "and heat-flow estimate experiments on model surfaces.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p):
        p.add_argument("--config", help="JSON config file; flags override its values")
        p.add_argument("--out", help="output directory (default: current)")

    p = sub.add_parser("radius", help="evaluate an admissible radius field")
    common(p)
    p.add_argument("--model")
    p.add_argument("--n", type=int)
    p.add_argument("--a", type=float)
    p.add_argument("--L", type=float)
    p.add_argument("--m", type=int)
    p.add_argument("--eps", type=float)
    p.add_argument("--grid", help="e.g. 16x16")
    p.add_argument("--margin", type=float)
    p.add_argument("--box", help="lo:hi,lo:hi")
    p.add_argument("--density", type=float)
    p.add_argument("--tol", type=float)
    p.set_defaults(func=cmd_radius)

    p = sub.add_parser("cover", help="build and certify an admissible covering")
    common(p)
    p.add_argument("--model")
    p.add_argument("--n", type=int)
    p.add_argument("--a", type=float)
    p.add_argument("--L", type=float)
    p.add_argument("--m", type=int)
    p.add_argument("--eps", type=float)
    p.add_argument("--k", type=int)
    p.add_argument("--grid")
    p.add_argument("--margin", type=float)
    p.add_argument("--box", help="field sampling box, lo:hi,lo:hi")
    p.add_argument("--cover-box", help="covering target box, lo:hi,lo:hi")
    p.set_defaults(func=cmd_cover)

    p = sub.add_parser("exponents", help="print and save a bootstrap exponent table")
    common(p)
    p.add_argument("--m", type=int)
    p.add_argument("--n", type=int)
    p.add_argument("--r")
    p.add_argument("--variant", choices=["sections", "functions"])
    p.set_defaults(func=cmd_exponents)

    p = sub.add_parser("solve", help="run a parabolic experiment")
    common(p)
    p.add_argument("--model")
    p.add_argument("--n", type=int)
    p.add_argument("--a", type=float)
    p.add_argument("--L", type=float)
    p.add_argument("--grid")
    p.add_argument("--box", help="lo:hi,lo:hi")
    p.add_argument("--forcing", choices=sorted(FORCINGS))
    p.add_argument("--width", type=float)
    p.add_argument("--tfreq", type=float)
    p.add_argument("--T", type=float)
    p.add_argument("--alpha", type=float)
    p.add_argument("--dt", type=float)
    p.add_argument("--kind", choices=["scalar", "one-form"])
    p.add_argument("--estimates", action="store_true", default=None)
    p.add_argument("--m", type=int)
    p.add_argument("--r")
    p.set_defaults(func=cmd_solve)

    p = sub.add_parser("verify", help="run an acceptance suite")
    common(p)
    p.add_argument("suite", nargs="?", default=None)
    p.set_defaults(func=cmd_verify)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        cfg = _load_config(args)
        return args.func(cfg)
    except (ConfigError, DomainError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
