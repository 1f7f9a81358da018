"""Batch front end: validate bodies, evaluate functionals and oracles, run sweeps, render reports.

Exit codes: 0 pass, 1 sweep finished but missed its tolerance, 2 input or
domain error, 3 inconclusive sweep.  Data files carry no timestamps; those
go to a sidecar ``run.log`` in the output directory.
"""

from __future__ import annotations

import argparse
import json
import logging
import math
import os
import sys
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import functionals, oracles, spaceforms
from .bodies import ConvexBody, body_from_json, body_to_json, make_grid, validate_body
from .convergence import ExperimentSpec, divergence_probe, experiment_from_json, run_sweep
from .errors import FloatLabError, InconclusiveSweep
from .measures import density_from_json, weighted_volume

__all__ = ["RunConfig", "main", "build_parser", "render_svg", "evaluate_functional", "FUNCTIONALS"]

log = logging.getLogger("floatlab")

EXIT_PASS, EXIT_FAIL, EXIT_INPUT, EXIT_INCONCLUSIVE = 0, 1, 2, 3
CONFIG_VERSION = "1"
_CONFIG_FIELDS = {"version", "bodies", "experiments", "output_dir", "grid", "tolerances"}


@dataclass
class RunConfig:
    version: str = CONFIG_VERSION
    bodies: dict[str, ConvexBody] = field(default_factory=dict)
    experiments: list[ExperimentSpec] = field(default_factory=list)
    output_dir: str = "floatlab_out"
    grid: dict[str, int] = field(default_factory=dict)
    tolerances: dict[str, float] = field(default_factory=dict)

    @classmethod
    def from_json(cls, obj: dict) -> "RunConfig":
        if not isinstance(obj, dict):
            raise FloatLabError("config must be a JSON object")
        extra = set(obj) - _CONFIG_FIELDS
        if extra:
            raise FloatLabError(f"unknown config fields: {sorted(extra)}")
        version = str(obj.get("version", CONFIG_VERSION))
        if version != CONFIG_VERSION:
            raise FloatLabError(f"unsupported config version {version!r}")
        raw_bodies = obj.get("bodies", {})
        if not isinstance(raw_bodies, dict):
            raise FloatLabError("'bodies' must map names to body objects")
        bodies = {name: body_from_json(b) for name, b in raw_bodies.items()}
        grid = {str(k): int(v) for k, v in obj.get("grid", {}).items()}
        if set(grid) - {"2", "3"}:
            raise FloatLabError("grid defaults are keyed by dimension '2' or '3'")
        tolerances = {str(k): float(v) for k, v in obj.get("tolerances", {}).items()}
        experiments = []
        for i, e in enumerate(obj.get("experiments", [])):
            spec = experiment_from_json(e, bodies)
            if not spec.name:
                spec.name = f"{spec.tag}_{i}"
            if "grid_n" not in e:
                spec.grid_n = default_grid_n(spec.dim, grid)
            if "tolerance" not in e and spec.tag in tolerances:
                spec.tolerance = tolerances[spec.tag]
            experiments.append(spec)
        names = [s.name for s in experiments]
        if len(set(names)) != len(names):
            raise FloatLabError("experiment names must be unique")
        return cls(version, bodies, experiments, str(obj.get("output_dir", "floatlab_out")), grid, tolerances)

    @classmethod
    def load(cls, path: str | Path) -> "RunConfig":
        try:
            return cls.from_json(json.loads(Path(path).read_text()))
        except json.JSONDecodeError as exc:
            raise FloatLabError(f"{path}: not valid JSON ({exc})") from exc


def default_grid_n(dim: int, config_grid: dict[str, int] | None = None) -> int:
    env = os.environ.get("FLOATLAB_GRID_N")
    if env:
        return int(env)
    if config_grid and str(dim) in config_grid:
        return config_grid[str(dim)]
    return 4096 if dim == 2 else 48


# ----------------------------------------------------------------------------
# functionals
# ----------------------------------------------------------------------------

def _chart(body, params):
    return spaceforms.ChartBody(spaceforms.SpaceFormChart(float(params["lambda"])), body)


FUNCTIONALS = {
    "as_p": (lambda b, g, q: functionals.as_p(b, float(q["p"]), g), ("p",)),
    "o_minus": (lambda b, g, q: functionals.o_minus(b, g), ()),
    "cone_volume_mass": (lambda b, g, q: functionals.cone_volume_mass(b, g), ()),
    "polar_growth_target": (lambda b, g, q: functionals.polar_growth_target(b, None, None, g), ()),
    "floating_area": (lambda b, g, q: spaceforms.floating_area(_chart(b, q), g), ("lambda",)),
    "omega_dual": (lambda b, g, q: spaceforms.omega_dual(_chart(b, q), g), ("lambda",)),
    "omega_dual_dual_side": (lambda b, g, q: spaceforms.omega_dual_dual_side(_chart(b, q), g), ("lambda",)),
    "omega_lambda_e": (lambda b, g, q: spaceforms.omega_lambda_e(_chart(b, q), g), ("lambda",)),
    "weighted_volume": (lambda b, g, q: weighted_volume(b, density_from_json(q["density"])), ("density",)),
}


def evaluate_functional(body: ConvexBody, name: str, params: dict, grid_n: int) -> dict:
    """Value at resolution N plus the change from N/2 as an error estimate."""
    if name not in FUNCTIONALS:
        raise FloatLabError(f"unknown functional {name!r}; choose from {sorted(FUNCTIONALS)}")
    fn, needed = FUNCTIONALS[name]
    missing = [k for k in needed if k not in params]
    if missing:
        raise FloatLabError(f"{name} needs parameters {missing}")
    value = float(fn(body, make_grid(body.dim, grid_n), params))
    coarse = float(fn(body, make_grid(body.dim, max(8, grid_n // 2)), params))
    return {"functional": name, "body": body_to_json(body), "params": params, "value": value,
            "grid_n": grid_n, "error_estimate": abs(value - coarse)}


# ----------------------------------------------------------------------------
# SVG
# ----------------------------------------------------------------------------

_W, _H, _PAD = 640, 420, 60
_COLORS = ("#1f77b4", "#d62728", "#2ca02c", "#9467bd")


def _fmt(v: float) -> str:
    return f"{v:.2f}"


def render_svg(reports: list[dict]) -> str:
    """Log-log plot of ratio against delta, one series per report, dashed target line."""
    if not reports:
        raise FloatLabError("no reports to render")
    series = []
    for rep in reports:
        try:
            d = np.asarray(rep["delta"], dtype=float)
            r = np.asarray(rep["ratio"], dtype=float)
            target = float(rep["target"])
        except (KeyError, TypeError, ValueError) as exc:
            raise FloatLabError(f"malformed report: {exc}") from exc
        if d.size == 0 or d.size != r.size:
            raise FloatLabError("report has an empty or inconsistent delta ladder")
        if np.any(d <= 0) or np.any(r <= 0) or not target > 0:
            raise FloatLabError("log-log plot needs positive deltas, ratios and target")
        series.append((np.log10(d), np.log10(r), math.log10(target), rep.get("experiment", {}).get("name", "")))
    xs = np.concatenate([s[0] for s in series])
    ys = np.concatenate([np.append(s[1], s[2]) for s in series])
    x0, x1 = float(xs.min()), float(xs.max())
    y0, y1 = float(ys.min()), float(ys.max())
    if x1 == x0:
        x0, x1 = x0 - 0.5, x1 + 0.5
    if y1 == y0:
        y0, y1 = y0 - 1e-3, y1 + 1e-3
    pad_y = 0.05 * (y1 - y0)
    y0, y1 = y0 - pad_y, y1 + pad_y

    def px(x):
        return _PAD + (x - x0) / (x1 - x0) * (_W - 2 * _PAD)

    def py(y):
        return _H - _PAD - (y - y0) / (y1 - y0) * (_H - 2 * _PAD)

    out = [f'<svg xmlns="http://www.w3.org/2000/svg" width="{_W}" height="{_H}" viewBox="0 0 {_W} {_H}">',
           f'<rect x="0" y="0" width="{_W}" height="{_H}" fill="white"/>',
           f'<line x1="{_PAD}" y1="{_H - _PAD}" x2="{_W - _PAD}" y2="{_H - _PAD}" stroke="black"/>',
           f'<line x1="{_PAD}" y1="{_PAD}" x2="{_PAD}" y2="{_H - _PAD}" stroke="black"/>',
           f'<text x="{_W / 2:.0f}" y="{_H - 15}" text-anchor="middle" font-size="13">log10 delta</text>',
           f'<text x="15" y="{_H / 2:.0f}" text-anchor="middle" font-size="13" '
           f'transform="rotate(-90 15 {_H / 2:.0f})">log10 ratio</text>',
           f'<text x="{_PAD}" y="{_H - _PAD + 18}" font-size="11">{x0:.3g}</text>',
           f'<text x="{_W - _PAD}" y="{_H - _PAD + 18}" text-anchor="end" font-size="11">{x1:.3g}</text>',
           f'<text x="{_PAD - 5}" y="{_H - _PAD}" text-anchor="end" font-size="11">{y0:.4g}</text>',
           f'<text x="{_PAD - 5}" y="{_PAD + 4}" text-anchor="end" font-size="11">{y1:.4g}</text>']
    for k, (lx, ly, lt, name) in enumerate(series):
        color = _COLORS[k % len(_COLORS)]
        out.append(f'<line x1="{_PAD}" y1="{_fmt(py(lt))}" x2="{_W - _PAD}" y2="{_fmt(py(lt))}" '
                   f'stroke="{color}" stroke-dasharray="6 4"/>')
        pts = " ".join(f"{_fmt(px(a))},{_fmt(py(b))}" for a, b in zip(lx, ly))
        out.append(f'<polyline points="{pts}" fill="none" stroke="{color}" stroke-width="1.5"/>')
        for a, b in zip(lx, ly):
            out.append(f'<circle cx="{_fmt(px(a))}" cy="{_fmt(py(b))}" r="3" fill="{color}"/>')
        if name:
            out.append(f'<text x="{_W - _PAD}" y="{_PAD + 16 * (k + 1)}" text-anchor="end" font-size="12" '
                       f'fill="{color}">{name}</text>')
    out.append("</svg>")
    return "\n".join(out) + "\n"


# ----------------------------------------------------------------------------
# commands
# ----------------------------------------------------------------------------

def _parse_params(items: list[str] | None) -> dict:
    params = {}
    for item in items or []:
        if "=" not in item:
            raise FloatLabError(f"parameter {item!r} is not key=value")
        k, v = item.split("=", 1)
        try:
            params[k] = json.loads(v)
        except json.JSONDecodeError:
            params[k] = v
    return params


def _attach_log(outdir: Path) -> None:
    outdir.mkdir(parents=True, exist_ok=True)
    handler = logging.FileHandler(outdir / "run.log")
    handler.setFormatter(logging.Formatter("%(asctime)s %(levelname)s %(message)s"))
    log.addHandler(handler)
    log.setLevel(logging.INFO)


def cmd_bodies_validate(args) -> int:
    cfg = RunConfig.load(args.config)
    for name, body in cfg.bodies.items():
        validate_body(body)
        print(f"{name}: ok ({type(body).__name__}, d={body.dim})")
    return EXIT_PASS


def cmd_functional(args) -> int:
    if args.body_json:
        body = body_from_json(json.loads(args.body_json))
    else:
        if not args.config:
            raise FloatLabError("give --body-json or --config with --body")
        cfg = RunConfig.load(args.config)
        if args.body not in cfg.bodies:
            raise FloatLabError(f"unknown body {args.body!r}")
        body = cfg.bodies[args.body]
    grid_n = args.grid_n or default_grid_n(body.dim)
    rec = evaluate_functional(body, args.name, _parse_params(args.param), grid_n)
    print(json.dumps(rec, sort_keys=True))
    return EXIT_PASS


def cmd_oracle(args) -> int:
    val = oracles.evaluate(args.name, _parse_params(args.param))
    print(json.dumps({"name": val.name, "parameters": val.parameters, "value": val.value,
                      "provenance": val.provenance}, sort_keys=True))
    return EXIT_PASS


def _run_one(spec: ExperimentSpec, outdir: Path, jobs: int) -> int:
    if spec.tag == "divergence_probe":
        p = getattr(spec.body, "p", None)
        if p is None:
            raise FloatLabError("divergence_probe needs a pnorm body")
        res = divergence_probe(p, spec.deltas, grid_n=spec.grid_n)
        payload = dict(res.to_json(), experiment=spec.to_json())
        (outdir / f"{spec.name}.json").write_text(json.dumps(payload, indent=2, sort_keys=True) + "\n")
        print(f"{spec.name}: exponent {res.exponent:.4f} (predicted {res.predicted:.4f})")
        log.info("%s exponent %.6f", spec.name, res.exponent)
        return EXIT_PASS if abs(res.exponent - res.predicted) <= spec.tolerance else EXIT_FAIL
    rep = run_sweep(spec, make_grid(spec.dim, spec.grid_n), jobs=jobs)
    (outdir / f"{spec.name}.csv").write_text(rep.to_csv())
    (outdir / f"{spec.name}.json").write_text(rep.dumps() + "\n")
    status = "PASS" if rep.passed else "FAIL"
    print(f"{spec.name}: limit {rep.limit:.10g} target {rep.target:.10g} rel_err {rep.rel_err:.3e} {status}")
    log.info("%s limit %.12g rel_err %.3e %s", spec.name, rep.limit, rep.rel_err, status)
    return EXIT_PASS if rep.passed else EXIT_FAIL


def cmd_sweep(args) -> int:
    cfg = RunConfig.load(args.config)
    outdir = Path(args.out or cfg.output_dir)
    _attach_log(outdir)
    specs = cfg.experiments
    if args.experiment:
        specs = [s for s in specs if s.name in args.experiment]
        missing = set(args.experiment) - {s.name for s in specs}
        if missing:
            raise FloatLabError(f"unknown experiments: {sorted(missing)}")
    code = EXIT_PASS
    for spec in specs:
        try:
            rc = _run_one(spec, outdir, args.jobs)
        except InconclusiveSweep as exc:
            print(f"{spec.name}: inconclusive: {exc}", file=sys.stderr)
            (outdir / f"{spec.name}.inconclusive.json").write_text(
                json.dumps({"message": str(exc), "diagnostic": exc.diagnostic}, indent=2, sort_keys=True) + "\n")
            rc = EXIT_INCONCLUSIVE
        code = max(code, rc)
    return code


def cmd_render(args) -> int:
    reports = []
    for path in [args.report, *(args.overlay or [])]:
        try:
            reports.append(json.loads(Path(path).read_text()))
        except (OSError, json.JSONDecodeError) as exc:
            raise FloatLabError(f"cannot read report {path}: {exc}") from exc
    svg = render_svg(reports)
    if args.output:
        Path(args.output).write_text(svg)
    else:
        sys.stdout.write(svg)
    return EXIT_PASS


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="floatlab", description="Weighted floating bodies and curvature functionals")
    sub = parser.add_subparsers(dest="group", required=True)

    bodies = sub.add_parser("bodies").add_subparsers(dest="action", required=True)
    p = bodies.add_parser("validate", help="check every body in a config")
    p.add_argument("config")
    p.set_defaults(func=cmd_bodies_validate)

    fun = sub.add_parser("functional").add_subparsers(dest="action", required=True)
    p = fun.add_parser("eval", help="evaluate a curvature functional")
    p.add_argument("name", choices=sorted(FUNCTIONALS))
    p.add_argument("--config")
    p.add_argument("--body", help="body name in the config")
    p.add_argument("--body-json", help="inline body object")
    p.add_argument("--param", action="append", metavar="KEY=VALUE")
    p.add_argument("--grid-n", type=int)
    p.set_defaults(func=cmd_functional)

    sw = sub.add_parser("sweep").add_subparsers(dest="action", required=True)
    p = sw.add_parser("run", help="run delta sweeps from a config")
    p.add_argument("config")
    p.add_argument("--experiment", action="append", help="restrict to named experiments")
    p.add_argument("--out", help="output directory (overrides the config)")
    p.add_argument("--jobs", type=int, default=1, help="parallel workers over the delta ladder")
    p.set_defaults(func=cmd_sweep)

    orc = sub.add_parser("oracle").add_subparsers(dest="action", required=True)
    p = orc.add_parser("eval", help="evaluate a closed-form reference value")
    p.add_argument("name", choices=sorted(oracles.ORACLES))
    p.add_argument("--param", action="append", metavar="KEY=VALUE")
    p.set_defaults(func=cmd_oracle)

    rep = sub.add_parser("report").add_subparsers(dest="action", required=True)
    p = rep.add_parser("render", help="log-log SVG of a sweep report")
    p.add_argument("report")
    p.add_argument("--overlay", action="append", help="additional report drawn on the same axes")
    p.add_argument("-o", "--output")
    p.set_defaults(func=cmd_render)
    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except InconclusiveSweep as exc:
        print(f"inconclusive: {exc}", file=sys.stderr)
        return EXIT_INCONCLUSIVE
    except (FloatLabError, ValueError, KeyError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT


if __name__ == "__main__":
    sys.exit(main())
