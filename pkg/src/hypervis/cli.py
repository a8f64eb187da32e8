"""Command-line front end: configuration parsing, experiment dispatch and
machine-readable output.

Layering: a JSON config file supplies defaults, environment variables
prefixed HYPERVIS_ override the file, command-line flags override both.
Exit codes: 0 success, 2 configuration error, 3 failed --check.  All errors
go to stderr as ``error[code]: message``.
"""

from __future__ import annotations

import argparse
import csv
import hashlib
import json
import math
import os
import sys
from typing import List, Optional, Sequence, Tuple

from . import __version__, analytic
from . import experiments as ex
from ._kernels import ball_halfwidths, line_halfwidths
from .circlearcs import arcset_from_arcs
from .sampler import RadiusLaw, replicate_stream, window_for_visibility

TWO_PI = 2.0 * math.pi


class ConfigError(Exception):
    """Invalid configuration; reported with exit code 2."""


class CheckError(Exception):
    """Failed acceptance check under --check; reported with exit code 3."""


# ---------------------------------------------------------------------------
# configuration: JSON file + environment + flags
# ---------------------------------------------------------------------------

_MODEL_KEYS = {"type", "lambda", "alpha_target", "radius"}
_EXPERIMENT_KEYS = {
    "r_grid",
    "r",
    "eps",
    "theta",
    "n",
    "alphas",
    "r_max",
    "radii",
    "p",
    "fit_range",
    "slope_target",
    "slope_tol",
}
_TOP_KEYS = {"model", "experiment", "seed", "threads", "output"}
_OUTPUT_KEYS = {"path"}

_ENV_OVERRIDES = {
    "HYPERVIS_SEED": ("seed", int),
    "HYPERVIS_N": ("n", int),
    "HYPERVIS_THREADS": ("threads", int),
    "HYPERVIS_OUT": ("out", str),
}


def _reject_unknown(block: dict, allowed: set, where: str) -> None:
    unknown = set(block) - allowed
    if unknown:
        raise ConfigError(f"unknown {where} keys: {sorted(unknown)}")


def load_config(path: str) -> dict:
    """Read and schema-check a config file; returns a flat override dict."""
    try:
        with open(path, "r", encoding="utf-8") as fh:
            raw = json.load(fh)
    except (OSError, json.JSONDecodeError) as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    if not isinstance(raw, dict):
        raise ConfigError("config root must be a JSON object")
    _reject_unknown(raw, _TOP_KEYS, "config")
    out: dict = {}
    model = raw.get("model", {})
    if not isinstance(model, dict):
        raise ConfigError("'model' must be an object")
    _reject_unknown(model, _MODEL_KEYS, "model")
    if "lambda" in model and "alpha_target" in model:
        raise ConfigError("give either 'lambda' or 'alpha_target', not both")
    out["model_type"] = model.get("type")
    out["lam"] = model.get("lambda")
    out["alpha_target"] = model.get("alpha_target")
    radius = model.get("radius")
    if isinstance(radius, dict):
        _reject_unknown(radius, {"values", "weights"}, "radius")
        out["radius_values"] = radius.get("values")
        out["radius_weights"] = radius.get("weights")
    elif radius is not None:
        out["radius"] = radius
    exp = raw.get("experiment", {})
    if not isinstance(exp, dict):
        raise ConfigError("'experiment' must be an object")
    _reject_unknown(exp, _EXPERIMENT_KEYS, "experiment")
    out.update(exp)
    output = raw.get("output", {})
    if not isinstance(output, dict):
        raise ConfigError("'output' must be an object")
    _reject_unknown(output, _OUTPUT_KEYS, "output")
    if "path" in output:
        out["out"] = output["path"]
    for key in ("seed", "threads"):
        if key in raw:
            out[key] = raw[key]
    return out


def _resolve(args: argparse.Namespace) -> argparse.Namespace:
    """Apply config-file and environment values where flags were not given."""
    layered: dict = {}
    if getattr(args, "config", None):
        layered.update(load_config(args.config))
    for var, (key, conv) in _ENV_OVERRIDES.items():
        if var in os.environ:
            try:
                layered[key] = conv(os.environ[var])
            except ValueError as exc:
                raise ConfigError(f"bad {var}: {exc}") from exc
    for key, value in layered.items():
        if getattr(args, key, None) is None:
            setattr(args, key, value)
    return args


def parse_r_grid(text) -> List[float]:
    """Parse 'a:b:step' (inclusive of b up to round-off) or a JSON list."""
    if isinstance(text, (list, tuple)):
        grid = [float(v) for v in text]
    else:
        parts = str(text).split(":")
        if len(parts) != 3:
            raise ConfigError(f"r-grid must be 'a:b:step', got {text!r}")
        try:
            a, b, step = (float(p) for p in parts)
        except ValueError as exc:
            raise ConfigError(f"bad r-grid {text!r}: {exc}") from exc
        if step <= 0.0 or b < a:
            raise ConfigError("r-grid needs step > 0 and b >= a")
        grid = []
        k = 0
        while True:
            v = a + k * step
            if v > b + 1e-9 * step:
                break
            grid.append(v)
            k += 1
    if not grid or any(y <= x for x, y in zip(grid, grid[1:])):
        raise ConfigError("r-grid must be strictly increasing and non-empty")
    return grid


def _radius_law(args) -> RadiusLaw:
    values = getattr(args, "radius_values", None)
    weights = getattr(args, "radius_weights", None)
    if values is not None:
        if isinstance(values, str):
            values = [float(v) for v in values.split(",")]
        if isinstance(weights, str):
            weights = [float(v) for v in weights.split(",")]
        if weights is None:
            raise ConfigError("radius values need matching weights")
        try:
            return RadiusLaw(tuple(values), tuple(weights))
        except ValueError as exc:
            raise ConfigError(str(exc)) from exc
    radius = getattr(args, "radius", None)
    if radius is None:
        radius = 1.0
    try:
        return RadiusLaw.constant(float(radius))
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc


def _intensity(args, law: RadiusLaw) -> float:
    lam = getattr(args, "lam", None)
    target = getattr(args, "alpha_target", None)
    if lam is not None and target is not None:
        raise ConfigError("give either --lambda or --alpha-target, not both")
    if lam is not None:
        if lam <= 0.0:
            raise ConfigError("lambda must be > 0")
        return float(lam)
    if target is not None:
        return analytic.intensity_for_alpha(float(target), law)
    raise ConfigError("a model intensity is required (--lambda or --alpha-target)")


def _model(args) -> ex.Model:
    kind = getattr(args, "model_type", None) or "boolean"
    if kind == "lines":
        lam = getattr(args, "lam", None)
        if lam is None or lam <= 0.0:
            raise ConfigError("line model needs --lambda > 0")
        return ex.LineModel(intensity=float(lam))
    if kind != "boolean":
        raise ConfigError(f"unknown model type {kind!r}")
    law = _radius_law(args)
    return ex.BooleanModel(intensity=_intensity(args, law), radius_law=law)


def _require(args, names: Sequence[str]) -> None:
    for name in names:
        if getattr(args, name, None) is None:
            flag = "--" + name.replace("_", "-")
            raise ConfigError(f"{flag} is required")


# ---------------------------------------------------------------------------
# output files
# ---------------------------------------------------------------------------


def _config_hash(args) -> str:
    payload = {
        k: v
        for k, v in sorted(vars(args).items())
        if k not in ("func",) and v is not None
    }
    blob = json.dumps(payload, sort_keys=True, default=str).encode()
    return hashlib.sha256(blob).hexdigest()[:16]


def _write_meta(path: str, args, model_hash: Optional[str]) -> None:
    meta = {
        "version": __version__,
        "seed": getattr(args, "seed", None),
        "config_hash": _config_hash(args),
        "model_hash": model_hash,
        "command": args.command,
    }
    with open(path + ".meta.json", "w", encoding="utf-8") as fh:
        json.dump(meta, fh, indent=2, sort_keys=True)
        fh.write("\n")


def _write_tail_csv(path: str, curve: ex.TailCurve, args) -> None:
    with open(path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh)  # RFC-4180: CRLF line endings
        writer.writerow(["r", "p_hat", "stderr", "n", "model_hash"])
        for row in curve.rows:
            writer.writerow(
                [repr(row.r), repr(row.p_hat), repr(row.stderr), row.n, curve.model_hash]
            )
    _write_meta(path, args, curve.model_hash)


def _write_rows_csv(path: str, header: List[str], rows: List[list], args, model_hash=None) -> None:
    with open(path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(header)
        for row in rows:
            writer.writerow(row)
    _write_meta(path, args, model_hash)


# ---------------------------------------------------------------------------
# subcommands
# ---------------------------------------------------------------------------

_ANALYTIC_QUANTITIES = (
    "vacancy",
    "alpha",
    "lambda-gv",
    "critical-radius",
    "t-theta",
    "h",
    "perimeter",
    "line-vacancy",
    "line-joint",
    "lambda-r",
)


def cmd_analytic(args) -> int:
    q = args.quantity
    law = _radius_law(args)
    if q == "vacancy":
        _require(args, ["r"])
        value = analytic.vacancy_f(args.r, _intensity(args, law), law)
    elif q == "alpha":
        value = analytic.alpha(_intensity(args, law), law)
    elif q == "lambda-gv":
        value = analytic.lambda_gv(law)
    elif q == "critical-radius":
        _require(args, ["lam"])
        value = analytic.critical_radius(args.lam)
    elif q == "t-theta":
        _require(args, ["theta", "c"])
        value = analytic.t_theta(args.theta, args.c)
    elif q == "h":
        _require(args, ["c", "r"])
        value = analytic.h_of(args.c, args.r)
    elif q == "perimeter":
        _require(args, ["r", "theta"])
        value = analytic.triangle_perimeter(args.r, args.theta)
    elif q == "line-vacancy":
        _require(args, ["lam", "r"])
        value = analytic.line_vacancy(args.lam, args.r)
    elif q == "line-joint":
        _require(args, ["lam", "r", "theta"])
        value = analytic.line_joint(args.lam, args.r, args.theta)
    elif q == "lambda-r":
        _require(args, ["ball_radius", "r", "p"])
        value = analytic.janson_intensity(args.ball_radius, args.r, args.p).intensity
    else:  # pragma: no cover - argparse restricts choices
        raise ConfigError(f"unknown quantity {q!r}")
    print(f"{value:.6f}")
    return 0


def cmd_tail(args) -> int:
    _require(args, ["r_grid", "n", "seed"])
    model = _model(args)
    grid = parse_r_grid(args.r_grid)
    curve = ex.tail_curve(model, grid, args.n, args.seed, threads=args.threads)
    if args.out:
        _write_tail_csv(args.out, curve, args)
    fit_lo = args.fit_lo if args.fit_lo is not None else grid[0]
    fit_hi = args.fit_hi if args.fit_hi is not None else grid[-1]
    slope, slope_se = ex.fit_loglinear(curve, (fit_lo, fit_hi))
    for row in curve.rows:
        print(f"r={row.r:g} p_hat={row.p_hat:.6g} stderr={row.stderr:.3g} n={row.n}")
    print(f"fit: slope={slope:.6f} stderr={slope_se:.6f} range=[{fit_lo:g}, {fit_hi:g}]")
    if args.check and args.slope_target is not None:
        tol = args.slope_tol if args.slope_tol is not None else 0.15
        if abs(slope - args.slope_target) > tol * abs(args.slope_target):
            raise CheckError(
                f"slope {slope:.4f} outside {tol:.0%} of {args.slope_target}"
            )
    return 0


def cmd_moments(args) -> int:
    _require(args, ["r", "n", "seed"])
    model = _model(args)
    eps = args.eps if args.eps is not None else 0.5
    report = ex.moment_ratio(model, args.r, eps, args.n, args.seed, threads=args.threads)
    print(f"m={report.m:.6g} stderr={report.m_stderr:.3g}")
    print(f"s={report.s:.6g} stderr={report.s_stderr:.3g}")
    print(f"p={report.p:.6g} stderr={report.p_stderr:.3g}")
    print(
        f"sandwich: [{report.lower:.6g}, {report.upper:.6g}] "
        f"verdict={'pass' if report.verdict else 'fail'}"
    )
    if args.check and not report.verdict:
        raise CheckError("second-moment sandwich violated")
    return 0


def cmd_lines(args) -> int:
    _require(args, ["lam", "r_grid", "n", "seed"])
    model = ex.LineModel(intensity=args.lam)
    grid = parse_r_grid(args.r_grid)
    failures = []
    for r in grid:
        est = ex.estimate_event(
            model, ex.SegmentVacancy(r), args.n, args.seed, threads=args.threads
        )
        exact = analytic.line_vacancy(args.lam, r)
        z = (est.mean - exact) / est.stderr if est.stderr > 0.0 else 0.0
        print(f"vacancy r={r:g}: mc={est.mean:.6g} exact={exact:.6g} z={z:+.2f}")
        if abs(est.mean - exact) > 3.0 * est.stderr:
            failures.append(f"vacancy at r={r:g}")
    theta = args.theta if args.theta is not None else 0.5 * math.pi
    r_joint = args.r if args.r is not None else grid[0]
    est = ex.estimate_event(
        model, ex.JointVacancy(r_joint, theta), args.n, args.seed, threads=args.threads
    )
    exact = analytic.line_joint(args.lam, r_joint, theta)
    print(f"joint r={r_joint:g} theta={theta:g}: mc={est.mean:.6g} exact={exact:.6g}")
    if abs(est.mean - exact) > 3.0 * est.stderr:
        failures.append("joint vacancy")
    curve = ex.tail_curve(model, grid, args.n, args.seed, threads=args.threads)
    if args.out:
        _write_tail_csv(args.out, curve, args)
    slope, slope_se = ex.fit_loglinear(curve, (grid[0], grid[-1]))
    target = -(2.0 * args.lam - 1.0)
    print(f"tail slope={slope:.4f} stderr={slope_se:.4f} predicted={target:g}")
    if target != 0.0 and abs(slope - target) > 0.15 * abs(target):
        failures.append("tail slope")
    if args.check and failures:
        raise CheckError("; ".join(failures))
    return 0


def cmd_sweep(args) -> int:
    _require(args, ["alphas", "r_max", "n", "seed"])
    law = _radius_law(args)
    alphas = (
        [float(v) for v in args.alphas.split(",")]
        if isinstance(args.alphas, str)
        else [float(v) for v in args.alphas]
    )
    rows = ex.near_critical_sweep(
        law, alphas, args.r_max, args.n, args.seed, threads=args.threads
    )
    header = [
        "alpha",
        "intensity",
        "mean_vis",
        "mean_vis_stderr",
        "mean_star_area",
        "star_area_stderr",
        "p_nonempty",
        "p_stderr",
        "r_max",
        "n",
        "stabilized",
    ]
    out_rows = []
    unstable = []
    for row in rows:
        print(
            f"alpha={row.alpha:g}: meanV={row.mean_vis:.4f}+-{row.mean_vis_stderr:.4f} "
            f"area={row.mean_star_area:.4g} p={row.p_nonempty:.4f}+-{row.p_stderr:.4f} "
            f"stabilized={row.stabilized}"
        )
        out_rows.append(
            [
                repr(row.alpha),
                repr(row.intensity),
                repr(row.mean_vis),
                repr(row.mean_vis_stderr),
                repr(row.mean_star_area),
                repr(row.star_area_stderr),
                repr(row.p_nonempty),
                repr(row.p_stderr),
                repr(row.r_max),
                row.n,
                row.stabilized,
            ]
        )
        if row.stabilized is False:
            unstable.append(row.alpha)
    if args.out:
        _write_rows_csv(args.out, header, out_rows, args)
    if args.check and unstable:
        raise CheckError(f"proxy not stabilized at alpha={unstable}")
    return 0


def cmd_janson(args) -> int:
    _require(args, ["radii", "r", "p", "n", "seed"])
    radii = (
        [float(v) for v in args.radii.split(",")]
        if isinstance(args.radii, str)
        else [float(v) for v in args.radii]
    )
    rows = ex.janson_experiment(
        radii, args.r, args.p, args.n, args.seed, threads=args.threads
    )
    out_rows = []
    for row in rows:
        print(
            f"R={row.ball_radius:g}: lambda={row.intensity:.6g} "
            f"p_hat={row.p_hat:.4f}+-{row.stderr:.4f}"
        )
        out_rows.append(
            [repr(row.ball_radius), repr(row.intensity), repr(row.p_hat), repr(row.stderr), row.n]
        )
    if args.out:
        _write_rows_csv(
            args.out, ["ball_radius", "intensity", "p_hat", "stderr", "n"], out_rows, args
        )
    if args.check:
        devs = [abs(row.p_hat - args.p) for row in rows]
        if devs[-1] > 0.15:
            raise CheckError(f"|p_hat - p| = {devs[-1]:.3f} > 0.15 at smallest R")
        if len(devs) >= 2 and devs[-1] > devs[0] + 3.0 * rows[-1].stderr:
            raise CheckError("deviation from p not non-increasing in trend")
    return 0


def _scene_payload(args) -> dict:
    model = _model(args)
    stream = replicate_stream(args.seed, args.index)
    r = float(args.r)
    if isinstance(model, ex.BooleanModel):
        window = window_for_visibility(r, model.radius_law)
        t, phi, rad = ex._draw_boolean(stream, model.intensity, model.radius_law, window)
        obstacles = [
            {"t": float(a), "phi": float(b), "radius": float(c)}
            for a, b, c in zip(t, phi, rad)
        ]
        law = model.radius_law
        law_spec = {"values": list(law.values), "weights": list(law.weights)}
        hw = ball_halfwidths(t, rad, r)
    else:
        window = r
        p, phi = ex._draw_lines(stream, model.intensity, r)
        obstacles = [
            {"t": float(a), "phi": float(b), "radius": None} for a, b in zip(p, phi)
        ]
        law_spec = None
        hw = line_halfwidths(p, r)
    blocked = arcset_from_arcs(zip(phi, hw))
    visible = [[float(a), float(b)] for a, b in blocked.uncovered_components(TWO_PI)]
    return {
        "version": __version__,
        "seed": args.seed,
        "index": args.index,
        "r": r,
        "window": float(window),
        "model": {
            "type": "boolean" if isinstance(model, ex.BooleanModel) else "lines",
            "intensity": model.intensity,
            "hash": model.model_hash(),
        },
        "law": law_spec,
        "obstacles": obstacles,
        "visible": visible,
        "uncovered_measure": math.fsum(b - a for a, b in visible),
    }


def _scene_recompute(payload: dict) -> List[List[float]]:
    import numpy as np

    r = payload["r"]
    obstacles = payload["obstacles"]
    phi = np.array([o["phi"] for o in obstacles])
    if payload["model"]["type"] == "boolean":
        t = np.array([o["t"] for o in obstacles])
        rad = np.array([o["radius"] for o in obstacles])
        hw = ball_halfwidths(t, rad, r)
    else:
        p = np.array([o["t"] for o in obstacles])
        hw = line_halfwidths(p, r)
    blocked = arcset_from_arcs(zip(phi, hw))
    return [[float(a), float(b)] for a, b in blocked.uncovered_components(TWO_PI)]


def cmd_scene(args) -> int:
    if args.load:
        try:
            with open(args.load, "r", encoding="utf-8") as fh:
                payload = json.load(fh)
        except (OSError, json.JSONDecodeError) as exc:
            raise ConfigError(f"cannot read scene {args.load}: {exc}") from exc
        visible = _scene_recompute(payload)
        match = visible == payload["visible"]
        print(f"obstacles={len(payload['obstacles'])} components={len(visible)}")
        print(f"uncovered_measure={math.fsum(b - a for a, b in visible)!r}")
        print(f"round_trip={'identical' if match else 'MISMATCH'}")
        if args.check and not match:
            raise CheckError("reloaded scene does not reproduce stored visibility")
        return 0
    _require(args, ["r", "seed"])
    payload = _scene_payload(args)
    text = json.dumps(payload, indent=2)
    if args.out:
        with open(args.out, "w", encoding="utf-8") as fh:
            fh.write(text)
            fh.write("\n")
        _write_meta(args.out, args, payload["model"]["hash"])
    else:
        print(text)
    return 0


# ---------------------------------------------------------------------------
# argument parsing
# ---------------------------------------------------------------------------


def _add_common(p: argparse.ArgumentParser) -> None:
    p.add_argument("--config", help="JSON config file (flags override it)")
    p.add_argument("--seed", type=int, help="base RNG seed")
    p.add_argument("--n", type=int, help="number of replicates")
    p.add_argument("--threads", type=int, help="worker processes (default: CPU count)")
    p.add_argument("--check", action="store_true", help="exit 3 on failed acceptance check")
    p.add_argument("--out", help="output file path")


def _add_model(p: argparse.ArgumentParser) -> None:
    p.add_argument("--model", dest="model_type", choices=["boolean", "lines"])
    p.add_argument("--lambda", dest="lam", type=float, help="obstacle intensity")
    p.add_argument(
        "--alpha-target", type=float, help="choose intensity so alpha equals this"
    )
    p.add_argument("--radius", type=float, help="deterministic ball radius")
    p.add_argument("--radius-values", help="comma-separated radius atoms")
    p.add_argument("--radius-weights", help="comma-separated atom weights")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="hypervis",
        description="Visibility through Poisson obstacle fields in the hyperbolic plane",
    )
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("analytic", help="print a closed-form quantity")
    p.add_argument("quantity", choices=_ANALYTIC_QUANTITIES)
    _add_model(p)
    _add_common(p)
    p.add_argument("--r", type=float)
    p.add_argument("--theta", type=float)
    p.add_argument("--c", type=float, help="radius bound C")
    p.add_argument("--ball-radius", type=float)
    p.add_argument("--p", type=float)
    p.set_defaults(func=cmd_analytic)

    p = sub.add_parser("tail", help="tail curve CSV + log-linear fit")
    _add_model(p)
    _add_common(p)
    p.add_argument("--r-grid", help="probe grid a:b:step")
    p.add_argument("--fit-lo", type=float)
    p.add_argument("--fit-hi", type=float)
    p.add_argument("--slope-target", type=float)
    p.add_argument("--slope-tol", type=float, help="relative tolerance, default 0.15")
    p.set_defaults(func=cmd_tail)

    p = sub.add_parser("moments", help="second-moment sandwich report")
    _add_model(p)
    _add_common(p)
    p.add_argument("--r", type=float)
    p.add_argument("--eps", type=float, help="angular window, default 0.5")
    p.set_defaults(func=cmd_moments)

    p = sub.add_parser("lines", help="line-process exact-law suite")
    _add_common(p)
    p.add_argument("--lambda", dest="lam", type=float)
    p.add_argument("--r-grid", help="probe grid a:b:step")
    p.add_argument("--r", type=float, help="probe length for the joint check")
    p.add_argument("--theta", type=float, help="angle for the joint check")
    p.set_defaults(func=cmd_lines)

    p = sub.add_parser("sweep", help="near-critical sweep table")
    _add_model(p)
    _add_common(p)
    p.add_argument("--alphas", help="comma-separated decay rates")
    p.add_argument("--r-max", type=float)
    p.set_defaults(func=cmd_sweep)

    p = sub.add_parser("janson", help="shrinking-radius coverage experiment")
    _add_common(p)
    p.add_argument("--radii", help="comma-separated, strictly decreasing")
    p.add_argument("--r", type=float)
    p.add_argument("--p", type=float)
    p.set_defaults(func=cmd_janson)

    p = sub.add_parser("scene", help="dump or reload one scene as JSON")
    _add_model(p)
    _add_common(p)
    p.add_argument("--r", type=float, help="probe length")
    p.add_argument("--index", type=int, default=0, help="replicate index")
    p.add_argument("--load", help="reload a dumped scene and re-derive visibility")
    p.set_defaults(func=cmd_scene)

    return parser


def main(argv: Optional[Sequence[str]] = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        args = _resolve(args)
        if getattr(args, "threads", None) is None:
            args.threads = os.cpu_count() or 1
        return args.func(args)
    except ConfigError as exc:
        print(f"error[config]: {exc}", file=sys.stderr)
        return 2
    except CheckError as exc:
        print(f"error[check]: {exc}", file=sys.stderr)
        return 3
    except ValueError as exc:
        print(f"error[config]: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
