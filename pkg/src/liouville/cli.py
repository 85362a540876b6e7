"""Command-line front end: liouville verify|classify|diameter|asymptotics|profile."""
from __future__ import annotations

import argparse
import json
import math
import os
import sys
import tempfile
from fractions import Fraction
from pathlib import Path

import numpy as np

from . import __version__
from .descriptors import COMMANDS, DescriptorError, parse_solution, solution_to_json, validate_config
from .developing import OdeQuotient
from .errors import FitDegenerate, LiouvilleError, SnapAmbiguous, WindowTooSmall
from .metric import DiameterSettings, diameter_estimate
from .ode import fit_asymptotics, stokes_directions, stokes_growth
from .solution import FromMap, SolutionField, Transform, classify_growth, make_solution, pde_residual

EXIT_OK, EXIT_FAIL, EXIT_INPUT, EXIT_AMBIGUOUS = 0, 1, 2, 3
STATUS = {EXIT_OK: "pass", EXIT_FAIL: "fail", EXIT_INPUT: "input_error", EXIT_AMBIGUOUS: "ambiguous"}


# ---------------------------------------------------------------- output

def _num(x) -> str:
    x = float(x)
    return format(x, ".17g") if math.isfinite(x) else "null"


def dumps(obj, indent: int = 0) -> str:
    """JSON with every float at 17 significant digits and non-finite values as null."""
    pad, inner = "  " * indent, "  " * (indent + 1)
    if isinstance(obj, dict):
        if not obj:
            return "{}"
        items = [f"{inner}{json.dumps(str(k))}: {dumps(v, indent + 1)}" for k, v in obj.items()]
        return "{\n" + ",\n".join(items) + "\n" + pad + "}"
    if isinstance(obj, (list, tuple)):
        if not obj:
            return "[]"
        if all(not isinstance(v, (dict, list, tuple)) for v in obj):
            return "[" + ", ".join(dumps(v) for v in obj) + "]"
        return "[\n" + ",\n".join(inner + dumps(v, indent + 1) for v in obj) + "\n" + pad + "]"
    if obj is None or isinstance(obj, bool):
        return json.dumps(obj)
    if isinstance(obj, (int, np.integer)):
        return str(int(obj))
    if isinstance(obj, (float, np.floating, Fraction)):
        return _num(obj)
    if isinstance(obj, complex):
        return dumps([obj.real, obj.imag])
    return json.dumps(str(obj))


def _atomic_write(path: Path, text: str):
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.")
    try:
        with os.fdopen(fd, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        os.unlink(tmp)
        raise


def write_csv(path: Path, header, rows):
    lines = [",".join(header)]
    for row in rows:
        lines.append(",".join(format(float(v), ".17g") for v in row))
    _atomic_write(path, "\n".join(lines) + "\n")


def write_json(path: Path, obj):
    _atomic_write(path, dumps(obj) + "\n")


# ---------------------------------------------------------------- commands

def cmd_verify(u: SolutionField, cfg: dict, rng: np.random.Generator, out: Path):
    x0, x1, y0, y1 = cfg.get("window", [-5.0, 5.0, -5.0, 5.0])
    n = cfg.get("points", 200)
    m = cfg.get("structured", 7)
    threshold = cfg.get("threshold", 1e-6)
    h = cfg.get("step", 1e-3)
    pts = rng.uniform(x0, x1, n) + 1j * rng.uniform(y0, y1, n)
    if m:
        X, Y = np.meshgrid(np.linspace(x0, x1, m), np.linspace(y0, y1, m))
        pts = np.concatenate([pts, (X + 1j * Y).ravel()])
    fields = [("as given", u)]
    for _ in range(cfg.get("random_transforms", 0)):
        T = Transform.random(rng)
        base = u.transform
        # compose: first the given transform, then the random one
        fields.append((T, make_solution(u.provenance, Transform(base.scale * T.scale, base.scale * T.shift + base.shift))))
    runs = []
    for label, field in fields:
        res = np.abs(pde_residual(field, pts, h))
        i = int(np.argmax(res))
        runs.append({"transform": None if isinstance(label, str) else {"scale": label.scale, "shift": label.shift},
                     "max_residual": float(res[i]), "mean_residual": float(res.mean()), "worst_point": complex(pts[i])})
    worst = max(r["max_residual"] for r in runs)
    result = {"max_residual": worst, "mean_residual": runs[0]["mean_residual"], "points": int(pts.size),
              "threshold": threshold, "runs": runs}
    return (EXIT_OK if worst < threshold else EXIT_FAIL), result


def cmd_classify(u: SolutionField, cfg: dict, rng, out: Path):
    kw = {k: cfg[k] for k in ("radii", "directions", "threshold") if k in cfg}
    try:
        g = classify_growth(u, **kw)
    except SnapAmbiguous as exc:
        return EXIT_AMBIGUOUS, {"raw": exc.raw, "nearest": float(exc.nearest), "gap": abs(exc.raw - float(exc.nearest)),
                                "message": str(exc)}
    result = g.to_json()
    code = EXIT_OK
    if "expected_k" in cfg:
        result["expected_k"] = cfg["expected_k"]
        if float(g.k) != float(cfg["expected_k"]):
            code = EXIT_FAIL
    return code, result


def cmd_diameter(u: SolutionField, cfg: dict, rng, out: Path):
    settings = DiameterSettings(levels=cfg.get("levels", 2), coarse_spacing=cfg.get("coarse_spacing"),
                                window=tuple(cfg["window"]) if "window" in cfg else None,
                                boundary_ratio=cfg.get("boundary_ratio", 1e-3))
    est = diameter_estimate(u, settings)
    result = {"estimate": est.extrapolated, **est.to_json()}
    d = est.extrapolated
    # the diameter of a bounded-above solution lies in [π, 2π); allow the grid tolerance below π
    code = EXIT_OK if math.pi * (1 - cfg.get("rel_tol", 0.01)) <= d < 2 * math.pi else EXIT_FAIL
    if "expected" in cfg:
        rel = abs(d - cfg["expected"]) / abs(cfg["expected"])
        result.update({"expected": cfg["expected"], "relative_error": rel})
        if rel > cfg.get("rel_tol", 0.01):
            code = EXIT_FAIL
    return code, result


def _ode_map(u: SolutionField) -> OdeQuotient:
    p = u.provenance
    if not (isinstance(p, FromMap) and isinstance(p.f, OdeQuotient) and u.transform.is_identity):
        raise DescriptorError("asymptotics needs a from_map ode_quotient solution without a transform")
    if p.f.P.is_zero:
        raise DescriptorError("asymptotics needs a nonzero polynomial P")
    return p.f


def _dump_ray(path: Path, f: OdeQuotient, theta: float, radius: float, samples: int):
    ray = f.ray(theta, radius, samples)
    y = ray.states
    rows = np.column_stack([ray.s, y[:, 0].real, y[:, 0].imag, y[:, 2].real, y[:, 2].imag,
                            ray.log_spherical_derivative(), ray.log_scale])
    write_csv(path, ["s", "re_w1", "im_w1", "re_w2", "im_w2", "log_sharp", "log_scale"], rows)


def cmd_asymptotics(u: SolutionField, cfg: dict, rng, out: Path):
    f = _ode_map(u)
    sd = stokes_directions(f.P)
    rho = sd.order
    tol = cfg.get("exponent_tol", 0.05)
    sectors = cfg.get("sectors", list(range(sd.count)))
    if any(j >= sd.count for j in sectors):
        raise DescriptorError(f"sector index out of range (there are {sd.count} sectors)")
    kw = {k: v for k, v in (("radii", cfg.get("radii")), ("n_directions", cfg.get("directions")),
                            ("margin", cfg.get("margin"))) if v is not None}
    fits = []
    code = EXIT_OK
    for j in sectors:
        try:
            fit = fit_asymptotics(u, j, **kw)
        except FitDegenerate as exc:
            fits.append({"sector": j, "error": str(exc)})
            code = EXIT_FAIL
            continue
        ok = abs(fit.exponent - rho) <= tol
        fits.append({**fit.to_json(), "pass": ok})
        code = code if ok else EXIT_FAIL
    growth = []
    for g in stokes_growth(u):
        ok = abs(g.slope - f.P.degree / 2) <= tol
        growth.append({"direction": g.direction, "slope": g.slope, "max_u_over_log_r": g.literal,
                       "radii": list(g.radii), "sups": list(g.sups), "pass": ok})
        code = code if ok else EXIT_FAIL
    radius = cfg.get("ray_radius", 30.0)
    samples = cfg.get("ray_samples", 201)
    files = []
    for j, th in enumerate(sd.directions):
        for label, angle in (("stokes", th), ("bisector", sd.bisector(j))):
            name = f"ray_{label}_{j}.csv"
            _dump_ray(out / name, f, angle, radius, samples)
            files.append(name)
    pc, pt = sd.predicted_profile()
    result = {"degree": f.P.degree, "order": rho, "sector_count": sd.count, "stokes_directions": list(sd.directions),
              "predicted_c": pc, "predicted_theta0": pt, "exponent_tol": tol, "fits": fits,
              "stokes_growth": growth, "ray_files": files}
    return code, result


def cmd_profile(u: SolutionField, cfg: dict, rng, out: Path):
    files = []
    if "grid" not in cfg and "rays" not in cfg:
        cfg = {"grid": {"window": [-3.0, 3.0, -3.0, 3.0], "nx": 101, "ny": 101}}
    if "grid" in cfg:
        g = cfg["grid"]
        x0, x1, y0, y1 = g["window"]
        X, Y = np.meshgrid(np.linspace(x0, x1, g["nx"]), np.linspace(y0, y1, g["ny"]))
        U = u(X + 1j * Y)
        write_csv(out / "profile_grid.csv", ["x", "y", "u", "exp_u"],
                  np.column_stack([X.ravel(), Y.ravel(), U.ravel(), np.exp(U).ravel()]))
        files.append("profile_grid.csv")
    if "rays" in cfg:
        r = cfg["rays"]
        c = r.get("centre", 0.0)
        c = complex(*c) if isinstance(c, list) else complex(c)
        thetas = np.asarray(r["thetas"], dtype=float)
        rs = np.linspace(0.0, r["radius"], r.get("samples", 201))
        U = u.polar(thetas, rs, c)
        T, R = np.meshgrid(thetas, rs, indexing="ij")
        Z = c + R * np.exp(1j * T)
        write_csv(out / "profile_rays.csv", ["theta", "r", "x", "y", "u"],
                  np.column_stack([T.ravel(), R.ravel(), Z.real.ravel(), Z.imag.ravel(), U.ravel()]))
        files.append("profile_rays.csv")
    return EXIT_OK, {"files": files}


HANDLERS = {"verify": cmd_verify, "classify": cmd_classify, "diameter": cmd_diameter,
            "asymptotics": cmd_asymptotics, "profile": cmd_profile}


# ---------------------------------------------------------------- entry point

def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="liouville", description="Numerical checks for solutions of -Δu = e^{2u}.")
    ap.add_argument("command", choices=COMMANDS)
    ap.add_argument("--config", required=True, type=Path, help="UTF-8 JSON run configuration")
    ap.add_argument("--out", required=True, type=Path, help="output directory")
    ap.add_argument("--seed", type=int, default=0, help="seed for random sampling (default 0)")
    ap.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    return ap


def run(command: str, config: dict, out: Path, seed: int = 0) -> int:
    """Validate, execute and write report.json; returns the exit code."""
    out.mkdir(parents=True, exist_ok=True)
    report = {"command": command, "version": __version__, "seed": seed}
    try:
        validate_config(config, command)
        u = parse_solution(config["solution"])
        report["solution"] = solution_to_json(u)
        code, result = HANDLERS[command](u, config.get(command, {}), np.random.default_rng(seed), out)
    except (ValueError, WindowTooSmall) as exc:
        code, result = EXIT_INPUT, {"error": type(exc).__name__, "message": str(exc)}
    except LiouvilleError as exc:
        code, result = EXIT_FAIL, {"error": type(exc).__name__, "message": str(exc)}
    report.update({"status": STATUS[code], "exit_code": code, "result": result})
    write_json(out / "report.json", report)
    return code


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        config = json.loads(args.config.read_text(encoding="utf-8"))
    except (OSError, UnicodeDecodeError, json.JSONDecodeError) as exc:
        print(f"liouville: cannot read config: {exc}", file=sys.stderr)
        return EXIT_INPUT
    try:
        code = run(args.command, config, args.out, args.seed)
    except OSError as exc:
        print(f"liouville: cannot write to {args.out}: {exc}", file=sys.stderr)
        return EXIT_INPUT
    report = json.loads((args.out / "report.json").read_text(encoding="utf-8"))
    msg = report["result"].get("message") if isinstance(report["result"], dict) else None
    print(f"{args.command}: {report['status']}" + (f" ({msg})" if msg else ""), file=sys.stderr)
    return code


if __name__ == "__main__":
    sys.exit(main())
