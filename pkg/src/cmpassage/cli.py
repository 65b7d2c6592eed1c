"""Command line entry point: ``cmpassage {solve,mc,compare,check-cm,classify}``.

Every run writes ``summary.json`` into the output directory, also on failure.
Exit codes: 0 success, 1 numerical failure, 2 configuration error.
"""

from __future__ import annotations

import argparse
import csv
import json
import logging
import math
import os
import sys
from dataclasses import replace

import numpy as np

from . import montecarlo, scale
from .config import ConfigError, RunConfig, speed_from_expression
from .levy import BracketError, QuadratureError, explosion_safe
from .measures import cm_finite_difference_test
from .model import ModelSpec, boundary_membership

log = logging.getLogger("cmpassage")

EXIT_OK, EXIT_NUMERIC, EXIT_CONFIG = 0, 1, 2
Z_LIMIT = 3.0
PASS_FRACTION = 0.95


class NumericalFailure(RuntimeError):
    """A solver or check failed (exit code 1)."""


def fmt(v) -> str:
    """17 significant digits, enough to round-trip a double."""
    if isinstance(v, (int, np.integer)) and not isinstance(v, bool):
        return str(int(v))
    if isinstance(v, str):
        return v
    return f"{float(v):.17g}"


def _clean(obj):
    """JSON-safe copy: non-finite floats become strings."""
    if isinstance(obj, dict):
        return {str(k): _clean(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_clean(v) for v in obj]
    if isinstance(obj, (np.floating, float)):
        f = float(obj)
        return f if math.isfinite(f) else ("inf" if f > 0 else "-inf" if f < 0 else "nan")
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, np.bool_):
        return bool(obj)
    return obj


def _write_csv(path, header, rows):
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for r in rows:
            w.writerow([fmt(v) for v in r])


def _write_json(path, obj):
    with open(path, "w") as fh:
        json.dump(_clean(obj), fh, indent=2, sort_keys=False)
        fh.write("\n")


# ---------------------------------------------------------------------------
# solver dispatch
# ---------------------------------------------------------------------------


def choose_solver(model: ModelSpec) -> str:
    """Pick a solver from the shape of ``gamma``."""
    g = model.gamma
    if g.is_atomic and g.atom_locs.size == 1 and g.atom_locs[0] == 0.0:
        return "levy"
    if g.lebesgue is not None and g.lebesgue[1] == 0.0 and not g.atom_masses.size and not g.has_grid:
        return "csbp"
    if g.is_atomic:
        try:
            scale.lattice_parameters(g)
            return "lattice"
        except ValueError:
            return "series"
    if not g.atom_masses.size and scale._density_bounded_below_near_zero(g):
        return "volterra"
    return "series"


def solve_one(model: ModelSpec, q: float, task, eval_min: float) -> scale.ScaleMeasure:
    method = task.solver if task.solver != "auto" else choose_solver(model)
    if method == "levy":
        return scale.closed_form_levy(model, q)
    if method == "lattice":
        return scale.lattice_mq(model, q, task.lattice_terms, theta_ref=eval_min)
    if method == "csbp":
        return scale.closed_form_csbp(model, q, task.z_max, task.spacing, theta_ref=eval_min)
    if method == "volterra":
        return scale.volterra_density(model, q, task.z_max, task.spacing, richardson=task.richardson)
    kw = {}
    if model.gamma.lebesgue is not None:
        kw = {"spacing": task.spacing, "z_max": task.z_max}
    return scale.build_mq(model, q, [eval_min], tol=task.tol, k_max=task.k_max, **kw)


def _residual_thetas(model: ModelSpec, lo: float, count: int) -> np.ndarray:
    if model.gamma.lebesgue is not None and lo <= 0:
        lo = max(lo, 0.0) + 1e-2
    return np.linspace(lo, lo + 5.0, count)


def run_solve(cfg: RunConfig, out_dir: str, summary: dict) -> list:
    model = cfg.model.build()
    task = cfg.task
    pairs = task.pairs()
    eval_min = min(l for _, l in pairs)
    if not np.all(model.contains([p for pair in pairs for p in pair])):
        raise ConfigError("x and level values must lie in the state interval")
    rows, results = [], []
    failures = []
    for i, q in enumerate(task.q):
        sm = solve_one(model, q, task, eval_min)
        entry = {
            "q": q,
            "method": sm.method,
            "status": sm.status,
            "k_truncation": sm.k_truncation,
            "tail_bound": sm.tail_bound,
            "error_estimate": sm.error_estimate,
            "notes": list(sm.notes),
        }
        fname = f"scale_q{i}.json"
        _write_json(os.path.join(out_dir, fname), {**entry, "base": sm.base, "measure": sm.measure.to_dict()})
        entry["scale_file"] = fname
        if sm.status == scale.DIVERGED:
            failures.append(f"q={q:g}: scale measure diverged ({'; '.join(sm.notes)})")
            results.append(entry)
            continue
        thetas = _residual_thetas(model, eval_min, task.residual_points)
        entry["residual"] = scale.residual_nu_q(model, q, sm, thetas)
        entry["residual_allowance"] = scale.residual_allowance(sm, thetas)
        results.append(entry)
        for x, l in pairs:
            rows.append((q, x, l, scale.fptd_laplace(sm, x, l), sm.k_truncation, sm.tail_bound, sm.status))
    _write_csv(
        os.path.join(out_dir, "fptd.csv"), ["q", "x", "l", "value", "k_truncation", "tail_bound", "status"], rows
    )
    summary["results"] = results
    summary["classify"] = [{"q": q, **scale.classify(model, q).to_dict()} for q in task.q]
    if failures:
        raise NumericalFailure("; ".join(failures))
    return rows


def run_mc(cfg: RunConfig, out_dir: str, summary: dict) -> list:
    model = cfg.model.build()
    task, mc = cfg.task, cfg.task.mc
    rows = []
    for x in task.x:
        levels = [l for l in task.level if l < x]
        if not levels:
            continue
        try:
            ests = montecarlo.estimate_fptd_grid(
                model, task.q, x, levels, mc.n, mc.dt, mc.seed,
                u_budget=mc.u_budget, discount_floor=mc.discount_floor,
                adapt_scale=mc.adapt_scale, eps_jump=mc.eps_jump,
            )  # fmt: skip
        except ValueError as exc:
            raise ConfigError(str(exc)) from None
        rows.extend(ests)
    if not rows:
        raise ConfigError("task needs at least one (x, level) pair with level < x")
    rows.sort(key=lambda e: (task.q.index(e.q), task.x.index(e.x), task.level.index(e.level)))
    header = ["q", "x", "l", "mean", "std_error", "n", "n_passed", "n_killed", "n_censored", "dt", "seed", "censor_bias"]
    _write_csv(
        os.path.join(out_dir, "mc.csv"),
        header,
        [
            (e.q, e.x, e.level, e.mean, e.std_error, e.n_paths, e.n_passed, e.n_killed, e.n_censored, e.dt, e.seed, e.censor_bias)
            for e in rows
        ],
    )
    censored = sum(e.n_censored for e in rows)
    if censored:
        summary["warnings"].append(
            f"{censored} censored path outcomes; largest censor_bias {max(e.censor_bias for e in rows):.3g}"
        )
    summary["results"] = [e.to_dict() for e in rows]
    return rows


def _read_solver_csv(path):
    out = {}
    try:
        with open(path, newline="") as fh:
            for r in csv.DictReader(fh):
                out[(float(r["q"]), float(r["x"]), float(r["l"]))] = float(r["value"])
    except (OSError, KeyError, ValueError) as exc:
        raise ConfigError(f"cannot read solver csv {path}: {exc}") from None
    return out


def compare_rows(solver: dict, mc_rows) -> list:
    """Join solver values and MC estimates on ``(q, x, l)``; mismatched keys raise."""
    mc = {(e.q, e.x, e.level): e for e in mc_rows}
    if set(solver) != set(mc):
        missing = sorted(set(solver) ^ set(mc))
        raise ConfigError(f"solver and Monte Carlo grids differ at (q, x, l) = {missing[:5]}")
    out = []
    for key in mc:
        e = mc[key]
        diff = solver[key] - e.mean
        if e.std_error > 0:
            z = diff / e.std_error
        else:
            z = 0.0 if diff == 0 else math.copysign(math.inf, diff)
        out.append((*key, solver[key], e.mean, e.std_error, z, abs(z) <= Z_LIMIT))
    return out


def run_compare(cfg: RunConfig, out_dir: str, summary: dict) -> list:
    if cfg.task.solver_csv:
        solver = _read_solver_csv(cfg.task.solver_csv)
    else:
        sub = {"results": None, "classify": None}
        rows = run_solve(cfg, out_dir, sub)
        solver = {(r[0], r[1], r[2]): r[3] for r in rows}
        summary["solver"] = sub["results"]
    mc_summary = {"warnings": summary["warnings"]}
    mc_rows = run_mc(cfg, out_dir, mc_summary)
    joined = compare_rows(solver, mc_rows)
    _write_csv(
        os.path.join(out_dir, "compare.csv"),
        ["q", "x", "l", "solver", "mc", "std_error", "z", "within"],
        [r[:-1] + (int(r[-1]),) for r in joined],
    )
    ok = sum(r[-1] for r in joined)
    frac = ok / len(joined)
    summary["verdict"] = "pass" if frac >= PASS_FRACTION else "fail"
    summary["fraction_within"] = frac
    summary["failing_rows"] = [
        {"q": r[0], "x": r[1], "l": r[2], "solver": r[3], "mc": r[4], "std_error": r[5], "z": r[6]} for r in joined if not r[-1]
    ]
    if summary["verdict"] == "fail":
        raise NumericalFailure(f"only {ok}/{len(joined)} rows within {Z_LIMIT} standard errors")
    return joined


def run_check_cm(cfg: RunConfig, out_dir: str, summary: dict) -> dict:
    task, cmc = cfg.task, cfg.task.cm
    l = task.level[0]
    step = cmc.span / cmc.points
    ys = l + step * np.arange(1, cmc.points + 1)
    report = {"level": l, "step": step, "points": cmc.points, "max_order": cmc.max_order}

    def as_dict(r):
        return {"passed": r.passed, "order": r.order, "index": r.index, "worst": r.worst}

    if cmc.speed is not None:
        speed = speed_from_expression(cmc.speed)
        vals = speed(ys)
        if np.any(~np.isfinite(vals)) or np.any(vals <= 0):
            raise NumericalFailure("A must be finite and positive on the sample grid")
        report["inverse_speed"] = {"source": cmc.speed, **as_dict(cm_finite_difference_test(1.0 / vals, cmc.max_order, cmc.tol))}
        report["fptd"] = []
        report["note"] = "A given as an expression: no representing measure, fptd side not computed"
    else:
        model = cfg.model.build()
        inv = model.inverse_speed(ys)
        report["inverse_speed"] = {"source": "laplace(gamma)", **as_dict(cm_finite_difference_test(inv, cmc.max_order, cmc.tol))}
        curves = []
        for q in task.q:
            sm = solve_one(model, q, task, l)
            if sm.status == scale.DIVERGED:
                curves.append({"q": q, "status": sm.status, "passed": None})
                continue
            vals = scale.fptd_curve(sm, l, ys)
            curves.append({"q": q, "status": sm.status, **as_dict(cm_finite_difference_test(vals, cmc.max_order, cmc.tol))})
        report["fptd"] = curves
    _write_json(os.path.join(out_dir, "cm.json"), report)
    summary["results"] = report
    checks = [report["inverse_speed"]["passed"]] + [c["passed"] for c in report["fptd"] if c["passed"] is not None]
    if not all(checks):
        raise NumericalFailure("complete-monotonicity check failed: " + ", ".join(
            [f"1/A at order {report['inverse_speed']['order']}"] * (not report["inverse_speed"]["passed"])
            + [f"fptd q={c['q']:g}" for c in report["fptd"] if c["passed"] is False]
        ))  # fmt: skip
    return report


def run_classify(cfg: RunConfig, out_dir: str, summary: dict) -> dict:
    model = cfg.model.build()
    task = cfg.task
    eval_min = min(task.level)
    out = {
        "base": model.base,
        "explosion_safe": explosion_safe(model.psi, model.killing),
        "boundary": boundary_membership(model) if math.isfinite(model.interval_lower) else None,
        "boundary_is_heuristic": True,
        "per_q": [],
    }
    for q in task.q:
        kw = {"spacing": task.spacing, "z_max": task.z_max} if model.gamma.lebesgue is not None else {}
        rep = scale.classify(model, q, probe=True, eval_points=[eval_min], tol=task.tol, k_max=task.k_max, **kw)
        out["per_q"].append({"q": q, **rep.to_dict()})
    _write_json(os.path.join(out_dir, "classify.json"), out)
    summary["results"] = out
    return out


COMMANDS = {
    "solve": run_solve,
    "mc": run_mc,
    "compare": run_compare,
    "check-cm": run_check_cm,
    "classify": run_classify,
}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="cmpassage", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)
    for name in COMMANDS:
        p = sub.add_parser(name)
        p.add_argument("--config", required=True, help="YAML run configuration")
        p.add_argument("--out", help="output directory (overrides output.dir)")
        p.add_argument("--seed", type=int, help="override task.mc.seed")
        p.add_argument("--quiet", action="store_true", help="only errors on stderr")
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.ERROR if args.quiet else logging.INFO, format="%(message)s")
    out_dir = args.out or "out"
    summary = {"command": args.command, "status": "ok", "exit_code": EXIT_OK, "error": None, "warnings": []}
    code = EXIT_OK
    try:
        cfg = RunConfig.load(args.config)
        if args.seed is not None:
            if args.seed < 0:
                raise ConfigError("seed must be nonnegative")
            cfg = replace(cfg, task=replace(cfg.task, mc=replace(cfg.task.mc, seed=args.seed)))
        out_dir = args.out or cfg.output.dir
        os.makedirs(out_dir, exist_ok=True)
        summary["config"] = cfg.to_dict()
        COMMANDS[args.command](cfg, out_dir, summary)
    except ConfigError as exc:
        code, summary["status"], summary["error"] = EXIT_CONFIG, "error", str(exc)
    except (NumericalFailure, QuadratureError, BracketError, ValueError, FloatingPointError) as exc:
        code, summary["status"], summary["error"] = EXIT_NUMERIC, "failed", str(exc)
    summary["exit_code"] = code
    os.makedirs(out_dir, exist_ok=True)
    _write_json(os.path.join(out_dir, "summary.json"), summary)
    if code:
        log.error("%s: %s", summary["status"], summary["error"])
    else:
        for w in summary["warnings"]:
            log.warning("warning: %s", w)
        log.info("%s: ok (%s)", args.command, out_dir)
    return code


if __name__ == "__main__":
    sys.exit(main())
