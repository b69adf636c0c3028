"""Command-line entry point.

Subcommands: ``cap-info``, ``simulate``, ``verify-inequality``, ``sweep``.
Exit codes: 0 success, 1 failure, 2 configuration error, 3 monitor abort,
4 mean convexity lost. ``CAPFLOW_LOG`` sets the log level (default WARNING).
"""
from __future__ import annotations

import argparse
import csv
import json
import logging
import os
import sys
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import replace
from pathlib import Path

from .caps import AngleError, CapSpec, ContactAngle, b_theta, b_theta_radial, cap_constants
from .config import ConfigError, OutputConfig, load_config
from .grid import GhostClosureError, GridSpec, build_grid
from .initial import InadmissibleInitialData, InitSpec, make_initial
from .integrals import integrate
from .output import SeriesWriter, run_summary, write_json, write_obj
from .solver import StopReason, run

EXIT_OK, EXIT_FAIL, EXIT_CONFIG, EXIT_MONITOR, EXIT_CONVEXITY = 0, 1, 2, 3, 4
DEFAULT_THETAS = (30.0, 60.0, 90.0, 120.0, 150.0)
CAP_INFO_TOL = 1e-8
DEFICIT_TOL = -1e-3

log = logging.getLogger("capflow")

_EXIT_FOR = {
    StopReason.CONVERGED: EXIT_OK,
    StopReason.TIME_LIMIT: EXIT_OK,
    StopReason.MONITOR_VIOLATION: EXIT_MONITOR,
    StopReason.MEAN_CONVEXITY_LOST: EXIT_CONVEXITY,
}


def _setup_logging():
    level = os.environ.get("CAPFLOW_LOG", "WARNING").upper()
    logging.basicConfig(level=getattr(logging, level, logging.WARNING),
                        format="%(levelname)s %(name)s: %(message)s", stream=sys.stderr)


def _theta_list(text):
    try:
        vals = tuple(float(x) for x in text.split(",") if x.strip())
    except ValueError:
        raise argparse.ArgumentTypeError(f"not a comma-separated list of degrees: {text!r}") from None
    return vals


def _label(deg):
    return f"theta_{deg:g}"


# -- cap-info ------------------------------------------------------------------

def cmd_cap_info(thetas, r=1.0, n=2, out=None):
    """Print cap constants from two independent routes; nonzero exit on disagreement."""
    out = out or sys.stdout
    code = EXIT_OK
    for deg in thetas:
        theta = ContactAngle.from_degrees(deg)
        spec = CapSpec(theta, r, n)
        if n == 2:
            ref, alt = cap_constants(spec, "closed"), cap_constants(spec, "quad")
            labels = ("closed", "quadrature")
        else:
            ref = cap_constants(spec, "quad")
            alt = replace(ref, b_theta=b_theta_radial(n, theta))
            labels = ("slices", "radial")
        print(f"theta = {deg:g} deg, r = {r:g}, n = {n}", file=out)
        print(f"  {'quantity':<15}{labels[0]:>22}{labels[1]:>22}{'rel diff':>12}", file=out)
        for name in ("b_theta", "V1", "V2", "area", "wetted_area", "contact_length", "total_H"):
            a, b = getattr(ref, name), getattr(alt, name)
            rel = abs(a - b) / max(abs(a), 1e-300)
            flag = "" if rel <= CAP_INFO_TOL else "  MISMATCH"
            if flag:
                code = EXIT_FAIL
            print(f"  {name:<15}{a:>22.15g}{b:>22.15g}{rel:>12.2e}{flag}", file=out)
    return code


# -- simulate ------------------------------------------------------------------

def _with_out_dir(config, out_dir):
    if out_dir is None:
        return config
    d = Path(out_dir)
    return config.replace(output=replace(
        config.output, csv_path=str(d / "series.csv"), summary_path=str(d / "summary.json"),
        mesh_path=str(d / "mesh") if config.output.mesh_every else config.output.mesh_path))


def simulate(config):
    """Run one configured flow and write its artifacts. Returns ``(exit_code, summary)``."""
    oc: OutputConfig = config.output
    writer = SeriesWriter(oc.csv_path) if oc.csv_path else None
    theta = config.angle
    mesh_dir = Path(oc.mesh_path) if (oc.mesh_path and oc.mesh_every) else None

    def on_record(i, rec, state):
        if writer:
            writer.write(rec)
        if mesh_dir is not None and i % oc.mesh_every == 0:
            write_obj(mesh_dir / f"mesh_{i:05d}.obj", state.field, theta, oc.n_xi_export)

    start = time.perf_counter()
    try:
        result = run(config, on_record=on_record)
    finally:
        if writer:
            writer.close()
    summary = run_summary(config, result)
    if oc.summary_path:
        write_json(oc.summary_path, summary)
        write_json(Path(oc.summary_path).with_suffix(".timing.json"),
                   {"wall_time_s": time.perf_counter() - start})
    return _EXIT_FOR[result.reason], summary


def cmd_simulate(config_path, out_dir=None, resolution=None):
    try:
        config = load_config(config_path)
        if resolution is not None:
            config = config.replace(grid=replace(config.grid, n_beta=resolution))
    except (ConfigError, ValueError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    config = _with_out_dir(config, out_dir)
    try:
        code, summary = simulate(config)
    except (InadmissibleInitialData, GhostClosureError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_FAIL
    if not config.output.summary_path:
        json.dump(summary, sys.stdout, indent=2, sort_keys=True)
        print()
    else:
        print(f"{summary['stop_reason']}: t = {summary['final_t']:.6g}, "
              f"deficit_norm = {summary['final_deficit_norm']}, "
              f"r_fit/r_pred - 1 = {summary['r_fitted'] / summary['r_predicted'] - 1:.3e}")
    if summary["detail"]:
        print(summary["detail"], file=sys.stderr)
    return code


# -- verify-inequality ---------------------------------------------------------

INEQUALITY_COLUMNS = ("theta_degrees", "seed", "epsilon_used", "retries", "deficit_norm_t0",
                      "deficit_norm_final", "status")


def inequality_rows(thetas, seeds, epsilon, resolution, n=2, t_flow=0.0):
    """One row per ``(theta, seed)``: deficit of seeded admissible data at ``t = 0``
    and, if ``t_flow > 0``, after flowing for ``t_flow``."""
    from .config import FlowConfig, SteppingConfig

    grid = build_grid(GridSpec(n=n, n_beta=resolution))
    rows = []
    for deg in thetas:
        theta = ContactAngle.from_degrees(deg)
        for seed in range(seeds):
            init = InitSpec(kind="perturbed_cap", epsilon=epsilon, seed=seed)
            try:
                field, rep = make_initial(init, theta, grid)
            except InadmissibleInitialData as exc:
                rows.append({"theta_degrees": deg, "seed": seed, "epsilon_used": None, "retries": None,
                             "deficit_norm_t0": None, "deficit_norm_final": None,
                             "status": f"skipped: {exc}"})
                continue
            d0 = integrate(field, theta).deficit_norm
            d1 = None
            status = "ok"
            if t_flow > 0:
                cfg = FlowConfig(theta_degrees=deg, n=n, grid=GridSpec(n=n, n_beta=resolution),
                                 stepping=SteppingConfig(t_max=t_flow, record_interval=t_flow),
                                 init=init)
                res = run(cfg)
                d1 = res.history[-1].deficit_norm
                if res.reason is StopReason.MEAN_CONVEXITY_LOST:
                    status = "flow lost mean convexity"
            worst = min(x for x in (d0, d1) if x is not None)
            if worst < DEFICIT_TOL:
                status = "VIOLATED"
            rows.append({"theta_degrees": deg, "seed": seed, "epsilon_used": rep.epsilon_used,
                         "retries": rep.retries_used, "deficit_norm_t0": d0,
                         "deficit_norm_final": d1, "status": status})
    return rows


def cmd_verify_inequality(thetas, seeds, epsilon, resolution, n=2, t_flow=0.0, out_dir=None):
    rows = inequality_rows(thetas, seeds, epsilon, resolution, n, t_flow)
    print(f"{'theta':>7} {'seed':>5} {'eps':>9} {'deficit_norm(0)':>17} {'deficit_norm(T)':>17}  status")
    for r in rows:
        d0 = "-" if r["deficit_norm_t0"] is None else f"{r['deficit_norm_t0']:.6e}"
        d1 = "-" if r["deficit_norm_final"] is None else f"{r['deficit_norm_final']:.6e}"
        eps = "-" if r["epsilon_used"] is None else f"{r['epsilon_used']:.4g}"
        print(f"{r['theta_degrees']:>7g} {r['seed']:>5d} {eps:>9} {d0:>17} {d1:>17}  {r['status']}")
    if out_dir is not None:
        path = Path(out_dir) / "inequality.csv"
        path.parent.mkdir(parents=True, exist_ok=True)
        with open(path, "w", newline="", encoding="utf-8") as fh:
            w = csv.DictWriter(fh, INEQUALITY_COLUMNS, lineterminator="\n")
            w.writeheader()
            w.writerows(rows)
    bad = [r for r in rows if r["status"] == "VIOLATED"]
    ok = sum(r["status"] == "ok" for r in rows)
    skipped = sum(r["status"].startswith("skipped") for r in rows)
    print(f"{len(rows)} rows: {ok} ok, {skipped} skipped, {len(bad)} violated (threshold {DEFICIT_TOL:g})")
    return EXIT_FAIL if bad else EXIT_OK


# -- sweep ---------------------------------------------------------------------

def _sweep_one(config, out_dir):
    try:
        code, summary = simulate(_with_out_dir(config, out_dir))
        return code, summary, ""
    except Exception as exc:  # isolate per-run failures
        return EXIT_FAIL, None, f"{type(exc).__name__}: {exc}"


def cmd_sweep(config_path, thetas, out_dir, workers=1, resolution=None):
    try:
        base = load_config(config_path)
        if resolution is not None:
            base = base.replace(grid=replace(base.grid, n_beta=resolution))
        thetas = thetas or (base.theta_degrees,)
        configs = [base.replace(theta_degrees=float(d)) for d in thetas]
    except (ConfigError, ValueError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    out = Path(out_dir)
    dirs = [out / _label(c.theta_degrees) for c in configs]
    if workers > 1 and len(configs) > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(_sweep_one, configs, dirs))
    else:
        results = [_sweep_one(c, d) for c, d in zip(configs, dirs)]

    table = []
    print(f"{'theta':>7} {'reason':>20} {'r_pred':>14} {'r_fit':>14} {'rel err':>10}")
    for cfg, (code, s, err) in zip(configs, results):
        if s is None:
            table.append({"theta_degrees": cfg.theta_degrees, "exit_code": code, "error": err})
            print(f"{cfg.theta_degrees:>7g} {'failed':>20}  {err}")
            continue
        table.append({"theta_degrees": cfg.theta_degrees, "exit_code": code,
                      "stop_reason": s["stop_reason"], "r_predicted": s["r_predicted"],
                      "r_fitted": s["r_fitted"], "r_rel_error": s["r_rel_error"]})
        print(f"{cfg.theta_degrees:>7g} {s['stop_reason']:>20} {s['r_predicted']:>14.8f} "
              f"{s['r_fitted']:>14.8f} {s['r_rel_error']:>10.2e}")
    write_json(out / "sweep.json", {"runs": table})
    codes = {r["exit_code"] for r in table} - {EXIT_OK}
    if not codes:
        return EXIT_OK
    return codes.pop() if len(codes) == 1 else EXIT_FAIL


# -- entry point ---------------------------------------------------------------

def build_parser():
    p = argparse.ArgumentParser(prog="capflow", description=__doc__.splitlines()[0])
    sub = p.add_subparsers(dest="command", required=True)

    c = sub.add_parser("cap-info", help="cap constants, closed form vs quadrature")
    c.add_argument("--theta", type=_theta_list, default=(90.0,), help="degrees, comma-separated")
    c.add_argument("--r", type=float, default=1.0)
    c.add_argument("--n", type=int, default=2)

    s = sub.add_parser("simulate", help="run one flow from a JSON config")
    s.add_argument("--config", required=True)
    s.add_argument("--out", help="directory for series.csv, summary.json and meshes")
    s.add_argument("--resolution", type=int, help="override grid.n_beta")

    v = sub.add_parser("verify-inequality", help="Minkowski deficit of seeded admissible data")
    v.add_argument("--theta", type=_theta_list, default=DEFAULT_THETAS)
    v.add_argument("--seeds", type=int, default=20)
    v.add_argument("--epsilon", type=float, default=0.05)
    v.add_argument("--resolution", type=int, default=128)
    v.add_argument("--n", type=int, default=2)
    v.add_argument("--t-flow", type=float, default=0.0, help="also report the deficit after this flow time")
    v.add_argument("--out")

    w = sub.add_parser("sweep", help="independent runs over a list of contact angles")
    w.add_argument("--config", required=True)
    w.add_argument("--theta", type=_theta_list)
    w.add_argument("--out", required=True)
    w.add_argument("--workers", type=int, default=1)
    w.add_argument("--resolution", type=int)
    return p


def main(argv=None):
    _setup_logging()
    args = build_parser().parse_args(argv)
    try:
        if args.command == "cap-info":
            return cmd_cap_info(args.theta, args.r, args.n)
        if args.command == "simulate":
            return cmd_simulate(args.config, args.out, args.resolution)
        if args.command == "verify-inequality":
            if args.seeds < 0:
                raise ValueError("--seeds must be >= 0")
            return cmd_verify_inequality(args.theta, args.seeds, args.epsilon, args.resolution,
                                         args.n, args.t_flow, args.out)
        if args.command == "sweep":
            if args.workers < 1:
                raise ValueError("--workers must be >= 1")
            return cmd_sweep(args.config, args.theta, args.out, args.workers, args.resolution)
    except (AngleError, ConfigError, ValueError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    return EXIT_FAIL


if __name__ == "__main__":
    sys.exit(main())
