"""Command-line entry point: ``kpplab <subcommand> [--config PATH] ...``."""
from __future__ import annotations

import argparse
import math
import os
import sys
import warnings

import numpy as np

from . import experiments, solver
from .config import ConfigError, RunConfig, default_config, load_config
from .diagnostics import CrossingSeries
from .floquet import degeneracy_exponent, tangency_residual
from .output import resolve_out_dir, write_csv, write_json

SUBCOMMANDS = ("dispersion", "front", "simulate", "theorem1", "theorem2", "theorem3",
               "steepness")

EXIT_PASS, EXIT_FAIL, EXIT_CONFIG = 0, 1, 2


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="kpplab", description="KPP fronts in periodic and close-to-periodic media.")
    sub = parser.add_subparsers(dest="command", metavar="subcommand")
    sub.required = True
    helps = {
        "dispersion": "principal eigenvalue curve, c* and lambda*",
        "front": "pulsating front of a given speed",
        "simulate": "Cauchy problem with snapshots and a front log",
        "theorem1": "convergence to the minimal front, periodic medium",
        "theorem2": "spreading in a close-to-periodic medium",
        "theorem3": "profile convergence in a close-to-periodic medium",
        "steepness": "steepness and intersection-number suite",
    }
    for name in SUBCOMMANDS:
        p = sub.add_parser(name, help=helps[name])
        p.add_argument("--config", help="TOML configuration file")
        p.add_argument("--out", help="output directory")
        p.add_argument("--threads", type=int, default=1, help="cap on scenario parallelism")
        p.add_argument("--strict", action="store_true", help="promote warnings to errors")
    return parser


def _run_dispersion(cfg: RunConfig, out, threads):
    disp = cfg.dispersion(threads=threads)
    h = cfg.sha256
    write_csv(os.path.join(out, "dispersion.csv"), ("lambda", "mu", "c_of_lambda"),
              zip(disp.lambdas, disp.mu, disp.c_values), h)
    summary = {"c_star": disp.c_star, "lambda_star": disp.lambda_star, "mu_zero": disp.mu_zero,
               "tangency_residual": tangency_residual(disp), "n_cell": disp.n_cell}
    offsets = cfg.scenario["offsets"]
    if offsets:
        n_exp, k = degeneracy_exponent(disp, offsets)
        summary.update({"N_fit": n_exp, "K_fit": k})
    write_json(os.path.join(out, "dispersion.json"), summary, h)
    return True


def _run_front(cfg: RunConfig, out):
    prof, summary = experiments.front_report(cfg)
    h = cfg.sha256
    for j in range(prof.n_phase):
        write_csv(os.path.join(out, f"front_phase_{j:02d}.csv"), ("z", "U"),
                  zip(prof.x, prof.phases[j]), h)
    passed = summary["periodicity_residual"] <= cfg.scenario["tol_front"] * prof.p_norm
    summary["passed"] = passed
    write_json(os.path.join(out, "front.json"), summary, h)
    return passed


def _run_simulate(cfg: RunConfig, out):
    model = cfg.build_model()
    grid = cfg.build_grid()
    x = grid.x
    disp = cfg.dispersion()
    stat = solver.stationary_upper(model, x)
    u0 = experiments.make_datum(cfg, x, stat.values, disp)
    scheme = cfg.build_scheme(grid.dx, "dirichlet_p")
    level = stat.at(0.0) / 2 if grid.x_min <= 0 <= grid.x_max else stat.values[0] / 2
    observers = [solver.FrontTracker(level, every=cfg.run["track_dt"])]
    if cfg.run["snapshot_dt"] is not None:
        observers.append(solver.Snapshots(cfg.run["snapshot_dt"]))
    final, log = solver.run(solver.SolutionState(0.0, u0, grid), model, scheme,
                            float(cfg.run["t_end"]), observers, p_left=stat.values[0])
    h = cfg.sha256
    write_csv(os.path.join(out, "simulate_log.csv"), ("t", "front_pos", "mass"),
              log["front"], h)
    for t, u in log.get("snapshots", []):
        write_csv(os.path.join(out, f"snapshot_t{t:012.6f}.csv"), ("x", "u"), zip(x, u), h)
    series = CrossingSeries.from_log(level, log["front"])
    summary = {"t_end": final.t, "level": level, "c_star": disp.c_star,
               "n_points": grid.n_points, "dx": grid.dx, "dt": scheme.dt,
               "final_front_pos": float(series.positions[-1]) if series.positions.size else math.nan,
               "max_u": float(np.max(final.u)), "min_u": float(np.min(final.u))}
    write_json(os.path.join(out, "simulate.json"), summary, h)
    return True


SCENARIOS = {
    "theorem1": experiments.theorem1_periodic,
    "theorem2": experiments.theorem2_ctp_spreading,
    "theorem3": experiments.theorem3_ctp_profile,
    "steepness": experiments.steepness_suite,
}


def write_report(report, out, config_hash):
    name = report.scenario
    write_json(os.path.join(out, f"{name}_report.json"), report.to_dict(), config_hash)
    for key, (cols, rows) in report.traces.items():
        write_csv(os.path.join(out, f"{name}_{key}.csv"), cols, rows, config_hash)


def dispatch(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_CONFIG if exc.code not in (0, None) else EXIT_PASS
    try:
        cfg = load_config(args.config) if args.config else default_config()
    except ConfigError as exc:
        for err in exc.errors:
            print(f"config error: {err}", file=sys.stderr)
        return EXIT_CONFIG
    except OSError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    out = resolve_out_dir(args.out, cfg.output_dir)
    with warnings.catch_warnings():
        if args.strict:
            warnings.simplefilter("error")
        try:
            if args.command == "dispersion":
                passed = _run_dispersion(cfg, out, args.threads)
            elif args.command == "front":
                passed = _run_front(cfg, out)
            elif args.command == "simulate":
                passed = _run_simulate(cfg, out)
            else:
                report = SCENARIOS[args.command](cfg)
                write_report(report, out, cfg.sha256)
                for flag in report.asserted:
                    state = "PASS" if report.flags[flag] else "FAIL"
                    print(f"{state} {args.command}.{flag}")
                passed = report.passed
        except ConfigError as exc:
            for err in exc.errors:
                print(f"config error: {err}", file=sys.stderr)
            return EXIT_CONFIG
        except (ArithmeticError, RuntimeError, ValueError, Warning) as exc:
            print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
            return EXIT_FAIL
    print(f"outputs written to {out}")
    return EXIT_PASS if passed else EXIT_FAIL


def main():
    sys.exit(dispatch())


if __name__ == "__main__":
    main()
