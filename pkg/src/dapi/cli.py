"""Command-line entry point: ``dapi {simulate,kkt,certify,check-graph} config.json``."""
from __future__ import annotations

import argparse
import json
import logging
import os
import sys
from pathlib import Path

from . import analysis as an
from . import graph as gr
from .config import parse_config
from .errors import ConvergenceFailure, DomainViolation, Infeasible, NonFiniteState, ParseError, ValidationError
from .sim import run_reduced, run_scenario, write_csv, write_plot_script

EXIT_OK, EXIT_INVALID, EXIT_DIVERGED, EXIT_NOT_CERTIFIED = 0, 1, 2, 3

log = logging.getLogger("dapi")


def _configure_logging():
    level = os.environ.get("DAPI_LOG", "info").lower()
    levels = {"error": logging.ERROR, "info": logging.INFO, "debug": logging.DEBUG}
    logging.basicConfig(level=levels.get(level, logging.INFO), stream=sys.stderr,
                        format="%(levelname)s %(name)s: %(message)s")


def cmd_simulate(args):
    cfg = parse_config(args.config)
    out_dir = Path(args.out or cfg.output or ".")
    out_dir.mkdir(parents=True, exist_ok=True)
    if args.reduced:
        traj = run_reduced(cfg)
        stem = f"{cfg.name}_reduced"
        summary = {"samples": len(traj), "final_eta": traj.eta[-1].tolist()}
    else:
        traj, metrics = run_scenario(cfg)
        stem = cfg.name
        summary = metrics.as_dict()
    csv_path = out_dir / f"{stem}.csv"
    write_csv(traj, csv_path)
    (out_dir / f"{stem}_summary.json").write_text(json.dumps(summary, indent=2))
    if args.plot_script:
        write_plot_script(csv_path, out_dir / f"plot_{stem}.py")
    log.info("wrote %s (%d samples)", csv_path, len(traj))
    print(json.dumps(summary, indent=2))
    return EXIT_OK


def _load_segments(cfg):
    d = float(cfg.loads.sum())
    segs = [(0.0, d)]
    for ev in cfg.events:
        d += float(ev.delta.sum())
        segs.append((ev.time, d))
    return segs


def cmd_kkt(args):
    cfg = parse_config(args.config)
    segments = []
    for t, d in _load_segments(cfg):
        sol = an.kkt_solve(cfg.bank, d)
        segments.append({"t_start": t, "d": d, "lambda_bar": sol.lambda_bar,
                         "u_bar": dict(zip(cfg.node_names, sol.u_bar.tolist()))})
    out = dict(segments[-1])
    out["segments"] = segments
    print(json.dumps(out, indent=2))
    return EXIT_OK


def cmd_certify(args):
    cfg = parse_config(args.config)
    report = an.certify(cfg)
    print(report.to_json(indent=2))
    return EXIT_OK if report.certified else EXIT_NOT_CERTIFIED


def cmd_check_graph(args):
    cfg = parse_config(args.config)
    reach = sorted(gr.find_globally_reachable(cfg.graph))
    print(json.dumps({"nodes": list(cfg.node_names),
                      "globally_reachable": [cfg.node_names[i] for i in reach]}, indent=2))
    return EXIT_OK


def build_parser():
    p = argparse.ArgumentParser(prog="dapi", description=__doc__)
    sub = p.add_subparsers(dest="command", required=True)
    s = sub.add_parser("simulate", help="run the closed loop and write a trajectory CSV")
    s.add_argument("config")
    s.add_argument("--out", help="output directory (default: config 'output' or cwd)")
    s.add_argument("--reduced", action="store_true", help="integrate the reduced slow dynamics only")
    s.add_argument("--plot-script", action="store_true", help="also write a matplotlib script")
    s.set_defaults(func=cmd_simulate)
    for name, func, text in (("kkt", cmd_kkt, "solve the optimal dispatch problem"),
                             ("certify", cmd_certify, "print the stability certificate"),
                             ("check-graph", cmd_check_graph, "list globally reachable nodes")):
        c = sub.add_parser(name, help=text)
        c.add_argument("config")
        c.set_defaults(func=func)
    return p


def main(argv=None):
    _configure_logging()
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except (ParseError, ValidationError, Infeasible, DomainViolation) as exc:
        log.error("%s", exc)
        return EXIT_INVALID
    except (NonFiniteState, ConvergenceFailure) as exc:
        log.error("integration failed: %s", exc)
        return EXIT_DIVERGED


if __name__ == "__main__":
    sys.exit(main())
