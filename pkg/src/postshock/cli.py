"""Command-line entry point: ``postshock {forecast,loocv,simulate}``.

Settings are resolved as built-in defaults, then a ``--config`` JSON file,
then explicit flags.  The resolved settings are embedded in every report's
manifest, and a report (or its manifest) can be passed back as ``--config``
to replay the run.

Exit codes: 0 success, 2 input error, 3 numerical failure.
"""

from __future__ import annotations

import argparse
import json
import logging
import os
import sys

from . import io
from .bootstrap import BootstrapConfig, assess_all
from .errors import InputError, NumericalError
from .estimators import METHODS
from .loocv import LoocvConfig, loocv
from .simulate import SimConfig, run_monte_carlo

log = logging.getLogger("postshock")

PIPELINE_DEFAULTS = {
    "seed": 0,
    "bootstrap": "bf",
    "B": 200,
    "norm": 2.0,
    "standardize": True,
    "estimators": list(METHODS),
    "allow_degenerate": False,
}


def _norm(text):
    v = float(text)
    if not v >= 1:
        raise argparse.ArgumentTypeError("norm order must be >= 1 (or 'inf')")
    return v


def _estimators(text):
    ests = [e.strip() for e in text.split(",") if e.strip()]
    bad = [e for e in ests if e not in METHODS]
    if bad or not ests:
        raise argparse.ArgumentTypeError(f"estimators must be a comma list drawn from {METHODS}")
    return ests


def _common(p):
    p.add_argument("--config", help="JSON settings file (a previous report also works)")
    p.add_argument("--seed", type=int)
    p.add_argument("--bootstrap", choices=["bu", "bf"], type=str.lower)
    p.add_argument("--B", type=int, dest="B", help="bootstrap replicates")
    p.add_argument("--out-dir", default=".")
    p.add_argument("--format", choices=["json", "csv"], default="json")
    p.add_argument("-v", "--verbose", action="store_true")


def _pipeline(p):
    p.add_argument("--data", required=True, help="long-format panel CSV")
    p.add_argument("--meta", required=True, help="series metadata CSV")
    p.add_argument("--norm", type=_norm, help="norm order of the covariate match (default 2)")
    p.add_argument("--standardize", choices=["on", "off"])
    p.add_argument("--estimators", type=_estimators, help="comma list, e.g. adj,wadj")
    p.add_argument("--allow-degenerate", action="store_true", default=None,
                   help="resample donors whose residuals are all zero")


def build_parser():
    parser = argparse.ArgumentParser(prog="postshock", description=__doc__.split("\n")[0])
    sub = parser.add_subparsers(dest="command", required=True)

    f = sub.add_parser("forecast", help="estimate the shock and decide whether to adjust")
    _common(f)
    _pipeline(f)
    f.add_argument("--plot", action="store_true", help="also write plot-data CSV")

    lo = sub.add_parser("loocv", help="leave-one-out evaluation of the decision rule")
    _common(lo)
    _pipeline(lo)
    lo.add_argument("--k", type=int, help="hold out k random donors instead of all")

    s = sub.add_parser("simulate", help="Monte Carlo study on synthetic donor pools")
    _common(s)
    s.add_argument("--k", type=int, help="LOOCV draws per repetition")
    s.add_argument("--reps", type=int, dest="mc_reps", help="Monte Carlo repetitions")
    s.add_argument("--model", choices=["M1", "M21", "M22"])
    s.add_argument("--n", type=int)
    s.add_argument("--sigma", type=float)
    s.add_argument("--sigma-alpha", type=float, dest="sigma_alpha")
    s.add_argument("--workers", type=int, default=1, help="worker processes")
    return parser


def read_config(path):
    if path is None:
        return {}
    try:
        with open(path) as fh:
            cfg = json.load(fh)
    except OSError as exc:
        raise InputError(f"{path}: {exc.strerror or exc}") from None
    except json.JSONDecodeError as exc:
        raise InputError(f"{path}: invalid JSON ({exc})") from None
    if not isinstance(cfg, dict):
        raise InputError(f"{path}: settings must be a JSON object")
    if "manifest" in cfg:
        cfg = cfg["manifest"]
    if "config" in cfg and "command" in cfg:
        cfg = cfg["config"]
    return dict(cfg)


def _merge(defaults, cfg, args, keys):
    out = dict(defaults)
    unknown = set(cfg) - set(keys)
    if unknown:
        raise InputError(f"unknown settings {sorted(unknown)}")
    out.update(cfg)
    for k in keys:
        v = getattr(args, k, None)
        if v is not None:
            out[k] = v
    if isinstance(out.get("standardize"), str):
        out["standardize"] = out["standardize"] == "on"
    return out


def _bootstrap_config(s):
    return BootstrapConfig(
        procedure=s["bootstrap"],
        B=s["B"],
        seed=s["seed"],
        estimators=tuple(s["estimators"]),
        norm_order=float(s["norm"]),
        standardize=bool(s["standardize"]),
        allow_degenerate=bool(s["allow_degenerate"]),
    )


def _out(args, name):
    os.makedirs(args.out_dir, exist_ok=True)
    return os.path.join(args.out_dir, f"{name}.{args.format}")


def cmd_forecast(args):
    keys = list(PIPELINE_DEFAULTS)
    s = _merge(PIPELINE_DEFAULTS, read_config(args.config), args, keys)
    bcfg = _bootstrap_config(s)
    pool = io.load_panel(args.data, args.meta)
    res = assess_all(pool, bcfg)
    manifest = io.make_manifest("forecast", s, bcfg.seed, [args.data, args.meta])
    path = _out(args, "forecast")
    if args.format == "json":
        io.dump_json(io.assessment_report(pool, res, manifest), path)
    else:
        io.write_csv(io.assessment_rows(res), path, manifest)
    if args.plot:
        io.write_csv(io.plot_rows(pool, res), os.path.join(args.out_dir, "forecast_plot.csv"))
    print(path)
    return 0


def cmd_loocv(args):
    defaults = dict(PIPELINE_DEFAULTS, k=None)
    s = _merge(defaults, read_config(args.config), args, list(defaults))
    bcfg = _bootstrap_config(s)
    if s["k"] is None:
        lcfg = LoocvConfig("full", 0, seed=bcfg.seed, bootstrap=bcfg)
    else:
        lcfg = LoocvConfig("k_draws", int(s["k"]), seed=bcfg.seed, bootstrap=bcfg)
    pool = io.load_panel(args.data, args.meta)
    rep = loocv(pool, lcfg)
    manifest = io.make_manifest("loocv", s, bcfg.seed, [args.data, args.meta])
    path = _out(args, "loocv")
    if args.format == "json":
        io.dump_json(io.loocv_report(rep, manifest), path)
    else:
        io.write_csv(io.loocv_rows(rep), path, manifest)
    print(path)
    return 0


def cmd_simulate(args):
    defaults = SimConfig().to_dict()
    defaults["grid"] = None
    cfg = read_config(args.config)
    if "bootstrap" in cfg:
        cfg["procedure"] = cfg.pop("bootstrap")
    if args.bootstrap is not None:
        args.procedure = {"bu": "Bu", "bf": "Bf"}[args.bootstrap]
    s = _merge(defaults, cfg, args, list(defaults))
    grid = s.pop("grid")
    if grid is not None and not (isinstance(grid, list) and all(isinstance(g, dict) for g in grid)):
        raise InputError("grid must be a list of setting overrides")
    sim = SimConfig.from_dict(s)
    if args.workers < 1:
        raise InputError("--workers must be positive")
    rows = run_monte_carlo(sim, grid, workers=args.workers)
    s["grid"] = grid
    manifest = io.make_manifest("simulate", s, sim.seed)
    path = _out(args, "simulation")
    if args.format == "json":
        io.dump_json(io.simulation_report(rows, manifest), path)
    else:
        io.write_csv([r.flat() for r in rows], path, manifest)
    print(path)
    return 0


COMMANDS = {"forecast": cmd_forecast, "loocv": cmd_loocv, "simulate": cmd_simulate}


def main(argv=None):
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return COMMANDS[args.command](args)
    except InputError as exc:
        print(f"postshock: input error: {exc}", file=sys.stderr)
        return 2
    except NumericalError as exc:
        print(f"postshock: numerical failure: {exc}", file=sys.stderr)
        return 3


if __name__ == "__main__":
    sys.exit(main())
