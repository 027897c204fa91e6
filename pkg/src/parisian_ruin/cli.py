"""Command line interface: ``parisian-ruin {classify,constants,simulate,report}``.

Exit codes: 0 success, 2 parameter error, 3 simulation-quality problem
(underflow, no hits, unplateaued ladder when ``fail_on_warnings`` is on).
"""

from __future__ import annotations

import argparse
import json
import os
import sys

from . import harness
from .analytics import LimitConstants
from .config import load_config
from .errors import (AssemblyError, InconsistentBranchError, ParameterError,
                     SimulationQualityError)
from .model import classify_regime

EXIT_OK, EXIT_PARAM, EXIT_QUALITY = 0, 2, 3


def _parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="parisian-ruin",
                                 description="Parisian ruin asymptotics in a two-dimensional Brownian risk model")
    sub = ap.add_subparsers(dest="verb", required=True)

    def common(sp, fmt_default="json"):
        sp.add_argument("--config", required=True, help="flat key = value config file")
        sp.add_argument("--out", default=None, help="output directory (default: config 'output')")
        sp.add_argument("--format", choices=("csv", "json"), default=fmt_default)
        sp.add_argument("--seed", type=int, default=None, help="override the config seed (u64)")
        sp.add_argument("--workers", type=int, default=None, help="override the worker count")
        sp.add_argument("--tilt", choices=("on", "off"), default=None, help="override importance sampling")

    common(sub.add_parser("classify", help="regime, optimizer and required constants"))
    common(sub.add_parser("constants", help="estimate the constants of the regime"))
    common(sub.add_parser("simulate", help="conditional ratio sweep over u_list"), "csv")
    sp = sub.add_parser("report", help="constants + sweep + theoretical limit")
    common(sp, "csv")
    sp.add_argument("--constants", default=None, help="constants.json from the 'constants' verb")
    sp.add_argument("--simulation", default=None, help="simulate.json from the 'simulate' verb")
    return ap


def _config(args):
    cfg = load_config(args.config)
    kw = {}
    if args.seed is not None:
        kw["seed"] = args.seed
    if args.workers is not None:
        kw["workers"] = args.workers
    if args.tilt is not None:
        kw["tilt"] = args.tilt == "on"
    return cfg.replace(**kw) if kw else cfg


def _write(out_dir: str, name: str, text: str) -> str:
    os.makedirs(out_dir, exist_ok=True)
    path = os.path.join(out_dir, name)
    with open(path, "w", encoding="utf-8", newline="") as fh:
        fh.write(text)
    return path


def _load_constants(path: str, cfg):
    with open(path, encoding="utf-8") as fh:
        d = json.load(fh)
    tag = classify_regime(cfg.params, cfg.tol).tag
    if d.get("regime") != tag.value:
        raise AssemblyError(f"constants for {tag.value}", str(d.get("regime")))
    lc = LimitConstants(tag)
    for rec in d["constants"]:
        lc.values[rec["name"]] = rec["value"]
        lc.stderr[rec["name"]] = rec["stderr"]
    return lc, d["constants"], d.get("warnings", [])


def run(argv=None) -> int:
    args = _parser().parse_args(argv)
    cfg = _config(args)
    out = args.out or cfg.output
    if args.verb == "classify":
        text = harness.to_json(harness.classify(cfg))
        sys.stdout.write(text)
        if args.out:
            _write(out, "classify.json", text)
        return EXIT_OK
    if args.verb == "constants":
        lc, recs, warns = harness.estimate_constants(cfg)
        lim, se = harness.limit_with_stderr(cfg, lc, harness.record_keys(recs))
        doc = {"regime": lc.tag.value, "constants": recs, "warnings": warns,
               "theoretical_limit": lim, "limit_stderr": se}
        print(_write(out, "constants.json", harness.to_json(doc)))
        return EXIT_QUALITY if warns and cfg.fail_on_warnings else EXIT_OK
    if args.verb == "simulate":
        rows, warns, errs = harness.simulate(cfg)
        rep = harness.ExperimentReport(regime=classify_regime(cfg.params, cfg.tol).tag.value,
                                       params=harness._params_dict(cfg), rows=rows,
                                       warnings=warns, errors=errs, config=cfg.report_dict())
        for p in harness.emit_report(rep, out, (args.format,), stem="simulate"):
            print(p)
        if args.format != "json":
            harness.emit_report(rep, out, ("json",), stem="simulate")
        return EXIT_QUALITY if errs else EXIT_OK
    # report
    consts = _load_constants(args.constants, cfg) if args.constants else None
    if args.simulation:
        with open(args.simulation, encoding="utf-8") as fh:
            sim = harness.ExperimentReport.from_dict(json.load(fh))
        lc, recs, warns = consts if consts is not None else harness.estimate_constants(cfg)
        rep = harness.ExperimentReport(regime=sim.regime, params=sim.params, rows=sim.rows,
                                       constants=recs, warnings=list(warns) + sim.warnings,
                                       errors=sim.errors, config=cfg.report_dict())
        try:
            keys = harness.record_keys(recs)
            rep.theoretical_limit, rep.limit_stderr = harness.limit_with_stderr(cfg, lc, keys)
        except (AssemblyError, InconsistentBranchError) as exc:
            rep.errors.append({"u": None, "error": type(exc).__name__, "message": str(exc)})
    else:
        rep = harness.run_experiment(cfg, constants=consts)
    for p in harness.emit_report(rep, out, (args.format,)):
        print(p)
    if rep.errors:
        return EXIT_QUALITY
    if rep.warnings and cfg.fail_on_warnings:
        return EXIT_QUALITY
    return EXIT_OK


def main(argv=None) -> int:
    try:
        return run(argv)
    except ParameterError as exc:
        print(f"parameter error: {exc}", file=sys.stderr)
        return EXIT_PARAM
    except (AssemblyError, InconsistentBranchError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_PARAM
    except SimulationQualityError as exc:
        print(f"simulation quality error: {exc}", file=sys.stderr)
        return EXIT_QUALITY
    except OSError as exc:
        print(f"I/O error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
