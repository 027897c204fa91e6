"""Experiment orchestration: constants, ratio sweeps over u, limit assembly, reports."""

from __future__ import annotations

import csv
import io
import json
import math
import os
import time
from collections import Counter
from dataclasses import dataclass, field

import numpy as np

from . import constants as K
from .analytics import (ConstantSpec, LimitConstants, required_constants,
                        theoretical_ratio_limit)
from .config import ExperimentConfig
from .errors import ParisianError, SimulationQualityError
from .model import RegimeTag, classify_regime, local_exponents, optimizer_point, t_star
from .pathsim import NO_TILT, default_tilt, estimate_conditional_ratio, grid_for

CSV_HEADER = ["u", "p_classical", "p_parisian", "ratio", "ci_low", "ci_high", "n_steps", "seconds"]


class ConstantCache:
    """Estimates keyed by constant and estimation settings; counts real estimation calls."""

    def __init__(self):
        self._store: dict = {}
        self.calls: Counter = Counter()

    def get(self, spec: ConstantSpec, **kw) -> K.ConstantEstimate:
        key = spec.key + "|" + ",".join(f"{k}={kw[k]!r}" for k in sorted(kw) if k != "workers")
        if key not in self._store:
            self.calls[key] += 1
            self._store[key] = K.estimate_spec(spec, **kw)
        est = self._store[key]
        if est.name != spec.name:
            # same constant under another name (e.g. R_S = R_00 at zero windows)
            est = K.ConstantEstimate(**{**est.__dict__, "name": spec.name})
        return est


@dataclass
class ExperimentReport:
    regime: str
    params: dict
    rows: list = field(default_factory=list)
    theoretical_limit: float | None = None
    limit_stderr: float | None = None
    constants: list = field(default_factory=list)
    warnings: list = field(default_factory=list)
    errors: list = field(default_factory=list)
    config: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        return {
            "regime": self.regime, "params": self.params, "config": self.config,
            "theoretical_limit": self.theoretical_limit, "limit_stderr": self.limit_stderr,
            "constants": self.constants, "rows": self.rows,
            "warnings": self.warnings, "errors": self.errors,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "ExperimentReport":
        return cls(**{k: d[k] for k in ("regime", "params", "rows", "theoretical_limit",
                                        "limit_stderr", "constants", "warnings", "errors",
                                        "config") if k in d})


def classify(cfg: ExperimentConfig) -> dict:
    """Regime summary of the configured parameters (no simulation)."""
    p = cfg.params
    tag = classify_regime(p, cfg.tol).tag
    pts = optimizer_point(p, math.inf, cfg.tol)
    pts = pts if isinstance(pts, tuple) else (pts,)
    out = {
        "regime": tag.value,
        "t_star": t_star(p, cfg.tol),
        "optimizer": [{"s": x.s, "t": x.t, "q": x.q_value} for x in pts],
        "constants": [{"name": s.name, "key": s.key} for s in required_constants(p, cfg.tol)],
    }
    if not tag.dominated:
        rel = "diagonal" if tag in (RegimeTag.CASE_I, RegimeTag.CASE_II, RegimeTag.CASE_III) else "l_gt_k"
        le = local_exponents(p, rel, cfg.tol)
        out["local_exponents"] = {"relation": rel, "lambda1": le.lambda1, "lambda2": le.lambda2,
                                  "tau1": le.tau1, "tau4": le.tau4}
    return out


def _const_kwargs(spec: ConstantSpec, cfg: ExperimentConfig, specs) -> dict:
    kw = dict(n_paths=cfg.const_n_paths, seed=cfg.seed, exact_zero=cfg.exact_zero,
              workers=cfg.resolved_workers(), delta=cfg.const_delta)
    if spec.kind == "H":
        kw["delta_schedule"] = tuple(cfg.delta_ladder)
    else:
        kw["T_max"] = tuple(cfg.t_max)
    if spec.kind == "R":
        # both R constants on one grid and horizon so their ratio uses common random numbers
        S = [dict(s.args)[k] for s in specs if s.kind == "R" for k in ("S1", "S2")]
        pos = [x for x in S if x > 0]
        if kw["delta"] is None:
            kw["delta"] = K.default_delta(min(pos) if pos else 0.0)
        kw["horizon"] = K.common_horizon(cfg.t_max[-1], max(S), kw["delta"])
    return kw


def estimate_constants(cfg: ExperimentConfig, cache: ConstantCache | None = None):
    """``(LimitConstants, records, warnings)`` for the configured regime."""
    cache = cache or ConstantCache()
    p = cfg.params
    tag = classify_regime(p, cfg.tol).tag
    specs = required_constants(p, cfg.tol)
    lc = LimitConstants(tag)
    records, warnings = [], []
    for spec in specs:
        est = cache.get(spec, **_const_kwargs(spec, cfg, specs))
        lc.values[spec.name] = est.value
        lc.stderr[spec.name] = est.stderr
        rec = est.to_record()
        rec["key"] = spec.key
        records.append(rec)
        warnings.extend(est.warnings)
    return lc, records, warnings


def limit_with_stderr(cfg: ExperimentConfig, lc: LimitConstants,
                      keys: dict | None = None) -> tuple[float, float]:
    """Limit and its first-order standard error.

    Constants are treated as independent, except that names sharing a key
    in ``keys`` (name -> constant key) are one estimate and move together.
    """
    p = cfg.params
    val = theoretical_ratio_limit(p, lc, cfg.tol, cfg.convention)
    keys = keys or {}
    groups: dict = {}
    for name in lc.stderr:
        groups.setdefault(keys.get(name, name), []).append(name)
    var = 0.0
    for names in groups.values():
        se = lc.stderr[names[0]]
        if not se:
            continue
        v = lc.values[names[0]]
        h = 1e-6 * abs(v)
        bumped = LimitConstants(lc.tag, {**lc.values, **{n: v + h for n in names}}, lc.stderr)
        d = (theoretical_ratio_limit(p, bumped, cfg.tol, cfg.convention) - val) / h
        var += (d * se) ** 2
    return val, math.sqrt(var)


def record_keys(records) -> dict:
    return {r["name"]: r.get("key", r["name"]) for r in records}


def simulate(cfg: ExperimentConfig) -> tuple[list, list, list]:
    """Ratio sweep over ``cfg.u_list``: ``(rows, warnings, errors)``."""
    p = cfg.params
    rows, warnings, errors = [], [], []
    for u in cfg.u_list:
        t0 = time.perf_counter()
        try:
            grid = grid_for(p, u, cfg.m, cfg.min_steps)
            tilt = default_tilt(p, u, cfg.tol) if cfg.tilt else NO_TILT
            r = estimate_conditional_ratio(p, u, grid, cfg.n_paths, tilt, cfg.seed,
                                           overhang=cfg.overhang, richardson=cfg.richardson,
                                           workers=cfg.resolved_workers(), tol=cfg.tol)
        except SimulationQualityError as exc:
            errors.append({"u": u, "error": type(exc).__name__, "message": str(exc)})
            continue
        warnings.extend(f"u={u}: {d}" for d in r.diagnostics)
        rows.append({
            "u": float(u), "p_classical": float(r.p_classical), "p_parisian": float(r.p_parisian),
            "ratio": float(r.ratio), "ci_low": float(r.ci_low), "ci_high": float(r.ci_high),
            "n_steps": int(r.n_steps),
            "seconds": round(time.perf_counter() - t0, 3) if cfg.timing else None,
            "stderr": float(r.stderr), "classical_hits": r.classical_hits,
            "parisian_hits": r.parisian_hits,
        })
    return rows, warnings, errors


def run_experiment(cfg: ExperimentConfig, cache: ConstantCache | None = None,
                   constants: tuple | None = None) -> ExperimentReport:
    """Classify, estimate constants (cached), assemble the limit, run the sweep.

    ``constants`` may carry a precomputed ``(LimitConstants, records, warnings)``.
    """
    p = cfg.params
    tag = classify_regime(p, cfg.tol).tag
    rep = ExperimentReport(regime=tag.value, params=_params_dict(cfg), config=cfg.report_dict())
    try:
        lc, recs, warns = constants if constants is not None else estimate_constants(cfg, cache)
        rep.constants = recs
        rep.warnings.extend(warns)
        rep.theoretical_limit, rep.limit_stderr = limit_with_stderr(cfg, lc, record_keys(recs))
    except ParisianError as exc:
        rep.errors.append({"u": None, "error": type(exc).__name__, "message": str(exc)})
    rows, warns, errs = simulate(cfg)
    rep.rows = rows
    rep.warnings.extend(warns)
    rep.errors.extend(errs)
    return rep


def _params_dict(cfg: ExperimentConfig) -> dict:
    p = cfg.params
    return {"c1": p.c1, "c2": p.c2, "a": p.a, "rho": p.rho, "s1": p.s1, "s2": p.s2}


def _fmt(v) -> str:
    if v is None:
        return ""
    if isinstance(v, (int, np.integer)) and not isinstance(v, bool):
        return str(int(v))
    return repr(float(v))


def report_csv(rep: ExperimentReport) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(CSV_HEADER)
    for row in rep.rows:
        w.writerow([_fmt(row.get(k)) for k in CSV_HEADER])
    return buf.getvalue()


def _clean(x):
    if isinstance(x, float) and not math.isfinite(x):
        return None
    if isinstance(x, dict):
        return {k: _clean(v) for k, v in x.items()}
    if isinstance(x, (list, tuple)):
        return [_clean(v) for v in x]
    if isinstance(x, np.generic):
        return _clean(x.item())
    return x


def to_json(obj) -> str:
    return json.dumps(_clean(obj), indent=2, sort_keys=True) + "\n"


def report_json(rep: ExperimentReport) -> str:
    return to_json(rep.to_dict())


def emit_report(rep: ExperimentReport, out_dir: str, formats=("csv", "json"),
                stem: str = "report") -> list[str]:
    """Write ``<stem>.csv`` and/or ``<stem>.json`` into ``out_dir``; returns the paths."""
    os.makedirs(out_dir, exist_ok=True)
    paths = []
    for fmt in formats:
        if fmt == "csv":
            text = report_csv(rep)
        elif fmt == "json":
            text = report_json(rep)
        else:
            raise ValueError(f"unknown format {fmt!r}")
        path = os.path.join(out_dir, f"{stem}.{fmt}")
        with open(path, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)
        paths.append(path)
    return paths
