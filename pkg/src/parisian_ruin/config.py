"""Flat ``key = value`` experiment configuration.

One key per line, ``#`` starts a comment, lists are comma separated::

    c1 = 0
    c2 = 0
    a = 0.8
    rho = 0.1
    s1 = 1
    s2 = 1
    u_list = 2, 3, 4
    n_paths = 100000
    tilt = on
    seed = 7

Unknown keys and malformed values raise :class:`ParameterError` naming the key.
"""

from __future__ import annotations

import dataclasses
import math
import os
from dataclasses import dataclass, field

from .errors import ParameterError
from .model import DEFAULT_TOL, ModelParams

_TRUE = {"1", "true", "yes", "on"}
_FALSE = {"0", "false", "no", "off"}


def _bool(key: str, s: str) -> bool:
    v = s.strip().lower()
    if v in _TRUE:
        return True
    if v in _FALSE:
        return False
    raise ParameterError(key, f"expected on/off, got {s!r}")


def _float(key: str, s: str) -> float:
    try:
        v = float(s)
    except ValueError:
        raise ParameterError(key, f"expected a number, got {s!r}") from None
    if not math.isfinite(v):
        raise ParameterError(key, "must be finite")
    return v


def _int(key: str, s: str) -> int:
    try:
        return int(s.strip())
    except ValueError:
        raise ParameterError(key, f"expected an integer, got {s!r}") from None


def _floats(key: str, s: str) -> tuple:
    s = s.strip()
    if not s:
        return ()
    return tuple(_float(key, x) for x in s.split(","))


@dataclass(frozen=True)
class ExperimentConfig:
    """Everything one experiment needs; see the module docstring for the file format."""

    c1: float = 0.0
    c2: float = 0.0
    a: float = 1.0
    rho: float = 0.0
    s1: float = 0.0
    s2: float = 0.0
    u_list: tuple = ()
    n_paths: int = 100_000
    m: int = 16
    min_steps: int = 4096
    tilt: bool = True
    overhang: bool = False
    richardson: bool = False
    seed: int = 0
    workers: int | None = None
    output: str = "out"
    tol: float = DEFAULT_TOL
    convention: str = "consistent"
    const_n_paths: int = 100_000
    t_max: tuple = (8.0, 16.0, 32.0)
    delta_ladder: tuple = (16.0, 32.0, 64.0)
    const_delta: float | None = None
    exact_zero: bool = True
    timing: bool = False
    fail_on_warnings: bool = True
    params: ModelParams = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        object.__setattr__(self, "params",
                           ModelParams(self.c1, self.c2, self.a, self.rho, self.s1, self.s2))
        u = self.u_list
        if any(not x > 0 for x in u):
            raise ParameterError("u_list", "barrier levels must be positive")
        if any(b <= a for a, b in zip(u, u[1:])):
            raise ParameterError("u_list", "barrier levels must be strictly increasing")
        if self.n_paths < 10_000:
            raise ParameterError("n_paths", "need at least 10000 paths")
        if self.m < 8:
            raise ParameterError("m", "need at least 8 grid points per window")
        if self.min_steps < 2:
            raise ParameterError("min_steps", "need at least 2 steps")
        if self.seed < 0 or self.seed >= 2 ** 64:
            raise ParameterError("seed", "must be an unsigned 64-bit integer")
        if self.workers is not None and self.workers < 1:
            raise ParameterError("workers", "must be >= 1")
        if self.convention not in ("printed", "consistent"):
            raise ParameterError("convention", "expected 'printed' or 'consistent'")
        if self.const_n_paths < 2:
            raise ParameterError("const_n_paths", "need at least 2 paths")
        for key in ("t_max", "delta_ladder"):
            lv = getattr(self, key)
            if not lv or lv[0] <= 0 or any(b <= a for a, b in zip(lv, lv[1:])):
                raise ParameterError(key, "schedule must be positive and strictly increasing")
        if self.const_delta is not None and not self.const_delta > 0:
            raise ParameterError("const_delta", "must be positive")

    def resolved_workers(self) -> int:
        """Config value, else ``PARISIAN_WORKERS``, else 1."""
        if self.workers is not None:
            return self.workers
        env = os.environ.get("PARISIAN_WORKERS", "").strip()
        if env:
            n = _int("PARISIAN_WORKERS", env)
            if n < 1:
                raise ParameterError("PARISIAN_WORKERS", "must be >= 1")
            return n
        return 1

    def replace(self, **kw) -> "ExperimentConfig":
        return dataclasses.replace(self, **kw)

    def to_dict(self) -> dict:
        d = {f.name: getattr(self, f.name) for f in dataclasses.fields(self) if f.init}
        for k in ("u_list", "t_max", "delta_ladder"):
            d[k] = list(d[k])
        return d

    def report_dict(self) -> dict:
        """``to_dict`` without execution-only settings, so reports do not depend on them."""
        d = self.to_dict()
        for k in EXECUTION_KEYS:
            d.pop(k)
        return d


# settings that change how a run executes, never what it computes
EXECUTION_KEYS = ("workers", "output")

_PARSERS = {
    "c1": _float, "c2": _float, "a": _float, "rho": _float, "s1": _float, "s2": _float,
    "u_list": _floats, "n_paths": _int, "m": _int, "min_steps": _int, "tilt": _bool,
    "overhang": _bool, "richardson": _bool, "seed": _int, "workers": _int,
    "output": lambda k, s: s.strip(), "tol": _float, "convention": lambda k, s: s.strip(),
    "const_n_paths": _int, "t_max": _floats, "delta_ladder": _floats, "const_delta": _float,
    "exact_zero": _bool, "timing": _bool, "fail_on_warnings": _bool,
}
KEYS = tuple(_PARSERS)


def parse_config(text: str) -> ExperimentConfig:
    """Parse config text; later duplicates of a key are an error."""
    vals = {}
    for lineno, line in enumerate(text.splitlines(), 1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ParameterError(f"line {lineno}", f"expected 'key = value', got {line!r}")
        key, _, value = line.partition("=")
        key = key.strip()
        if key not in _PARSERS:
            raise ParameterError(key, "unknown configuration key")
        if key in vals:
            raise ParameterError(key, "given twice")
        vals[key] = _PARSERS[key](key, value)
    return ExperimentConfig(**vals)


def load_config(path: str) -> ExperimentConfig:
    with open(path, encoding="utf-8") as fh:
        return parse_config(fh.read())


def dump_config(cfg: ExperimentConfig) -> str:
    """Inverse of :func:`parse_config` (``None`` values are omitted)."""
    out = []
    for k, v in cfg.to_dict().items():
        if v is None:
            continue
        if isinstance(v, bool):
            v = "on" if v else "off"
        elif isinstance(v, list):
            v = ", ".join(repr(float(x)) for x in v)
        elif isinstance(v, float):
            v = repr(v)
        out.append(f"{k} = {v}")
    return "\n".join(out) + "\n"
