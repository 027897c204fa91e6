"""Backend selection and block orchestration for the path kernel.

The compiled extension is used when it imports; otherwise (or with
``PARISIAN_BACKEND=python``) the numpy implementation is used.  Paths are
processed in fixed-size blocks keyed by absolute path index, so results do
not depend on the block size or on the number of worker threads.
"""

from __future__ import annotations

import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Callable

import numpy as np

from . import _pykernels, rng

_compiled = None
if os.environ.get("PARISIAN_BACKEND", "").lower() != "python":
    try:
        from . import _kernels as _compiled
    except ImportError:  # pragma: no cover - depends on the build
        _compiled = None

BACKEND = "compiled" if _compiled is not None else "python"


def get_backend(name: str | None = None):
    """Kernel module for ``name`` ('compiled', 'python' or None for the default)."""
    name = name or BACKEND
    if name == "compiled":
        if _compiled is None:
            raise RuntimeError("compiled kernels are not available in this build")
        return _compiled
    if name == "python":
        return _pykernels
    raise ValueError(f"unknown backend {name!r}")


def resolve_workers(workers: int | None = None) -> int:
    if workers is None:
        workers = int(os.environ.get("PARISIAN_WORKERS", "1") or 1)
    return max(1, int(workers))


def normals(keys, slots, backend: str | None = None) -> np.ndarray:
    mod = get_backend(backend)
    keys = np.ascontiguousarray(keys, dtype=np.uint64)
    slots = np.ascontiguousarray(slots, dtype=np.uint64)
    return mod.normals(keys, slots, rng.ZIG_X, rng.ZIG_F)


@dataclass
class PathBatch:
    """Per-path kernel outputs, concatenated over blocks in path order."""

    sup: np.ndarray
    win: np.ndarray
    lse: np.ndarray
    bend: np.ndarray
    kstop: np.ndarray
    bstop: np.ndarray
    keys: np.ndarray
    tilt: tuple


TiltFn = Callable[[np.ndarray], tuple]


def no_tilt(keys: np.ndarray) -> tuple:
    n = len(keys)
    zi = np.zeros(n, dtype=np.int64)
    zf = np.zeros(n)
    return zi, zf, zi.copy(), zf.copy(), zf.copy()


def _default_block(M: int, ndim: int, backend: str) -> int:
    if backend == "compiled":
        return 2048
    # numpy holds several (paths, steps) float arrays at once
    return max(1, 400_000 // max(1, M * ndim))


def run_paths(seed: int, stream: int, n_paths: int, *, M: int, dt: float, ndim: int = 1,
              rho: float = 0.0, drift=(0.0, 0.0), prefix: int = 0, tilt: TiltFn | None = None,
              h=(0, 0), sup_limit=None, levels=None, theta=(0.0, 0.0), k_end: int | None = None,
              stop_level: float = math.inf, workers: int | None = None, block: int | None = None,
              start: int = 0, backend: str | None = None) -> PathBatch:
    """Simulate ``n_paths`` paths and return their functionals.

    ``tilt`` maps a block of path keys to the five per-path tilt arrays
    ``(idx_a, mu_a, idx_b, mu1b, mu2b)`` consumed by the kernel; it must be
    a pure function of the keys.  See ``_pykernels.path_functionals`` for
    the remaining arguments.
    """
    if ndim not in (1, 2):
        raise ValueError("ndim must be 1 or 2")
    if prefix and ndim != 1:
        raise ValueError("a negative-time prefix is only supported in one dimension")
    if M < 1:
        raise ValueError("need at least one step")
    backend = backend or BACKEND
    mod = get_backend(backend)
    tilt = tilt or no_tilt
    drift = np.ascontiguousarray(drift, dtype=np.float64)
    h = np.ascontiguousarray(h, dtype=np.int64)
    sup_limit = np.ascontiguousarray([M, M] if sup_limit is None else sup_limit, dtype=np.int64)
    levels = np.ascontiguousarray(np.zeros((2, 0)) if levels is None else levels, dtype=np.int64)
    if levels.ndim != 2 or levels.shape[0] != 2:
        raise ValueError("levels must have shape (2, nl)")
    if levels.shape[1] and np.any(np.diff(levels, axis=1) < 0):
        raise ValueError("levels must be sorted per coordinate")
    theta = np.ascontiguousarray(theta, dtype=np.float64)
    k_end = M if k_end is None else int(k_end)
    block = block or _default_block(M, ndim, backend)
    workers = resolve_workers(workers)

    def one(b0: int):
        cnt = min(block, n_paths - b0)
        keys = rng.path_keys(seed, stream, start + b0, cnt)
        tl = tuple(np.ascontiguousarray(x, dtype=dt_) for x, dt_ in
                   zip(tilt(keys), (np.int64, np.float64, np.int64, np.float64, np.float64)))
        out = mod.path_functionals(keys, M, dt, ndim, rho, drift, prefix, *tl, h, sup_limit,
                                   levels, theta, k_end, rng.ZIG_X, rng.ZIG_F, stop_level)
        return out, keys, tl

    starts = list(range(0, n_paths, block))
    if workers == 1 or len(starts) == 1:
        parts = [one(b) for b in starts]
    else:
        with ThreadPoolExecutor(max_workers=workers) as ex:
            parts = list(ex.map(one, starts))
    if not parts:
        nl = levels.shape[1]
        empty = (np.zeros((0, 2, 2)), np.zeros((0, 2, nl, 3)), np.zeros((0, 2)),
                 np.zeros((0, 2)), np.zeros(0, dtype=np.int64), np.zeros(0))
        return PathBatch(*empty, keys=np.zeros(0, dtype=np.uint64), tilt=no_tilt(np.zeros(0)))
    cat = [np.concatenate([p[0][i] for p in parts]) for i in range(6)]
    keys = np.concatenate([p[1] for p in parts])
    tl = tuple(np.concatenate([p[2][i] for p in parts]) for i in range(5))
    return PathBatch(*cat, keys=keys, tilt=tl)
