"""Counter-based random streams shared by the compiled and numpy kernels.

Every random number is a pure function of ``(seed, stream, path_index,
counter)``, so a path's draws never depend on how paths are split across
blocks or workers.  The 64-bit mixer is the SplitMix64 finalizer; normals
come from a 256-layer ziggurat whose tables are built here once and handed
to both kernel backends, which keeps the two backends draw-for-draw equal.
"""

from __future__ import annotations

import math

import numpy as np

GOLDEN = 0x9E3779B97F4A7C15
_M1 = 0xBF58476D1CE4E5B9
_M2 = 0x94D049BB133111EB
_PATH_MULT = 0xD1B54A32D192ED03
_MASK = (1 << 64) - 1

# attempts per normal slot; 64 consecutive ziggurat rejections has probability ~1e-120
ATTEMPTS = 64
# counters at and above this value are reserved for per-path setup draws
SETUP_COUNTER = 1 << 62

STREAM_PATHSIM = 1
STREAM_CONSTANTS = 2

ZIG_R = 3.6541528853610088
ZIG_V = 0.00492867323399
TWO_M53 = 2.0 ** -53


def _fmix(z: int) -> int:
    z = ((z ^ (z >> 30)) * _M1) & _MASK
    z = ((z ^ (z >> 27)) * _M2) & _MASK
    return z ^ (z >> 31)


def mix64(x: int) -> int:
    """SplitMix64 output for state ``x`` (scalar, exact integer arithmetic)."""
    return _fmix((x + GOLDEN) & _MASK)


def stream_key(seed: int, stream: int) -> int:
    return mix64((mix64(seed & _MASK) ^ (stream * GOLDEN)) & _MASK)


def path_keys(seed: int, stream: int, start: int, count: int) -> np.ndarray:
    """Per-path 64-bit keys for path indices ``start .. start+count-1``."""
    base = np.uint64(stream_key(seed, stream))
    idx = np.arange(start, start + count, dtype=np.uint64)
    with np.errstate(over="ignore"):
        return fmix_array(base ^ (idx * np.uint64(_PATH_MULT) + np.uint64(GOLDEN)))


def fmix_array(z: np.ndarray) -> np.ndarray:
    z = np.asarray(z, dtype=np.uint64)
    with np.errstate(over="ignore"):
        z = (z ^ (z >> np.uint64(30))) * np.uint64(_M1)
        z = (z ^ (z >> np.uint64(27))) * np.uint64(_M2)
    return z ^ (z >> np.uint64(31))


def draw(keys: np.ndarray, counters: np.ndarray) -> np.ndarray:
    """Raw 64-bit draws; broadcasts ``keys`` against ``counters``."""
    keys = np.asarray(keys, dtype=np.uint64)
    counters = np.asarray(counters, dtype=np.uint64)
    with np.errstate(over="ignore"):
        return fmix_array(keys + (counters + np.uint64(1)) * np.uint64(GOLDEN))


def to_unit(bits: np.ndarray) -> np.ndarray:
    """Top 53 bits as a double in [0, 1)."""
    return (bits >> np.uint64(11)).astype(np.float64) * TWO_M53


def to_unit_open(bits: np.ndarray) -> np.ndarray:
    """Top 53 bits as a double in (0, 1]."""
    return ((bits >> np.uint64(11)) + np.uint64(1)).astype(np.float64) * TWO_M53


def setup_uniforms(keys: np.ndarray, which: int = 0) -> np.ndarray:
    """One uniform in [0, 1) per path from the reserved setup counters."""
    return to_unit(draw(keys, np.uint64(SETUP_COUNTER + which)))


def _build_tables() -> tuple[np.ndarray, np.ndarray]:
    f = lambda x: math.exp(-0.5 * x * x)  # noqa: E731
    x = np.empty(257)
    x[0] = ZIG_V / f(ZIG_R)
    x[1] = ZIG_R
    for i in range(1, 255):
        x[i + 1] = math.sqrt(-2.0 * math.log(ZIG_V / x[i] + f(x[i])))
    x[256] = 0.0
    fx = np.array([f(v) for v in x])
    return x, fx


ZIG_X, ZIG_F = _build_tables()

_C1 = np.uint64(0x632BE59BD9B4E019)
_C2 = np.uint64(0x8CB92BA72F3D8DD7)


def normals(keys: np.ndarray, slots: np.ndarray) -> np.ndarray:
    """Standard normals for every (path key, slot) pair.

    Returns an array of shape ``(len(keys), len(slots))``.  Attempt ``k`` for
    a slot uses counter ``slot*ATTEMPTS + k``; the wedge and tail tests draw
    extra bits by re-mixing the attempt's word, exactly as the C kernel does.
    """
    keys = np.asarray(keys, dtype=np.uint64)[:, None]
    base = np.asarray(slots, dtype=np.uint64)[None, :] * np.uint64(ATTEMPTS)
    shape = (keys.shape[0], base.shape[1])
    out = np.empty(shape)
    todo = np.ones(shape, dtype=bool)
    kk = np.broadcast_to(keys, shape)
    bb = np.broadcast_to(base, shape)
    for attempt in range(ATTEMPTS):
        rows, cols = np.nonzero(todo)
        if rows.size == 0:
            break
        h = draw(kk[rows, cols], bb[rows, cols] + np.uint64(attempt))
        layer = (h & np.uint64(255)).astype(np.intp)
        neg = ((h >> np.uint64(8)) & np.uint64(1)).astype(bool)
        x = to_unit(h) * ZIG_X[layer]
        ok = x < ZIG_X[layer + 1]
        value = x.copy()

        rest = ~ok
        if rest.any():
            h2 = fmix_array(h[rest] ^ _C1)
            lay = layer[rest]
            xr = x[rest]
            vr = np.empty(xr.shape)
            okr = np.zeros(xr.shape, dtype=bool)

            tail = lay == 0
            if tail.any():
                h3 = fmix_array(h2[tail] ^ _C2)
                xt = -np.log(to_unit_open(h2[tail])) / ZIG_R
                yt = -np.log(to_unit_open(h3))
                okr[tail] = 2.0 * yt > xt * xt
                vr[tail] = ZIG_R + xt
            wedge = ~tail
            if wedge.any():
                lw = lay[wedge]
                xw = xr[wedge]
                v = to_unit(h2[wedge])
                okr[wedge] = ZIG_F[lw + 1] + v * (ZIG_F[lw] - ZIG_F[lw + 1]) < np.exp(-0.5 * xw * xw)
                vr[wedge] = xw
            ok[rest] = okr
            value[rest] = vr

        value = np.where(neg, -value, value)
        r, c = rows[ok], cols[ok]
        out[r, c] = value[ok]
        todo[r, c] = False
    if todo.any():
        raise RuntimeError("ziggurat exhausted its attempt budget")
    return out
