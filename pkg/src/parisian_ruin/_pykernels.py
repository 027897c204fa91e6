"""Pure numpy implementation of the path kernel.

This is the fallback used when the compiled extension is unavailable (or when
``PARISIAN_BACKEND=python``).  Every floating-point operation on path values
is ordered exactly as in ``_kernels.pyx`` so both backends produce the same
paths, suprema and windowed functionals bit for bit; the log-sum-exp
normalizer may differ in the last ulps because numpy sums pairwise.
"""

from __future__ import annotations

import math

import numpy as np
from scipy.ndimage import minimum_filter1d

from . import rng


def normals(keys, slots, zig_x=None, zig_f=None):
    return rng.normals(keys, slots)


def _levels(z: np.ndarray, h: int, lims: np.ndarray) -> np.ndarray:
    """Max over window starts ``s <= lim`` of ``min(z[:, s:s+h+1])`` per row.

    Returns shape ``(rows, len(lims))``; ``-inf`` where no start qualifies.
    """
    rows, n = z.shape
    out = np.full((rows, len(lims)), -np.inf)
    nstart = n - h
    if nstart <= 0 or len(lims) == 0:
        return out
    size = h + 1
    if size == 1:
        mins = z
    else:
        filt = minimum_filter1d(z, size=size, axis=1, mode="nearest")
        mins = filt[:, size // 2: size // 2 + nstart]
    acc = np.maximum.accumulate(mins, axis=1)
    for j, lim in enumerate(lims):
        e = min(int(lim), nstart - 1)
        if e >= 0:
            out[:, j] = acc[:, e]
    return out


def path_functionals(keys, M, dt, ndim, rho, drift, prefix, idx_a, mu_a, idx_b, mu1b, mu2b,
                     h, sup_limit, levels, theta, k_end, zig_x=None, zig_f=None, stop_level=math.inf):
    """Path functionals for one block of paths.

    Parameters
    ----------
    keys : uint64 array (n,)
        Per-path random keys.
    M : int
        Number of grid steps after time 0.
    dt : float
        Step length.
    ndim : {1, 2}
        Number of simulated coordinates.
    rho : float
        Correlation of the second coordinate with the first.
    drift : float array (2,)
        Linear drift subtracted from coordinate ``c``: ``Z_c = W_c - drift[c] * t``.
    prefix : int
        Steps of driftless negative-time Brownian motion prepended to
        coordinate 0 (only with ``ndim == 1``).
    idx_a, mu_a : arrays (n,)
        Added drift ``mu_a`` on B1 for steps ``k <= idx_a``.
    idx_b, mu1b, mu2b : arrays (n,)
        Added drifts on B1 and B2 for steps ``k <= idx_b``.
    h : int array (2,)
        Window length in steps per coordinate.
    sup_limit : int array (2,)
        Classical supremum is taken over ``k in [0, sup_limit]``.
    levels : int array (2, nl)
        Sorted start limits (in ``k`` units, may be negative for coordinate 0
        when ``prefix > 0``) for the windowed sup-inf ladder.
    theta : float array (2,)
        Weights of the log-sum-exp normalizer over ``k in [0, M]``; 0 skips it.
    k_end : int
        Step at which underlying ``(B1, B2)`` endpoints are recorded.
    stop_level : float, optional
        One-dimensional supremum runs only.  The added drifts are switched
        off after the first step above this level (``kstop``, a stopping
        time) and the path is abandoned at the first even step above it; its
        remaining increment to ``k_end`` is drawn in one piece from its exact
        law.  Both suprema are the running maxima up to that even step.

    Returns
    -------
    sup : (n, 2, 2) fine / coarse classical supremum
    win : (n, 2, nl, 3) windowed sup-inf per level on the grids of step dt, 2 dt, 4 dt
    lse : (n, 2) log-sum-exp normalizers
    bend : (n, 2) underlying endpoints at ``k_end``
    kstop, bstop : (n,) first step above ``stop_level`` and B1 there (-1 / nan if none)
    """
    keys = np.asarray(keys, dtype=np.uint64)
    n = keys.shape[0]
    P = int(prefix)
    levels = np.asarray(levels, dtype=np.int64)
    nl = levels.shape[1]
    if stop_level < math.inf and not (ndim == 1 and P == 0 and nl == 0 and theta[0] == 0.0
                                      and sup_limit[0] == M and k_end == M):
        raise ValueError("stop_level needs a plain one-dimensional supremum run")
    if stop_level < math.inf and M % 2:
        raise ValueError("stop_level needs an even number of steps")
    sdt = math.sqrt(dt)
    sr = math.sqrt(1.0 - rho * rho)
    k = np.arange(1, M + 1)
    t = k * dt

    sup = np.full((n, 2, 2), np.nan)
    win = np.full((n, 2, nl, 3), np.nan)
    lse = np.zeros((n, 2))
    bend = np.zeros((n, 2))
    kstop = np.full(n, -1, dtype=np.int64)
    bstop = np.full(n, np.nan)

    ia = np.asarray(idx_a)[:, None]
    ib = np.asarray(idx_b)[:, None]
    ma_dt = (np.asarray(mu_a) * dt)[:, None]
    m1b_dt = (np.asarray(mu1b) * dt)[:, None]
    m2b_dt = (np.asarray(mu2b) * dt)[:, None]

    if stop_level < math.inf:
        _stop_run(keys, M, dt, float(drift[0]), ia, ib, ma_dt, m1b_dt, stop_level,
                  sup, bend, kstop, bstop)
        return sup, win, lse, bend, kstop, bstop

    z1 = rng.normals(keys, 2 * np.arange(M, dtype=np.uint64))
    inc1 = z1 * sdt + np.where(k <= ia, ma_dt, 0.0) + np.where(k <= ib, m1b_dt, 0.0)
    del z1
    b1 = np.cumsum(inc1, axis=1)
    del inc1
    Z = [np.empty((n, P + M + 1)), None]
    Z[0][:, P] = 0.0
    Z[0][:, P + 1:] = b1 - drift[0] * t
    if ndim == 2:
        z2 = rng.normals(keys, 2 * np.arange(M, dtype=np.uint64) + 1)
        inc2 = z2 * sdt + np.where(k <= ib, m2b_dt, 0.0)
        del z2
        b2 = np.cumsum(inc2, axis=1)
        Z[1] = np.empty((n, M + 1))
        Z[1][:, 0] = 0.0
        Z[1][:, 1:] = (rho * b1 + sr * b2) - drift[1] * t
    else:
        b2 = np.zeros_like(b1)
    if 1 <= k_end <= M:
        bend[:, 0] = b1[:, k_end - 1]
        bend[:, 1] = b2[:, k_end - 1]
    del b1, b2
    if P > 0:
        zp = rng.normals(keys, 2 * M + 2 * np.arange(P, dtype=np.uint64))
        bp = np.cumsum(zp * sdt, axis=1)
        Z[0][:, :P] = bp[:, ::-1]


    for c in range(ndim):
        off = P if c == 0 else 0
        zc = Z[c]
        sl = int(sup_limit[c])
        sup[:, c, 0] = zc[:, off:off + sl + 1].max(axis=1)
        sup[:, c, 1] = zc[:, off:off + sl + 1:2].max(axis=1)

        if nl:
            win[:, c, :, 0] = _levels(zc, int(h[c]), levels[c] + off)
            for jr, r in ((1, 2), (2, 4)):
                kfirst = -(P // r) * r if c == 0 else 0
                coarse = zc[:, off + kfirst::r]
                nc = coarse.shape[1]
                hc = (int(h[c]) + r - 1) // r
                lims = []
                for lv in levels[c]:
                    jl = int(lv) - kfirst
                    lim = -1 if jl < 0 else jl // r
                    lims.append(min(lim, nc - 1 - hc))
                win[:, c, :, jr] = _levels(coarse, hc, np.array(lims))

        if theta[c] != 0.0:
            v = theta[c] * zc[:, off:off + M + 1]
            mx = v.max(axis=1)
            acc = np.exp(theta[c] * zc[:, off:off + M + 1] - mx[:, None]).sum(axis=1)
            lse[:, c] = mx + np.log(acc)
    return sup, win, lse, bend, kstop, bstop


def _stop_run(keys, M, dt, d0, ia, ib, ma_dt, m1b_dt, level, sup, bend, kstop, bstop):
    """Stop mode: the tilt is switched off after the first fine-grid step above
    ``level`` (a stopping time) and the path stops at the first even step above
    it, from where the endpoint is drawn in one piece."""
    n = len(keys)
    sdt = math.sqrt(dt)
    k = np.arange(1, M + 1)
    t = k * dt
    z = rng.normals(keys, 2 * np.arange(M, dtype=np.uint64)) * sdt
    # first pass with the tilt on throughout: identical up to the first crossing
    b = np.cumsum(z + np.where(k <= ia, ma_dt, 0.0) + np.where(k <= ib, m1b_dt, 0.0), axis=1)
    hit = (b - d0 * t) > level
    fany = hit.any(axis=1)
    sig = np.where(fany, np.argmax(hit, axis=1) + 1, M + 1)[:, None]
    b = np.cumsum(z + np.where((k <= ia) & (k <= sig), ma_dt, 0.0)
                  + np.where((k <= ib) & (k <= sig), m1b_dt, 0.0), axis=1)
    v = np.concatenate([np.zeros((n, 1)), b - d0 * t], axis=1)
    even = v[:, 2::2] > level
    cany = even.any(axis=1)
    kc = np.where(cany, 2 * (np.argmax(even, axis=1) + 1), M)
    rows = np.arange(n)
    fine = np.maximum.accumulate(v, axis=1)
    coarse = np.maximum.accumulate(v[:, ::2], axis=1)
    sup[:, 0, 0] = fine[rows, kc]
    sup[:, 0, 1] = coarse[rows, kc // 2]
    bend[:, 0] = b[rows, kc - 1]
    r = rows[cany & (kc < M)]
    if r.size:
        zr = rng.normals(keys[r], np.array([2 * M + 1], dtype=np.uint64))[:, 0]
        bend[r, 0] = b[r, kc[r] - 1] + np.sqrt((M - kc[r]) * dt) * zr
    f = rows[fany]
    kstop[f] = sig[f, 0]
    bstop[f] = b[f, sig[f, 0] - 1]
