# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled path kernel.

Mirrors ``_pykernels.path_functionals`` operation for operation; see that
module for the meaning of every argument and output.
"""

import numpy as np
cimport numpy as cnp
from libc.math cimport exp, log, sqrt, INFINITY, NAN
from libc.stdint cimport uint64_t, int64_t

cnp.import_array()

cdef uint64_t GOLDEN = 0x9E3779B97F4A7C15ULL
cdef uint64_t M1 = 0xBF58476D1CE4E5B9ULL
cdef uint64_t M2 = 0x94D049BB133111EBULL
cdef uint64_t C1 = 0x632BE59BD9B4E019ULL
cdef uint64_t C2 = 0x8CB92BA72F3D8DD7ULL
cdef double TWO_M53 = 1.0 / 9007199254740992.0
cdef double ZIG_R = 3.6541528853610088
cdef int ATTEMPTS = 64


ctypedef union _bits:
    double d
    uint64_t u


cdef inline double _signed(double x, uint64_t h) noexcept nogil:
    # bit 8 of the draw selects the sign; branch-free since it is a coin flip
    cdef _bits b
    b.d = x
    b.u = b.u | (((h >> 8) & 1) << 63)
    return b.d


cdef inline uint64_t _fmix(uint64_t z) noexcept nogil:
    z = (z ^ (z >> 30)) * M1
    z = (z ^ (z >> 27)) * M2
    return z ^ (z >> 31)


cdef inline double _normal(uint64_t key, uint64_t slot, const double* X, const double* F) noexcept nogil:
    cdef uint64_t base = slot * ATTEMPTS
    cdef uint64_t h, h2, h3
    cdef int k, i
    cdef double x, xt, yt, v
    for k in range(ATTEMPTS):
        h = _fmix(key + (base + <uint64_t>k + 1) * GOLDEN)
        i = <int>(h & 255)
        x = (<double>(h >> 11)) * TWO_M53 * X[i]
        if x < X[i + 1]:
            return _signed(x, h)
        h2 = _fmix(h ^ C1)
        if i == 0:
            h3 = _fmix(h2 ^ C2)
            xt = -log((<double>((h2 >> 11) + 1)) * TWO_M53) / ZIG_R
            yt = -log((<double>((h3 >> 11) + 1)) * TWO_M53)
            if 2.0 * yt > xt * xt:
                v = ZIG_R + xt
                return _signed(v, h)
        else:
            v = (<double>(h2 >> 11)) * TWO_M53
            if F[i + 1] + v * (F[i] - F[i + 1]) < exp(-0.5 * x * x):
                return _signed(x, h)
    return NAN


def normals(const uint64_t[:] keys, const uint64_t[:] slots, const double[:] zig_x, const double[:] zig_f):
    cdef Py_ssize_t n = keys.shape[0], m = slots.shape[0], p, j
    out = np.empty((n, m))
    cdef double[:, :] o = out
    with nogil:
        for p in range(n):
            for j in range(m):
                o[p, j] = _normal(keys[p], slots[j], &zig_x[0], &zig_f[0])
    return out


cdef void _levels(const double* z, Py_ssize_t n, Py_ssize_t h, const Py_ssize_t* lim,
                  Py_ssize_t nl, double* out, Py_ssize_t* dq) noexcept nogil:
    # out[l] = max over starts s <= lim[l] of min(z[s..s+h]); lim sorted ascending
    cdef Py_ssize_t head = 0, tail = 0, e, s, li = 0
    cdef double best = -INFINITY, w
    while li < nl and lim[li] < 0:
        out[li] = -INFINITY
        li += 1
    for e in range(n):
        if li >= nl:
            break
        while tail > head and z[dq[tail - 1]] >= z[e]:
            tail -= 1
        dq[tail] = e
        tail += 1
        s = e - h
        if s < 0:
            continue
        while dq[head] < s:
            head += 1
        w = z[dq[head]]
        if w > best:
            best = w
        while li < nl and lim[li] <= s:
            out[li] = best
            li += 1
    while li < nl:
        out[li] = best
        li += 1


def path_functionals(const uint64_t[:] keys, Py_ssize_t M, double dt, int ndim, double rho,
                     const double[:] drift, Py_ssize_t prefix,
                     const int64_t[:] idx_a, const double[:] mu_a,
                     const int64_t[:] idx_b, const double[:] mu1b, const double[:] mu2b,
                     const int64_t[:] h, const int64_t[:] sup_limit, const int64_t[:, :] levels,
                     const double[:] theta, Py_ssize_t k_end,
                     const double[:] zig_x, const double[:] zig_f, double stop_level=INFINITY):
    cdef Py_ssize_t n = keys.shape[0], nl = levels.shape[1]
    cdef Py_ssize_t P = prefix, T = prefix + M + 1
    cdef Py_ssize_t p, k, m, c, l, pos, kfirst, nc, hc, jl, r, jr
    cdef double sdt = sqrt(dt), sr = sqrt(1.0 - rho * rho)
    cdef double z1, z2, inc1, inc2, b1, b2, bp, mx, acc, v, ma_dt, m1b_dt, m2b_dt, t
    cdef uint64_t key

    sup = np.full((n, 2, 2), np.nan)
    win = np.full((n, 2, nl, 3), np.nan)
    lse = np.zeros((n, 2))
    bend = np.zeros((n, 2))
    cdef double[:, :, :] o_sup = sup
    cdef double[:, :, :, :] o_win = win
    cdef double[:, :] o_lse = lse
    cdef double[:, :] o_bend = bend
    kstop = np.full(n, -1, dtype=np.int64)
    bstop = np.full(n, np.nan)
    cdef int64_t[:] o_kstop = kstop
    cdef double[:] o_bstop = bstop

    zbuf = np.empty((2, T))
    cbuf = np.empty(T)
    dqbuf = np.empty(T + 1, dtype=np.intp)
    limbuf = np.empty(nl, dtype=np.intp)
    outbuf = np.empty(nl)
    cdef double[:, :] Z = zbuf
    cdef double[:] Zc = cbuf
    cdef Py_ssize_t[:] dq = dqbuf
    cdef Py_ssize_t[:] lim = limbuf
    cdef double[:] lout = outbuf
    cdef const double* X = &zig_x[0]
    cdef const double* F = &zig_f[0]

    cdef double* z0
    cdef double* zz
    cdef double d0 = drift[0], d1 = drift[1], sa, sb
    cdef int64_t ia, ib, fstop
    cdef bint stopped
    if stop_level < INFINITY and not (ndim == 1 and P == 0 and nl == 0 and theta[0] == 0.0
                                      and sup_limit[0] == M and k_end == M):
        raise ValueError("stop_level needs a plain one-dimensional supremum run")
    if stop_level < INFINITY and M % 2:
        raise ValueError("stop_level needs an even number of steps")

    with nogil:
        for p in range(n):
            key = keys[p]
            b1 = 0.0
            b2 = 0.0
            z0 = &Z[0, 0]
            zz = &Z[1, 0]
            z0[P] = 0.0
            zz[P] = 0.0
            ma_dt = mu_a[p] * dt
            m1b_dt = mu1b[p] * dt
            m2b_dt = mu2b[p] * dt
            ia = idx_a[p]
            ib = idx_b[p]
            if k_end == 0:
                o_bend[p, 0] = 0.0
                o_bend[p, 1] = 0.0
            if stop_level < INFINITY:
                # tilt off after the first fine crossing; stop at the first even-step crossing
                fstop = -1
                stopped = False
                mx = 0.0
                acc = 0.0
                k = 0
                while k < M:
                    k += 1
                    z1 = _normal(key, <uint64_t>(2 * (k - 1)), X, F)
                    if fstop < 0:
                        sa = ma_dt if k <= ia else 0.0
                        sb = m1b_dt if k <= ib else 0.0
                    else:
                        sa = 0.0
                        sb = 0.0
                    b1 = b1 + (z1 * sdt + sa + sb)
                    v = b1 - d0 * (k * dt)
                    mx = v if v > mx else mx
                    if fstop < 0 and v > stop_level:
                        fstop = k
                        o_kstop[p] = k
                        o_bstop[p] = b1
                    if k % 2 == 0:
                        acc = v if v > acc else acc
                        if v > stop_level:
                            stopped = True
                            break
                if stopped and k < M:
                    # exact law of the untilted remainder
                    z1 = _normal(key, <uint64_t>(2 * M + 1), X, F)
                    b1 = b1 + sqrt((M - k) * dt) * z1
                o_sup[p, 0, 0] = mx
                o_sup[p, 0, 1] = acc
                o_bend[p, 0] = b1
                continue
            if ndim == 1:
                for k in range(1, M + 1):
                    z1 = _normal(key, <uint64_t>(2 * (k - 1)), X, F)
                    sa = ma_dt if k <= ia else 0.0
                    sb = m1b_dt if k <= ib else 0.0
                    b1 = b1 + (z1 * sdt + sa + sb)
                    z0[P + k] = b1 - d0 * (k * dt)
                    if k == k_end:
                        o_bend[p, 0] = b1
            else:
                for k in range(1, M + 1):
                    z1 = _normal(key, <uint64_t>(2 * (k - 1)), X, F)
                    z2 = _normal(key, <uint64_t>(2 * (k - 1) + 1), X, F)
                    sa = ma_dt if k <= ia else 0.0
                    sb = m1b_dt if k <= ib else 0.0
                    b1 = b1 + (z1 * sdt + sa + sb)
                    sb = m2b_dt if k <= ib else 0.0
                    b2 = b2 + (z2 * sdt + sb)
                    t = k * dt
                    z0[P + k] = b1 - d0 * t
                    zz[P + k] = (rho * b1 + sr * b2) - d1 * t
                    if k == k_end:
                        o_bend[p, 0] = b1
                        o_bend[p, 1] = b2
            bp = 0.0
            for m in range(1, P + 1):
                bp = bp + _normal(key, <uint64_t>(2 * M + 2 * (m - 1)), X, F) * sdt
                z0[P - m] = bp

            for c in range(ndim):
                zz = &Z[c, P]
                # classical supremum over k in [0, sup_limit], fine and even-k coarse
                mx = -INFINITY
                for k in range(0, sup_limit[c] + 1, 2):
                    mx = zz[k] if zz[k] > mx else mx
                o_sup[p, c, 1] = mx
                for k in range(1, sup_limit[c] + 1, 2):
                    mx = zz[k] if zz[k] > mx else mx
                o_sup[p, c, 0] = mx

                # windowed sup-inf, fine grid
                pos = P if c == 0 else 0
                for l in range(nl):
                    lim[l] = levels[c, l] + (P if c == 0 else 0)
                if c == 0:
                    _levels(&Z[0, 0], T, h[c], &lim[0], nl, &lout[0], &dq[0])
                else:
                    _levels(&Z[1, P], M + 1, h[c], &lim[0], nl, &lout[0], &dq[0])
                for l in range(nl):
                    o_win[p, c, l, 0] = lout[l]

                # coarser grids: every r-th k (r = 2, 4), aligned on k = 0
                for jr in range(1, 3):
                    r = 2 * jr
                    kfirst = -(P // r) * r if c == 0 else 0
                    nc = 0
                    k = kfirst
                    while k <= M:
                        Zc[nc] = Z[c, P + k]
                        nc += 1
                        k += r
                    hc = (h[c] + r - 1) // r
                    for l in range(nl):
                        jl = levels[c, l] - kfirst
                        if jl < 0:
                            lim[l] = -1
                        else:
                            lim[l] = jl // r
                        if lim[l] > nc - 1 - hc:
                            lim[l] = nc - 1 - hc
                    _levels(&Zc[0], nc, hc, &lim[0], nl, &lout[0], &dq[0])
                    for l in range(nl):
                        o_win[p, c, l, jr] = lout[l]

                # log-sum-exp of theta*Z over k in [0, M]
                if theta[c] != 0.0:
                    mx = -INFINITY
                    for k in range(0, M + 1):
                        v = theta[c] * Z[c, P + k]
                        if v > mx:
                            mx = v
                    acc = 0.0
                    for k in range(0, M + 1):
                        acc = acc + exp(theta[c] * Z[c, P + k] - mx)
                    o_lse[p, c] = mx + log(acc)
    return sup, win, lse, bend, kstop, bstop
