import math

import numpy as np
import pytest

from parisian_ruin import _pykernels, kernels, rng

HAVE_C = kernels.BACKEND == "compiled"
needs_c = pytest.mark.skipif(not HAVE_C, reason="compiled kernels not built")


def _args(n=24, M=300, ndim=2, P=0, seed=3):
    r = np.random.default_rng(seed)
    keys = rng.path_keys(seed, 2, 0, n)
    lv0 = [-P - 5, -P // 2, 0, 3, M // 3, M - 20, M + 50] if P else [-1, 0, 3, M // 3, M - 20, M + 50]
    lv1 = sorted(r.integers(-2, M + 10, len(lv0)).tolist())
    return dict(keys=keys, M=M, dt=1 / 128, ndim=ndim, rho=-0.4, drift=np.array([1.0, 0.8]), prefix=P,
                idx_a=r.integers(0, M, n).astype(np.int64), mu_a=r.random(n),
                idx_b=r.integers(0, M, n).astype(np.int64), mu1b=r.random(n), mu2b=r.random(n),
                h=np.array([11, 6], dtype=np.int64), sup_limit=np.array([M - 11, M - 3], dtype=np.int64),
                levels=np.array([lv0, lv1], dtype=np.int64), theta=np.array([1.0, 2.0] if ndim == 2 else [1.5, 0.0]),
                k_end=M - 7, zig_x=rng.ZIG_X, zig_f=rng.ZIG_F)


def _brute(a):
    """Rebuild every path from the raw normals and evaluate the functionals with loops."""
    n, M, dt, P = len(a["keys"]), a["M"], a["dt"], a["prefix"]
    sd = math.sqrt(dt)
    rho = a["rho"]
    nl = a["levels"].shape[1]
    sup = np.full((n, 2, 2), np.nan)
    win = np.full((n, 2, nl, 3), np.nan)
    lse = np.zeros((n, 2))
    bend = np.zeros((n, 2))
    for i in range(n):
        z = rng.normals(a["keys"][i:i + 1], np.arange(2 * M + 2 * P, dtype=np.uint64))[0]
        b1 = np.zeros(M + 1)
        b2 = np.zeros(M + 1)
        for k in range(1, M + 1):
            d1 = z[2 * (k - 1)] * sd
            d1 += a["mu_a"][i] * dt if k <= a["idx_a"][i] else 0.0
            d1 += a["mu1b"][i] * dt if k <= a["idx_b"][i] else 0.0
            b1[k] = b1[k - 1] + d1
            if a["ndim"] == 2:
                d2 = z[2 * (k - 1) + 1] * sd + (a["mu2b"][i] * dt if k <= a["idx_b"][i] else 0.0)
                b2[k] = b2[k - 1] + d2
        t = np.arange(M + 1) * dt
        bend[i] = b1[a["k_end"]], b2[a["k_end"]]
        pre = np.cumsum(z[2 * M + 2 * np.arange(P)] * sd)[::-1] if P else np.zeros(0)
        paths = [(np.concatenate([pre, b1 - a["drift"][0] * t]), -P)]
        if a["ndim"] == 2:
            paths.append((rho * b1 + math.sqrt(1 - rho * rho) * b2 - a["drift"][1] * t, 0))
        for c, (zc, k0) in enumerate(paths):
            at = lambda k: zc[k - k0]  # noqa: E731
            sl = a["sup_limit"][c]
            sup[i, c, 0] = max(at(k) for k in range(0, sl + 1))
            sup[i, c, 1] = max(at(k) for k in range(0, sl + 1, 2))
            h = a["h"][c]
            for jr, r in enumerate((1, 2, 4)):
                kfirst = -((-k0) // r) * r
                hc = (h + r - 1) // r
                starts = range(kfirst, M - hc * r + 1, r)
                for j, lv in enumerate(a["levels"][c]):
                    vals = [min(at(s + m * r) for m in range(hc + 1)) for s in starts if s <= lv]
                    win[i, c, j, jr] = max(vals) if vals else -np.inf
            th = a["theta"][c]
            if th:
                v = th * np.array([at(k) for k in range(M + 1)])
                lse[i, c] = v.max() + np.log(np.exp(v - v.max()).sum())
    return sup, win, lse, bend


@pytest.mark.parametrize("ndim,P", [(1, 0), (1, 37), (2, 0)])
def test_python_kernel_matches_brute_force(ndim, P):
    a = _args(ndim=ndim, P=P)
    sup, win, lse, bend, kstop, _ = _pykernels.path_functionals(**a)
    bs, bw, bl, bb = _brute(a)
    assert np.allclose(sup[:, :ndim], bs[:, :ndim], rtol=0, atol=1e-12)
    assert np.allclose(win[:, :ndim], bw[:, :ndim], rtol=0, atol=1e-12)
    assert np.allclose(lse, bl, rtol=1e-12, atol=1e-12)
    assert np.allclose(bend, bb, rtol=0, atol=1e-12)
    assert np.all(kstop == -1)


def test_levels_brute_force():
    r = np.random.default_rng(1)
    z = r.standard_normal((3, 50))
    for h in (0, 1, 4, 49, 60):
        lims = np.array([-1, 0, 10, 45, 60])
        out = _pykernels._levels(z, h, lims)
        bf = np.full_like(out, -np.inf)
        for j, L in enumerate(lims):
            s = [z[:, s0:s0 + h + 1].min(1) for s0 in range(0, min(L, 50 - h - 1) + 1)]
            if s:
                bf[:, j] = np.max(s, axis=0)
        assert np.array_equal(out, bf)


def test_windowed_values_monotone_in_level():
    a = _args(ndim=2)
    _, win, _, _, _, _ = _pykernels.path_functionals(**a)
    w = np.where(np.isfinite(win), win, -1e300)
    assert np.all(np.diff(w, axis=2) >= 0)


@needs_c
@pytest.mark.parametrize("ndim,P", [(1, 0), (1, 37), (2, 0)])
def test_backends_identical(ndim, P):
    a = _args(n=64, M=1000, ndim=ndim, P=P, seed=11)
    from parisian_ruin import _kernels
    c = _kernels.path_functionals(**a)
    p = _pykernels.path_functionals(**a)
    for name, x, y in zip(("sup", "win", "lse", "bend", "kstop", "bstop"), c, p):
        if name == "lse":
            assert np.allclose(x, y, rtol=1e-13), name
        else:
            assert np.array_equal(x, y, equal_nan=True), name


def _stop_args(n=200, M=512, seed=5):
    keys = rng.path_keys(seed, 1, 0, n)
    ia = np.full(n, M, dtype=np.int64)
    z0 = np.zeros(n, dtype=np.int64)
    zf = np.zeros(n)
    return (keys, M, 1 / M, 1, 0.0, np.array([1.0, 0]), 0, ia, zf + 3.0, z0, zf, zf,
            np.array([0, 0], dtype=np.int64), np.array([M, 0], dtype=np.int64),
            np.zeros((2, 0), dtype=np.int64), np.zeros(2), M, rng.ZIG_X, rng.ZIG_F)


def _reference_for(args, kstop):
    # plain run whose tilt ends where the stop-mode tilt was switched off
    ref = list(args)
    M = args[1]
    ref[7] = np.where(kstop >= 0, kstop, M).astype(np.int64)
    return _pykernels.path_functionals(*ref)


@pytest.mark.parametrize("level", [0.5, 2.0])
def test_stop_mode_matches_full_run(level):
    args = _stop_args()
    st = _pykernels.path_functionals(*args, stop_level=level)
    kstop = st[4]
    full = _reference_for(args, kstop)
    assert np.array_equal(st[0][:, 0] > level, full[0][:, 0] > level)
    fired = kstop >= 0
    assert fired.any() and not fired.all()
    # kstop is the first fine step above the level on the reference path
    M, dt = args[1], args[2]
    k = np.arange(1, M + 1)
    keys = args[0]
    z = rng.normals(keys, 2 * np.arange(M, dtype=np.uint64)) * math.sqrt(dt)
    b = np.cumsum(z + np.where(k <= args[7][:, None], 3.0 * dt, 0.0) + 0.0, axis=1)
    hit = (b - k * dt) > level
    first = np.where(hit.any(1), np.argmax(hit, 1) + 1, -1)
    assert np.array_equal(first, kstop)
    # paths that never cross at an even step run to the end untouched
    even = st[0][:, 0, 1] > level
    assert np.array_equal(st[3][~even], full[3][~even])


def test_stop_mode_endpoint_law():
    # after the even-step stop the endpoint is redrawn from its exact law: compare moments
    n, M = 20000, 64
    args = _stop_args(n, M, seed=9)
    st = _pykernels.path_functionals(*args, stop_level=0.5)
    full = _reference_for(args, st[4])
    s = st[0][:, 0, 1] > 0.5
    a, b = st[3][s, 0], full[3][s, 0]
    assert abs(a.mean() - b.mean()) < 5 * b.std() / math.sqrt(s.sum())
    assert a.std() == pytest.approx(b.std(), rel=0.05)


def test_stop_mode_rejects_other_runs():
    args = list(_stop_args())
    with pytest.raises(ValueError):
        _pykernels.path_functionals(*args[:15], np.ones(2), *args[16:], stop_level=1.0)


@needs_c
def test_stop_mode_backends_identical():
    from parisian_ruin import _kernels
    args = _stop_args()
    c = _kernels.path_functionals(*args, stop_level=2.0)
    p = _pykernels.path_functionals(*args, stop_level=2.0)
    assert all(np.array_equal(x, y, equal_nan=True) for x, y in zip(c, p))


@pytest.mark.parametrize("backend", ["python", pytest.param("compiled", marks=needs_c)])
def test_independent_of_block_and_workers(backend):
    kw = dict(seed=4, stream=1, n_paths=300, M=256, dt=1 / 256, ndim=2, rho=0.3, drift=(0.5, 0.2),
              h=(8, 8), levels=[[100, 200], [100, 200]], theta=(1.0, 0.0), backend=backend)
    ref = kernels.run_paths(**kw, block=300, workers=1)
    for block, workers in ((7, 1), (64, 3), (1000, 4)):
        out = kernels.run_paths(**kw, block=block, workers=workers)
        for f in ("sup", "win", "lse", "bend", "keys"):
            assert np.array_equal(getattr(ref, f), getattr(out, f), equal_nan=f != "keys"), (f, block, workers)


def test_run_paths_start_offset():
    kw = dict(seed=4, stream=1, M=64, dt=1 / 64, backend="python")
    a = kernels.run_paths(n_paths=50, **kw)
    b = kernels.run_paths(n_paths=20, start=30, **kw)
    assert np.array_equal(a.sup[30:], b.sup, equal_nan=True)


def test_run_paths_validation():
    with pytest.raises(ValueError):
        kernels.run_paths(1, 1, 10, M=10, dt=0.1, ndim=3)
    with pytest.raises(ValueError):
        kernels.run_paths(1, 1, 10, M=10, dt=0.1, ndim=2, prefix=3)
    with pytest.raises(ValueError):
        kernels.run_paths(1, 1, 10, M=10, dt=0.1, levels=[[5, 2], [0, 0]])
    with pytest.raises(ValueError):
        kernels.get_backend("fortran")
    empty = kernels.run_paths(1, 1, 0, M=10, dt=0.1, levels=[[1], [1]])
    assert empty.win.shape == (0, 2, 1, 3)


def test_resolve_workers_env(monkeypatch):
    monkeypatch.setenv("PARISIAN_WORKERS", "3")
    assert kernels.resolve_workers(None) == 3
    assert kernels.resolve_workers(2) == 2
    monkeypatch.delenv("PARISIAN_WORKERS")
    assert kernels.resolve_workers(None) == 1
