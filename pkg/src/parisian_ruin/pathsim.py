"""Correlated Brownian paths, classical and Parisian ruin detection, and the
importance-sampled conditional-ratio estimator.

Ruin of coordinate ``i`` is the event ``W_i(t) - c_i t > barrier_i`` at some
grid point, barriers ``(u, a u)``.  Parisian ruin of coordinate ``i`` needs
``h_i + 1`` consecutive grid points above the barrier, ``h_i`` being the
window ``S_i / u^2`` in steps; the joint Parisian event asks for both
coordinates, with windows placed independently.
"""

from __future__ import annotations

import math
import time
from dataclasses import dataclass, field

import numpy as np

from . import kernels, rng
from .analytics import quadratic_form, single_ruin_prob
from .errors import InsufficientSamplesError, ParameterError, SimulationQualityError
from .model import DEFAULT_TOL, ModelParams, classify_regime, t_star

Z95 = 1.959963984540054
SQRT2 = math.sqrt(2.0)


@dataclass(frozen=True)
class GridSpec:
    n_steps: int
    horizon: float = 1.0

    def __post_init__(self):
        if int(self.n_steps) < 2:
            raise ParameterError("n_steps", "need at least 2 steps")
        if not self.horizon > 0:
            raise ParameterError("horizon", "must be positive")
        object.__setattr__(self, "n_steps", int(self.n_steps))

    @property
    def dt(self) -> float:
        return self.horizon / self.n_steps


def window_steps(S: float, u: float, dt: float) -> int:
    """Window ``S/u^2`` in grid steps, rounded up (tolerating float noise)."""
    if S <= 0:
        return 0
    return int(math.ceil(S / (u * u) / dt - 1e-9))


def grid_for(p: ModelParams, u: float, m: int = 16, min_steps: int = 4096) -> GridSpec:
    """``n_steps = max(ceil(m u^2 / min_{S_i > 0} S_i), min_steps)``, rounded up to even.

    Evenness lets the resolution-halving (Richardson) check use every other
    point.
    """
    if m < 8:
        raise ParameterError("m", "need at least 8 points per window")
    pos = [s for s in (p.s1, p.s2) if s > 0]
    n = min_steps
    if pos:
        n = max(int(math.ceil(m * u * u / min(pos) - 1e-9)), min_steps)
    n += n % 2
    return GridSpec(n)


@dataclass(frozen=True)
class TiltConfig:
    """Constant added drifts on the independent drivers ``B1`` and ``B2`` over [0, 1]."""

    alpha: float = 0.0
    beta: float = 0.0
    enabled: bool = True

    @property
    def active(self) -> bool:
        return self.enabled and (self.alpha != 0.0 or self.beta != 0.0)

    def log_weight(self, b1_end, b2_end):
        """Likelihood ratio ``-alpha B1(1) + alpha^2/2 - beta B2(1) + beta^2/2``."""
        if not self.active:
            return np.zeros_like(np.asarray(b1_end, dtype=float))
        return (-self.alpha * np.asarray(b1_end) + 0.5 * self.alpha ** 2
                - self.beta * np.asarray(b2_end) + 0.5 * self.beta ** 2)


NO_TILT = TiltConfig(0.0, 0.0, False)


def tilt_target(p: ModelParams, u: float, tol: float = DEFAULT_TOL) -> tuple[float, float]:
    """Point ``(s, t)`` the default tilt aims at: ``(1, t*)`` or, when the
    optimizer comes as a mirror pair, the member with the smaller ``q``."""
    ts = t_star(p, tol)
    tag = classify_regime(p, tol).tag
    if ts <= 0:
        raise ParameterError("t*", "degenerate tilt target t* = 0")
    if tag.name in ("CASE_III", "CASE_V") and ts < 1.0:
        q1 = quadratic_form(p, u, 1.0, ts)
        q2 = quadratic_form(p, u, ts, 1.0)
        return (1.0, ts) if q1 <= q2 else (ts, 1.0)
    return 1.0, ts


def default_tilt(p: ModelParams, u: float, tol: float = DEFAULT_TOL) -> TiltConfig:
    """Drifts that make the tilted means of ``W1(s) - c1 s`` and
    ``W2(t) - c2 t`` equal the barriers at the target point ``(s, t)``.

    With ``s = 1`` this is ``alpha = u + c1`` and
    ``beta = (a u + c2 t - rho alpha t) / (sqrt(1 - rho^2) t)``.  In the
    dominated regimes ``beta`` is floored at 0: the first coordinate's tilt
    already carries the second past its barrier.
    """
    if not u > 0:
        raise ParameterError("u", "barrier level must be positive")
    s_t, t_t = tilt_target(p, u, tol)
    alpha = (u + p.c1 * s_t) / s_t
    beta = (p.a * u + p.c2 * t_t - p.rho * alpha * t_t) / (math.sqrt(1.0 - p.rho ** 2) * t_t)
    if classify_regime(p, tol).tag.dominated:
        beta = max(beta, 0.0)
    return TiltConfig(alpha, beta, True)


def _const_tilt(tilt: TiltConfig, n_steps: int):
    a = tilt.alpha if tilt.active else 0.0
    b = tilt.beta if tilt.active else 0.0

    def fn(keys):
        n = len(keys)
        idx = np.full(n, n_steps, dtype=np.int64)
        return idx, np.full(n, a), idx.copy(), np.zeros(n), np.full(n, b)

    return fn


# -- explicit paths ----------------------------------------------------------

@dataclass
class BivariatePath:
    """``W1``, ``W2`` at grid times ``k dt`` (rows are paths when 2-d).

    ``n_main`` is the grid index of time 1; later points (overhang) are
    simulated without tilt.
    """

    w1: np.ndarray
    w2: np.ndarray
    log_weight: np.ndarray
    dt: float
    n_main: int


def sample_paths(grid: GridSpec, rho: float, tilt: TiltConfig = NO_TILT, seed: int = 0,
                 n_paths: int = 1, start: int = 0, extra_steps: int = 0,
                 stream: int = rng.STREAM_PATHSIM, backend: str | None = None) -> BivariatePath:
    """Explicit paths with the same random numbers as the fast estimator.

    Path ``i`` uses key ``(seed, stream, start + i)``; the tilt adds
    ``(alpha dt, beta dt)`` to the increments of ``(B1, B2)`` up to time 1.
    """
    if not -1 < rho < 1:
        raise ParameterError("rho", "correlation must lie in (-1, 1)")
    n, dt = grid.n_steps, grid.dt
    M = n + int(extra_steps)
    keys = rng.path_keys(seed, stream, start, n_paths)
    z = kernels.normals(keys, np.arange(2 * M, dtype=np.uint64), backend=backend)
    sdt = math.sqrt(dt)
    k = np.arange(1, M + 1)
    a = tilt.alpha if tilt.active else 0.0
    b = tilt.beta if tilt.active else 0.0
    # same operation order as the compiled kernel
    inc1 = z[:, 0::2] * sdt + np.where(k <= n, a * dt, 0.0) + 0.0
    inc2 = z[:, 1::2] * sdt + np.where(k <= n, b * dt, 0.0)
    b1 = np.concatenate([np.zeros((n_paths, 1)), np.cumsum(inc1, axis=1)], axis=1)
    b2 = np.concatenate([np.zeros((n_paths, 1)), np.cumsum(inc2, axis=1)], axis=1)
    w2 = rho * b1 + math.sqrt(1.0 - rho * rho) * b2
    lw = tilt.log_weight(b1[:, n], b2[:, n])
    return BivariatePath(b1, w2, lw, dt, n)


def sample_path(grid: GridSpec, rho: float, tilt: TiltConfig = NO_TILT, seed: int = 0,
                index: int = 0, **kw) -> BivariatePath:
    """Single path ``index`` of the stream (1-d arrays)."""
    bp = sample_paths(grid, rho, tilt, seed, 1, index, **kw)
    return BivariatePath(bp.w1[0], bp.w2[0], bp.log_weight[0], bp.dt, bp.n_main)


@dataclass
class RuinOutcome:
    classical1: np.ndarray
    classical2: np.ndarray
    classical_joint: np.ndarray
    parisian_joint: np.ndarray
    parisian1: np.ndarray | None = None
    parisian2: np.ndarray | None = None
    diagnostics: list = field(default_factory=list)


def _exceed(path: BivariatePath, u: float, p: ModelParams):
    w1 = np.atleast_2d(path.w1)
    w2 = np.atleast_2d(path.w2)
    t = np.arange(w1.shape[1]) * path.dt
    return (w1 - p.c1 * t) > u, (w2 - p.c2 * t) > p.a * u


def detect_classical(path: BivariatePath, u: float, p: ModelParams) -> RuinOutcome:
    """Threshold exceedance per coordinate on ``[0, 1]`` (strict ``>``)."""
    e1, e2 = _exceed(path, u, p)
    n = path.n_main
    c1 = e1[:, :n + 1].any(axis=1)
    c2 = e2[:, :n + 1].any(axis=1)
    cj = c1 & c2
    return RuinOutcome(c1, c2, cj, np.zeros_like(cj))


def _run_flag(e: np.ndarray, h: int, last_start: int) -> np.ndarray:
    # any start s <= last_start with e[s..s+h] all True
    rows, L = e.shape
    if last_start < 0 or h + 1 > L:
        return np.zeros(rows, dtype=bool)
    cs = np.concatenate([np.zeros((rows, 1), dtype=np.int64), np.cumsum(e, axis=1)], axis=1)
    s = np.arange(0, min(last_start, L - h - 1) + 1)
    return ((cs[:, s + h + 1] - cs[:, s]) == h + 1).any(axis=1)


def detect_parisian(path: BivariatePath, u: float, p: ModelParams, overhang: bool = False) -> RuinOutcome:
    """Classical and Parisian flags.

    Without ``overhang`` a window must fit inside ``[0, 1]``; with it the
    window only has to start in ``[0, 1]`` and may run into the simulated
    continuation (``extra_steps`` of :func:`sample_paths`).
    """
    out = detect_classical(path, u, p)
    e1, e2 = _exceed(path, u, p)
    n = path.n_main
    h1 = window_steps(p.s1, u, path.dt)
    h2 = window_steps(p.s2, u, path.dt)
    if overhang:
        last1 = last2 = n
        L = e1.shape[1]
        if max(h1, h2) > L - 1 - n:
            raise ParameterError("extra_steps", "overhang detection needs the continuation to cover the window")
        e1, e2 = e1[:, :n + max(h1, h2) + 1], e2[:, :n + max(h1, h2) + 1]
    else:
        last1, last2 = n - h1, n - h2
        e1, e2 = e1[:, :n + 1], e2[:, :n + 1]
        if last1 < 0 or last2 < 0:
            out.diagnostics.append("window longer than horizon: Parisian ruin impossible")
    p1 = _run_flag(e1, h1, last1)
    p2 = _run_flag(e2, h2, last2)
    out.parisian1, out.parisian2 = p1, p2
    out.parisian_joint = p1 & p2
    return out


# -- fast estimators ---------------------------------------------------------

def _weighted_mean(lw: np.ndarray, ind: np.ndarray) -> tuple[float, float, float]:
    """``(log_shift, mean, sd)`` of ``exp(lw - shift) * ind``."""
    if not ind.any():
        return 0.0, 0.0, 0.0
    shift = float(lw[ind].max())
    x = np.where(ind, np.exp(lw - shift), 0.0)
    return shift, float(x.mean()), float(x.std(ddof=1)) if len(x) > 1 else 0.0


@dataclass
class RatioEstimate:
    ratio: float
    ci_low: float
    ci_high: float
    p_classical: float
    p_parisian: float
    stderr: float
    n_paths: int
    n_steps: int
    classical_hits: int
    parisian_hits: int
    implication_violations: int
    seconds: float = 0.0
    ratio_raw: float | None = None
    diagnostics: list = field(default_factory=list)


def _ratio_stats(lw, num, den, num_c=None, den_c=None):
    """Ratio of weighted means with delta-method stderr; Richardson when
    coarse indicators are supplied (per-path combination, then the ratio)."""
    if num_c is not None:
        g = 1.0 / (SQRT2 - 1.0)
        num_v = (SQRT2 * num - num_c) * g
        den_v = (SQRT2 * den - den_c) * g
    else:
        num_v, den_v = num.astype(float), den.astype(float)
    live = den_v != 0
    if not live.any():
        return None
    shift = float(lw[live].max())
    w = np.exp(lw - shift)
    N = w * num_v
    D = w * den_v
    mN, mD = N.mean(), D.mean()
    if mD <= 0:
        return None
    r = mN / mD
    n = len(lw)
    se = float(np.std(N - r * D, ddof=1) / (mD * math.sqrt(n))) if n > 1 else 0.0
    return r, se, shift, mN, mD


def estimate_conditional_ratio(p: ModelParams, u: float, grid: GridSpec | None = None,
                               n_paths: int = 10_000, tilt: TiltConfig | None = None,
                               seed: int = 0, overhang: bool = False, richardson: bool = False,
                               workers: int | None = None, backend: str | None = None,
                               block: int | None = None, check_implication: bool = True,
                               tol: float = DEFAULT_TOL) -> RatioEstimate:
    """Conditional Parisian ruin probability given classical joint ruin.

    One pass over shared, importance-weighted paths: numerator
    ``sum w * parisian_joint``, denominator ``sum w * classical_joint``.
    ``tilt=None`` uses :func:`default_tilt`; pass ``NO_TILT`` for plain
    sampling.  The interval is a delta-method 95% interval clipped to [0, 1].
    """
    if n_paths < 2:
        raise ParameterError("n_paths", "need at least 2 paths")
    if not u > 0:
        raise ParameterError("u", "barrier level must be positive")
    t0 = time.perf_counter()
    grid = grid or grid_for(p, u)
    tilt = default_tilt(p, u, tol) if tilt is None else tilt
    n, dt = grid.n_steps, grid.dt
    h1 = window_steps(p.s1, u, dt)
    h2 = window_steps(p.s2, u, dt)
    diagnostics = []
    if overhang:
        M = n + max(h1, h2)
        levels = [[n], [n]]
    else:
        M = n
        levels = [[n - h1], [n - h2]]
        if min(levels[0][0], levels[1][0]) < 0:
            diagnostics.append("window longer than horizon: Parisian ruin impossible")
    if richardson and n % 2:
        raise ParameterError("n_steps", "Richardson check needs an even number of steps")
    batch = kernels.run_paths(seed, rng.STREAM_PATHSIM, n_paths, M=M, dt=dt, ndim=2, rho=p.rho,
                              drift=(p.c1, p.c2), tilt=_const_tilt(tilt, n), h=(h1, h2),
                              sup_limit=(n, n), levels=levels, k_end=n, workers=workers,
                              block=block, backend=backend)
    barrier = np.array([u, p.a * u])
    cl_f = (batch.sup[:, :, 0] > barrier).all(axis=1)
    par_f = (batch.win[:, :, 0, 0] > barrier).all(axis=1)
    viol = int(np.count_nonzero(par_f & ~cl_f))
    if check_implication and viol:
        raise SimulationQualityError(f"{viol} paths are Parisian but not classical")
    lw = tilt.log_weight(batch.bend[:, 0], batch.bend[:, 1])
    if not np.all(np.isfinite(lw)):
        raise SimulationQualityError("non-finite importance weights")

    raw = _ratio_stats(lw, par_f, cl_f)
    if raw is None:
        raise InsufficientSamplesError(
            "no classical joint ruin among the simulated paths; enable the tilt or lower u")
    r, se, shift, mN, mD = raw
    est = (r, se)
    if richardson:
        cl_c = (batch.sup[:, :, 1] > barrier).all(axis=1)
        par_c = (batch.win[:, :, 0, 1] > barrier).all(axis=1)
        rich = _ratio_stats(lw, par_f, cl_f, par_c, cl_c)
        if rich is not None:
            est = (rich[0], rich[1])
    ratio = min(1.0, max(0.0, est[0]))
    lo = min(1.0, max(0.0, ratio - Z95 * est[1]))
    hi = min(1.0, max(0.0, ratio + Z95 * est[1]))
    return RatioEstimate(
        ratio=ratio, ci_low=lo, ci_high=hi,
        p_classical=math.exp(shift) * mD, p_parisian=math.exp(shift) * mN,
        stderr=est[1], n_paths=n_paths, n_steps=n,
        classical_hits=int(cl_f.sum()), parisian_hits=int(par_f.sum()),
        implication_violations=viol, seconds=time.perf_counter() - t0,
        ratio_raw=r, diagnostics=diagnostics)


@dataclass
class SupProbEstimate:
    """One-dimensional ``P(sup_{[0,1]} (W - c t) > u)`` estimate."""

    value: float
    stderr: float
    raw: float
    raw_stderr: float
    coarse: float
    closed_form: float
    n_paths: int
    n_steps: int
    seconds: float


def estimate_sup_prob(c: float, u: float, n_paths: int, n_steps: int, seed: int = 0,
                      theta: float | None = None, workers: int | None = None,
                      backend: str | None = None, block: int | None = None) -> SupProbEstimate:
    """Monte Carlo ``P(sup_{[0,1]} (W(t) - c t) > u)`` with a resolution-doubling check.

    Paths get the drift ``theta`` (default ``u + c``) until the first grid
    step above ``u``, a stopping time ``sigma``, so the likelihood ratio is
    ``exp(-theta B(sigma) + theta^2 sigma / 2)`` (``sigma = 1`` if never).
    Sampling stops at the first even step above ``u``.  ``raw`` uses the full
    grid, ``coarse`` every other point, and ``value`` is their per-path
    Richardson combination in ``sqrt(dt)``.  ``theta = 0`` is plain sampling.
    """
    if n_steps % 2:
        raise ParameterError("n_steps", "must be even")
    t0 = time.perf_counter()
    theta = (u + c) if theta is None else float(theta)
    M = n_steps
    dt = 1.0 / M

    def tilt_fn(keys):
        k = len(keys)
        return (np.full(k, M, dtype=np.int64), np.full(k, theta), np.zeros(k, dtype=np.int64),
                np.zeros(k), np.zeros(k))

    batch = kernels.run_paths(seed, rng.STREAM_PATHSIM, n_paths, M=M, dt=dt, ndim=1,
                              drift=(c, 0.0), tilt=tilt_fn, sup_limit=(M, 0), k_end=M,
                              stop_level=u, workers=workers, backend=backend, block=block)
    stopped = batch.kstop >= 0
    sigma = np.where(stopped, batch.kstop, M) * dt
    b_sigma = np.where(stopped, batch.bstop, batch.bend[:, 0])
    lw = -theta * b_sigma + 0.5 * theta * theta * sigma
    w = np.exp(lw)
    fine = (batch.sup[:, 0, 0] > u) * w
    coarse = (batch.sup[:, 0, 1] > u) * w
    rich = (SQRT2 * fine - coarse) / (SQRT2 - 1.0)
    sq = math.sqrt(n_paths)
    return SupProbEstimate(
        value=float(rich.mean()), stderr=float(rich.std(ddof=1) / sq),
        raw=float(fine.mean()), raw_stderr=float(fine.std(ddof=1) / sq),
        coarse=float(coarse.mean()), closed_form=single_ruin_prob(c, u, 1.0),
        n_paths=n_paths, n_steps=n_steps, seconds=time.perf_counter() - t0)
