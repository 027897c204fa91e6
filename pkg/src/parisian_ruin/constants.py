"""Monte Carlo estimation of the Pickands-type constants.

All four constants are exponential moments of a sup-inf functional

    X* = sup_{s'} inf_{s in [s', s' + S]} (B(s) - w1 s),

e.g. ``P(w1, w2, S) = E exp(w2 X*) / w2``.  Plain averaging is hopeless (the
moment is dominated by rare large suprema and has infinite variance once
``w2 >= w1``), so the default estimator samples from a mixture of
exponentially tilted measures: a grid time ``t_J`` is drawn with probability
proportional to ``E exp(w2 Z(t_J))``, ``Z(t) = B(t) - w1 t``, and the
Brownian motion gets the extra drift ``w2`` on ``[0, t_J]``.  The likelihood
ratio is ``G exp(-logsumexp_k w2 Z(t_k))`` with the normalizer ``G``, so each
path contributes ``G exp(w2 X* - lse) <= G``: bounded, hence finite
variance.  The identity holds for any functional of the path, which is what
makes the truncation ladder and the resolution-halving (Richardson) extrapolation
free: they reuse the same paths.
"""

from __future__ import annotations

import math
import time
from dataclasses import asdict, dataclass, field

import numpy as np
from scipy.special import logsumexp

from . import kernels, rng
from .analytics import ConstantSpec, exact_zero_window_constant
from .errors import ParameterError, SimulationQualityError

SQRT2 = math.sqrt(2.0)
DEFAULT_T_LADDER = (8.0, 16.0, 32.0)
DEFAULT_DELTA_LADDER = (16.0, 32.0, 64.0)
METHODS = ("is", "naive", "tail")


def default_delta(S: float) -> float:
    """``min(S, 1)/32`` with a floor of 1/256, then shrunk so that ``S`` is a
    whole multiple of ``4 delta``."""
    d0 = max(min(S, 1.0) / 32.0, 1.0 / 256.0)
    if S <= 0:
        return d0
    return S / (4 * math.ceil(S / (4 * d0) - 1e-9))


@dataclass
class ConstantEstimate:
    """Estimate of one constant with its truncation ladder.

    ``ladder`` holds one ``{"level", "value", "stderr"}`` entry per
    truncation level (``T_max`` or ``Delta``); ``value``/``stderr`` are the
    final estimate, ``raw_value`` the same without the Richardson step.
    """

    name: str
    parameters: dict
    value: float
    stderr: float
    schedule: list
    ladder: list = field(default_factory=list)
    raw_value: float | None = None
    raw_stderr: float | None = None
    warnings: list = field(default_factory=list)
    method: str = "is"
    n_paths: int = 0
    delta: float | None = None
    seed: int | None = None
    seconds: float = 0.0
    exact: bool = False

    def to_record(self) -> dict:
        rec = asdict(self)
        rec.pop("seconds")
        return rec


def _ladder(levels) -> list:
    if np.isscalar(levels):
        T = float(levels)
        return [T / 4.0, T / 2.0, T]
    lv = [float(x) for x in levels]
    if not lv or any(b <= a for a, b in zip(lv, lv[1:])) or lv[0] <= 0:
        raise ParameterError("schedule", "truncation schedule must be positive and strictly increasing")
    return lv


def _steps(x: float, delta: float) -> int:
    return int(math.ceil(x / delta - 1e-9))


def _quad(x: float, delta: float, mult: int = 4) -> int:
    """Steps for a length ``x``.  With ``mult=4`` (the Richardson grids) the
    count is the nearest multiple of 4, at least 4 when ``x > 0``, so the grids
    delta, 2 delta and 4 delta see the same length; with ``mult=1`` it is
    ``ceil(x / delta)``."""
    if x <= 0:
        return 0
    if mult == 1:
        return _steps(x, delta)
    return mult * max(1, int(math.floor(x / (mult * delta) + 0.5)))


def _grid(S: float, delta: float | None, richardson: bool) -> float:
    """Grid step: the default, or ``delta`` shrunk until ``S`` is a whole number
    of ``4 delta`` blocks when the estimate is extrapolated."""
    if delta is None:
        return default_delta(S)
    if not delta > 0:
        raise ParameterError("delta", "grid step must be positive")
    if richardson and S > 0:
        return S / (4 * math.ceil(S / (4 * delta) - 1e-9))
    return float(delta)


def _cover(T: float, S: float, delta: float, mult: int = 4) -> float:
    """Shortest horizon on the grid holding starts up to ``T`` plus a window ``S``."""
    return (_quad(T, delta, mult) + _quad(S, delta, mult)) * delta


def common_horizon(T: float, S: float, delta: float) -> float:
    """A horizon that holds starts up to ``T`` plus a window ``S`` under either
    step rounding; share it between estimates meant to use common random numbers."""
    return max(_cover(T, S, delta, 1), _cover(T, S, delta, 4))


def _mean_se(x: np.ndarray) -> tuple[float, float]:
    n = x.shape[0]
    return float(x.mean()), (float(x.std(ddof=1) / math.sqrt(n)) if n > 1 else 0.0)


def _geometric_sampler(log_w: np.ndarray, which: int = 0):
    """Tilt-index sampler for per-point log weights; returns (fn, log G)."""
    logG = float(logsumexp(log_w))
    cw = np.cumsum(np.exp(log_w - logG))
    cw[-1] = 1.0
    M = len(log_w) - 1

    def draw(keys):
        u = rng.setup_uniforms(keys, which)
        return np.minimum(np.searchsorted(cw, u, side="right"), M).astype(np.int64)

    return draw, logG


# V(d) = V + A sqrt(d) + B d on the grids d, 2d, 4d: weights that keep V only
_RICH = np.linalg.solve(np.array([[1.0, 1.0, 1.0], [1.0, SQRT2, 2.0], [1.0, 2.0, 4.0]]),
                        np.array([1.0, 0.0, 0.0]))


def _per_path(F: np.ndarray, richardson: bool) -> np.ndarray:
    """Fine-grid factor, or its extrapolation to the continuous path (last axis = grids)."""
    if not richardson:
        return F[..., 0]
    return F @ _RICH


def _plateau_warnings(name: str, ladder_vals: np.ndarray, per_path_last2: tuple) -> list:
    a, b = per_path_last2
    diff = b - a
    d, se = _mean_se(diff)
    last = float(ladder_vals[-1])
    out = []
    if abs(d) > 2.0 * se and last != 0 and abs(d) / abs(last) > 0.05:
        out.append(f"{name}: truncation ladder has not plateaued "
                   f"(last two levels differ by {d:.4g}, {abs(d) / max(se, 1e-300):.1f} stderr, "
                   f"{100 * abs(d) / abs(last):.1f}%)")
    return out


def _run_1d(w1, w2, S, levels_t, horizon, delta, n_paths, seed, method, prefix_window,
            workers, backend, block, stream, mult=4):
    """Shared driver: returns per-level (fine, coarse) per-path factors and log G."""
    h = _quad(S, delta, mult)
    M = _steps(horizon, delta)
    prefix = h if prefix_window else 0
    if prefix_window:
        # windows end in [0, T]: starts run from -h to T/delta - h
        lv = [_quad(T, delta, mult) - h for T in levels_t]
    else:
        lv = [_quad(T, delta, mult) for T in levels_t]
    if max(lv) + h > M:
        raise ParameterError("horizon", "path horizon shorter than the largest window start plus S")
    levels = np.array([lv, lv], dtype=np.int64)
    if method == "is":
        kappa = w2 * (w1 - 0.5 * w2)
        draw, logG = _geometric_sampler(-kappa * delta * np.arange(M + 1))

        def tilt(keys):
            J = draw(keys)
            n = len(keys)
            return J, np.full(n, float(w2)), np.zeros(n, dtype=np.int64), np.zeros(n), np.zeros(n)
        theta = (w2, 0.0)
    else:
        tilt, logG, theta = None, 0.0, (0.0, 0.0)
    b = kernels.run_paths(seed, stream, n_paths, M=M, dt=delta, ndim=1, drift=(w1, 0.0),
                          prefix=prefix, tilt=tilt, h=(h, 0), sup_limit=(M, 0), levels=levels,
                          theta=theta, k_end=M, workers=workers, backend=backend, block=block)
    X = b.win[:, 0, :, :]  # (n, levels, grids dt / 2dt / 4dt)
    if method == "is":
        with np.errstate(under="ignore"):
            F = np.exp(w2 * X - b.lse[:, 0][:, None, None])
        if np.any(F > 1.0 + 1e-9):
            raise SimulationQualityError("importance weight exceeds its bound")
    else:
        with np.errstate(over="ignore", under="ignore"):
            F = np.exp(w2 * X)
    return F, logG, X


def _tail_integral(X: np.ndarray, w2: float) -> tuple[float, float]:
    """``int P(X > x) e^{w2 x} dx`` from the empirical survival function.

    Integrates the step function exactly between order statistics; the
    stderr comes from splitting the sample into 20 batches.
    """
    def one(x):
        x = np.sort(x[np.isfinite(x)])
        n = len(x)
        if n == 0:
            return 0.0
        surv = 1.0 - np.arange(n) / n  # P(X > x) on [x_(i-1), x_(i))
        # region below the smallest sample contributes e^{w2 x_(0)} / w2
        total = math.exp(w2 * x[0]) / w2
        seg = (np.exp(w2 * x[1:]) - np.exp(w2 * x[:-1])) / w2
        total += float(np.sum(surv[1:] * seg))
        return total

    val = one(X)
    parts = [one(p) for p in np.array_split(X, 20)]
    return val, float(np.std(parts, ddof=1) / math.sqrt(len(parts)))


def _finish(name, params, Fl, scale, schedule, richardson, method, n_paths, delta, seed, t0,
            fit_inverse=False, X=None, w2=None, fit_levels=None):
    """Build the estimate from per-path factors ``Fl`` (n, levels, grids) times ``scale`` per level."""
    scale = np.asarray(scale, dtype=float)
    raw = Fl[:, :, 0] * scale
    use = _per_path(Fl, richardson) * scale
    ladder = []
    for j, lvl in enumerate(schedule):
        v, s = _mean_se(use[:, j])
        ladder.append({"level": lvl, "value": v, "stderr": s})
    warnings = _plateau_warnings(name, np.array([x["value"] for x in ladder]),
                                 (use[:, -2], use[:, -1])) if len(schedule) > 1 else []
    if fit_inverse:
        # value(D) = h + c / D over the last three levels; per-path linear combination
        k = min(3, len(schedule))
        D = np.asarray((fit_levels or schedule)[-k:], dtype=float)
        A = np.vstack([np.ones(k), 1.0 / D]).T
        coef = np.linalg.pinv(A)[0]
        comb = use[:, -k:] @ coef
        rcomb = raw[:, -k:] @ coef
        value, se = _mean_se(comb)
        raw_v, raw_se = _mean_se(rcomb)
    else:
        value, se = _mean_se(use[:, -1])
        raw_v, raw_se = _mean_se(raw[:, -1])
    if method == "tail":
        value, se = _tail_integral(X[:, -1, 0], w2)
        value *= scale[-1] * w2
        se *= scale[-1] * w2
        raw_v, raw_se = value, se
    if not value > 0:
        warnings.append(f"{name}: non-positive estimate")
    return ConstantEstimate(name=name, parameters=params, value=value, stderr=se,
                            schedule=list(schedule), ladder=ladder, raw_value=raw_v,
                            raw_stderr=raw_se, warnings=warnings, method=method,
                            n_paths=n_paths, delta=delta, seed=seed,
                            seconds=time.perf_counter() - t0)


def _check_method(method):
    if method not in METHODS:
        raise ParameterError("method", f"expected one of {METHODS}, got {method!r}")


def _exact(name, params, value, schedule, seed, delta):
    return ConstantEstimate(name=name, parameters=params, value=value, stderr=0.0,
                            schedule=list(schedule), raw_value=value, raw_stderr=0.0,
                            method="exact", delta=delta, seed=seed, exact=True)


def estimate_P(w1: float, w2: float, S: float, T_max=DEFAULT_T_LADDER, delta: float | None = None,
               n_paths: int = 100_000, seed: int = 0, *, method: str = "is",
               richardson: bool = True, horizon: float | None = None, exact_zero: bool = True,
               workers: int | None = None, backend: str | None = None,
               block: int | None = None) -> ConstantEstimate:
    """``P(w1, w2, S) = int P(X* > x) e^{w2 x} dx = E exp(w2 X*) / w2``.

    Window starts are truncated to ``[0, T]`` for each ``T`` of the ladder
    ``T_max`` (a number ``T`` means ``(T/4, T/2, T)``).  ``horizon`` fixes
    the simulated length (default ``T_max + S``); equal horizons and seeds
    give common random numbers across ``S``.  With ``exact_zero`` the
    closed form ``2 w1 / (w2 (2 w1 - w2))`` is returned at ``S = 0``.
    """
    _check_method(method)
    if not w1 > 0:
        raise ParameterError("w1", "drift must be positive")
    if not 0 < w2 < 2 * w1:
        raise ParameterError("w2", f"need 0 < w2 < 2 w1 for a finite constant, got w2={w2}, w1={w1}")
    if S < 0:
        raise ParameterError("S", "window must be >= 0")
    schedule = _ladder(T_max)
    delta = _grid(S, delta, richardson)
    mult = 4 if richardson else 1
    params = {"w1": w1, "w2": w2, "S": S}
    if exact_zero and S == 0:
        return _exact("P", params, exact_zero_window_constant(
            ConstantSpec("P", "P", (("w1", w1), ("w2", w2), ("S", 0.0)))), schedule, seed, delta)
    t0 = time.perf_counter()
    horizon = horizon if horizon is not None else _cover(schedule[-1], S, delta, mult)
    F, logG, X = _run_1d(w1, w2, S, schedule, horizon, delta, n_paths, seed, method, False,
                         workers, backend, block, rng.STREAM_CONSTANTS, mult)
    scale = math.exp(logG) / w2
    return _finish("P", params, F, [scale] * len(schedule), schedule, richardson, method,
                   n_paths, delta, seed, t0, X=X, w2=w2)


def estimate_H(w1: float, w2: float, S: float, delta_schedule=DEFAULT_DELTA_LADDER,
               delta: float | None = None, n_paths: int = 100_000, seed: int = 0, *,
               method: str = "is", richardson: bool = True, horizon: float | None = None,
               allow_general: bool = False, exact_zero: bool = True, workers: int | None = None,
               backend: str | None = None, block: int | None = None) -> ConstantEstimate:
    """``H(w1, w2, S) = lim_D (1/D) E exp(w2 X*_D) / w2`` with starts in ``[0, D]``.

    Each level of ``delta_schedule`` gives ``(1/D) E exp(w2 X*_D) / w2``;
    the value is the intercept of a fit ``h + c/D`` over the last three
    levels.  Only ``w2 = 2 w1`` is supported unless ``allow_general``.
    ``exact_zero`` returns ``H(b, 2b, 0) = b``.
    """
    _check_method(method)
    if not w1 > 0:
        raise ParameterError("w1", "drift must be positive")
    if not allow_general and not math.isclose(w2, 2.0 * w1, rel_tol=1e-12):
        raise ParameterError("w2", "H is only defined here for w2 = 2 w1 (pass allow_general to override)")
    if not 0 < w2 <= 2 * w1:
        raise ParameterError("w2", "need 0 < w2 <= 2 w1")
    if S < 0:
        raise ParameterError("S", "window must be >= 0")
    schedule = _ladder(delta_schedule)
    delta = _grid(S, delta, richardson)
    mult = 4 if richardson else 1
    params = {"w1": w1, "w2": w2, "S": S}
    if exact_zero and S == 0 and math.isclose(w2, 2.0 * w1, rel_tol=1e-12):
        return _exact("H", params, w1, schedule, seed, delta)
    t0 = time.perf_counter()
    horizon = horizon if horizon is not None else _cover(schedule[-1], S, delta, mult)
    F, logG, X = _run_1d(w1, w2, S, schedule, horizon, delta, n_paths, seed, method, False,
                         workers, backend, block, rng.STREAM_CONSTANTS, mult)
    # normalise by the start range actually simulated
    D_eff = [_quad(D, delta, mult) * delta for D in schedule]
    if any(b <= a for a, b in zip(D_eff, D_eff[1:])):
        raise ParameterError("delta_schedule", f"levels collapse on the grid delta = {delta:.4g}")
    scale = [math.exp(logG) / (w2 * D) for D in D_eff]
    return _finish("H", params, F, scale, schedule, richardson, method, n_paths, delta, seed, t0,
                   fit_inverse=True, X=X, w2=w2, fit_levels=D_eff)


def estimate_Cp(S1: float, T_max=DEFAULT_T_LADDER, delta: float | None = None,
                n_paths: int = 100_000, seed: int = 0, *, method: str = "is",
                richardson: bool = True, horizon: float | None = None, exact_zero: bool = True,
                workers: int | None = None, backend: str | None = None,
                block: int | None = None) -> ConstantEstimate:
    """``C_P = E exp(sup_{v >= 0} inf_{r in [v - S1, v]} Y(r))``.

    Time is measured in the doubled units ``v = 2 t`` of the defining
    formula, where ``Y(r) = B(r) - r`` for ``r >= 0`` and ``Y`` is a
    driftless Brownian motion for ``r < 0``; the window of length ``S1``
    may therefore reach back before 0.  The ladder truncates the window end
    ``v`` to ``[0, T]``.  ``C_P(0) = 2``.
    """
    _check_method(method)
    if S1 < 0:
        raise ParameterError("S1", "window must be >= 0")
    schedule = _ladder(T_max)
    delta = _grid(S1, delta, richardson)
    mult = 4 if richardson else 1
    params = {"S1": S1}
    if exact_zero and S1 == 0:
        return _exact("C_P", params, 2.0, schedule, seed, delta)
    t0 = time.perf_counter()
    horizon = horizon if horizon is not None else schedule[-1]
    F, logG, X = _run_1d(1.0, 1.0, S1, schedule, horizon, delta, n_paths, seed, method, True,
                         workers, backend, block, rng.STREAM_CONSTANTS, mult)
    scale = math.exp(logG)
    return _finish("C_P", params, F, [scale] * len(schedule), schedule, richardson, method,
                   n_paths, delta, seed, t0, X=X, w2=1.0)


def _pair_sampler(kappa1, kappa2, gamma, M, delta):
    """Sampler of ``(I, J)`` with ``pi_ij ~ exp(-k1 s_i - k2 t_j + g min(s_i, t_j))``.

    Draws ``I`` from its marginal and ``J`` given ``I`` from the two pieces
    ``j <= i`` and ``j > i``, each through cumulative sums.
    """
    t = np.arange(M + 1) * delta
    la = (gamma - kappa2) * t        # j <= i
    lb = -kappa2 * t                 # j > i, times exp(gamma s_i)
    sh = max(la.max(), lb.max())
    ea, eb = np.exp(la - sh), np.exp(lb - sh)
    CA = np.cumsum(ea)
    CB = np.cumsum(eb)
    SB = CB[-1] - CB                 # sum_{j > i}
    part_a = CA
    part_b = np.exp(gamma * t) * SB
    logm = -kappa1 * t + np.log(part_a + part_b) + sh
    logG = float(logsumexp(logm))
    cm = np.cumsum(np.exp(logm - logG))
    cm[-1] = 1.0

    def draw(keys):
        u0 = rng.setup_uniforms(keys, 0)
        u1 = rng.setup_uniforms(keys, 1)
        u2 = rng.setup_uniforms(keys, 2)
        I = np.minimum(np.searchsorted(cm, u0, side="right"), M)
        pa = part_a[I] / (part_a[I] + part_b[I])
        in_a = u1 < pa
        Ja = np.searchsorted(CA, u2 * CA[I], side="right")
        Jb = np.searchsorted(CB, CB[I] + u2 * SB[I], side="right")
        J = np.where(in_a, np.minimum(Ja, I), np.clip(Jb, I + 1, M))
        J = np.minimum(J, M)
        return I.astype(np.int64), J.astype(np.int64)

    return draw, logG


def estimate_R(S1: float, S2: float, a: float, rho: float, lambda1: float | None = None,
               lambda2: float | None = None, T_max=DEFAULT_T_LADDER, delta: float | None = None,
               n_paths: int = 100_000, seed: int = 0, *, method: str = "is",
               richardson: bool = True, horizon: float | None = None, exact_zero: bool = True,
               workers: int | None = None, backend: str | None = None,
               block: int | None = None) -> ConstantEstimate:
    """``R = E exp(lambda1 X* + lambda2 Y*) / (lambda1 lambda2)``.

    ``X*`` is the sup-inf of ``W1(s) - s`` with window ``S1`` and ``Y*``
    that of ``W2(t) - a t`` with window ``S2``, ``(W1, W2)`` correlated
    Brownian motions.  The tilts default to the diagonal-branch values
    ``((1 - a rho), (a - rho)) / (1 - rho^2)``.  The mixture tilt draws
    ``(s_I, t_J)`` jointly; its normalizer factorizes into one log-sum-exp
    per coordinate.
    """
    _check_method(method)
    if method == "tail":
        raise ParameterError("method", "the tail cross-check is one-dimensional only")
    if not -1 < rho < 1:
        raise ParameterError("rho", "correlation must lie in (-1, 1)")
    if not 0 < a <= 1:
        raise ParameterError("a", "barrier ratio must lie in (0, 1]")
    if not a > max(0.0, rho):
        raise ParameterError("a", f"need a > max(0, rho), got a={a}, rho={rho}")
    if S1 < 0 or S2 < 0:
        raise ParameterError("S1" if S1 < 0 else "S2", "window must be >= 0")
    lam1 = (1 - a * rho) / (1 - rho * rho) if lambda1 is None else float(lambda1)
    lam2 = (a - rho) / (1 - rho * rho) if lambda2 is None else float(lambda2)
    if not (0 < lam1 < 2 and 0 < lam2 < 2 * a):
        raise ParameterError("lambda", f"tilts ({lam1}, {lam2}) outside the finite range")
    schedule = _ladder(T_max)
    pos = [s for s in (S1, S2) if s > 0]
    delta = _grid(min(pos) if pos else 0.0, delta, richardson)
    mult = 4 if richardson else 1
    params = {"S1": S1, "S2": S2, "a": a, "rho": rho, "lambda1": lam1, "lambda2": lam2}
    if exact_zero and S1 == 0 and S2 == 0 and rho == 0:
        v = exact_zero_window_constant(ConstantSpec("R", "R", tuple(params.items())))
        return _exact("R", params, v, schedule, seed, delta)
    t0 = time.perf_counter()
    horizon = horizon if horizon is not None else _cover(schedule[-1], max(S1, S2), delta, mult)
    h1 = _quad(S1, delta, mult)
    h2 = _quad(S2, delta, mult)
    M = _steps(horizon, delta)
    lv = [_quad(T, delta, mult) for T in schedule]
    if max(lv) + max(h1, h2) > M:
        raise ParameterError("horizon", "path horizon shorter than the largest window start plus S")
    levels = np.array([lv, lv], dtype=np.int64)
    sr = math.sqrt(1 - rho * rho)
    if method == "is":
        k1 = lam1 - 0.5 * lam1 * lam1
        k2 = a * lam2 - 0.5 * lam2 * lam2
        draw, logG = _pair_sampler(k1, k2, lam1 * lam2 * rho, M, delta)

        def tilt(keys):
            I, J = draw(keys)
            n = len(keys)
            return I, np.full(n, lam1), J, np.full(n, lam2 * rho), np.full(n, lam2 * sr)
        theta = (lam1, lam2)
    else:
        tilt, logG, theta = None, 0.0, (0.0, 0.0)
    b = kernels.run_paths(seed, rng.STREAM_CONSTANTS, n_paths, M=M, dt=delta, ndim=2, rho=rho,
                          drift=(1.0, a), tilt=tilt, h=(h1, h2), sup_limit=(M, M), levels=levels,
                          theta=theta, k_end=M, workers=workers, backend=backend, block=block)
    X = b.win[:, 0, :, :]
    Y = b.win[:, 1, :, :]
    with np.errstate(under="ignore", over="ignore"):
        if method == "is":
            F = np.exp(lam1 * X + lam2 * Y - (b.lse[:, 0] + b.lse[:, 1])[:, None, None])
            if np.any(F > 1.0 + 1e-9):
                raise SimulationQualityError("importance weight exceeds its bound")
        else:
            F = np.exp(lam1 * X + lam2 * Y)
    scale = math.exp(logG) / (lam1 * lam2)
    return _finish("R", params, F, [scale] * len(schedule), schedule, richardson, method,
                   n_paths, delta, seed, t0)


def estimate_spec(spec: ConstantSpec, **kw) -> ConstantEstimate:
    """Estimate a constant described by :class:`ConstantSpec` (harness entry point)."""
    args = dict(spec.args)
    if spec.kind == "P":
        est = estimate_P(args["w1"], args["w2"], args["S"], **kw)
    elif spec.kind == "H":
        kw = dict(kw)
        if "T_max" in kw:
            kw.pop("T_max")
        b = args["b"]
        est = estimate_H(b, 2.0 * b, args["S"], **kw)
    elif spec.kind == "C_P":
        est = estimate_Cp(args["S"], **kw)
    elif spec.kind == "R":
        est = estimate_R(args["S1"], args["S2"], args["a"], args["rho"], args["lambda1"],
                         args["lambda2"], **kw)
    else:
        raise ParameterError("kind", f"unknown constant kind {spec.kind!r}")
    if est.name != spec.name:
        est.warnings = [spec.name + w[len(est.name):] if w.startswith(est.name + ":") else w
                        for w in est.warnings]
        est.name = spec.name
    return est
