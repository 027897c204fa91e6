"""Closed-form probabilities, the quadratic form and its grid minimizer, the
piecewise drift constants of the ``a = 1, rho = A_1`` case, and assembly of
the limiting conditional Parisian ruin probability for every regime.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.special import log_ndtr, ndtr

from .errors import AssemblyError, ParameterError
from .model import (DEFAULT_TOL, ModelParams, OptimizerPoint, RegimeTag, classify_regime,
                    local_exponents, t_star)


def std_normal(x):
    """Standard normal ``(Phi(x), Psi(x), phi(x))``; scalar or array input.

    ``Phi`` and ``Psi`` are both evaluated through ``ndtr`` (erf/erfc based,
    relative error well below 1e-14 across the double range), so each tail
    keeps full relative accuracy.
    """
    xa = np.asarray(x, dtype=np.float64)
    if not np.all(np.isfinite(xa)):
        raise ParameterError("x", "must be finite")
    cdf = ndtr(xa)
    sf = ndtr(-xa)
    pdf = np.exp(-0.5 * xa * xa) / math.sqrt(2.0 * math.pi)
    if xa.ndim == 0:
        return float(cdf), float(sf), float(pdf)
    return cdf, sf, pdf


def single_ruin_prob(c: float, u: float, T: float = 1.0) -> float:
    """``P(sup_{t <= T} (W(t) - c t) > u)`` for standard Brownian ``W``.

    ``Phi(-u/sqrt(T) - c sqrt(T)) + exp(-2 c u) Phi(-u/sqrt(T) + c sqrt(T))``,
    with the second term formed in log space.
    """
    if not T > 0:
        raise ParameterError("T", f"horizon must be positive, got {T}")
    if u < 0:
        raise ParameterError("u", f"barrier must be >= 0, got {u}")
    rt = math.sqrt(T)
    first = float(ndtr(-u / rt - c * rt))
    second = math.exp(-2.0 * c * u + float(log_ndtr(-u / rt + c * rt)))
    return min(1.0, max(0.0, first + second))


def sup_tail(x, c: float, T: float):
    """Vectorized ``P(sup_{[0,T]} (B - c t) > x)`` for ``x >= 0`` (1 for ``x < 0``)."""
    x = np.asarray(x, dtype=np.float64)
    rt = math.sqrt(T)
    xp = np.maximum(x, 0.0)
    out = ndtr(-xp / rt - c * rt) + np.exp(-2.0 * c * xp + log_ndtr(-xp / rt + c * rt))
    return np.where(x < 0, 1.0, np.minimum(out, 1.0))


def _q_values(p: ModelParams, u: float, s, t):
    s = np.asarray(s, dtype=np.float64)
    t = np.asarray(t, dtype=np.float64)
    a1 = 1.0 + p.c1 * s / u
    a2 = p.a + p.c2 * t / u
    m = np.minimum(s, t)
    det = s * t - p.rho * p.rho * m * m
    return (a1 * a1 * t - 2.0 * p.rho * m * a1 * a2 + s * a2 * a2) / det


def quadratic_form(p: ModelParams, u: float, s, t):
    """``q(s, t) = b^T Sigma_{s,t}^{-1} b`` with ``b = (1 + c1 s/u, a + c2 t/u)``.

    ``Sigma_{s,t}`` is the covariance of ``(W1(s), W2(t))``.  Accepts arrays.
    """
    sa = np.asarray(s, dtype=np.float64)
    ta = np.asarray(t, dtype=np.float64)
    if np.any(sa <= 0) or np.any(ta <= 0):
        raise ParameterError("s" if np.any(sa <= 0) else "t",
                             "covariance is singular at time 0")
    if np.any(sa > 1) or np.any(ta > 1):
        raise ParameterError("s" if np.any(sa > 1) else "t", "times must lie in (0, 1]")
    if not u > 0:
        raise ParameterError("u", "barrier level must be positive")
    v = _q_values(p, u, sa, ta)
    return float(v) if v.ndim == 0 else v


def _axis(lo: float, hi: float, step: float) -> np.ndarray:
    # grid anchored at hi so the boundary point 1 is always present
    n = int(math.floor((hi - lo) / step + 1e-9))
    pts = hi - step * np.arange(n + 1)
    if pts[-1] > lo:
        pts = np.append(pts, lo)
    return pts[::-1]


def grid_minimize_q(p: ModelParams, u: float, grid_step: float = 1e-3, eps: float = 1e-6,
                    refinements: int = 2, region: tuple | None = None) -> OptimizerPoint:
    """Brute-force minimum of ``q`` over ``(eps, 1]^2`` with local refinement.

    A full pass at ``grid_step`` is followed by ``refinements`` passes, each
    with a ten times finer step on a +-2 step box around the incumbent.
    ``region = (s_lo, s_hi, t_lo, t_hi)`` restricts the search box.
    """
    if not 0 < grid_step <= 0.01:
        raise ParameterError("grid_step", "must lie in (0, 0.01]")
    s_lo, s_hi, t_lo, t_hi = region or (eps, 1.0, eps, 1.0)
    s_lo, t_lo = max(s_lo, eps), max(t_lo, eps)
    s_hi, t_hi = min(s_hi, 1.0), min(t_hi, 1.0)
    step = grid_step
    ss, tt = _axis(s_lo, s_hi, step), _axis(t_lo, t_hi, step)
    best = None
    for r in range(refinements + 1):
        S, T = np.meshgrid(ss, tt, indexing="ij")
        Q = _q_values(p, u, S, T)
        i, j = np.unravel_index(np.argmin(Q), Q.shape)
        best = (float(ss[i]), float(tt[j]), float(Q[i, j]))
        if r == refinements:
            break
        sb, tb = best[0], best[1]
        fine = step / 10.0
        ss = _axis(max(s_lo, sb - 2 * step), min(s_hi, sb + 2 * step), fine)
        tt = _axis(max(t_lo, tb - 2 * step), min(t_hi, tb + 2 * step), fine)
        step = fine
    return OptimizerPoint(best[0], best[1], best[2])


# -- drift constants of the a = 1, rho = -1/2 case ---------------------------

def _e_term(x: float, y: float) -> float:
    # exp(-2 (x/2 + y)^2 / 3) Phi(y + x/2)
    z = 0.5 * x + y
    return math.exp(-2.0 * z * z / 3.0) * float(ndtr(z))


def c4_branches(c1: float, c2: float) -> tuple[float, float, float, float]:
    """The four branch expressions of ``C4`` evaluated regardless of their conditions."""
    e1 = _e_term(c1, c2)
    e2 = _e_term(c2, c1)
    return e1 + e2, e1 + 0.5, 0.5 + e2, 1.0


def c4_drift_constants(c1: float, c2: float, convention: str = "printed") -> tuple[float, float, float]:
    """``(C'41, C'42, C4)`` for drifts ``(c1, c2)``.

    ``C4`` follows its four-branch definition.  The primed constants take
    ``exp(-2 (c1/2 + c2)^2 / 3) Phi(c2 + c1/2)`` (resp. with ``c1, c2``
    exchanged) when active; when inactive they equal 1 under
    ``convention="printed"`` and 1/2 under ``convention="consistent"``, the
    value that makes them continuous at the switch and matches ``C4``.
    """
    if convention not in ("printed", "consistent"):
        raise ParameterError("convention", f"expected 'printed' or 'consistent', got {convention!r}")
    off = 1.0 if convention == "printed" else 0.5
    p1 = _e_term(c1, c2) if -0.5 * c1 < c2 else off
    p2 = _e_term(c2, c1) if -0.5 * c2 < c1 else off
    b = c4_branches(c1, c2)
    if c2 > max(-0.5 * c1, -2.0 * c1):
        c4 = b[0]
    elif -0.5 * c1 < c2 <= -2.0 * c1:
        c4 = b[1]
    elif -2.0 * c1 < c2 <= -0.5 * c1:
        c4 = b[2]
    else:
        c4 = b[3]
    return p1, p2, c4


# -- limit assembly ----------------------------------------------------------

@dataclass(frozen=True)
class ConstantSpec:
    """A Pickands-type constant a regime needs: ``kind`` in {P, H, R, C_P}."""

    name: str
    kind: str
    args: tuple

    @property
    def key(self) -> str:
        vals = ",".join(f"{k}={v:.12g}" for k, v in self.args)
        return f"{self.kind}({vals})"


def required_constants(p: ModelParams, tol: float = DEFAULT_TOL) -> list[ConstantSpec]:
    """Constants (with arguments) the regime's limit is built from."""
    tag = classify_regime(p, tol).tag
    a, rho = p.a, p.rho
    if tag.dominated:
        return [ConstantSpec("C_P", "C_P", (("S", p.s1),))]
    if tag is RegimeTag.CASE_I:
        lam = local_exponents(p, "diagonal", tol, tstar=1.0)
        common = (("a", a), ("rho", rho), ("lambda1", lam.lambda1), ("lambda2", lam.lambda2))
        return [ConstantSpec("R_S", "R", (("S1", p.s1), ("S2", p.s2)) + common),
                ConstantSpec("R_00", "R", (("S1", 0.0), ("S2", 0.0)) + common)]
    if tag is RegimeTag.CASE_II:
        w = (1.0 - a * rho) / (1.0 - rho * rho)
        return [ConstantSpec("P", "P", (("w1", w), ("w2", w), ("S", p.s1))),
                ConstantSpec("H", "H", (("b", a), ("S", p.s2)))]
    if tag is RegimeTag.CASE_III:
        return [ConstantSpec("P_S1", "P", (("w1", 2.0), ("w2", 2.0), ("S", p.s1))),
                ConstantSpec("P_S2", "P", (("w1", 2.0), ("w2", 2.0), ("S", p.s2))),
                ConstantSpec("H_S1", "H", (("b", 1.0), ("S", p.s1))),
                ConstantSpec("H_S2", "H", (("b", 1.0), ("S", p.s2)))]
    ts = t_star(p, tol)
    if tag is RegimeTag.CASE_IV:
        w = (1.0 - a * rho) / (1.0 - rho * rho * ts)
        return [ConstantSpec("P", "P", (("w1", w), ("w2", w), ("S", p.s1))),
                ConstantSpec("H", "H", (("b", a / ts), ("S", p.s2)))]
    w = (1.0 - rho) / (1.0 - rho * rho * ts)
    sp, sh = (p.s1, p.s2) if p.c1 <= p.c2 else (p.s2, p.s1)
    return [ConstantSpec("P", "P", (("w1", w), ("w2", w), ("S", sp))),
            ConstantSpec("H", "H", (("b", 1.0 / ts), ("S", sh)))]


@dataclass
class LimitConstants:
    """Constant values keyed by the names of :func:`required_constants`
    (plus optional ``C4p1``, ``C4p2``, ``C4`` overrides for CASE_III).
    ``stderr`` carries matching standard errors when the values are estimates.
    """

    tag: RegimeTag
    values: dict = field(default_factory=dict)
    stderr: dict = field(default_factory=dict)

    def get(self, name: str) -> float:
        if name not in self.values or self.values[name] is None:
            raise AssemblyError(name, self.tag.value)
        v = float(self.values[name])
        if not (math.isfinite(v) and v > 0):
            raise AssemblyError(name, self.tag.value)
        return v


def theoretical_ratio_limit(p: ModelParams, consts: LimitConstants, tol: float = DEFAULT_TOL,
                            convention: str = "consistent") -> float:
    """Limit of the conditional Parisian ruin probability for ``p``'s regime.

    ``convention`` is forwarded to :func:`c4_drift_constants` (CASE_III only);
    the default uses 1/2 for inactive primed constants, which yields the
    limit 1 at zero windows.
    """
    tag = classify_regime(p, tol).tag
    if consts.tag is not tag:
        raise AssemblyError(f"constants for {tag.value}", consts.tag.value)
    a, rho = p.a, p.rho
    if tag.dominated:
        return consts.get("C_P") / 2.0
    if tag is RegimeTag.CASE_I:
        return consts.get("R_S") / consts.get("R_00")
    if tag is RegimeTag.CASE_II:
        return (1.0 - a * rho) * consts.get("P") * consts.get("H") / (2.0 * a * (1.0 - rho * rho))
    if tag is RegimeTag.CASE_III:
        c41 = consts.get("P_S1") * consts.get("H_S2")
        c42 = consts.get("P_S2") * consts.get("H_S1")
        p1, p2, c4 = c4_drift_constants(p.c1, p.c2, convention)
        p1 = consts.values.get("C4p1", p1)
        p2 = consts.values.get("C4p2", p2)
        c4 = consts.values.get("C4", c4)
        return (c41 * p1 + c42 * p2) / c4
    return -consts.get("P") * consts.get("H") / (2.0 * rho)


def exact_zero_window_constant(spec: ConstantSpec) -> float | None:
    """Closed form of a constant at zero window, or None when not available.

    ``P(w1, w2, 0) = 2 w1 / (w2 (2 w1 - w2))``, ``H(b, 2b, 0) = b`` and
    ``C_P(0) = 2``; ``R`` has no closed form unless ``rho = 0``.
    """
    args = dict(spec.args)
    if spec.kind == "P" and args["S"] == 0:
        w1, w2 = args["w1"], args["w2"]
        return 2.0 * w1 / (w2 * (2.0 * w1 - w2))
    if spec.kind == "H" and args["S"] == 0:
        return args["b"]
    if spec.kind == "C_P" and args["S"] == 0:
        return 2.0
    if spec.kind == "R" and args["S1"] == 0 and args["S2"] == 0 and args["rho"] == 0:
        l1, l2, a = args["lambda1"], args["lambda2"], args["a"]
        return (2.0 / (l1 * (2.0 - l1))) * (2.0 * a / (l2 * (2.0 * a - l2)))
    return None
