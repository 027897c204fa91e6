"""Model parameters, regime classification and the closed-form scalars.

The surplus of portfolio ``i`` is ruined when ``W_i(t) - c_i t`` exceeds its
barrier; barriers are ``(u, a u)`` with ``0 < a <= 1`` and
``(W1, W2) = (B1, rho B1 + sqrt(1 - rho^2) B2)``.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass

from .errors import InconsistentBranchError, ParameterError

DEFAULT_TOL = 1e-12


def _finite(name: str, value) -> float:
    try:
        v = float(value)
    except (TypeError, ValueError):
        raise ParameterError(name, f"expected a number, got {value!r}") from None
    if not math.isfinite(v):
        raise ParameterError(name, f"must be finite, got {v}")
    return v


@dataclass(frozen=True)
class ModelParams:
    """Problem instance ``(c1, c2, a, rho, s1, s2)``.

    Windows are ``S_i / u^2`` in time units.  Instances whose second barrier
    exceeds the first should be built through :func:`normalize_barriers`.
    """

    c1: float
    c2: float
    a: float
    rho: float
    s1: float = 0.0
    s2: float = 0.0

    def __post_init__(self):
        for name in ("c1", "c2", "a", "rho", "s1", "s2"):
            object.__setattr__(self, name, _finite(name, getattr(self, name)))
        if not -1.0 < self.rho < 1.0:
            raise ParameterError("rho", f"correlation must lie in (-1, 1), got {self.rho}")
        if not 0.0 < self.a <= 1.0:
            raise ParameterError("a", f"barrier ratio must lie in (0, 1], got {self.a}")
        if self.s1 < 0:
            raise ParameterError("s1", f"window scale must be >= 0, got {self.s1}")
        if self.s2 < 0:
            raise ParameterError("s2", f"window scale must be >= 0, got {self.s2}")

    def swapped(self) -> "ModelParams":
        """Coordinates exchanged; only meaningful when ``a == 1``."""
        return ModelParams(self.c2, self.c1, self.a, self.rho, self.s2, self.s1)


def normalize_barriers(u1: float, u2: float, c1: float, c2: float, rho: float,
                       s1: float = 0.0, s2: float = 0.0) -> tuple[ModelParams, float, bool]:
    """Build ``ModelParams`` from raw barriers ``(u1, u2)``.

    If ``u2 > u1`` the coordinates are exchanged so that ``a = u2/u1 <= 1``.
    Returns ``(params, u, swapped)`` where ``u`` is the larger barrier.
    """
    u1 = _finite("u1", u1)
    u2 = _finite("u2", u2)
    if u1 <= 0:
        raise ParameterError("u1", "barrier must be positive")
    if u2 <= 0:
        raise ParameterError("u2", "barrier must be positive")
    if u2 > u1:
        return ModelParams(c2, c1, u1 / u2, rho, s2, s1), u2, True
    return ModelParams(c1, c2, u2 / u1, rho, s1, s2), u1, False


class RegimeTag(str, enum.Enum):
    DOM_A_LT_RHO = "DOM_A_LT_RHO"
    DOM_A_EQ_RHO = "DOM_A_EQ_RHO"
    CASE_I = "CASE_I"
    CASE_II = "CASE_II"
    CASE_III = "CASE_III"
    CASE_IV = "CASE_IV"
    CASE_V = "CASE_V"

    @property
    def dominated(self) -> bool:
        return self in (RegimeTag.DOM_A_LT_RHO, RegimeTag.DOM_A_EQ_RHO)


@dataclass(frozen=True)
class Regime:
    tag: RegimeTag
    boundary_tol: float = DEFAULT_TOL


def critical_rho(a: float) -> float:
    """Critical correlation ``A_a = (1 - sqrt(8 a^2 + 1)) / (4 a)``, in (-1, 0)."""
    a = _finite("a", a)
    if not 0.0 < a <= 1.0:
        raise ParameterError("a", f"barrier ratio must lie in (0, 1], got {a}")
    # same value as (1 - sqrt(1+8a^2))/(4a) without cancellation for small a
    return -2.0 * a / (1.0 + math.sqrt(8.0 * a * a + 1.0))


def classify_regime(p: ModelParams, tol: float = DEFAULT_TOL) -> Regime:
    """Regime of ``p``; boundaries ``a = rho``, ``rho = A_a`` and ``a = 1`` use ``tol``."""
    if tol < 0:
        raise ParameterError("tol", "tolerance must be >= 0")
    a, rho = p.a, p.rho
    if abs(a - rho) <= tol:
        tag = RegimeTag.DOM_A_EQ_RHO
    elif a < rho:
        tag = RegimeTag.DOM_A_LT_RHO
    else:
        A = critical_rho(a)
        unit = abs(a - 1.0) <= tol
        if rho > A + tol:
            tag = RegimeTag.CASE_I
        elif rho >= A - tol:
            tag = RegimeTag.CASE_III if unit else RegimeTag.CASE_II
        else:
            tag = RegimeTag.CASE_V if unit else RegimeTag.CASE_IV
    return Regime(tag, tol)


@dataclass(frozen=True)
class OptimizerPoint:
    s: float
    t: float
    q_value: float
    is_pair: bool = False


def _q(p: ModelParams, u: float, s: float, t: float) -> float:
    from .analytics import quadratic_form

    return quadratic_form(p, u, s, t)


def _t_u(a: float, rho: float, c1: float, c2: float, u: float) -> float:
    den = rho * (2.0 * a * rho - 1.0) + (c2 - rho * c1) / u
    if den <= 0.0:
        return math.inf
    return a / den


def optimizer_point(p: ModelParams, u: float = math.inf, tol: float = DEFAULT_TOL):
    """Closed-form minimizer(s) of the quadratic form on ``[0, 1]^2``.

    Returns one :class:`OptimizerPoint`, or a pair of mirror points
    (``is_pair=True``) when ``a = 1`` and ``rho <= -1/2``.  ``u = inf`` gives
    the limit point ``(1, t*)``.  In the dominated regimes ``(1, 1)`` is
    returned.
    """
    u = float(u)
    if not u > 0:
        raise ParameterError("u", "barrier level must be positive")
    tag = classify_regime(p, tol).tag
    if tag.dominated:
        return OptimizerPoint(1.0, 1.0, _q(p, u, 1.0, 1.0))
    if tag in (RegimeTag.CASE_III, RegimeTag.CASE_V):
        t = min(_t_u(1.0, p.rho, p.c1, p.c2, u), 1.0)
        s = min(_t_u(1.0, p.rho, p.c2, p.c1, u), 1.0)
        first = OptimizerPoint(1.0, t, _q(p, u, 1.0, t), True)
        second = OptimizerPoint(s, 1.0, _q(p, u, s, 1.0), True)
        return first, second
    t = _t_u(p.a, p.rho, p.c1, p.c2, u)
    if not 0.0 <= t <= 1.0:
        t = 1.0
    return OptimizerPoint(1.0, t, _q(p, u, 1.0, t))


def best_point(pt) -> OptimizerPoint:
    """The point with the smaller quadratic form (first one on ties)."""
    if isinstance(pt, tuple):
        return min(pt, key=lambda x: x.q_value)
    return pt


def t_star(p: ModelParams, tol: float = DEFAULT_TOL) -> float:
    """Limit optimizer ``t*``: ``a / (rho (2 a rho - 1))`` when that lies in [0, 1], else 1."""
    tag = classify_regime(p, tol).tag
    if tag in (RegimeTag.CASE_IV, RegimeTag.CASE_V):
        if p.rho == 0.0:
            raise InconsistentBranchError("rho = 0 cannot occur below the critical correlation")
        return p.a / (p.rho * (2.0 * p.a * p.rho - 1.0))
    return 1.0


@dataclass(frozen=True)
class LocalExponents:
    lambda1: float
    lambda2: float
    tau1: float | None = None
    tau4: float | None = None


RELATIONS = ("diagonal", "l_gt_k", "l_lt_k")


def local_exponents(p: ModelParams, relation: str = "diagonal", tol: float = DEFAULT_TOL,
                    tstar: float | None = None) -> LocalExponents:
    """Exponential tilts ``(lambda1, lambda2)`` of the local fields at ``t*``
    and the Taylor coefficients ``(tau1, tau4)`` of the regime.

    ``relation`` selects the branch of the tilt table: ``diagonal`` (the two
    local ruin times coincide, requires ``t* = 1``), ``l_gt_k`` or ``l_lt_k``.
    The Taylor coefficients are defined for CASE_II..CASE_V and are ``None``
    otherwise.
    """
    if relation not in RELATIONS:
        raise ParameterError("relation", f"expected one of {RELATIONS}, got {relation!r}")
    a, rho = p.a, p.rho
    ts = t_star(p, tol) if tstar is None else float(tstar)
    if relation == "diagonal":
        if abs(ts - 1.0) > tol:
            raise InconsistentBranchError(f"diagonal relation needs t* = 1, got t* = {ts}")
        lam1 = (1.0 - a * rho) / (1.0 - rho * rho) / ts
        lam2 = (a - rho) / (1.0 - rho * rho) / ts
    elif relation == "l_gt_k":
        lam1 = (ts - a * rho) / (ts - rho * rho)
        lam2 = (a - rho) / (ts - rho * rho)
    else:
        lam1 = (1.0 - a * rho) / (1.0 - rho * rho * ts)
        lam2 = (a - rho * ts) / (ts - rho * rho * ts * ts)

    tag = classify_regime(p, tol).tag
    tau1 = tau4 = None
    if tag in (RegimeTag.CASE_II, RegimeTag.CASE_III):
        d = (1.0 - rho * rho) ** 2
        tau1 = (1.0 - a * rho) ** 2 / d
        tau4 = (rho * rho - 2.0 * a * rho ** 3 + a * a * rho * rho) / d
    elif tag in (RegimeTag.CASE_IV, RegimeTag.CASE_V):
        if rho == 0.0:
            raise InconsistentBranchError("rho = 0 cannot occur below the critical correlation")
        tau1 = (1.0 - 2.0 * a * rho) ** 2
        tau4 = -rho ** 3 * (1.0 - 2.0 * a * rho) ** 4 / (a * (1.0 - a * rho))
    return LocalExponents(lam1, lam2, tau1, tau4)
