"""Tight moment-constrained lower bound on the squared Hellinger distance.

For two laws with means ``m_P != m_Q`` and standard deviations
``sigma_P, sigma_Q`` every pair satisfies::

    H^2(P, Q) >= 1 - sqrt(1 - a^2 / (a^2 + (sigma_P + sigma_Q)^2)),   a = m_P - m_Q,

with equality for a unique pair of two-point laws on a shared support
(the *binary attainer*). When the means coincide the infimum is 0 and is
not attained.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional

from .core_types import DiscretePair, MomentSpec
from .errors import BoundaryAttainer, EqualMeans, InvalidSpec


@dataclass(frozen=True)
class BinaryAttainer:
    """Two-point pair ``P(u1) = r, Q(u1) = s`` on ``{u2 < u1}``.

    ``a`` is the mean gap, ``b`` the variance gap ``sigma_Q^2 - sigma_P^2``
    and ``v`` the half-distance between the support points.
    ``r_comp`` and ``s_comp`` hold ``1 - r`` and ``1 - s`` computed
    without cancellation.
    """

    r: float
    s: float
    u1: float
    u2: float
    a: float
    b: float
    v: float
    r_comp: float = field(repr=False, default=float("nan"))
    s_comp: float = field(repr=False, default=float("nan"))

    def __post_init__(self):
        if math.isnan(self.r_comp):
            object.__setattr__(self, "r_comp", 1.0 - self.r)
        if math.isnan(self.s_comp):
            object.__setattr__(self, "s_comp", 1.0 - self.s)

    def pair(self) -> DiscretePair:
        """The attainer as a :class:`DiscretePair` on ``[u2, u1]``."""
        return DiscretePair(
            [self.u2, self.u1], [self.r_comp, self.r], [self.s_comp, self.s]
        )

    def relabeled(self) -> "BinaryAttainer":
        """The other sign branch: ``(r, s, u1, u2) -> (1-r, 1-s, u2, u1)``."""
        return BinaryAttainer(
            r=self.r_comp,
            s=self.s_comp,
            u1=self.u2,
            u2=self.u1,
            a=self.a,
            b=self.b,
            v=self.v,
            r_comp=self.r,
            s_comp=self.s,
        )

    def to_dict(self) -> dict:
        return {
            "r": self.r,
            "s": self.s,
            "u1": self.u1,
            "u2": self.u2,
            "a": self.a,
            "b": self.b,
            "v": self.v,
        }


def _check_spec(spec) -> MomentSpec:
    if not isinstance(spec, MomentSpec):
        raise InvalidSpec(f"expected a MomentSpec, got {type(spec).__name__}")
    return spec


def _split(t: float, half_width_sq: float) -> tuple[float, float]:
    # returns (1/2 + t, 1/2 - t) using x(1 - x) = half_width_sq for the small side
    if t >= 0:
        big = 0.5 + t
        return big, half_width_sq / big
    small_comp = 0.5 - t
    return half_width_sq / small_comp, small_comp


def half_support_width(spec: MomentSpec) -> float:
    """``v = sqrt((a^2 + (sP+sQ)^2)(a^2 + (sP-sQ)^2)) / (2|a|)``."""
    a = spec.mean_gap
    if a == 0:
        raise EqualMeans("v is undefined for equal means")
    sp, sq = spec.sigma_p, spec.sigma_q
    return math.hypot(a, sp + sq) * math.hypot(a, sp - sq) / (2.0 * abs(a))


def binary_attainer(spec: MomentSpec) -> BinaryAttainer:
    """The unique two-point pair matching ``spec``; it attains the bound.

    Raises :class:`EqualMeans` when ``m_P == m_Q``.
    """
    spec = _check_spec(spec)
    a = spec.mean_gap
    if a == 0:
        raise EqualMeans("means are equal: the infimum 0 is not attained")
    sp, sq = spec.sigma_p, spec.sigma_q
    b = (sq - sp) * (sq + sp)
    v = half_support_width(spec)

    # both (b +- a^2)/(4 a v) lie in [-1/2, 1/2]; clip only ulp-level overshoot
    t_r = (b + a * a) / (4.0 * a * v)
    t_s = (b - a * a) / (4.0 * a * v)
    if max(abs(t_r), abs(t_s)) > 0.5 + 1e-12:
        raise AssertionError(f"attainer masses left [0, 1]: t_r={t_r!r}, t_s={t_s!r}")
    t_r = min(max(t_r, -0.5), 0.5)
    t_s = min(max(t_s, -0.5), 0.5)
    r, r_comp = _split(t_r, (sp / (2.0 * v)) ** 2)
    s, s_comp = _split(t_s, (sq / (2.0 * v)) ** 2)

    # u1 - u2 = 2v, equivalent to m_P +/- sqrt(...) but finite for sigma_P = 0
    u1 = spec.mean_p + 2.0 * v * r_comp
    u2 = spec.mean_p - 2.0 * v * r
    return BinaryAttainer(r=r, s=s, u1=u1, u2=u2, a=a, b=b, v=v,
                          r_comp=r_comp, s_comp=s_comp)


def _gap_ratio(spec: MomentSpec) -> tuple[float, float]:
    """Return ``(x, 1 - x)`` with ``x = a^2 / (a^2 + (sP + sQ)^2)``."""
    a = abs(spec.mean_gap)
    total = spec.sigma_p + spec.sigma_q
    if a == 0:
        return 0.0, 1.0
    if total == 0:
        return 1.0, 0.0
    if a >= total:
        k = total / a
        denom = 1.0 + k * k
        return 1.0 / denom, k * k / denom
    k = a / total
    denom = 1.0 + k * k
    return k * k / denom, 1.0 / denom


def hellinger_lower_bound(spec: MomentSpec) -> float:
    """Greatest lower bound of ``H^2`` over all pairs with the given moments."""
    x, one_minus_x = _gap_ratio(_check_spec(spec))
    return min(x / (1.0 + math.sqrt(one_minus_x)), 1.0)


def bhattacharyya_upper_bound(spec: MomentSpec) -> float:
    """Least upper bound of the Bhattacharyya coefficient, ``1 - hellinger_lower_bound``."""
    _, one_minus_x = _gap_ratio(_check_spec(spec))
    return min(math.sqrt(one_minus_x), 1.0)


def comparison_bound(spec: MomentSpec) -> float:
    """The weaker bound ``a^2 / (2 (a^2 + 2 (sP^2 + sQ^2)))``."""
    spec = _check_spec(spec)
    a2 = spec.mean_gap**2
    if a2 == 0:
        return 0.0
    return a2 / (2.0 * (a2 + 2.0 * (spec.sigma_p**2 + spec.sigma_q**2)))


def g_ratio(x: float) -> float:
    """``(1 + x) / (1 + sqrt(x))^2``; decreasing from 1 at 0 to 1/2 at 1, then back up.

    Evaluated as ``(1 + t^2) / 2`` with ``t = (1 - sqrt x) / (1 + sqrt x)``
    so the result never leaves ``[1/2, 1]`` through rounding.
    """
    root = math.sqrt(x)
    t = (1.0 - root) / (1.0 + root)
    return 0.5 * (1.0 + t * t)


def beta_factors(spec: MomentSpec) -> tuple[float, float]:
    """Factors with ``beta_min * l <= bound <= beta_max * l``, both in [1, 2]."""
    att = binary_attainer(_check_spec(spec))
    if att.r == 0 or att.r_comp == 0:
        raise BoundaryAttainer(
            "attainer puts all P-mass on one point; beta factors undefined"
        )
    g_head = g_ratio(att.s / att.r)
    g_tail = g_ratio(att.s_comp / att.r_comp)
    return 2.0 * min(g_head, g_tail), 2.0 * max(g_head, g_tail)


@dataclass(frozen=True)
class BoundReport:
    """All bounds for one spec.

    ``attainer`` is None exactly when the means are equal; the beta
    factors are None whenever they are undefined (equal means or an
    attainer with ``r`` in {0, 1}).
    """

    hellinger_lb: float
    bhattacharyya_ub: float
    comparison_lb: float
    beta_min: Optional[float]
    beta_max: Optional[float]
    attainer: Optional[BinaryAttainer]

    def to_dict(self) -> dict:
        return {
            "hellinger_lb": self.hellinger_lb,
            "bhattacharyya_ub": self.bhattacharyya_ub,
            "comparison_lb": self.comparison_lb,
            "beta_min": self.beta_min,
            "beta_max": self.beta_max,
            "attainer": None if self.attainer is None else self.attainer.to_dict(),
        }


def bound_report(spec: MomentSpec) -> BoundReport:
    spec = _check_spec(spec)
    attainer = None
    beta_min = beta_max = None
    if spec.mean_gap != 0:
        attainer = binary_attainer(spec)
        try:
            beta_min, beta_max = beta_factors(spec)
        except BoundaryAttainer:
            pass
    return BoundReport(
        hellinger_lb=hellinger_lower_bound(spec),
        bhattacharyya_ub=bhattacharyya_upper_bound(spec),
        comparison_lb=comparison_bound(spec),
        beta_min=beta_min,
        beta_max=beta_max,
        attainer=attainer,
    )
