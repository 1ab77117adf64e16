"""Closed-form H^2 for Gaussian and shifted-exponential laws, and CDF binning."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Union

import numpy as np
from scipy.special import ndtr

from .core_types import DiscretePair, MomentSpec
from .errors import DegenerateSpec, InsufficientCoverage, InvalidLaw

TAIL_TOL = 1e-6


def _finite(name, value):
    value = float(value)
    if not math.isfinite(value):
        raise InvalidLaw(f"{name} must be finite, got {value}")
    return value


@dataclass(frozen=True)
class GaussianLaw:
    mean: float
    sd: float

    def __post_init__(self):
        object.__setattr__(self, "mean", _finite("mean", self.mean))
        object.__setattr__(self, "sd", _finite("sd", self.sd))
        if self.sd <= 0:
            raise InvalidLaw(f"sd must be positive, got {self.sd}")

    @property
    def variance(self) -> float:
        return self.sd**2

    def cdf(self, x):
        return ndtr((np.asarray(x, dtype=float) - self.mean) / self.sd)

    def sf(self, x):
        return ndtr((self.mean - np.asarray(x, dtype=float)) / self.sd)


@dataclass(frozen=True)
class ShiftedExponentialLaw:
    """``shift + Exp(mean=scale)``: mean ``shift + scale``, variance ``scale**2``."""

    scale: float
    shift: float = 0.0

    def __post_init__(self):
        object.__setattr__(self, "scale", _finite("scale", self.scale))
        object.__setattr__(self, "shift", _finite("shift", self.shift))
        if self.scale <= 0:
            raise InvalidLaw(f"scale must be positive, got {self.scale}")

    @property
    def mean(self) -> float:
        return self.shift + self.scale

    @property
    def variance(self) -> float:
        return self.scale**2

    @property
    def sd(self) -> float:
        return self.scale

    def cdf(self, x):
        t = (np.asarray(x, dtype=float) - self.shift) / self.scale
        return np.where(t > 0, -np.expm1(-np.maximum(t, 0.0)), 0.0)

    def sf(self, x):
        t = (np.asarray(x, dtype=float) - self.shift) / self.scale
        return np.where(t > 0, np.exp(-np.maximum(t, 0.0)), 1.0)


Law = Union[GaussianLaw, ShiftedExponentialLaw]


def _check_law(law, kind):
    if not isinstance(law, kind):
        raise InvalidLaw(f"expected {kind.__name__}, got {type(law).__name__}")
    return law


def gaussian_h2(p: GaussianLaw, q: GaussianLaw) -> float:
    """Squared Hellinger distance between two normal laws."""
    p = _check_law(p, GaussianLaw)
    q = _check_law(q, GaussianLaw)
    var_sum = p.variance + q.variance
    # sqrt(2 sP sQ / (sP^2 + sQ^2)) written to stay accurate near sP = sQ
    ratio = 1.0 - (p.sd - q.sd) ** 2 / var_sum
    log_rho = 0.5 * math.log(ratio) - (p.mean - q.mean) ** 2 / (4.0 * var_sum)
    return min(max(-math.expm1(log_rho), 0.0), 1.0)


def shifted_exponential_h2(p: ShiftedExponentialLaw, q: ShiftedExponentialLaw) -> float:
    """Squared Hellinger distance between two shifted exponential laws.

    The overlap starts at ``max(shift_p, shift_q)``; the law whose support
    starts later contributes no decay factor.
    """
    p = _check_law(p, ShiftedExponentialLaw)
    q = _check_law(q, ShiftedExponentialLaw)
    a1, a2 = p.scale, q.scale
    d1, d2 = p.shift, q.shift
    if d1 >= d2:
        decay = (d1 - d2) / (2.0 * a2)
    else:
        decay = (d2 - d1) / (2.0 * a1)
    log_coeff = 0.5 * math.log(1.0 - ((a1 - a2) / (a1 + a2)) ** 2)
    return min(max(-math.expm1(log_coeff - decay), 0.0), 1.0)


def match_moments_exponential(
    spec: MomentSpec,
) -> tuple[ShiftedExponentialLaw, ShiftedExponentialLaw]:
    """Shifted exponentials with the means and standard deviations of ``spec``."""
    if spec.sigma_p <= 0 or spec.sigma_q <= 0:
        raise DegenerateSpec("exponential matching needs positive standard deviations")
    return (
        ShiftedExponentialLaw(scale=spec.sigma_p, shift=spec.mean_p - spec.sigma_p),
        ShiftedExponentialLaw(scale=spec.sigma_q, shift=spec.mean_q - spec.sigma_q),
    )


def match_moments_gaussian(spec: MomentSpec) -> tuple[GaussianLaw, GaussianLaw]:
    if spec.sigma_p <= 0 or spec.sigma_q <= 0:
        raise DegenerateSpec("Gaussian matching needs positive standard deviations")
    return GaussianLaw(spec.mean_p, spec.sigma_p), GaussianLaw(spec.mean_q, spec.sigma_q)


@dataclass(frozen=True, eq=False)
class DiscretizedLaw:
    """Bin midpoints and bin masses for one law on a truncation window.

    ``tail_mass`` is the mass outside the window (removed by
    renormalization); ``mean_error`` and ``var_error`` are the
    discretization's moments minus the law's.
    """

    support: np.ndarray
    probs: np.ndarray
    tail_mass: float
    mean_error: float
    var_error: float


def _bin_masses(law: Law, edges: np.ndarray) -> tuple[np.ndarray, float]:
    lo, hi = edges[:-1], edges[1:]
    mid = 0.5 * (lo + hi)
    # CDF differences below the mean, survival differences above it
    left = law.cdf(hi) - law.cdf(lo)
    right = law.sf(lo) - law.sf(hi)
    masses = np.where(mid <= law.mean, left, right)
    masses = np.clip(masses, 0.0, None)
    tail = float(law.cdf(edges[0]) + law.sf(edges[-1]))
    return masses, tail


def _grid(lo: float, hi: float, bins: int) -> np.ndarray:
    if not (math.isfinite(lo) and math.isfinite(hi) and hi > lo):
        raise InvalidLaw(f"invalid window [{lo}, {hi}]")
    if int(bins) != bins or bins < 2:
        raise InvalidLaw(f"bins must be an integer >= 2, got {bins}")
    return np.linspace(lo, hi, int(bins) + 1)


def _discretize_on(law: Law, edges: np.ndarray) -> DiscretizedLaw:
    masses, tail = _bin_masses(law, edges)
    if tail > TAIL_TOL:
        raise InsufficientCoverage(
            f"tail mass {tail:.3e} outside [{edges[0]:g}, {edges[-1]:g}] exceeds {TAIL_TOL:g}"
        )
    masses = masses / masses.sum()
    support = 0.5 * (edges[:-1] + edges[1:])
    mean = float(np.dot(masses, support))
    var = float(np.dot(masses, (support - mean) ** 2))
    return DiscretizedLaw(
        support=support,
        probs=masses,
        tail_mass=tail,
        mean_error=mean - law.mean,
        var_error=var - law.variance,
    )


def discretize(law: Law, truncation_radius: float, bins: int) -> DiscretizedLaw:
    """Bin ``law`` on ``[mean - R, mean + R]`` using exact CDF differences.

    Masses sit at bin midpoints, so the variance carries the usual
    ``width**2 / 12`` midpoint bias on top of the truncated tail.
    """
    if not isinstance(law, (GaussianLaw, ShiftedExponentialLaw)):
        raise InvalidLaw(f"unsupported law {type(law).__name__}")
    if not truncation_radius > 0:
        raise InvalidLaw(f"truncation_radius must be positive, got {truncation_radius}")
    edges = _grid(law.mean - truncation_radius, law.mean + truncation_radius, bins)
    return _discretize_on(law, edges)


def discretize_pair(p: Law, q: Law, truncation_radius: float, bins: int) -> DiscretePair:
    """Bin both laws on one common grid spanning both truncation windows."""
    for law in (p, q):
        if not isinstance(law, (GaussianLaw, ShiftedExponentialLaw)):
            raise InvalidLaw(f"unsupported law {type(law).__name__}")
    if not truncation_radius > 0:
        raise InvalidLaw(f"truncation_radius must be positive, got {truncation_radius}")
    lo = min(p.mean, q.mean) - truncation_radius
    hi = max(p.mean, q.mean) + truncation_radius
    edges = _grid(lo, hi, bins)
    dp = _discretize_on(p, edges)
    dq = _discretize_on(q, edges)
    return DiscretePair(dp.support, dp.probs, dq.probs)
