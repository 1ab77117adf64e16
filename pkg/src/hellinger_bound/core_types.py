"""Moment specifications, finite discrete pairs and their divergences.

The squared Hellinger distance uses the 1/2 normalization throughout::

    H^2(P, Q) = 1/2 * sum_i (sqrt(p_i) - sqrt(q_i))^2  in [0, 1],

so that ``H^2 = 1 - rho`` where ``rho = sum_i sqrt(p_i q_i)`` is the
Bhattacharyya coefficient. Bounds quoted elsewhere without the 1/2 factor
are twice these values.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .errors import InvalidPair, InvalidSpec

PROB_TOL = 1e-12


@dataclass(frozen=True)
class MomentSpec:
    """Means and standard deviations of the two marginals.

    Standard deviations are stored, not variances. Use
    :meth:`from_variances` when the inputs are variances.
    """

    mean_p: float
    sigma_p: float
    mean_q: float
    sigma_q: float

    def __post_init__(self):
        for name in ("mean_p", "sigma_p", "mean_q", "sigma_q"):
            value = getattr(self, name)
            try:
                value = float(value)
            except (TypeError, ValueError):
                raise InvalidSpec(f"{name} must be a real number, got {value!r}")
            if not math.isfinite(value):
                raise InvalidSpec(f"{name} must be finite, got {value}")
            object.__setattr__(self, name, value)
        if self.sigma_p < 0 or self.sigma_q < 0:
            raise InvalidSpec("standard deviations must be non-negative")

    @classmethod
    def from_variances(cls, mean_p, var_p, mean_q, var_q) -> "MomentSpec":
        if var_p < 0 or var_q < 0:
            raise InvalidSpec("variances must be non-negative")
        return cls(mean_p, math.sqrt(var_p), mean_q, math.sqrt(var_q))

    @property
    def mean_gap(self) -> float:
        return self.mean_p - self.mean_q

    @property
    def var_gap(self) -> float:
        return self.sigma_q**2 - self.sigma_p**2

    def to_dict(self) -> dict:
        return {
            "mean_p": self.mean_p,
            "sigma_p": self.sigma_p,
            "mean_q": self.mean_q,
            "sigma_q": self.sigma_q,
        }

    @classmethod
    def from_dict(cls, data: dict) -> "MomentSpec":
        return cls(data["mean_p"], data["sigma_p"], data["mean_q"], data["sigma_q"])


def _clean_probs(probs, name: str) -> np.ndarray:
    probs = np.asarray(probs, dtype=np.float64)
    if not np.all(np.isfinite(probs)):
        raise InvalidPair(f"{name} contains non-finite values")
    if np.any(probs < -PROB_TOL):
        raise InvalidPair(f"{name} has negative entries (min {probs.min():.3e})")
    probs = np.clip(probs, 0.0, None)
    total = math.fsum(probs)
    if abs(total - 1.0) > PROB_TOL:
        raise InvalidPair(f"{name} sums to {total!r}, not 1 within {PROB_TOL:g}")
    return probs / total


@dataclass(frozen=True, eq=False)
class DiscretePair:
    """Two probability vectors on one shared, strictly increasing support.

    Unsorted supports are sorted and duplicate points merged (their
    masses summed). Probability vectors within ``1e-12`` of summing to
    one are renormalized; anything further off raises :class:`InvalidPair`.
    """

    support: np.ndarray
    p: np.ndarray
    q: np.ndarray

    def __post_init__(self):
        support = np.asarray(self.support, dtype=np.float64)
        p = np.asarray(self.p, dtype=np.float64)
        q = np.asarray(self.q, dtype=np.float64)
        if support.ndim != 1 or p.shape != support.shape or q.shape != support.shape:
            raise InvalidPair("support, p and q must be 1-D arrays of equal length")
        if support.size == 0:
            raise InvalidPair("support is empty")
        if not np.all(np.isfinite(support)):
            raise InvalidPair("support contains non-finite values")
        p = _clean_probs(p, "p")
        q = _clean_probs(q, "q")

        if np.any(np.diff(support) <= 0):
            order = np.argsort(support, kind="stable")
            support, p, q = support[order], p[order], q[order]
            support, inverse = np.unique(support, return_inverse=True)
            p = np.bincount(inverse, weights=p, minlength=support.size)
            q = np.bincount(inverse, weights=q, minlength=support.size)

        for arr in (support, p, q):
            arr.flags.writeable = False
        object.__setattr__(self, "support", support)
        object.__setattr__(self, "p", p)
        object.__setattr__(self, "q", q)

    def __len__(self) -> int:
        return self.support.size

    def swapped(self) -> "DiscretePair":
        return DiscretePair(self.support, self.q, self.p)

    def to_dict(self) -> dict:
        return {
            "support": self.support.tolist(),
            "p": self.p.tolist(),
            "q": self.q.tolist(),
        }

    @classmethod
    def from_dict(cls, data: dict) -> "DiscretePair":
        return cls(data["support"], data["p"], data["q"])


def _check_pair(pair) -> DiscretePair:
    if not isinstance(pair, DiscretePair):
        raise InvalidPair(f"expected a DiscretePair, got {type(pair).__name__}")
    return pair


def _mean_sd(support: np.ndarray, probs: np.ndarray) -> tuple[float, float]:
    mean = float(np.dot(probs, support))
    # centered form; the raw-moment difference cancels badly when |mean| >> sd
    var = float(np.dot(probs, (support - mean) ** 2))
    if var < 0:
        if var < -PROB_TOL:
            raise InvalidPair(f"negative variance {var!r}")
        var = 0.0
    return mean, math.sqrt(var)


def moments_of(pair: DiscretePair) -> MomentSpec:
    """Means and standard deviations of both marginals of ``pair``."""
    pair = _check_pair(pair)
    mean_p, sigma_p = _mean_sd(pair.support, pair.p)
    mean_q, sigma_q = _mean_sd(pair.support, pair.q)
    return MomentSpec(mean_p, sigma_p, mean_q, sigma_q)


def hellinger_sq(pair: DiscretePair) -> float:
    """Squared Hellinger distance ``1/2 * sum (sqrt(p) - sqrt(q))^2``."""
    pair = _check_pair(pair)
    diff = np.sqrt(pair.p) - np.sqrt(pair.q)
    return min(max(0.5 * float(np.dot(diff, diff)), 0.0), 1.0)


def bhattacharyya(pair: DiscretePair) -> float:
    """Bhattacharyya coefficient ``sum sqrt(p * q)``."""
    pair = _check_pair(pair)
    return min(max(float(np.sum(np.sqrt(pair.p * pair.q))), 0.0), 1.0)


def binary_hellinger_sq(r: float, s: float) -> float:
    """Squared Hellinger distance between Bernoulli(r) and Bernoulli(s).

    Evaluated as ``(r - s)^2 / 2 * (1/(sqrt r + sqrt s)^2 + 1/(sqrt(1-r) + sqrt(1-s))^2)``
    which keeps full relative accuracy when ``r`` and ``s`` are close.
    """
    if not (0.0 <= r <= 1.0 and 0.0 <= s <= 1.0):
        raise InvalidPair(f"binary masses must lie in [0, 1], got r={r!r}, s={s!r}")
    if r == s:
        return 0.0
    head = (math.sqrt(r) + math.sqrt(s)) ** 2
    tail = (math.sqrt(1.0 - r) + math.sqrt(1.0 - s)) ** 2
    total = 0.0
    if head > 0:
        total += 1.0 / head
    if tail > 0:
        total += 1.0 / tail
    return min(0.5 * (r - s) ** 2 * total, 1.0)


def two_point_pair(
    support: Sequence[float], p_first: float, q_first: float
) -> DiscretePair:
    """Pair on ``support = (u1, u2)`` with ``P(u1) = p_first`` and ``Q(u1) = q_first``."""
    u1, u2 = support
    return DiscretePair([u1, u2], [p_first, 1.0 - p_first], [q_first, 1.0 - q_first])
