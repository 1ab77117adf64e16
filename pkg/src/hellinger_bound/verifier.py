"""Numerical evidence for the bound.

Three independent probes:

* :func:`sample_feasible_pair` draws random vertices of the moment polytope
  on random finite supports and checks no sample beats the bound;
* :func:`minimize_h2` minimizes ``H^2`` over ``n``-point pairs in a box
  ``|u_i| <= R`` (square-root masses ``p = w**2, q = z**2``, augmented
  Lagrangian outer loop, spectral projected gradient inner loop) and checks
  that the minimizer sits on two points at the bound;
* :func:`equal_means_sequence` builds four-point pairs with equal means
  whose distance tends to zero.
"""

from __future__ import annotations

import enum
import itertools
import logging
import math
from dataclasses import dataclass, field, replace
from typing import Optional

import numpy as np

from .core_types import (
    DiscretePair,
    MomentSpec,
    binary_hellinger_sq,
    hellinger_sq,
    moments_of,
)
from .errors import (
    ConvergenceFailure,
    DegenerateSpec,
    HellingerBoundError,
    InfeasibleSupport,
    InvalidParameters,
)
from .tight_bounds import binary_attainer, hellinger_lower_bound

logger = logging.getLogger(__name__)

VIOLATION_TOL = 1e-9
MAX_SUPPORT_ATTEMPTS = 100
CONCENTRATION_TOL = 1e-6
_ENUMERATION_LIMIT = 50_000


class RecordKind(str, enum.Enum):
    SAMPLED = "sampled"
    OPTIMIZED = "optimized"
    SEQUENCE = "sequence"


@dataclass(frozen=True)
class VerificationConfig:
    n_points: int = 6
    radius: float = 100.0
    n_trials: int = 100
    n_restarts: int = 20
    seed: int = 0
    tol_moments: float = 1e-8
    tol_gap: float = 1e-4
    max_outer: int = 50
    max_inner: int = 2000

    def __post_init__(self):
        if int(self.n_points) != self.n_points or self.n_points < 2:
            raise InvalidParameters(f"n_points must be an integer >= 2, got {self.n_points}")
        if not (math.isfinite(self.radius) and self.radius > 0):
            raise InvalidParameters(f"radius must be positive, got {self.radius}")
        if self.n_trials < 0 or self.n_restarts < 1:
            raise InvalidParameters("n_trials must be >= 0 and n_restarts >= 1")
        if self.seed < 0:
            raise InvalidParameters("seed must be non-negative")
        if not (self.tol_moments > 0 and self.tol_gap > 0):
            raise InvalidParameters("tolerances must be positive")
        if self.max_outer < 1 or self.max_inner < 1:
            raise InvalidParameters("iteration limits must be positive")

    def to_dict(self) -> dict:
        return {
            "n_points": self.n_points,
            "radius": self.radius,
            "n_trials": self.n_trials,
            "n_restarts": self.n_restarts,
            "seed": self.seed,
            "tol_moments": self.tol_moments,
            "tol_gap": self.tol_gap,
        }


@dataclass(frozen=True, eq=False)
class VerificationRecord:
    """One piece of evidence.

    ``moment_residual`` is measured in units of the spec's natural scale
    ``max(sigma_p, sigma_q, |mean_p - mean_q|)`` (see :func:`moment_residual`).
    ``off_top2_mass`` and ``touches_box`` are only filled in for optimized
    records. A record whose sub-operation failed carries ``error`` and no pair.
    """

    pair: Optional[DiscretePair]
    achieved_h2: float
    bound: float
    gap: float
    moment_residual: float
    kind: RecordKind
    feasible: bool = True
    off_top2_mass: Optional[float] = None
    touches_box: bool = False
    error: Optional[str] = None

    @property
    def violation(self) -> bool:
        return self.feasible and self.error is None and self.gap < -VIOLATION_TOL

    def to_dict(self) -> dict:
        return {
            "kind": self.kind.value,
            "achieved_h2": self.achieved_h2,
            "bound": self.bound,
            "gap": self.gap,
            "moment_residual": self.moment_residual,
            "feasible": self.feasible,
            "off_top2_mass": self.off_top2_mass,
            "touches_box": self.touches_box,
            "error": self.error,
            "pair": None if self.pair is None else self.pair.to_dict(),
        }


def _scale(spec: MomentSpec) -> float:
    return max(spec.sigma_p, spec.sigma_q, abs(spec.mean_gap))


def moment_residual(pair: DiscretePair, spec: MomentSpec) -> float:
    """Largest constraint violation of ``pair`` against ``spec``.

    Mean errors are divided by the spec scale ``L`` and variance errors by
    ``L**2``, so the residual is invariant under shifting and rescaling.
    """
    got = moments_of(pair)
    scale = _scale(spec) or 1.0
    errs = [
        abs(math.fsum(pair.p) - 1.0),
        abs(math.fsum(pair.q) - 1.0),
        abs(got.mean_p - spec.mean_p) / scale,
        abs(got.mean_q - spec.mean_q) / scale,
        abs(got.sigma_p**2 - spec.sigma_p**2) / scale**2,
        abs(got.sigma_q**2 - spec.sigma_q**2) / scale**2,
    ]
    return max(errs)


def off_top2_mass(pair: DiscretePair, merge_tol: float = 0.0) -> float:
    """Mass left outside the two heaviest support points (max over P and Q).

    Points closer than ``merge_tol`` are pooled first, so a numerically
    split atom counts once.
    """
    support, p, q = pair.support, pair.p, pair.q
    if merge_tol > 0 and support.size > 1:
        labels = np.concatenate([[0], np.cumsum(np.diff(support) > merge_tol)])
        p = np.bincount(labels, weights=p)
        q = np.bincount(labels, weights=q)
    if p.size <= 2:
        return 0.0
    top = np.argsort(p + q)[-2:]
    return max(1.0 - float(p[top].sum()), 1.0 - float(q[top].sum()), 0.0)


# --------------------------------------------------------------------------
# feasible-pair sampling


def _check_radius(spec: MomentSpec, radius: float):
    for mean, sd, name in ((spec.mean_p, spec.sigma_p, "P"), (spec.mean_q, spec.sigma_q, "Q")):
        if radius < abs(mean) + 10.0 * sd:
            raise InfeasibleSupport(
                f"radius {radius:g} < |m| + 10 sigma = {abs(mean) + 10 * sd:g} for {name}"
            )


_BASES: dict[int, np.ndarray] = {}


def _bases(n: int) -> np.ndarray:
    if n not in _BASES:
        _BASES[n] = np.array(list(itertools.combinations(range(n), 3)), dtype=np.intp)
    return _BASES[n]


def _vertex_masses(x: np.ndarray, bases: np.ndarray) -> np.ndarray:
    """Lagrange weights on each 3-point basis of standardized points ``x``.

    On three points the unique law with mean 0 and variance 1 has
    ``p_i = (1 + x_j x_k) / ((x_i - x_j)(x_i - x_k))``. ``x`` may carry
    leading batch axes; the result has shape ``x.shape[:-1] + (len(bases), 3)``.
    """
    xi, xj, xk = x[..., bases[:, 0]], x[..., bases[:, 1]], x[..., bases[:, 2]]
    pi = (1.0 + xj * xk) / ((xi - xj) * (xi - xk))
    pj = (1.0 + xi * xk) / ((xj - xi) * (xj - xk))
    pk = (1.0 + xi * xj) / ((xk - xi) * (xk - xj))
    return np.stack([pi, pj, pk], axis=-1)


def _polytope_vertices(support: np.ndarray, mean: float, sd: float):
    """All basic feasible solutions of ``{p >= 0, sum p = 1, E u = mean, Var u = sd**2}``.

    Returns ``(bases, masses)`` with ``masses[k]`` the three masses on
    ``support[bases[k]]``; only nonnegative solutions are kept.
    """
    bases = _bases(support.size)
    masses = _vertex_masses((support - mean) / max(sd, 1e-300), bases)
    ok = np.all(masses >= -1e-12, axis=1)
    return bases[ok], np.clip(masses[ok], 0.0, None)


def _random_vertices(support, mean, sd, cost):
    """Cheapest vertex under a random linear cost, one per row of ``support``.

    Returns ``(probs, found)``; rows without a feasible vertex have
    ``found`` false and zero ``probs``.
    """
    batch, n = support.shape
    probs = np.zeros((batch, n))
    if math.comb(n, 3) > _ENUMERATION_LIMIT:
        found = np.zeros(batch, dtype=bool)
        for i in range(batch):
            row = _random_vertex_lp(support[i], mean, sd, cost[i])
            if row is not None:
                probs[i], found[i] = row, True
        return probs, found
    bases = _bases(n)
    with np.errstate(divide="ignore", invalid="ignore"):
        masses = _vertex_masses((support - mean) / sd, bases)
    ok = np.all(masses >= -1e-12, axis=-1)
    masses = np.clip(masses, 0.0, None)
    total = np.where(ok, np.sum(cost[:, bases] * masses, axis=-1), np.inf)
    k = np.argmin(total, axis=-1)
    rows = np.arange(batch)
    found = np.isfinite(total[rows, k])
    np.put_along_axis(probs, bases[k], np.where(found[:, None], masses[rows, k], 0.0), axis=1)
    return probs, found


def _random_vertex_lp(support, mean, sd, cost) -> Optional[np.ndarray]:
    from scipy.optimize import linprog

    x = (support - mean) / sd
    a_eq = np.vstack([np.ones_like(x), x, x * x])
    res = linprog(cost, A_eq=a_eq, b_eq=[1.0, 0.0, 1.0], bounds=(0, None), method="highs")
    if res.status != 0:
        return None
    probs = np.clip(res.x, 0.0, None)
    return probs / probs.sum()


def _draw_supports(spec: MomentSpec, shape, radius: float, rng) -> np.ndarray:
    # each point: near P's mean, near Q's mean, or anywhere in the box; a
    # vertex needs neighbours within about one sd on both sides of each mean
    source = rng.choice(3, size=shape, p=[0.4, 0.4, 0.2])
    pts = np.where(
        source == 0,
        rng.normal(spec.mean_p, spec.sigma_p, shape),
        np.where(source == 1, rng.normal(spec.mean_q, spec.sigma_q, shape),
                 rng.uniform(-radius, radius, shape)),
    )
    return np.sort(np.clip(pts, -radius, radius), axis=-1)


def _check_sampling(spec: MomentSpec, config: VerificationConfig):
    if config.n_points < 4:
        raise InvalidParameters("sampling needs n_points >= 4")
    if spec.sigma_p == 0 or spec.sigma_q == 0:
        raise DegenerateSpec("a point-mass marginal leaves no sampling freedom")
    _check_radius(spec, config.radius)


def _sample_batch(spec: MomentSpec, config: VerificationConfig, count: int, rng):
    n = config.n_points
    support = np.empty((count, n))
    p = np.empty((count, n))
    q = np.empty((count, n))
    todo = np.arange(count)
    for _ in range(MAX_SUPPORT_ATTEMPTS):
        u = _draw_supports(spec, (todo.size, n), config.radius, rng)
        pp, ok_p = _random_vertices(u, spec.mean_p, spec.sigma_p, rng.random((todo.size, n)) + 1e-3)
        qq, ok_q = _random_vertices(u, spec.mean_q, spec.sigma_q, rng.random((todo.size, n)) + 1e-3)
        ok = ok_p & ok_q & np.all(np.diff(u, axis=-1) > 0, axis=-1)
        done = todo[ok]
        support[done], p[done], q[done] = u[ok], pp[ok], qq[ok]
        todo = todo[~ok]
        if todo.size == 0:
            return support, p, q
    raise InfeasibleSupport(
        f"no feasible support after {MAX_SUPPORT_ATTEMPTS} attempts "
        f"(n_points={n}, radius={config.radius:g})"
    )


def sample_feasible_pair(
    spec: MomentSpec, config: VerificationConfig, trial_index: int
) -> DiscretePair:
    """A random vertex pair of the moment polytope on a random shared support.

    Deterministic in ``(config.seed, trial_index)``.
    """
    _check_sampling(spec, config)
    rng = np.random.default_rng([config.seed, 0, trial_index])
    support, p, q = _sample_batch(spec, config, 1, rng)
    return DiscretePair(support[0], p[0], q[0])


def sample_feasible_batch(
    spec: MomentSpec, config: VerificationConfig, count: int, block: int = 0
):
    """``count`` sampled pairs as arrays ``(support, p, q)`` of shape ``(count, n)``.

    Same distribution as :func:`sample_feasible_pair`, vectorized over
    trials; deterministic in ``(config.seed, block)``.
    """
    _check_sampling(spec, config)
    rng = np.random.default_rng([config.seed, 2, block])
    return _sample_batch(spec, config, int(count), rng)


def batch_hellinger_sq(p: np.ndarray, q: np.ndarray) -> np.ndarray:
    """Row-wise ``1/2 * sum (sqrt(p) - sqrt(q))^2``, clipped to ``[0, 1]``."""
    diff = np.sqrt(np.asarray(p, dtype=float)) - np.sqrt(np.asarray(q, dtype=float))
    return np.clip(0.5 * np.sum(diff * diff, axis=-1), 0.0, 1.0)


def _record(pair: DiscretePair, spec: MomentSpec, kind: RecordKind, tol: float, **extra):
    h2 = hellinger_sq(pair)
    bound = hellinger_lower_bound(spec)
    resid = moment_residual(pair, spec)
    return VerificationRecord(
        pair=pair,
        achieved_h2=h2,
        bound=bound,
        gap=h2 - bound,
        moment_residual=resid,
        kind=kind,
        feasible=resid <= tol,
        **extra,
    )


def _error_record(spec: MomentSpec, kind: RecordKind, exc: Exception) -> VerificationRecord:
    nan = float("nan")
    return VerificationRecord(
        pair=None, achieved_h2=nan, bound=hellinger_lower_bound(spec), gap=nan,
        moment_residual=nan, kind=kind, feasible=False,
        error=f"{type(exc).__name__}: {exc}",
    )


# --------------------------------------------------------------------------
# augmented Lagrangian minimization, batched over restarts


class _Problem:
    """Normalized problem: coordinates ``(u - center) / scale``.

    Variables per restart are ``x = [w (n), z (n), u (n)]``; the objective is
    ``-sum w z`` and the six equality constraints are the first three raw
    moments of ``w**2`` and ``z**2``.
    """

    _POWERS = np.arange(3)

    def __init__(self, spec: MomentSpec, n: int, radius: float):
        self.n = n
        self.center = 0.5 * (spec.mean_p + spec.mean_q)
        self.scale = _scale(spec)
        mp = (spec.mean_p - self.center) / self.scale
        mq = (spec.mean_q - self.center) / self.scale
        self.sp = spec.sigma_p / self.scale
        self.sq = spec.sigma_q / self.scale
        self.mp, self.mq = mp, mq
        self.target = np.array(
            [1.0, mp, self.sp**2 + mp * mp, 1.0, mq, self.sq**2 + mq * mq])
        self.u_lo = (-radius - self.center) / self.scale
        self.u_hi = (radius - self.center) / self.scale
        self.lo = np.concatenate([np.zeros(2 * n), np.full(n, self.u_lo)])
        self.hi = np.concatenate([np.ones(2 * n), np.full(n, self.u_hi)])

    def to_internal(self, u):
        return (np.asarray(u) - self.center) / self.scale

    def to_external(self, u):
        return self.center + self.scale * np.asarray(u)

    def project(self, x):
        return np.clip(x, self.lo, self.hi)

    def split(self, x):
        n = self.n
        return x[..., :n], x[..., n:2 * n], x[..., 2 * n:]

    def constraints(self, x):
        w, z, u = self.split(x)
        masses = np.stack([w * w, z * z], axis=-2)            # (B, 2, n)
        powers = u[..., None] ** self._POWERS                  # (B, n, 3)
        moments = masses @ powers                              # (B, 2, 3)
        return moments.reshape(x.shape[:-1] + (6,)) - self.target

    def merit(self, x, lam, rho):
        w, z, _ = self.split(x)
        c = self.constraints(x)
        return (-(w * z).sum(-1) + (lam * c).sum(-1)
                + 0.5 * rho * (c * c).sum(-1))

    def _grad_parts(self, x, mu):
        # gradient of -sum w z + mu . c(x)
        w, z, u = self.split(x)
        powers = u[..., None] ** self._POWERS                  # (B, n, 3)
        mu_p, mu_q = mu[..., None, :3], mu[..., None, 3:]
        poly_p = (powers * mu_p).sum(-1)
        poly_q = (powers * mu_q).sum(-1)
        dpoly_p = mu_p[..., 1] + 2.0 * mu_p[..., 2] * u
        dpoly_q = mu_q[..., 1] + 2.0 * mu_q[..., 2] * u
        gw = -z + 2.0 * w * poly_p
        gz = -w + 2.0 * z * poly_q
        gu = w * w * dpoly_p + z * z * dpoly_q
        return np.concatenate([gw, gz, gu], axis=-1)

    def grad(self, x, lam, rho):
        c = self.constraints(x)
        return self._grad_parts(x, lam + rho[..., None] * c)

    def multiplier_estimate(self, x):
        """Least-squares multipliers for ``grad f + J^T lam = 0``."""
        batch = x.shape[0]
        zero = np.zeros((batch, 6))
        g0 = self._grad_parts(x, zero)
        # the gradient is affine in the multipliers, so columns of J^T are differences
        jac = np.stack([self._grad_parts(x, np.broadcast_to(e, (batch, 6))) - g0
                        for e in np.eye(6)], axis=-1)
        return np.array([np.linalg.lstsq(jac[b], -g0[b], rcond=None)[0]
                         for b in range(batch)])


_MEMORY = 10
AL_TOL = 1e-6
INNER_TOL = 1e-7
STALL_WINDOW = 5


def _spg(prob: _Problem, x, lam, rho, tol, max_iter, active):
    """Spectral projected gradient, batched over restarts.

    Barzilai-Borwein steps with a non-monotone Armijo backtracking test
    against the worst of the last few merit values.
    """
    x = x.copy()
    g = prob.grad(x, lam, rho)
    f = prob.merit(x, lam, rho)
    history = np.tile(f[:, None], (1, _MEMORY))
    pg = np.abs(prob.project(x - g) - x).max(-1)
    alpha = np.clip(1.0 / np.maximum(pg, 1e-12), 1e-8, 1.0)
    running = active & (pg > tol)
    for it in range(max_iter):
        if not running.any():
            break
        idx = np.flatnonzero(running)
        xb, gb = x[idx], g[idx]
        lam_b, rho_b = lam[idx], rho[idx]
        ref = history[idx].max(-1)
        d = prob.project(xb - alpha[idx, None] * gb) - xb
        slope = (gb * d).sum(-1)
        t = np.ones(idx.size)
        x_new = xb + d
        f_new = prob.merit(x_new, lam_b, rho_b)
        accepted = f_new <= ref + 1e-4 * slope
        for _ in range(50):
            if accepted.all():
                break
            todo = np.flatnonzero(~accepted)
            t[todo] *= 0.5
            x_try = xb[todo] + t[todo, None] * d[todo]
            f_try = prob.merit(x_try, lam_b[todo], rho_b[todo])
            x_new[todo], f_new[todo] = x_try, f_try
            accepted[todo] = f_try <= ref[todo] + 1e-4 * t[todo] * slope[todo]
        g_new = prob.grad(x_new, lam_b, rho_b)
        s = x_new - xb
        y = g_new - gb
        sy = (s * y).sum(-1)
        ss = (s * s).sum(-1)
        alpha[idx] = np.where(sy > 0, np.clip(ss / np.where(sy > 0, sy, 1.0), 1e-12, 1e12), 1e3)
        x[idx], g[idx], f[idx] = x_new, g_new, f_new
        history[idx, it % _MEMORY] = f_new
        pg_b = np.abs(prob.project(x_new - g_new) - x_new).max(-1)
        # a failed line search means no further progress at this penalty
        running[idx] = accepted & (pg_b > tol) & (np.abs(s).max(-1) > 1e-16)
    return x


def _augmented_lagrangian(prob: _Problem, x0, config: VerificationConfig):
    """Multiplier updates ``lam += rho * c`` with ``rho`` doubled every outer step.

    Stops a restart once its constraint residual is below ``AL_TOL``; exact
    feasibility is then restored by :func:`_restore_masses`.
    """
    x = prob.project(x0)
    batch = x.shape[0]
    lam = prob.multiplier_estimate(x)
    rho = np.full(batch, 10.0)
    active = np.ones(batch, dtype=bool)
    target = max(AL_TOL, 0.1 * config.tol_moments)
    history = []
    for k in range(config.max_outer):
        inner_tol = max(INNER_TOL, 10.0 ** -(k + 2))
        x = _spg(prob, x, lam, rho, inner_tol, config.max_inner, active)
        c = prob.constraints(x)
        resid = np.abs(c).max(-1)
        done = (resid <= target) & (inner_tol <= INNER_TOL)
        # a restart whose residual has not halved in STALL_WINDOW steps is stuck
        if k >= 2 * STALL_WINDOW:
            done |= resid > 0.5 * history[-STALL_WINDOW]
        history.append(resid)
        active &= ~done
        if not active.any():
            break
        lam = np.where(active[:, None], lam + rho[:, None] * c, lam)
        rho = np.where(active, np.minimum(2.0 * rho, 1e12), rho)
    return x


def _restore_masses(u, probs, mean, sd):
    """Nearest masses on fixed support ``u`` with exact mean and sd.

    Euclidean projection onto the three linear moment equations; entries
    driven negative are pinned to zero and the projection repeated.
    Returns None when no nonnegative solution is found.
    """
    x = (u - mean) / sd if sd > 0 else u - mean
    target = np.array([1.0, 0.0, 1.0 if sd > 0 else 0.0])
    free = np.ones(u.size, dtype=bool)
    p = probs.copy()
    for _ in range(u.size):
        a = np.vstack([np.ones(u.size), x, x * x])[:, free]
        resid = a @ p[free] - target
        try:
            step = a.T @ np.linalg.solve(a @ a.T, resid)
        except np.linalg.LinAlgError:
            return None
        p[free] -= step
        neg = free & (p < 0)
        if not neg.any():
            return p
        p[neg] = 0.0
        free &= ~neg
        if free.sum() < 2:
            return None
    return None


def _merge_close(x, prob: _Problem, tol: float):
    """Pool support points closer than ``tol`` (internal units) into one."""
    w, z, u = prob.split(x)
    order = np.argsort(u)
    u, p, q = u[order], (w * w)[order], (z * z)[order]
    labels = np.concatenate([[0], np.cumsum(np.diff(u) > tol)])
    k = labels[-1] + 1
    if k == u.size:
        return None
    weight = p + q
    pooled_w = np.bincount(labels, weights=weight)
    pooled_u = np.bincount(labels, weights=weight * u) / np.where(pooled_w > 0, pooled_w, 1.0)
    first = np.concatenate([[True], np.diff(labels) > 0])
    pooled_u = np.where(pooled_w > 0, pooled_u, u[first])
    pp = np.bincount(labels, weights=p)
    qq = np.bincount(labels, weights=q)
    pad = prob.n - k
    # massless filler points go where they cannot collide with the pooled atoms
    filler = np.linspace(prob.u_lo, prob.u_hi, pad + 2)[1:-1]
    return np.concatenate([np.sqrt(np.pad(pp, (0, pad))), np.sqrt(np.pad(qq, (0, pad))),
                           np.concatenate([pooled_u, filler])])


def _padded_start(prob: _Problem, support, p, q, rng):
    """Embed a pair with ``len(support) <= n`` into ``n`` points (extra points massless)."""
    n = prob.n
    u = prob.to_internal(support)
    m = u.size
    if m > n:
        raise InvalidParameters("seed pair has more points than n_points")
    extra = rng.uniform(prob.lo[2 * n], prob.hi[2 * n], n - m)
    return np.concatenate([np.sqrt(np.pad(p, (0, n - m))),
                           np.sqrt(np.pad(q, (0, n - m))),
                           np.concatenate([u, extra])])


def _starts(spec: MomentSpec, config: VerificationConfig, prob: _Problem):
    rng = np.random.default_rng([config.seed, 1])
    n = config.n_points
    starts = []
    if spec.mean_gap != 0:
        att = binary_attainer(spec)
        seed_pair = att.pair()
    else:
        seed_pair = _equal_means_seed(spec, config.radius, n)
    if seed_pair is not None:
        starts.append(_padded_start(prob, seed_pair.support, seed_pair.p, seed_pair.q, rng))

    can_sample = n >= 4 and spec.sigma_p > 0 and spec.sigma_q > 0
    trial = 0
    while len(starts) < config.n_restarts:
        x = None
        if can_sample:
            try:
                pair = sample_feasible_pair(spec, config, 10**9 + trial)
                blend = 0.99
                x = np.concatenate([np.sqrt(blend * pair.p + (1 - blend) / n),
                                    np.sqrt(blend * pair.q + (1 - blend) / n),
                                    prob.to_internal(pair.support)])
            except HellingerBoundError:
                can_sample = False
        if x is None:
            # jittered copy of the first start, or a uniform random start
            if starts:
                x = starts[0] + rng.normal(0.0, 0.05, 3 * n)
                x[: 2 * n] = np.abs(x[: 2 * n])
            else:
                x = np.concatenate([np.full(2 * n, n**-0.5),
                                    np.sort(rng.uniform(-3.0, 3.0, n))])
        starts.append(x)
        trial += 1
    return np.array(starts)


def _equal_means_seed(spec: MomentSpec, radius: float, n: int) -> Optional[DiscretePair]:
    if n < 4 or spec.sigma_p <= 0 or spec.sigma_q <= 0:
        return None
    # largest power-of-two j whose outer atoms stay inside half the box
    best = None
    for power in range(41):
        try:
            pair = equal_means_sequence(spec.sigma_p, spec.sigma_q, 2**power)
        except InvalidParameters:
            continue
        shifted = pair.support + spec.mean_p
        if np.abs(shifted).max() > 0.5 * radius:
            break
        best = DiscretePair(shifted, pair.p, pair.q)
    return best


MERGE_TOL = 1e-3


def _solution_pair(prob: _Problem, x) -> Optional[DiscretePair]:
    w, z, u = prob.split(x)
    p, q = w * w, z * z
    # w = z = 0 is a stationary point of the square-root parameterization
    if not (np.all(np.isfinite(x)) and p.sum() > 0 and q.sum() > 0):
        return None
    p_fixed = _restore_masses(u, p, prob.mp, prob.sp)
    q_fixed = _restore_masses(u, q, prob.mq, prob.sq)
    p = p if p_fixed is None else p_fixed
    q = q if q_fixed is None else q_fixed
    u, p, q = _newton_polish(prob, u, p, q)
    return DiscretePair(prob.to_external(u), p / p.sum(), q / q.sum())


def _moment_defect(prob: _Problem, u, p, q) -> np.ndarray:
    return np.array([
        p.sum() - 1.0, p @ u - prob.mp, p @ (u - prob.mp) ** 2 - prob.sp**2,
        q.sum() - 1.0, q @ u - prob.mq, q @ (u - prob.mq) ** 2 - prob.sq**2,
    ])


def _newton_polish(prob: _Problem, u, p, q, max_iter: int = 20):
    """Minimum-norm Newton steps on the moment equations over ``(p, q, u)``.

    Needed when the support itself must move, e.g. with two points, where
    masses alone cannot meet six equations. Zero masses stay zero; a step
    is halved until all masses stay nonnegative and the defect shrinks.
    """
    n = u.size
    act_p, act_q = p > 0, q > 0
    defect = np.abs(_moment_defect(prob, u, p, q)).max()
    for _ in range(max_iter):
        if defect <= 1e-15:
            break
        c = _moment_defect(prob, u, p, q)
        jac = np.zeros((6, 3 * n))
        dp, dq = u - prob.mp, u - prob.mq
        jac[0, :n] = 1.0
        jac[1, :n] = u
        jac[2, :n] = dp**2
        jac[3, n:2 * n] = 1.0
        jac[4, n:2 * n] = u
        jac[5, n:2 * n] = dq**2
        jac[1, 2 * n:] = p
        jac[2, 2 * n:] = 2.0 * p * dp
        jac[4, 2 * n:] = q
        jac[5, 2 * n:] = 2.0 * q * dq
        cols = np.concatenate([act_p, act_q, np.ones(n, dtype=bool)])
        step = np.zeros(3 * n)
        step[cols] = np.linalg.lstsq(jac[:, cols], -c, rcond=None)[0]
        t = 1.0
        for _ in range(30):
            p_new, q_new = p + t * step[:n], q + t * step[n:2 * n]
            u_new = u + t * step[2 * n:]
            if p_new.min() >= 0 and q_new.min() >= 0:
                new_defect = np.abs(_moment_defect(prob, u_new, p_new, q_new)).max()
                if new_defect < defect:
                    break
            t *= 0.5
        else:
            break
        u, p, q, defect = u_new, p_new, q_new, new_defect
    return u, p, q


def _optimized_record(prob, x, spec, config) -> Optional[VerificationRecord]:
    pair = _solution_pair(prob, x)
    if pair is None:
        return None
    massive = (pair.p + pair.q) > CONCENTRATION_TOL
    touches = bool(np.any(massive & (np.abs(pair.support) >= config.radius * (1 - 1e-9))))
    return _record(
        pair, spec, RecordKind.OPTIMIZED, config.tol_moments,
        off_top2_mass=off_top2_mass(pair, merge_tol=1e-9 * prob.scale),
        touches_box=touches,
    )


def minimize_h2(spec: MomentSpec, config: VerificationConfig) -> VerificationRecord:
    """Multi-start minimization of ``H^2`` over pairs on ``n`` points in ``[-R, R]``.

    Restart 0 starts at the binary attainer padded with massless points
    (for equal means: at a member of the vanishing sequence); the rest
    start from sampled feasible pairs. Each local solution has its masses
    projected back onto the moment equations; solutions with support
    points closer than ``MERGE_TOL * L`` are also pooled and re-polished,
    and both versions compete.

    Returns the feasible candidate with the smallest ``H^2``; candidates
    within ``tol_moments`` of it count as tied and the most concentrated
    one wins. Raises :class:`ConvergenceFailure` (carrying the
    least-infeasible record) when no candidate meets ``tol_moments``.
    """
    if _scale(spec) == 0:
        raise DegenerateSpec("both laws are the same point mass")
    if spec.mean_gap != 0:
        att = binary_attainer(spec)
        if max(abs(att.u1), abs(att.u2)) > config.radius:
            raise InvalidParameters(
                f"attainer support ({att.u2:g}, {att.u1:g}) exceeds radius {config.radius:g}"
            )
    prob = _Problem(spec, config.n_points, config.radius)
    xs = _augmented_lagrangian(prob, _starts(spec, config, prob), config)
    records = [_optimized_record(prob, x, spec, config) for x in xs]

    merged = [m for m in (_merge_close(x, prob, MERGE_TOL) for x in xs) if m is not None]
    if merged:
        xs_merged = _augmented_lagrangian(prob, np.array(merged), config)
        records += [_optimized_record(prob, x, spec, config) for x in xs_merged]
    records = [rec for rec in records if rec is not None]
    if not records:
        raise ConvergenceFailure("every restart collapsed to zero mass")

    feasible = [rec for rec in records if rec.feasible]
    if not feasible:
        best = min(records, key=lambda rec: rec.moment_residual)
        raise ConvergenceFailure(
            f"no restart reached moment residual {config.tol_moments:g} "
            f"(best {best.moment_residual:.3e})", record=best)
    lowest = min(rec.achieved_h2 for rec in feasible)
    tied = [rec for rec in feasible if rec.achieved_h2 <= lowest + config.tol_moments]
    best = min(tied, key=lambda rec: (rec.off_top2_mass, rec.achieved_h2))
    if best.touches_box:
        logger.warning("minimizer touches the box |u| = R; treat as inconclusive")
    return best


# --------------------------------------------------------------------------
# equal-means vanishing sequence


def equal_means_sequence(sigma_p: float, sigma_q: float, j: int) -> DiscretePair:
    """Four-point zero-mean pair with standard deviations ``sigma_p, sigma_q``.

    With ``mu = sqrt(1 + j (sigma_q**2 - 1))`` and
    ``xi = (sigma_p**2 - 1) / (sigma_q**2 - 1)``, Q puts ``1/(2j)`` on
    ``+-mu`` and P puts ``xi/(2j)`` there, the rest on ``+-1``. Its squared
    Hellinger distance equals ``binary_hellinger_sq(xi/j, 1/j)``. Variances
    below one (or ``sigma_q**2`` within 1e-6 of one) are handled by building
    the pair for rescaled variances and shrinking the support back.
    """
    if not (sigma_p > 0 and sigma_q > 0 and math.isfinite(sigma_p) and math.isfinite(sigma_q)):
        raise InvalidParameters("standard deviations must be positive and finite")
    if int(j) != j or j < 1:
        raise InvalidParameters(f"j must be a positive integer, got {j}")
    j = int(j)
    var_p, var_q = sigma_p**2, sigma_q**2
    shrink = 1.0
    low = min(var_p, var_q)
    if low < 1.0 or abs(var_q - 1.0) < 1e-6:
        factor = 2.0 / low
        var_p, var_q = var_p * factor, var_q * factor
        shrink = math.sqrt(1.0 / factor)
    xi = (var_p - 1.0) / (var_q - 1.0)
    outer_p = xi / (2.0 * j)
    outer_q = 1.0 / (2.0 * j)
    if not (0.0 <= outer_p <= 0.5):
        raise InvalidParameters(
            f"masses leave [0, 1] for j={j} (xi={xi:g}); need j >= xi"
        )
    mu = math.sqrt(1.0 + j * (var_q - 1.0))
    support = shrink * np.array([-mu, -1.0, 1.0, mu])
    p = np.array([outer_p, 0.5 - outer_p, 0.5 - outer_p, outer_p])
    q = np.array([outer_q, 0.5 - outer_q, 0.5 - outer_q, outer_q])
    return DiscretePair(support, p, q)


def sequence_value(sigma_p: float, sigma_q: float, j: int) -> float:
    """The binary value ``h^2(xi/j, 1/j)`` the sequence must reproduce."""
    var_p, var_q = sigma_p**2, sigma_q**2
    low = min(var_p, var_q)
    if low < 1.0 or abs(var_q - 1.0) < 1e-6:
        var_p, var_q = var_p * 2.0 / low, var_q * 2.0 / low
    xi = (var_p - 1.0) / (var_q - 1.0)
    return binary_hellinger_sq(xi / j, 1.0 / j)


def sequence_record(sigma_p: float, sigma_q: float, j: int, tol: float = 1e-8):
    spec = MomentSpec(0.0, sigma_p, 0.0, sigma_q)
    return _record(equal_means_sequence(sigma_p, sigma_q, j), spec, RecordKind.SEQUENCE, tol)


# --------------------------------------------------------------------------
# batch driver


@dataclass(frozen=True)
class VerificationSummary:
    n_records: int
    n_feasible: int
    n_errors: int
    violations: int
    min_gap: Optional[float]
    optimizer_gap: Optional[float]
    two_point: Optional[bool]
    optimizer_error: Optional[str] = None

    def to_dict(self) -> dict:
        return dict(self.__dict__)


@dataclass(frozen=True)
class VerificationRun:
    records: list = field(default_factory=list)
    summary: Optional[VerificationSummary] = None

    def __iter__(self):
        return iter(self.records)

    def __len__(self):
        return len(self.records)


def summarize(records) -> VerificationSummary:
    ok = [r for r in records if r.error is None]
    feasible = [r for r in ok if r.feasible]
    optimized = [r for r in records if r.kind is RecordKind.OPTIMIZED]
    opt = optimized[-1] if optimized else None
    return VerificationSummary(
        n_records=len(records),
        n_feasible=len(feasible),
        n_errors=len(records) - len(ok),
        violations=sum(r.violation for r in records),
        min_gap=min((r.gap for r in feasible), default=None),
        optimizer_gap=None if opt is None or opt.error else opt.gap,
        two_point=(None if opt is None or opt.error or opt.off_top2_mass is None
                   else opt.off_top2_mass < CONCENTRATION_TOL),
        optimizer_error=None if opt is None else opt.error,
    )


def iter_verification(spec: MomentSpec, config: VerificationConfig, optimize: bool = True):
    """Yield sampled records in trial order, then the optimized record."""
    for trial in range(config.n_trials):
        try:
            pair = sample_feasible_pair(spec, config, trial)
            yield _record(pair, spec, RecordKind.SAMPLED, config.tol_moments)
        except HellingerBoundError as exc:
            yield _error_record(spec, RecordKind.SAMPLED, exc)
    if optimize:
        try:
            yield minimize_h2(spec, config)
        except ConvergenceFailure as exc:
            if exc.record is None:
                yield _error_record(spec, RecordKind.OPTIMIZED, exc)
            else:
                yield replace(exc.record, error=f"ConvergenceFailure: {exc}")
        except HellingerBoundError as exc:
            yield _error_record(spec, RecordKind.OPTIMIZED, exc)


def run_verification(
    spec: MomentSpec, config: VerificationConfig, optimize: bool = True
) -> VerificationRun:
    """``n_trials`` sampled records followed by one optimized record.

    Per-record failures become error records; the batch is never aborted.
    Output is a deterministic function of ``(spec, config)``.
    """
    records = list(iter_verification(spec, config, optimize))
    return VerificationRun(records=records, summary=summarize(records))
