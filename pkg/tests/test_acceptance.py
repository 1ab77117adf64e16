"""End-to-end acceptance checks, one test per criterion.

Each test prints a single ``criterion N: PASS|FAIL ...`` line (visible even
without ``-s``) and then asserts, so the suite stays red on any failure.
Run on its own with ``pytest tests/test_acceptance.py``.
"""

import itertools
import math
import time

import numpy as np
import pytest

from hellinger_bound.closed_forms import (
    discretize_pair,
    gaussian_h2,
    match_moments_exponential,
    match_moments_gaussian,
    shifted_exponential_h2,
)
from hellinger_bound.core_types import MomentSpec, binary_hellinger_sq, hellinger_sq, moments_of
from hellinger_bound.tight_bounds import (
    beta_factors,
    binary_attainer,
    comparison_bound,
    hellinger_lower_bound,
)
from hellinger_bound.verifier import (
    VerificationConfig,
    batch_hellinger_sq,
    equal_means_sequence,
    minimize_h2,
    sample_feasible_batch,
)

SPEC1 = MomentSpec.from_variances(10, 100, 3, 9)
SPEC2 = MomentSpec.from_variances(20, 30, 10, 20)


@pytest.fixture
def report(capsys):
    def emit(number, ok, detail):
        with capsys.disabled():
            print(f"\ncriterion {number}: {'PASS' if ok else 'FAIL'}  {detail}")
    return emit


def random_specs(count, seed):
    """Means uniform in [-100, 100], sds log-uniform in [1e-3, 1e3], |a| >= 1e-6."""
    rng = np.random.default_rng(seed)
    specs = []
    while len(specs) < count:
        mp, mq = rng.uniform(-100, 100, 2)
        sp, sq = 10 ** rng.uniform(-3, 3, 2)
        if abs(mp - mq) >= 1e-6:
            specs.append(MomentSpec(mp, sp, mq, sq))
    return specs


def reference_values(spec):
    return (
        hellinger_lower_bound(spec),
        comparison_bound(spec),
        gaussian_h2(*match_moments_gaussian(spec)),
        shifted_exponential_h2(*match_moments_exponential(spec)),
    )


@pytest.mark.parametrize("number, spec, expected", [
    (1, SPEC1, (0.120, 0.092, 0.337, 0.157)),
    (2, SPEC2, (0.295, 0.250, 0.400, 0.636)),
])
def test_reference_examples(report, number, spec, expected):
    start = time.perf_counter()
    got = reference_values(spec)
    elapsed = time.perf_counter() - start
    ok = all(abs(g - e) <= 5e-4 for g, e in zip(got, expected)) and elapsed < 0.1
    report(number, ok, f"values {tuple(round(g, 5) for g in got)} vs {expected}, {elapsed * 1e3:.2f} ms")
    assert ok


def test_tightness(report):
    specs = random_specs(10_000, seed=3)
    start = time.perf_counter()
    worst_rel, worst_trip = 0.0, 0.0
    for spec in specs:
        pair = binary_attainer(spec).pair()
        bound = hellinger_lower_bound(spec)
        worst_rel = max(worst_rel, abs(hellinger_sq(pair) - bound) / bound)
        got = moments_of(pair)
        scale = max(spec.sigma_p, spec.sigma_q, abs(spec.mean_gap))
        worst_trip = max(
            worst_trip,
            abs(got.mean_p - spec.mean_p) / scale,
            abs(got.mean_q - spec.mean_q) / scale,
            abs(got.sigma_p - spec.sigma_p) / scale,
            abs(got.sigma_q - spec.sigma_q) / scale,
        )
    elapsed = time.perf_counter() - start
    ok = worst_rel <= 1e-10 and worst_trip <= 1e-9 and elapsed < 5
    report(3, ok, f"max rel H^2 error {worst_rel:.2e}, max moment error {worst_trip:.2e}, {elapsed:.2f} s")
    assert ok


def test_no_violations(report):
    specs = random_specs(20, seed=4)
    start = time.perf_counter()
    worst, total = math.inf, 0
    for block, spec in enumerate(specs):
        radius = 100 * max(abs(spec.mean_p) + spec.sigma_p, abs(spec.mean_q) + spec.sigma_q)
        config = VerificationConfig(n_points=6, radius=radius, seed=0)
        _, p, q = sample_feasible_batch(spec, config, 10_000, block=block)
        gaps = batch_hellinger_sq(p, q) - hellinger_lower_bound(spec)
        worst = min(worst, float(gaps.min()))
        total += gaps.size
    elapsed = time.perf_counter() - start
    ok = worst >= -1e-9 and total == 200_000 and elapsed < 60
    report(4, ok, f"{total} sampled pairs, min gap {worst:.3e}, {elapsed:.1f} s")
    assert ok


def test_optimizer_convergence(report):
    start = time.perf_counter()
    passed, cells = 0, []
    for ratio, sd_ratio in itertools.product([0.1, 0.5, 1, 3, 10], [0.1, 0.5, 1, 2, 10]):
        sp, sq = 1.0, sd_ratio
        spec = MomentSpec(ratio * (sp + sq), sp, 0.0, sq)
        att = binary_attainer(spec)
        radius = 4 * max(abs(att.u1), abs(att.u2)) + 10 * max(sp, sq) + abs(spec.mean_p)
        rec = minimize_h2(spec, VerificationConfig(n_points=5, radius=radius, n_restarts=20, seed=0))
        good = rec.gap <= 1e-4 and rec.off_top2_mass < 1e-6
        passed += good
        cells.append(f"{ratio}/{sd_ratio}:{rec.gap:.0e}")
    elapsed = time.perf_counter() - start
    ok = passed >= 0.95 * 25 and elapsed < 600
    report(5, ok, f"{passed}/25 cells converged to two points at the bound, {elapsed:.0f} s")
    assert ok, cells


def test_equal_means_vanishing(report):
    start = time.perf_counter()
    worst, values = 0.0, []
    for j in (10, 100, 1000, 10_000):
        h2 = hellinger_sq(equal_means_sequence(3.0, 2.0, j))
        xi = (9.0 - 1.0) / (4.0 - 1.0)
        worst = max(worst, abs(h2 - binary_hellinger_sq(xi / j, 1.0 / j)))
        values.append(h2)
    elapsed = time.perf_counter() - start
    ok = worst <= 1e-10 and values[-1] < 1e-3 and elapsed < 0.1
    report(6, ok, f"max |H^2 - h^2(xi/j, 1/j)| {worst:.1e}, H^2 at j=1e4 {values[-1]:.2e}, {elapsed * 1e3:.2f} ms")
    assert ok


def test_sandwich(report):
    specs = random_specs(10_000, seed=3)
    start = time.perf_counter()
    violations, beta_range = 0, [math.inf, -math.inf]
    for spec in specs:
        lo, hi = beta_factors(spec)
        l_bound = comparison_bound(spec)
        bound = hellinger_lower_bound(spec)
        beta_range = [min(beta_range[0], lo), max(beta_range[1], hi)]
        if not (lo * l_bound <= bound * (1 + 1e-12) and bound <= hi * l_bound * (1 + 1e-12)):
            violations += 1
        if not (1.0 <= lo <= hi <= 2.0):
            violations += 1
    elapsed = time.perf_counter() - start
    ok = violations == 0 and elapsed < 5
    report(7, ok, f"{violations} violations, beta range [{beta_range[0]:.4f}, {beta_range[1]:.4f}], {elapsed:.2f} s")
    assert ok


def test_discretization(report):
    start = time.perf_counter()
    worst, bound_gap = 0.0, math.inf
    for spec in (SPEC1, SPEC2):
        p, q = match_moments_gaussian(spec)
        pair = discretize_pair(p, q, 10 * max(spec.sigma_p, spec.sigma_q), 2**14)
        h2 = hellinger_sq(pair)
        worst = max(worst, abs(h2 - gaussian_h2(p, q)))
        bound_gap = min(bound_gap, h2 - hellinger_lower_bound(moments_of(pair)))
    elapsed = time.perf_counter() - start
    ok = worst <= 2e-4 and bound_gap >= -1e-9 and elapsed < 5
    report(8, ok, f"max |H^2_disc - H^2| {worst:.1e}, min gap to bound {bound_gap:.3f}, {elapsed:.2f} s")
    assert ok
