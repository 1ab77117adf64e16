import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy import integrate, stats

from hellinger_bound.closed_forms import (
    GaussianLaw,
    ShiftedExponentialLaw,
    discretize,
    discretize_pair,
    gaussian_h2,
    match_moments_exponential,
    match_moments_gaussian,
    shifted_exponential_h2,
)
from hellinger_bound.core_types import MomentSpec, hellinger_sq, moments_of
from hellinger_bound.errors import DegenerateSpec, InsufficientCoverage, InvalidLaw
from hellinger_bound.tight_bounds import hellinger_lower_bound

SPEC1 = MomentSpec.from_variances(10, 100, 3, 9)
SPEC2 = MomentSpec.from_variances(20, 30, 10, 20)


def quad_h2(pdf_p, pdf_q, lo, hi, points=None):
    """1 - integral of sqrt(p q), by adaptive quadrature."""
    val, _ = integrate.quad(lambda x: math.sqrt(pdf_p(x) * pdf_q(x)), lo, hi,
                            points=points, limit=500, epsabs=1e-13, epsrel=1e-12)
    return 1 - val


class TestReferenceValues:
    @pytest.mark.parametrize("spec, gauss, expo", [(SPEC1, 0.337, 0.157), (SPEC2, 0.400, 0.636)])
    def test_three_decimals(self, spec, gauss, expo):
        assert abs(gaussian_h2(*match_moments_gaussian(spec)) - gauss) <= 5e-4
        assert abs(shifted_exponential_h2(*match_moments_exponential(spec)) - expo) <= 5e-4

    def test_identical_laws(self):
        law = GaussianLaw(1.0, 2.0)
        assert gaussian_h2(law, law) == 0.0
        elaw = ShiftedExponentialLaw(2.0, -1.0)
        assert shifted_exponential_h2(elaw, elaw) == 0.0


class TestMatching:
    def test_spec1_shifts_vanish(self):
        p, q = match_moments_exponential(SPEC1)
        assert (p.scale, p.shift, q.scale, q.shift) == (10.0, 0.0, 3.0, 0.0)

    def test_spec2(self):
        p, q = match_moments_exponential(SPEC2)
        assert p.scale == pytest.approx(math.sqrt(30), rel=1e-15)
        assert q.scale == pytest.approx(math.sqrt(20), rel=1e-15)
        assert p.shift == pytest.approx(20 - math.sqrt(30), rel=1e-15)
        assert q.shift == pytest.approx(10 - math.sqrt(20), rel=1e-15)

    def test_unit_scales(self):
        p, q = match_moments_exponential(MomentSpec(1, 1, 2, 1))
        assert (p.scale, p.shift, q.scale, q.shift) == (1.0, 0.0, 1.0, 1.0)

    @pytest.mark.parametrize("spec", [SPEC1, SPEC2, MomentSpec(-3, 0.2, 4, 7)])
    def test_matched_moments_analytic(self, spec):
        for law, mean, sd in zip(match_moments_exponential(spec), (spec.mean_p, spec.mean_q),
                                 (spec.sigma_p, spec.sigma_q)):
            ref = stats.expon(loc=law.shift, scale=law.scale)
            assert ref.mean() == pytest.approx(mean, rel=1e-14)
            assert ref.std() == pytest.approx(sd, rel=1e-14)
            assert law.mean == pytest.approx(mean, rel=1e-14)

    def test_degenerate(self):
        with pytest.raises(DegenerateSpec):
            match_moments_exponential(MomentSpec(0, 0, 1, 1))
        with pytest.raises(DegenerateSpec):
            match_moments_gaussian(MomentSpec(0, 1, 1, 0))

    def test_invalid_laws(self):
        with pytest.raises(InvalidLaw):
            GaussianLaw(0, 0)
        with pytest.raises(InvalidLaw):
            ShiftedExponentialLaw(-1.0)
        with pytest.raises(InvalidLaw):
            gaussian_h2(GaussianLaw(0, 1), ShiftedExponentialLaw(1.0))


class TestQuadratureOracle:
    @pytest.mark.parametrize("mp, sp, mq, sq", [(10, 10, 3, 3), (0, 1, 0.5, 2), (-2, 0.3, 4, 5)])
    def test_gaussian(self, mp, sp, mq, sq):
        p, q = stats.norm(mp, sp), stats.norm(mq, sq)
        lo, hi = min(mp - 40 * sp, mq - 40 * sq), max(mp + 40 * sp, mq + 40 * sq)
        want = quad_h2(p.pdf, q.pdf, lo, hi, points=[mp, mq])
        assert gaussian_h2(GaussianLaw(mp, sp), GaussianLaw(mq, sq)) == pytest.approx(want, abs=1e-9)

    @pytest.mark.parametrize("a1, d1, a2, d2", [(10, 0, 3, 0), (1, 2, 3, -1), (2, -1, 0.5, 1)])
    def test_shifted_exponential(self, a1, d1, a2, d2):
        p, q = stats.expon(loc=d1, scale=a1), stats.expon(loc=d2, scale=a2)
        start = max(d1, d2)
        want = quad_h2(p.pdf, q.pdf, start, start + 80 * max(a1, a2))
        got = shifted_exponential_h2(ShiftedExponentialLaw(a1, d1), ShiftedExponentialLaw(a2, d2))
        assert got == pytest.approx(want, abs=1e-9)

    def test_exponential_branches_agree_at_equal_shift(self):
        p, q = ShiftedExponentialLaw(2.0, 1.0), ShiftedExponentialLaw(5.0, 1.0)
        want = 1 - 2 * math.sqrt(10) / 7
        assert shifted_exponential_h2(p, q) == pytest.approx(want, rel=1e-14)
        assert shifted_exponential_h2(q, p) == pytest.approx(want, rel=1e-14)


laws = st.builds(GaussianLaw, st.floats(-50, 50), st.floats(0.01, 50))
exp_laws = st.builds(ShiftedExponentialLaw, st.floats(0.01, 50), st.floats(-50, 50))


@settings(max_examples=300, deadline=None)
@given(laws, laws)
def test_gaussian_symmetric_and_in_range(p, q):
    h = gaussian_h2(p, q)
    # exactly below 1, but 1 - exp(-40) already rounds to 1.0
    assert 0 <= h <= 1
    assert h == pytest.approx(gaussian_h2(q, p), abs=1e-15)


@settings(max_examples=300, deadline=None)
@given(exp_laws, exp_laws)
def test_exponential_symmetric_and_in_range(p, q):
    h = shifted_exponential_h2(p, q)
    assert 0 <= h <= 1
    assert h == pytest.approx(shifted_exponential_h2(q, p), abs=1e-15)


@settings(max_examples=300, deadline=None)
@given(st.floats(-50, 50), st.floats(-50, 50), st.floats(0.01, 50))
def test_gaussian_equal_sd_reduction(mp, mq, sd):
    want = -math.expm1(-((mp - mq) ** 2) / (8 * sd * sd))
    assert gaussian_h2(GaussianLaw(mp, sd), GaussianLaw(mq, sd)) == pytest.approx(want, rel=1e-12, abs=1e-15)


@settings(max_examples=200, deadline=None)
@given(st.builds(MomentSpec, st.floats(-50, 50), st.floats(0.01, 50), st.floats(-50, 50), st.floats(0.01, 50)))
def test_closed_forms_exceed_bound(spec):
    bound = hellinger_lower_bound(spec)
    assert gaussian_h2(*match_moments_gaussian(spec)) >= bound - 1e-12
    assert shifted_exponential_h2(*match_moments_exponential(spec)) >= bound - 1e-12


class TestDiscretize:
    def test_standard_gaussian(self):
        d = discretize(GaussianLaw(0, 1), 8.0, 4096)
        # truncated-normal oracle: mean 0 by symmetry, variance below 1 by the tail
        trunc = stats.truncnorm(-8, 8)
        assert abs(d.mean_error) <= 1e-8
        assert abs(d.var_error) <= 1e-5
        width = 16 / 4096
        assert d.var_error == pytest.approx(trunc.var() - 1 + width**2 / 12, abs=1e-9)
        assert d.support.size == 4096 and d.probs.sum() == pytest.approx(1.0, abs=1e-14)

    def test_exponential(self):
        law = ShiftedExponentialLaw(1.0)
        d = discretize(law, 40.0, 8192)
        assert abs(d.mean_error) <= 1e-4
        assert d.tail_mass <= 1e-6

    def test_identical_laws_zero_distance(self):
        pair = discretize_pair(GaussianLaw(1, 2), GaussianLaw(1, 2), 20.0, 512)
        assert hellinger_sq(pair) == 0.0

    def test_insufficient_coverage(self):
        with pytest.raises(InsufficientCoverage):
            discretize(GaussianLaw(0, 1), 3.0, 100)
        with pytest.raises(InsufficientCoverage):
            discretize_pair(GaussianLaw(0, 1), GaussianLaw(0, 10), 20.0, 100)

    def test_invalid_arguments(self):
        with pytest.raises(InvalidLaw):
            discretize(GaussianLaw(0, 1), 10.0, 1)
        with pytest.raises(InvalidLaw):
            discretize(GaussianLaw(0, 1), -1.0, 10)

    @pytest.mark.parametrize("spec", [SPEC1, SPEC2])
    def test_pair_matches_closed_form(self, spec):
        p, q = match_moments_gaussian(spec)
        pair = discretize_pair(p, q, 10 * max(spec.sigma_p, spec.sigma_q), 2**14)
        assert hellinger_sq(pair) == pytest.approx(gaussian_h2(p, q), abs=2e-4)
        assert hellinger_sq(pair) >= hellinger_lower_bound(moments_of(pair)) - 1e-9

    def test_exponential_pair_respects_bound(self):
        p, q = match_moments_exponential(SPEC1)
        pair = discretize_pair(p, q, 200.0, 2**14)
        assert hellinger_sq(pair) >= hellinger_lower_bound(moments_of(pair)) - 1e-9

    def test_large_shift_cdf_accuracy(self):
        law = ShiftedExponentialLaw(1.0, 1e8)
        d = discretize(law, 40.0, 4096)
        assert abs(d.mean_error) <= 1e-3
        assert np.all(d.probs >= 0)
