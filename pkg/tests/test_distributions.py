import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy import stats
from scipy.integrate import quad

from myerson_density import distributions as dist
from myerson_density.distributions import (
    GapMixture,
    PerturbedUniform,
    TruncExp,
    Uniform,
    check_regularity,
    perturbation_phi,
    sample,
    virtual_value,
)
from myerson_density.errors import DomainError, InvalidParameterError, ZeroDensityError

ALL_SPECS = [
    Uniform(0.0, 1.0),
    Uniform(2.0, 5.0),
    TruncExp(1.0, 0.0, 1.0),
    TruncExp(3.0, 1.0, 2.5),
    PerturbedUniform(0.05),
    PerturbedUniform(0.1),
    PerturbedUniform(0.2),
    PerturbedUniform(0.3),
    GapMixture(0.5, 0.0, 0.1, 0.9, 1.0),
]
REGULAR = [s for s in ALL_SPECS if not isinstance(s, GapMixture)]


def breakpoints(spec):
    return [*spec.kinks(), *(x for x, *_ in spec.jumps())]


def integrate(func, spec):
    lo, hi = spec.support
    edges = sorted({lo, hi, *(x for x in breakpoints(spec) if lo < x < hi)})
    return sum(quad(func, l, r, epsabs=1e-14, epsrel=1e-13)[0] for l, r in zip(edges, edges[1:]))


def away_from_breaks(spec, grid, gap=1e-4):
    br = np.array(breakpoints(spec) or [np.inf])
    return grid[np.min(np.abs(grid[:, None] - br[None, :]), axis=1) > gap]


class TestPdf:
    def test_uniform(self):
        assert Uniform().pdf(0.3) == 1.0

    def test_perturbed_peak(self):
        # branch 2 at v = 1/2 is 1 + delta
        assert PerturbedUniform(0.25).pdf(0.5) == pytest.approx(1.25, abs=1e-15)

    def test_perturbed_outside_window(self):
        assert PerturbedUniform(0.1).pdf(0.2) == 1.0

    def test_domain_error(self):
        with pytest.raises(DomainError):
            Uniform().pdf(1.5)
        with pytest.raises(DomainError):
            dist.pdf(PerturbedUniform(0.1), [0.5, -0.1])

    @given(delta=st.floats(1e-3, 0.333), v=st.floats(0.0, 1.0))
    def test_branch_form_matches_bump_form(self, delta, v):
        spec = PerturbedUniform(delta)
        v = min(v, spec.support[1])
        assert spec.pdf(v) == pytest.approx(1.0 + delta * perturbation_phi((v - 0.5) / delta), abs=1e-12)

    @pytest.mark.parametrize("spec", ALL_SPECS, ids=repr)
    def test_integrates_to_one(self, spec):
        assert integrate(lambda v: spec.pdf(v), spec) == pytest.approx(1.0, abs=1e-8)

    @pytest.mark.parametrize("spec", ALL_SPECS, ids=repr)
    def test_cdf_endpoints(self, spec):
        lo, hi = spec.support
        assert spec.cdf(lo) == 0.0
        assert spec.cdf(hi) == pytest.approx(1.0, abs=1e-14)


class TestCdf:
    def test_uniform(self):
        assert Uniform().cdf(0.5) == 0.5

    @pytest.mark.parametrize("delta", [0.05, 0.1, 0.3])
    def test_left_of_window_is_identity(self, delta):
        assert PerturbedUniform(delta).cdf(0.5 - delta) == pytest.approx(0.5 - delta, abs=1e-15)

    def test_branch_two_against_quadrature(self):
        spec = PerturbedUniform(0.1)
        expected = quad(lambda v: spec.pdf(v), 0.0, 0.4)[0] + quad(lambda v: spec.pdf(v), 0.4, 0.5)[0] + quad(
            lambda v: spec.pdf(v), 0.5, 0.55
        )[0]
        assert spec.cdf(0.55) == pytest.approx(expected, abs=1e-10)

    def test_third_branch_is_continuous(self):
        # the third piece must join the second at 1/2 + 2 delta and the identity at 1/2 + 3 delta
        spec = PerturbedUniform(0.1)
        for x in (0.7, 0.8):
            assert spec.cdf(x - 1e-12) == pytest.approx(spec.cdf(x), abs=1e-11)
        assert spec.cdf(0.8) == pytest.approx(0.8, abs=1e-15)

    @pytest.mark.parametrize("spec", ALL_SPECS, ids=repr)
    def test_numeric_derivative_matches_pdf(self, spec):
        lo, hi = spec.support
        grid = away_from_breaks(spec, np.linspace(lo, hi, 102)[1:-1])
        h = 1e-6 * (hi - lo)
        numeric = (spec.cdf(grid + h) - spec.cdf(grid - h)) / (2 * h)
        np.testing.assert_allclose(numeric, spec.pdf(grid), atol=1e-6)

    @pytest.mark.parametrize("spec", ALL_SPECS, ids=repr)
    def test_nondecreasing(self, spec):
        grid = np.linspace(*spec.support, 5001)
        assert np.all(np.diff(spec.cdf(grid)) >= 0)

    def test_truncated_support_for_large_delta(self):
        # the bump no longer fits in [0, 1], so the support ends where F hits 1
        spec = PerturbedUniform(0.25)
        hi = spec.support[1]
        assert hi < 1.0
        assert spec._cdf(np.array(hi)) == pytest.approx(1.0, abs=1e-14)
        assert PerturbedUniform(1 / 6).support == (0.0, 1.0)


class TestPdfDeriv:
    def test_uniform(self):
        assert np.all(Uniform().pdf_deriv(np.linspace(0, 1, 11)) == 0.0)

    @pytest.mark.parametrize("delta", [0.05, 0.1, 0.15])
    def test_perturbed_slopes(self, delta):
        spec = PerturbedUniform(delta)
        assert spec.pdf_deriv(0.5 - delta / 2) == 1.0
        assert spec.pdf_deriv(0.5 + delta) == -1.0
        assert spec.pdf_deriv(0.5 + 2.5 * delta) == 1.0
        assert spec.pdf_deriv(0.5 - 2 * delta) == 0.0

    def test_left_derivative_at_kinks(self):
        spec = PerturbedUniform(0.1)
        assert spec.pdf_deriv(0.5) == 1.0
        assert spec.pdf_deriv(0.7) == -1.0
        assert spec.pdf_deriv(0.8) == 1.0
        assert spec.pdf_deriv(0.4) == 0.0

    def test_trunc_exp(self):
        spec = TruncExp(2.0, 0.0, 1.0)
        v = np.array([0.1, 0.5, 0.9])
        h = 1e-6
        np.testing.assert_allclose(spec.pdf_deriv(v), (spec.pdf(v + h) - spec.pdf(v - h)) / (2 * h), rtol=1e-7)


class TestVirtualValue:
    def test_uniform(self):
        assert virtual_value(Uniform(), 0.5) == 0.0
        assert virtual_value(Uniform(), 0.75) == 0.5

    def test_perturbed_center(self):
        # F(1/2) = 1/2 + delta^2 / 2, f(1/2) = 1 + delta
        spec = PerturbedUniform(0.1)
        F_numeric = quad(lambda v: spec.pdf(v), 0, 0.4)[0] + quad(lambda v: spec.pdf(v), 0.4, 0.5)[0]
        assert virtual_value(spec, 0.5) == pytest.approx(0.5 - (1 - F_numeric) / 1.1, abs=1e-12)
        assert virtual_value(spec, 0.5) == pytest.approx(0.05, abs=1e-12)

    def test_zero_density(self):
        with pytest.raises(ZeroDensityError, match="0.5"):
            virtual_value(GapMixture(), 0.5)


def vv_on_grid(spec, grid):
    out = np.empty_like(grid)
    for i, v in enumerate(grid):
        try:
            out[i] = virtual_value(spec, v)
        except ZeroDensityError:
            out[i] = -np.inf
    return out


class TestRegularity:
    def test_uniform_psi_is_two(self):
        rep = check_regularity(Uniform())
        assert rep.is_regular
        assert rep.min_psi == 2.0
        assert rep.grid_size == dist.DEFAULT_REGULARITY_GRID

    def test_perturbed_psi_center(self):
        # branch 2 at 1/2: 3 (1 + delta)^2 / 2 + delta (1 + delta)
        assert PerturbedUniform(0.25).psi(0.5) == pytest.approx(2.65625, abs=1e-14)

    @pytest.mark.parametrize("delta", [0.05, 0.1, 0.2, 0.3])
    def test_analytic_psi_matches_definition(self, delta):
        spec = PerturbedUniform(delta)
        grid = away_from_breaks(spec, np.linspace(*spec.support, 3001)[1:-1])
        np.testing.assert_allclose(spec.psi(grid), dist.psi(spec, grid), atol=1e-12)

    def test_gap_mixture_irregular(self):
        rep = check_regularity(GapMixture(0.5, 0.0, 0.1, 0.9, 1.0))
        assert not rep.is_regular
        assert rep.argmin_v == pytest.approx(0.1)

    def test_gap_mixture_lambda_not_convex(self):
        # independent route: midpoint convexity of 1/(1 - F) fails across the gap
        spec = GapMixture(0.5, 0.0, 0.1, 0.9, 1.0)
        Lam = lambda v: 1.0 / (1.0 - spec.cdf(v))
        grid = np.linspace(0.0, 0.95, 400)
        x, y = np.meshgrid(grid, grid)
        mid = Lam((x + y) / 2)
        assert np.any(mid > (Lam(x) + Lam(y)) / 2 + 1e-9)

    @pytest.mark.parametrize("spec", ALL_SPECS, ids=repr)
    def test_psi_sign_matches_lambda_second_difference(self, spec):
        lo, hi = spec.support
        h = 1e-3 * (hi - lo)
        grid = away_from_breaks(spec, np.linspace(lo + 2 * h, hi - 0.05 * (hi - lo), 300), gap=2 * h)
        Lam = lambda v: 1.0 / (1.0 - spec.cdf(v))
        second = Lam(grid + h) - 2 * Lam(grid) + Lam(grid - h)
        p = dist.psi(spec, grid)
        sig = np.abs(p) > 1e-9
        assert np.all(np.sign(second[sig]) == np.sign(p[sig]))
        assert np.all(np.abs(second[~sig]) < 1e-9)

    @pytest.mark.parametrize("spec", ALL_SPECS, ids=repr)
    def test_virtual_value_monotone_iff_regular(self, spec):
        grid = np.linspace(*spec.support, 2001)[1:-1]
        with np.errstate(invalid="ignore"):
            monotone = bool(np.all(np.diff(vv_on_grid(spec, grid)) >= -1e-12))
        assert monotone == check_regularity(spec).is_regular

    def test_grid_size_guard(self):
        with pytest.raises(InvalidParameterError):
            check_regularity(Uniform(), grid_size=2)


class TestSample:
    def test_deterministic(self):
        a = sample(Uniform(), 5, seed=7).values
        b = sample(Uniform(), 5, seed=7).values
        assert np.array_equal(a, b)
        assert a.size == 5 and np.all((a > 0) & (a < 1))

    def test_perturbed_ks(self):
        spec = PerturbedUniform(0.1)
        data = sample(spec, 100_000, seed=11)
        assert stats.kstest(data.values, spec.cdf).statistic < 0.01

    def test_trunc_exp_mean(self):
        spec = TruncExp(1.0, 0.0, 1.0)
        data = sample(spec, 100_000, seed=5).values
        # analytic mean 1 - 1/(e - 1)
        mean = 1.0 - 1.0 / (math.e - 1.0)
        assert spec.mean() == pytest.approx(mean, abs=1e-14)
        var = integrate(lambda v: (v - mean) ** 2 * spec.pdf(v), spec)
        assert spec.variance() == pytest.approx(var, abs=1e-12)
        assert abs(data.mean() - mean) < 3 * math.sqrt(var / data.size)

    @pytest.mark.parametrize("spec", ALL_SPECS, ids=repr)
    def test_dkw_sanity(self, spec):
        n = 10_000
        data = sample(spec, n, seed=3)
        assert data.values.min() >= spec.support[0] and data.values.max() <= spec.support[1]
        assert stats.kstest(data.values, spec.cdf).statistic <= 3 * 1.36 / math.sqrt(n)

    def test_bad_n(self):
        with pytest.raises(InvalidParameterError):
            sample(Uniform(), 0, seed=1)


class TestSpecs:
    @pytest.mark.parametrize("delta", [0.0, -0.1, 1 / 3, 0.4])
    def test_delta_range(self, delta):
        with pytest.raises(InvalidParameterError):
            PerturbedUniform(delta)

    @pytest.mark.parametrize("spec", ALL_SPECS, ids=repr)
    def test_dict_round_trip(self, spec):
        assert dist.from_dict(spec.to_dict()) == spec

    def test_json_shape(self):
        assert PerturbedUniform(0.1).to_dict() == {"family": "perturbed_uniform", "delta": 0.1}

    def test_unknown_family(self):
        with pytest.raises(InvalidParameterError):
            dist.from_dict({"family": "pareto"})


@settings(max_examples=50)
@given(delta=st.floats(1e-3, 0.333))
def test_perturbed_density_is_proper(delta):
    spec = PerturbedUniform(delta)
    assert integrate(lambda v: spec.pdf(v), spec) == pytest.approx(1.0, abs=1e-9)
    assert check_regularity(spec, grid_size=501).is_regular
