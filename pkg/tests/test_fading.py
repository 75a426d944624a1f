"""Channel-model tests: density/distribution agreement, sampling, and
special-case factories.

Frozen values come from 30-digit mpmath evaluations of the density
formula and numerical integration of the density for the distribution
function.
"""
import math

import numpy as np
import pytest
from scipy.integrate import quad
from scipy.stats import kstest, ncx2

from kmusec import fading
from kmusec.fading import (EPSILON_KAPPA, ClusterSpec, KappaMuParams,
                           PropCoefficients, make_special_case)


class TestParams:
    def test_valid(self):
        p = KappaMuParams(2.0, 1.5, 3.0)
        assert p.kappa == 2.0

    @pytest.mark.parametrize("kw", [dict(kappa=-0.1, mu=1.0, gamma_bar=1.0),
                                    dict(kappa=1.0, mu=0.0, gamma_bar=1.0),
                                    dict(kappa=1.0, mu=1.0, gamma_bar=0.0)])
    def test_invalid(self, kw):
        with pytest.raises(ValueError):
            KappaMuParams(**kw)

    def test_kappa_floor(self):
        assert KappaMuParams(0.0, 1.0, 1.0).with_kappa_floor().kappa == EPSILON_KAPPA
        assert KappaMuParams(2.0, 1.0, 1.0).with_kappa_floor().kappa == 2.0

    def test_prop_coefficients(self):
        c = PropCoefficients.from_channels(KappaMuParams(4.0, 1.4, 2.0),
                                           KappaMuParams(2.0, 1.2, 1.0))
        assert c.a == pytest.approx(0.5)
        assert c.b == pytest.approx(1.0)
        assert c.alpha_m == pytest.approx(5.6)
        assert c.alpha_e == pytest.approx(2.4)
        assert c.beta_m == pytest.approx(5.0 * 0.5 * 1.4)
        assert c.beta_e == pytest.approx(3.0 * 1.2)


class TestSnrPdf:
    def test_rayleigh_limit(self):
        p = KappaMuParams(1e-12, 1.0, 1.0)
        assert fading.snr_pdf(p, 0.7) == pytest.approx(math.exp(-0.7), abs=1e-6)

    def test_interior_point(self):
        p = KappaMuParams(2.0, 1.5, 2.0)
        assert fading.snr_pdf(p, 1.0) == pytest.approx(0.34723055468776726, rel=1e-12)

    def test_unit_mass_v2v(self):
        # V2V main-channel triple; analytic tail beyond the cut is < 1e-10
        p = KappaMuParams(5.02, 0.70, 1.04)
        upper = p.gamma_bar * (50.0 + 50.0 * p.kappa)
        mass, _ = quad(lambda g: fading.snr_pdf(p, g), 0.0, upper,
                       limit=200, epsabs=1e-11, epsrel=1e-11)
        assert mass == pytest.approx(1.0, abs=1e-8)

    @pytest.mark.parametrize("p", [KappaMuParams(0.5, 0.7, 1.0),
                                   KappaMuParams(5.0, 2.3, 0.4),
                                   KappaMuParams(0.0, 1.0, 2.0)])
    def test_nonnegative(self, p):
        for g in np.geomspace(1e-6, 50.0, 40):
            assert fading.snr_pdf(p, float(g)) >= 0.0

    def test_origin_behavior(self):
        assert fading.snr_pdf(KappaMuParams(1.0, 2.0, 1.0), 0.0) == 0.0
        assert fading.snr_pdf(KappaMuParams(1.0, 1.0, 2.0), 0.0) == pytest.approx(
            2.0 * math.exp(-1.0) / 2.0)
        with pytest.raises(ValueError):
            fading.snr_pdf(KappaMuParams(1.0, 0.7, 1.0), 0.0)
        with pytest.raises(ValueError):
            fading.snr_pdf(KappaMuParams(1.0, 1.0, 1.0), -0.3)

    def test_exact_zero_kappa_matches_epsilon(self):
        exact = KappaMuParams(0.0, 1.7, 2.0)
        eps = KappaMuParams(EPSILON_KAPPA, 1.7, 2.0)
        for g in (0.2, 1.0, 4.0):
            assert fading.snr_pdf(exact, g) == pytest.approx(
                fading.snr_pdf(eps, g), rel=1e-7)

    def test_array_input(self):
        p = KappaMuParams(2.0, 1.5, 2.0)
        out = fading.snr_pdf(p, np.asarray([0.5, 1.0, 2.0]))
        assert out.shape == (3,)
        assert out[1] == pytest.approx(0.34723055468776726, rel=1e-12)


class TestSnrCdf:
    def test_at_zero(self):
        assert fading.snr_cdf(KappaMuParams(3.0, 1.2, 1.0), 0.0) == 0.0

    def test_exponential_median(self):
        p = KappaMuParams(EPSILON_KAPPA, 1.0, 1.0)
        assert fading.snr_cdf(p, math.log(2.0)) == pytest.approx(0.5, abs=1e-7)

    def test_interior_point(self):
        # numerical integration of the density over [0, 1], D2D parameters
        p = KappaMuParams(1.07, 0.91, 1.0)
        assert fading.snr_cdf(p, 1.0) == pytest.approx(0.6092037946928820, abs=1e-11)

    def test_limits_and_monotonicity(self):
        p = KappaMuParams(2.5, 0.8, 1.3)
        grid = np.geomspace(1e-4, 60.0, 50)
        vals = [fading.snr_cdf(p, float(g)) for g in grid]
        assert all(0.0 <= v <= 1.0 for v in vals)
        assert all(b >= a - 1e-15 for a, b in zip(vals, vals[1:]))
        assert vals[0] < 1e-3
        assert vals[-1] > 1.0 - 1e-9

    @pytest.mark.parametrize("p", [KappaMuParams(1.07, 0.91, 1.0),
                                   KappaMuParams(5.0, 2.0, 0.7),
                                   KappaMuParams(0.3, 0.6, 2.0)])
    def test_derivative_matches_pdf(self, p):
        # central differences on a 20-point grid across the distribution
        # body, relative error <= 1e-6
        for g in np.linspace(0.2, 3.0, 20) * p.gamma_bar:
            h = 1e-5 * g
            num = (fading.snr_cdf(p, g + h) - fading.snr_cdf(p, g - h)) / (2 * h)
            den = fading.snr_pdf(p, float(g))
            assert num == pytest.approx(den, rel=1e-6)

    def test_rayleigh_reduction(self):
        p = make_special_case("rayleigh", gamma_bar=2.0)
        for g in (0.1, 0.7, 2.0, 6.0):
            assert fading.snr_cdf(p, g) == pytest.approx(
                1.0 - math.exp(-g / 2.0), abs=1e-6)

    def test_rice_reduction(self):
        from kmusec import specfun
        K = 3.0
        p = make_special_case("rice", K=K, gamma_bar=1.5)
        for g in (0.2, 1.0, 3.0):
            expected = 1.0 - specfun.marcum_q(
                1.0, math.sqrt(2.0 * K), math.sqrt(2.0 * (1.0 + K) * g / 1.5))
            assert fading.snr_cdf(p, g) == pytest.approx(expected, abs=1e-12)

    def test_exact_zero_kappa_fast_path(self):
        exact = KappaMuParams(0.0, 1.4, 1.0)
        eps = KappaMuParams(EPSILON_KAPPA, 1.4, 1.0)
        for g in (0.3, 1.0, 2.5):
            assert fading.snr_cdf(exact, g) == pytest.approx(
                fading.snr_cdf(eps, g), abs=1e-7)


def _cdf_callable(p):
    """Vectorized distribution bridge through the noncentral chi-square,
    verified against snr_cdf before use."""
    scale = 2.0 * (1.0 + p.kappa) * p.mu / p.gamma_bar
    df = 2.0 * p.mu
    nc = 2.0 * p.kappa * p.mu

    def cdf(g):
        return ncx2.cdf(np.asarray(g) * scale, df, nc)

    for g in np.geomspace(0.05, 20.0, 25):
        assert abs(float(cdf(g)) - fading.snr_cdf(p, float(g))) < 1e-10
    return cdf


class TestSampler:
    def test_mean_rayleigh(self):
        p = KappaMuParams(EPSILON_KAPPA, 1.0, 3.0)
        draws = fading.sample_snr(p, 1_000_000, seed=7)
        assert draws.mean() == pytest.approx(3.0, abs=0.01)

    def test_deterministic(self):
        p = KappaMuParams(2.0, 2.0, 1.0)
        a = fading.sample_snr(p, 1000, seed=42)
        b = fading.sample_snr(p, 1000, seed=42)
        assert np.array_equal(a, b)
        c = fading.sample_snr(p, 1000, seed=43)
        assert not np.array_equal(a, c)

    @pytest.mark.parametrize("p,seed", [
        (KappaMuParams(2.0, 2.0, 1.0), 11),
        (KappaMuParams(3.60, 0.67, 1.0), 12),  # noninteger mu
    ])
    def test_ks_against_cdf(self, p, seed):
        draws = fading.sample_snr(p, 1_000_000, seed=seed)
        stat = kstest(draws, _cdf_callable(p)).statistic
        assert stat < 1.95 / math.sqrt(draws.size)

    @pytest.mark.parametrize("p,seed", [
        (KappaMuParams(1.07, 0.91, 2.0), 3),
        (KappaMuParams(7.17, 0.60, 1.0), 4),
        (KappaMuParams(0.0, 1.5, 0.5), 5),
    ])
    def test_mean_within_four_se(self, p, seed):
        n = 200_000
        draws = fading.sample_snr(p, n, seed=seed)
        se = draws.std(ddof=1) / math.sqrt(n)
        assert abs(draws.mean() - p.gamma_bar) < 4.0 * se

    def test_moment_identity(self):
        # mu = E^2(1+2k) / (V (1+k)^2) on sampled moments
        p = KappaMuParams(2.0, 1.5, 2.0)
        draws = fading.sample_snr(p, 2_000_000, seed=9)
        e = draws.mean()
        v = draws.var(ddof=1)
        mu_est = e * e * (1.0 + 2.0 * p.kappa) / (v * (1.0 + p.kappa) ** 2)
        assert mu_est == pytest.approx(p.mu, rel=0.01)

    def test_n_validation(self):
        with pytest.raises(ValueError):
            fading.sample_snr(KappaMuParams(1.0, 1.0, 1.0), 0, seed=1)


class TestClusterSpec:
    def test_invariants(self):
        params = KappaMuParams(2.0, 3.0, 1.5)
        spec = ClusterSpec.from_params(params)
        assert spec.mu_int == 3
        assert spec.kappa == pytest.approx(2.0, rel=1e-12)
        assert spec.gamma_bar == pytest.approx(1.5, rel=1e-12)
        assert spec.d_squared == pytest.approx(
            sum(x * x for x in spec.p) + sum(x * x for x in spec.q), rel=1e-12)

    def test_requires_integer_mu(self):
        with pytest.raises(ValueError):
            ClusterSpec.from_params(KappaMuParams(1.0, 1.5, 1.0))

    def test_length_validation(self):
        with pytest.raises(ValueError):
            ClusterSpec(mu_int=2, sigma=1.0, p=(1.0,), q=(1.0, 2.0))

    def test_construction_matches_cdf(self):
        # in-phase/quadrature construction vs the Marcum-Q distribution
        params = KappaMuParams(1.5, 2.0, 1.0)
        spec = ClusterSpec.from_params(params)
        draws = spec.sample_snr(200_000, seed=21)
        stat = kstest(draws, _cdf_callable(params)).statistic
        assert stat < 1.95 / math.sqrt(draws.size)


class TestSpecialCases:
    def test_rice(self):
        p = make_special_case("rice", K=15.0)
        assert (p.kappa, p.mu) == (15.0, 1.0)

    def test_nakagami(self):
        p = make_special_case("nakagami_m", m=2.0)
        assert p.kappa == EPSILON_KAPPA
        assert p.mu == 2.0

    def test_one_sided_gaussian(self):
        p = make_special_case("one_sided_gaussian")
        assert p.kappa == EPSILON_KAPPA
        assert p.mu == 0.5

    def test_rayleigh(self):
        p = make_special_case("rayleigh", gamma_bar=3.0)
        assert (p.kappa, p.mu, p.gamma_bar) == (EPSILON_KAPPA, 1.0, 3.0)

    def test_kappa_mu_passthrough(self):
        p = make_special_case("kappa_mu", kappa=4.0, mu=1.4)
        assert (p.kappa, p.mu) == (4.0, 1.4)

    def test_unknown_tag(self):
        with pytest.raises(ValueError):
            make_special_case("weibull")

    @pytest.mark.parametrize("kw", [dict(K=-1.0), dict(K=0.0)])
    def test_bad_shape(self, kw):
        with pytest.raises(ValueError):
            make_special_case("rice", **kw)


class TestEnvelopePdf:
    def test_interior_point(self):
        # 30-digit evaluation of the envelope density formula
        p = KappaMuParams(2.0, 1.5, 1.0)
        assert fading.envelope_pdf(p, 0.8, 1.0) == pytest.approx(
            1.1712016943161238, rel=1e-12)

    def test_change_of_variables_consistency(self):
        # 2 r gbar / rhat^2 * f_gamma(gbar r^2 / rhat^2)
        p = KappaMuParams(2.0, 1.5, 3.0)
        r, r_hat = 0.8, 1.0
        direct = fading.envelope_pdf(p, r, r_hat)
        via_snr = (2.0 * r * p.gamma_bar / r_hat ** 2
                   * fading.snr_pdf(p, p.gamma_bar * r * r / r_hat ** 2))
        assert direct == pytest.approx(via_snr, rel=1e-12)

    def test_unit_mass(self):
        p = KappaMuParams(1.2, 0.8, 1.0)
        mass, _ = quad(lambda r: fading.envelope_pdf(p, r, 1.3), 0.0, 15.0,
                       limit=200)
        assert mass == pytest.approx(1.0, abs=1e-8)

    def test_rms_scaling(self):
        p = KappaMuParams(2.0, 1.5, 1.0)
        assert fading.envelope_pdf(p, 1.6, 2.0) == pytest.approx(
            fading.envelope_pdf(p, 0.8, 1.0) / 2.0, rel=1e-12)
