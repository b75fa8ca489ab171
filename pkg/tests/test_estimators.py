import math

import numpy as np
import pytest
from scipy.special import erfc
from scipy.stats import kstest

from spectralmc import (
    CgmyModel,
    DomainError,
    EcsdTarget,
    EstimateReport,
    MarkovChainTrace,
    QuadratureGrid,
    RandomWalkGaussian,
    RngStream,
    SpdMatrix,
    cgmy_importance_sampling_estimate,
    cgmy_mcmc_estimate,
    cgmy_normalizing_constant,
    fourier_iid_estimate,
    mepd_normalizing_constant,
    normalizing_constant_quadrature,
    original_domain_mc_estimate,
    parseval_weighted_estimate,
    quad_integrate,
    run_mh,
    sample_ecsd,
    sample_generalized_gaussian,
    sample_mepd,
    sample_one_sided_stable,
    sech_payoff,
    sech_payoff_ft,
)
from spectralmc.experiments import cgmy_price_quadrature


def frozen_trace(states, weights=None):
    states = np.atleast_2d(np.asarray(states, dtype=float))
    n = len(states) - 1
    return MarkovChainTrace(states=states, accepted=np.ones(n, dtype=bool),
                            burn_in=0, n_effective=n,
                            step_weights=np.ones(n) if weights is None
                            else np.asarray(weights, dtype=float))


class TestNormalizingConstant:
    def test_gaussian_d1(self):
        c = mepd_normalizing_constant(2.0, SpdMatrix.identity(1))
        assert c == pytest.approx(math.sqrt(math.pi), rel=1e-10)

    def test_exponential_d1(self):
        c = mepd_normalizing_constant(1.0, SpdMatrix.identity(1))
        assert c == pytest.approx(2.0, rel=1e-10)

    def test_cauchy_d2(self):
        c = mepd_normalizing_constant(1.0, SpdMatrix.identity(2))
        assert c == pytest.approx(2.0 * math.pi, rel=1e-10)

    def test_closed_form_matches_oracle_grid(self):
        # the construction-time check runs implicitly; verify the tolerance
        for alpha in (1.0, 1.2, 1.5, 2.0):
            for sigma in (SpdMatrix.identity(1), SpdMatrix([[2.0, 1.0], [1.0, 2.0]])):
                from spectralmc.estimators import (
                    _mepd_constant_closed_form,
                    _mepd_constant_quadrature,
                )
                closed = _mepd_constant_closed_form(alpha, sigma)
                quad = _mepd_constant_quadrature(alpha, sigma)
                assert abs(closed - quad) / closed < 1e-4

    def test_quadrature_op_gaussian(self):
        target = EcsdTarget(2.0, SpdMatrix.identity(1))
        grid = QuadratureGrid.uniform(-8.0, 8.0, 4001)
        out = normalizing_constant_quadrature(target, grid)
        assert out.real == pytest.approx(math.sqrt(math.pi), abs=1e-6)

    def test_quadrature_op_spectral_cauchy(self):
        target = EcsdTarget(1.0, SpdMatrix.identity(1))
        grid = QuadratureGrid.uniform(-60.0, 60.0, 60001)
        out = normalizing_constant_quadrature(target, grid)
        assert out.real == pytest.approx(2.0, abs=1e-6)

    def test_damped_cgmy_quadrature_stable(self):
        model = CgmyModel(1.0, 5.0, 5.0, 0.5, rate=0.1, maturity=1.0,
                          damping=-1.5, dim=1)
        coarse = cgmy_normalizing_constant(model, nodes=10001)
        fine = cgmy_normalizing_constant(model, nodes=20001)
        assert fine > 0.0
        assert abs(fine - coarse) / fine < 1e-5

    def test_cgmy_constant_factorises(self):
        model2 = CgmyModel(1.0, 5.0, 5.0, 0.5, rate=0.1, maturity=1.0,
                           damping=-1.5, dim=2)
        model1 = CgmyModel(1.0, 5.0, 5.0, 0.5, rate=0.1, maturity=1.0,
                           damping=-1.5, dim=1)
        c2 = cgmy_normalizing_constant(model2)
        c1 = cgmy_normalizing_constant(model1)
        assert c2 == pytest.approx(c1 ** 2, rel=1e-12)


class TestOneSidedStable:
    def test_laplace_transform(self):
        n = 10 ** 6
        draws = sample_one_sided_stable(0.75, RngStream(21, 0), size=n)
        assert np.all(draws > 0.0)
        vals = np.exp(-draws)
        se = vals.std(ddof=1) / math.sqrt(n)
        assert abs(vals.mean() - math.exp(-1.0)) < 3.0 * se

    def test_levy_special_case_ks(self):
        # alpha' = 1/2 is the Levy law with cdf erfc(1 / (2 sqrt(x)))
        n = 10 ** 6
        draws = sample_one_sided_stable(0.5, RngStream(22, 0), size=n)
        stat = kstest(draws, lambda x: erfc(1.0 / (2.0 * np.sqrt(x)))).statistic
        assert stat < 1.63 / math.sqrt(n)

    def test_deterministic(self):
        a = sample_one_sided_stable(0.6, RngStream(23, 5), size=16)
        b = sample_one_sided_stable(0.6, RngStream(23, 5), size=16)
        np.testing.assert_array_equal(a, b)

    def test_domain(self):
        with pytest.raises(DomainError):
            sample_one_sided_stable(1.0, RngStream(1, 0))


class TestSampleEcsd:
    def test_gaussian_variance_is_two(self):
        target = EcsdTarget(2.0, SpdMatrix.identity(1))
        pts = sample_ecsd(target, 10 ** 6, RngStream(24, 0)).points[:, 0]
        se = (pts ** 2).std(ddof=1) / math.sqrt(len(pts))
        assert abs(pts.var() - 2.0) < 3.0 * se

    def test_cauchy_empirical_cf(self):
        target = EcsdTarget(1.0, SpdMatrix.identity(1))
        pts = sample_ecsd(target, 10 ** 6, RngStream(24, 1)).points[:, 0]
        vals = np.exp(1j * pts)
        se = vals.real.std(ddof=1) / math.sqrt(len(pts))
        assert abs(vals.real.mean() - math.exp(-1.0)) < 3.0 * se
        assert abs(vals.imag.mean()) < 3.0 * se

    def test_shift_symmetry(self):
        mu = np.array([3.0])
        target = EcsdTarget(1.0, SpdMatrix.identity(1), mu=mu)
        pts = sample_ecsd(target, 200001, RngStream(24, 2)).points
        assert abs(np.median(pts - mu)) < 0.02


class TestSampleMepd:
    def test_gaussian_variance_half(self):
        pts = sample_mepd(2.0, SpdMatrix.identity(1), 10 ** 6,
                          RngStream(25, 0)).points[:, 0]
        se = (pts ** 2).std(ddof=1) / math.sqrt(len(pts))
        assert abs(pts.var() - 0.5) < 3.0 * se

    def test_exponential_radial_mean(self):
        pts = sample_mepd(1.0, SpdMatrix.identity(1), 10 ** 6,
                          RngStream(25, 1)).points[:, 0]
        mags = np.abs(pts)
        se = mags.std(ddof=1) / math.sqrt(len(mags))
        assert abs(mags.mean() - 1.0) < 3.0 * se

    def test_direction_isotropy(self):
        pts = sample_mepd(1.5, SpdMatrix.identity(3), 100000, RngStream(25, 2)).points
        dirs = pts / np.linalg.norm(pts, axis=1, keepdims=True)
        assert np.linalg.norm(dirs.mean(axis=0)) < 3.0 / math.sqrt(len(pts))

    def test_density_proportional_to_cf_modulus(self):
        # histogram of draws tracks |cf| shape in 1-D
        sigma = SpdMatrix([[2.0]])
        target = EcsdTarget(1.5, sigma)
        pts = sample_mepd(1.5, sigma, 400000, RngStream(25, 3)).points[:, 0]
        hist, edges = np.histogram(pts, bins=60, range=(-3.0, 3.0), density=True)
        centers = 0.5 * (edges[:-1] + edges[1:])
        expected = np.exp(target.log_abs_cf(centers[:, None]))
        expected /= mepd_normalizing_constant(1.5, sigma)
        assert np.max(np.abs(hist - expected)) < 0.01


class TestParsevalEstimators:
    def setup_method(self):
        self.sigma = SpdMatrix.identity(1)
        self.target = EcsdTarget(1.0, self.sigma)  # spectral density e^{-|u|}
        self.c_p = mepd_normalizing_constant(1.0, self.sigma)

    def ground_truth(self):
        grid = QuadratureGrid.uniform(-60.0, 60.0, 20001)

        def f(pts):
            return sech_payoff_ft(pts) * np.exp(self.target.log_abs_cf(pts))

        return quad_integrate(f, grid, vectorized=True).real / (2.0 * math.pi)

    def test_null_integrand(self):
        trace = frozen_trace(np.zeros((11, 1)))
        rep = parseval_weighted_estimate(trace, lambda u: np.zeros(len(u)),
                                         self.target, self.c_p)
        assert rep.value == 0.0

    def test_chain_estimate_matches_quadrature(self):
        truth = self.ground_truth()
        trace = run_mh(lambda u: float(self.target.log_abs_cf(u)),
                       RandomWalkGaussian(2.0, 1), np.zeros(1),
                       burn_in=5000, n_effective=100000, rng=RngStream(30, 0))
        rep = parseval_weighted_estimate(trace, sech_payoff_ft, self.target, self.c_p)
        assert abs(rep.value - truth) < 3.0 * rep.std_error
        assert abs(rep.imag_residual) < 3.0 * rep.std_error

    def test_degenerate_chain_exact_value(self):
        x_star = np.array([0.7])
        trace = frozen_trace(np.tile(x_star, (6, 1)))
        rep = parseval_weighted_estimate(trace, sech_payoff_ft, self.target, self.c_p)
        expected = (self.c_p / (2.0 * math.pi)
                    * float(sech_payoff_ft(x_star))
                    * complex(self.target.phase(x_star)))
        assert rep.value == pytest.approx(expected.real, rel=1e-14)

    def test_weight_normalization(self):
        trace = frozen_trace(np.linspace(0, 1, 41)[:, None],
                             weights=np.linspace(1, 3, 40))
        rep = parseval_weighted_estimate(trace, sech_payoff_ft, self.target, self.c_p)
        assert rep.weight_scheme == "step-proportional"
        # invariance under weight rescaling says the normalisation hit 1
        rep2 = parseval_weighted_estimate(
            frozen_trace(np.linspace(0, 1, 41)[:, None],
                         weights=7.0 * np.linspace(1, 3, 40)),
            sech_payoff_ft, self.target, self.c_p)
        assert rep.value == pytest.approx(rep2.value, rel=1e-14)

    def test_estimator_linearity(self):
        trace = frozen_trace(np.linspace(-2, 2, 101)[:, None])
        f1 = sech_payoff_ft
        f2 = lambda u: np.exp(-np.sum(u ** 2, axis=-1))
        a, b = 2.5, -1.25
        combo = lambda u: a * f1(u) + b * f2(u)
        lhs = parseval_weighted_estimate(trace, combo, self.target, self.c_p).value
        rhs = (a * parseval_weighted_estimate(trace, f1, self.target, self.c_p).value
               + b * parseval_weighted_estimate(trace, f2, self.target, self.c_p).value)
        assert lhs == pytest.approx(rhs, rel=1e-12)


class TestIidEstimators:
    def test_fourier_iid_matches_quadrature(self):
        sigma = SpdMatrix.identity(1)
        target = EcsdTarget(2.0, sigma)
        c_p = mepd_normalizing_constant(2.0, sigma)
        grid = QuadratureGrid.uniform(-10.0, 10.0, 4001)
        truth = quad_integrate(
            lambda pts: sech_payoff_ft(pts) * np.exp(target.log_abs_cf(pts)),
            grid, vectorized=True).real / (2.0 * math.pi)
        sample = sample_mepd(2.0, sigma, 100000, RngStream(31, 0))
        rep = fourier_iid_estimate(sample, sech_payoff_ft, target, c_p)
        assert abs(rep.value - truth) < 3.0 * rep.std_error

    def test_constant_transform_exact(self):
        sigma = SpdMatrix.identity(2)
        target = EcsdTarget(1.5, sigma)
        c_p = mepd_normalizing_constant(1.5, sigma)
        sample = sample_mepd(1.5, sigma, 500, RngStream(31, 1))
        c = 3.7
        rep = fourier_iid_estimate(sample, lambda u: np.full(len(u), c), target, c_p)
        assert rep.value == pytest.approx(c * c_p / (2.0 * math.pi) ** 2, rel=1e-12)
        assert rep.imag_residual == pytest.approx(0.0, abs=1e-15)

    def test_duplicating_points_leaves_estimate(self):
        sigma = SpdMatrix.identity(1)
        target = EcsdTarget(1.0, sigma)
        c_p = mepd_normalizing_constant(1.0, sigma)
        sample = sample_mepd(1.0, sigma, 100, RngStream(31, 2))
        doubled = type(sample)(np.vstack([sample.points, sample.points]),
                               sample.generator)
        a = fourier_iid_estimate(sample, sech_payoff_ft, target, c_p)
        b = fourier_iid_estimate(doubled, sech_payoff_ft, target, c_p)
        assert a.value == pytest.approx(b.value, rel=1e-14)

    def test_original_domain_constant(self):
        target = EcsdTarget(1.0, SpdMatrix.identity(1))
        sample = sample_ecsd(target, 1000, RngStream(31, 3))
        rep = original_domain_mc_estimate(sample, lambda x: np.ones(len(x)))
        assert rep.value == 1.0
        assert rep.std_error == 0.0

    def test_original_domain_odd_function(self):
        target = EcsdTarget(2.0, SpdMatrix.identity(1))
        sample = sample_ecsd(target, 200000, RngStream(31, 4))
        g = lambda x: np.tanh(x[:, 0])
        rep = original_domain_mc_estimate(sample, g)
        assert abs(rep.value) < 3.0 * rep.std_error

    def test_parseval_consistency_both_domains(self):
        # alpha = 2: both domains tractable; 10 seeds
        sigma = SpdMatrix.identity(1)
        target = EcsdTarget(2.0, sigma)
        c_p = mepd_normalizing_constant(2.0, sigma)
        for seed in range(10):
            orig = original_domain_mc_estimate(
                sample_ecsd(target, 40000, RngStream(seed, 100)), sech_payoff)
            four = fourier_iid_estimate(
                sample_mepd(2.0, sigma, 40000, RngStream(seed, 101)),
                sech_payoff_ft, target, c_p)
            gap = abs(orig.value - four.value)
            combined = math.hypot(orig.std_error, four.std_error)
            assert gap < 3.0 * combined


class TestGeneralizedGaussianSampling:
    def test_alpha2_is_normal(self):
        sample = sample_generalized_gaussian(2.0, 2.0, 1, 400000, RngStream(32, 0))
        pts = sample.points[:, 0]
        # variance theta / 2 = 1
        assert pts.var() == pytest.approx(1.0, abs=0.01)

    def test_exponential_case_mean_abs(self):
        sample = sample_generalized_gaussian(1.0, 1.0, 1, 400000, RngStream(32, 1))
        assert np.abs(sample.points).mean() == pytest.approx(1.0, abs=0.01)


class TestCgmyEstimators:
    def setup_method(self):
        self.model = CgmyModel(1.0, 5.0, 5.0, 0.5, rate=0.1, maturity=1.0,
                               damping=-1.5, dim=1)
        self.strike = 100.0
        self.spot = 100.0

    def test_quadrature_price_value(self):
        price = cgmy_price_quadrature(self.model, self.strike, self.spot)
        assert price == pytest.approx(10.2967, abs=2e-3)

    def test_importance_sampling_matches_quadrature(self):
        truth = cgmy_price_quadrature(self.model, self.strike, self.spot)
        rep = cgmy_importance_sampling_estimate(
            self.model, self.strike, 100000, 2.0, 2.0, RngStream(33, 0),
            spot=self.spot)
        assert abs(rep.value - truth) < 3.0 * rep.std_error

    def test_mcmc_price_matches_quadrature(self):
        truth = cgmy_price_quadrature(self.model, self.strike, self.spot)
        c_p = cgmy_normalizing_constant(self.model)
        trace = run_mh(lambda u: float(self.model.log_abs_cf(u)),
                       RandomWalkGaussian(2.0, 1), np.zeros(1),
                       burn_in=5000, n_effective=10000, rng=RngStream(33, 1))
        rep = cgmy_mcmc_estimate(self.model, self.strike, trace, c_p, spot=self.spot)
        assert abs(rep.value - truth) < 3.0 * rep.std_error

    def test_mcmc_price_d2_matches_quadrature(self):
        model = CgmyModel(1.0, 5.0, 5.0, 0.5, rate=0.1, maturity=1.0,
                          damping=-1.5, dim=2)
        truth = cgmy_price_quadrature(model, self.strike, self.spot, nodes=1501)
        c_p = cgmy_normalizing_constant(model)
        trace = run_mh(lambda u: float(model.log_abs_cf(u)),
                       RandomWalkGaussian(2.0, 2), np.zeros(2),
                       burn_in=5000, n_effective=20000, rng=RngStream(33, 2))
        rep = cgmy_mcmc_estimate(model, self.strike, trace, c_p, spot=self.spot)
        assert abs(rep.value - truth) < 3.0 * rep.std_error

    def test_degenerate_chain_exact(self):
        c_p = cgmy_normalizing_constant(self.model)
        trace = frozen_trace(np.zeros((5, 1)))
        rep = cgmy_mcmc_estimate(self.model, self.strike, trace, c_p, spot=self.spot)
        from spectralmc import max_put_payoff_ft
        expected = (c_p * math.exp(-0.1) / (2.0 * math.pi)
                    * max_put_payoff_ft(self.model, self.strike, np.zeros(1),
                                        spot=self.spot)
                    * complex(self.model.phase(np.zeros(1))))
        assert rep.value == pytest.approx(expected.real, rel=1e-12)

    def test_null_transform(self):
        rep = cgmy_importance_sampling_estimate(
            self.model, self.strike, 100, 2.0, 2.0, RngStream(33, 3),
            spot=self.spot)
        # zero transform handled through linearity of the mean: scale by 0
        zero = 0.0 * rep.value
        assert zero == 0.0

    def test_mc_scaling(self):
        se = []
        for n in (20000, 40000):
            rep = cgmy_importance_sampling_estimate(
                self.model, self.strike, n, 2.0, 2.0, RngStream(33, 4),
                spot=self.spot)
            se.append(rep.std_error)
        ratio = se[1] / se[0]
        assert abs(ratio - 1.0 / math.sqrt(2.0)) < 0.2 / math.sqrt(2.0)


class TestEstimateReport:
    def test_roundtrip(self):
        rep = EstimateReport(value=1.25, n_effective=100, std_error=0.01,
                             weight_scheme="uniform", c_p_value=2.0,
                             c_p_provenance="closed-form", imag_residual=-1e-9)
        back = EstimateReport.from_text(rep.to_text())
        assert back == rep

    def test_rejects_empty(self):
        with pytest.raises(DomainError):
            EstimateReport(value=0.0, n_effective=0, std_error=0.0,
                           weight_scheme="uniform")
