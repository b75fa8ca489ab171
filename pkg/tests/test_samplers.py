import math

import numpy as np
import pytest

from spectralmc import (
    ChainAbortError,
    DomainError,
    EcsdTarget,
    GeneralizedGaussian,
    IndependenceGaussian,
    LangevinProposal,
    RandomWalkGaussian,
    RngStream,
    SpdMatrix,
    StepSchedule,
    acceptance_rate,
    dump_trace,
    load_trace,
    mh_acceptance,
    run_mala,
    run_mh,
)


class TestAcceptanceProbability:
    def test_equal_densities(self):
        prop = RandomWalkGaussian(1.0, 1)
        log_p = lambda x: -0.5 * float(x @ x)
        a = mh_acceptance(log_p, prop, np.array([1.0]), np.array([-1.0]))
        assert a == pytest.approx(1.0)

    def test_density_ratio(self):
        prop = RandomWalkGaussian(1.0, 1)
        log_p = lambda x: math.log(0.5) if x[0] > 0.5 else 0.0
        a = mh_acceptance(log_p, prop, np.array([0.0]), np.array([1.0]))
        assert a == pytest.approx(0.5)

    def test_hastings_correction(self):
        # q(y) = 2 q(x) with p equal: alpha = 1/2
        prop = GeneralizedGaussian(1.0, 1.0, 1)  # density ~ e^{-|u|}/2
        x = np.array([math.log(2.0)])
        y = np.array([0.0])
        log_p = lambda _: 0.0
        a = mh_acceptance(log_p, prop, x, y)
        assert a == pytest.approx(0.5, rel=1e-12)

    def test_zero_density_proposal(self):
        prop = RandomWalkGaussian(1.0, 1)
        log_p = lambda x: -math.inf if x[0] > 0 else 0.0
        assert mh_acceptance(log_p, prop, np.array([-1.0]), np.array([1.0])) == 0.0

    def test_detailed_balance_pointwise(self):
        # p(x) q(x,y) a(x,y) == p(y) q(y,x) a(y,x) for all kernel kinds
        rng = np.random.default_rng(4)
        target = EcsdTarget(1.5, SpdMatrix([[1.0, 0.3], [0.3, 0.8]]))
        log_p = lambda u: float(target.log_abs_cf(u))
        proposals = [
            RandomWalkGaussian([0.7, 1.3], 2),
            IndependenceGaussian(np.zeros(2), SpdMatrix.identity(2)),
            GeneralizedGaussian(1.4, 2.0, 2),
            LangevinProposal(target.grad_log_abs_cf, 0.05, 2),
        ]
        for prop in proposals:
            for _ in range(100):
                x = rng.normal(size=2) * 2.0 + 0.2
                y = rng.normal(size=2) * 2.0 - 0.1
                lhs = (log_p(x) + prop.log_q(x, y)
                       + math.log(mh_acceptance(log_p, prop, x, y)))
                rhs = (log_p(y) + prop.log_q(y, x)
                       + math.log(mh_acceptance(log_p, prop, y, x)))
                assert lhs == pytest.approx(rhs, rel=1e-12, abs=1e-12)


def discrete_mh_matrix(log_p, grid, scale):
    """Exact MH transition matrix on a discretised 1-D state space."""
    m = len(grid)
    p = np.exp([log_p(np.array([g])) for g in grid])
    p = p / p.sum()
    q = np.exp(-0.5 * ((grid[:, None] - grid[None, :]) / scale) ** 2)
    q = q / q.sum(axis=1, keepdims=True)
    with np.errstate(divide="ignore", invalid="ignore"):
        ratio = (p[None, :] * q.T) / (p[:, None] * q)
    alpha = np.minimum(1.0, ratio)
    t = q * alpha
    np.fill_diagonal(t, 0.0)
    np.fill_diagonal(t, 1.0 - t.sum(axis=1))
    return p, t


class TestChainLawInvariance:
    def test_discretized_fixed_point(self):
        grid = np.linspace(-3.0, 3.0, 31)
        log_p = lambda x: -abs(float(x[0])) ** 1.5
        p, t = discrete_mh_matrix(log_p, grid, scale=0.8)
        resid = np.max(np.abs(p @ t - p))
        assert resid < 1e-10


class TestRunMh:
    def test_zero_effective_window(self):
        rng = RngStream(1, 0)
        trace = run_mh(lambda x: -float(x @ x), RandomWalkGaussian(1.0, 1),
                       np.zeros(1), burn_in=50, n_effective=0, rng=rng)
        assert trace.states.shape == (51, 1)
        with pytest.raises(DomainError):
            acceptance_rate(trace)

    def test_symmetric_target_mean(self):
        target = EcsdTarget(1.5, SpdMatrix.identity(2))
        rng = RngStream(101, 7)
        trace = run_mh(lambda u: float(target.log_abs_cf(u)),
                       RandomWalkGaussian(1.0, 2), np.zeros(2),
                       burn_in=2000, n_effective=60000, rng=rng)
        eff = trace.effective_states()
        se = eff.std(axis=0, ddof=1) / math.sqrt(len(eff)) * 8.0  # autocorr slack
        assert np.all(np.abs(eff.mean(axis=0)) < 3.0 * se)

    def test_deterministic_given_stream(self):
        target = EcsdTarget(1.0, SpdMatrix.identity(1))
        args = (lambda u: float(target.log_abs_cf(u)), RandomWalkGaussian(2.0, 1),
                np.zeros(1))
        t1 = run_mh(*args, burn_in=100, n_effective=500, rng=RngStream(5, 9))
        t2 = run_mh(*args, burn_in=100, n_effective=500, rng=RngStream(5, 9))
        np.testing.assert_array_equal(t1.states, t2.states)
        np.testing.assert_array_equal(t1.accepted, t2.accepted)

    def test_rejected_steps_copy_exactly(self):
        rng = RngStream(2, 3)
        trace = run_mh(lambda x: -50.0 * float(x @ x), RandomWalkGaussian(5.0, 1),
                       np.array([0.1]), burn_in=0, n_effective=400, rng=rng)
        rejected = ~trace.accepted
        same = trace.states[1:][rejected] == trace.states[:-1][rejected]
        assert np.all(same)

    def test_uniform_weights(self):
        rng = RngStream(2, 4)
        trace = run_mh(lambda x: -float(x @ x), RandomWalkGaussian(1.0, 1),
                       np.zeros(1), burn_in=10, n_effective=20, rng=rng)
        np.testing.assert_array_equal(trace.step_weights, np.ones(20))

    def test_independence_sampler_runs(self):
        target = EcsdTarget(2.0, SpdMatrix.identity(1))
        prop = IndependenceGaussian(np.zeros(1), SpdMatrix([[2.0]]))
        trace = run_mh(lambda u: float(target.log_abs_cf(u)), prop, np.zeros(1),
                       burn_in=1000, n_effective=40000, rng=RngStream(6, 1))
        eff = trace.effective_states()[:, 0]
        # p ~ e^{-u^2}: variance 1/2
        assert eff.var() == pytest.approx(0.5, abs=0.02)
        assert 0.3 < acceptance_rate(trace) <= 1.0


class TestRunMala:
    def test_tiny_step_freezes_acceptance_open(self):
        log_p = lambda x: -0.5 * float(x @ x)
        grad = lambda x: -x
        trace = run_mala(log_p, grad, StepSchedule.constant(1e-10),
                         np.array([0.3]), burn_in=0, n_effective=2000,
                         rng=RngStream(7, 0))
        assert acceptance_rate(trace) > 0.99
        # the chain barely moves
        assert np.max(np.abs(trace.effective_states() - 0.3)) < 0.01

    def test_spectral_gaussian_second_moment(self):
        # p ~ e^{-u^2} has second moment 1/2
        target = EcsdTarget(2.0, SpdMatrix([[1.0]]))
        trace = run_mala(lambda u: float(target.log_abs_cf(u)),
                         target.grad_log_abs_cf, StepSchedule.constant(0.1),
                         np.zeros(1), burn_in=2000, n_effective=100000,
                         rng=RngStream(8, 2))
        eff = trace.effective_states()[:, 0]
        m2 = float(np.mean(eff ** 2))
        se = float(np.std(eff ** 2, ddof=1)) / math.sqrt(len(eff)) * 6.0
        assert abs(m2 - 0.5) < 3.0 * se

    def test_deterministic(self):
        log_p = lambda x: -0.5 * float(x @ x)
        grad = lambda x: -x
        t1 = run_mala(log_p, grad, StepSchedule.constant(0.2), np.zeros(2),
                      burn_in=50, n_effective=200, rng=RngStream(3, 3))
        t2 = run_mala(log_p, grad, StepSchedule.constant(0.2), np.zeros(2),
                      burn_in=50, n_effective=200, rng=RngStream(3, 3))
        np.testing.assert_array_equal(t1.states, t2.states)

    def test_weights_follow_schedule(self):
        log_p = lambda x: -0.5 * float(x @ x)
        grad = lambda x: -x
        gammas = [0.1 / (1 + k) for k in range(30)]
        trace = run_mala(log_p, grad, StepSchedule.sequence(gammas), np.zeros(1),
                         burn_in=10, n_effective=20, rng=RngStream(4, 4))
        np.testing.assert_allclose(trace.step_weights, gammas[10:30])

    def test_proposal_mean_contraction(self):
        # log p = -a|x|^2: proposal mean is (1 - 2 gamma a) x
        a, gamma = 1.7, 0.05
        prop = LangevinProposal(lambda x: -2.0 * a * x, gamma, 2)
        x = np.array([0.8, -0.4])
        np.testing.assert_allclose(prop.mean(x), (1.0 - 2.0 * gamma * a) * x,
                                   rtol=1e-14)

    def test_gradient_overflow_aborts(self):
        log_p = lambda x: -0.25 * float(x @ x) ** 2
        grad = lambda x: -float(x @ x) * x * math.inf  # simulated overflow
        with pytest.raises(ChainAbortError):
            run_mala(log_p, grad, StepSchedule.constant(0.1), np.ones(1),
                     burn_in=0, n_effective=10, rng=RngStream(5, 5))

    def test_schedule_validation(self):
        with pytest.raises(DomainError):
            StepSchedule.constant(-0.1)
        with pytest.raises(DomainError):
            StepSchedule.sequence([0.1, 0.0])
        sched = StepSchedule.sequence([0.1, 0.2])
        with pytest.raises(DomainError):
            run_mala(lambda x: -float(x @ x), lambda x: -2 * x, sched,
                     np.zeros(1), burn_in=2, n_effective=2, rng=RngStream(1, 1))


class TestAcceptanceRate:
    def _trace_with_flags(self, flags):
        from spectralmc import MarkovChainTrace
        n = len(flags)
        return MarkovChainTrace(states=np.zeros((n + 1, 1)),
                                accepted=np.asarray(flags, dtype=bool),
                                burn_in=0, n_effective=n,
                                step_weights=np.ones(n))

    def test_all_accepted(self):
        assert acceptance_rate(self._trace_with_flags([1, 1, 1, 1])) == 1.0

    def test_none_accepted(self):
        assert acceptance_rate(self._trace_with_flags([0, 0, 0])) == 0.0

    def test_alternating(self):
        assert acceptance_rate(self._trace_with_flags([1, 0, 1, 0])) == 0.5


class TestTraceDump:
    def test_roundtrip(self, tmp_path):
        trace = run_mh(lambda x: -float(x @ x), RandomWalkGaussian(1.0, 2),
                       np.zeros(2), burn_in=5, n_effective=20, rng=RngStream(12, 0))
        path = tmp_path / "trace.tsv"
        dump_trace(trace, path, seed=12)
        back = load_trace(path)
        np.testing.assert_array_equal(back.states, trace.states)
        np.testing.assert_array_equal(back.accepted, trace.accepted)
        np.testing.assert_array_equal(back.step_weights, trace.step_weights)
        assert back.burn_in == 5 and back.n_effective == 20
