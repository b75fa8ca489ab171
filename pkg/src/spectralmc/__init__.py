"""Spectral-domain Monte Carlo for characteristic-function targets.

Computes expectations E_pi[g] for densities whose Fourier transform is known
in closed form, by direct sampling or MCMC on the spectral density
p ~ |F[pi]| plus the Parseval identity, with direct-domain baselines and
numeric geometric-ergodicity probes.
"""

from .numerics import (
    ChainAbortError,
    DomainError,
    GridCapError,
    NotPositiveDefiniteError,
    NumericalFailure,
    QuadratureGrid,
    QuadResult,
    RngStream,
    SpdMatrix,
    cholesky_solve_and_sqrt,
    gamma_reflected,
    log_gamma,
    quad_integrate,
    random_rotation,
)
from .targets import (
    CgmyModel,
    CharacteristicTarget,
    EcsdTarget,
    LevyTripletTarget,
    cauchy_density,
    cgmy_damped_cf,
    cgmy_drift,
    max_put_payoff,
    max_put_payoff_ft,
    sech_payoff,
    sech_payoff_ft,
)
from .samplers import (
    GeneralizedGaussian,
    IndependenceGaussian,
    LangevinProposal,
    MarkovChainTrace,
    Proposal,
    RandomWalkGaussian,
    StepSchedule,
    acceptance_rate,
    dump_trace,
    load_trace,
    mh_acceptance,
    run_mala,
    run_mh,
)
from .estimators import (
    EstimateReport,
    IidSample,
    cgmy_importance_sampling_estimate,
    cgmy_mcmc_estimate,
    cgmy_normalizing_constant,
    fourier_iid_estimate,
    mepd_normalizing_constant,
    normalizing_constant_quadrature,
    original_domain_mc_estimate,
    parseval_weighted_estimate,
    sample_ecsd,
    sample_generalized_gaussian,
    sample_mepd,
    sample_one_sided_stable,
)
from .diagnostics import (
    CONSISTENT,
    INCONCLUSIVE,
    INCONSISTENT,
    ErgodicityReport,
    acceptance_region_mass_probe,
    exponential_moment_probe,
    mala_gradient_limit_probe,
    mala_sufficient_probe,
    radial_drift_profile,
)

__version__ = "0.1.0"
