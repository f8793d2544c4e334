"""Double two-piece (DTP) distributions: density evaluation, shape measures,
kurtosis-matched priors, propriety audits, and inference."""

from .core import (
    DtpParams,
    DtpParamsEpsSkew,
    MODEL_KINDS,
    MomentResult,
    Observation,
    dtp_cdf,
    dtp_log_pdf,
    dtp_moment,
    dtp_pdf,
    dtp_quantile,
    dtp_sample,
    epsilon_weight,
    log_likelihood,
    to_eps_skew,
    to_inverse_scale,
    to_natural,
)
from .families import FAMILY_TAGS, descriptor, inflection_point, make_family
from .inference import (
    Chain,
    FitReportMle,
    HierData,
    McmcConfig,
    compare_models,
    competitor_pdf,
    fit_bayes,
    hier_fit,
    marginal_lik_is,
    mcmc_sample,
    mle_fit,
    posterior_predictive,
    savage_dickey_bf,
)
from .measures import (
    ag_measure,
    cj_curve,
    cj_functional,
    invert_kappa,
    kappa_measure,
    kappa_range,
    scan_injectivity,
)
from .numerics import BracketError, ConvergenceError, DomainError, rng_stream
from .priors import (
    Prior1D,
    ProprietyVerdict,
    half_cauchy_prior,
    improper_scale_prior,
    induce_delta_prior,
    repeated_obs_threshold,
    set_obs_audit,
    thm1_audit,
    thm2_audit,
    uniform_prior,
)

__version__ = "1.0.0"
