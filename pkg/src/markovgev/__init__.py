"""First-order Markov GEV models for block maxima with logistic extremal dependence."""

from .gev import GevParams, gev_cdf, gev_logpdf, gev_pdf, gev_quantile, frechet_to_gev, gev_to_frechet
from .logistic import (
    biv_logistic_cdf,
    biv_logistic_logpdf,
    biv_logistic_pdf,
    chi_from_alpha,
    conditional_cdf,
    conditional_quantile,
    conditional_sample,
)
from .model import (
    DEFAULT_PRIORS,
    MODELS,
    MaximaSeries,
    ModelSpec,
    ParamVector,
    Priors,
    conditional_q95_next,
    log_likelihood,
    log_posterior,
    log_prior,
)
from .inference import McmcConfig, PosteriorDraws, SamplerError, mcmc_sample, mle_fit
from .diagnostics import dic, ess, posterior_summary, rhat
from .simulate import ProcessSpec, true_conditional_q95
from .tail import ChiProfile, chi_hat, chi_profile

__version__ = "0.1.0"
