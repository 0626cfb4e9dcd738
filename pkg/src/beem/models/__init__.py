from beem.models.gaussian import (
    GaussianComponent,
    gaussian_factory,
    gaussian_logpdf,
    gaussian_mle_fit,
)
from beem.models.gp import (
    GpComponent,
    KernelFamily,
    KernelSpec,
    gp_factory,
    gp_fit_hyperparams,
    gp_log_marginal_likelihood,
    gp_log_predictive,
    kernel_eval,
    kernel_matrix,
)
from beem.models.hmm import (
    HmmComponent,
    baum_welch_fit,
    hmm_forward_loglik,
    mhmm_as_block_hmm,
    mhmm_block_transition,
    random_hmm_factory,
)

__all__ = [
    "GaussianComponent", "gaussian_factory", "gaussian_logpdf", "gaussian_mle_fit",
    "GpComponent", "KernelFamily", "KernelSpec", "gp_factory", "gp_fit_hyperparams",
    "gp_log_marginal_likelihood", "gp_log_predictive", "kernel_eval", "kernel_matrix",
    "HmmComponent", "baum_welch_fit", "hmm_forward_loglik", "mhmm_as_block_hmm",
    "mhmm_block_transition", "random_hmm_factory",
]
