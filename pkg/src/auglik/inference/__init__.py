"""Tempered posteriors, samplers, SGD, variational inference and prediction."""

from .checkpoint import Checkpoint, read_checkpoint, write_checkpoint
from .equivalence import expected_update_equivalence_check
from .posterior import (
    MlpPosterior,
    PriorSpec,
    Target,
    TemperingSpec,
    log_posterior,
    log_posterior_and_grad,
    temper,
)
from .predict import classification_metrics, predict_bma, predictive_probs
from .samplers import (
    ChainResult,
    CyclicalSchedule,
    SamplerState,
    ggmc_step,
    init_state,
    kinetic_temperature,
    kinetic_temperature_groups,
    run_chain,
    sgld_step,
)
from .sgd import SgdResult, epochs_for_budget, lr_at_epoch, train_sgd
from .toys import GaussianLinear, gaussian_location
from .vi import VariationalPosterior, elbo_estimate, fit_vi
