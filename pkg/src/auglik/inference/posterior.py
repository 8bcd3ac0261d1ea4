"""Priors, tempering, and tempered log-posteriors.

A *target* is any object with a ``tempering`` attribute and the two methods

``log_prior_and_grad(w) -> (value, grad)``
``log_lik_and_grad(w, rng) -> (value, grad)``

:class:`Target` combines them into the tempered log-posterior that samplers
and optimizers consume.
"""

from dataclasses import dataclass

import numpy as np

from .. import likelihood as lik
from ..errors import ConfigurationError, ContractError

__all__ = [
    "TemperingSpec",
    "PriorSpec",
    "temper",
    "Target",
    "MlpPosterior",
    "log_posterior",
    "log_posterior_and_grad",
]

_LOG_2PI = np.log(2 * np.pi)


@dataclass(frozen=True)
class TemperingSpec:
    """Posterior tempering.

    ``mode="full"`` raises prior and likelihood to ``1/T``.
    ``mode="likelihood_only"`` raises only the likelihood to ``S`` (the
    posterior under ``S`` agreeing annotators) and leaves ``T`` unused.
    """

    T: float = 1.0
    mode: str = "full"
    S: float = 1.0

    def __post_init__(self):
        if not self.T > 0:
            raise ContractError(f"temperature must be positive, got {self.T}")
        if self.mode not in ("full", "likelihood_only"):
            raise ContractError(f"tempering mode must be 'full' or 'likelihood_only', got {self.mode!r}")
        if not self.S >= 1:
            raise ContractError(f"curation exponent S must be >= 1, got {self.S}")

    @property
    def temperature(self):
        """Temperature the dynamics should run at (momentum and noise scale)."""
        return self.T if self.mode == "full" else 1.0

    def to_dict(self):
        return {"T": self.T, "mode": self.mode, "S": self.S}


def temper(log_prior, log_lik, tempering):
    """Combine prior and likelihood terms (values or gradients)."""
    if tempering.mode == "full":
        return (log_prior + log_lik) / tempering.T
    return log_prior + tempering.S * log_lik


@dataclass(frozen=True)
class PriorSpec:
    """Isotropic Gaussian prior; ``variance`` is a scalar or per-parameter array."""

    variance: object = 1.0

    def __post_init__(self):
        v = np.asarray(self.variance, dtype=np.float64)
        if np.any(~(v > 0)):
            raise ContractError("prior variance must be positive")

    @classmethod
    def default_for(cls, model):
        """Variance ``1 / fan_in`` for every parameter of a layer."""
        return cls(1.0 / model.fan_in_per_param())

    def log_prob_and_grad(self, w):
        w = np.asarray(w, dtype=np.float64)
        var = np.broadcast_to(np.asarray(self.variance, dtype=np.float64), w.shape)
        value = -0.5 * np.sum(w * w / var + np.log(var) + _LOG_2PI)
        return float(value), -w / var


class Target:
    """Mixin turning prior and likelihood terms into a tempered log-posterior."""

    tempering = TemperingSpec()

    def value_and_grad(self, w, rng=None):
        lp, glp = self.log_prior_and_grad(w)
        ll, gll = self.log_lik_and_grad(w, rng)
        t = self.tempering
        return temper(lp, ll, t), temper(glp, gll, t)

    def log_joint(self, w, rng=None):
        return self.value_and_grad(w, rng)[0]


class MlpPosterior(Target):
    """Tempered posterior over the weights of an MLP classifier.

    With ``batch_size`` set, likelihood terms are estimated from a random
    minibatch (without replacement) and scaled by ``N / batch_size``.
    ``forward_passes`` counts network rows evaluated so far.
    """

    def __init__(self, model, dataset, orbit, lik_spec, prior=None, tempering=None, batch_size=None):
        if dataset.dim != model.input_dim or dataset.n_classes != model.n_classes:
            raise ConfigurationError(
                f"dataset shape (D={dataset.dim}, Y={dataset.n_classes}) does not match model {model.layer_widths}"
            )
        self.model = model
        self.dataset = dataset
        self.orbit = orbit
        self.lik_spec = lik_spec.resolved(orbit)
        self.prior = PriorSpec.default_for(model) if prior is None else prior
        self.tempering = TemperingSpec() if tempering is None else tempering
        if batch_size is not None and not 1 <= batch_size <= len(dataset):
            raise ConfigurationError(f"batch_size must be in [1, {len(dataset)}], got {batch_size}")
        self.batch_size = batch_size
        self.forward_passes = 0

    @property
    def n_params(self):
        return self.model.n_params

    def log_prior_and_grad(self, w):
        return self.prior.log_prob_and_grad(w)

    def log_lik_and_grad(self, w, rng=None):
        X, y = self.dataset.inputs, self.dataset.labels
        scale = 1.0
        if self.batch_size is not None and self.batch_size < len(y):
            idx = rng.choice(len(y), size=self.batch_size, replace=False)
            X, y = X[idx], y[idx]
            scale = len(self.dataset) / self.batch_size
        out = lik.batch_loglik(self.model, w, X, y, self.orbit, self.lik_spec, rng, with_grad=True)
        self.forward_passes += out["forward_passes"]
        return scale * float(out["values"].sum()), scale * out["grad"]


def log_posterior_and_grad(model, w, dataset, orbit, lik_spec, prior, tempering, rng=None):
    """Full-batch tempered log-posterior and its gradient."""
    return MlpPosterior(model, dataset, orbit, lik_spec, prior, tempering).value_and_grad(w, rng)


def log_posterior(model, w, dataset, orbit, lik_spec, prior, tempering, rng=None):
    """Tempered log-posterior (up to the log-evidence).

    ``full``: ``(log P(w) + sum_i L_i) / T``; ``likelihood_only``:
    ``log P(w) + S * sum_i L_i``.
    """
    return log_posterior_and_grad(model, w, dataset, orbit, lik_spec, prior, tempering, rng)[0]
