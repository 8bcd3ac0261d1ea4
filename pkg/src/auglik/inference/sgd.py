"""Minibatch SGD on augmented likelihoods under a fixed compute budget."""

from dataclasses import dataclass, field

import numpy as np

from .. import likelihood as lik
from .. import rng as rngmod
from ..errors import ConfigurationError, DivergenceError
from .predict import classification_metrics, predict_bma

__all__ = ["SgdResult", "epochs_for_budget", "lr_at_epoch", "train_sgd"]


@dataclass
class SgdResult:
    w: np.ndarray
    epochs: int
    forward_passes: int
    metrics: list = field(default_factory=list)


def epochs_for_budget(budget, K_train):
    """``floor(budget / K_train)``: each epoch costs ``K_train`` passes over the data."""
    if budget < K_train:
        raise ConfigurationError(f"budget {budget} is smaller than K_train={K_train}")
    return int(budget // K_train)


def lr_at_epoch(epoch, n_epochs, base_lr, decay=0.1):
    """Base rate until three quarters of the way through, then ``decay * base``."""
    return base_lr * decay if epoch > 0.75 * n_epochs else base_lr


def train_sgd(
    model,
    dataset,
    orbit,
    lik_spec,
    budget=200,
    lr=0.1,
    momentum=0.9,
    batch_size=32,
    seed=0,
    w0=None,
    test=None,
):
    """Maximise the mean K_train-sample likelihood estimate with momentum SGD.

    Runs ``floor(budget / K_train)`` epochs; no prior term. Each metrics row
    holds the epoch, learning rate, mean training objective (negative
    log-likelihood per example) and, when ``test`` is given, the test error
    and NLL under the test-time rule of ``lik_spec``.
    """
    spec = lik_spec.resolved(orbit)
    n_epochs = epochs_for_budget(budget, spec.K_train)
    N = len(dataset)
    batch_size = min(batch_size, N)
    w = model.init_params(rngmod.stream(seed, "init")) if w0 is None else np.array(w0, dtype=np.float64)
    v = np.zeros_like(w)
    result = SgdResult(w, n_epochs, 0)
    for epoch in range(1, n_epochs + 1):
        rng = rngmod.stream(seed, "sgd", epoch)
        rate = lr_at_epoch(epoch, n_epochs, lr)
        order = rng.permutation(N)
        total = 0.0
        for start in range(0, N, batch_size):
            idx = order[start:start + batch_size]
            out = lik.batch_loglik(
                model, w, dataset.inputs[idx], dataset.labels[idx], orbit, spec, rng, with_grad=True
            )
            result.forward_passes += out["forward_passes"]
            total -= out["values"].sum()
            g = -out["grad"] / idx.size
            v = momentum * v - rate * g
            w = w + v
            if not np.all(np.isfinite(w)):
                raise DivergenceError("SGD produced non-finite weights", step=epoch)
        row = {"epoch": epoch, "lr": rate, "train_objective": total / N}
        if test is not None:
            probs = predict_bma(model, [w], test.inputs, orbit, spec, rngmod.stream(seed, "test", epoch))
            m = classification_metrics(probs, test.labels)
            row.update(test_error=m["error"], test_nll=m["nll"])
        result.metrics.append(row)
    result.w = w
    return result
