"""Predictive distributions and Bayesian model averaging."""

import numpy as np

from .. import numcore
from ..errors import ContractError

__all__ = ["test_inputs", "predictive_probs", "predict_bma", "classification_metrics"]


def test_inputs(X, orbit, lik_spec, rng=None):
    """The ``(N, K, D)`` inputs used at test time.

    ``K_test = 0`` (or the ``noaug`` variant) selects the raw input. An exact
    estimator on a finite orbit enumerates it; otherwise ``K_test`` i.i.d.
    draws are taken.
    """
    X = np.asarray(X, dtype=np.float64)
    if lik_spec.K_test == 0 or lik_spec.variant == "noaug":
        return X[:, None, :]
    if lik_spec.estimator == "exact_finite" or (orbit.is_finite and lik_spec.variant == "add"):
        return orbit.enumerate_batch(X)
    if rng is None:
        raise ContractError("sampled test-time augmentation needs an rng")
    return orbit.sample_batch(X, lik_spec.K_test, rng)


def _combine(variant, logits):
    # logits: (N, K, Y)
    if variant == "logits_avg":
        return numcore.softmax_rows(logits.sum(axis=1) / logits.shape[1])
    return numcore.softmax_rows(logits).mean(axis=1)


def predictive_probs(model, w, Xa, variant):
    """Per-sample predictive for pre-augmented inputs ``Xa`` of shape ``(N, K, D)``.

    ``logits_avg`` uses the softmax of the mean logits; every other variant
    averages the softmax outputs.
    """
    N, K, D = Xa.shape
    logits = numcore.forward_logits(model, w, Xa.reshape(N * K, D)).reshape(N, K, -1)
    return _combine(variant, logits)


def predict_bma(model, samples, x, orbit, lik_spec, rng=None):
    """Bayesian model average of per-sample predictives.

    ``x`` may be one input vector (returns shape ``(Y,)``) or a batch
    ``(N, D)`` (returns ``(N, Y)``). Test-time augmentations are drawn once
    and shared by all samples.
    """
    samples = list(samples)
    if not samples:
        raise ContractError("predict_bma needs at least one parameter sample")
    x = np.asarray(x, dtype=np.float64)
    single = x.ndim == 1
    X = x[None] if single else x
    Xa = test_inputs(X, orbit, lik_spec, rng)
    probs = sum(predictive_probs(model, w, Xa, lik_spec.variant) for w in samples) / len(samples)
    probs = probs / probs.sum(axis=1, keepdims=True)
    return probs[0] if single else probs


def classification_metrics(probs, labels):
    """Error rate and mean negative log-likelihood of the true labels."""
    labels = np.asarray(labels, dtype=np.int64)
    p_true = probs[np.arange(labels.size), labels]
    error = float(np.mean(np.argmax(probs, axis=1) != labels))
    nll = float(-np.mean(np.log(np.maximum(p_true, np.finfo(float).tiny))))
    return {"error": error, "nll": nll}
