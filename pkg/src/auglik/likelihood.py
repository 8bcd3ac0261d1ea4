"""Log-likelihoods for augmented inputs.

Five variants are supported, all expressed as functions of a ``(K, Y)`` block
of logits for the ``K`` augmentations of one example:

``noaug``       log softmax_y f(x)
``add``         sum_k log softmax_y f(x'_k)          (treats copies as data)
``loss_avg``    mean_k log softmax_y f(x'_k)         (averaged loss)
``prob_avg``    log mean_k softmax_y f(x'_k)         (averaged probabilities)
``logits_avg``  log softmax_y mean_k f(x'_k)         (averaged logits)

With ``estimator="exact_finite"`` the ``K`` augmentations are the full
enumeration of a finite orbit and the result is exact. With
``estimator="mc_bound"`` they are ``K`` i.i.d. draws (with replacement for a
finite orbit); for ``prob_avg`` and ``logits_avg`` the expectation of the
estimate is then a lower bound on the exact value that tightens as ``K``
grows.

Augmentations are drawn once per example and reused for every label, which
keeps per-draw estimates normalised across labels where the variant allows.
"""

from dataclasses import dataclass

import numpy as np

from . import numcore
from .augment import identity_orbit
from .errors import ContractError, ModeError

__all__ = [
    "VARIANTS",
    "ESTIMATORS",
    "LikelihoodSpec",
    "reduce_logits",
    "augmented_inputs",
    "batch_loglik",
    "loglik_noaug",
    "loglik_add",
    "loglik_loss_avg_hat",
    "loglik_loss_avg_exact",
    "loglik_prob_exact",
    "loglik_logits_exact",
    "loglik_prob_hat",
    "loglik_logits_hat",
    "loglik_all_labels",
    "normalization_audit",
]

VARIANTS = ("noaug", "add", "loss_avg", "prob_avg", "logits_avg")
ESTIMATORS = ("exact_finite", "mc_bound")


@dataclass(frozen=True)
class LikelihoodSpec:
    """Which likelihood to evaluate and with how many augmentation samples.

    ``K_test = 0`` means "no test-time augmentation". For an exact estimator
    on a finite orbit both counts are tied to the orbit size by
    :meth:`resolved`.
    """

    variant: str = "noaug"
    estimator: str = "mc_bound"
    K_train: int = 1
    K_test: int = 1

    def __post_init__(self):
        if self.variant not in VARIANTS:
            raise ContractError(f"variant must be one of {VARIANTS}, got {self.variant!r}")
        if self.estimator not in ESTIMATORS:
            raise ContractError(f"estimator must be one of {ESTIMATORS}, got {self.estimator!r}")
        if self.K_train < 1:
            raise ContractError(f"K_train must be >= 1, got {self.K_train}")
        if self.K_test < 0:
            raise ContractError(f"K_test must be >= 0, got {self.K_test}")

    def resolved(self, orbit):
        """Validate against ``orbit`` and tie K to the orbit size when exact."""
        if self.variant == "add" and not orbit.is_finite:
            raise ModeError("the 'add' likelihood needs a finite orbit")
        if self.estimator == "exact_finite":
            if not orbit.is_finite:
                raise ModeError("exact_finite estimator needs a finite orbit")
            K = orbit.size
            return LikelihoodSpec(self.variant, self.estimator, K, K if self.K_test else 0)
        return self

    def to_dict(self):
        return {"variant": self.variant, "estimator": self.estimator, "K_train": self.K_train, "K_test": self.K_test}


def reduce_logits(variant, logits, labels):
    """Per-example log-likelihood and its gradient with respect to the logits.

    ``logits`` has shape ``(N, K, Y)`` and ``labels`` shape ``(N,)``. Returns
    ``(values, dlogits)`` with shapes ``(N,)`` and ``(N, K, Y)``.
    """
    logits = np.asarray(logits, dtype=np.float64)
    labels = np.asarray(labels, dtype=np.int64)
    N, K, Y = logits.shape
    rows = np.arange(N)
    onehot = np.zeros((N, 1, Y))
    onehot[rows, 0, labels] = 1.0

    if variant == "logits_avg":
        mean = logits.sum(axis=1, keepdims=True) / K
        lsm = numcore.log_softmax_rows(mean)
        values = lsm[rows, 0, labels]
        dlogits = np.broadcast_to((onehot - np.exp(lsm)) / K, logits.shape).copy()
        return values, dlogits

    lsm = numcore.log_softmax_rows(logits)
    lp = lsm[rows, :, labels]  # (N, K)
    gk = onehot - np.exp(lsm)  # d lp_k / d logits_k
    if variant == "noaug":
        if K != 1:
            raise ContractError(f"noaug expects a single input per example, got K={K}")
        return lp[:, 0], gk
    if variant == "add":
        return lp.sum(axis=1), gk
    if variant == "loss_avg":
        return lp.sum(axis=1) / K, gk / K
    if variant == "prob_avg":
        values = numcore.logsumexp(lp, axis=1) - np.log(K)
        resp = np.exp(lp - (values + np.log(K))[:, None])
        return values, resp[:, :, None] * gk
    raise ContractError(f"unknown variant {variant!r}")


def augmented_inputs(X, orbit, variant, estimator, K, rng):
    """The ``(N, K', D)`` stack of inputs a variant is evaluated on."""
    X = np.asarray(X, dtype=np.float64)
    if variant == "noaug":
        return X[:, None, :]
    if variant == "add" or estimator == "exact_finite":
        if not orbit.is_finite:
            raise ModeError(f"{variant}/{estimator} needs a finite orbit")
        return orbit.enumerate_batch(X)
    return orbit.sample_batch(X, K, rng)


def _forward_blocks(model, w, Xa):
    N, K, D = Xa.shape
    return numcore.forward_logits(model, w, Xa.reshape(N * K, D)).reshape(N, K, -1)


def batch_loglik(model, w, X, y, orbit, spec, rng=None, K=None, with_grad=False):
    """Log-likelihood of every example in ``(X, y)``.

    Each example is replicated ``K`` times (``K`` defaults to
    ``spec.K_train``) and pushed through the network in a single forward
    pass. Returns a dict with ``values`` (shape ``(N,)``), ``forward_passes``
    (rows evaluated) and, if ``with_grad``, ``grad`` = gradient of
    ``values.sum()`` with respect to ``w``.
    """
    spec = spec.resolved(orbit)
    K = spec.K_train if K is None else K
    Xa = augmented_inputs(X, orbit, spec.variant, spec.estimator, K, rng)
    N, Ka, D = Xa.shape
    flat = Xa.reshape(N * Ka, D)
    labels = np.asarray(y, dtype=np.int64)
    out = {"forward_passes": N * Ka}
    if not with_grad:
        values, _ = reduce_logits(spec.variant, _forward_blocks(model, w, Xa), labels)
        out["values"] = values
        return out

    holder = {}

    def objective(logits):
        values, dl = reduce_logits(spec.variant, logits.reshape(N, Ka, -1), labels)
        holder["values"] = values
        return values.sum(), dl.reshape(N * Ka, -1)

    _, grad = numcore.grad_objective(model, w, flat, objective)
    out["values"] = holder["values"]
    out["grad"] = grad
    return out


# -- single-example operations -------------------------------------------------


def _eval(model, w, Xa, y, variant):
    x = np.asarray(Xa, dtype=np.float64)
    logits = numcore.forward_logits(model, w, x)[None]
    return float(reduce_logits(variant, logits, [y])[0][0])


def _check_label(model, y):
    if not 0 <= int(y) < model.n_classes:
        raise ContractError(f"label {y} out of range for {model.n_classes} classes")
    return int(y)


def _finite(orbit, what):
    if not orbit.is_finite:
        raise ModeError(f"{what} requires a finite orbit")
    return orbit


def _sample(orbit, x, K, rng):
    if K < 1:
        raise ContractError(f"K must be >= 1, got {K}")
    return orbit.sample_batch(np.asarray(x, dtype=np.float64)[None], K, rng)[0]


def loglik_noaug(model, w, x, y):
    y = _check_label(model, y)
    return _eval(model, w, np.asarray(x)[None], y, "noaug")


def loglik_add(model, w, x, y, orbit):
    y = _check_label(model, y)
    return _eval(model, w, _finite(orbit, "loglik_add").enumerate_batch(np.asarray(x)[None])[0], y, "add")


def loglik_loss_avg_exact(model, w, x, y, orbit):
    y = _check_label(model, y)
    return _eval(model, w, _finite(orbit, "loglik_loss_avg_exact").enumerate_batch(np.asarray(x)[None])[0], y, "loss_avg")


def loglik_loss_avg_hat(model, w, x, y, orbit, K, rng):
    y = _check_label(model, y)
    return _eval(model, w, _sample(orbit, x, K, rng), y, "loss_avg")


def loglik_prob_exact(model, w, x, y, orbit):
    y = _check_label(model, y)
    return _eval(model, w, _finite(orbit, "loglik_prob_exact").enumerate_batch(np.asarray(x)[None])[0], y, "prob_avg")


def loglik_logits_exact(model, w, x, y, orbit):
    y = _check_label(model, y)
    return _eval(model, w, _finite(orbit, "loglik_logits_exact").enumerate_batch(np.asarray(x)[None])[0], y, "logits_avg")


def loglik_prob_hat(model, w, x, y, orbit, K, rng):
    y = _check_label(model, y)
    return _eval(model, w, _sample(orbit, x, K, rng), y, "prob_avg")


def loglik_logits_hat(model, w, x, y, orbit, K, rng):
    y = _check_label(model, y)
    return _eval(model, w, _sample(orbit, x, K, rng), y, "logits_avg")


def loglik_all_labels(variant, model, w, x, orbit=None, estimator="exact_finite", K=1, rng=None):
    """Log-likelihood of every label for one input, sharing one set of augmentations."""
    orbit = identity_orbit() if orbit is None else orbit
    Xa = augmented_inputs(np.asarray(x, dtype=np.float64)[None], orbit, variant, estimator, K, rng)
    logits = _forward_blocks(model, w, Xa)
    Y = model.n_classes
    return np.array(
        [reduce_logits(variant, logits, [label])[0][0] for label in range(Y)]
    )


def normalization_audit(variant, model, w, x, orbit=None, estimator="exact_finite", K=1, rng=None):
    """``sum_y exp L(y)``; equals 1 exactly for a valid likelihood."""
    return float(np.exp(loglik_all_labels(variant, model, w, x, orbit, estimator, K, rng)).sum())
