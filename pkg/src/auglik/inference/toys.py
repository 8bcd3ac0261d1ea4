"""Conjugate Gaussian targets with closed-form posteriors.

``GaussianLinear`` is Bayesian linear regression with unit-variance Gaussian
noise and an isotropic Gaussian prior. A 1-D location model is the special
case of a single all-ones feature. ``copies`` stacks independent replicas of
the same posterior into one parameter vector, which lets one sampler run
behave like many independent chains.
"""

import numpy as np

from .posterior import Target, TemperingSpec

__all__ = ["GaussianLinear", "gaussian_location"]

_LOG_2PI = np.log(2 * np.pi)


class GaussianLinear(Target):
    def __init__(self, X, y, prior_var=1.0, noise_var=1.0, copies=1, tempering=None):
        self.X = np.atleast_2d(np.asarray(X, dtype=np.float64))
        self.y = np.asarray(y, dtype=np.float64)
        self.prior_var = float(prior_var)
        self.noise_var = float(noise_var)
        self.copies = int(copies)
        self.tempering = TemperingSpec() if tempering is None else tempering
        self.d = self.X.shape[1]
        self.forward_passes = 0

    @property
    def n_params(self):
        return self.d * self.copies

    def _blocks(self, w):
        return np.asarray(w, dtype=np.float64).reshape(self.copies, self.d)

    def log_prior_and_grad(self, w):
        w = np.asarray(w, dtype=np.float64)
        v = self.prior_var
        return float(-0.5 * np.sum(w * w / v + np.log(v) + _LOG_2PI)), -w / v

    def log_lik_and_grad(self, w, rng=None):
        W = self._blocks(w)
        r = self.y[None, :] - W @ self.X.T  # (copies, n)
        v = self.noise_var
        value = -0.5 * np.sum(r * r / v + np.log(v) + _LOG_2PI)
        self.forward_passes += r.size
        return float(value), ((r / v) @ self.X).reshape(-1)


def gaussian_location(y, prior_var=1.0, copies=1, tempering=None):
    """Unknown mean ``w`` with ``y_i ~ N(w, 1)`` and ``w ~ N(0, prior_var)``."""
    y = np.asarray(y, dtype=np.float64)
    return GaussianLinear(np.ones((y.size, 1)), y, prior_var, 1.0, copies, tempering)
