"""Mean-field Gaussian variational inference.

The ELBO is estimated with the location-scale reparameterisation
``w = mean + exp(log_std) * eta``. :func:`fit_vi` follows the path-derivative
gradient (the score term of ``log Q`` is dropped), whose variance vanishes
when ``Q`` equals the posterior, and uses Adam for the updates.
"""

from dataclasses import dataclass

import numpy as np

from ..errors import ContractError, DivergenceError

__all__ = ["VariationalPosterior", "elbo_estimate", "fit_vi"]

_LOG_2PI = np.log(2 * np.pi)


@dataclass
class VariationalPosterior:
    mean: np.ndarray
    log_std: np.ndarray

    def __post_init__(self):
        self.mean = np.array(self.mean, dtype=np.float64)
        self.log_std = np.broadcast_to(np.asarray(self.log_std, dtype=np.float64), self.mean.shape).copy()
        if not (np.all(np.isfinite(self.mean)) and np.all(np.isfinite(self.log_std))):
            raise ContractError("variational parameters must be finite")

    @property
    def std(self):
        return np.exp(self.log_std)

    def sample(self, rng, n=None):
        shape = self.mean.shape if n is None else (n,) + self.mean.shape
        return self.mean + self.std * rng.standard_normal(shape)

    def log_prob(self, w):
        z = (np.asarray(w) - self.mean) / self.std
        return float(-0.5 * np.sum(z * z + _LOG_2PI) - np.sum(self.log_std))


def elbo_estimate(target, q, n_mc, rng):
    """Monte Carlo estimate of ``E_Q[log p(w, data) - log Q(w)]``.

    ``target.log_joint(w, rng)`` must return the (tempered) log joint.
    """
    if n_mc < 1:
        raise ContractError(f"n_mc must be >= 1, got {n_mc}")
    total = 0.0
    for _ in range(n_mc):
        eta = rng.standard_normal(q.mean.shape)
        w = q.mean + q.std * eta
        total += target.log_joint(w, rng) - q.log_prob(w)
    return total / n_mc


def fit_vi(target, q0, n_steps=1000, lr=1e-2, n_mc=1, rng=None, betas=(0.9, 0.999), eps=1e-8, trace_every=0):
    """Maximise the ELBO with Adam; returns ``(q, trace)``.

    ``trace`` lists ``(step, elbo_estimate)`` pairs every ``trace_every`` steps.
    """
    if rng is None:
        raise ContractError("fit_vi needs an explicit rng stream")
    params = np.concatenate([q0.mean, q0.log_std])
    d = q0.mean.size
    m1 = np.zeros_like(params)
    m2 = np.zeros_like(params)
    b1, b2 = betas
    trace = []
    for t in range(1, n_steps + 1):
        mean, log_std = params[:d], params[d:]
        std = np.exp(log_std)
        g = np.zeros_like(params)
        for _ in range(n_mc):
            eta = rng.standard_normal(d)
            w = mean + std * eta
            _, gw = target.value_and_grad(w, rng)
            # d/dw [log p(w) - log Q(w)] with Q's parameters held fixed
            gw = gw + eta / std
            g[:d] += gw
            g[d:] += gw * std * eta
        g /= n_mc
        if not np.all(np.isfinite(g)):
            raise DivergenceError("non-finite ELBO gradient", step=t)
        m1 = b1 * m1 + (1 - b1) * g
        m2 = b2 * m2 + (1 - b2) * g * g
        mhat = m1 / (1 - b1**t)
        vhat = m2 / (1 - b2**t)
        params = params + lr * mhat / (np.sqrt(vhat) + eps)
        if trace_every and t % trace_every == 0:
            q = VariationalPosterior(params[:d], params[d:])
            trace.append((t, elbo_estimate(target, q, n_mc, rng)))
    return VariationalPosterior(params[:d].copy(), params[d:].copy()), trace
