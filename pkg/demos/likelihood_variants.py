"""
Augmented likelihoods on two hand-built inputs
==============================================

A linear identity model whose two cyclic shifts predict opposite classes.
"""

import math

import numpy as np

from auglik import augment, likelihood
from auglik.numcore import MlpModel

# two views predicting (0.9, 0.1) and (0.1, 0.9)
model = MlpModel((2, 2), bias=False)
w = np.eye(2).ravel()
x = np.log([0.9, 0.1])
orbit = augment.cyclic_shift_group(2)

for variant in ("noaug", "add", "loss_avg", "prob_avg", "logits_avg"):
    logl = likelihood.loglik_all_labels(variant, model, w, x, orbit)
    print(f"{variant:<10} log p(y) = {np.round(logl, 4)}  sum over labels = {np.exp(logl).sum():.4f}")

# loss averaging and additive replication do not sum to one over labels
print("loss_avg label sum:", likelihood.normalization_audit("loss_avg", model, w, x, orbit))

# confident, disagreeing views: logits (100, -100) and (-10, 10)
w = np.array([100.0, -100.0, -10.0, 10.0])
x = np.array([1.0, 0.0])
print("prob_avg predictive:  ", np.exp(likelihood.loglik_all_labels("prob_avg", model, w, x, orbit)))
print("logits_avg predictive:", np.exp(likelihood.loglik_all_labels("logits_avg", model, w, x, orbit)))

# sampled estimators lower-bound the exact value and tighten with K
rng = np.random.default_rng(0)
model = MlpModel((6, 8, 3))
w = rng.normal(size=model.n_params)
x = rng.normal(size=6)
orbit = augment.cyclic_shift_group(6)
exact = likelihood.loglik_prob_exact(model, w, x, 0, orbit)
print(f"exact prob_avg log-likelihood {exact:.4f}")
for K in (1, 2, 4, 16):
    draws = [likelihood.loglik_prob_hat(model, w, x, 0, orbit, K, rng) for _ in range(4000)]
    print(f"  K={K:<2} mean of sampled estimate {np.mean(draws):.4f}")
print("gap at K=1 is at most log(orbit size):", math.log(orbit.size))
