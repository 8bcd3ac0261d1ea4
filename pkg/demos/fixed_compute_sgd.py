"""
Training with K augmentations under a fixed compute budget
==========================================================

Each epoch with K_train augmentations costs K_train passes over the data,
so a 200-pass budget buys floor(200 / K_train) epochs. The trained networks
are then evaluated with and without test-time averaging over the orbit.
"""

import numpy as np

from auglik import augment
from auglik.datasets import generate_synthetic
from auglik.inference import classification_metrics, predict_bma, train_sgd
from auglik.likelihood import LikelihoodSpec
from auglik.numcore import MlpModel

train, test = generate_synthetic("shift_digits", 64, 500, seed=0, noise=0.5)
orbit = augment.cyclic_shift_group(train.dim)
model = MlpModel((train.dim, 32, train.n_classes))

print("variant     K_train  epochs  forward passes  error(K_test=0)  error(orbit)")
for variant in ("prob_avg", "logits_avg"):
    for K in (1, 2, 4, 8):
        res = train_sgd(model, train, orbit, LikelihoodSpec(variant, "mc_bound", K, 1),
                        budget=200, lr=0.05, batch_size=16, seed=0)
        errors = []
        for K_test in (0, orbit.size):
            probs = predict_bma(model, [res.w], test.inputs, orbit, LikelihoodSpec(variant, "exact_finite", K, K_test))
            errors.append(classification_metrics(probs, test.labels)["error"])
        print(f"{variant:<11} {K:>7}  {res.epochs:>6}  {res.forward_passes:>14}  {errors[0]:>15.3f}  {errors[1]:>12.3f}")
