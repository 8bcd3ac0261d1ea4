"""
Mean-field variational inference on a conjugate model
=====================================================

For a Gaussian location model the mean-field family contains the exact
posterior, so the optimised ELBO reaches the log evidence.
"""

import numpy as np

from auglik import rng as rngmod
from auglik.inference import VariationalPosterior, elbo_estimate, fit_vi, gaussian_location

y = rngmod.stream(0, "data").normal(0.7, 1.0, size=10)
n = y.size
target = gaussian_location(y)

# log N(y; 0, I + 11^T) for a unit prior variance
cov = np.eye(n) + np.ones((n, n))
_, logdet = np.linalg.slogdet(cov)
evidence = -0.5 * (y @ np.linalg.solve(cov, y) + logdet + n * np.log(2 * np.pi))

q, trace = fit_vi(target, VariationalPosterior(np.zeros(1), -3.0), 3000, 0.02, 1, rngmod.stream(0, "vi"), trace_every=500)
for row in trace:
    print(row)
elbo = elbo_estimate(target, q, 1000, rngmod.stream(1, "vi"))
print(f"ELBO {elbo:.6f}  log evidence {evidence:.6f}")
print(f"q mean {q.mean[0]:.4f} (exact {n * y.mean() / (n + 1):.4f}), std {q.std[0]:.4f} (exact {(n + 1) ** -0.5:.4f})")
