"""
Tempered posterior sampling on a conjugate Gaussian
===================================================

SGLD and GGMC on the unknown mean of ten unit-variance observations. The
tempered posterior is Gaussian with known mean and variance, so the
samplers can be compared against closed forms.
"""

import numpy as np

from auglik import rng as rngmod
from auglik.inference import CyclicalSchedule, TemperingSpec, gaussian_location, run_chain

y = rngmod.stream(0, "data").normal(0.7, 1.0, size=10)
n = y.size
C = 500  # independent replicas stacked into one parameter vector

for T in (0.1, 0.25, 1.0):
    target = gaussian_location(y, copies=C, tempering=TemperingSpec(T))
    mean, var = n * y.mean() / (n + 1), T / (n + 1)
    for sampler, step in (("sgld", 1e-3 * T), ("ggmc", 0.02)):
        sch = CyclicalSchedule(1, 80, 40, step, 50, shape="constant")
        res = run_chain(target, np.zeros(C), sch, sampler, rngmod.stream(1, sampler), friction=0.3)
        S = np.array(res.samples)
        line = f"T={T:<4} {sampler}: mean {S.mean():.4f} ({mean:.4f})  var {S.var():.5f} ({var:.5f})"
        if sampler == "ggmc":
            kt = np.mean([r["kinetic_temperature_mean"] for r in res.trace[40:]])
            line += f"  kinetic temperature {kt:.4f}"
        print(line)

# likelihood-only tempering: the posterior of S agreeing annotators
for S_exp in (1, 4):
    target = gaussian_location(y, copies=C, tempering=TemperingSpec(mode="likelihood_only", S=S_exp))
    sch = CyclicalSchedule(1, 160, 80, 0.02 / S_exp, 50, shape="constant")
    res = run_chain(target, np.zeros(C), sch, "ggmc", rngmod.stream(2, "ggmc"), friction=0.3)
    S = np.array(res.samples)
    prec = 1 + S_exp * n
    print(f"S={S_exp}: mean {S.mean():.4f} ({S_exp * n * y.mean() / prec:.4f})  var {S.var():.5f} ({1 / prec:.5f})")
