"""
A small temperature sweep through the experiment harness
========================================================

The same sweep is available from the command line as
``auglik sweep-temperature --config CONFIG --out DIR``.
"""

import sys
import tempfile

from auglik.harness import read_metrics, sweep_temperature, with_defaults

# with a few dozen examples the 1/fan_in prior dominates and every cell sits near chance
cfg = with_defaults({
    "version": 1,
    "dataset": {"generator": "shift_digits", "n_train": 512, "n_test": 200, "params": {"dim": 8, "n_classes": 3, "noise": 0.5}},
    "model": {"hidden": [16]},
    "orbit": {"kind": "cyclic_shift", "mode": "full", "size": 4},
    "likelihood": {"K_train": 4, "K_test": 4},
    "method": "ggmc",
    "sampler": {"batch_size": 64},
    "temperatures": [0.1, 1.0],
    "variants": ["noaug", "prob_avg:finite", "logits_avg:finite"],
    "schedule": {"cycles": 4, "epochs_per_cycle": 25, "samples_per_cycle": 3, "base_step": 0.03},
    "seeds": [0],
})

out = sys.argv[1] if len(sys.argv) > 1 else tempfile.mkdtemp(prefix="sweep_")
sweep_temperature(cfg, out)
print(f"{'variant':<18} {'T':>5}  {'error':>6}  {'nll':>6}  status")
for r in read_metrics(f"{out}/sweep.csv"):
    print(f"{r.variant:<18} {r.temperature:>5g}  {r.test_error:>6.3f}  {r.test_nll:>6.3f}  {r.status}")
print("metrics written to", out)
