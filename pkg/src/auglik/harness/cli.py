"""Command-line entry point.

Exit codes: 0 success, 2 usage or configuration error, 3 runtime error,
4 sampler/optimizer divergence. No environment variables are read.
"""

import argparse
import json
import logging
import os
import sys

import numpy as np

from .. import augment, likelihood, numcore
from .. import rng as rngmod
from ..datasets import write_dataset
from ..errors import AuglikError, ConfigurationError, DivergenceError
from . import config as cfgmod
from .experiments import (
    evaluate,
    run_sampling_experiment,
    run_sgd_experiment,
    run_vi_experiment,
    sweep_temperature,
)
from .metrics import write_metrics

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_RUNTIME = 3
EXIT_DIVERGED = 4

log = logging.getLogger("auglik")


def _common(p):
    p.add_argument("--config", metavar="PATH", help="JSON experiment config")
    p.add_argument("--seed", type=int, metavar="N", help="overrides the config's seed list")
    p.add_argument("--out", metavar="DIR", help="output directory (overrides config 'out')")


def build_parser():
    parser = argparse.ArgumentParser(prog="auglik", description=__doc__.splitlines()[0])
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True, metavar="COMMAND")

    p = sub.add_parser("gen-data", help="write a synthetic train/test split as CSV")
    _common(p)

    p = sub.add_parser("train-sgd", help="SGD under a fixed epoch budget")
    _common(p)

    p = sub.add_parser("sample", help="run an SGLD or GGMC chain")
    _common(p)

    p = sub.add_parser("vi", help="mean-field variational inference")
    _common(p)

    p = sub.add_parser("sweep-temperature", help="grid of chains over temperatures and variants")
    _common(p)

    p = sub.add_parser("evaluate", help="BMA metrics over checkpoints")
    _common(p)
    p.add_argument("--checkpoints", nargs="+", required=True, metavar="CKPT")
    p.add_argument("--k-test", type=int, metavar="K", help="override K_test (0 = no test-time augmentation)")

    p = sub.add_parser("gradcheck", help="reverse-mode vs finite-difference gradients on random MLPs")
    _common(p)
    p.add_argument("--trials", type=int, default=10)

    p = sub.add_parser("audit-likelihood", help="sum_y exp L(y) for a constructed instance")
    _common(p)
    p.add_argument("--variant", choices=likelihood.VARIANTS, required=True)
    p.add_argument("--probs", default="0.9,0.1", help="class probabilities of the base input (comma separated)")
    p.add_argument("--estimator", choices=likelihood.ESTIMATORS, default="exact_finite")
    p.add_argument("--K", type=int, default=1, help="samples for the mc_bound estimator")
    return parser


def _load(args, need_config=True):
    if args.config:
        cfg = cfgmod.load_config(args.config)
    elif need_config:
        raise ConfigurationError("--config is required for this command")
    else:
        cfg = cfgmod.with_defaults({"version": 1})
    if args.seed is not None:
        cfg["seeds"] = [args.seed]
    if "seeds" not in cfg:
        raise ConfigurationError("no seed given: pass --seed or set 'seeds' in the config")
    out = args.out or cfg.get("out")
    if not out:
        raise ConfigurationError("no output directory: pass --out or set 'out' in the config")
    cfg["out"] = out
    os.makedirs(out, exist_ok=True)
    return cfg, out


def cmd_gen_data(args):
    cfg, out = _load(args, need_config=False)
    for seed in cfg["seeds"]:
        train, test = cfgmod.build_datasets(cfg, seed)
        write_dataset(train, os.path.join(out, f"train_seed{seed}.csv"))
        if test is not None:
            write_dataset(test, os.path.join(out, f"test_seed{seed}.csv"))
    return EXIT_OK


def _run_per_seed(args, runner, name):
    cfg, out = _load(args)
    records = []
    for seed in cfg["seeds"]:
        records.extend(runner(cfg, seed, out))
    write_metrics(records, os.path.join(out, f"{name}.csv"))
    if any(r.status != "ok" for r in records):
        return EXIT_DIVERGED
    return EXIT_OK


def cmd_train_sgd(args):
    return _run_per_seed(args, run_sgd_experiment, "metrics")


def cmd_sample(args):
    return _run_per_seed(args, run_sampling_experiment, "metrics")


def cmd_vi(args):
    return _run_per_seed(args, run_vi_experiment, "metrics")


def cmd_sweep(args):
    cfg, out = _load(args)
    sweep_temperature(cfg, out)
    return EXIT_OK


def cmd_evaluate(args):
    cfg, out = _load(args)
    records = []
    for seed in cfg["seeds"]:
        train, test = cfgmod.build_datasets(cfg, seed)
        data = test if test is not None else train
        orbit = cfgmod.build_orbit(cfg["orbit"], data.dim, seed)
        spec = cfgmod.build_likelihood(cfg)
        if args.k_test is not None:
            spec = likelihood.LikelihoodSpec(spec.variant, spec.estimator, spec.K_train, args.k_test)
        rec = evaluate(args.checkpoints, data, orbit, spec, rngmod.stream(seed, "evaluate"),
                       run_id=f"evaluate|seed={seed}")
        records.append(rec)
        print(f"seed {seed}: error={rec.test_error:.4f} nll={rec.test_nll:.4f} ({len(args.checkpoints)} checkpoints)")
    write_metrics(records, os.path.join(out, "evaluate.csv"))
    return EXIT_OK


def gradcheck(seed, trials=10):
    """Compare reverse-mode and central-difference gradients on random MLPs.

    Architectures cycle through 0 to 3 hidden layers of width up to 16 and
    both activations; the objective is the exact averaged-probability
    log-likelihood over a small cyclic-shift orbit.
    """
    rows = []
    for t in range(trials):
        rng = rngmod.stream(seed, "gradcheck", t)
        depth = t % 4
        D, Y = 6, 3
        widths = (D, *[16] * depth, Y)
        model = numcore.MlpModel(widths, ("tanh", "relu")[t % 2], bool(t % 3))
        w = rng.normal(0.0, 0.5, size=model.n_params)
        X = rng.normal(size=(4, D))
        y = rng.integers(Y, size=4)
        orbit = augment.cyclic_shift_group(D, 2)
        spec = likelihood.LikelihoodSpec("prob_avg", "exact_finite")
        g = likelihood.batch_loglik(model, w, X, y, orbit, spec, with_grad=True)["grad"]

        def f(v):
            return float(likelihood.batch_loglik(model, v, X, y, orbit, spec)["values"].sum())

        fd = numcore.finite_difference_gradient(f, w)
        rows.append({"trial": t, "layer_widths": list(widths), "activation": model.activation,
                     "bias": model.bias, "max_rel_error": numcore.max_relative_error(g, fd)})
    return {"seed": seed, "trials": rows, "max_rel_error": max(r["max_rel_error"] for r in rows), "tolerance": 1e-5}


def cmd_gradcheck(args):
    if args.seed is None:
        raise ConfigurationError("gradcheck needs --seed")
    out = args.out or "."
    os.makedirs(out, exist_ok=True)
    report = gradcheck(args.seed, args.trials)
    with open(os.path.join(out, "gradcheck.json"), "w") as fh:
        json.dump(report, fh, indent=2)
    ok = report["max_rel_error"] < report["tolerance"]
    print(f"gradcheck seed={args.seed}: max relative error {report['max_rel_error']:.3e} ({'PASS' if ok else 'FAIL'})")
    return EXIT_OK if ok else EXIT_RUNTIME


def audit_report(variant, probs, estimator="exact_finite", K=1, seed=None):
    """Label-sum audit on a linear identity model whose orbit cyclically permutes the logits.

    With ``probs = (0.9, 0.1)`` the two augmentations predict ``(0.9, 0.1)``
    and ``(0.1, 0.9)``.
    """
    p = np.asarray(probs, dtype=np.float64)
    if p.ndim != 1 or p.size < 2 or np.any(p <= 0):
        raise ConfigurationError("--probs needs at least two positive values")
    p = p / p.sum()
    Y = p.size
    model = numcore.MlpModel((Y, Y), bias=False)
    w = np.eye(Y).ravel()
    x = np.log(p)
    orbit = augment.cyclic_shift_group(Y)
    rng = None
    if estimator == "mc_bound":
        if seed is None:
            raise ConfigurationError("the mc_bound audit needs --seed")
        rng = rngmod.stream(seed, "audit")
    logl = likelihood.loglik_all_labels(variant, model, w, x, orbit, estimator, K, rng)
    return {
        "variant": variant,
        "estimator": estimator,
        "K": K if estimator == "mc_bound" else orbit.size,
        "base_probs": p.tolist(),
        "loglik_per_label": logl.tolist(),
        "label_sum": float(np.exp(logl).sum()),
    }


def cmd_audit(args):
    out = args.out or "."
    os.makedirs(out, exist_ok=True)
    try:
        probs = [float(v) for v in args.probs.split(",")]
    except ValueError:
        raise ConfigurationError(f"--probs must be comma-separated numbers, got {args.probs!r}") from None
    report = audit_report(args.variant, probs, args.estimator, args.K, args.seed)
    with open(os.path.join(out, "audit.json"), "w") as fh:
        json.dump(report, fh, indent=2)
    print(f"{args.variant}: label sum = {report['label_sum']:.12g}")
    return EXIT_OK


COMMANDS = {
    "gen-data": cmd_gen_data,
    "train-sgd": cmd_train_sgd,
    "sample": cmd_sample,
    "vi": cmd_vi,
    "sweep-temperature": cmd_sweep,
    "evaluate": cmd_evaluate,
    "gradcheck": cmd_gradcheck,
    "audit-likelihood": cmd_audit,
}


def main(argv=None):
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code) if exc.code is not None else EXIT_OK
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(message)s")
    try:
        return COMMANDS[args.command](args)
    except ConfigurationError as exc:
        print(f"auglik: configuration error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except DivergenceError as exc:
        print(f"auglik: diverged: {exc}", file=sys.stderr)
        return EXIT_DIVERGED
    except (AuglikError, OSError) as exc:
        print(f"auglik: error: {exc}", file=sys.stderr)
        return EXIT_RUNTIME


if __name__ == "__main__":
    sys.exit(main())
