"""Experiment runners: SGD, sampling, VI, temperature sweeps and evaluation.

Every runner is fully determined by ``(config, seed)``. All files are written
below the output directory passed in.
"""

import json
import logging
import os
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import replace

import numpy as np

from .. import rng as rngmod
from ..errors import ConfigurationError, DivergenceError
from ..inference import (
    Checkpoint,
    MlpPosterior,
    VariationalPosterior,
    classification_metrics,
    fit_vi,
    predict_bma,
    read_checkpoint,
    run_chain,
    train_sgd,
    write_checkpoint,
)
from . import config as cfgmod
from .metrics import MetricsRecord, write_metrics

__all__ = [
    "orbit_mode_label",
    "run_sgd_experiment",
    "run_sampling_experiment",
    "run_vi_experiment",
    "sweep_temperature",
    "sweep_cells",
    "evaluate",
]

log = logging.getLogger(__name__)


def orbit_mode_label(orbit, lik_spec):
    if lik_spec.variant == "noaug" or orbit.is_identity:
        return "none"
    return "finite" if orbit.is_finite else "full"


def _ensure_dir(path):
    os.makedirs(path, exist_ok=True)
    return path


def _bma_metrics(model, samples, dataset, orbit, spec, rng):
    probs = predict_bma(model, samples, dataset.inputs, orbit, spec, rng)
    return classification_metrics(probs, dataset.labels)


def run_sgd_experiment(cfg, seed, out):
    t0 = time.perf_counter()
    train, test = cfgmod.build_datasets(cfg, seed)
    model = cfgmod.build_model(cfg, train)
    orbit = cfgmod.build_orbit(cfg["orbit"], train.dim, seed)
    spec = cfgmod.build_likelihood(cfg).resolved(orbit)
    s = cfg["sgd"]
    res = train_sgd(
        model, train, orbit, spec, budget=s["budget"], lr=s["lr"], momentum=s["momentum"],
        batch_size=s["batch_size"], seed=seed, test=test,
    )
    run_id = f"sgd|{spec.variant}|seed={seed}"
    per_epoch = train.inputs.shape[0] * spec.K_train
    records = [
        MetricsRecord(
            run_id, "sgd", spec.variant, orbit_mode_label(orbit, spec), spec.K_train, spec.K_test, 1.0,
            row["epoch"], row.get("test_error"), row.get("test_nll"), float(row["train_objective"]),
            None, per_epoch * row["epoch"], time.perf_counter() - t0,
        )
        for row in res.metrics
    ]
    ck = _ensure_dir(os.path.join(out, "checkpoints"))
    write_checkpoint(
        os.path.join(ck, f"sgd_seed{seed}.ckpt"),
        Checkpoint(model, res.w, extra={"method": "sgd", "seed": seed, "epochs": res.epochs}),
    )
    return records


def _run_cell(cfg, seed, T, orbit, spec, train, test, cell_rng, method, run_id, trace_rows=None):
    t0 = time.perf_counter()
    model = cfgmod.build_model(cfg, train)
    prior = cfgmod.build_prior(cfg, model)
    tempering = cfgmod.build_tempering(cfg, T)
    post = MlpPosterior(model, train, orbit, spec, prior, tempering, cfg["sampler"].get("batch_size"))
    schedule = cfgmod.build_schedule(cfg, len(train))
    w0 = model.init_params(rngmod.stream(seed, "init"))
    mode = orbit_mode_label(orbit, spec)
    base = dict(
        run_id=run_id, method=method, variant=spec.variant, orbit_mode=mode,
        K_train=spec.K_train, K_test=spec.K_test, temperature=float(tempering.T),
    )
    try:
        res = run_chain(post, w0, schedule, method, cell_rng, friction=cfg["sampler"]["friction"])
    except DivergenceError as exc:
        log.warning("chain %s diverged: %s", run_id, exc)
        partial = exc.partial
        return MetricsRecord(
            **base, index=exc.step, forward_passes=partial.forward_passes if partial else None,
            wall_clock_s=time.perf_counter() - t0, status="diverged",
        ), None
    if trace_rows is not None:
        for r in res.trace:
            trace_rows.append(MetricsRecord(**base, index=r["epoch"], kinetic_temperature=r["kinetic_temperature_mean"]))
    kts = [r["kinetic_temperature_mean"] for r in res.trace if r["kinetic_temperature_mean"] is not None]
    kt = float(np.mean(kts[len(kts) // 5:])) if kts else None
    test_m = _bma_metrics(model, res.samples, test, orbit, spec, cell_rng) if test is not None else {}
    train_m = _bma_metrics(model, res.samples, train, orbit, spec, cell_rng)
    rec = MetricsRecord(
        **base, index=len(res.samples), test_error=test_m.get("error"), test_nll=test_m.get("nll"),
        train_objective=train_m["nll"], kinetic_temperature=kt, forward_passes=res.forward_passes,
        wall_clock_s=time.perf_counter() - t0,
    )
    return rec, res


def run_sampling_experiment(cfg, seed, out):
    """One chain with the configured sampler; writes one checkpoint per sample."""
    method = cfg["method"] if cfg["method"] in ("sgld", "ggmc") else "ggmc"
    train, test = cfgmod.build_datasets(cfg, seed)
    orbit = cfgmod.build_orbit(cfg["orbit"], train.dim, seed)
    spec = cfgmod.build_likelihood(cfg).resolved(orbit)
    T = cfg["tempering"]["T"]
    trace = []
    run_id = f"{method}|{spec.variant}|T={T:g}|seed={seed}"
    rec, res = _run_cell(cfg, seed, T, orbit, spec, train, test, rngmod.stream(seed, "chain"), method, run_id, trace)
    if res is not None:
        model = cfgmod.build_model(cfg, train)
        ck = _ensure_dir(os.path.join(out, "checkpoints"))
        schedule = cfgmod.build_schedule(cfg, len(train))
        for i, (w, epoch) in enumerate(zip(res.samples, res.sample_epochs)):
            write_checkpoint(
                os.path.join(ck, f"{method}_seed{seed}_sample{i:04d}.ckpt"),
                Checkpoint(
                    model, w, rng=rngmod.get_state(res.final_state.rng),
                    phase=schedule.phase(epoch * schedule.steps_per_epoch - 1),
                    tempering=cfgmod.build_tempering(cfg).to_dict(),
                    extra={"method": method, "seed": seed, "epoch": epoch, "variant": spec.variant},
                ),
            )
    return trace + [rec]


def run_vi_experiment(cfg, seed, out):
    t0 = time.perf_counter()
    train, test = cfgmod.build_datasets(cfg, seed)
    model = cfgmod.build_model(cfg, train)
    orbit = cfgmod.build_orbit(cfg["orbit"], train.dim, seed)
    spec = cfgmod.build_likelihood(cfg).resolved(orbit)
    tempering = cfgmod.build_tempering(cfg)
    post = MlpPosterior(model, train, orbit, spec, cfgmod.build_prior(cfg, model), tempering,
                        cfg["sampler"].get("batch_size"))
    v = cfg["vi"]
    q0 = VariationalPosterior(model.init_params(rngmod.stream(seed, "init")), v["init_log_std"])
    rng = rngmod.stream(seed, "vi")
    q, _ = fit_vi(post, q0, v["steps"], v["lr"], v["n_mc"], rng)
    samples = list(q.sample(rngmod.stream(seed, "vi", "eval"), v["n_eval_samples"]))
    test_m = _bma_metrics(model, samples, test, orbit, spec, rng) if test is not None else {}
    train_m = _bma_metrics(model, samples, train, orbit, spec, rng)
    ck = _ensure_dir(os.path.join(out, "checkpoints"))
    write_checkpoint(os.path.join(ck, f"vi_seed{seed}_mean.ckpt"),
                     Checkpoint(model, q.mean, tempering=tempering.to_dict(), extra={"method": "vi", "part": "mean"}))
    write_checkpoint(os.path.join(ck, f"vi_seed{seed}_log_std.ckpt"),
                     Checkpoint(model, q.log_std, tempering=tempering.to_dict(), extra={"method": "vi", "part": "log_std"}))
    return [MetricsRecord(
        f"vi|{spec.variant}|T={tempering.T:g}|seed={seed}", "vi", spec.variant, orbit_mode_label(orbit, spec),
        spec.K_train, spec.K_test, float(tempering.T), v["steps"], test_m.get("error"), test_m.get("nll"),
        train_m["nll"], None, post.forward_passes, time.perf_counter() - t0,
    )]


def sweep_cells(cfg):
    """Grid cells ``(index, T, variant, seed)`` in a fixed order."""
    cells = []
    for seed in cfg["seeds"]:
        for variant in cfg["variants"]:
            for T in cfg["temperatures"]:
                cells.append((len(cells), float(T), variant, int(seed)))
    return cells


def _sweep_job(args):
    cfg, (idx, T, variant, seed) = args
    method = cfg["method"] if cfg["method"] in ("sgld", "ggmc") else "ggmc"
    train, test = cfgmod.build_datasets(cfg, seed)
    orbit, spec = cfgmod.variant_setup(variant, cfg, train.dim, seed)
    trace = []
    rec, _ = _run_cell(
        cfg, seed, T, orbit, spec, train, test, rngmod.stream(seed, "cell", idx), method,
        f"{variant}|T={T:g}|seed={seed}", trace,
    )
    # variant label keeps the orbit suffix so finite/full rows stay distinguishable
    return idx, _relabel(rec, variant), [_relabel(r, variant) for r in trace]


def _relabel(rec, variant):
    return replace(rec, variant=variant)


def sweep_temperature(cfg, out):
    """Run one chain per ``(T, variant, seed)`` cell and write ``sweep.csv``.

    Returns the summary records in cell order. Per-epoch kinetic temperatures
    go to ``sweep_trace.csv``. A diverged cell yields a row with
    ``status="diverged"`` and leaves the other cells untouched.
    """
    if not cfg.get("temperatures") or not cfg.get("variants"):
        raise ConfigurationError("a sweep needs at least one temperature and one variant")
    if "seeds" not in cfg:
        raise ConfigurationError("seeds are mandatory")
    _ensure_dir(out)
    jobs = [(cfg, c) for c in sweep_cells(cfg)]
    workers = cfg.get("workers", 1)
    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as ex:
            results = list(ex.map(_sweep_job, jobs))
    else:
        results = [_sweep_job(j) for j in jobs]
    results.sort(key=lambda r: r[0])
    summary = [r[1] for r in results]
    trace = [row for r in results for row in r[2]]
    write_metrics(summary, os.path.join(out, "sweep.csv"))
    write_metrics(trace, os.path.join(out, "sweep_trace.csv"))
    with open(os.path.join(out, "sweep_config.json"), "w") as fh:
        json.dump(cfg, fh, indent=2, sort_keys=True)
    return summary


def evaluate(checkpoint_paths, dataset, orbit, lik_spec, rng, model=None, run_id="evaluate", method="bma"):
    """Bayesian-model-average metrics over the given parameter snapshots."""
    t0 = time.perf_counter()
    paths = list(checkpoint_paths)
    if not paths:
        raise ConfigurationError("evaluate needs at least one checkpoint")
    cks = [read_checkpoint(p, model) for p in paths]
    model = cks[0].model if model is None else model
    for p, c in zip(paths, cks):
        if c.model != model:
            raise ConfigurationError(f"{p}: checkpoint model does not match {model.layer_widths}")
    if model.input_dim != dataset.dim or model.n_classes != dataset.n_classes:
        raise ConfigurationError("checkpoint model does not match the dataset shape")
    spec = lik_spec.resolved(orbit) if lik_spec.K_test else lik_spec
    m = _bma_metrics(model, [c.w for c in cks], dataset, orbit, spec, rng)
    K = spec.K_test
    if K and spec.variant != "noaug":
        passes = len(cks) * len(dataset) * (orbit.size if spec.estimator == "exact_finite" else K)
    else:
        passes = len(cks) * len(dataset)
    return MetricsRecord(
        run_id, method, spec.variant, orbit_mode_label(orbit, spec), spec.K_train, K,
        float((cks[0].tempering or {}).get("T", 1.0)), len(cks), m["error"], m["nll"], None, None,
        passes, time.perf_counter() - t0,
    )
