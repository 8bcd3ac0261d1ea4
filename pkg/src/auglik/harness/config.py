"""Experiment configuration: loading, validation, defaults, object builders."""

import copy
import json
import os
from importlib import resources

import jsonschema

from .. import augment
from .. import rng as rngmod
from ..datasets import generate_synthetic, load_dataset
from ..errors import ConfigurationError
from ..inference import CyclicalSchedule, PriorSpec, TemperingSpec
from ..likelihood import LikelihoodSpec
from ..numcore import MlpModel

__all__ = [
    "DEFAULTS",
    "DEFAULT_TEMPERATURES",
    "DEFAULT_VARIANTS",
    "schema",
    "load_config",
    "validate_config",
    "with_defaults",
    "build_datasets",
    "build_model",
    "build_orbit",
    "build_likelihood",
    "build_prior",
    "build_tempering",
    "build_schedule",
    "variant_setup",
]

# Desk-scale grid with the same shape as the cold-posterior sweep it mirrors.
DEFAULT_TEMPERATURES = [0.01, 0.03, 0.1, 0.3, 1.0]
DEFAULT_VARIANTS = ["noaug", "loss_avg", "prob_avg:finite", "prob_avg:full", "logits_avg:finite", "logits_avg:full"]

DEFAULTS = {
    "version": 1,
    "dataset": {"generator": "shift_digits", "n_train": 200, "n_test": 200, "params": {}},
    "model": {"hidden": [32], "activation": "relu", "bias": True},
    "orbit": {"kind": "cyclic_shift", "mode": "full", "size": 8, "jitter": 0.0},
    "likelihood": {"variant": "prob_avg", "estimator": "mc_bound", "K_train": 4, "K_test": 4},
    "method": "sgd",
    "tempering": {"T": 1.0, "mode": "full", "S": 1.0},
    "temperatures": DEFAULT_TEMPERATURES,
    "variants": DEFAULT_VARIANTS,
    "prior": {"variance": None},
    "sgd": {"budget": 200, "lr": 0.1, "momentum": 0.9, "batch_size": 32},
    "sampler": {"friction": 0.1, "batch_size": None},
    "schedule": {"cycles": 4, "epochs_per_cycle": 10, "samples_per_cycle": 2, "base_step": 0.02, "shape": "cosine"},
    "vi": {"steps": 500, "lr": 0.01, "n_mc": 1, "init_log_std": -3.0, "n_eval_samples": 20},
    "workers": 1,
}


def schema():
    text = resources.files("auglik.harness").joinpath("config_schema.json").read_text()
    return json.loads(text)


def validate_config(cfg):
    try:
        jsonschema.validate(cfg, schema())
    except jsonschema.ValidationError as exc:
        where = "/".join(str(p) for p in exc.absolute_path) or "<root>"
        raise ConfigurationError(f"invalid config at {where}: {exc.message}") from None
    return cfg


def _merge(base, over):
    out = copy.deepcopy(base)
    for k, v in over.items():
        if isinstance(v, dict) and isinstance(out.get(k), dict):
            out[k] = _merge(out[k], v)
        else:
            out[k] = copy.deepcopy(v)
    return out


def with_defaults(cfg):
    """Validate ``cfg`` and fill unspecified keys from :data:`DEFAULTS`."""
    validate_config(cfg)
    if "dataset" in cfg and "train_path" in cfg["dataset"]:
        base = {k: v for k, v in DEFAULTS.items() if k != "dataset"}
        return _merge(base, cfg)
    return _merge(DEFAULTS, cfg)


def load_config(path):
    if not os.path.exists(path):
        raise ConfigurationError(f"config file not found: {path}")
    with open(path) as fh:
        try:
            cfg = json.load(fh)
        except json.JSONDecodeError as exc:
            raise ConfigurationError(f"{path}: not valid JSON: {exc}") from None
    return with_defaults(cfg)


def build_datasets(cfg, seed):
    """``(train, test)``; ``test`` may be None for file-based configs without one."""
    d = cfg["dataset"]
    if "train_path" in d:
        fmt = d.get("format", "csv")
        train = load_dataset(d["train_path"], fmt, d.get("n_classes"))
        test = load_dataset(d["test_path"], fmt, train.n_classes) if "test_path" in d else None
        return train, test
    return generate_synthetic(d["generator"], d["n_train"], d.get("n_test", 0), seed, **d.get("params", {}))


def build_model(cfg, dataset):
    m = cfg["model"]
    widths = (dataset.dim, *m.get("hidden", []), dataset.n_classes)
    return MlpModel(widths, m.get("activation", "relu"), m.get("bias", True))


def _sampler_factors(kind, dim, jitter):
    if kind == "identity":
        factors = [augment.SamplerFactor("identity")]
    elif kind == "cyclic_shift":
        factors = [augment.SamplerFactor("cyclic_shift", period=dim)]
    elif kind == "rotation":
        factors = [augment.SamplerFactor("rotation")]
    elif kind == "sign_flip":
        factors = [augment.SamplerFactor("sign_flip", axis=0), augment.SamplerFactor("sign_flip", axis=1)]
    else:
        raise ConfigurationError(f"unknown orbit kind {kind!r}")
    if jitter:
        factors.append(augment.SamplerFactor("jitter", scale=jitter))
    return factors


def build_orbit(orbit_cfg, dim, seed, mode=None):
    """Orbit from config.

    ``group``: the declared finite group (all cyclic shifts, ``C_size``
    rotations, or the four axis reflections). ``finite``: ``size``
    transforms frozen from the full sampler. ``full``: the stochastic sampler.
    """
    kind = orbit_cfg.get("kind", "cyclic_shift")
    mode = mode or orbit_cfg.get("mode", "full")
    size = orbit_cfg.get("size", 8)
    jitter = orbit_cfg.get("jitter", 0.0)
    if kind == "identity":
        return augment.identity_orbit()
    if mode == "group":
        if jitter:
            raise ConfigurationError("jitter cannot be combined with a group orbit")
        if kind == "cyclic_shift":
            return augment.cyclic_shift_group(dim)
        if kind == "rotation":
            return augment.rotation_group(size)
        return augment.sign_flip_group()
    full = augment.Orbit.stochastic(_sampler_factors(kind, dim, jitter), name=kind)
    if mode == "full":
        return full
    if mode == "finite":
        return augment.freeze_orbit(full, size, rngmod.stream(seed, "orbit", "freeze"))
    raise ConfigurationError(f"unknown orbit mode {mode!r}")


def build_likelihood(cfg):
    return LikelihoodSpec(**cfg["likelihood"])


def build_prior(cfg, model):
    var = cfg.get("prior", {}).get("variance")
    return PriorSpec.default_for(model) if var is None else PriorSpec(var)


def build_tempering(cfg, T=None):
    t = dict(cfg["tempering"])
    if T is not None:
        t["T"] = T
    return TemperingSpec(**t)


def build_schedule(cfg, n_train):
    s = dict(cfg["schedule"])
    if "steps_per_epoch" not in s:
        bs = cfg["sampler"].get("batch_size")
        s["steps_per_epoch"] = -(-n_train // bs) if bs else 1
    return CyclicalSchedule(**s)


def variant_setup(variant, cfg, dim, seed):
    """Orbit and likelihood spec for a sweep variant such as ``"prob_avg:finite"``.

    Finite-orbit variants use ``K_train`` frozen augmentations evaluated
    exactly (so ``K_train = K_test = K``); full-orbit variants sample
    ``K_train``/``K_test`` fresh augmentations. ``loss_avg`` draws one
    augmentation per example per step.
    """
    lik = cfg["likelihood"]
    K_train, K_test = lik.get("K_train", 4), lik.get("K_test", 4)
    if variant == "noaug":
        return augment.identity_orbit(), LikelihoodSpec("noaug", "exact_finite", 1, 0)
    if variant == "loss_avg":
        orbit = build_orbit(cfg["orbit"], dim, seed, mode="full")
        return orbit, LikelihoodSpec("loss_avg", "mc_bound", 1, K_test)
    name, _, mode = variant.partition(":")
    if mode == "finite":
        orbit = build_orbit({**cfg["orbit"], "size": K_train}, dim, seed, mode="finite")
        return orbit, LikelihoodSpec(name, "exact_finite", K_train, K_train)
    if mode == "full":
        orbit = build_orbit(cfg["orbit"], dim, seed, mode="full")
        return orbit, LikelihoodSpec(name, "mc_bound", K_train, K_test)
    raise ConfigurationError(f"unknown sweep variant {variant!r}")
