"""Data-augmentation likelihoods and tempered posterior inference for small Bayesian MLPs."""

from . import augment, datasets, errors, likelihood, numcore, rng
from .augment import Orbit, Transform, enumerate_orbit, freeze_orbit, sample_augmentation
from .datasets import Dataset, generate_synthetic, load_dataset, write_dataset
from .likelihood import LikelihoodSpec
from .numcore import MlpModel, forward_logits, grad_objective, log_softmax

__version__ = "0.1.0"
