"""Configuration, experiment orchestration, metrics and the command line."""

from .config import load_config, with_defaults
from .experiments import evaluate, sweep_temperature
from .metrics import MetricsRecord, read_metrics, write_metrics
