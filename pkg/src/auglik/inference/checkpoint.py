"""Parameter snapshots on disk.

Layout::

    AUGLIK-CHECKPOINT 1\n
    <one line of JSON: model, rng, phase, tempering, n_params, extra>\n
    <n_params little-endian float64 values>

The JSON line is written with sorted keys and no whitespace, so reading a
file and writing it back reproduces it byte for byte.
"""

import json
from dataclasses import dataclass, field

import numpy as np

from ..errors import ConfigurationError, IngestionError
from ..numcore import MlpModel

__all__ = ["Checkpoint", "write_checkpoint", "read_checkpoint", "MAGIC", "FORMAT_VERSION"]

MAGIC = b"AUGLIK-CHECKPOINT"
FORMAT_VERSION = 1


@dataclass
class Checkpoint:
    model: MlpModel
    w: np.ndarray
    rng: dict = None
    phase: dict = None
    tempering: dict = None
    extra: dict = field(default_factory=dict)

    def header(self):
        return {
            "format_version": FORMAT_VERSION,
            "model": self.model.to_dict(),
            "rng": self.rng,
            "phase": self.phase,
            "tempering": self.tempering,
            "n_params": int(self.w.size),
            "extra": self.extra,
        }


def write_checkpoint(path, checkpoint):
    w = np.asarray(checkpoint.w, dtype="<f8")
    if w.shape != (checkpoint.model.n_params,):
        raise ConfigurationError(f"parameter vector of length {w.size} does not match model ({checkpoint.model.n_params})")
    head = json.dumps(checkpoint.header(), sort_keys=True, separators=(",", ":"), allow_nan=False)
    with open(path, "wb") as fh:
        fh.write(MAGIC + b" " + str(FORMAT_VERSION).encode() + b"\n")
        fh.write(head.encode("utf-8") + b"\n")
        fh.write(w.tobytes())


def read_checkpoint(path, model=None):
    """Load a checkpoint; with ``model`` given, reject a mismatching architecture."""
    with open(path, "rb") as fh:
        raw = fh.read()
    try:
        first, rest = raw.split(b"\n", 1)
        head, payload = rest.split(b"\n", 1)
    except ValueError:
        raise IngestionError(f"{path}: truncated checkpoint", row=1) from None
    parts = first.split(b" ")
    if len(parts) != 2 or parts[0] != MAGIC:
        raise IngestionError(f"{path}: not a checkpoint file", row=1)
    if int(parts[1]) != FORMAT_VERSION:
        raise IngestionError(f"{path}: unsupported checkpoint version {parts[1].decode()}", row=1)
    try:
        meta = json.loads(head.decode("utf-8"))
    except ValueError as exc:
        raise IngestionError(f"{path}: bad header: {exc}", row=2) from None
    stored = MlpModel.from_dict(meta["model"])
    if len(payload) != 8 * meta["n_params"] or meta["n_params"] != stored.n_params:
        raise IngestionError(f"{path}: payload does not match n_params={meta['n_params']}", row=3)
    if model is not None and stored != model:
        raise ConfigurationError(f"{path}: checkpoint model {stored.layer_widths} does not match {model.layer_widths}")
    w = np.frombuffer(payload, dtype="<f8").astype(np.float64)
    return Checkpoint(stored, w, meta["rng"], meta["phase"], meta["tempering"], meta["extra"])
