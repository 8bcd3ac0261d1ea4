"""Datasets: synthetic generators with known invariances, CSV and IDX I/O.

Two generators are built in:

``shift_digits``
    Class prototypes are sign patterns on a ring of length ``dim``. An example
    is a random cyclic shift of its class prototype plus Gaussian noise. The
    true label of any input is the class whose prototype is nearest over all
    cyclic shifts, so the labelling function is exactly shift invariant.

``rotated_blobs``
    Inputs are ``n_points`` planar points ``(x0, y0, x1, y1, ...)``. Each class
    fixes a radius profile; an example places point ``p`` at its class radius
    and a shared random rotation. The true label is the class with the
    nearest radius profile, which rotations leave unchanged.
"""

import csv
import os
import struct
from dataclasses import dataclass, field

import numpy as np

from . import rng as rngmod
from .errors import ConfigurationError, ContractError, IngestionError

__all__ = [
    "Dataset",
    "GENERATORS",
    "generate_synthetic",
    "true_labeler",
    "load_dataset",
    "write_dataset",
    "read_idx",
    "write_idx",
]


@dataclass(frozen=True)
class Dataset:
    inputs: np.ndarray
    labels: np.ndarray
    n_classes: int
    metadata: dict = field(default_factory=dict, compare=False)

    def __post_init__(self):
        X = np.array(self.inputs, dtype=np.float64)
        y = np.array(self.labels)
        if X.ndim != 2 or X.shape[0] < 1:
            raise ContractError(f"inputs must be a non-empty (N, D) array, got shape {X.shape}")
        if y.shape != (X.shape[0],):
            raise ContractError(f"labels must have shape ({X.shape[0]},), got {y.shape}")
        if y.size and not np.issubdtype(y.dtype, np.integer):
            if not np.all(y == np.round(y)):
                raise ContractError("labels must be integers")
        y = y.astype(np.int64)
        if self.n_classes < 2:
            raise ContractError("need at least two classes")
        if np.any(y < 0) or np.any(y >= self.n_classes):
            raise ContractError(f"labels must lie in [0, {self.n_classes})")
        X.setflags(write=False)
        y.setflags(write=False)
        object.__setattr__(self, "inputs", X)
        object.__setattr__(self, "labels", y)

    def __len__(self):
        return self.inputs.shape[0]

    @property
    def dim(self):
        return self.inputs.shape[1]

    def subset(self, idx):
        return Dataset(self.inputs[idx], self.labels[idx], self.n_classes, dict(self.metadata))

    def __eq__(self, other):
        if not isinstance(other, Dataset):
            return NotImplemented
        return (
            self.n_classes == other.n_classes
            and np.array_equal(self.inputs, other.inputs)
            and np.array_equal(self.labels, other.labels)
        )


# -- generators ---------------------------------------------------------------


def _shift_prototypes(dim, n_classes, seed):
    rng = rngmod.stream(seed, "shift_digits", "prototypes")
    # Reject candidates that are too close to an existing prototype under any shift.
    min_sep = 0.5 * dim
    protos = []
    for _ in range(10_000):
        cand = rng.choice([-1.0, 1.0], size=dim)
        if all(
            np.min([np.sum((np.roll(cand, s) - p) ** 2) for s in range(dim)]) >= min_sep for p in protos
        ) and np.min([np.sum((np.roll(cand, s) - cand) ** 2) for s in range(1, dim)] or [np.inf]) > 0:
            protos.append(cand)
            if len(protos) == n_classes:
                return np.array(protos)
    raise ConfigurationError(f"could not find {n_classes} shift-distinct prototypes of length {dim}")


def _blob_profiles(n_points, n_classes, seed):
    rng = rngmod.stream(seed, "rotated_blobs", "profiles")
    min_sep = 0.6
    profiles = []
    for _ in range(10_000):
        cand = rng.uniform(0.5, 2.0, size=n_points)
        if all(np.linalg.norm(cand - p) >= min_sep for p in profiles):
            profiles.append(cand)
            if len(profiles) == n_classes:
                return np.array(profiles)
    raise ConfigurationError(f"could not find {n_classes} separated radius profiles")


def _shift_labeler(params, seed):
    protos = _shift_prototypes(params["dim"], params["n_classes"], seed)
    dim = params["dim"]
    # every shift of every prototype, shape (Y, dim, dim)
    bank = np.stack([np.stack([np.roll(p, s) for s in range(dim)]) for p in protos])

    def label(X):
        X = np.atleast_2d(np.asarray(X, dtype=np.float64))
        d = ((X[:, None, None, :] - bank[None]) ** 2).sum(-1)
        return np.argmin(d.min(axis=2), axis=1)

    return label, protos


def _blob_labeler(params, seed):
    profiles = _blob_profiles(params["n_points"], params["n_classes"], seed)

    def label(X):
        X = np.atleast_2d(np.asarray(X, dtype=np.float64))
        r = np.hypot(X[:, 0::2], X[:, 1::2])
        return np.argmin(((r[:, None, :] - profiles[None]) ** 2).sum(-1), axis=1)

    return label, profiles


def _gen_shift_digits(n, rng, params, seed):
    label, protos = _shift_labeler(params, seed)
    dim = params["dim"]
    cls = rng.integers(params["n_classes"], size=n)
    off = rng.integers(dim, size=n)
    X = np.stack([np.roll(protos[c], o) for c, o in zip(cls, off)])
    X = X + params["noise"] * rng.standard_normal(X.shape)
    return X, label


def _gen_rotated_blobs(n, rng, params, seed):
    label, profiles = _blob_labeler(params, seed)
    P = params["n_points"]
    cls = rng.integers(params["n_classes"], size=n)
    theta = rng.uniform(0.0, 2 * np.pi, size=(n, 1))
    base = 2 * np.pi * np.arange(P) / P
    radii = profiles[cls] * (1.0 + params["noise"] * rng.standard_normal((n, P)))
    ang = base[None, :] + theta
    X = np.empty((n, 2 * P))
    X[:, 0::2] = radii * np.cos(ang)
    X[:, 1::2] = radii * np.sin(ang)
    return X, label


GENERATORS = {
    "shift_digits": (
        _gen_shift_digits,
        _shift_labeler,
        {"dim": 16, "n_classes": 4, "noise": 0.3, "label_noise": 0.0},
        "cyclic_shift",
    ),
    "rotated_blobs": (
        _gen_rotated_blobs,
        _blob_labeler,
        {"n_points": 4, "n_classes": 3, "noise": 0.05, "label_noise": 0.0},
        "rotation",
    ),
}


def _resolve(name, params):
    if name not in GENERATORS:
        raise ConfigurationError(f"unknown generator {name!r}; choose from {sorted(GENERATORS)}")
    gen, labeler, defaults, group = GENERATORS[name]
    unknown = set(params) - set(defaults)
    if unknown:
        raise ConfigurationError(f"unknown parameters for {name}: {sorted(unknown)}")
    return gen, labeler, {**defaults, **params}, group


def generate_synthetic(name, n_train, n_test, seed, **params):
    """Draw a ``(train, test)`` pair from a named generator.

    Both parts are i.i.d. from the same distribution and fully determined by
    ``(name, sizes, seed, params)``. Labels come from the generator's true
    labelling function, then a fraction ``label_noise`` is replaced by a
    different class chosen uniformly.
    """
    gen, _, params, group = _resolve(name, params)
    if n_train < 1 or n_test < 0:
        raise ContractError("need n_train >= 1 and n_test >= 0")
    out = []
    for part, n in (("train", n_train), ("test", n_test)):
        rng = rngmod.stream(seed, name, part)
        if n == 0:
            out.append(None)
            continue
        X, label = gen(n, rng, params, seed)
        y = label(X)
        flip = rng.random(n) < params["label_noise"]
        if flip.any():
            bump = rng.integers(1, params["n_classes"], size=int(flip.sum()))
            y[flip] = (y[flip] + bump) % params["n_classes"]
        meta = {"generator": name, "seed": seed, "part": part, "invariance": group, "params": params}
        out.append(Dataset(X, y, params["n_classes"], meta))
    return tuple(out)


def true_labeler(name, seed, **params):
    """Noise-free labelling function ``X -> labels`` of a generator."""
    _, labeler, params, _ = _resolve(name, params)
    return labeler(params, seed)[0]


# -- file formats -------------------------------------------------------------


def write_dataset(dataset, path):
    """Write CSV with header ``label,f0,f1,...``; floats use shortest round-trip repr."""
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["label"] + [f"f{j}" for j in range(dataset.dim)])
        for x, y in zip(dataset.inputs, dataset.labels):
            w.writerow([int(y)] + [repr(float(v)) for v in x])


def _load_csv(path, n_classes):
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise IngestionError("empty file", row=1) from None
        if not header or header[0].strip() != "label":
            raise IngestionError("header must start with 'label'", row=1)
        D = len(header) - 1
        if D < 1:
            raise IngestionError("header declares no feature columns", row=1)
        X, y = [], []
        for lineno, row in enumerate(reader, start=2):
            if not row:
                continue
            if len(row) != D + 1:
                raise IngestionError(f"expected {D + 1} fields, got {len(row)}", row=lineno)
            try:
                lab = int(row[0])
            except ValueError:
                raise IngestionError(f"label {row[0]!r} is not an integer", row=lineno) from None
            if lab < 0 or (n_classes is not None and lab >= n_classes):
                raise IngestionError(f"label {lab} out of range [0, {n_classes})", row=lineno)
            try:
                feats = [float(v) for v in row[1:]]
            except ValueError as exc:
                raise IngestionError(str(exc), row=lineno) from None
            X.append(feats)
            y.append(lab)
    if not X:
        raise IngestionError("no data rows", row=2)
    return np.array(X), np.array(y, dtype=np.int64)


_IDX_DTYPES = {0x08: ">u1", 0x09: ">i1", 0x0B: ">i2", 0x0C: ">i4", 0x0D: ">f4", 0x0E: ">f8"}


def read_idx(path):
    """Read an IDX file (magic ``00 00 <type> <ndim>``, big-endian dims)."""
    with open(path, "rb") as fh:
        raw = fh.read()
    if len(raw) < 4 or raw[0] != 0 or raw[1] != 0:
        raise IngestionError(f"{path}: bad IDX magic number", row=0)
    code, ndim = raw[2], raw[3]
    if code not in _IDX_DTYPES:
        raise IngestionError(f"{path}: unsupported IDX type 0x{code:02x}", row=0)
    need = 4 + 4 * ndim
    if len(raw) < need:
        raise IngestionError(f"{path}: truncated header", row=0)
    dims = struct.unpack(">" + "I" * ndim, raw[4:need])
    dt = np.dtype(_IDX_DTYPES[code])
    count = int(np.prod(dims)) if dims else 1
    if len(raw) - need != count * dt.itemsize:
        raise IngestionError(f"{path}: payload size does not match dimensions {dims}", row=0)
    return np.frombuffer(raw, dtype=dt, offset=need).reshape(dims)


def write_idx(array, path):
    """Write an unsigned-byte IDX file."""
    a = np.asarray(array)
    if a.dtype != np.uint8:
        raise ContractError("write_idx only writes unsigned-byte payloads")
    with open(path, "wb") as fh:
        fh.write(bytes([0, 0, 0x08, a.ndim]))
        fh.write(struct.pack(">" + "I" * a.ndim, *a.shape))
        fh.write(a.tobytes())


def _load_idx(path, n_classes):
    base = os.path.basename(path)
    if "-images" not in base:
        raise IngestionError(f"{path}: IDX image files must be named '<name>-images...'", row=0)
    label_path = os.path.join(os.path.dirname(path), base.replace("-images", "-labels", 1))
    images = read_idx(path)
    labels = read_idx(label_path)
    if images.dtype != np.uint8:
        raise IngestionError(f"{path}: image payload must be unsigned bytes", row=0)
    if labels.ndim != 1 or labels.shape[0] != images.shape[0]:
        raise IngestionError(f"{label_path}: expected {images.shape[0]} labels, got shape {labels.shape}", row=0)
    y = labels.astype(np.int64)
    if n_classes is not None:
        bad = np.flatnonzero((y < 0) | (y >= n_classes))
        if bad.size:
            raise IngestionError(f"label {y[bad[0]]} out of range [0, {n_classes})", row=int(bad[0]) + 1)
    X = images.reshape(images.shape[0], -1).astype(np.float64) / 255.0
    return X, y


def load_dataset(path, format="csv", n_classes=None):
    """Read a dataset file.

    ``n_classes`` defaults to ``max(label) + 1``. Ingestion errors carry the
    offending row number (file line for CSV, example index for IDX).
    """
    if not os.path.exists(path):
        raise IngestionError(f"{path}: no such file")
    if format == "csv":
        X, y = _load_csv(path, n_classes)
    elif format == "idx":
        X, y = _load_idx(path, n_classes)
    else:
        raise ConfigurationError(f"unknown dataset format {format!r}")
    Y = int(n_classes) if n_classes is not None else max(int(y.max()) + 1, 2)
    return Dataset(X, y, Y, {"source": os.fspath(path), "format": format})
