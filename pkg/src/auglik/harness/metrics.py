"""Metrics records and their CSV form."""

import csv
import math
from dataclasses import astuple, dataclass, fields

from ..errors import ContractError, IngestionError

__all__ = ["MetricsRecord", "FIELDS", "write_metrics", "read_metrics", "WALL_CLOCK_FIELDS"]


@dataclass(frozen=True)
class MetricsRecord:
    """One evaluation point. Optional fields are ``None`` when not applicable."""

    run_id: str
    method: str
    variant: str
    orbit_mode: str
    K_train: int
    K_test: int
    temperature: float
    index: int
    test_error: float = None
    test_nll: float = None
    train_objective: float = None
    kinetic_temperature: float = None
    forward_passes: int = None
    wall_clock_s: float = None
    status: str = "ok"

    def __post_init__(self):
        for f in fields(self):
            v = getattr(self, f.name)
            if isinstance(v, str) and not v.isprintable():
                raise ContractError(f"metric {f.name} contains control characters: {v!r}")
            if isinstance(v, float) and math.isnan(v):
                raise ContractError(f"metric {f.name} is NaN (run {self.run_id}, index {self.index})")
        if self.test_error is not None and not 0.0 <= self.test_error <= 1.0:
            raise ContractError(f"test_error {self.test_error} outside [0, 1]")
        if self.test_nll is not None and self.test_nll < 0:
            raise ContractError(f"test_nll {self.test_nll} is negative")


FIELDS = tuple(f.name for f in fields(MetricsRecord))
WALL_CLOCK_FIELDS = ("wall_clock_s",)
_INT = {"K_train", "K_test", "index", "forward_passes"}
_STR = {"run_id", "method", "variant", "orbit_mode", "status"}


def _fmt(v):
    if v is None:
        return ""
    if isinstance(v, bool):
        raise ContractError("boolean metric values are not supported")
    if isinstance(v, int):
        return str(v)
    if isinstance(v, float):
        return format(v, ".17g")
    return str(v)


def write_metrics(records, path):
    """Write records to CSV (header always present; floats at 17 significant digits)."""
    records = list(records)
    for r in records:
        if not isinstance(r, MetricsRecord):
            raise ContractError(f"expected MetricsRecord, got {type(r).__name__}")
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(FIELDS)
        for r in records:
            w.writerow([_fmt(v) for v in astuple(r)])


def _parse(name, text, lineno):
    if name in _STR:
        return text
    if text == "":
        return None
    try:
        return int(text) if name in _INT else float(text)
    except ValueError:
        raise IngestionError(f"field {name}: cannot parse {text!r}", row=lineno) from None


def read_metrics(path):
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header is None or tuple(header) != FIELDS:
            raise IngestionError("metrics header does not match the MetricsRecord schema", row=1)
        out = []
        for lineno, row in enumerate(reader, start=2):
            if len(row) != len(FIELDS):
                raise IngestionError(f"expected {len(FIELDS)} fields, got {len(row)}", row=lineno)
            values = {n: _parse(n, t, lineno) for n, t in zip(FIELDS, row)}
            try:
                out.append(MetricsRecord(**values))
            except ContractError as exc:
                raise IngestionError(str(exc), row=lineno) from None
    return out
