"""Confusion-matrix scoring against reader ground truth."""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field
from decimal import ROUND_HALF_UP, Decimal
from pathlib import Path

import numpy as np

from fovea.errors import DuplicateTruth, MissingTruth, ParseError, SemanticError

TRUTH_HEADER = ["source", "has_macula", "fovea_x", "fovea_y"]


@dataclass(frozen=True)
class GroundTruthRecord:
    source: str
    has_macula: bool
    fovea: tuple[int, int] | None = None

    def __post_init__(self):
        if self.fovea is not None and not self.has_macula:
            raise ValueError(f"{self.source}: fovea given for an image without macula")


@dataclass
class MetricsReport:
    tp: int
    fp: int
    tn: int
    fn: int
    sensitivity: float | None
    specificity: float | None
    false_positive_rate: float | None
    centroid_errors: list[float] = field(default_factory=list)
    timing: dict[str, float] = field(default_factory=dict)

    @property
    def n(self) -> int:
        return self.tp + self.fp + self.tn + self.fn

    def to_dict(self) -> dict:
        errs = self.centroid_errors
        return {
            "tp": self.tp,
            "fp": self.fp,
            "tn": self.tn,
            "fn": self.fn,
            "sensitivity": self.sensitivity,
            "specificity": self.specificity,
            "false_positive_rate": self.false_positive_rate,
            "centroid_error": {
                "count": len(errs),
                "mean": float(np.mean(errs)) if errs else None,
                "median": float(np.median(errs)) if errs else None,
                "max": float(max(errs)) if errs else None,
            },
            "timing_ms": self.timing,
        }


def round3(x: float) -> float:
    """Round half-up to 3 decimals (0.9675 -> 0.968, unlike banker's rounding)."""
    return float(Decimal(repr(x)).quantize(Decimal("0.001"), rounding=ROUND_HALF_UP))


def _rate(num: int, den: int) -> float | None:
    return round3(num / den) if den else None


def rates(tp: int, fp: int, tn: int, fn: int) -> tuple[float | None, float | None, float | None]:
    """Sensitivity, specificity and false-positive rate, each to 3 decimals."""
    sens = _rate(tp, tp + fn)
    specificity = _rate(tn, tn + fp)
    # derived from the rounded specificity so that fpr == 1 - specificity holds exactly
    fpr = None if specificity is None else round3(1.0 - specificity)
    return sens, specificity, fpr


def timing_summary(totals) -> dict[str, float]:
    totals = np.asarray(list(totals), dtype=np.float64)
    if totals.size == 0:
        return {}
    return {
        "mean": float(totals.mean()),
        "median": float(np.median(totals)),
        "p95": float(np.percentile(totals, 95)),
    }


def _index_truth(truth) -> dict[str, GroundTruthRecord]:
    index = {}
    for rec in truth:
        if rec.source in index:
            raise DuplicateTruth(rec.source)
        index[rec.source] = rec
    return index


def _lookup(index, source: str) -> GroundTruthRecord:
    if source in index:
        return index[source]
    name = Path(source).name
    if name in index:
        return index[name]
    raise MissingTruth(source)


def score(results, truth) -> MetricsReport:
    """Tally presence/absence against the truth records.

    A result is matched to the truth record with the same source string, or
    failing that the same file name. Error-marked results count as "not
    detected". Centroid distance does not affect the tally; it is reported
    separately wherever both coordinates exist.
    """
    index = _index_truth(truth)
    seen = set()
    tp = fp = tn = fn = 0
    errors = []
    totals = []
    for res in results:
        rec = _lookup(index, res.source)
        if rec.source in seen:
            raise DuplicateTruth(rec.source)
        seen.add(rec.source)
        hit = bool(res.detected)
        if hit and rec.has_macula:
            tp += 1
            if res.fovea is not None and rec.fovea is not None:
                errors.append(math.hypot(res.fovea[0] - rec.fovea[0], res.fovea[1] - rec.fovea[1]))
        elif hit:
            fp += 1
        elif rec.has_macula:
            fn += 1
        else:
            tn += 1
        if "total" in res.timings:
            totals.append(res.timings["total"])
    sens, spec, fpr = rates(tp, fp, tn, fn)
    return MetricsReport(tp, fp, tn, fn, sens, spec, fpr, sorted(errors), timing_summary(totals))


def _parse_flag(raw: str, line: int) -> bool:
    if raw.strip() not in ("0", "1"):
        raise ParseError(line, f"has_macula must be 0 or 1, got {raw!r}")
    return raw.strip() == "1"


def _parse_coord(raw: str, line: int) -> int | None:
    raw = raw.strip()
    if raw == "":
        return None
    try:
        return int(raw)
    except ValueError:
        raise ParseError(line, f"coordinate is not an integer: {raw!r}") from None


def load_truth(path) -> list[GroundTruthRecord]:
    """Read ``source,has_macula,fovea_x,fovea_y`` rows (UTF-8, header required)."""
    records = []
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header is None or [h.strip() for h in header] != TRUTH_HEADER:
            raise ParseError(1, f"expected header {','.join(TRUTH_HEADER)}")
        for row in reader:
            line = reader.line_num
            if not row or all(not cell.strip() for cell in row):
                continue
            if len(row) != 4:
                raise ParseError(line, f"expected 4 fields, got {len(row)}")
            source = row[0].strip()
            if not source:
                raise ParseError(line, "empty source")
            has = _parse_flag(row[1], line)
            x, y = _parse_coord(row[2], line), _parse_coord(row[3], line)
            if (x is None) != (y is None):
                raise ParseError(line, "fovea_x and fovea_y must both be given or both blank")
            fovea = None if x is None else (x, y)
            if fovea is not None and not has:
                raise SemanticError(line, f"{source}: fovea given but has_macula is 0")
            records.append(GroundTruthRecord(source, has, fovea))
    return records
