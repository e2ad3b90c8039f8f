"""Canonical JSON for detection results and configs.

Keys are sorted and every float is written with exactly three decimals, so
parsing a file and writing it back reproduces it byte for byte.
"""

from __future__ import annotations

import json
import math

from fovea.pipeline import Candidate, DetectionResult


def _encode(obj) -> str:
    if obj is None:
        return "null"
    if obj is True:
        return "true"
    if obj is False:
        return "false"
    if isinstance(obj, int):
        return str(int(obj))
    if isinstance(obj, float):
        if not math.isfinite(obj):
            raise ValueError(f"cannot serialize non-finite float {obj}")
        text = f"{obj:.3f}"
        return "0.000" if text == "-0.000" else text
    if isinstance(obj, str):
        return json.dumps(obj, ensure_ascii=False)
    if isinstance(obj, dict):
        items = sorted(obj.items())
        return "{" + ",".join(f"{json.dumps(str(k))}:{_encode(v)}" for k, v in items) + "}"
    if isinstance(obj, (list, tuple)):
        return "[" + ",".join(_encode(v) for v in obj) + "]"
    if hasattr(obj, "item"):  # numpy scalar
        return _encode(obj.item())
    raise TypeError(f"cannot serialize {type(obj).__name__}")


def dumps(obj) -> str:
    return _encode(obj)


def dumps_results(results) -> str:
    """Array of result objects, one per line."""
    rows = [dumps(result_to_dict(r)) for r in results]
    if not rows:
        return "[]\n"
    return "[\n" + ",\n".join(rows) + "\n]\n"


def result_to_dict(r: DetectionResult) -> dict:
    cand = None
    if r.candidate is not None:
        cand = {
            "area": int(r.candidate.area),
            "circularity": float(r.candidate.circularity),
            "otsu_level": int(r.candidate.otsu_level),
            "effective_t": float(r.candidate.effective_t),
        }
    return {
        "source": r.source,
        "detected": bool(r.detected),
        "fovea": None if r.fovea is None else [int(r.fovea[0]), int(r.fovea[1])],
        "candidate": cand,
        "timings": {k: float(v) for k, v in r.timings.items()},
        "error": r.error,
    }


def result_from_dict(d: dict) -> DetectionResult:
    cand = d.get("candidate")
    fovea = d.get("fovea")
    return DetectionResult(
        source=d["source"],
        detected=bool(d["detected"]),
        fovea=None if fovea is None else (int(fovea[0]), int(fovea[1])),
        candidate=None if cand is None else Candidate(
            int(cand["area"]), float(cand["circularity"]), int(cand["otsu_level"]), float(cand["effective_t"])
        ),
        timings={k: float(v) for k, v in (d.get("timings") or {}).items()},
        error=d.get("error"),
    )


def load_results(path) -> list[DetectionResult]:
    with open(path, encoding="utf-8") as fh:
        data = json.load(fh)
    if not isinstance(data, list):
        raise ValueError(f"{path}: expected a JSON array of results")
    return [result_from_dict(d) for d in data]
