"""End-to-end fovea detection with per-stage timing."""

from __future__ import annotations

import logging
import math
import os
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field, fields

import numpy as np

from fovea import blobs, enhancement, imaging, morphology, segmentation
from fovea.errors import FoveaError

log = logging.getLogger(__name__)

STAGES = (
    "grayscale",
    "fov_mask",
    "enhance",
    "equalize",
    "denoise",
    "repeat_enhance",
    "histogram",
    "otsu",
    "binarize",
    "label",
    "select",
)


@dataclass(frozen=True)
class PipelineConfig:
    enhance_radius: int = 15
    denoise_radius: int = 5
    equalization: str = "tiled"  # "tiled" or "global"
    tiles: int = 8
    clip: float = 2.0
    otsu_offset: float = 0.2
    area_min: int = 400
    area_max: int = 5000
    circ_min: float = 0.6
    connectivity: int = 8
    fov_tol: int = 10
    repeat_enhance_after_eq: bool = False

    def __post_init__(self):
        problems = []
        if self.enhance_radius < 0 or self.denoise_radius < 0:
            problems.append("radii must be >= 0")
        if self.equalization not in ("tiled", "global"):
            problems.append("equalization must be 'tiled' or 'global'")
        if self.tiles < 1:
            problems.append("tiles must be >= 1")
        if not self.clip >= 1.0:
            problems.append("clip must be >= 1.0")
        if not 0.0 <= self.otsu_offset <= 1.0:
            problems.append("otsu_offset must be in [0, 1]")
        if not 0 <= self.area_min < self.area_max:
            problems.append("need 0 <= area_min < area_max")
        if not 0.0 <= self.circ_min <= 1.0:
            problems.append("circ_min must be in [0, 1]")
        if self.connectivity not in (4, 8):
            problems.append("connectivity must be 4 or 8")
        if not 0 <= self.fov_tol <= 255:
            problems.append("fov_tol must be in [0, 255]")
        if problems:
            raise ValueError("invalid PipelineConfig: " + "; ".join(problems))

    @classmethod
    def from_dict(cls, data: dict) -> "PipelineConfig":
        known = {f.name: f.type for f in fields(cls)}
        unknown = set(data) - set(known)
        if unknown:
            raise ValueError(f"unknown config keys: {sorted(unknown)}")
        return cls(**data)

    def to_dict(self) -> dict:
        return asdict(self)

    def with_overrides(self, pairs) -> "PipelineConfig":
        """Apply ``key=value`` strings, coercing to each field's current type."""
        data = self.to_dict()
        for pair in pairs:
            key, sep, raw = pair.partition("=")
            key = key.strip()
            if not sep or key not in data:
                raise ValueError(f"bad override {pair!r}")
            current = data[key]
            if isinstance(current, bool):
                if raw.lower() not in ("1", "0", "true", "false", "yes", "no", "on", "off"):
                    raise ValueError(f"bad boolean for {key}: {raw!r}")
                data[key] = raw.lower() in ("1", "true", "yes", "on")
            elif isinstance(current, int):
                data[key] = int(raw)
            elif isinstance(current, float):
                data[key] = float(raw)
            else:
                data[key] = raw
        return PipelineConfig(**data)


@dataclass
class Candidate:
    area: int
    circularity: float
    otsu_level: int
    effective_t: float


@dataclass
class DetectionResult:
    source: str
    detected: bool = False
    fovea: tuple[int, int] | None = None
    candidate: Candidate | None = None
    timings: dict[str, float] = field(default_factory=dict)
    error: str | None = None
    stages: dict[str, np.ndarray] | None = field(default=None, repr=False, compare=False)
    trace: list[str] = field(default_factory=list, repr=False, compare=False)

    def detection_fields(self):
        """Everything except timings and debug payloads."""
        return (self.source, self.detected, self.fovea, self.candidate, self.error)


class _Timer:
    def __init__(self, result: DetectionResult):
        self.result = result

    def __call__(self, name, fn, *args, **kwargs):
        t0 = time.perf_counter()
        out = fn(*args, **kwargs)
        self.result.timings[name] = (time.perf_counter() - t0) * 1000.0
        self.result.trace.append(name)
        return out


def _round_ms(ms: float) -> float:
    return round(ms, 1)


def detect(img: np.ndarray, cfg: PipelineConfig | None = None, source: str = "<memory>", debug: bool = False) -> DetectionResult:
    """Run the whole detection chain on one RGB image.

    Stage order: grayscale, field-of-view mask, top-hat/bottom-hat contrast
    enhancement, equalization, denoising, (optional second enhancement),
    masked histogram, Otsu, offset binarization, labeling, selection.

    Raises DegenerateMask if the image has no field of view.
    """
    cfg = cfg or PipelineConfig()
    result = DetectionResult(source)
    step = _Timer(result)
    start = time.perf_counter()

    gray = step("grayscale", imaging.to_grayscale, img)
    fov = step("fov_mask", imaging.estimate_fov_mask, gray, cfg.fov_tol)
    enhanced = step("enhance", morphology.enhance_contrast, gray, morphology.make_disk(cfg.enhance_radius))
    if cfg.equalization == "global":
        equalized = step("equalize", enhancement.equalize_global, enhanced, fov)
    else:
        equalized = step("equalize", enhancement.equalize_adaptive, enhanced, cfg.tiles, cfg.clip, fov)
    denoised = step("denoise", enhancement.denoise, equalized, cfg.denoise_radius)
    work = denoised
    if cfg.repeat_enhance_after_eq:
        work = step("repeat_enhance", morphology.enhance_contrast, work, morphology.make_disk(cfg.enhance_radius))
    hist = step("histogram", enhancement.build_histogram, work, fov)
    report = step("otsu", segmentation.otsu, hist)
    binary = step("binarize", segmentation.binarize_dark, work, report, cfg.otsu_offset, fov)
    comps = step("label", blobs.label_components, binary, cfg.connectivity)
    pick = step("select", blobs.select_macula, comps, cfg.area_min, cfg.area_max, cfg.circ_min)

    total = (time.perf_counter() - start) * 1000.0
    result.timings = {k: _round_ms(v) for k, v in result.timings.items()}
    result.timings["total"] = _round_ms(total)

    if pick is not None:
        result.detected = True
        result.fovea = pick.fovea
        result.candidate = Candidate(
            area=pick.component.area,
            circularity=pick.component.circularity,
            otsu_level=report.otsu_level,
            effective_t=report.effective_t(cfg.otsu_offset),
        )
    if debug:
        result.stages = {
            "grayscale": gray,
            "enhanced": enhanced,
            "equalized": equalized,
            "denoised": work,
            "binary": binary.astype(np.uint8) * 255,
            "components": colorize_labels(comps.labels),
        }
    return result


def colorize_labels(labels: np.ndarray) -> np.ndarray:
    """Deterministic pseudo-color rendering of a label map (background black)."""
    n = int(labels.max()) if labels.size else 0
    rng = np.random.default_rng(12345)
    palette = rng.integers(64, 256, size=(n + 1, 3), dtype=np.uint8)
    palette[0] = 0
    return palette[labels]


def _detect_path(path, cfg: PipelineConfig, debug: bool) -> DetectionResult:
    try:
        img = imaging.load_image(path)
        res = detect(img, cfg, source=str(path), debug=debug)
    except FoveaError as exc:
        log.warning("%s: %s", path, exc)
        return DetectionResult(str(path), error=f"{type(exc).__name__}: {exc}")
    log.info("%s: detected=%s fovea=%s", path, res.detected, res.fovea)
    return res


def default_parallelism() -> int:
    raw = os.environ.get("FOVEA_THREADS", "")
    try:
        return max(1, int(raw))
    except ValueError:
        return 1


def detect_batch(paths, cfg: PipelineConfig | None = None, parallelism: int = 1, debug: bool = False) -> list[DetectionResult]:
    """Detect over many files; output order follows ``paths``.

    A file that cannot be read produces an error-marked result instead of
    aborting the batch.
    """
    if parallelism < 1:
        raise ValueError("parallelism must be >= 1")
    cfg = cfg or PipelineConfig()
    paths = list(paths)
    if parallelism == 1 or len(paths) <= 1:
        return [_detect_path(p, cfg, debug) for p in paths]
    with ThreadPoolExecutor(max_workers=parallelism) as pool:
        return list(pool.map(lambda p: _detect_path(p, cfg, debug), paths))


def centroid_error(result: DetectionResult, truth) -> float | None:
    if result.fovea is None or truth is None:
        return None
    return math.hypot(result.fovea[0] - truth[0], result.fovea[1] - truth[1])
