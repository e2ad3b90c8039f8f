"""Macula fovea localization in color fundus photographs."""

from fovea.pipeline import DetectionResult, PipelineConfig, detect, detect_batch

__version__ = "0.1.0"

__all__ = ["DetectionResult", "PipelineConfig", "detect", "detect_batch"]
