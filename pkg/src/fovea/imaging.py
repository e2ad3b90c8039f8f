"""Raster I/O, grayscale conversion, field-of-view masking and annotation.

Images are plain numpy arrays, row-major with the origin at the top-left:

* RGB image: ``(height, width, 3)`` uint8, channels in R, G, B order.
* Gray image: ``(height, width)`` uint8.
* FOV mask / binary image: ``(height, width)`` bool.
"""

from __future__ import annotations

import os
from pathlib import Path

import cv2
import numpy as np

from fovea.errors import DecodeError, DegenerateMask, ImageNotFound, WriteError
from fovea.morphology import closing, make_disk

ANNOTATION_RADIUS = 20
ANNOTATION_ARM = 28
ANNOTATION_COLOR = (0, 255, 0)

FOV_CLOSE_RADIUS = 5


def load_image(path) -> np.ndarray:
    """Decode a PNG or JPEG file into an RGB uint8 array.

    Gray and alpha sources are expanded/stripped to three channels; 16-bit
    samples keep only their high byte.
    """
    path = Path(path)
    if not path.is_file():
        raise ImageNotFound(path)
    try:
        buf = np.fromfile(path, dtype=np.uint8)
    except OSError as exc:
        raise DecodeError(path, str(exc)) from exc
    img = cv2.imdecode(buf, cv2.IMREAD_UNCHANGED) if buf.size else None
    if img is None:
        raise DecodeError(path)
    if img.dtype == np.uint16:
        img = (img >> 8).astype(np.uint8)
    elif img.dtype != np.uint8:
        raise DecodeError(path, f"unsupported sample type {img.dtype}")
    if img.ndim == 2:
        img = np.repeat(img[:, :, None], 3, axis=2)
    elif img.shape[2] == 4:
        img = cv2.cvtColor(img, cv2.COLOR_BGRA2RGB)
    elif img.shape[2] == 3:
        img = cv2.cvtColor(img, cv2.COLOR_BGR2RGB)
    else:
        raise DecodeError(path, f"unsupported channel count {img.shape[2]}")
    return np.ascontiguousarray(img)


def save_png(img: np.ndarray, path) -> None:
    """Write an RGB or gray uint8 array as a lossless PNG."""
    path = Path(path)
    img = np.asarray(img)
    if img.ndim == 3:
        img = cv2.cvtColor(img, cv2.COLOR_RGB2BGR)
    try:
        ok, buf = cv2.imencode(".png", img)
        if not ok:
            raise WriteError(path, "PNG encoding failed")
        with open(path, "wb") as fh:
            fh.write(buf.tobytes())
    except OSError as exc:
        raise WriteError(path, exc.strerror or str(exc)) from exc


def to_grayscale(img: np.ndarray) -> np.ndarray:
    """Luma ``0.299 R + 0.587 G + 0.114 B`` rounded half-up.

    Evaluated in exact integer arithmetic (coefficients scaled by 1000) so
    the result does not depend on floating-point rounding.
    """
    img = np.asarray(img)
    if img.ndim != 3 or img.shape[2] != 3 or img.dtype != np.uint8:
        raise TypeError(f"expected (H, W, 3) uint8, got {img.dtype} {img.shape}")
    c = img.astype(np.int32)
    acc = 299 * c[..., 0] + 587 * c[..., 1] + 114 * c[..., 2]
    return ((acc + 500) // 1000).astype(np.uint8)


def estimate_fov_mask(gray: np.ndarray, tol: int = 10) -> np.ndarray:
    """True where the camera's field of view is, i.e. level > ``tol``.

    A radius-5 closing fills dark pinholes near the rim.
    """
    if not 0 <= tol <= 255:
        raise ValueError(f"tol must be in [0, 255], got {tol}")
    raw = np.asarray(gray) > tol
    if not raw.any():
        raise DegenerateMask(f"no pixel above level {tol}")
    closed = closing(raw.astype(np.uint8) * 255, make_disk(FOV_CLOSE_RADIUS))
    return closed > 0


def annotation_stencil(shape, center, radius=ANNOTATION_RADIUS, arm=ANNOTATION_ARM) -> np.ndarray:
    """Pixels painted by :func:`render_annotation`: a 1-px ring and a crosshair."""
    h, w = shape[:2]
    cx, cy = center
    yy, xx = np.mgrid[0:h, 0:w]
    d2 = (xx - cx) ** 2 + (yy - cy) ** 2
    ring = (d2 >= (radius - 0.5) ** 2) & (d2 <= (radius + 0.5) ** 2)
    horiz = (yy == cy) & (np.abs(xx - cx) <= arm)
    vert = (xx == cx) & (np.abs(yy - cy) <= arm)
    return ring | horiz | vert


def render_annotation(img: np.ndarray, result, out) -> None:
    """Write a PNG copy of ``img`` with the detected fovea marked."""
    canvas = np.array(img, dtype=np.uint8, copy=True)
    if result.detected:
        canvas[annotation_stencil(canvas.shape, result.fovea)] = ANNOTATION_COLOR
    out = Path(out)
    if not out.parent.is_dir() or not os.access(out.parent, os.W_OK):
        raise WriteError(out, "directory missing or not writable")
    save_png(canvas, out)
