"""Flat-disk grayscale morphology on uint8 images.

Dilation and erosion are windowed max/min over a rasterized disk.  Pixels
outside the image are ignored (equivalent to padding with the neutral
element, 0 for max and 255 for min, since the window always contains its
in-bounds center).

The fast path splits the disk into one horizontal run per row offset and
answers every run with a sparse table of power-of-two window extrema, so the
cost per pixel is O(radius) instead of O(radius**2).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np

__all__ = [
    "StructuringElement",
    "make_disk",
    "dilate",
    "erode",
    "opening",
    "closing",
    "top_hat",
    "bottom_hat",
    "enhance_contrast",
]


@dataclass(frozen=True)
class StructuringElement:
    """Rasterized flat disk ``{(dx, dy) : dx**2 + dy**2 <= radius**2}``."""

    radius: int
    offsets: tuple[tuple[int, int], ...] = field(repr=False)

    def __len__(self) -> int:
        return len(self.offsets)

    @property
    def half_widths(self) -> tuple[int, ...]:
        """Horizontal half-width of the run at row offset ``dy = -r .. r``."""
        r = self.radius
        return tuple(math.isqrt(r * r - dy * dy) for dy in range(-r, r + 1))

    def footprint(self) -> np.ndarray:
        """Boolean (2r+1, 2r+1) mask, indexed ``[dy + r, dx + r]``."""
        r = self.radius
        fp = np.zeros((2 * r + 1, 2 * r + 1), dtype=bool)
        for dx, dy in self.offsets:
            fp[dy + r, dx + r] = True
        return fp


@lru_cache(maxsize=64)
def make_disk(radius: int) -> StructuringElement:
    if radius < 0:
        raise ValueError(f"radius must be >= 0, got {radius}")
    r = int(radius)
    offsets = tuple(
        (dx, dy)
        for dy in range(-r, r + 1)
        for dx in range(-r, r + 1)
        if dx * dx + dy * dy <= r * r
    )
    return StructuringElement(r, offsets)


def _check_gray(f) -> np.ndarray:
    f = np.asarray(f)
    if f.ndim != 2 or f.dtype != np.uint8:
        raise TypeError(f"expected a 2-D uint8 image, got {f.dtype} {f.shape}")
    return f


def _windowed(f: np.ndarray, se: StructuringElement, reduce, neutral: int) -> np.ndarray:
    f = _check_gray(f)
    r = se.radius
    if r == 0:
        return f.copy()
    h, w = f.shape
    p = np.pad(f, r, mode="constant", constant_values=neutral)
    halves = se.half_widths

    # table[k][:, x] = reduce(p[:, x : x + 2**k])
    longest = 2 * max(halves) + 1
    table = [p]
    span = 1
    while 2 * span <= longest:
        prev = table[-1]
        table.append(reduce(prev[:, :-span], prev[:, span:]))
        span *= 2

    runs = {}
    for hw in set(halves):
        length = 2 * hw + 1
        k = length.bit_length() - 1
        s = 1 << k
        t = table[k]
        lo = r - hw
        hi = r + hw - s + 1
        runs[hw] = reduce(t[:, lo : lo + w], t[:, hi : hi + w])

    out = None
    for i, hw in enumerate(halves):
        rows = runs[hw][i : i + h]
        if out is None:
            out = rows.copy()
        else:
            reduce(out, rows, out=out)
    return out


def dilate(f, se: StructuringElement) -> np.ndarray:
    """Windowed maximum of ``f`` over the disk."""
    return _windowed(f, se, np.maximum, 0)


def erode(f, se: StructuringElement) -> np.ndarray:
    """Windowed minimum of ``f`` over the disk."""
    return _windowed(f, se, np.minimum, 255)


def opening(f, se: StructuringElement) -> np.ndarray:
    return dilate(erode(f, se), se)


def closing(f, se: StructuringElement) -> np.ndarray:
    return erode(dilate(f, se), se)


def top_hat(f, se: StructuringElement) -> np.ndarray:
    """``f - opening(f)`` as int16 (always >= 0)."""
    f = _check_gray(f)
    return f.astype(np.int16) - opening(f, se).astype(np.int16)


def bottom_hat(f, se: StructuringElement) -> np.ndarray:
    """``closing(f) - f`` as int16 (always >= 0)."""
    f = _check_gray(f)
    return closing(f, se).astype(np.int16) - f.astype(np.int16)


def enhance_contrast(f, se: StructuringElement) -> np.ndarray:
    """Add the top-hat and subtract the bottom-hat, then saturate to 0..255.

    Bright detail smaller than the disk gets brighter and dark detail gets
    darker; structures larger than the disk are left alone.
    """
    f = _check_gray(f)
    out = f.astype(np.int16) + top_hat(f, se) - bottom_hat(f, se)
    return np.clip(out, 0, 255).astype(np.uint8)
