"""Connected components, Feret diameter, circularity and macula selection."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import cached_property

import numpy as np
from scipy import ndimage

_STRUCTURES = {
    4: ndimage.generate_binary_structure(2, 1),
    8: ndimage.generate_binary_structure(2, 2),
}


@dataclass(eq=False)
class Component:
    label: int
    pixels: np.ndarray = field(repr=False)  # (N, 2) int array of (x, y)

    @property
    def area(self) -> int:
        return len(self.pixels)

    @cached_property
    def centroid(self) -> tuple[float, float]:
        cx, cy = self.pixels.mean(axis=0)
        return float(cx), float(cy)

    @property
    def bbox(self) -> tuple[int, int, int, int]:
        """(x_min, y_min, x_max, y_max), inclusive."""
        lo = self.pixels.min(axis=0)
        hi = self.pixels.max(axis=0)
        return int(lo[0]), int(lo[1]), int(hi[0]), int(hi[1])

    @cached_property
    def feret(self) -> float:
        return feret_diameter(self)

    @property
    def circularity(self) -> float:
        return circularity(self)


@dataclass
class ComponentSet:
    components: list[Component]
    connectivity: int
    labels: np.ndarray = field(repr=False)  # int32 label map, 0 = background

    def __len__(self) -> int:
        return len(self.components)

    def __iter__(self):
        return iter(self.components)


@dataclass(frozen=True)
class MaculaCandidate:
    component: Component
    fovea: tuple[int, int]


def label_components(binary: np.ndarray, connectivity: int = 8) -> ComponentSet:
    """Label foreground pixels; labels follow raster order of each component's first pixel."""
    if connectivity not in _STRUCTURES:
        raise ValueError(f"connectivity must be 4 or 8, got {connectivity}")
    binary = np.asarray(binary, dtype=bool)
    labels, n = ndimage.label(binary, structure=_STRUCTURES[connectivity])
    labels = labels.astype(np.int32, copy=False)
    if n == 0:
        return ComponentSet([], connectivity, labels)
    flat = labels.ravel()
    idx = np.flatnonzero(flat)
    order = np.argsort(flat[idx], kind="stable")
    idx = idx[order]
    width = binary.shape[1]
    coords = np.column_stack((idx % width, idx // width))
    bounds = np.cumsum(np.bincount(flat[idx], minlength=n + 1)[1:])[:-1]
    groups = np.split(coords, bounds)
    return ComponentSet([Component(i + 1, g) for i, g in enumerate(groups)], connectivity, labels)


def _hull_candidates(pixels: np.ndarray) -> np.ndarray:
    """Leftmost and rightmost pixel of every row; their hull is the component's hull."""
    xs, ys = pixels[:, 0], pixels[:, 1]
    rows, inv = np.unique(ys, return_inverse=True)
    left = np.full(len(rows), np.iinfo(np.int64).max)
    right = np.full(len(rows), np.iinfo(np.int64).min)
    np.minimum.at(left, inv, xs)
    np.maximum.at(right, inv, xs)
    return np.unique(np.concatenate([np.column_stack((left, rows)), np.column_stack((right, rows))]), axis=0)


def convex_hull(points: np.ndarray) -> np.ndarray:
    """Andrew's monotone chain; returns hull vertices counter-clockwise."""
    pts = sorted(map(tuple, np.asarray(points).tolist()))
    if len(pts) <= 2:
        return np.array(pts)

    def cross(o, a, b):
        return (a[0] - o[0]) * (b[1] - o[1]) - (a[1] - o[1]) * (b[0] - o[0])

    lower, upper = [], []
    for p in pts:
        while len(lower) >= 2 and cross(lower[-2], lower[-1], p) <= 0:
            lower.pop()
        lower.append(p)
    for p in reversed(pts):
        while len(upper) >= 2 and cross(upper[-2], upper[-1], p) <= 0:
            upper.pop()
        upper.append(p)
    return np.array(lower[:-1] + upper[:-1])


def feret_diameter(c: Component) -> float:
    """Largest distance between two pixel centers of the component."""
    if c.area == 1:
        return 0.0
    hull = convex_hull(_hull_candidates(c.pixels)).astype(np.int64)
    diff = hull[:, None, :] - hull[None, :, :]
    return math.sqrt(int((diff**2).sum(axis=2).max()))


def feret_diameter_brute(pixels: np.ndarray) -> float:
    """All-pairs reference for :func:`feret_diameter`."""
    p = np.asarray(pixels, dtype=np.int64)
    best = 0
    for i in range(len(p)):
        d = ((p[i + 1 :] - p[i]) ** 2).sum(axis=1)
        if d.size:
            best = max(best, int(d.max()))
    return math.sqrt(best)


def circularity(c: Component) -> float:
    """``4 A / (pi P**2)`` with P the Feret diameter; 0 for a single pixel.

    Not clamped: rasterized disks can slightly exceed 1.
    """
    p = c.feret
    if p == 0:
        return 0.0
    return 4.0 * c.area / (math.pi * p * p)


def select_macula(
    components,
    area_min: int = 400,
    area_max: int = 5000,
    circ_min: float = 0.6,
) -> MaculaCandidate | None:
    """Largest component strictly inside the area window that is round enough.

    Ties go to the higher circularity, then the lower label.
    """
    if not area_min < area_max:
        raise ValueError("area_min must be < area_max")
    if not 0.0 <= circ_min <= 1.0:
        raise ValueError("circ_min must be in [0, 1]")
    survivors = [
        c for c in components if area_min < c.area < area_max and c.circularity >= circ_min
    ]
    if not survivors:
        return None
    best = min(survivors, key=lambda c: (-c.area, -c.circularity, c.label))
    cx, cy = best.centroid
    return MaculaCandidate(best, (math.floor(cx + 0.5), math.floor(cy + 0.5)))
