"""Histogram equalization (global and contrast-limited tiled) and denoising."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from fovea.errors import EmptyRegion, TileTooSmall
from fovea.morphology import closing, make_disk, opening

LEVELS = 256


@dataclass(frozen=True)
class Histogram:
    counts: np.ndarray  # int64, length 256
    total: int

    def __post_init__(self):
        if self.counts.shape != (LEVELS,):
            raise ValueError("histogram must have 256 bins")
        if int(self.counts.sum()) != self.total:
            raise ValueError("histogram total does not match its counts")


def build_histogram(f: np.ndarray, mask: np.ndarray | None = None) -> Histogram:
    f = np.asarray(f)
    if mask is not None:
        mask = np.asarray(mask, dtype=bool)
        if mask.shape != f.shape:
            raise ValueError(f"mask shape {mask.shape} != image shape {f.shape}")
        values = f[mask]
    else:
        values = f.ravel()
    if values.size == 0:
        raise EmptyRegion("histogram region has no pixels")
    counts = np.bincount(values, minlength=LEVELS).astype(np.int64)
    return Histogram(counts, int(values.size))


def equalization_lut(counts) -> np.ndarray:
    """Map each level through the CDF, sending the darkest occupied level to 0.

    ``m(v) = round(255 * (cdf(v) - cdf_min) / (total - cdf_min))`` with
    half-up rounding. Integer counts are evaluated exactly; float counts
    (clipped histograms) in double precision. A region holding a single
    level maps to itself.
    """
    counts = np.asarray(counts)
    cdf = np.cumsum(counts)
    occupied = np.flatnonzero(counts > 0)
    if occupied.size == 0:
        raise EmptyRegion("histogram region has no pixels")
    cdf_min = cdf[occupied[0]]
    total = cdf[-1]
    if occupied.size == 1 or total == cdf_min:
        return np.arange(LEVELS, dtype=np.uint8)
    if np.issubdtype(counts.dtype, np.integer):
        num = 255 * (cdf.astype(np.int64) - int(cdf_min))
        den = int(total - cdf_min)
        lut = (2 * num + den) // (2 * den)
    else:
        lut = np.floor(255.0 * (cdf - cdf_min) / (total - cdf_min) + 0.5)
    return np.clip(lut, 0, 255).astype(np.uint8)


def equalize_global(f: np.ndarray, mask: np.ndarray | None = None) -> np.ndarray:
    """Equalize with a mapping learned inside ``mask`` and applied everywhere."""
    hist = build_histogram(f, mask)
    return equalization_lut(hist.counts)[np.asarray(f)]


def _tile_edges(n: int, tiles: int) -> np.ndarray:
    return np.array([(i * n) // tiles for i in range(tiles + 1)])


def _clip_histogram(counts: np.ndarray, limit: float) -> np.ndarray:
    clipped = np.minimum(counts.astype(np.float64), limit)
    excess = counts.sum() - clipped.sum()
    return clipped + excess / LEVELS


def _axis_weights(n: int, edges: np.ndarray):
    """Lower/upper tile index and upper weight for each coordinate along an axis."""
    centers = (edges[:-1] + edges[1:] - 1) / 2.0
    pos = np.arange(n, dtype=np.float64)
    upper = np.searchsorted(centers, pos, side="right")
    lo = np.clip(upper - 1, 0, len(centers) - 1)
    hi = np.clip(upper, 0, len(centers) - 1)
    span = centers[hi] - centers[lo]
    wt = np.where(span > 0, (pos - centers[lo]) / np.where(span > 0, span, 1.0), 0.0)
    return lo, hi, wt


def equalize_adaptive(
    f: np.ndarray,
    tiles: int = 8,
    clip: float = 2.0,
    mask: np.ndarray | None = None,
) -> np.ndarray:
    """Contrast-limited tiled equalization with bilinear blending.

    The image is cut into ``tiles x tiles`` cells. Each cell histogram is
    clipped at ``clip * cell_pixels / 256`` with the excess spread evenly over
    all bins, turned into a mapping by :func:`equalization_lut`, and the
    per-pixel output blends the mappings of the four nearest cell centers.
    ``tiles=1, clip=inf`` is exactly :func:`equalize_global`.

    When ``mask`` is given, only masked-in pixels feed the cell histograms;
    cells with no masked-in pixel keep the identity mapping.
    """
    f = np.asarray(f)
    if tiles < 1:
        raise ValueError(f"tiles must be >= 1, got {tiles}")
    if not clip >= 1.0:
        raise ValueError(f"clip must be >= 1.0, got {clip}")
    h, w = f.shape
    ey, ex = _tile_edges(h, tiles), _tile_edges(w, tiles)
    if np.diff(ey).min() * np.diff(ex).min() < 2:
        raise TileTooSmall(f"{tiles}x{tiles} tiles on a {w}x{h} image leave a tile under 2 pixels")
    if mask is not None:
        mask = np.asarray(mask, dtype=bool)
        if mask.shape != f.shape:
            raise ValueError(f"mask shape {mask.shape} != image shape {f.shape}")

    luts = np.empty((tiles, tiles, LEVELS), dtype=np.uint8)
    for i in range(tiles):
        for j in range(tiles):
            cell = f[ey[i] : ey[i + 1], ex[j] : ex[j + 1]]
            if mask is not None:
                cell = cell[mask[ey[i] : ey[i + 1], ex[j] : ex[j + 1]]]
            counts = np.bincount(cell.ravel(), minlength=LEVELS).astype(np.int64)
            occupied = np.count_nonzero(counts)
            if occupied <= 1:
                luts[i, j] = np.arange(LEVELS, dtype=np.uint8)
                continue
            if np.isfinite(clip):
                limit = clip * cell.size / LEVELS
                if counts.max() > limit:
                    luts[i, j] = equalization_lut(_clip_histogram(counts, limit))
                    continue
            luts[i, j] = equalization_lut(counts)

    if tiles == 1:
        return luts[0, 0][f]

    ylo, yhi, wy = _axis_weights(h, ey)
    xlo, xhi, wx = _axis_weights(w, ex)
    wy = wy[:, None]
    wx = wx[None, :]
    a = luts[ylo[:, None], xlo[None, :], f].astype(np.float64)
    b = luts[ylo[:, None], xhi[None, :], f].astype(np.float64)
    c = luts[yhi[:, None], xlo[None, :], f].astype(np.float64)
    d = luts[yhi[:, None], xhi[None, :], f].astype(np.float64)
    top = a + wx * (b - a)
    bot = c + wx * (d - c)
    out = np.floor(top + wy * (bot - top) + 0.5)
    return np.clip(out, 0, 255).astype(np.uint8)


def denoise(f: np.ndarray, radius: int = 5) -> np.ndarray:
    """Closing then opening with a disk: fill dark pinholes, then drop bright specks.

    Closing first keeps the noise floor high, so residual speckle does not
    pull the background toward the dark end of the histogram.
    """
    se = make_disk(radius)
    return opening(closing(f, se), se)
