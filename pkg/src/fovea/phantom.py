"""Synthetic fundus phantoms with a known fovea position."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

# Per-channel gain; luminance of the tint is ~0.99 so gray levels track the
# nominal intensities below.
TINT = (1.15, 0.95, 0.75)


@dataclass(frozen=True)
class Phantom:
    image: np.ndarray  # (H, W, 3) uint8
    fovea: tuple[float, float]  # (x, y) ground truth
    optic_disc: tuple[float, float]


def make_phantom(
    rng: np.random.Generator | int | None = None,
    width: int = 1050,
    height: int = 700,
    background: float = 140.0,
    macula_sigma: float = 18.0,
    macula_depth: float = 60.0,
    od_radius: float = 35.0,
    od_boost: float = 60.0,
    vessels: int = 3,
    vessel_width: int = 3,
    vessel_depth: float = 35.0,
    noise: float = 0.0,
) -> Phantom:
    """Render a uniform field of view with a dark Gaussian macula, a bright
    optic disc about 2.5 disc diameters away, and dark straight vessels
    radiating from the disc.
    """
    rng = np.random.default_rng(rng)
    h, w = height, width
    cx0, cy0 = w / 2.0, h / 2.0
    fov_r = 0.46 * min(w, h)

    # Macula near the center, disc to the left or right of it.
    mx = cx0 + rng.uniform(-0.15, 0.15) * fov_r
    my = cy0 + rng.uniform(-0.15, 0.15) * fov_r
    side = 1.0 if rng.random() < 0.5 else -1.0
    dist = 5.0 * od_radius * rng.uniform(0.9, 1.1)
    tilt = rng.uniform(-0.25, 0.25)
    ox = mx + side * dist * math.cos(tilt)
    oy = my + dist * math.sin(tilt)

    yy, xx = np.mgrid[0:h, 0:w].astype(np.float64)
    level = np.full((h, w), background)
    level -= macula_depth * np.exp(-((xx - mx) ** 2 + (yy - my) ** 2) / (2 * macula_sigma**2))

    for _ in range(vessels):
        theta = rng.uniform(0, math.pi)
        # distance from the line through the disc center at angle theta
        d = np.abs(-(xx - ox) * math.sin(theta) + (yy - oy) * math.cos(theta))
        level[d <= vessel_width / 2.0] -= vessel_depth

    level[(xx - ox) ** 2 + (yy - oy) ** 2 <= od_radius**2] += od_boost
    if noise > 0:
        level += rng.normal(0.0, noise, size=level.shape)

    fov = (xx - cx0) ** 2 + (yy - cy0) ** 2 <= fov_r**2
    rgb = np.stack([level * g for g in TINT], axis=-1)
    rgb[~fov] = 0.0
    img = np.clip(np.rint(rgb), 0, 255).astype(np.uint8)
    return Phantom(img, (mx, my), (ox, oy))
