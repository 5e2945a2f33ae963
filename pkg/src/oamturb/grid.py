"""Sampling grid shared by mode fields and phase screens."""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache

import numpy as np


@dataclass(frozen=True)
class GridSpec:
    """Square sampling grid with a centered circular aperture.

    Pixel centers sit at (i + 0.5) * pixel_size - physical_width / 2, so for the
    (even, power-of-two) resolutions used here the grid center falls between the
    four central pixels and no sample lands on the axis singularity of theta.
    """

    resolution: int
    physical_width: float = 1.0
    aperture_radius: float = 0.5

    def __post_init__(self):
        n = self.resolution
        if n < 64 or (n & (n - 1)) != 0:
            raise ValueError(f"resolution must be a power of two >= 64, got {n}")
        if not (0.0 < 2.0 * self.aperture_radius <= self.physical_width):
            raise ValueError(
                f"aperture (diameter {2 * self.aperture_radius}) must fit inside "
                f"the grid (width {self.physical_width})"
            )

    @property
    def pixel_size(self) -> float:
        return self.physical_width / self.resolution

    @property
    def pixel_area(self) -> float:
        return self.pixel_size ** 2

    @property
    def aperture_diameter(self) -> float:
        return 2.0 * self.aperture_radius

    def axis_coords(self) -> np.ndarray:
        """Pixel-center coordinates along one axis (meters)."""
        h = self.pixel_size
        return (np.arange(self.resolution) + 0.5) * h - self.physical_width / 2.0

    def polar(self) -> tuple[np.ndarray, np.ndarray]:
        """(r, theta) at pixel centers; theta in (-pi, pi]."""
        return _polar_cached(self)

    def aperture_mask(self) -> np.ndarray:
        """Boolean mask of pixels whose centers lie inside the aperture."""
        return _mask_cached(self)


@lru_cache(maxsize=16)
def _polar_cached(spec: GridSpec):
    c = spec.axis_coords()
    x, y = np.meshgrid(c, c)
    r = np.hypot(x, y)
    theta = np.arctan2(y, x)
    r.setflags(write=False)
    theta.setflags(write=False)
    return r, theta


@lru_cache(maxsize=16)
def _mask_cached(spec: GridSpec):
    r, _ = spec.polar()
    mask = r <= spec.aperture_radius
    mask.setflags(write=False)
    return mask
