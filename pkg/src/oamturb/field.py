"""Vortex (OAM) and angular (ANG) mode synthesis, phase application, overlaps.

Modes are hard-edged pure vortices: amplitude A0 inside a circular aperture of
radius R, zero outside, azimuthal phase exp(i l theta). A0 is chosen so every
mode has unit power, which makes |overlap|^2 directly a detection probability.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .grid import GridSpec


@dataclass(frozen=True)
class ComplexField:
    """Sampled complex amplitude on a grid."""

    grid: GridSpec
    samples: np.ndarray

    def __post_init__(self):
        n = self.grid.resolution
        if self.samples.shape != (n, n):
            raise ValueError(f"samples shape {self.samples.shape} != ({n}, {n})")
        self.samples.setflags(write=False)

    def power(self) -> float:
        return float(np.sum(np.abs(self.samples) ** 2) * self.grid.pixel_area)

    def intensity(self) -> np.ndarray:
        return np.abs(self.samples) ** 2

    def phase(self) -> np.ndarray:
        return np.angle(self.samples)


def make_oam_mode(grid: GridSpec, l: int) -> ComplexField:
    """Unit-power vortex mode of integer charge l on the grid's aperture."""
    if l != int(l):
        raise ValueError(f"OAM index must be an integer, got {l!r}")
    _, theta = grid.polar()
    mask = grid.aperture_mask()
    samples = np.where(mask, np.exp(1j * int(l) * theta), 0.0 + 0.0j)
    return _normalized(grid, samples)


def make_ang_mode(grid: GridSpec, n: int, dimension: int) -> ComplexField:
    """Angular mode n: DFT superposition of the symmetric set of `dimension` vortices.

    Components run over l in [-(dimension-1)/2, (dimension-1)/2], so `dimension`
    must be odd. The intensity is a lobe at angle -2*pi*n/dimension relative to
    mode 0.
    """
    if dimension < 1 or dimension % 2 == 0:
        raise ValueError(f"ANG basis requires odd dimension, got {dimension}")
    if not (0 <= n < dimension):
        raise ValueError(f"ANG index must lie in [0, {dimension - 1}], got {n}")
    half = (dimension - 1) // 2
    _, theta = grid.polar()
    mask = grid.aperture_mask()
    acc = np.zeros(theta.shape, dtype=complex)
    for l in range(-half, half + 1):
        acc += np.exp(1j * (l * theta + 2.0 * np.pi * n * l / dimension))
    samples = np.where(mask, acc, 0.0 + 0.0j)
    return _normalized(grid, samples)


def apply_phase(field: ComplexField, screen) -> ComplexField:
    """Multiply a field by exp(i * phase). Accepts a PhaseScreen or a bare array."""
    phase = getattr(screen, "phase", screen)
    phase = np.asarray(phase, dtype=float)
    if phase.shape != field.samples.shape:
        raise ValueError(
            f"screen shape {phase.shape} != field shape {field.samples.shape}"
        )
    return ComplexField(field.grid, field.samples * np.exp(1j * phase))


def overlap(a: ComplexField, b: ComplexField) -> complex:
    """Projection integral sum(conj(a) * b) * pixel_area.

    For unit-power fields |overlap(a, b)|^2 is the probability of detecting
    mode a given field b.
    """
    if a.grid != b.grid:
        raise ValueError("overlap requires fields on the same grid")
    return complex(np.vdot(a.samples, b.samples) * a.grid.pixel_area)


def _normalized(grid: GridSpec, samples: np.ndarray) -> ComplexField:
    p = np.sum(np.abs(samples) ** 2) * grid.pixel_area
    if p <= 0.0:
        raise ValueError("cannot normalize a zero field")
    return ComplexField(grid, samples / np.sqrt(p))
