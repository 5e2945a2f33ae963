"""File exports and imports: CSV (canonical), PNG renderings, JSON sidecars.

All CSVs are UTF-8, comma-separated, carry a header row and format floats with
12 significant digits, so identical inputs reproduce byte-identical files.
"""

from __future__ import annotations

import csv
import json
from pathlib import Path

import numpy as np
from PIL import Image

from .capacity import CapacityCurve
from .channel import ERASURE, CrosstalkMatrix, ModeSet, Provenance
from .field import ComplexField
from .turbulence import PhaseScreen


def fmt(x: float) -> str:
    return format(float(x), ".12g")


def write_json(payload: dict, path) -> None:
    Path(path).write_text(
        json.dumps(payload, indent=2, sort_keys=True) + "\n", encoding="utf-8"
    )


def _to_gray_png(values: np.ndarray, path) -> None:
    """8-bit grayscale, row-major with the top row at +y."""
    img = np.flipud(values)
    img = np.clip(np.rint(img * 255.0), 0, 255).astype(np.uint8)
    Image.fromarray(img, mode="L").save(str(path))


def write_field_png(field: ComplexField, path, kind: str = "intensity") -> None:
    if kind == "intensity":
        data = field.intensity()
        peak = data.max()
        _to_gray_png(data / peak if peak > 0 else data, path)
    elif kind == "phase":
        _to_gray_png((field.phase() + np.pi) / (2.0 * np.pi), path)
    else:
        raise ValueError(f"kind must be 'intensity' or 'phase', got {kind!r}")


def write_field_csv(field: ComplexField, path) -> None:
    """One row per sample: x_index, y_index, real, imag (y_index is the array row)."""
    n = field.grid.resolution
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh)
        w.writerow(["x_index", "y_index", "real", "imag"])
        s = field.samples
        for y in range(n):
            row = s[y]
            for x in range(n):
                w.writerow([x, y, fmt(row[x].real), fmt(row[x].imag)])


def write_screen_png(screen: PhaseScreen, path) -> None:
    """Phase wrapped to [0, 2*pi) rendered over the full gray range."""
    wrapped = np.mod(screen.phase, 2.0 * np.pi)
    _to_gray_png(wrapped / (2.0 * np.pi), path)


def write_screen_csv(screen: PhaseScreen, path) -> None:
    """Unwrapped phase, one row per sample: x_index, y_index, phase_rad."""
    n = screen.grid.resolution
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh)
        w.writerow(["x_index", "y_index", "phase_rad"])
        for y in range(n):
            row = screen.phase[y]
            for x in range(n):
                w.writerow([x, y, fmt(row[x])])


def write_matrix_csv(matrix: CrosstalkMatrix, path) -> None:
    """Entries with a header naming sent indices and labeled detected rows."""
    idx = matrix.mode_set.indices
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh)
        w.writerow([r"detected\sent"] + [f"s={j}" for j in idx])
        for i, label in enumerate(idx):
            w.writerow([f"d={label}"] + [fmt(v) for v in matrix.entries[i]])
        if matrix.normalization == ERASURE:
            w.writerow(["loss"] + [fmt(v) for v in matrix.entries[-1]])


def matrix_sidecar(matrix: CrosstalkMatrix) -> dict:
    return {
        "mode_set": {
            "dimension": matrix.mode_set.dimension,
            "center": matrix.mode_set.center,
            "spacing": matrix.mode_set.spacing,
        },
        "strength": matrix.strength,
        "normalization": matrix.normalization,
        "provenance": matrix.provenance.to_dict(),
        "standard_errors": None
        if matrix.standard_errors is None
        else [[float(fmt(v)) for v in row] for row in matrix.standard_errors],
    }


def write_matrix(matrix: CrosstalkMatrix, csv_path) -> None:
    csv_path = Path(csv_path)
    write_matrix_csv(matrix, csv_path)
    write_json(matrix_sidecar(matrix), csv_path.with_suffix(".json"))


def load_matrix_csv(path):
    """Read a matrix CSV; returns (entries, sent_indices, has_loss_row)."""
    with open(path, newline="", encoding="utf-8") as fh:
        rows = list(csv.reader(fh))
    if not rows or not rows[0] or rows[0][0] != r"detected\sent":
        raise ValueError(f"{path}: not a crosstalk matrix CSV")
    sent = [int(h.split("=", 1)[1]) for h in rows[0][1:]]
    body = rows[1:]
    has_loss = bool(body) and body[-1][0] == "loss"
    entries = np.array([[float(v) for v in row[1:]] for row in body])
    return entries, sent, has_loss


def write_curve_csv(curve: CapacityCurve, path) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh)
        w.writerow(["d_over_r0", "capacity_bits", "err_lo", "err_hi", "converged"])
        for s, res in curve.points:
            w.writerow(
                [fmt(s), fmt(res.capacity), fmt(res.err_lo), fmt(res.err_hi),
                 "true" if res.converged else "false"]
            )


def write_curve(curve: CapacityCurve, csv_path) -> None:
    csv_path = Path(csv_path)
    write_curve_csv(curve, csv_path)
    write_json({"config": curve.config}, csv_path.with_suffix(".json"))


def load_curve_csv(path):
    """Read a capacity curve CSV; returns (strengths, capacities, err_lo, err_hi)."""
    with open(path, newline="", encoding="utf-8") as fh:
        rows = list(csv.reader(fh))
    if not rows or rows[0][:2] != ["d_over_r0", "capacity_bits"]:
        raise ValueError(f"{path}: not a capacity curve CSV")
    data = np.array([[float(v) for v in row[:4]] for row in rows[1:]])
    return data[:, 0], data[:, 1], data[:, 2], data[:, 3]
