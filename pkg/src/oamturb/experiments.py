"""Experiment orchestration: resolved configs, output layout, figure emission.

Every runner writes a resolved-config snapshot (config.json) next to its
outputs; CSVs are canonical and SVG plots are re-rendered purely from them.
"""

from __future__ import annotations

import copy
import json
from pathlib import Path

import numpy as np
from jsonschema import Draft202012Validator

from . import io as oio
from .capacity import (
    CapacityCurve,
    capacity_sweep,
    find_crossing,
    polarization_baseline,
)
from .channel import (
    ModeSet,
    QuadratureOptions,
    SorterModel,
    analytic_matrix,
    apply_sorter,
    montecarlo_matrix,
    normalize,
)
from .field import make_ang_mode, make_oam_mode
from .grid import GridSpec
from .svgplot import plot_curve_csvs
from .turbulence import ScreenSynthesisOptions, generate_screen


class ConfigError(ValueError):
    """Invalid experiment configuration."""


EXPERIMENTS = (
    "fig4_sweep",
    "fig5_spacing",
    "screen_gallery",
    "mode_gallery",
    "crosstalk_table",
)

_GRID_SCHEMA = {
    "type": "object",
    "additionalProperties": False,
    "properties": {
        "resolution": {"type": "integer", "minimum": 64},
        "physical_width": {"type": "number", "exclusiveMinimum": 0},
        "aperture_radius": {"type": "number", "exclusiveMinimum": 0},
    },
}

_STRENGTHS_SCHEMA = {
    "type": "object",
    "additionalProperties": False,
    "properties": {
        "lo": {"type": "number", "exclusiveMinimum": 0},
        "hi": {"type": "number", "exclusiveMinimum": 0},
        "count": {"type": "integer", "minimum": 2},
        "log": {"type": "boolean"},
    },
}

_SWEEP_COMMON = {
    "method": {"enum": ["analytic", "mc"]},
    "sorter": {"type": "string"},
    "normalization": {"enum": ["postselect", "erasure"]},
    "strengths": _STRENGTHS_SCHEMA,
    "screens": {"type": "integer", "minimum": 1},
    "subharmonics": {"type": "integer", "minimum": 0, "maximum": 8},
    "grid": _GRID_SCHEMA,
    "quad_tol": {"type": "number", "exclusiveMinimum": 0},
    "ba_tol": {"type": "number", "exclusiveMinimum": 0},
    "workers": {"type": "integer", "minimum": 1},
}

_PARAM_SCHEMAS = {
    "fig4_sweep": {
        "type": "object",
        "additionalProperties": False,
        "properties": {
            "dimensions": {
                "type": "array",
                "items": {"type": "integer", "minimum": 2},
                "minItems": 1,
            },
            "spacing": {"type": "integer", "minimum": 1},
            **_SWEEP_COMMON,
        },
    },
    "fig5_spacing": {
        "type": "object",
        "additionalProperties": False,
        "properties": {
            "dimension": {"type": "integer", "minimum": 2},
            "spacings": {
                "type": "array",
                "items": {"type": "integer", "minimum": 1},
                "minItems": 1,
            },
            **_SWEEP_COMMON,
        },
    },
    "screen_gallery": {
        "type": "object",
        "additionalProperties": False,
        "properties": {
            "strengths": {
                "type": "array",
                "items": {"type": "number", "exclusiveMinimum": 0},
                "minItems": 1,
            },
            "subharmonics": {"type": "integer", "minimum": 0, "maximum": 8},
            "grid": _GRID_SCHEMA,
        },
    },
    "mode_gallery": {
        "type": "object",
        "additionalProperties": False,
        "properties": {
            "oam": {"type": "array", "items": {"type": "integer"}},
            "ang": {"type": "array", "items": {"type": "integer", "minimum": 0}},
            "ang_dimension": {"type": "integer", "minimum": 1},
            "write_csv": {"type": "boolean"},
            "grid": _GRID_SCHEMA,
        },
    },
    "crosstalk_table": {
        "type": "object",
        "additionalProperties": False,
        "properties": {
            "dimension": {"type": "integer", "minimum": 2},
            "spacing": {"type": "integer", "minimum": 1},
            "center": {"type": "integer"},
            "strength": {"type": "number", "minimum": 0},
            **_SWEEP_COMMON,
        },
    },
}

_CONFIG_SCHEMA = {
    "type": "object",
    "additionalProperties": False,
    "required": ["experiment"],
    "properties": {
        "experiment": {"enum": list(EXPERIMENTS)},
        "seed": {"type": "integer", "minimum": 0},
        "output_dir": {"type": "string"},
        "parameters": {"type": "object"},
    },
}

_DEFAULT_GRID = {"resolution": 512, "physical_width": 1.0, "aperture_radius": 0.5}

_SWEEP_DEFAULTS = {
    "method": "analytic",
    "sorter": "sinc",
    "normalization": "postselect",
    "strengths": {"lo": 0.1, "hi": 30.0, "count": 30, "log": True},
    "screens": 20,
    "subharmonics": 3,
    "grid": dict(_DEFAULT_GRID),
    "quad_tol": 1e-8,
    "ba_tol": 1e-9,
    "workers": 1,
}

PARAM_DEFAULTS = {
    "fig4_sweep": {"dimensions": [3, 5, 7, 9, 11], "spacing": 1, **_SWEEP_DEFAULTS},
    # ideal sorter by default: the spacing study quantifies turbulence-driven
    # decay onsets, which the sinc sorter's fixed crosstalk floor distorts at
    # MS=1 (pass --sorter sinc to include it)
    "fig5_spacing": {"dimension": 3, "spacings": [1, 2, 4], **_SWEEP_DEFAULTS,
                     "sorter": "ideal"},
    "screen_gallery": {
        "strengths": [5.12, 10.25, 102.5],
        "subharmonics": 3,
        "grid": dict(_DEFAULT_GRID),
    },
    "mode_gallery": {
        "oam": [-1, 3, 5],
        "ang": [1, 5, 9],
        "ang_dimension": 11,
        "write_csv": False,
        "grid": dict(_DEFAULT_GRID),
    },
    "crosstalk_table": {
        "dimension": 11,
        "spacing": 1,
        "center": 0,
        "strength": 5.12,
        **_SWEEP_DEFAULTS,
        "sorter": "ideal",
        "screens": 200,
    },
}


def _deep_merge(base: dict, override: dict) -> dict:
    out = copy.deepcopy(base)
    for k, v in override.items():
        if isinstance(v, dict) and isinstance(out.get(k), dict):
            out[k] = _deep_merge(out[k], v)
        else:
            out[k] = copy.deepcopy(v)
    return out


def resolve_config(raw: dict) -> dict:
    """Validate a raw config document and fill in all defaults."""
    errors = sorted(
        Draft202012Validator(_CONFIG_SCHEMA).iter_errors(raw), key=str
    )
    if errors:
        raise ConfigError("; ".join(e.message for e in errors))
    experiment = raw["experiment"]
    params = _deep_merge(PARAM_DEFAULTS[experiment], raw.get("parameters", {}))
    errors = sorted(
        Draft202012Validator(_PARAM_SCHEMAS[experiment]).iter_errors(params), key=str
    )
    if errors:
        raise ConfigError("; ".join(e.message for e in errors))
    return {
        "experiment": experiment,
        "seed": int(raw.get("seed", 12345)),
        "output_dir": raw.get("output_dir", "out"),
        "parameters": params,
    }


def load_config(path) -> dict:
    try:
        raw = json.loads(Path(path).read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{path}: {exc}") from exc
    return resolve_config(raw)


def parse_sorter(spec: str) -> SorterModel:
    if spec == "ideal":
        return SorterModel("ideal")
    if spec in ("sinc", "sinc_binned"):
        return SorterModel("sinc_binned")
    if spec.startswith("file:"):
        entries, _, has_loss = oio.load_matrix_csv(spec[5:])
        if has_loss:
            entries = entries[:-1]
        return SorterModel("measured", entries)
    raise ConfigError(f"sorter must be ideal, sinc or file:<path>, got {spec!r}")


def strengths_from_spec(spec: dict) -> np.ndarray:
    lo, hi, count = spec["lo"], spec["hi"], spec["count"]
    if hi <= lo:
        raise ConfigError(f"strengths hi must exceed lo, got [{lo}, {hi}]")
    if spec.get("log", True):
        return np.logspace(np.log10(lo), np.log10(hi), count)
    return np.linspace(lo, hi, count)


def _grid_from(params: dict) -> GridSpec:
    g = params["grid"]
    return GridSpec(g["resolution"], g["physical_width"], g["aperture_radius"])


def _normalization_from(params: dict) -> str:
    return "postselected" if params["normalization"] == "postselect" else "erasure"


def _write_snapshot(config: dict, out: Path) -> None:
    oio.write_json(config, out / "config.json")


def _run_one_sweep(modes: ModeSet, strengths, params: dict, seed: int) -> CapacityCurve:
    method = params["method"]
    return capacity_sweep(
        modes,
        strengths,
        method=method,
        sorter=parse_sorter(params["sorter"]),
        normalization=_normalization_from(params),
        grid=_grid_from(params) if method == "mc" else None,
        num_screens=params["screens"],
        seed=seed,
        synthesis=ScreenSynthesisOptions(params["subharmonics"]),
        quad=QuadratureOptions(tol=params["quad_tol"]),
        ba_tol=params["ba_tol"],
        workers=params["workers"],
    )


def run_fig4(config: dict) -> list[Path]:
    """Capacity versus turbulence strength for a family of dimensions.

    Emits one curve CSV per dimension, the polarization baseline, the 1-bit
    crossing strengths and a combined log-x SVG plot.
    """
    params = config["parameters"]
    out = Path(config["output_dir"])
    out.mkdir(parents=True, exist_ok=True)
    strengths = strengths_from_spec(params["strengths"])
    csv_paths, labels = [], []
    crossings = []
    for n in params["dimensions"]:
        modes = ModeSet(n, 0, params["spacing"])
        curve = _run_one_sweep(modes, strengths, params, config["seed"])
        path = out / f"capacity_N{n}.csv"
        oio.write_curve(curve, path)
        csv_paths.append(path)
        labels.append(f"N={n}")
        crossings.append((n, find_crossing(curve, 1.0)))
    baseline = polarization_baseline(strengths)
    base_path = out / "baseline.csv"
    oio.write_curve(baseline, base_path)
    with open(out / "crossings.csv", "w", newline="", encoding="utf-8") as fh:
        fh.write("dimension,crossing_d_over_r0\n")
        for n, x in crossings:
            fh.write(f"{n},{oio.fmt(x) if x is not None else ''}\n")
    plot_curve_csvs(
        csv_paths + [base_path],
        labels + ["polarization"],
        out / "capacity_vs_turbulence.svg",
        title="Channel capacity vs turbulence strength",
        dashed_labels=("polarization",),
    )
    _write_snapshot(config, out)
    return [*csv_paths, base_path, out / "crossings.csv",
            out / "capacity_vs_turbulence.svg", out / "config.json"]


def run_fig5(config: dict) -> list[Path]:
    """Mode-spacing study at fixed dimension, plus a pointwise ordering report."""
    params = config["parameters"]
    out = Path(config["output_dir"])
    out.mkdir(parents=True, exist_ok=True)
    strengths = strengths_from_spec(params["strengths"])
    n = params["dimension"]
    curves = {}
    csv_paths, labels = [], []
    for ms in params["spacings"]:
        curve = _run_one_sweep(ModeSet(n, 0, ms), strengths, params, config["seed"])
        curves[ms] = curve
        path = out / f"capacity_MS{ms}.csv"
        oio.write_curve(curve, path)
        csv_paths.append(path)
        labels.append(f"MS={ms}")
    baseline = polarization_baseline(strengths)
    base_path = out / "baseline.csv"
    oio.write_curve(baseline, base_path)

    spacings = sorted(curves)
    ordered = all(
        bool(np.all(curves[b].capacities >= curves[a].capacities - 1e-9))
        for a, b in zip(spacings, spacings[1:])
    )
    onsets = {ms: _decay_onset(curves[ms]) for ms in spacings}
    report = {
        "dimension": n,
        "pointwise_ordering_by_spacing": ordered,
        "decay_onset_d_over_r0": {str(ms): onsets[ms] for ms in spacings},
        "onset_ratio_widest_to_narrowest": (
            None
            if onsets[spacings[0]] is None or onsets[spacings[-1]] is None
            else onsets[spacings[-1]] / onsets[spacings[0]]
        ),
        "max_capacity": {
            str(ms): float(curves[ms].capacities.max()) for ms in spacings
        },
    }
    oio.write_json(report, out / "ordering_report.json")
    plot_curve_csvs(
        csv_paths + [base_path],
        labels + ["polarization"],
        out / "capacity_vs_spacing.svg",
        title=f"Mode-spacing study, N={n}",
        dashed_labels=("polarization",),
    )
    _write_snapshot(config, out)
    return [*csv_paths, base_path, out / "ordering_report.json",
            out / "capacity_vs_spacing.svg", out / "config.json"]


def _decay_onset(curve: CapacityCurve, drop: float = 0.05):
    """First strength where capacity falls `drop` below its low-turbulence plateau."""
    plateau = curve.capacities[0]
    level = (1.0 - drop) * plateau
    for s, c in zip(curve.strengths, curve.capacities):
        if c < level:
            return float(s)
    return None


def run_screen_gallery(config: dict) -> list[Path]:
    params = config["parameters"]
    out = Path(config["output_dir"])
    out.mkdir(parents=True, exist_ok=True)
    grid = _grid_from(params)
    opts = ScreenSynthesisOptions(params["subharmonics"])
    files = []
    for k, s in enumerate(params["strengths"]):
        screen = generate_screen(grid, s, config["seed"], opts, stream_index=k)
        png = out / f"screen_d_over_r0_{s:g}.png"
        csvf = out / f"screen_d_over_r0_{s:g}.csv"
        oio.write_screen_png(screen, png)
        oio.write_screen_csv(screen, csvf)
        files += [png, csvf]
    _write_snapshot(config, out)
    return files + [out / "config.json"]


def run_mode_gallery(config: dict) -> list[Path]:
    params = config["parameters"]
    out = Path(config["output_dir"])
    out.mkdir(parents=True, exist_ok=True)
    grid = _grid_from(params)
    files = []

    def emit(field, stem):
        png_i = out / f"{stem}_intensity.png"
        png_p = out / f"{stem}_phase.png"
        oio.write_field_png(field, png_i, "intensity")
        oio.write_field_png(field, png_p, "phase")
        files.extend([png_i, png_p])
        if params["write_csv"]:
            csvf = out / f"{stem}.csv"
            oio.write_field_csv(field, csvf)
            files.append(csvf)

    for l in params["oam"]:
        emit(make_oam_mode(grid, l), f"oam_l{l}")
    for n in params["ang"]:
        emit(make_ang_mode(grid, n, params["ang_dimension"]), f"ang_n{n}")
    _write_snapshot(config, out)
    return files + [out / "config.json"]


def run_crosstalk_table(config: dict) -> list[Path]:
    params = config["parameters"]
    out = Path(config["output_dir"])
    out.mkdir(parents=True, exist_ok=True)
    modes = ModeSet(params["dimension"], params["center"], params["spacing"])
    strength = params["strength"]
    if params["method"] == "analytic":
        raw = analytic_matrix(modes, strength, QuadratureOptions(tol=params["quad_tol"]))
    else:
        raw = montecarlo_matrix(
            modes,
            strength,
            params["screens"],
            config["seed"],
            _grid_from(params),
            ScreenSynthesisOptions(params["subharmonics"]),
        )
    composed = apply_sorter(raw, parse_sorter(params["sorter"]))
    ready = normalize(composed, _normalization_from(params))
    path = out / "crosstalk.csv"
    oio.write_matrix(ready, path)
    _write_snapshot(config, out)
    return [path, path.with_suffix(".json"), out / "config.json"]


RUNNERS = {
    "fig4_sweep": run_fig4,
    "fig5_spacing": run_fig5,
    "screen_gallery": run_screen_gallery,
    "mode_gallery": run_mode_gallery,
    "crosstalk_table": run_crosstalk_table,
}


def run_experiment(config: dict) -> list[Path]:
    return RUNNERS[config["experiment"]](config)
