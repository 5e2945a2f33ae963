"""Bundled statistical and numerical self-checks behind `oamturb validate`.

Each check returns a machine-readable record; the command exits nonzero when
any check fails. Thresholds mirror the module invariants; the ensemble sizes
and turbulence strength are configurable so the heavy checks can be scaled.
"""

from __future__ import annotations

from pathlib import Path

import numpy as np

from . import io as oio
from .capacity import blahut_arimoto, capacity_sweep
from .channel import (
    ModeSet,
    SorterModel,
    analytic_crosstalk,
    analytic_matrix,
    montecarlo_matrix,
    normalize,
)
from .grid import GridSpec
from .turbulence import (
    ScreenSynthesisOptions,
    generate_screen,
    structure_function,
    theoretical_structure_function,
)

VALIDATION_DEFAULTS = {
    "screens": 100,
    "d_over_r0": 2.0,
    "resolution": 256,
    "subharmonics": 3,
}


def _check_screen_determinism(grid, strength, opts, seed):
    a = generate_screen(grid, strength, seed, opts, stream_index=3)
    b = generate_screen(grid, strength, seed, opts, stream_index=3)
    other = generate_screen(grid, strength, seed, opts, stream_index=4)
    ok = bool(np.array_equal(a.phase, b.phase)) and not np.array_equal(
        a.phase, other.phase
    )
    return {"pass": ok}


def _ensemble(grid, strength, count, seed, opts):
    return [
        generate_screen(grid, strength, seed, opts, stream_index=k)
        for k in range(count)
    ]


def _check_structure_function(grid, strength, screens, seed, opts):
    seps = np.linspace(0.05, 0.5, 8) * grid.aperture_diameter
    est = np.array([v for _, v in structure_function(screens, seps)])
    theo = theoretical_structure_function(grid, strength, seps)
    rel = np.abs(est / theo - 1.0)
    return {
        "pass": bool(np.all(rel <= 0.10)),
        "max_relative_error": float(rel.max()),
        "tolerance": 0.10,
        "subharmonic_levels": opts.subharmonic_levels,
    }


def _check_scaling_law(grid, count, seed, opts):
    """Paired-seed ensembles at two strengths: the synthesis is linear in
    r0^(-5/6), so with common draws the structure-function ratio isolates the
    5/3 scaling from ensemble noise."""
    s1, s2 = 5.12, 10.25
    seps = np.linspace(0.05, 0.5, 6) * grid.aperture_diameter
    e1 = _ensemble(grid, s1, count, seed, opts)
    e2 = _ensemble(grid, s2, count, seed, opts)
    d1 = np.array([v for _, v in structure_function(e1, seps)])
    d2 = np.array([v for _, v in structure_function(e2, seps)])
    target = (s2 / s1) ** (5.0 / 3.0)
    rel = np.abs(d2 / d1 / target - 1.0)
    return {
        "pass": bool(np.all(rel <= 0.05)),
        "max_relative_error": float(rel.max()),
        "tolerance": 0.05,
    }


def _check_stationarity(screens):
    """Ensemble mean phase should vanish pixelwise; with correlated Gaussian
    screens the 3-sigma bound is checked as a violation rate (<= 1%)."""
    stack = np.stack([s.phase for s in screens])
    m = stack.mean(axis=0)
    sd = stack.std(axis=0, ddof=1)
    bound = 3.0 * sd / np.sqrt(stack.shape[0])
    frac = float(np.mean(np.abs(m) > np.maximum(bound, 1e-30)))
    return {"pass": frac <= 0.01, "violation_fraction": frac, "tolerance": 0.01}


def _check_completeness(strength):
    probs = [analytic_crosstalk(d, strength) for d in range(0, 51)]
    partial = np.cumsum([probs[0]] + [2.0 * p for p in probs[1:]])
    monotone = bool(np.all(np.diff(partial) >= -1e-12))
    total50 = float(partial[-1])
    return {
        "pass": monotone and total50 >= 0.999,
        "monotone": monotone,
        "sum_k50": total50,
        "threshold": 0.999,
        "d_over_r0": strength,
    }


def _check_monotone_spreading():
    grid_s = np.logspace(np.log10(0.2), np.log10(20.0), 10)
    diag = [analytic_crosstalk(0, s) for s in grid_s]
    ok = bool(np.all(np.diff(diag) <= 1e-12))
    return {"pass": ok, "diagonal": [float(v) for v in diag]}


def _check_toeplitz(strength):
    m = analytic_matrix(ModeSet(7), strength)
    e = m.entries
    dev = 0.0
    for i in range(7):
        for j in range(7):
            dev = max(dev, abs(e[i, j] - e[0, abs(i - j)]), abs(e[i, j] - e[j, i]))
    return {"pass": dev <= 1e-9, "max_deviation": float(dev)}


def _check_mc_agreement(grid, strength, screens, seed, opts):
    modes = ModeSet(11)
    mc = montecarlo_matrix(modes, strength, screens, seed, grid, opts)
    ana = analytic_matrix(modes, strength)
    se = np.maximum(mc.standard_errors, 1e-15)
    z = (mc.entries - ana.entries) / se
    return {
        "pass": bool(np.all(np.abs(z) <= 3.0)) and abs(float(z.mean())) <= 1.0,
        "max_abs_z": float(np.abs(z).max()),
        "mean_z": float(z.mean()),
        "num_screens": screens,
    }


def _check_capacity_invariants(seed):
    rng = np.random.default_rng(seed)
    details = {}
    ok = True

    n = 6
    res = blahut_arimoto(np.eye(n))
    details["identity_capacity"] = res.capacity
    ok &= abs(res.capacity - np.log2(n)) <= 1e-9 and res.converged

    worst = 0.0
    for _ in range(20):
        col = rng.dirichlet(np.ones(5))
        w = np.stack([np.roll(col, k) for k in range(5)], axis=1)
        res = blahut_arimoto(w)
        closed = np.log2(5) + float(np.sum(col[col > 0] * np.log2(col[col > 0])))
        worst = max(worst, abs(res.capacity - closed))
        ok &= res.converged
    details["circulant_shortcut_max_error"] = worst
    ok &= worst <= 1e-9

    dpi_ok = True
    for _ in range(20):
        w = rng.dirichlet(np.ones(4), size=4).T
        s = rng.dirichlet(np.ones(4), size=4).T
        c0 = blahut_arimoto(w).capacity
        c1 = blahut_arimoto(s @ w).capacity
        if c1 > c0 + 1e-9:
            dpi_ok = False
        if not (0.0 - 1e-12 <= c1 <= np.log2(4) + 1e-9):
            dpi_ok = False
    details["data_processing"] = dpi_ok
    ok &= dpi_ok
    return {"pass": bool(ok), **details}


def _check_capacity_monotonic():
    strengths = np.logspace(np.log10(0.3), np.log10(12.0), 10)
    curve = capacity_sweep(ModeSet(5), strengths, method="analytic",
                           sorter=SorterModel("ideal"))
    caps = curve.capacities
    ok = bool(np.all(np.diff(caps) <= 1e-9))
    bounded = bool(np.all((caps >= -1e-12) & (caps <= np.log2(5) + 1e-9)))
    return {"pass": ok and bounded, "capacities": [float(c) for c in caps]}


def _check_spacing_ordering():
    strengths = np.logspace(np.log10(0.2), np.log10(10.0), 8)
    caps = {}
    for ms in (1, 2, 4):
        curve = capacity_sweep(ModeSet(3, 0, ms), strengths, method="analytic",
                               sorter=SorterModel("ideal"))
        caps[ms] = curve.capacities
    ok = bool(
        np.all(caps[4] >= caps[2] - 1e-9) and np.all(caps[2] >= caps[1] - 1e-9)
    )
    return {"pass": ok}


def _check_sweep_determinism():
    strengths = [0.5, 1.0, 2.0]
    kw = dict(method="analytic", sorter=SorterModel("sinc_binned"))
    a = capacity_sweep(ModeSet(3), strengths, workers=1, **kw)
    b = capacity_sweep(ModeSet(3), strengths, workers=2, **kw)
    same = all(
        ra.capacity == rb.capacity
        for (_, ra), (_, rb) in zip(a.points, b.points)
    )
    return {"pass": bool(same)}


def run_validation(params: dict, seed: int, output_dir) -> tuple[dict, bool]:
    p = {**VALIDATION_DEFAULTS, **params}
    grid = GridSpec(int(p["resolution"]))
    opts = ScreenSynthesisOptions(int(p["subharmonics"]))
    strength = float(p["d_over_r0"])
    count = int(p["screens"])

    screens = _ensemble(grid, strength, count, seed, opts)
    checks = {
        "screen_determinism": _check_screen_determinism(grid, strength, opts, seed),
        "structure_function_fit": _check_structure_function(
            grid, strength, screens, seed, opts
        ),
        "scaling_law": _check_scaling_law(grid, min(count, 100), seed + 1, opts),
        "stationarity": _check_stationarity(screens),
        "completeness": _check_completeness(strength),
        "monotone_spreading": _check_monotone_spreading(),
        "toeplitz_symmetry": _check_toeplitz(strength),
        "mc_analytic_agreement": _check_mc_agreement(
            grid, strength, count, seed + 2, opts
        ),
        "capacity_invariants": _check_capacity_invariants(seed + 3),
        "capacity_monotonic": _check_capacity_monotonic(),
        "spacing_ordering": _check_spacing_ordering(),
        "sweep_determinism": _check_sweep_determinism(),
    }
    all_pass = all(c["pass"] for c in checks.values())
    report = {
        "all_pass": all_pass,
        "parameters": {**p, "seed": seed},
        "checks": checks,
    }
    out = Path(output_dir)
    out.mkdir(parents=True, exist_ok=True)
    oio.write_json(report, out / "validation.json")
    return report, all_pass
