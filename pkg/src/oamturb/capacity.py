"""Channel capacity of crosstalk matrices and turbulence-strength sweeps."""

from __future__ import annotations

import warnings
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .channel import (
    ERASURE,
    POSTSELECTED,
    SUBUNITAL,
    CrosstalkMatrix,
    ModeSet,
    QuadratureOptions,
    SorterModel,
    analytic_matrix,
    apply_sorter,
    montecarlo_matrix,
    normalize,
)
from .grid import GridSpec
from .turbulence import ScreenSynthesisOptions

LN2 = np.log(2.0)

# default turbulence-strength grid: log-spaced, wide enough to cover both the
# capacity decay of dense mode sets and the delayed onset of widely spaced ones
DEFAULT_STRENGTHS = tuple(np.logspace(np.log10(0.1), np.log10(30.0), 30))


def _as_column_stochastic(matrix, *, allow_subunital=False) -> np.ndarray:
    """Accept a CrosstalkMatrix or bare array; return validated entries."""
    if isinstance(matrix, CrosstalkMatrix):
        if matrix.normalization == SUBUNITAL and not allow_subunital:
            raise ValueError(
                "matrix is subunital; apply normalize(..., postselected|erasure) first"
            )
        w = matrix.entries
    else:
        w = np.asarray(matrix, dtype=float)
    if w.ndim != 2:
        raise ValueError("channel matrix must be 2-D")
    if np.any(w < 0.0):
        raise ValueError("channel matrix entries must be non-negative")
    sums = w.sum(axis=0)
    if not allow_subunital and np.any(np.abs(sums - 1.0) > 1e-9):
        raise ValueError(f"columns must sum to 1 within 1e-9, got {sums}")
    return w


def _validated_input(p, n: int) -> np.ndarray:
    p = np.asarray(p, dtype=float)
    if p.shape != (n,):
        raise ValueError(f"input distribution must have shape ({n},)")
    if np.any(p < 0.0) or abs(p.sum() - 1.0) > 1e-12:
        raise ValueError("input distribution must be non-negative and sum to 1")
    return p


def mutual_information(matrix, input_dist) -> float:
    """I(X;Y) in bits for column-stochastic P[d|s] and input distribution P_s."""
    w = _as_column_stochastic(matrix)
    p = _validated_input(input_dist, w.shape[1])
    r = w @ p
    with np.errstate(divide="ignore", invalid="ignore"):
        ratio = np.where(w > 0.0, w / np.where(r > 0.0, r, 1.0)[:, None], 1.0)
        terms = np.where(w > 0.0, w * np.log2(ratio), 0.0)
    return float(p @ terms.sum(axis=0))


def entropy_difference(matrix, input_dist) -> float:
    """Sent entropy minus conditional detection entropy, H(X) - H(Y|X), in bits.

    Equals the mutual information only when H(X) = H(Y), e.g. for circulant
    channels under uniform input; kept as a comparison objective.
    """
    w = _as_column_stochastic(matrix)
    p = _validated_input(input_dist, w.shape[1])
    with np.errstate(divide="ignore", invalid="ignore"):
        hx = float(-np.sum(np.where(p > 0.0, p * np.log2(np.where(p > 0, p, 1.0)), 0.0)))
        wlogw = np.where(w > 0.0, w * np.log2(np.where(w > 0, w, 1.0)), 0.0)
    return hx + float(p @ wlogw.sum(axis=0))


@dataclass
class CapacityResult:
    capacity: float
    optimal_input: np.ndarray
    iterations: int
    converged: bool
    objective: str = "mutual_information"
    err_lo: float = 0.0
    err_hi: float = 0.0


def blahut_arimoto(matrix, tol: float = 1e-9, max_iter: int = 10000) -> CapacityResult:
    """Capacity of a discrete memoryless channel given as column-stochastic P[d|s].

    Alternating updates with the standard bracket stopping rule: the weighted
    Kullback-Leibler radius bounds capacity from below (attained by the current
    input) and its maximum over inputs bounds it from above; iteration stops
    when the gap drops under `tol` bits.
    """
    w = _as_column_stochastic(matrix)
    n = w.shape[1]
    if tol <= 0.0:
        raise ValueError("tol must be positive")
    logw = np.where(w > 0.0, np.log(np.where(w > 0.0, w, 1.0)), 0.0)
    wlogw = (w * logw).sum(axis=0)  # sum_d W log W per column
    p = np.full(n, 1.0 / n)
    lower = 0.0
    iterations = 0
    converged = False
    for iterations in range(1, max_iter + 1):
        r = w @ p
        with np.errstate(divide="ignore"):
            logr = np.where(r > 0.0, np.log(np.where(r > 0.0, r, 1.0)), 0.0)
        d_kl = wlogw - w.T @ logr  # KL(W_s || r) in nats
        lower = float(p @ d_kl)
        upper = float(d_kl.max())
        if (upper - lower) / LN2 <= tol:
            converged = True
            break
        p = p * np.exp(d_kl - upper)
        p /= p.sum()
    return CapacityResult(
        capacity=lower / LN2,
        optimal_input=p,
        iterations=iterations,
        converged=converged,
    )


@dataclass
class CapacityCurve:
    """Capacity versus turbulence strength for one channel configuration."""

    points: list[tuple[float, CapacityResult]]
    config: dict = field(default_factory=dict)

    def __post_init__(self):
        strengths = [s for s, _ in self.points]
        if any(b <= a for a, b in zip(strengths, strengths[1:])):
            raise ValueError("strengths must be strictly increasing")

    @property
    def strengths(self) -> np.ndarray:
        return np.array([s for s, _ in self.points])

    @property
    def capacities(self) -> np.ndarray:
        return np.array([r.capacity for _, r in self.points])


def polarization_baseline(strengths=DEFAULT_STRENGTHS) -> CapacityCurve:
    """Two-dimensional polarization channel: 1 bit/photon at every strength."""
    pts = [
        (float(s), CapacityResult(1.0, np.array([0.5, 0.5]), 0, True))
        for s in strengths
    ]
    return CapacityCurve(pts, {"channel": "polarization", "dimension": 2})


def _normalize_entries(entries: np.ndarray, policy: str) -> np.ndarray:
    sums = entries.sum(axis=0)
    if policy == POSTSELECTED:
        if np.any(sums <= 0.0):
            raise ValueError("cannot postselect a fully lost column")
        return entries / sums
    if policy == ERASURE:
        return np.vstack([entries, np.clip(1.0 - sums, 0.0, 1.0)])
    raise ValueError(f"unknown policy {policy!r}")


def _pipeline_capacity(raw_entries, response, policy, tol, max_iter) -> float:
    w = _normalize_entries(response @ raw_entries, policy)
    return blahut_arimoto(w, tol=tol, max_iter=max_iter).capacity


def _mc_error_bars(matrix, response, policy, base, tol, max_iter):
    """Asymmetric capacity interval from per-entry standard errors.

    Entries sharing one charge offset come from the same per-screen estimate,
    so each unique offset is perturbed coherently by +/- one standard error and
    the capacity shifts are combined in quadrature.
    """
    se = matrix.standard_errors
    idx = matrix.mode_set.indices
    n = matrix.dimension
    offsets = {}
    for i in range(n):
        for j in range(n):
            offsets.setdefault(idx[j] - idx[i], []).append((i, j))
    up_sq = 0.0
    dn_sq = 0.0
    for cells in offsets.values():
        step = se[cells[0][0], cells[0][1]]
        if step == 0.0:
            continue
        shifts = []
        for sign in (1.0, -1.0):
            pert = matrix.entries.copy()
            for i, j in cells:
                pert[i, j] = min(max(pert[i, j] + sign * step, 0.0), 1.0)
            shifts.append(_pipeline_capacity(pert, response, policy, tol, max_iter) - base)
        up = max(*shifts, 0.0)
        dn = min(*shifts, 0.0)
        up_sq += up * up
        dn_sq += dn * dn
    return float(np.sqrt(dn_sq)), float(np.sqrt(up_sq))


def capacity_sweep(
    modes: ModeSet,
    strengths=DEFAULT_STRENGTHS,
    method: str = "analytic",
    sorter: SorterModel | None = None,
    normalization: str = POSTSELECTED,
    grid: GridSpec | None = None,
    num_screens: int = 20,
    seed: int = 0,
    synthesis: ScreenSynthesisOptions | None = None,
    quad: QuadratureOptions | None = None,
    ba_tol: float = 1e-9,
    ba_max_iter: int = 10000,
    workers: int = 1,
) -> CapacityCurve:
    """Capacity at each turbulence strength for one channel configuration.

    Builds the crosstalk matrix (analytic integral or Monte Carlo over
    `num_screens` screens), composes the sorter, applies the leakage policy and
    maximizes mutual information. Monte Carlo points carry asymmetric error
    bars propagated from the matrix standard errors. Points are independent;
    `workers` > 1 evaluates them in a thread pool with results ordered by
    strength, so parallel and serial sweeps emit identical curves.
    """
    if method not in ("analytic", "mc"):
        raise ValueError(f"method must be 'analytic' or 'mc', got {method!r}")
    sorter = sorter or SorterModel("ideal")
    strengths = [float(s) for s in strengths]
    if method == "mc" and grid is None:
        grid = GridSpec(512)

    def evaluate(s: float) -> CapacityResult:
        if method == "analytic":
            raw = analytic_matrix(modes, s, quad)
        else:
            raw = montecarlo_matrix(modes, s, num_screens, seed, grid, synthesis)
        composed = apply_sorter(raw, sorter)
        ready = normalize(composed, normalization)
        result = blahut_arimoto(ready, tol=ba_tol, max_iter=ba_max_iter)
        if raw.standard_errors is not None and np.any(raw.standard_errors > 0.0):
            response = sorter.response(modes)
            lo, hi = _mc_error_bars(
                raw, response, normalization, result.capacity, ba_tol, ba_max_iter
            )
            result.err_lo, result.err_hi = lo, hi
        return result

    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(evaluate, strengths))
    else:
        results = [evaluate(s) for s in strengths]

    config = {
        "dimension": modes.dimension,
        "center": modes.center,
        "spacing": modes.spacing,
        "method": method,
        "sorter": sorter.kind,
        "normalization": normalization,
        "num_screens": num_screens if method == "mc" else None,
        "seed": seed if method == "mc" else None,
        "grid": None
        if grid is None
        else {
            "resolution": grid.resolution,
            "physical_width": grid.physical_width,
            "aperture_radius": grid.aperture_radius,
        },
        "subharmonic_levels": (synthesis or ScreenSynthesisOptions()).subharmonic_levels
        if method == "mc"
        else None,
    }
    return CapacityCurve(list(zip(strengths, results)), config)


def find_crossing(curve: CapacityCurve, level: float):
    """Strength where the capacity first drops below `level` (linear interpolation).

    Returns None when the curve never crosses downward through the level. A
    non-monotone curve near the crossing triggers a warning and the first
    crossing is returned.
    """
    if len(curve.points) < 2:
        raise ValueError("curve needs at least 2 points")
    s = curve.strengths
    c = curve.capacities
    for i in range(len(s) - 1):
        if c[i] >= level and c[i + 1] < level:
            if np.any(c[i + 1:] >= level):
                warnings.warn(
                    f"capacity re-crosses level {level}; returning first crossing",
                    stacklevel=2,
                )
            frac = (c[i] - level) / (c[i] - c[i + 1])
            return float(s[i] + frac * (s[i + 1] - s[i]))
    return None
