"""Mode-crosstalk matrices for turbulent vortex-mode channels.

Two independent routes produce the conditional probabilities P[d|s] of
detecting charge d given sent charge s:

- `analytic_crosstalk` evaluates the closed-form angular-coherence integral
  (adaptive quadrature in the angle, Gauss-Legendre in the radius), and
- `montecarlo_matrix` averages detection probabilities of screen-distorted
  modes over a turbulence ensemble.

Both estimate the total probability of an angular-momentum change d - s,
summed over the radial structure of the received field, which is also what a
position-mapping mode sorter measures. The Monte Carlo detector therefore
projects onto a complete radial family per charge (thin annular rings times
exp(i*d*theta)); projecting onto the single radially uniform vortex mode would
discard the power scattered into other radial modes and sit far below the
analytic values.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np
from scipy.integrate import quad as _quadpack
from scipy.special import sici

from .grid import GridSpec
from .turbulence import (
    STRUCTURE_COEFF,
    ScreenSynthesisOptions,
    screen_ensemble,
)

SUBUNITAL = "subunital"
POSTSELECTED = "postselected"
ERASURE = "erasure"
NORMALIZATIONS = (SUBUNITAL, POSTSELECTED, ERASURE)

_COLSUM_TOL = 1e-9


class QuadratureError(RuntimeError):
    """Adaptive quadrature failed to reach the requested tolerance."""

    def __init__(self, message: str, achieved: float):
        super().__init__(f"{message} (achieved error estimate {achieved:.3e})")
        self.achieved = achieved


@dataclass(frozen=True)
class QuadratureOptions:
    tol: float = 1e-8
    radial_nodes: int = 128
    max_subdivisions: int = 400

    def __post_init__(self):
        if self.tol <= 0.0:
            raise ValueError("tol must be positive")


@dataclass(frozen=True)
class ModeSet:
    """Detected OAM indices: `dimension` charges spaced `spacing` apart."""

    dimension: int
    center: int = 0
    spacing: int = 1

    def __post_init__(self):
        if self.dimension < 2:
            raise ValueError("dimension must be >= 2")
        if self.spacing < 1:
            raise ValueError("spacing must be >= 1")

    @property
    def indices(self) -> tuple[int, ...]:
        offset = (self.dimension - 1) // 2
        return tuple(
            self.center + (i - offset) * self.spacing for i in range(self.dimension)
        )


@dataclass(frozen=True)
class Provenance:
    method: str
    num_screens: int | None = None
    seed: int | None = None

    def to_dict(self) -> dict:
        d = {"method": self.method}
        if self.method == "montecarlo":
            d["num_screens"] = self.num_screens
            d["seed"] = self.seed
        return d


@dataclass
class CrosstalkMatrix:
    """Conditional probabilities entries[d, s]; columns are sent modes.

    Under `subunital` normalization columns may sum below one (power leaked to
    undetected charges); `postselected` columns sum to one; `erasure` appends a
    loss row so columns sum to one including the explicit loss outcome.
    """

    mode_set: ModeSet
    entries: np.ndarray
    normalization: str
    provenance: Provenance
    standard_errors: np.ndarray | None = None
    strength: float = 0.0

    def __post_init__(self):
        self.entries = np.asarray(self.entries, dtype=float)
        self.validate()

    @property
    def dimension(self) -> int:
        return self.mode_set.dimension

    def validate(self):
        n = self.mode_set.dimension
        rows = n + 1 if self.normalization == ERASURE else n
        if self.entries.shape != (rows, n):
            raise ValueError(
                f"entries shape {self.entries.shape} != ({rows}, {n}) for "
                f"{self.normalization} normalization"
            )
        if self.normalization not in NORMALIZATIONS:
            raise ValueError(f"unknown normalization {self.normalization!r}")
        if np.any(self.entries < -_COLSUM_TOL) or np.any(self.entries > 1 + _COLSUM_TOL):
            raise ValueError("entries must lie in [0, 1]")
        sums = self.entries.sum(axis=0)
        if self.normalization == SUBUNITAL:
            if np.any(sums > 1.0 + _COLSUM_TOL):
                raise ValueError(f"subunital column sums exceed 1: max {sums.max()}")
        else:
            if np.any(np.abs(sums - 1.0) > _COLSUM_TOL):
                raise ValueError(
                    f"{self.normalization} columns must sum to 1; got {sums}"
                )


def analytic_crosstalk(
    delta: int, d_over_r0: float, quad: QuadratureOptions | None = None
) -> float:
    """Probability of an angular-momentum change `delta` at strength D/r0.

    Evaluates (1/pi) * int_0^1 rho drho int_0^2pi dtheta
    exp(-3.44 (D/r0)^(5/3) (rho sin(theta/2))^(5/3)) cos(delta * theta).
    The integrand is even about theta = pi, so the angular integral runs over
    [0, pi] and is doubled; the fractional-power kink at theta = 0 is left to
    the adaptive subdivision.
    """
    quad = quad or QuadratureOptions()
    if d_over_r0 < 0.0:
        raise ValueError("d_over_r0 must be non-negative")
    delta = int(delta)
    coeff = 0.5 * STRUCTURE_COEFF * d_over_r0 ** (5.0 / 3.0)
    nodes, weights = _radial_rule(quad.radial_nodes)
    r53 = nodes ** (5.0 / 3.0)
    wr = weights * nodes

    def integrand(theta):
        a = coeff * np.sin(0.5 * theta) ** (5.0 / 3.0)
        return np.cos(delta * theta) * np.dot(wr, np.exp(-a * r53))

    val, abserr, *_ = _quadpack(
        integrand,
        0.0,
        np.pi,
        epsabs=quad.tol * np.pi / 4.0,
        epsrel=0.0,
        limit=quad.max_subdivisions,
        full_output=1,
    )
    p = 2.0 / np.pi * val
    achieved = 2.0 / np.pi * abserr
    if achieved > quad.tol:
        raise QuadratureError(
            f"crosstalk quadrature did not converge for delta={delta}, "
            f"D/r0={d_over_r0}",
            achieved,
        )
    if p < -quad.tol or p > 1.0 + quad.tol:
        raise QuadratureError(
            f"crosstalk probability {p} outside [0, 1] beyond tolerance", achieved
        )
    return float(min(max(p, 0.0), 1.0))


@lru_cache(maxsize=8)
def _radial_rule(n: int):
    x, w = np.polynomial.legendre.leggauss(n)
    nodes = 0.5 * (x + 1.0)
    nodes.setflags(write=False)
    weights = 0.5 * w
    weights.setflags(write=False)
    return nodes, weights


def analytic_matrix(
    modes: ModeSet, d_over_r0: float, quad: QuadratureOptions | None = None
) -> CrosstalkMatrix:
    """Crosstalk matrix from the analytic integral; entries depend on |d - s|."""
    n = modes.dimension
    by_gap = {
        k: analytic_crosstalk(k * modes.spacing, d_over_r0, quad) for k in range(n)
    }
    entries = np.empty((n, n))
    for i in range(n):
        for j in range(n):
            entries[i, j] = by_gap[abs(i - j)]
    return CrosstalkMatrix(
        modes, entries, SUBUNITAL, Provenance("analytic"), strength=d_over_r0
    )


@lru_cache(maxsize=8)
def _ring_projection_tables(grid: GridSpec):
    """Aperture pixel angles plus 1-pixel annular ring assignment."""
    r, theta = grid.polar()
    mask = grid.aperture_mask()
    ring = np.rint(r[mask] / grid.pixel_size).astype(np.int64)
    counts = np.bincount(ring).astype(float)
    good = counts > 0
    th = theta[mask]
    th.setflags(write=False)
    return th, ring, counts, good


def charge_transfer_probabilities(
    grid: GridSpec, phase: np.ndarray, deltas
) -> np.ndarray:
    """Detection probability of each angular-momentum change for one screen.

    Projects exp(i*phi) onto ring-resolved angular harmonics: thin annular
    rings are mutually orthogonal, so summing |projection|^2 over rings counts
    every radial output mode of charge change `delta`.

    Raw probabilities carry a small deterministic floor at changes divisible
    by 4 (the pixel lattice aliases those harmonics within individual rings,
    ~4e-4 at resolution 512); `aliasing_floor` measures it for calibration.
    """
    theta, ring, counts, good = _ring_projection_tables(grid)
    ph = np.exp(1j * phase[grid.aperture_mask()])
    npix = theta.size
    out = np.empty(len(deltas))
    nring = counts.size
    for k, d in enumerate(deltas):
        w = np.exp(-1j * int(d) * theta) * ph
        sre = np.bincount(ring, weights=w.real, minlength=nring)
        sim = np.bincount(ring, weights=w.imag, minlength=nring)
        out[k] = np.sum((sre[good] ** 2 + sim[good] ** 2) / counts[good]) / npix
    return out


@lru_cache(maxsize=8)
def _aliasing_floor_cached(grid: GridSpec, deltas: tuple) -> np.ndarray:
    zero = np.zeros((grid.resolution, grid.resolution))
    floor = charge_transfer_probabilities(grid, zero, list(deltas))
    for k, d in enumerate(deltas):
        if d == 0:
            floor[k] = 0.0
    floor.setflags(write=False)
    return floor


def aliasing_floor(grid: GridSpec, deltas) -> np.ndarray:
    """Zero-phase response of the ring-harmonic detector (0 at delta = 0)."""
    return _aliasing_floor_cached(grid, tuple(int(d) for d in deltas))


def montecarlo_matrix(
    modes: ModeSet,
    d_over_r0: float,
    num_screens: int,
    seed: int,
    grid: GridSpec,
    options: ScreenSynthesisOptions | None = None,
) -> CrosstalkMatrix:
    """Ensemble-averaged crosstalk matrix with per-entry standard errors.

    For each screen the vortex of charge l_s is distorted and detected on the
    ring-harmonic family of every l_d in the set; for pure vortices on a shared
    aperture the projection depends only on l_s - l_d, so the charge-transfer
    spectrum is computed once per screen and mapped onto the matrix.
    """
    if num_screens < 1:
        raise ValueError("num_screens must be >= 1")
    n = modes.dimension
    idx = modes.indices
    deltas = [idx[j] - idx[i] for i in range(n) for j in range(n)]
    wanted = sorted(set(deltas))
    # the lattice aliases charge content across multiples of 4; measure the
    # spectrum on a window wide enough to deconvolve that leakage
    shifts = [s for s in range(-16, 17, 4) if s != 0]
    uniq = sorted({d + s for d in wanted for s in shifts} | set(wanted))
    acc = np.zeros(len(uniq))
    acc_sq = np.zeros(len(uniq))
    if d_over_r0 == 0.0:
        zero = np.zeros((grid.resolution, grid.resolution))
        p = charge_transfer_probabilities(grid, zero, uniq)
        acc, acc_sq, m = p, p * p, 1
    else:
        m = num_screens
        for screen in screen_ensemble(grid, d_over_r0, num_screens, seed, options):
            p = charge_transfer_probabilities(grid, screen.phase, uniq)
            acc += p
            acc_sq += p * p
    raw = acc / m
    # calibrate out lattice aliasing: each charge component feeds the detector
    # at offsets of +-4k with the deterministic zero-phase floor as weight;
    # deconvolve to second order so the identity channel stays exact
    floor = dict(zip(shifts, aliasing_floor(grid, tuple(shifts))))
    kernel = {0: 1.0 + sum(f * f for f in floor.values())}
    for k in shifts:
        second = sum(
            floor[s] * floor[k - s] for s in shifts if (k - s) in floor
        )
        kernel[k] = -floor[k] + second
    pos = {d: k for k, d in enumerate(uniq)}
    mean = np.empty(len(wanted))
    for k, d in enumerate(wanted):
        val = sum(
            kernel[s] * raw[pos[d - s]] for s in kernel if (d - s) in pos
        )
        mean[k] = max(val, 0.0)
    if m > 1:
        var = np.maximum(acc_sq / m - raw ** 2, 0.0) / (m - 1)
        se_all = np.sqrt(var)
    else:
        se_all = np.zeros_like(raw)
    se = np.array([se_all[pos[d]] for d in wanted])
    lookup = {d: k for k, d in enumerate(wanted)}
    entries = np.empty((n, n))
    errors = np.empty((n, n))
    for i in range(n):
        for j in range(n):
            k = lookup[idx[j] - idx[i]]
            entries[i, j] = mean[k]
            errors[i, j] = se[k]
    return CrosstalkMatrix(
        modes,
        np.clip(entries, 0.0, 1.0),
        SUBUNITAL,
        Provenance("montecarlo", num_screens, seed),
        standard_errors=errors,
        strength=d_over_r0,
    )


@dataclass(frozen=True)
class SorterModel:
    """Stochastic response of the mode sorter over a detected set.

    kinds: "ideal" (identity), "sinc_binned" (each charge maps to a spot with a
    unit-normalized sinc^2 intensity profile, integrated over unit-width bins
    at the detected positions), or "measured" (explicit matrix).
    """

    kind: str = "ideal"
    matrix: np.ndarray | None = None

    def __post_init__(self):
        if self.kind not in ("ideal", "sinc_binned", "measured"):
            raise ValueError(f"unknown sorter kind {self.kind!r}")
        if self.kind == "measured":
            if self.matrix is None:
                raise ValueError("measured sorter requires a matrix")
            m = np.asarray(self.matrix, dtype=float)
            if m.ndim != 2 or m.shape[0] != m.shape[1]:
                raise ValueError("measured sorter matrix must be square")
            if np.any(m < -_COLSUM_TOL) or np.any(m.sum(axis=0) > 1 + _COLSUM_TOL):
                raise ValueError("measured sorter columns must be subunital")

    def response(self, modes: ModeSet) -> np.ndarray:
        n = modes.dimension
        if self.kind == "ideal":
            return np.eye(n)
        if self.kind == "measured":
            m = np.asarray(self.matrix, dtype=float)
            if m.shape != (n, n):
                raise ValueError(
                    f"measured sorter is {m.shape}, mode set needs ({n}, {n})"
                )
            return m
        idx = modes.indices
        out = np.empty((n, n))
        for j, true_pos in enumerate(idx):
            for i, det_pos in enumerate(idx):
                lo = det_pos - true_pos - 0.5
                out[i, j] = sinc_squared_bin(lo, lo + 1.0)
        return out


def sinc_squared_bin(lo: float, hi: float) -> float:
    """Integral of sin^2(pi u) / (pi u)^2 over [lo, hi]."""
    return _sinc_sq_primitive(hi) - _sinc_sq_primitive(lo)


def _sinc_sq_primitive(u: float) -> float:
    t = np.pi * u
    if t == 0.0:
        return 0.0
    si, _ = sici(2.0 * t)
    return float((si - np.sin(t) ** 2 / t) / np.pi)


def apply_sorter(matrix: CrosstalkMatrix, sorter: SorterModel) -> CrosstalkMatrix:
    """Compose the channel with the sorter response: entries_out = S @ entries."""
    if matrix.normalization == ERASURE:
        raise ValueError("apply the sorter before erasure normalization")
    s = sorter.response(matrix.mode_set)
    out = s @ matrix.entries
    norm = matrix.normalization
    if norm == POSTSELECTED and np.any(np.abs(s.sum(axis=0) - 1.0) > _COLSUM_TOL):
        norm = SUBUNITAL
    se = matrix.standard_errors
    if se is not None:
        se = np.sqrt((s ** 2) @ (se ** 2))
    return CrosstalkMatrix(
        matrix.mode_set,
        np.clip(out, 0.0, 1.0),
        norm,
        matrix.provenance,
        standard_errors=se,
        strength=matrix.strength,
    )


def normalize(matrix: CrosstalkMatrix, policy: str) -> CrosstalkMatrix:
    """Resolve leaked power: renormalize columns or add an explicit loss row."""
    if policy not in (POSTSELECTED, ERASURE):
        raise ValueError(f"normalization policy must be postselected or erasure, got {policy!r}")
    if matrix.normalization == ERASURE:
        raise ValueError("matrix already carries an erasure row")
    sums = matrix.entries.sum(axis=0)
    se = matrix.standard_errors
    if policy == POSTSELECTED:
        if np.any(sums <= 0.0):
            raise ValueError("cannot postselect: a column has zero detected power")
        entries = matrix.entries / sums
        if se is not None:
            se = se / sums
    else:
        loss = np.clip(1.0 - sums, 0.0, 1.0)
        entries = np.vstack([matrix.entries, loss])
        if se is not None:
            loss_se = np.sqrt((se ** 2).sum(axis=0))
            se = np.vstack([se, loss_se])
    return CrosstalkMatrix(
        matrix.mode_set,
        entries,
        policy,
        matrix.provenance,
        standard_errors=se,
        strength=matrix.strength,
    )
