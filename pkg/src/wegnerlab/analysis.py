"""Macroscopic estimators: integrated density of states, small-window
eigenvalue statistics, Lipschitz modulus, hitting probabilities, and
localization diagnostics (Lyapunov exponent, eigenfunction decay fits).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace
from functools import partial

import numpy as np
from numba import njit

from .ensemble import EnsembleConfig, run_ensemble
from .model import (CanonicalModel, Realization, coupling_sites, sample_couplings,
                    sample_total_potential)
from .operator import GridSpec, assemble
from .spectral import SpectralError, SpectralWindow, count_below, trace_projection

__all__ = [
    "AnalysisError",
    "IdsCurve",
    "WegnerStatistic",
    "DecayFit",
    "LocalizationReport",
    "finite_volume_ids",
    "averaged_ids",
    "wegner_statistic",
    "lipschitz_modulus",
    "hitting_probability",
    "lyapunov_exponent",
    "lyapunov_curve",
    "decay_rate",
    "participation_ratio",
    "DEFAULT_EPS_GRID",
    "DEFAULT_L_GRID",
]

DEFAULT_EPS_GRID = (0.002, 0.005, 0.01, 0.02, 0.05, 0.1)
DEFAULT_L_GRID = (16, 32, 64)

# renormalize the running transfer-matrix product this often; keeps norms
# inside floating range even at stencil scales of a few thousand
RENORM_EVERY = 16


class AnalysisError(ValueError):
    """Invalid estimator request."""


@dataclass(frozen=True, eq=False)
class IdsCurve:
    """Per-unit-length eigenvalue counting function on an energy grid."""

    energies: np.ndarray
    values: np.ndarray
    stderr: np.ndarray | None
    box_length: int
    points_per_cell: int
    realizations: int

    def __post_init__(self):
        e = np.asarray(self.energies, dtype=float)
        v = np.asarray(self.values, dtype=float)
        object.__setattr__(self, "energies", e)
        object.__setattr__(self, "values", v)
        if e.ndim != 1 or e.shape != v.shape:
            raise AnalysisError("energies and values must be matching 1-D arrays")
        if e.size >= 2 and np.any(np.diff(e) <= 0):
            raise AnalysisError("energy grid must be strictly increasing")
        if np.any(v < 0.0) or (v.size >= 2 and np.any(np.diff(v) < -1e-9)):
            raise AnalysisError("counting curve must be nonnegative and nondecreasing")
        if self.stderr is not None:
            s = np.asarray(self.stderr, dtype=float)
            object.__setattr__(self, "stderr", s)
            if s.shape != v.shape:
                raise AnalysisError("stderr must match the curve shape")


@dataclass(frozen=True, eq=False)
class WegnerStatistic:
    """Mean small-window eigenvalue counts over a (box length, window width) grid.

    ``mean[i, j]`` is the ensemble mean count in [E - eps[j], E) for box
    l_grid[i]; ``c_hat = mean / (eps * l)`` is the implied window constant;
    ``slope``/``r_squared`` describe the per-box linear fit of mean against
    eps through the origin; ``hit_prob`` is the fraction of realizations with
    at least one eigenvalue in the window.
    """

    energy: float
    eps_grid: np.ndarray
    l_grid: np.ndarray
    mean: np.ndarray
    stderr: np.ndarray
    c_hat: np.ndarray
    slope: np.ndarray
    r_squared: np.ndarray
    hit_prob: np.ndarray
    realizations: int
    points_per_cell: int
    bc: str

    @property
    def c_hat_max(self) -> float:
        return float(np.nanmax(self.c_hat))

    @property
    def c_hat_min(self) -> float:
        return float(np.nanmin(self.c_hat))


def counting_window(energy: float, eps: float) -> SpectralWindow:
    """Half-open window [E - eps, E) used by all small-window statistics."""
    return SpectralWindow(energy - eps, energy, include_a=True, include_b=False)


def _ids_statistic(model: CanonicalModel, realization: Realization, grid: GridSpec,
                   energy_grid: np.ndarray) -> np.ndarray:
    op = assemble(model, realization, grid)
    counts = np.array([count_below(op, e) for e in energy_grid], dtype=float)
    return counts / grid.box_length


def finite_volume_ids(model: CanonicalModel, realization: Realization, grid: GridSpec,
                      energy_grid) -> IdsCurve:
    """Counting function of one realization, normalized per unit length."""
    energy_grid = np.asarray(energy_grid, dtype=float)
    values = _ids_statistic(model, realization, grid, energy_grid)
    return IdsCurve(energy_grid, values, None, grid.box_length, grid.points_per_cell, 1)


def averaged_ids(config: EnsembleConfig, energy_grid, workers: int = 1,
                 progress: bool = False) -> IdsCurve:
    """Ensemble mean of the finite-volume counting function with stderr band."""
    energy_grid = np.asarray(energy_grid, dtype=float)
    res = run_ensemble(config, partial(_ids_statistic, energy_grid=energy_grid),
                       workers=workers, progress=progress)
    return IdsCurve(energy_grid, res.mean, res.stderr, config.grid.box_length,
                    config.grid.points_per_cell, config.realizations)


def _window_count_statistic(model: CanonicalModel, realization: Realization, grid: GridSpec,
                            energy: float, eps_grid: np.ndarray) -> np.ndarray:
    op = assemble(model, realization, grid)
    return np.array([trace_projection(op, counting_window(energy, e)) if e > 0.0 else 0.0
                     for e in eps_grid], dtype=float)


def _origin_fit(eps: np.ndarray, mean: np.ndarray) -> tuple[float, float]:
    """Least-squares slope through the origin and its R^2.

    R^2 follows the no-intercept convention (residuals against the uncentered
    sum of squares), which keeps it in [0, 1] for origin-constrained fits.
    """
    denom = float(eps @ eps)
    if denom == 0.0:
        return math.nan, math.nan
    slope = float(eps @ mean) / denom
    ss_res = float(np.sum((mean - slope * eps) ** 2))
    ss_tot = float(np.sum(mean * mean))
    if ss_tot == 0.0:
        return slope, 1.0 if ss_res <= 1e-30 else 0.0
    return slope, 1.0 - ss_res / ss_tot


def wegner_statistic(config: EnsembleConfig, energy: float, eps_grid=DEFAULT_EPS_GRID,
                     l_grid=None, workers: int = 1, progress: bool = False) -> WegnerStatistic:
    """Mean counts in [E - eps, E) over a grid of window widths and box lengths.

    Every box length reuses the configured model, points per cell, boundary
    condition, realization count, and master seed; within one box the same
    realizations feed every window width.
    """
    eps_grid = np.asarray(eps_grid, dtype=float)
    if np.any(eps_grid < 0.0) or not np.all(np.isfinite(eps_grid)):
        raise AnalysisError("window widths must be finite and nonnegative")
    if not np.isfinite(energy):
        raise AnalysisError("window energy must be finite")
    if l_grid is None:
        l_grid = (config.grid.box_length,)
    l_grid = np.asarray(l_grid, dtype=int)

    shape = (l_grid.size, eps_grid.size)
    mean = np.empty(shape)
    stderr = np.empty(shape)
    hit = np.empty(shape)
    slope = np.empty(l_grid.size)
    r2 = np.empty(l_grid.size)
    for i, l in enumerate(l_grid):
        grid = replace(config.grid, box_length=int(l))
        cfg = EnsembleConfig(config.master_seed, config.realizations, config.model, grid)
        res = run_ensemble(cfg, partial(_window_count_statistic, energy=energy, eps_grid=eps_grid),
                           workers=workers, progress=progress)
        mean[i] = res.mean
        stderr[i] = res.stderr
        hit[i] = np.add.reduce((res.values >= 0.5).astype(float), axis=0) / res.realizations
        slope[i], r2[i] = _origin_fit(eps_grid, res.mean)
    with np.errstate(divide="ignore", invalid="ignore"):
        c_hat = mean / (eps_grid[None, :] * l_grid[:, None])
    c_hat[:, eps_grid == 0.0] = np.nan
    return WegnerStatistic(energy=energy, eps_grid=eps_grid, l_grid=l_grid, mean=mean,
                           stderr=stderr, c_hat=c_hat, slope=slope, r_squared=r2,
                           hit_prob=hit, realizations=config.realizations,
                           points_per_cell=config.grid.points_per_cell, bc=config.grid.bc)


def lipschitz_modulus(curve: IdsCurve) -> float:
    """Largest difference quotient between adjacent energy grid points."""
    if curve.energies.size < 2:
        raise AnalysisError("need at least two grid points for a difference quotient")
    return float(np.max(np.diff(curve.values) / np.diff(curve.energies)))


def _hit_statistic(model: CanonicalModel, realization: Realization, grid: GridSpec,
                   energy: float, eps: float) -> float:
    op = assemble(model, realization, grid)
    return 1.0 if trace_projection(op, counting_window(energy, eps)) >= 1 else 0.0


def hitting_probability(config: EnsembleConfig, energy: float, eps: float,
                        box_length: int | None = None, workers: int = 1) -> float:
    """Fraction of realizations with an eigenvalue in [E - eps, E)."""
    if not (eps > 0.0):
        raise AnalysisError(f"window width must be positive, got {eps}")
    cfg = config
    if box_length is not None and box_length != config.grid.box_length:
        grid = replace(config.grid, box_length=int(box_length))
        cfg = EnsembleConfig(config.master_seed, config.realizations, config.model, grid)
    res = run_ensemble(cfg, partial(_hit_statistic, energy=energy, eps=eps), workers=workers)
    return float(res.mean[0])


@njit(cache=True)
def _transfer_log_growth(potential, energy, h, renorm_every):
    """log Frobenius norm of the ordered transfer-matrix product.

    Renormalizing every few steps only moves scalar factors out of the
    product, so the accumulated value is exact up to rounding.
    """
    a = 1.0
    b = 0.0
    c = 0.0
    d = 1.0
    total = 0.0
    for i in range(potential.shape[0]):
        t = 2.0 + h * h * (potential[i] - energy)
        na = t * a - c
        nb = t * b - d
        c = a
        d = b
        a = na
        b = nb
        if (i + 1) % renorm_every == 0:
            s = math.sqrt(a * a + b * b + c * c + d * d)
            total += math.log(s)
            inv = 1.0 / s
            a *= inv
            b *= inv
            c *= inv
            d *= inv
    s = math.sqrt(a * a + b * b + c * c + d * d)
    return total + math.log(s)


def _chain_potential(model: CanonicalModel, rng, chain_cells: int,
                     points_per_cell: int) -> tuple[np.ndarray, float]:
    if chain_cells % 2:
        chain_cells += 1  # box convention needs an even number of cells
    sites = coupling_sites(chain_cells, model.site)
    realization = sample_couplings(model.coupling, rng, sites, chain_cells)
    lm = chain_cells * points_per_cell
    x = np.arange(lm) / points_per_cell - 0.5 * chain_cells
    return sample_total_potential(model, realization, x), 1.0 / points_per_cell


def lyapunov_exponent(model: CanonicalModel, rng, energy: float, chain_cells: int = 100_000,
                      points_per_cell: int = 32) -> float:
    """Transfer-matrix Lyapunov exponent per unit length at one energy.

    ``rng`` supplies the couplings of a single long chain (at least 1e4 cells).
    """
    return float(lyapunov_curve(model, rng, np.array([energy]), chain_cells, points_per_cell)[0])


def lyapunov_curve(model: CanonicalModel, rng, energies, chain_cells: int = 100_000,
                   points_per_cell: int = 32) -> np.ndarray:
    """Lyapunov exponent at several energies along one sampled chain."""
    if chain_cells < 10_000:
        raise AnalysisError("chain must be at least 1e4 cells for a stable exponent")
    energies = np.asarray(energies, dtype=float)
    potential, h = _chain_potential(model, rng, chain_cells, points_per_cell)
    length = h * potential.size
    out = np.empty(energies.size)
    for i, e in enumerate(energies):
        g = _transfer_log_growth(potential, float(e), h, RENORM_EVERY)
        if not np.isfinite(g):
            raise SpectralError("transfer-matrix renormalization overflowed (internal fault)")
        out[i] = g / length
    return out


@dataclass(frozen=True)
class DecayFit:
    """Log-envelope decay fit of one eigenfunction."""

    rate: float  # slope of log|psi| against distance from the peak; < 0 decays
    r_squared: float
    peak_position: float
    points: int


def decay_rate(pair, positions=None, bin_width: float = 1.0) -> DecayFit:
    """Fit the peak-filtered log envelope of |psi| against distance from its maximum.

    The envelope takes the largest |psi| per bin of width ``bin_width`` (one
    unit cell by default), which drops oscillation nodes and shoulder wiggles
    alike; at least 10 usable bins are required.
    """
    psi = np.abs(pair.vector)
    n = psi.size
    x = np.arange(n) * pair.h if positions is None else np.asarray(positions, float)
    bins = np.floor((x - x[0]) / bin_width).astype(np.int64)
    order = np.lexsort((psi, bins))  # per bin, last entry holds the max
    last = np.flatnonzero(np.diff(bins[order], append=bins[order[-1]] + 1))
    idx = order[last]
    imax = int(np.argmax(psi))
    idx = idx[psi[idx] > max(psi[imax] * 1e-14, 1e-300)]  # keep logs finite
    if idx.size < 10:
        raise AnalysisError(f"envelope has only {idx.size} points, need 10")
    dist = np.abs(x[idx] - x[imax])
    logs = np.log(psi[idx])
    slope, intercept = np.polyfit(dist, logs, 1)
    fitted = slope * dist + intercept
    ss_res = float(np.sum((logs - fitted) ** 2))
    ss_tot = float(np.sum((logs - logs.mean()) ** 2))
    r2 = 1.0 - ss_res / ss_tot if ss_tot > 0.0 else 0.0
    return DecayFit(rate=float(slope), r_squared=r2, peak_position=float(x[imax]),
                    points=int(idx.size))


def participation_ratio(pair) -> float:
    """h * (sum psi^2)^2 / sum psi^4: rough support length of the state."""
    p2 = float(np.sum(pair.vector**2))
    p4 = float(np.sum(pair.vector**4))
    return pair.h * p2 * p2 / p4


@dataclass(frozen=True, eq=False)
class LocalizationReport:
    """Lyapunov exponents on an energy grid plus per-state decay diagnostics."""

    energies: np.ndarray
    gamma: np.ndarray
    chain_cells: int
    state_energies: np.ndarray
    decay_rates: np.ndarray
    decay_r_squared: np.ndarray
    participation: np.ndarray
