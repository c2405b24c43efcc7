"""Alloy-type random potentials on the unit lattice.

A model is a Z-periodic background plus independent random multiples of a
compactly supported bump placed at every integer site.  Profiles are stored
as uniform samples and evaluated by linear interpolation, so every quantity
derived from a model is an exact, reproducible function of its arrays.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace

import numpy as np

__all__ = [
    "ModelError",
    "SingleSitePotential",
    "PeriodicPotential",
    "CouplingDensity",
    "ModelSpec",
    "CanonicalTransform",
    "CanonicalModel",
    "Realization",
    "indicator_site",
    "zero_periodic",
    "harmonic_periodic",
    "uniform_density",
    "table_density",
    "default_model",
    "canonicalize",
    "transport_realization",
    "coupling_sites",
    "lattice_sites",
    "sample_couplings",
    "sample_total_potential",
]

DENSITY_TOL = 1e-12

# guard for lattice/window membership under float noise, in cell units
_EDGE_EPS = 1e-9


class ModelError(ValueError):
    """A model specification violates its invariants."""


@dataclass(frozen=True, eq=False)
class SingleSitePotential:
    """Compactly supported, nonnegative bump placed at every lattice site.

    ``values`` are uniform samples on ``[support_lo, support_hi]`` (both
    endpoints included); the bump is their linear interpolant and vanishes
    identically outside the support.  The bump must dominate ``kappa`` on the
    window ``window_center +/- window_halfwidth``.
    """

    values: np.ndarray
    support_lo: float
    support_hi: float
    window_halfwidth: float
    kappa: float = 1.0
    window_center: float = 0.0

    def __post_init__(self):
        vals = np.asarray(self.values, dtype=float)
        object.__setattr__(self, "values", vals)
        if vals.ndim != 1 or vals.size < 2:
            raise ModelError("site profile needs at least two samples")
        if not np.all(np.isfinite(vals)):
            raise ModelError("site profile samples must be finite")
        if np.any(vals < 0.0):
            raise ModelError("site profile must be nonnegative")
        if not (self.support_lo < self.support_hi):
            raise ModelError("site support interval is empty")
        if not (self.kappa > 0.0):
            raise ModelError(f"site lower bound must be positive, got {self.kappa}")
        if not (self.window_halfwidth > 0.0):
            raise ModelError("site window is empty")
        lo = self.window_center - self.window_halfwidth
        hi = self.window_center + self.window_halfwidth
        if lo < self.support_lo - 1e-12 or hi > self.support_hi + 1e-12:
            raise ModelError("site window must lie inside the support")
        # piecewise-linear minimum over the window: window ends plus samples inside
        xs = self.sample_positions()
        inside = vals[(xs >= lo) & (xs <= hi)]
        low = min(float(np.min(inside)) if inside.size else math.inf,
                  float(self(lo)), float(self(hi)))
        if low < self.kappa - 1e-12:
            raise ModelError("site profile drops below its lower bound on the window")

    def sample_positions(self) -> np.ndarray:
        return np.linspace(self.support_lo, self.support_hi, self.values.size)

    def __call__(self, x):
        """Interpolated bump value; identically zero outside the support."""
        return np.interp(x, self.sample_positions(), self.values, left=0.0, right=0.0)

    @property
    def half_width(self) -> float:
        """Smallest R with the support contained in [-R, R]."""
        return max(abs(self.support_lo), abs(self.support_hi))

    @property
    def window_width(self) -> float:
        return 2.0 * self.window_halfwidth

    @property
    def sup_norm(self) -> float:
        return float(np.max(self.values))


@dataclass(frozen=True, eq=False)
class PeriodicPotential:
    """Z-periodic background, one period stored as uniform samples.

    Sample ``j`` sits at ``x = j/m - phase``; evaluation wraps around and
    interpolates linearly.  Origin shifts are carried by ``phase`` alone so
    they stay exact (no resampling).
    """

    values: np.ndarray
    phase: float = 0.0

    def __post_init__(self):
        vals = np.asarray(self.values, dtype=float)
        object.__setattr__(self, "values", vals)
        if vals.ndim != 1 or vals.size < 1:
            raise ModelError("periodic potential needs at least one sample")
        if not np.all(np.isfinite(vals)):
            raise ModelError("periodic samples must be finite")
        if not np.isfinite(self.phase):
            raise ModelError("periodic phase must be finite")

    @property
    def samples_per_cell(self) -> int:
        return int(self.values.size)

    @property
    def sup_norm(self) -> float:
        return float(np.max(np.abs(self.values)))

    def __call__(self, x):
        x = np.asarray(x, dtype=float)
        if self.values.size == 1:
            return np.full(x.shape, self.values[0])
        frac = np.mod(x + self.phase, 1.0)
        m = self.values.size
        grid = np.arange(m + 1) / m
        return np.interp(frac, grid, np.append(self.values, self.values[:1]))


@dataclass(frozen=True, eq=False)
class CouplingDensity:
    """Probability density of one coupling, supported on a bounded interval.

    ``kind`` is ``"uniform"`` (constant density) or ``"table"`` (linear
    interpolant of uniform samples).  Table densities must integrate to one
    within 1e-12 by the trapezoid rule; anything else is rejected.
    """

    kind: str
    lo: float
    hi: float
    table: np.ndarray | None = None

    def __post_init__(self):
        if self.kind not in ("uniform", "table"):
            raise ModelError(f"unknown density kind {self.kind!r}")
        if not (np.isfinite(self.lo) and np.isfinite(self.hi) and self.lo < self.hi):
            raise ModelError("density support must be a bounded interval with lo < hi")
        if self.kind == "uniform":
            if self.table is not None:
                raise ModelError("uniform density takes no sample table")
            return
        tab = np.asarray(self.table, dtype=float)
        object.__setattr__(self, "table", tab)
        if tab.ndim != 1 or tab.size < 2:
            raise ModelError("density table needs at least two samples")
        if not np.all(np.isfinite(tab)):
            raise ModelError("density table must be finite (bounded)")
        if np.any(tab < 0.0):
            raise ModelError("density must be nonnegative")
        total = float(np.trapezoid(tab, dx=self.width / (tab.size - 1)))
        if abs(total - 1.0) > DENSITY_TOL:
            raise ModelError(f"density integrates to {total!r}, not 1")

    @property
    def width(self) -> float:
        return self.hi - self.lo

    @property
    def sup_norm(self) -> float:
        if self.kind == "uniform":
            return 1.0 / self.width
        return float(np.max(self.table))

    def quantile(self, t):
        """Inverse CDF, exact per linear segment; maps [0, 1] onto [lo, hi]."""
        t = np.asarray(t, dtype=float)
        if self.kind == "uniform":
            return np.clip(self.lo + t * self.width, self.lo, self.hi)
        f = self.table
        m = f.size
        dx = self.width / (m - 1)
        xs = self.lo + dx * np.arange(m)
        cdf = np.concatenate(([0.0], np.cumsum(0.5 * (f[:-1] + f[1:]) * dx)))
        p = t * cdf[-1]  # absorb trapezoid rounding so t=1 hits hi exactly
        j = np.clip(np.searchsorted(cdf, p, side="right") - 1, 0, m - 2)
        c = p - cdf[j]
        alpha = 0.5 * (f[j + 1] - f[j]) / dx  # quadratic CDF coefficient per segment
        beta = f[j]
        disc = np.sqrt(np.maximum(beta * beta + 4.0 * alpha * c, 0.0))
        denom = beta + disc
        step = np.where(denom > 0.0, 2.0 * c / np.where(denom > 0.0, denom, 1.0), 0.0)
        out = xs[j] + np.clip(step, 0.0, dx)
        return np.clip(out, self.lo, self.hi)


@dataclass(frozen=True, eq=False)
class ModelSpec:
    """Raw operator family prior to normalization."""

    periodic: PeriodicPotential
    site: SingleSitePotential
    coupling: CouplingDensity


@dataclass(frozen=True)
class CanonicalTransform:
    """Coordinate and coupling change taking a raw spec to normal form.

    Canonical position = raw position - origin_shift;
    canonical coupling = coupling_scale * (raw coupling - coupling_offset).
    """

    origin_shift: float = 0.0
    coupling_scale: float = 1.0
    coupling_offset: float = 0.0

    def transport(self, coupling_values):
        return self.coupling_scale * (np.asarray(coupling_values, float) - self.coupling_offset)


@dataclass(frozen=True, eq=False)
class CanonicalModel:
    """Normal-form model: unit site lower bound, window centered at 0, couplings on [0, w+].

    ``coupling_floor`` is the deterministic offset left over when a raw
    coupling support is shifted to start at zero.  The bump sum it multiplies
    is Z-periodic, so it acts as extra periodic background, but keeping it
    attached to the bumps makes sampled potentials exactly representable.
    """

    periodic: PeriodicPotential
    site: SingleSitePotential
    coupling: CouplingDensity
    coupling_floor: float = 0.0
    transform: CanonicalTransform = CanonicalTransform()

    def __post_init__(self):
        if abs(self.site.kappa - 1.0) > 1e-12:
            raise ModelError("canonical site lower bound must be 1")
        if abs(self.site.window_center) > 1e-12:
            raise ModelError("canonical site window must be centered at 0")
        if abs(self.coupling.lo) > 1e-12:
            raise ModelError("canonical coupling support must start at 0")
        if not np.isfinite(self.coupling_floor):
            raise ModelError("coupling floor must be finite")

    @property
    def omega_plus(self) -> float:
        return self.coupling.hi

    @property
    def potential_bound(self) -> float:
        """Uniform bound on the sampled total potential over all realizations."""
        overlap = 2.0 * self.site.half_width + 1.0
        amp = self.omega_plus + abs(self.coupling_floor)
        return self.periodic.sup_norm + amp * self.site.sup_norm * overlap


def indicator_site(half_width=0.15, kappa=1.0, center=0.0, window_halfwidth=None):
    """Indicator bump of the given half-width (value kappa on its support)."""
    w = half_width if window_halfwidth is None else window_halfwidth
    return SingleSitePotential(
        values=np.array([kappa, kappa]),
        support_lo=center - half_width,
        support_hi=center + half_width,
        window_halfwidth=w,
        kappa=kappa,
        window_center=center,
    )


def zero_periodic(samples_per_cell=1) -> PeriodicPotential:
    return PeriodicPotential(np.zeros(samples_per_cell))


def harmonic_periodic(amplitude, samples_per_cell=32) -> PeriodicPotential:
    """Single-harmonic background amplitude*cos(2 pi x)."""
    j = np.arange(samples_per_cell)
    return PeriodicPotential(amplitude * np.cos(2.0 * np.pi * j / samples_per_cell))


def uniform_density(lo=0.0, hi=1.0) -> CouplingDensity:
    return CouplingDensity("uniform", lo, hi)


def table_density(lo, hi, values) -> CouplingDensity:
    return CouplingDensity("table", lo, hi, np.asarray(values, dtype=float))


def default_model(omega_plus=1.0, site_half_width=0.15) -> CanonicalModel:
    """Zero background, indicator bump, uniform couplings on [0, omega_plus]."""
    return CanonicalModel(
        periodic=zero_periodic(),
        site=indicator_site(site_half_width),
        coupling=uniform_density(0.0, omega_plus),
    )


def canonicalize(raw) -> CanonicalModel:
    """Rewrite a raw spec as the same operator family in normal form.

    The origin moves to the site window center (periodic phase bookkeeping,
    exact), the bump is divided by its lower bound while coupling values pick
    up the same factor, and the coupling support is shifted to start at zero
    with the deterministic remainder carried as ``coupling_floor``.  Sampled
    total potentials are preserved pointwise; coupling values transport
    through ``.transform``.
    """
    if isinstance(raw, CanonicalModel):
        return raw
    site, coup = raw.site, raw.coupling
    if not (site.kappa > 0.0):
        raise ModelError("site lower bound must be positive")
    c0 = site.window_center
    kappa = site.kappa
    new_site = SingleSitePotential(
        values=site.values / kappa,
        support_lo=site.support_lo - c0,
        support_hi=site.support_hi - c0,
        window_halfwidth=site.window_halfwidth,
        kappa=1.0,
        window_center=0.0,
    )
    new_periodic = replace(raw.periodic, phase=raw.periodic.phase + c0)
    width = kappa * (coup.hi - coup.lo)
    if coup.kind == "uniform":
        new_coup = CouplingDensity("uniform", 0.0, width)
    else:
        new_coup = CouplingDensity("table", 0.0, width, coup.table / kappa)
    return CanonicalModel(
        periodic=new_periodic,
        site=new_site,
        coupling=new_coup,
        coupling_floor=kappa * coup.lo,
        transform=CanonicalTransform(c0, kappa, coup.lo),
    )


@dataclass(frozen=True, eq=False)
class Realization:
    """One coupling value per site whose bump can touch the box [-l/2, l/2]."""

    sites: np.ndarray
    values: np.ndarray
    box_length: int
    seed_info: tuple = ()

    def __post_init__(self):
        sites = np.asarray(self.sites, dtype=np.int64)
        values = np.asarray(self.values, dtype=float)
        object.__setattr__(self, "sites", sites)
        object.__setattr__(self, "values", values)
        if sites.ndim != 1 or sites.shape != values.shape:
            raise ModelError("sites and values must be matching 1-D arrays")
        if sites.size and np.any(np.diff(sites) <= 0):
            raise ModelError("sites must be strictly increasing")
        if not np.all(np.isfinite(values)):
            raise ModelError("coupling values must be finite")
        if self.box_length < 1:
            raise ModelError("box length must be a positive integer")

    def index_of(self, site: int) -> int:
        i = int(np.searchsorted(self.sites, site))
        if i >= self.sites.size or self.sites[i] != site:
            raise ModelError(f"no coupling stored for site {site}")
        return i

    def value_at(self, site: int) -> float:
        return float(self.values[self.index_of(site)])

    def with_value(self, site: int, value: float) -> "Realization":
        """Copy with the coupling at one site replaced."""
        vals = self.values.copy()
        vals[self.index_of(site)] = value
        return replace(self, values=vals)


def coupling_sites(box_length: int, site: SingleSitePotential) -> np.ndarray:
    """Sites whose closed bump support intersects the closed box (touching counts)."""
    half = 0.5 * box_length
    kmin = math.ceil(-half - site.support_hi - _EDGE_EPS)
    kmax = math.floor(half - site.support_lo + _EDGE_EPS)
    return np.arange(kmin, kmax + 1, dtype=np.int64)


def lattice_sites(box_length: int) -> np.ndarray:
    """Integer lattice points inside the closed box [-l/2, l/2]."""
    half = 0.5 * box_length
    kmin = math.ceil(-half - _EDGE_EPS)
    kmax = math.floor(half + _EDGE_EPS)
    return np.arange(kmin, kmax + 1, dtype=np.int64)


def sample_couplings(coupling: CouplingDensity, rng, sites, box_length: int,
                     seed_info=()) -> Realization:
    """Draw i.i.d. couplings for the given sites by inverse CDF.

    Inverse CDF consumes exactly one uniform per site, so equal stream states
    give equal realizations and stream positions stay aligned across models.
    """
    sites = np.asarray(sites, dtype=np.int64)
    u = rng.random(sites.size)
    return Realization(sites, coupling.quantile(u), box_length, tuple(seed_info))


def transport_realization(model: CanonicalModel, realization: Realization) -> Realization:
    """Map raw coupling values into the canonical model's coupling variable."""
    return replace(realization, values=model.transform.transport(realization.values))


def sample_total_potential(model: CanonicalModel, realization: Realization, x) -> np.ndarray:
    """Total potential at ascending positions ``x``.

    V(x) = V_per(x) + sum over the realization's sites k of
    (floor + omega_k) u(x - k).  Raises ModelError if the realization lacks a
    coupling for any site whose bump support meets the box; sites beyond that
    minimal covering set contribute only outside the box.
    """
    x = np.asarray(x, dtype=float)
    site = model.site
    required = coupling_sites(realization.box_length, site)
    missing = np.setdiff1d(required, realization.sites, assume_unique=True)
    if missing.size:
        raise ModelError(f"realization lacks couplings for sites {missing[:8].tolist()}")
    weights = realization.values + model.coupling_floor
    v = np.asarray(model.periodic(x), dtype=float).copy()
    for k, w in zip(realization.sites.tolist(), weights.tolist()):
        if w == 0.0:
            continue
        i0 = np.searchsorted(x, k + site.support_lo, side="left")
        i1 = np.searchsorted(x, k + site.support_hi, side="right")
        if i0 < i1:
            v[i0:i1] += w * site(x[i0:i1] - k)
    return v
