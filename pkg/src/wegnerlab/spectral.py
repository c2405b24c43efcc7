"""Spectral primitives for symmetric tridiagonal operators.

Eigenvalue counting runs the LDL^T inertia (Sturm) recurrence in a compiled
kernel; eigenvalues are located by bisection on the counting function,
eigenvectors by shifted inverse iteration, and a dense solver doubles as the
independent oracle for everything else.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from numba import njit
from numpy.linalg import LinAlgError
from scipy.linalg import eigh_tridiagonal, eigvalsh_tridiagonal, solve_banded

from .operator import TridiagonalOperator

__all__ = [
    "SpectralError",
    "ConvergenceError",
    "SpectralWindow",
    "EigenPair",
    "count_below",
    "trace_projection",
    "eigenvalues_in",
    "eigenvalue_by_index",
    "eigenpair",
    "dense_spectrum",
    "DENSE_LIMIT",
]

_EPS = float(np.finfo(np.float64).eps)
_TINY = float(np.finfo(np.float64).tiny)

DENSE_LIMIT = 4096

# absolute eigenvalue location tolerance, in units of the 2/h^2 scale
LOCATE_TOL = 1e-10

RESIDUAL_TOL = 1e-8  # EigenPair residual bound, in units of |value| + 2/h^2


class SpectralError(ValueError):
    """Invalid spectral request."""


class ConvergenceError(RuntimeError):
    """Inverse iteration failed to converge (usually near-degeneracy)."""


@dataclass(frozen=True)
class SpectralWindow:
    """Energy interval [a, b] with endpoint closure flags."""

    a: float
    b: float
    include_a: bool = True
    include_b: bool = True

    def __post_init__(self):
        if not (np.isfinite(self.a) and np.isfinite(self.b)):
            raise SpectralError("window endpoints must be finite")
        if self.a > self.b:
            raise SpectralError(f"window endpoints out of order: [{self.a}, {self.b}]")

    @property
    def width(self) -> float:
        return self.b - self.a


@dataclass(frozen=True, eq=False)
class EigenPair:
    """Eigenvalue with grid eigenfunction, normalized so h * sum(psi^2) = 1.

    ``residual`` is the 2-norm of (H - value) psi for the stored psi; it must
    stay below RESIDUAL_TOL * (|value| + 2/h^2).
    """

    value: float
    vector: np.ndarray
    residual: float
    h: float

    def __post_init__(self):
        object.__setattr__(self, "vector", np.asarray(self.vector, dtype=float))


@njit(cache=True)
def _sturm_count(diag, offdiag_sq, shift, offdiag_max):
    """Inertia count: eigenvalues strictly below ``shift``.

    Exact zero pivots are replaced by a tiny negative value one ulp of the
    local scale wide, the standard robust breakdown choice.
    """
    count = 0
    q = diag[0] - shift
    if q == 0.0:
        q = -_EPS * (abs(diag[0]) + 2.0 * offdiag_max)
        if q == 0.0:
            q = -_TINY
    if q < 0.0:
        count += 1
    for i in range(1, diag.shape[0]):
        q = (diag[i] - shift) - offdiag_sq[i - 1] / q
        if q == 0.0:
            q = -_EPS * (abs(diag[i]) + 2.0 * offdiag_max)
            if q == 0.0:
                q = -_TINY
        if q < 0.0:
            count += 1
    return count


@njit(cache=True)
def _bisect_index(diag, offdiag_sq, offdiag_max, k, lo, hi, tol):
    # invariant: count(lo) < k <= count(hi)
    while hi - lo > tol:
        mid = 0.5 * (lo + hi)
        if mid <= lo or mid >= hi:
            break
        if _sturm_count(diag, offdiag_sq, mid, offdiag_max) >= k:
            hi = mid
        else:
            lo = mid
    return 0.5 * (lo + hi)


def _kernel_arrays(op: TridiagonalOperator):
    e = op.offdiag
    esq = e * e
    emax = float(np.max(np.abs(e))) if e.size else 0.0
    return op.diag, esq, emax


def count_below(op: TridiagonalOperator, energy: float) -> int:
    """Number of eigenvalues strictly below ``energy`` (monotone in energy).

    Exact in exact arithmetic for energies off the spectrum; an energy landing
    exactly on an eigenvalue counts it as below (the tiny-negative pivot
    replacement resolves ties downward).
    """
    if not np.isfinite(energy):
        raise SpectralError(f"counting energy must be finite, got {energy}")
    d, esq, emax = _kernel_arrays(op)
    return int(_sturm_count(d, esq, float(energy), emax))


def _window_eval_points(op: TridiagonalOperator, window: SpectralWindow) -> tuple[float, float]:
    # closure handled by one-ulp nudges at the operator scale; the counting
    # recurrence resolves exact hits downward, so an open upper endpoint must
    # nudge down while a closed one nudges up
    nudge_a = _EPS * (abs(window.a) + op.scale)
    nudge_b = _EPS * (abs(window.b) + op.scale)
    lo = window.a - nudge_a if window.include_a else window.a
    hi = window.b + nudge_b if window.include_b else window.b - nudge_b
    return lo, hi


def trace_projection(op: TridiagonalOperator, window: SpectralWindow) -> int:
    """Number of eigenvalues inside the window, honoring closure flags."""
    lo, hi = _window_eval_points(op, window)
    if hi <= lo:
        return 0
    d, esq, emax = _kernel_arrays(op)
    return int(_sturm_count(d, esq, hi, emax) - _sturm_count(d, esq, lo, emax))


def eigenvalue_by_index(op: TridiagonalOperator, k: int, tol: float | None = None) -> float:
    """k-th smallest eigenvalue (1-based), located by bisection."""
    if not 1 <= k <= op.n:
        raise SpectralError(f"eigenvalue index {k} outside 1..{op.n}")
    d, esq, emax = _kernel_arrays(op)
    glo, ghi = op.gershgorin()
    pad = _EPS * (abs(glo) + abs(ghi) + op.scale)
    if tol is None:
        tol = LOCATE_TOL * op.scale
    return float(_bisect_index(d, esq, emax, k, glo - pad, ghi + pad, tol))


def eigenvalues_in(op: TridiagonalOperator, window: SpectralWindow, max_count: int,
                   tol: float | None = None) -> np.ndarray:
    """All eigenvalues in the window, ascending, repeated per multiplicity."""
    lo, hi = _window_eval_points(op, window)
    d, esq, emax = _kernel_arrays(op)
    if hi <= lo:
        return np.zeros(0)
    c_lo = int(_sturm_count(d, esq, lo, emax))
    c_hi = int(_sturm_count(d, esq, hi, emax))
    found = c_hi - c_lo
    if found > max_count:
        raise SpectralError(f"window holds {found} eigenvalues, more than max_count={max_count}")
    if tol is None:
        tol = LOCATE_TOL * op.scale
    glo, ghi = op.gershgorin()
    pad = _EPS * (abs(glo) + abs(ghi) + op.scale)
    lo = max(lo, glo - pad)
    hi = min(hi, ghi + pad)
    out = np.empty(found)
    for i, k in enumerate(range(c_lo + 1, c_hi + 1)):
        out[i] = _bisect_index(d, esq, emax, k, lo, hi, tol)
    return out


def _banded(op: TridiagonalOperator, shift: float) -> np.ndarray:
    ab = np.zeros((3, op.n))
    ab[0, 1:] = op.offdiag
    ab[1, :] = op.diag - shift
    ab[2, :-1] = op.offdiag
    return ab


def eigenpair(op: TridiagonalOperator, value: float, start: np.ndarray | None = None,
              max_iter: int = 50) -> EigenPair:
    """Eigenfunction for an isolated eigenvalue near ``value`` by inverse iteration.

    The sign is fixed so the largest-magnitude component is positive.  Raises
    ConvergenceError when the residual bound cannot be met within ``max_iter``
    iterations, which usually signals a near-degenerate pair.
    """
    n = op.n
    scale = abs(value) + op.scale
    if start is None:
        start = np.random.default_rng(0x1729).standard_normal(n)
    x = np.asarray(start, dtype=float)
    if x.shape != (n,) or not np.all(np.isfinite(x)):
        raise SpectralError("start vector must be a finite length-n array")
    x = x / np.linalg.norm(x)

    shift = float(value)
    target = 1e-12 * scale
    best_res = math.inf
    best_vec = None
    for it in range(max_iter):
        try:
            y = solve_banded((1, 1), _banded(op, shift), x, check_finite=False)
        except LinAlgError:
            y = None
        if y is None or not np.all(np.isfinite(y)):
            # exactly singular shift: nudge by a few ulps and retry
            shift += _EPS * scale * (it + 1)
            continue
        y /= np.linalg.norm(y)
        hy = op.matvec(y)
        res = float(np.linalg.norm(hy - (y @ hy) * y))
        if res < best_res:
            best_res, best_vec = res, y
        if res <= target:
            break
        x = y
    if best_vec is None:
        raise ConvergenceError(f"inverse iteration at {value} produced no usable vector")

    y = best_vec
    rayleigh = float(y @ op.matvec(y))
    psi = y / math.sqrt(op.h)
    residual = float(np.linalg.norm(op.matvec(psi) - rayleigh * psi))
    if residual > RESIDUAL_TOL * (abs(rayleigh) + op.scale):
        raise ConvergenceError(
            f"inverse iteration at {value} stalled at residual {residual:.3e} "
            f"(near-degenerate eigenvalue?)")
    i = int(np.argmax(np.abs(psi)))
    if psi[i] < 0.0:
        psi = -psi
    return EigenPair(value=rayleigh, vector=psi, residual=residual, h=op.h)


def dense_spectrum(op: TridiagonalOperator, vectors: bool = False, limit: int = DENSE_LIMIT):
    """Full spectrum by a dense symmetric tridiagonal solve (test oracle).

    With ``vectors=True`` returns (values, columns) where columns follow the
    same normalization and sign convention as ``eigenpair``.
    """
    if op.n > limit:
        raise SpectralError(f"dense solve refused for n={op.n} > {limit}")
    if not vectors:
        if op.n == 1:
            return op.diag.copy()
        return eigvalsh_tridiagonal(op.diag, op.offdiag)
    if op.n == 1:
        vals, vecs = op.diag.copy(), np.ones((1, 1))
    else:
        vals, vecs = eigh_tridiagonal(op.diag, op.offdiag)
    vecs = vecs / math.sqrt(op.h)
    flip = np.abs(vecs).argmax(axis=0)
    signs = np.sign(vecs[flip, np.arange(vecs.shape[1])])
    signs[signs == 0.0] = 1.0
    return vals, vecs * signs
