"""Finite-difference restrictions of the random operator to a box.

Second-order central differences on a uniform grid turn the operator into a
symmetric tridiagonal matrix; interior Dirichlet/Neumann interface conditions
used by the eigenvalue-counting comparisons are applied at grid nodes.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass, replace

import numpy as np

from .model import CanonicalModel, Realization, sample_total_potential

__all__ = [
    "OperatorError",
    "DIRICHLET",
    "NEUMANN",
    "GridSpec",
    "TridiagonalOperator",
    "assemble",
    "split_at",
    "export_text",
]

DIRICHLET = "dirichlet"
NEUMANN = "neumann"


class OperatorError(ValueError):
    """Invalid grid, assembly, or interface-cut request."""


@dataclass(frozen=True)
class GridSpec:
    """Uniform grid on the box [-l/2, l/2]: l unit cells, m points per cell.

    Dirichlet keeps the l*m - 1 interior nodes; Neumann keeps all l*m + 1
    nodes including the endpoints.  l*m must be even so every integer lattice
    site inside the box lands exactly on a node.
    """

    box_length: int
    points_per_cell: int
    bc: str = DIRICHLET

    def __post_init__(self):
        if int(self.box_length) != self.box_length or self.box_length < 1:
            raise OperatorError(f"box_length must be a positive integer, got {self.box_length}")
        if int(self.points_per_cell) != self.points_per_cell or self.points_per_cell < 1:
            raise OperatorError(f"points_per_cell must be a positive integer, got {self.points_per_cell}")
        object.__setattr__(self, "box_length", int(self.box_length))
        object.__setattr__(self, "points_per_cell", int(self.points_per_cell))
        if self.bc not in (DIRICHLET, NEUMANN):
            raise OperatorError(f"unknown boundary condition {self.bc!r}")
        if (self.box_length * self.points_per_cell) % 2:
            raise OperatorError("box_length * points_per_cell must be even so lattice sites sit on nodes")

    @property
    def h(self) -> float:
        return 1.0 / self.points_per_cell

    @property
    def inv_h2(self) -> float:
        return float(self.points_per_cell**2)

    @property
    def n(self) -> int:
        lm = self.box_length * self.points_per_cell
        return lm - 1 if self.bc == DIRICHLET else lm + 1

    def nodes(self) -> np.ndarray:
        lm = self.box_length * self.points_per_cell
        half = 0.5 * self.box_length
        if self.bc == DIRICHLET:
            idx = np.arange(1, lm)
        else:
            idx = np.arange(0, lm + 1)
        return idx / self.points_per_cell - half


@dataclass(frozen=True, eq=False)
class TridiagonalOperator:
    """Symmetric tridiagonal matrix with grid metadata.

    ``positions`` are the node coordinates of the retained rows; ``cuts``
    records interior interface conditions as (node position, kind) pairs.
    """

    diag: np.ndarray
    offdiag: np.ndarray
    h: float
    bc: str
    positions: np.ndarray
    cuts: tuple = ()

    def __post_init__(self):
        d = np.asarray(self.diag, dtype=float)
        e = np.asarray(self.offdiag, dtype=float)
        p = np.asarray(self.positions, dtype=float)
        object.__setattr__(self, "diag", d)
        object.__setattr__(self, "offdiag", e)
        object.__setattr__(self, "positions", p)
        if d.ndim != 1 or d.size < 1:
            raise OperatorError("diagonal must be a nonempty 1-D array")
        if e.shape != (d.size - 1,):
            raise OperatorError("offdiagonal must have length n-1")
        if p.shape != d.shape:
            raise OperatorError("positions must match the diagonal")
        if not (np.all(np.isfinite(d)) and np.all(np.isfinite(e))):
            raise OperatorError("matrix entries must be finite")
        if not (np.isfinite(self.h) and self.h > 0.0):
            raise OperatorError("grid spacing must be positive")

    @property
    def n(self) -> int:
        return int(self.diag.size)

    @property
    def scale(self) -> float:
        """Operator-norm proxy 2/h^2 used for tolerances."""
        return 2.0 / (self.h * self.h)

    def gershgorin(self) -> tuple[float, float]:
        """Interval certainly containing the whole spectrum."""
        r = np.zeros(self.n)
        ae = np.abs(self.offdiag)
        r[:-1] += ae
        r[1:] += ae
        return float(np.min(self.diag - r)), float(np.max(self.diag + r))

    def matvec(self, v: np.ndarray) -> np.ndarray:
        w = self.diag * v
        w[:-1] += self.offdiag * v[1:]
        w[1:] += self.offdiag * v[:-1]
        return w

    def nearest_node(self, position: float) -> int:
        """Index of the node closest to ``position``."""
        p = self.positions
        i = int(np.searchsorted(p, position))
        best = min(range(max(i - 1, 0), min(i + 1, self.n - 1) + 1), key=lambda j: abs(p[j] - position))
        return best


def assemble(model: CanonicalModel, realization: Realization, grid: GridSpec) -> TridiagonalOperator:
    """Central-difference matrix of the operator restricted to the grid's box."""
    if grid.box_length != realization.box_length:
        raise OperatorError(
            f"grid box {grid.box_length} differs from realization box {realization.box_length}")
    x = grid.nodes()
    v = sample_total_potential(model, realization, x)
    inv_h2 = grid.inv_h2
    diag = 2.0 * inv_h2 + v
    if grid.bc == NEUMANN:
        # ghost-point reflection, symmetrized: endpoint rows carry half weight
        diag[0] = inv_h2 + v[0]
        diag[-1] = inv_h2 + v[-1]
    offdiag = np.full(grid.n - 1, -inv_h2)
    return TridiagonalOperator(diag, offdiag, grid.h, grid.bc, x)


def _snap_to_node(op: TridiagonalOperator, position: float) -> int:
    i = op.nearest_node(position)
    dist = abs(op.positions[i] - position)
    if dist > 0.5 * op.h * (1.0 + 1e-9):
        raise OperatorError(f"cut position {position} is not on the grid")
    if dist >= 0.5 * op.h * (1.0 - 1e-9):
        warnings.warn(f"cut position {position} snapped by half a cell to {op.positions[i]}",
                      stacklevel=3)
    return i


def split_at(op: TridiagonalOperator, j: float, half_width: float, bc: str) -> TridiagonalOperator:
    """Decouple [j-R, j+R] from the rest of the box by interior interface conditions.

    Dirichlet removes the node at each cut position, leaving three blocks that
    share no node (offdiagonal zeros mark the joins).  Neumann severs the grid
    edge just outside each cut node by removing that edge's quadratic-form
    contribution, which leaves the reflected half-weight stencil on both sides.
    Cut positions snap to the nearest node (a snap of half a cell warns).
    """
    if bc not in (DIRICHLET, NEUMANN):
        raise OperatorError(f"unknown interface condition {bc!r}")
    if not (np.isfinite(j) and np.isfinite(half_width) and half_width >= 0.0):
        raise OperatorError("cut center and half-width must be finite, half-width nonnegative")
    lo, hi = op.positions[0], op.positions[-1]
    targets = sorted({j - half_width, j + half_width})
    for t in targets:
        if not (lo - 0.5 * op.h < t < hi + 0.5 * op.h):
            raise OperatorError(f"cut position {t} lies outside the box")
    idx = sorted({_snap_to_node(op, t) for t in targets})
    cuts = tuple((float(op.positions[i]), bc) for i in idx)

    if bc == DIRICHLET:
        keep = np.ones(op.n, dtype=bool)
        keep[idx] = False
        if not np.any(keep):
            raise OperatorError("cut removes every node")
        kept = np.flatnonzero(keep)
        new_off = np.where(np.diff(kept) == 1, op.offdiag[kept[:-1]], 0.0)
        return replace(op, diag=op.diag[keep], offdiag=new_off,
                       positions=op.positions[keep], cuts=op.cuts + cuts)

    diag = op.diag.copy()
    off = op.offdiag.copy()
    left, right = idx[0], idx[-1]
    # sever the edge entering the left cut node and the edge leaving the right
    # one; subtracting an edge's own entries keeps the perturbation exactly
    # positive semidefinite of rank one per edge
    for edge in {left - 1, right}:
        if not (0 <= edge < op.n - 1):
            raise OperatorError("cut node has no grid edge on the required side")
        diag[edge] += off[edge]
        diag[edge + 1] += off[edge]
        off[edge] = 0.0
    return replace(op, diag=diag, offdiag=off, cuts=op.cuts + cuts)


def export_text(op: TridiagonalOperator) -> str:
    """Three-column dump (index, diagonal, offdiagonal-to-next) for external checks."""
    lines = [f"# n={op.n} h={op.h!r} bc={op.bc}"]
    for i in range(op.n - 1):
        lines.append(f"{i} {float(op.diag[i])!r} {float(op.offdiag[i])!r}")
    lines.append(f"{op.n - 1} {float(op.diag[-1])!r}")
    return "\n".join(lines) + "\n"
