"""Deterministic disorder Monte Carlo.

Each realization draws its couplings from a counter-mode stream keyed by
(master seed, realization index), so streams are independent of worker
scheduling, realization r is the same no matter how many realizations a run
requests (prefix property), and reductions happen in ascending index order.
Results are therefore bit-identical across any degree of parallelism.
"""

from __future__ import annotations

import hashlib
import sys
from concurrent.futures import FIRST_COMPLETED, ProcessPoolExecutor, wait
from dataclasses import dataclass

import numpy as np
from numpy.random import Generator, Philox

from .model import CanonicalModel, Realization, coupling_sites, sample_couplings
from .operator import GridSpec

__all__ = [
    "EnsembleConfig",
    "EnsembleResult",
    "StatisticError",
    "realization_stream",
    "draw_realization",
    "run_ensemble",
]

_SEED_MOD = 2**64


class StatisticError(RuntimeError):
    """A statistic failed on one realization; carries (master_seed, index)."""

    def __init__(self, master_seed: int, index: int, cause):
        super().__init__(f"statistic failed on realization {index} "
                         f"(master seed {master_seed}): {cause}")
        self.master_seed = master_seed
        self.index = index
        self.cause_text = str(cause)

    def __reduce__(self):  # keep instances picklable across worker processes
        return (StatisticError, (self.master_seed, self.index, self.cause_text))


@dataclass(frozen=True, eq=False)
class EnsembleConfig:
    """A disorder ensemble: model, grid, realization count, and master seed."""

    master_seed: int
    realizations: int
    model: CanonicalModel
    grid: GridSpec

    def __post_init__(self):
        if int(self.realizations) != self.realizations or self.realizations < 1:
            raise ValueError(f"realizations must be a positive integer, got {self.realizations}")
        object.__setattr__(self, "realizations", int(self.realizations))
        object.__setattr__(self, "master_seed", int(self.master_seed) % _SEED_MOD)


@dataclass(frozen=True, eq=False)
class EnsembleResult:
    """Per-realization statistic rows (ascending index) with their reduction."""

    values: np.ndarray  # shape (realizations, dim)
    mean: np.ndarray
    stderr: np.ndarray
    master_seed: int
    realizations: int
    seed_digest: str


def realization_stream(master_seed: int, index: int) -> Generator:
    """Counter-mode stream for one realization, keyed by (master_seed, index)."""
    key = np.array([master_seed % _SEED_MOD, index % _SEED_MOD], dtype=np.uint64)
    return Generator(Philox(key=key))


def draw_realization(config: EnsembleConfig, index: int) -> Realization:
    """Realization ``index`` of the ensemble; independent of every other index."""
    rng = realization_stream(config.master_seed, index)
    sites = coupling_sites(config.grid.box_length, config.model.site)
    return sample_couplings(config.model.coupling, rng, sites, config.grid.box_length,
                            seed_info=(config.master_seed, index))


def _evaluate(config: EnsembleConfig, statistic, index: int) -> np.ndarray:
    realization = draw_realization(config, index)
    try:
        value = statistic(config.model, realization, config.grid)
    except Exception as exc:  # noqa: BLE001 - reported with provenance, then aborts
        raise StatisticError(config.master_seed, index, exc) from exc
    out = np.atleast_1d(np.asarray(value, dtype=float))
    if out.ndim != 1 or not np.all(np.isfinite(out)):
        raise StatisticError(config.master_seed, index,
                             ValueError(f"statistic returned a non-finite or non-1-D value {value!r}"))
    return out


def _evaluate_star(args) -> tuple[int, np.ndarray]:
    config, statistic, index = args
    return index, _evaluate(config, statistic, index)


def _seed_digest(master_seed: int, realizations: int) -> str:
    keys = np.empty((realizations, 2), dtype=np.uint64)
    keys[:, 0] = master_seed
    keys[:, 1] = np.arange(realizations, dtype=np.uint64)
    return hashlib.sha256(keys.tobytes()).hexdigest()


def run_ensemble(config: EnsembleConfig, statistic, workers: int = 1,
                 progress: bool = False) -> EnsembleResult:
    """Evaluate a statistic on every realization and reduce in index order.

    ``statistic`` must be a pure picklable callable
    (model, realization, grid) -> 1-D float array (or scalar); it runs in
    worker processes when ``workers`` > 1.  The reduction buffers all rows and
    sums them in ascending realization order, so the result does not depend
    on worker count or completion order.  A failing statistic aborts the run
    with the offending (master seed, index) attached.
    """
    R = config.realizations
    workers = max(1, int(workers))
    rows: list[np.ndarray | None] = [None] * R

    if workers == 1 or R == 1:
        for r in range(R):
            rows[r] = _evaluate(config, statistic, r)
            if progress and (r + 1) % max(1, R // 20) == 0:
                print(f"  realizations {r + 1}/{R}", file=sys.stderr, flush=True)
    else:
        step = max(1, R // 20)
        with ProcessPoolExecutor(max_workers=min(workers, R)) as pool:
            pending = {pool.submit(_evaluate_star, (config, statistic, r)) for r in range(R)}
            done_count = reported = 0
            try:
                while pending:
                    done, pending = wait(pending, return_when=FIRST_COMPLETED)
                    for fut in done:
                        r, val = fut.result()  # re-raises StatisticError, aborting the run
                        rows[r] = val
                        done_count += 1
                    if progress and done_count - reported >= step:
                        reported = done_count
                        print(f"  realizations {done_count}/{R}", file=sys.stderr, flush=True)
            except BaseException:
                for fut in pending:
                    fut.cancel()
                raise

    dim = rows[0].size
    values = np.empty((R, dim))
    for r, row in enumerate(rows):
        if row is None or row.size != dim:
            raise StatisticError(config.master_seed, r,
                                 ValueError("statistic returned rows of inconsistent length"))
        values[r] = row
    mean = np.add.reduce(values, axis=0) / R
    if R > 1:
        stderr = values.std(axis=0, ddof=1) / np.sqrt(R)
    else:
        stderr = np.zeros(dim)
    return EnsembleResult(values=values, mean=mean, stderr=stderr,
                          master_seed=config.master_seed, realizations=R,
                          seed_digest=_seed_digest(config.master_seed, R))
