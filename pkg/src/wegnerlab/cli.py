"""Command-line driver: ids | wegner | verify | localize.

Exit codes: 0 success, 1 verification failure, 2 malformed configuration,
3 internal numerical fault.
"""

from __future__ import annotations

import argparse
import math
import os
import sys
from dataclasses import replace
from pathlib import Path

import numpy as np

from .analysis import (AnalysisError, LocalizationReport, averaged_ids, decay_rate,
                       lyapunov_curve, participation_ratio, wegner_statistic)
from .config import ConfigError, Experiment, build_experiment, load_config
from .ensemble import EnsembleConfig, StatisticError, draw_realization, realization_stream
from .io import ResultBundle, RunManifest
from .model import ModelError, lattice_sites
from .operator import OperatorError, assemble
from .spectral import (ConvergenceError, SpectralError, SpectralWindow, eigenpair,
                       eigenvalues_in)
from .svgplot import Series, line_plot
from .verify import (VerificationReport, bracketing_check, eder_lower_bound,
                     hellmann_feynman_check, unique_continuation_check)

__all__ = ["main"]

WORKERS_ENV = "WEGNERLAB_WORKERS"

EXIT_OK = 0
EXIT_VERIFY = 1
EXIT_CONFIG = 2
EXIT_NUMERIC = 3


def _parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="wegnerlab",
                                description="Spectral statistics of 1D random alloy-type operators")
    sub = p.add_subparsers(dest="command", required=True)
    for name, help_text in (
        ("ids", "averaged integrated density of states"),
        ("wegner", "small-window eigenvalue count scaling"),
        ("verify", "matrix-level verification suite"),
        ("localize", "Lyapunov exponents and eigenfunction decay"),
    ):
        q = sub.add_parser(name, help=help_text)
        q.add_argument("--config", type=Path, default=None, help="TOML or JSON experiment file")
        q.add_argument("--seed", type=int, default=None, help="master seed override")
        q.add_argument("--realizations", type=int, default=None,
                       help="realization count override")
        q.add_argument("--workers", type=int, default=None,
                       help=f"worker processes (default ${WORKERS_ENV} or 1)")
        q.add_argument("--out", type=Path, default=Path("wegnerlab-out"),
                       help="output directory")
        if name == "ids":
            q.add_argument("--l", dest="box_lengths", type=int, action="append",
                           help="box length (repeatable; overrides config)")
        if name == "verify":
            q.add_argument("--inject-broken-stencil", action="store_true",
                           help=argparse.SUPPRESS)  # test hook
    return p


def resolve_workers(explicit: int | None) -> int:
    if explicit is not None:
        return max(1, explicit)
    env = os.environ.get(WORKERS_ENV, "").strip()
    if env:
        try:
            return max(1, int(env))
        except ValueError as exc:
            raise ConfigError(f"{WORKERS_ENV}={env!r} is not an integer") from exc
    return 1


def _experiment(args) -> Experiment:
    doc = load_config(args.config) if args.config else {}
    exp = build_experiment(doc, seed=args.seed, realizations=args.realizations)
    if getattr(args, "box_lengths", None):
        exp.resolved["ids"]["box_lengths"] = [int(v) for v in args.box_lengths]
    return exp


def _manifest(exp: Experiment) -> RunManifest:
    return RunManifest.create(exp.digest, exp.master_seed, " ".join(sys.argv))


def cmd_ids(exp: Experiment, workers: int) -> ResultBundle:
    sec = exp.section("ids")
    energies = np.linspace(sec["energy_min"], sec["energy_max"], sec["energy_points"])
    bundle = ResultBundle(_manifest(exp))
    rows = []
    plots = []
    band = None
    for l in sec["box_lengths"]:
        grid = replace(exp.grid, box_length=int(l))
        cfg = EnsembleConfig(exp.master_seed, exp.realizations, exp.model, grid)
        curve = averaged_ids(cfg, energies, workers=workers, progress=True)
        err = curve.stderr if curve.stderr is not None else np.zeros_like(curve.values)
        rows += [(int(l), e, v, s) for e, v, s in zip(curve.energies, curve.values, err)]
        plots.append(Series(f"l={l}", curve.energies, curve.values))
        band = (curve.energies, curve.values - err, curve.values + err)
    bundle.add_table("ids", ("l", "E", "N", "stderr"), rows)
    bundle.add_plot("ids", line_plot(plots, title="integrated density of states",
                                     xlabel="E", ylabel="N(E)", band=band))
    return bundle


def cmd_wegner(exp: Experiment, workers: int) -> ResultBundle:
    sec = exp.section("wegner")
    cfg = EnsembleConfig(exp.master_seed, exp.realizations, exp.model, exp.grid)
    stat = wegner_statistic(cfg, sec["energy"], eps_grid=sec["eps"],
                            l_grid=sec["box_lengths"], workers=workers, progress=True)
    bundle = ResultBundle(_manifest(exp))
    rows = []
    hit_rows = []
    for i, l in enumerate(stat.l_grid):
        for j, eps in enumerate(stat.eps_grid):
            rows.append((stat.energy, eps, int(l), stat.mean[i, j], stat.stderr[i, j],
                         stat.c_hat[i, j], stat.slope[i], stat.r_squared[i]))
            hit_rows.append((stat.energy, eps, int(l), stat.hit_prob[i, j],
                             stat.mean[i, j], stat.stderr[i, j]))
    bundle.add_table("wegner", ("E", "eps", "l", "mean", "stderr", "C_hat", "fit_slope",
                                "r_squared"), rows)
    bundle.add_table("hitting", ("E", "eps", "l", "hit_prob", "mean", "stderr"), hit_rows)
    series = [Series(f"l={l}", stat.eps_grid, stat.mean[i]) for i, l in enumerate(stat.l_grid)]
    bundle.add_plot("wegner", line_plot(series, title="mean window count vs width",
                                        xlabel="eps", ylabel="mean count",
                                        logx=True, logy=True))
    return bundle


def _verify_reports(exp: Experiment, stencil_fault: bool = False) -> list[VerificationReport]:
    sec = exp.section("verify")
    window = SpectralWindow(sec["window"][0], sec["window"][1])
    reports = []

    # coupling-derivative identity, randomized (realization, index, site) cases;
    # keeps drawing until the requested number of cases clears the gap guard
    hf = VerificationReport("hellmann_feynman")
    grid = replace(exp.grid, box_length=sec["hf_box_length"])
    cfg = EnsembleConfig(exp.master_seed, max(1, sec["hf_cases"] // 8), exp.model, grid)
    rng = np.random.default_rng(exp.master_seed)
    sites = lattice_sites(grid.box_length)
    # indices drawn from the part of the spectrum inside the verify window
    n_top = max(2, min(grid.n, int(math.sqrt(max(window.b, 1.0)) / math.pi
                                   * grid.box_length * 1.3)))
    attempts = 0
    while len(hf.executed) < sec["hf_cases"] and attempts < 20 * sec["hf_cases"]:
        realization = draw_realization(cfg, attempts % cfg.realizations)
        n = int(rng.integers(1, n_top + 1))
        k = int(sites[rng.integers(0, sites.size)])
        hf.add(hellmann_feynman_check(exp.model, realization, grid, n, k,
                                      delta=sec["hf_delta"]))
        attempts += 1
    reports.append(hf)

    # uniform lower bound of the derivative sum, plus window-mass ratios
    uc = VerificationReport("unique_continuation")
    for l in sec["box_lengths"]:
        gridl = replace(exp.grid, box_length=int(l))
        cfgl = EnsembleConfig(exp.master_seed, sec["realizations"], exp.model, gridl)
        for r in range(sec["realizations"]):
            realization = draw_realization(cfgl, r)
            ed = eder_lower_bound(exp.model, realization, gridl, window)
            ed.name = f"eder_lower_bound l={l}"
            reports.append(ed)
            op = assemble(exp.model, realization, gridl)
            lams = eigenvalues_in(op, window, max_count=op.n)
            take = lams[:: max(1, lams.size // 8)] if lams.size else lams
            sites = lattice_sites(int(l))
            inner = sites[(sites - 0.5 >= -l / 2) & (sites + 0.5 <= l / 2)]
            for lam in take:
                try:
                    pair = eigenpair(op, float(lam))
                except ConvergenceError:
                    uc.skip(f"uc E={lam:.6f}", "-", "eigenvector extraction failed")
                    continue
                ks = inner[:: max(1, inner.size // 6)]
                for k in ks:
                    uc.add(unique_continuation_check(pair, int(k),
                                                     exp.model.site.window_width, gridl,
                                                     c_floor=sec["c_floor"]))
    reports.append(uc)

    # interface-condition counting inequalities
    grid_b = replace(exp.grid, box_length=sec["bracket_box_length"])
    cfg_b = EnsembleConfig(exp.master_seed, sec["bracket_realizations"], exp.model, grid_b)
    bracket = VerificationReport("bracketing")
    for r in range(sec["bracket_realizations"]):
        realization = draw_realization(cfg_b, r)
        rep = bracketing_check(exp.model, realization, grid_b, j=0,
                               n_energies=sec["bracket_energies"],
                               stencil_fault=stencil_fault)
        bracket.cases.extend(rep.cases)
    reports.append(bracket)
    return reports


def cmd_verify(exp: Experiment, workers: int, stencil_fault: bool = False) -> tuple[ResultBundle, bool]:
    del workers  # checks are cheap and deterministic; kept serial
    reports = _verify_reports(exp, stencil_fault=stencil_fault)
    bundle = ResultBundle(_manifest(exp))
    bundle.add_object("verify", [rep.to_dict() for rep in reports])
    lines = [rep.summary() for rep in reports]
    ok = all(rep.passed for rep in reports)
    lines.append("overall: " + ("pass" if ok else "FAIL"))
    text = "\n".join(lines) + "\n"
    bundle.add_text("verify", text)
    bundle.add_table("verify_summary", ("check", "passed", "executed", "failed", "skipped"),
                     [(rep.name, rep.passed, len(rep.executed), len(rep.failures),
                       len(rep.skipped)) for rep in reports])
    print(text, end="")
    return bundle, ok


def cmd_localize(exp: Experiment, workers: int) -> ResultBundle:
    del workers
    sec = exp.section("localize")
    energies = np.linspace(sec["energy_min"], sec["energy_max"], sec["energy_points"])
    rng = realization_stream(exp.master_seed, 0)
    gamma = lyapunov_curve(exp.model, rng, energies, chain_cells=sec["chain_cells"],
                           points_per_cell=exp.grid.points_per_cell)

    grid = replace(exp.grid, box_length=sec["box_length"])
    cfg = EnsembleConfig(exp.master_seed, 1, exp.model, grid)
    op = assemble(exp.model, draw_realization(cfg, 0), grid)
    glo, _ = op.gershgorin()
    lams = eigenvalues_in(op, SpectralWindow(glo, float(energies[-1])),
                          max_count=op.n)[: sec["states"]]
    state_e, rates, fits, parts = [], [], [], []
    decay_series = []
    for i, lam in enumerate(lams):
        try:
            pair = eigenpair(op, float(lam))
            fit = decay_rate(pair)
        except (ConvergenceError, AnalysisError):
            continue
        state_e.append(pair.value)
        rates.append(fit.rate)
        fits.append(fit.r_squared)
        parts.append(participation_ratio(pair))
        decay_series.append(Series(f"state {i + 1}", op.positions,
                                   np.abs(pair.vector) + 1e-300))
    result = LocalizationReport(energies=energies, gamma=gamma,
                                chain_cells=sec["chain_cells"],
                                state_energies=np.array(state_e),
                                decay_rates=np.array(rates),
                                decay_r_squared=np.array(fits),
                                participation=np.array(parts))

    bundle = ResultBundle(_manifest(exp))
    bundle.add_table("gamma", ("E", "gamma"), list(zip(result.energies, result.gamma)))
    bundle.add_plot("gamma", line_plot([Series("gamma", result.energies, result.gamma)],
                                       title="Lyapunov exponent", xlabel="E",
                                       ylabel="gamma(E)"))
    bundle.add_table("decay", ("state", "E", "rate", "r_squared", "participation"),
                     [(i + 1, e, r, q, p) for i, (e, r, q, p) in
                      enumerate(zip(result.state_energies, result.decay_rates,
                                    result.decay_r_squared, result.participation))])
    if decay_series:
        bundle.add_plot("decay", line_plot(decay_series, title="eigenfunction envelopes",
                                           xlabel="x", ylabel="|psi|", logy=True))
    return bundle


def main(argv=None) -> int:
    args = _parser().parse_args(argv)
    try:
        exp = _experiment(args)
        workers = resolve_workers(args.workers)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    try:
        if args.command == "ids":
            bundle = cmd_ids(exp, workers)
            code = EXIT_OK
        elif args.command == "wegner":
            bundle = cmd_wegner(exp, workers)
            code = EXIT_OK
        elif args.command == "verify":
            bundle, ok = cmd_verify(exp, workers,
                                    stencil_fault=args.inject_broken_stencil)
            code = EXIT_OK if ok else EXIT_VERIFY
        else:
            bundle = cmd_localize(exp, workers)
            code = EXIT_OK
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (ModelError, OperatorError, SpectralError, AnalysisError, StatisticError,
            ConvergenceError) as exc:
        print(f"numerical fault: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    for path in bundle.write(args.out):
        print(f"wrote {path}", file=sys.stderr)
    return code


if __name__ == "__main__":
    sys.exit(main())
