"""Command-line front end.

    relgeneric <experiment> --config <path> [--out <dir>] [--seed <u64>]

Experiments: heat, kfp, verify, stationary, limit-study.  Exit status 0
means the run completed and every built-in check passed, 1 means a check
failed (or the solver aborted), 2 means the configuration was rejected.
"""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

import numpy as np

from . import heat as HT
from . import kfp as KF
from .config import EXPERIMENTS, ConfigError, RunConfig, load_config
from .errors import NonConvergenceError, PositivityError, StabilityError
from .generic import DiagnosticsRecord
from .io import dump_density, write_timeseries_csv
from .limits import heat_initial, run_limit_study, write_limit_csv
from .verify import run_verify


def _out_dir(cfg: RunConfig, override) -> Path:
    path = Path(override) if override else Path(cfg.out_dir)
    path.mkdir(parents=True, exist_ok=True)
    return path


def _print_checks(checks) -> bool:
    ok = True
    for name, passed, detail in checks:
        print(f"  [{'PASS' if passed else 'FAIL'}] {name}: {detail}")
        ok &= passed
    return ok


def _dump_cadence(cfg: RunConfig, out: Path, kind: str, grid):
    """Returns a hook writing density_NNNN.txt every dump_every-th record."""
    if cfg.dump_every <= 0:
        return lambda rho, t, index: None

    def hook(rho, t, index):
        if index % cfg.dump_every == 0:
            dump_density(kind, grid, rho, t, out / f"density_{index:04d}.txt")
    return hook


def _run_heat(cfg: RunConfig, out: Path) -> int:
    grid, params = cfg.heat_grid, cfg.params
    rho0 = heat_initial(cfg, grid)
    dt = cfg.dt if cfg.dt is not None else HT.stable_dt(grid, params)
    dump = _dump_cadence(cfg, out, "heat", grid)
    counter = {"n": 0}

    def on_record(state):
        dump(state.rho, state.t, counter["n"])
        counter["n"] += 1
        return DiagnosticsRecord(
            t=state.t, E=0.0, S=HT.boltzmann_entropy(state.rho, grid),
            mass=float(np.sum(state.rho)) * grid.h,
            dSdt=HT.entropy_rate(state.rho, grid, params),
            degL=0.0, degM=0.0, relEnt=None, e=0.0)

    result = HT.run_heat(grid, params, rho0, dt, cfg.t_final,
                         cfg.record_every, on_record=on_record)
    write_timeseries_csv(result.records, out / "timeseries.csv")
    dump_density("heat", grid, result.state.rho, result.state.t,
                 out / "density_final.txt")
    masses = [r.mass for r in result.records]
    checks = [
        ("mass drift <= 1e-10",
         max(abs(m - masses[0]) for m in masses) <= 1e-10,
         f"{max(abs(m - masses[0]) for m in masses):.3e}"),
        ("entropy non-decreasing per step within -1e-10",
         result.min_step_entropy_delta >= -1e-10,
         f"min step delta {result.min_step_entropy_delta:.3e}"),
        ("face-flux saturation |F| <= c rbar",
         result.max_saturation_excess <= 1e-12,
         f"max relative excess {result.max_saturation_excess:.3e}"),
    ]
    print(f"heat run finished at t={result.state.t:g} "
          f"({len(result.records)} records) -> {out}")
    return 0 if _print_checks(checks) else 1


def _kfp_checks(cfg: RunConfig, res: KF.KfpRunResult):
    records = res.records
    e0 = records[0].E
    entropies = [r.S for r in records]
    rel = [r.relEnt for r in records]
    bound = cfg.params.gamma * cfg.params.theta * cfg.params.d / cfg.params.m
    return [
        ("mass drift <= 1e-10",
         max(abs(r.mass - records[0].mass) for r in records) <= 1e-10,
         f"{max(abs(r.mass - records[0].mass) for r in records):.3e}"),
        ("relative energy drift <= 1e-6",
         max(abs(r.E - e0) for r in records) / abs(e0) <= 1e-6,
         f"{max(abs(r.E - e0) for r in records) / abs(e0):.3e}"),
        ("entropy non-decreasing per sample within -1e-8",
         min(np.diff(entropies), default=0.0) >= -1e-8,
         f"min sample delta {min(np.diff(entropies), default=0.0):.3e}"),
        ("relative entropy non-increasing per sample within +1e-8",
         max(np.diff(rel), default=0.0) <= 1e-8,
         f"max sample rise {max(np.diff(rel), default=0.0):.3e}"),
        ("d/dt int H rho <= gamma theta d/m + 1e-10",
         max(a["dHrho_dt"] for a in res.aux) <= bound + 1e-10,
         f"max {max(a['dHrho_dt'] for a in res.aux):.6f} vs bound {bound:.6f}"),
    ]


def _dump_kfp(cfg: RunConfig, res: KF.KfpRunResult, out: Path) -> None:
    write_timeseries_csv(res.records, out / "timeseries.csv")
    dump_density("kfp", cfg.phase_grid, res.state.rho, res.t_end,
                 out / "density_final.txt")


def _kfp_dump_hook(cfg: RunConfig, out: Path):
    dump = _dump_cadence(cfg, out, "kfp", cfg.phase_grid)
    return lambda state, t, index: dump(state.rho, t, index)


def _run_kfp(cfg: RunConfig, out: Path) -> int:
    kcfg = KF.KfpConfig(grid=cfg.phase_grid, params=cfg.params,
                        potential=cfg.potential, variant=cfg.variant,
                        dt=cfg.dt, t_final=cfg.t_final,
                        record_every=cfg.record_every, init=cfg.init)
    res = KF.run_kfp(kcfg, on_record=_kfp_dump_hook(cfg, out))
    _dump_kfp(cfg, res, out)
    print(f"kfp run ({cfg.variant.value}) finished at t={res.t_end:g} "
          f"({len(res.records)} records) -> {out}")
    return 0 if _print_checks(_kfp_checks(cfg, res)) else 1


def _run_stationary(cfg: RunConfig, out: Path) -> int:
    kcfg = KF.KfpConfig(grid=cfg.phase_grid, params=cfg.params,
                        potential=cfg.potential, variant=cfg.variant,
                        dt=cfg.dt, t_final=cfg.t_final,
                        record_every=cfg.record_every, init=cfg.init)
    res = KF.run_to_stationarity(kcfg, l1_target=cfg.l1_target,
                                 on_record=_kfp_dump_hook(cfg, out))
    _dump_kfp(cfg, res, out)
    print(f"stationary run ({cfg.variant.value}) ended at t={res.t_end:g}, "
          f"L1 distance {res.aux[-1]['l1']:.3e}, excess e_inf={res.e_inf:.6g} -> {out}")
    checks = _kfp_checks(cfg, res) + [
        (f"converged to L1 <= {cfg.l1_target:g}", res.converged,
         f"final L1 {res.aux[-1]['l1']:.3e} at t={res.t_end:g}")]
    return 0 if _print_checks(checks) else 1


def _run_verify(cfg: RunConfig, out: Path) -> int:
    results, report, ok = run_verify(cfg.phase_grid, cfg.params, cfg.potential,
                                     cfg.seed, cfg.verify)
    (out / "verify_report.txt").write_text(report, encoding="utf-8")
    print(report, end="")
    return 0 if ok else 1


def _run_limit(cfg: RunConfig, out: Path) -> int:
    result = run_limit_study(cfg)
    write_limit_csv(result, out / "limit_study.csv")
    for c, dev in result.deviations:
        print(f"  c={c:g}: max-norm deviation from classical {dev:.6e}")
    checks = [("deviation strictly decreasing in c", result.monotone,
               "monotone" if result.monotone else "NOT monotone")]
    print(f"limit study ({result.kind}) -> {out}")
    return 0 if _print_checks(checks) else 1


_RUNNERS = {"heat": _run_heat, "kfp": _run_kfp, "stationary": _run_stationary,
            "verify": _run_verify, "limit-study": _run_limit}


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="relgeneric",
        description="Structure-preserving relativistic heat / kinetic "
                    "Fokker-Planck experiments")
    sub = parser.add_subparsers(dest="experiment", required=True)
    for name in EXPERIMENTS:
        p = sub.add_parser(name)
        p.add_argument("--config", required=True, help="path to a config file")
        p.add_argument("--out", default=None, help="output directory")
        p.add_argument("--seed", type=int, default=None,
                       help="override the config seed")
    args = parser.parse_args(argv)

    try:
        cfg = load_config(args.config, args.experiment)
        if args.seed is not None:
            if args.seed < 0:
                raise ConfigError("--seed must be >= 0")
            cfg.seed = args.seed
    except ConfigError as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return 2

    out = _out_dir(cfg, args.out)
    try:
        return _RUNNERS[args.experiment](cfg, out)
    except (StabilityError, PositivityError, NonConvergenceError, ValueError) as exc:
        print(f"run failed: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
