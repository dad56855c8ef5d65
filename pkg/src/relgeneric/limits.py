"""Newtonian-limit study: sweep the speed of light against a classical baseline.

All runs in a sweep share the identical initial data and the identical time
step (the most restrictive stability bound across the sweep), so measured
deviations isolate the c-dependence of the dynamics.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import heat as HT
from .config import RunConfig
from .grid import LineGrid
from .kfp import KfpOperator, State, make_initial_state, step_kfp
from .model import INFINITE, ModelParams, Variant


@dataclass
class LimitResult:
    kind: str
    deviations: list          # (c, max-norm deviation from classical) pairs
    monotone: bool


def _with_c(params: ModelParams, c: float) -> ModelParams:
    return ModelParams(m=params.m, c=c, gamma=params.gamma, theta=params.theta,
                       nu=params.nu, d=params.d)


def heat_initial(cfg: RunConfig, grid: LineGrid) -> np.ndarray:
    sigma = cfg.heat_sigma if cfg.heat_sigma is not None else grid.L / 10.0
    width = cfg.heat_width if cfg.heat_width is not None else grid.L / 4.0
    return HT.initial_profile(cfg.heat_init_kind, grid, sigma=sigma, width=width)


def run_limit_heat(cfg: RunConfig) -> LimitResult:
    grid = cfg.heat_grid
    rho0 = heat_initial(cfg, grid)
    sweep = [_with_c(cfg.params, c) for c in cfg.limit_cs]
    baseline = _with_c(cfg.params, INFINITE)
    dt = min(HT.stable_dt(grid, p) for p in sweep + [baseline])
    if cfg.dt is not None:
        dt = min(dt, cfg.dt)

    def final_density(params):
        res = HT.run_heat(grid, params, rho0, dt, cfg.t_final, record_every=10**9)
        return res.state.rho

    rho_classical = final_density(baseline)
    deviations = [(p.c, float(np.abs(final_density(p) - rho_classical).max()))
                  for p in sweep]
    devs = [d for _, d in deviations]
    monotone = all(b < a for a, b in zip(devs, devs[1:]))
    return LimitResult(kind="heat", deviations=deviations, monotone=monotone)


def run_limit_kfp(cfg: RunConfig) -> LimitResult:
    grid = cfg.phase_grid
    baseline = _with_c(cfg.params, INFINITE)
    sweep = [(_with_c(cfg.params, c), Variant.DH) for c in cfg.limit_cs]
    runs = sweep + [(baseline, Variant.CLASSICAL)]
    # identical initial data: built once from the classical parameters
    state0 = make_initial_state(cfg.init, grid, baseline, cfg.potential)
    ops = [KfpOperator(grid, p, cfg.potential, v) for p, v in runs]
    dt = min(op.stable_dt() for op in ops)
    if cfg.dt is not None:
        dt = min(dt, cfg.dt)
    # identical equal-step schedule for every member of the sweep
    n_steps = max(1, math.ceil(cfg.t_final / dt - 1e-12))
    step_dt = cfg.t_final / n_steps

    def final_density(op):
        state = State(rho=state0.rho.copy(), e=state0.e)
        for _ in range(n_steps):
            state = step_kfp(state, op, step_dt)
        return state.rho

    rho_classical = final_density(ops[-1])
    deviations = [(p.c, float(np.abs(final_density(op) - rho_classical).max()))
                  for (p, _), op in zip(sweep, ops[:-1])]
    devs = [d for _, d in deviations]
    monotone = all(b < a for a, b in zip(devs, devs[1:]))
    return LimitResult(kind="kfp", deviations=deviations, monotone=monotone)


def run_limit_study(cfg: RunConfig) -> LimitResult:
    if cfg.limit_kind == "heat":
        return run_limit_heat(cfg)
    return run_limit_kfp(cfg)


def write_limit_csv(result: LimitResult, path) -> None:
    lines = ["c,deviation"]
    for c, dev in result.deviations:
        lines.append(f"{format(c, '.17g')},{format(dev, '.17g')}")
    try:
        with open(path, "w", encoding="utf-8") as fh:
            fh.write("\n".join(lines) + "\n")
    except OSError as exc:
        raise OSError(f"failed to write limit study to {path}: {exc}") from exc
