"""Randomized structure-verification suite.

Runs the seeded checks behind the `verify` experiment: pointwise model
identities (fluctuation-dissipation, positive semidefiniteness, bounded
velocity, classical limits), operator structure on a grid (antisymmetry,
symmetry, positivity, degeneracy, mass conservation), the finite-dimensional
Jacobi identity, functional-derivative consistency, refinement orders, and
the dual-assembly identities of both solvers.  Every check reports a
measured value against its tolerance; the suite is deterministic in the
seed, so two runs produce byte-identical reports.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import generic as G
from . import heat as HT
from .config import VerifyOptions
from .grid import LineGrid, PhaseGrid
from .kfp import KfpOperator
from .model import (HarmonicPotential, ModelParams, Potential, Variant,
                    ZeroPotential, boltzmann_weight, diffusion_matrix,
                    maxwellian, mobility_drift, mobility_drift_divergence,
                    velocity)
from .rng import SplitMix64


@dataclass
class CheckResult:
    name: str
    measured: float
    tolerance: float
    op: str          # "<=" or ">="
    passed: bool
    note: str = ""


def _check(name, measured, tolerance, op="<=", note="") -> CheckResult:
    ok = measured <= tolerance if op == "<=" else measured >= tolerance
    return CheckResult(name=name, measured=float(measured), tolerance=float(tolerance),
                       op=op, passed=bool(ok), note=note)


# ---------------------------------------------------------------------------
# random field helpers

def random_field(rng: SplitMix64, shape) -> np.ndarray:
    return rng.uniforms(int(np.prod(shape)), -1.0, 1.0).reshape(shape)


def random_cotangent(rng: SplitMix64, grid: PhaseGrid) -> G.CotangentVector:
    return G.CotangentVector(xi=random_field(rng, grid.shape), r=rng.uniform(-1.0, 1.0))


def random_state(rng: SplitMix64, grid: PhaseGrid, params: ModelParams,
                 potential: Potential) -> G.State:
    """Positive mass-1 state: Boltzmann envelope times a bounded random factor."""
    rhat, _ = boltzmann_weight(grid, params, potential)
    w = (rng.uniform(-0.5, 0.5) * np.sin(2 * np.pi * grid.q_mesh / grid.Lq
                                         + rng.uniform(0, 2 * np.pi))
         * np.exp(-0.5 * (grid.p_mesh - rng.uniform(-1, 1)) ** 2)
         + rng.uniform(-0.5, 0.5) * np.cos(4 * np.pi * grid.q_mesh / grid.Lq
                                           + rng.uniform(0, 2 * np.pi))
         * np.exp(-0.25 * (grid.p_mesh - rng.uniform(-1, 1)) ** 2))
    rho = rhat * np.exp(w)
    rho = rho / (float(np.sum(rho)) * grid.cell_volume)
    return G.State(rho=rho, e=rng.uniform(-1.0, 1.0))


# ---------------------------------------------------------------------------
# check groups

def model_checks(rng: SplitMix64, n_samples: int) -> list[CheckResult]:
    out = []
    params = ModelParams(m=1.3, c=0.9, gamma=1.0, theta=1.0, d=3)
    mc = params.m * params.c

    p = rng.uniforms(n_samples * 3, -10.0 * mc, 10.0 * mc).reshape(-1, 3)
    drift = mobility_drift(p, Variant.DH, params)
    resid = np.linalg.norm(drift - p / params.m, axis=-1)
    allowance = 1.0 + np.linalg.norm(p, axis=-1) / params.m
    out.append(_check("fluctuation-dissipation |D grad_p H - p/m| (DH)",
                      float((resid / allowance).max()), 1e-12,
                      note=f"{n_samples} momenta, d=3"))

    xi = rng.uniforms(n_samples * 3, -1.0, 1.0).reshape(-1, 3)
    dm = diffusion_matrix(p, Variant.DH, params)
    quad = np.einsum("ni,nij,nj->n", xi, dm, xi)
    out.append(_check("diffusion matrix PSD: min xi^T D xi / |xi|^2",
                      float((quad / np.sum(xi * xi, axis=-1)).min()), -1e-14,
                      op=">=", note=f"{n_samples} (p, xi) pairs"))

    speed = np.linalg.norm(velocity(p, params), axis=-1)
    big = np.linalg.norm(velocity(np.array([[1e6, 0.0, 0.0]]), params), axis=-1)
    out.append(_check("bounded velocity: max |grad_p H| / c",
                      float(max(speed.max(), big.max()) / params.c), 1.0 - 1e-15))

    fast = ModelParams(m=1.0, c=1e6, gamma=1.0, theta=1.0, d=3)
    pf = rng.uniforms(64 * 3, -5.0, 5.0).reshape(-1, 3)
    vel_dev = np.linalg.norm(velocity(pf, fast) - pf / fast.m, axis=-1) \
        / np.linalg.norm(pf / fast.m, axis=-1)
    dm_dev = np.abs(diffusion_matrix(pf, Variant.DH, fast) - np.eye(3)).max()
    out.append(_check("classical limit c=1e6: velocity vs p/m", float(vel_dev.max()), 1e-6))
    out.append(_check("classical limit c=1e6: D(p) vs identity", float(dm_dev), 1e-6))

    div = mobility_drift_divergence(p, Variant.DMR, params)
    out.append(_check("DMR divergence bound: max(div - d/m)",
                      float((div - params.d / params.m).max()), 1e-14))
    return out


def operator_checks(rng: SplitMix64, grid: PhaseGrid, params: ModelParams,
                    potential: Potential, opts: VerifyOptions,
                    drift_perturbation: float = 0.0) -> list[CheckResult]:
    out = []
    states = [random_state(rng, grid, params, potential) for _ in range(5)]

    worst_l = worst_m = 0.0
    for k in range(opts.bracket_pairs):
        state = states[k % len(states)]
        v1, v2 = random_cotangent(rng, grid), random_cotangent(rng, grid)
        b12 = G.poisson_bracket(state, v1, v2, grid)
        b21 = G.poisson_bracket(state, v2, v1, grid)
        scale = abs(b12) + abs(b21) + 1e-300
        worst_l = max(worst_l, abs(b12 + b21) / scale)
        for variant in (Variant.DH, Variant.DMR):
            m12 = G.dissipative_bracket(state, v1, v2, grid, params, potential, variant)
            m21 = G.dissipative_bracket(state, v2, v1, grid, params, potential, variant)
            scale = abs(m12) + abs(m21) + 1e-300
            worst_m = max(worst_m, abs(m12 - m21) / scale)
    out.append(_check("Poisson bracket antisymmetry (relative)", worst_l, 1e-12,
                      note=f"{opts.bracket_pairs} pairs"))
    out.append(_check("dissipative bracket symmetry (relative)", worst_m, 1e-12,
                      note=f"{opts.bracket_pairs} pairs, both variants"))

    worst_psd = np.inf
    for k in range(opts.psd_samples):
        state = states[k % len(states)]
        variant = Variant.DH if k % 2 == 0 else Variant.DMR
        v = random_cotangent(rng, grid)
        quad = G.dissipative_bracket(state, v, v, grid, params, potential, variant)
        gh, dface, rhat, rhat_face = G.dissipative_faces(grid, params, potential, variant)
        rho_f = G.dissipative_face_density(state, rhat, rhat_face)
        gxi = G.face_grad_p(grid, v.xi)
        scale = params.gamma * float(np.sum(
            dface * rho_f * (np.abs(gxi) + abs(v.r) * np.abs(gh)) ** 2)) \
            * grid.cell_volume + 1e-300
        worst_psd = min(worst_psd, quad / scale)
    out.append(_check("dissipative bracket positivity: min [v,v]/scale",
                      worst_psd, -1e-14, op=">=", note=f"{opts.psd_samples} vectors"))

    worst_deg = 0.0
    worst_mass = 0.0
    for k in range(20):
        state = states[k % len(states)]
        variant = Variant.DH if k % 2 == 0 else Variant.DMR
        v_e = G.gradient_energy(state, grid, params, potential)
        m_rho, m_e = G.apply_dissipative(state, v_e, grid, params, potential, variant,
                                         drift_perturbation=drift_perturbation)
        half_rho, half_e = G.apply_dissipative(
            state, G.CotangentVector(v_e.xi, 0.0), grid, params, potential, variant)
        ref = math.sqrt(G.grid_norm(grid, half_rho) ** 2 + half_e**2) + 1e-300
        worst_deg = max(worst_deg,
                        math.sqrt(G.grid_norm(grid, m_rho) ** 2 + m_e**2) / ref)
        v = random_cotangent(rng, grid)
        l_rho, _ = G.apply_poisson(state, v, grid)
        d_rho, _ = G.apply_dissipative(state, v, grid, params, potential, variant)
        for tend in (l_rho, d_rho):
            scale = float(np.sum(np.abs(tend))) * grid.cell_volume + 1e-300
            worst_mass = max(worst_mass,
                             abs(float(np.sum(tend)) * grid.cell_volume) / scale)
    out.append(_check("degeneracy |M dE| / |M (H,0)|", worst_deg, 1e-12,
                      note="20 states, both variants"))
    out.append(_check("operator mass conservation (relative)", worst_mass, 1e-12))
    return out


def jacobi_checks(rng: SplitMix64) -> list[CheckResult]:
    out = []
    j2 = np.array([[0.0, -1.0], [1.0, 0.0]])

    def quad_fn(a, b, cvec):
        return lambda z: float(z @ a @ z + b @ z + cvec)

    a1 = random_field(rng, (2, 2)); a2 = random_field(rng, (2, 2)); a3 = random_field(rng, (2, 2))
    fns = [quad_fn(0.5 * (a + a.T), random_field(rng, (2,)), rng.uniform())
           for a in (a1, a2, a3)]
    z = random_field(rng, (2,))
    resid, _ = G.jacobi_residual_fd(j2, *fns, z=z)
    out.append(_check("Jacobi residual: quadratic observables, canonical J",
                      resid, 1e-10))

    n = 4
    lraw = random_field(rng, (n, n))
    lmat = lraw - lraw.T
    coeffs = [random_field(rng, (n, n, n)) for _ in range(3)]

    def cubic_fn(c3):
        sym = (c3 + np.transpose(c3, (0, 2, 1)) + np.transpose(c3, (1, 0, 2))
               + np.transpose(c3, (1, 2, 0)) + np.transpose(c3, (2, 0, 1))
               + np.transpose(c3, (2, 1, 0))) / 6.0
        return lambda z: float(np.einsum("ijk,i,j,k->", sym, z, z, z))

    fns = [cubic_fn(c) for c in coeffs]
    z = random_field(rng, (n,))
    resid, scale = G.jacobi_residual_fd(lmat, *fns, z=z)
    out.append(_check("Jacobi residual: cubic observables, random antisymmetric L",
                      resid / scale, 1e-4, note="n=4"))

    constant = lambda z: 1.5
    resid, _ = G.jacobi_residual_fd(
        j2,
        quad_fn(0.5 * (a1 + a1.T), random_field(rng, (2,)), 0.0),
        quad_fn(0.5 * (a2 + a2.T), random_field(rng, (2,)), 0.0),
        constant,
        z=random_field(rng, (2,)))
    out.append(_check("Jacobi residual: constant observable", resid, 1e-12))
    return out


def gradient_checks(rng: SplitMix64, grid: PhaseGrid, params: ModelParams,
                    potential: Potential, n_checks: int) -> list[CheckResult]:
    out = []
    worst_e = worst_s = 0.0
    for _ in range(n_checks):
        state = random_state(rng, grid, params, potential)
        delta = random_field(rng, grid.shape) * state.rho   # keeps rho positive
        de = rng.uniform(-1.0, 1.0)
        eps = 1e-5
        plus = G.State(state.rho + eps * delta, state.e + eps * de)
        minus = G.State(state.rho - eps * delta, state.e - eps * de)

        v = G.gradient_energy(state, grid, params, potential)
        fd = (G.energy_functional(plus, grid, params, potential)
              - G.energy_functional(minus, grid, params, potential)) / (2 * eps)
        predicted = G.inner(grid, v.xi, delta) + v.r * de
        worst_e = max(worst_e, abs(fd - predicted) / (abs(fd) + 1e-300))

        v = G.gradient_entropy(state, grid, params)
        fd = (G.entropy_functional(plus, grid, params)
              - G.entropy_functional(minus, grid, params)) / (2 * eps)
        predicted = G.inner(grid, v.xi, delta) + v.r * de
        worst_s = max(worst_s, abs(fd - predicted) / (abs(fd) + 1e-300))
    out = [_check("energy gradient vs directional finite difference", worst_e, 1e-6,
                  note=f"{n_checks} perturbations"),
           _check("entropy gradient vs directional finite difference", worst_s, 1e-6,
                  note=f"{n_checks} perturbations")]
    return out


def refinement_checks() -> list[CheckResult]:
    """L dS and transport-at-Maxwellian residuals under grid refinement."""
    out = []
    params = ModelParams(m=1.0, c=1.0, gamma=0.5, theta=1.0)
    pot = ZeroPotential()
    resid = []
    for n in (32, 64, 128):
        grid = PhaseGrid(Nq=n, Np=n, Lq=16.0, Pmax=10.0)
        w = 0.4 * np.sin(2 * np.pi * grid.q_mesh / grid.Lq) \
            * np.exp(-0.125 * grid.p_mesh**2)
        rho = np.exp(-0.5 * grid.p_mesh**2) * np.exp(w)
        rho /= float(np.sum(rho)) * grid.cell_volume
        deg_l, _ = G.degeneracy_residuals(G.State(rho, 0.0), grid, params, pot,
                                          Variant.DH)
        resid.append(deg_l)
    slope = -float(np.polyfit(np.log([1.0, 2.0, 4.0]), np.log(resid), 1)[0])
    out.append(_check("L dS refinement order in [1.7, 2.3] (32/64/128)",
                      slope, 1.7, op=">=",
                      note=f"residuals {resid[0]:.3e} {resid[1]:.3e} {resid[2]:.3e}"))
    out.append(_check("L dS refinement order upper bound", slope, 2.3))

    rel = ModelParams(m=1.0, c=4.0, gamma=0.5, theta=1.0)
    a = rel.theta * (-math.log(1e-14) + 1.0)
    pmax = math.sqrt((rel.m * rel.c + a / rel.c) ** 2 - (rel.m * rel.c) ** 2) * 1.01
    hpot = HarmonicPotential(stiffness=1.0)
    qe = math.sqrt(2.0 * a / hpot.stiffness) * 1.01
    resid = []
    for n in (32, 64, 128):
        grid = PhaseGrid(Nq=n, Np=n, Lq=2 * qe, Pmax=pmax)
        rinf, _ = maxwellian(grid, rel, hpot)
        v_e = G.gradient_energy(G.State(rinf, 0.0), grid, rel, hpot)
        l_rho, _ = G.apply_poisson(G.State(rinf, 0.0), v_e, grid)
        resid.append(G.grid_norm(grid, l_rho))
    slope = -float(np.polyfit(np.log([1.0, 2.0, 4.0]), np.log(resid), 1)[0])
    out.append(_check("transport residual at Maxwellian: refinement order",
                      slope, 1.7, op=">=",
                      note=f"residuals {resid[0]:.3e} {resid[1]:.3e} {resid[2]:.3e}"))
    return out


def assembly_checks(rng: SplitMix64, grid: PhaseGrid, params: ModelParams,
                    potential: Potential, n_states: int) -> list[CheckResult]:
    out = []
    worst = 0.0
    for k in range(n_states):
        state = random_state(rng, grid, params, potential)
        for variant in (Variant.DH, Variant.DMR):
            op = KfpOperator(grid, params, potential, variant)
            drho1, de1 = op.rhs(state)
            v_e = G.gradient_energy(state, grid, params, potential)
            v_s = G.gradient_entropy(state, grid, params)
            l_rho, l_e = G.apply_poisson(state, v_e, grid)
            m_rho, m_e = G.apply_dissipative(state, v_s, grid, params, potential, variant)
            drho2, de2 = l_rho + m_rho, l_e + m_e
            scale = max(np.abs(drho1).max(), np.abs(drho2).max(),
                        abs(de1), abs(de2), 1e-300)
            worst = max(worst, float(np.abs(drho1 - drho2).max()) / scale,
                        abs(de1 - de2) / scale)
    out.append(_check("kinetic dual assembly: rhs vs L dE + M dS", worst, 1e-10,
                      note=f"{n_states} states, both variants"))

    hgrid = LineGrid(N=64, L=2.0)
    hparams = ModelParams(m=1.0, c=1.0, gamma=1.0, theta=1.0, nu=1.0)
    worst = 0.0
    for _ in range(n_states):
        rho = 0.2 + rng.uniforms(hgrid.N)
        r1 = HT.heat_rhs(rho, hgrid, hparams)
        r2 = HT.heat_rhs_via_potential(rho, hgrid, hparams)
        scale = float(np.abs(r1).max()) + 1e-300
        worst = max(worst, float(np.abs(r1 - r2).max()) / scale)
    out.append(_check("heat dual assembly: flux form vs dissipation potential",
                      worst, 1e-12, note=f"{n_states} positive states"))
    return out


# ---------------------------------------------------------------------------
# suite driver

def run_verify(grid: PhaseGrid, params: ModelParams, potential: Potential,
               seed: int, opts: VerifyOptions,
               drift_perturbation: float = 0.0):
    """Run all enabled check groups; returns (results, report_text, all_passed)."""
    rng = SplitMix64(seed)
    results: list[CheckResult] = []
    results += model_checks(rng, opts.fd_samples)
    results += operator_checks(rng, grid, params, potential, opts,
                               drift_perturbation=drift_perturbation)
    if opts.jacobi:
        results += jacobi_checks(rng)
    results += gradient_checks(rng, grid, params, potential, opts.gradient_checks)
    if opts.refinement:
        results += refinement_checks()
    results += assembly_checks(rng, grid, params, potential, opts.assembly_states)
    return results, format_report(results, seed), all(r.passed for r in results)


def format_report(results, seed: int) -> str:
    width = max(len(r.name) for r in results) + 2
    lines = [f"structure verification report (seed {seed})",
             "=" * (width + 42)]
    for r in results:
        status = "PASS" if r.passed else "FAIL"
        lines.append(f"{r.name:<{width}}{r.measured: .6e} {r.op} "
                     f"{r.tolerance: .1e}  {status}"
                     + (f"  [{r.note}]" if r.note else ""))
    lines.append("=" * (width + 42))
    n_fail = sum(not r.passed for r in results)
    lines.append(f"{len(results) - n_fail}/{len(results)} checks passed"
                 + ("" if n_fail == 0 else f", {n_fail} FAILED"))
    return "\n".join(lines) + "\n"
