import math

import numpy as np
import pytest

from relgeneric import generic as G
from relgeneric.grid import PhaseGrid
from relgeneric.model import (HarmonicPotential, ModelParams, Variant,
                              ZeroPotential, hamiltonian, maxwellian)
from relgeneric.rng import SplitMix64

from conftest import make_state

ZERO = ZeroPotential()


# ---------------------------------------------------------------------------
# discrete calculus: the single adjointness property everything rests on

def test_grad_div_exact_adjointness(grid, rng):
    a = rng.uniforms(grid.Nq * grid.Np, -1, 1).reshape(grid.shape)
    b = rng.uniforms(grid.Nq * grid.Np, -1, 1).reshape(grid.shape)
    scale = G.grid_norm(grid, a) * G.grid_norm(grid, b)
    assert abs(G.inner(grid, a, G.div_q(grid, b))
               + G.inner(grid, G.grad_q(grid, a), b)) <= 1e-13 * scale
    assert abs(G.inner(grid, a, G.div_p(grid, b))
               + G.inner(grid, G.grad_p(grid, a), b)) <= 1e-13 * scale
    f = rng.uniforms(grid.Nq * (grid.Np - 1), -1, 1).reshape(grid.Nq, grid.Np - 1)
    lhs = G.inner(grid, a, G.face_div_p(grid, f))
    rhs = -float(np.sum(G.face_grad_p(grid, a) * f)) * grid.cell_volume
    assert abs(lhs - rhs) <= 1e-13 * scale


def test_gradients_annihilate_constants(grid):
    const = np.full(grid.shape, 2.7)
    assert np.all(G.grad_q(grid, const) == 0.0)
    assert np.all(G.grad_p(grid, const) == 0.0)
    assert np.all(G.face_grad_p(grid, const) == 0.0)


def test_log_mean():
    assert G.log_mean(np.array(3.0), np.array(3.0)) == pytest.approx(3.0)
    a, b = np.array(1.0), np.array(2.0)
    assert G.log_mean(a, b) == pytest.approx((2.0 - 1.0) / math.log(2.0), rel=1e-14)
    # near-equal arguments stay smooth (series branch)
    assert G.log_mean(np.array(1.0), np.array(1.0 + 1e-9)) == pytest.approx(1.0, rel=1e-9)
    # vacuum side gives zero
    assert G.log_mean(np.array(0.0), np.array(5.0)) == 0.0
    # between min and max always
    rng = SplitMix64(3)
    x = rng.uniforms(100, 1e-8, 10.0)
    y = rng.uniforms(100, 1e-8, 10.0)
    lm = G.log_mean(x, y)
    assert np.all(lm >= np.minimum(x, y) - 1e-15)
    assert np.all(lm <= np.maximum(x, y) + 1e-15)


# ---------------------------------------------------------------------------
# functionals

def test_energy_functional_kahan_oracle(grid, params, potential, state):
    val = G.energy_functional(state, grid, params, potential)
    h = hamiltonian(grid.q_mesh[..., None], grid.p_mesh[..., None], params, potential)
    terms = (h * state.rho).ravel()[::-1]   # reversed-order Kahan summation
    total = 0.0
    comp = 0.0
    for x in terms:
        y = x - comp
        t = total + y
        comp = (t - total) - y
        total = t
    oracle = total * grid.cell_volume + state.e
    assert val == pytest.approx(oracle, rel=1e-12)


def test_energy_linear_in_excess(grid, params, potential, state):
    base = G.energy_functional(state, grid, params, potential)
    shifted = G.State(state.rho, state.e + 5.0)
    assert G.energy_functional(shifted, grid, params, potential) == pytest.approx(base + 5.0)


def test_energy_delta_state(grid, params, potential):
    rho = np.zeros(grid.shape)
    rho[5, 7] = 1.0 / grid.cell_volume
    val = G.energy_functional(G.State(rho, 0.0), grid, params, potential)
    expected = hamiltonian(np.array([grid.q[5]]), np.array([grid.p[7]]),
                           params, potential)
    assert val == pytest.approx(float(expected), rel=1e-14)


def test_entropy_uniform_closed_form(grid, params):
    rho = np.full(grid.shape, 1.0 / (grid.Lq * 2.0 * grid.Pmax))
    s = G.entropy_functional(G.State(rho, 0.0), grid, params)
    assert s == pytest.approx(params.theta * math.log(grid.Lq * 2 * grid.Pmax), rel=1e-13)


def test_entropy_zero_cells_finite(grid, params):
    rho = np.full(grid.shape, 1.0 / (grid.Lq * 2.0 * grid.Pmax))
    rho[0, 0] = 0.0
    assert math.isfinite(G.entropy_functional(G.State(rho, 0.0), grid, params))


def test_entropy_linear_in_excess(grid, params, state):
    base = G.entropy_functional(state, grid, params)
    assert G.entropy_functional(G.State(state.rho, state.e + 2.0), grid, params) \
        == pytest.approx(base + 2.0)


def test_gradient_energy(grid, params, potential, state):
    v = G.gradient_energy(state, grid, params, potential)
    assert v.r == 1.0
    # with V=0 the p=0 row is the constant rest energy
    v0 = G.gradient_energy(state, grid, params, ZERO)
    j0 = int(np.argmin(np.abs(grid.p)))
    mc2 = params.m * params.c**2
    assert np.allclose(v0.xi[:, j0], math.sqrt(mc2**2 + (params.c * grid.p[j0]) ** 2),
                       rtol=1e-14)


def test_gradient_entropy_uniform_value(grid, params):
    rho = np.full(grid.shape, math.exp(-1.0))
    v = G.gradient_entropy(G.State(rho, 0.0), grid, params)
    assert v.r == 1.0
    assert np.abs(v.xi).max() <= 1e-14


def test_gradient_entropy_degenerate_signals(grid, params):
    rho = np.zeros(grid.shape)
    rho[0, 0] = 1.0 / grid.cell_volume
    with pytest.raises(ValueError):
        G.gradient_entropy(G.State(rho, 0.0), grid, params)


def test_functional_gradients_match_fd(grid, params, potential, rng):
    for _ in range(10):
        state = make_state(rng, grid, params, potential, e=rng.uniform(-1, 1))
        delta = rng.uniforms(grid.Nq * grid.Np, -1, 1).reshape(grid.shape) * state.rho
        de = rng.uniform(-1, 1)
        eps = 1e-5
        plus = G.State(state.rho + eps * delta, state.e + eps * de)
        minus = G.State(state.rho - eps * delta, state.e - eps * de)
        v = G.gradient_energy(state, grid, params, potential)
        fd = (G.energy_functional(plus, grid, params, potential)
              - G.energy_functional(minus, grid, params, potential)) / (2 * eps)
        assert G.inner(grid, v.xi, delta) + v.r * de == pytest.approx(fd, rel=1e-6)
        v = G.gradient_entropy(state, grid, params)
        fd = (G.entropy_functional(plus, grid, params)
              - G.entropy_functional(minus, grid, params)) / (2 * eps)
        assert G.inner(grid, v.xi, delta) + v.r * de == pytest.approx(fd, rel=1e-6)


# ---------------------------------------------------------------------------
# Poisson operator

def test_poisson_constant_covector(grid, state):
    v = G.CotangentVector(np.full(grid.shape, 3.3), 0.4)
    drho, de = G.apply_poisson(state, v, grid)
    assert np.all(drho == 0.0)
    assert de == 0.0


def test_poisson_bracket_antisymmetry(grid, params, potential, rng):
    for _ in range(25):
        state = make_state(rng, grid, params, potential)
        v1 = G.CotangentVector(rng.uniforms(grid.Nq * grid.Np, -1, 1).reshape(grid.shape),
                               rng.uniform(-1, 1))
        v2 = G.CotangentVector(rng.uniforms(grid.Nq * grid.Np, -1, 1).reshape(grid.shape),
                               rng.uniform(-1, 1))
        b12 = G.poisson_bracket(state, v1, v2, grid)
        b21 = G.poisson_bracket(state, v2, v1, grid)
        scale = abs(b12) + abs(b21) + 1e-300
        assert abs(b12 + b21) <= 1e-12 * scale
        bff = G.poisson_bracket(state, v1, v1, grid)
        assert abs(bff) <= 1e-12 * (2 * abs(b12) + 1e-300)


def test_poisson_mass_conserving(grid, state, rng):
    v = G.CotangentVector(rng.uniforms(grid.Nq * grid.Np, -1, 1).reshape(grid.shape), 0.0)
    drho, _ = G.apply_poisson(state, v, grid)
    assert abs(float(np.sum(drho)) * grid.cell_volume) \
        <= 1e-12 * float(np.sum(np.abs(drho))) * grid.cell_volume


def test_transport_at_maxwellian_refines_at_second_order():
    params = ModelParams(m=1.0, c=4.0, gamma=0.5, theta=1.0)
    pot = HarmonicPotential(stiffness=1.0)
    a = params.theta * (-math.log(1e-14) + 1.0)
    pmax = math.sqrt((params.m * params.c + a / params.c) ** 2
                     - (params.m * params.c) ** 2) * 1.01
    qe = math.sqrt(2 * a / pot.stiffness) * 1.01
    resid = []
    for n in (32, 64, 128):
        g = PhaseGrid(Nq=n, Np=n, Lq=2 * qe, Pmax=pmax)
        rinf, _ = maxwellian(g, params, pot)
        v = G.gradient_energy(G.State(rinf, 0.0), g, params, pot)
        drho, _ = G.apply_poisson(G.State(rinf, 0.0), v, g)
        resid.append(G.grid_norm(g, drho))
    order = math.log2(resid[1] / resid[2])
    assert 1.7 <= order <= 2.3


# ---------------------------------------------------------------------------
# dissipative operator

@pytest.mark.parametrize("variant", [Variant.DH, Variant.DMR])
def test_dissipative_energy_degeneracy_exact(grid, params, potential, state, variant):
    v_e = G.gradient_energy(state, grid, params, potential)
    drho, de = G.apply_dissipative(state, v_e, grid, params, potential, variant)
    assert np.all(drho == 0.0)
    assert de == 0.0


@pytest.mark.parametrize("variant", [Variant.DH, Variant.DMR])
def test_dissipative_symmetry_and_psd(grid, params, potential, rng, variant):
    for _ in range(25):
        state = make_state(rng, grid, params, potential)
        v1 = G.CotangentVector(rng.uniforms(grid.Nq * grid.Np, -1, 1).reshape(grid.shape),
                               rng.uniform(-1, 1))
        v2 = G.CotangentVector(rng.uniforms(grid.Nq * grid.Np, -1, 1).reshape(grid.shape),
                               rng.uniform(-1, 1))
        m12 = G.dissipative_bracket(state, v1, v2, grid, params, potential, variant)
        m21 = G.dissipative_bracket(state, v2, v1, grid, params, potential, variant)
        assert abs(m12 - m21) <= 1e-12 * (abs(m12) + abs(m21) + 1e-300)
        quad = G.dissipative_bracket(state, v1, v1, grid, params, potential, variant)
        assert quad >= -1e-14 * (abs(m12) + abs(quad) + 1e-300)


def test_dissipative_bracket_quadratic_form_identity(grid, params, potential, state, rng):
    # [v1, M v2] equals the face-quadrature of gamma D (gxi1 - r1 gH)(gxi2 - r2 gH) rho_f
    variant = Variant.DH
    v1 = G.CotangentVector(rng.uniforms(grid.Nq * grid.Np, -1, 1).reshape(grid.shape),
                           rng.uniform(-1, 1))
    v2 = G.CotangentVector(rng.uniforms(grid.Nq * grid.Np, -1, 1).reshape(grid.shape),
                           rng.uniform(-1, 1))
    bracket = G.dissipative_bracket(state, v1, v2, grid, params, potential, variant)
    gh, dface, rhat, rhat_face = G.dissipative_faces(grid, params, potential, variant)
    rho_f = G.dissipative_face_density(state, rhat, rhat_face)
    g1 = G.face_grad_p(grid, v1.xi) - v1.r * gh
    g2 = G.face_grad_p(grid, v2.xi) - v2.r * gh
    direct = params.gamma * float(np.sum(dface * rho_f * g1 * g2)) * grid.cell_volume
    assert bracket == pytest.approx(direct, rel=1e-12, abs=1e-15)


def test_dissipative_drift_perturbation_hook(grid, params, potential, state):
    v_e = G.gradient_energy(state, grid, params, potential)
    drho, de = G.apply_dissipative(state, v_e, grid, params, potential, Variant.DH,
                                   drift_perturbation=1e-6)
    assert float(np.abs(drho).max()) > 0.0


def test_degeneracy_residuals(grid, params, potential, state):
    res_l, res_m = G.degeneracy_residuals(state, grid, params, potential, Variant.DH)
    assert res_m == 0.0
    assert res_l > 0.0
    # uniform density with V = 0: the entropy gradient is constant, so L dS = 0
    rho = np.full(grid.shape, 1.0 / (grid.Lq * 2 * grid.Pmax))
    res_l, _ = G.degeneracy_residuals(G.State(rho, 0.0), grid, params, ZERO, Variant.DH)
    assert res_l <= 1e-14


def test_degeneracy_refinement_order():
    params = ModelParams(m=1.0, c=1.0, gamma=0.5, theta=1.0)
    resid = []
    for n in (32, 64, 128):
        g = PhaseGrid(Nq=n, Np=n, Lq=16.0, Pmax=10.0)
        w = 0.4 * np.sin(2 * np.pi * g.q_mesh / g.Lq) * np.exp(-0.125 * g.p_mesh**2)
        rho = np.exp(-0.5 * g.p_mesh**2) * np.exp(w)
        rho /= float(np.sum(rho)) * g.cell_volume
        res_l, _ = G.degeneracy_residuals(G.State(rho, 0.0), g, params, ZERO, Variant.DH)
        resid.append(res_l)
    assert 1.7 <= math.log2(resid[0] / resid[1]) <= 2.3 or \
        1.7 <= math.log2(resid[1] / resid[2]) <= 2.3
    slope = -float(np.polyfit(np.log([1.0, 2.0, 4.0]), np.log(resid), 1)[0])
    assert 1.7 <= slope <= 2.3


def test_second_momentum_moment(grid):
    rho = np.zeros(grid.shape)
    rho[3, 11] = 1.0 / grid.cell_volume
    assert G.second_momentum_moment(G.State(rho, 0.0), grid) \
        == pytest.approx(grid.p[11] ** 2, rel=1e-13)


# ---------------------------------------------------------------------------
# finite-dimensional Jacobi identity

def canonical_j2():
    return np.array([[0.0, -1.0], [1.0, 0.0]])


def test_jacobi_quadratic_exact():
    rng = SplitMix64(11)

    def quad(seed_mat, vec, const):
        sym = 0.5 * (seed_mat + seed_mat.T)
        return lambda z: float(z @ sym @ z + vec @ z + const)

    fns = [quad(rng.uniforms(4).reshape(2, 2), rng.uniforms(2), rng.uniform())
           for _ in range(3)]
    resid, _ = G.jacobi_residual_fd(canonical_j2(), *fns, z=np.array([0.3, -0.7]))
    assert resid <= 1e-10


def test_jacobi_constant_observable():
    f1 = lambda z: 1.0
    f2 = lambda z: float(z[0] ** 2 + z[1])
    f3 = lambda z: float(z[0] * z[1])
    resid, _ = G.jacobi_residual_fd(canonical_j2(), f1, f2, f3, z=np.array([0.2, 0.4]))
    assert resid <= 1e-12


def test_jacobi_cubic_with_symbolic_oracle():
    sympy = pytest.importorskip("sympy")
    n = 4
    rng = SplitMix64(2024)
    lraw = rng.uniforms(n * n, -1, 1).reshape(n, n)
    lmat = lraw - lraw.T
    zs = sympy.symbols(f"z0:{n}")
    # exact rational coefficients so the symbolic cancellation is exact
    lsym = sympy.Matrix([[sympy.Rational(int(v * 10**6), 10**6) for v in row]
                         for row in lmat])

    def make_cubic():
        coeffs = rng.uniforms(n * n * n, -1, 1).reshape(n, n, n)
        expr = sympy.Integer(0)
        for i in range(n):
            for j in range(n):
                for k in range(n):
                    expr += sympy.Rational(int(coeffs[i, j, k] * 10**6), 10**6) \
                        * zs[i] * zs[j] * zs[k]
        return expr

    exprs = [make_cubic() for _ in range(3)]

    def bracket(f, g):
        gf = sympy.Matrix([sympy.diff(f, z) for z in zs])
        gg = sympy.Matrix([sympy.diff(g, z) for z in zs])
        return sympy.expand((gf.T * lsym * gg)[0, 0])

    jac = sympy.expand(bracket(bracket(exprs[0], exprs[1]), exprs[2])
                       + bracket(bracket(exprs[1], exprs[2]), exprs[0])
                       + bracket(bracket(exprs[2], exprs[0]), exprs[1]))
    assert jac == 0   # symbolic oracle: constant L implies a vanishing residual

    fns = [sympy.lambdify(zs, e, "numpy") for e in exprs]
    wrapped = [lambda z, f=f: float(f(*z)) for f in fns]
    z0 = rng.uniforms(n, -1, 1)
    resid, scale = G.jacobi_residual_fd(lmat, *wrapped, z=z0)
    assert resid <= 1e-4 * scale


def test_jacobi_rejects_bad_inputs():
    with pytest.raises(ValueError):
        G.jacobi_residual_fd(np.ones((2, 2)), lambda z: 0.0, lambda z: 0.0,
                             lambda z: 0.0, z=np.zeros(2))
    with pytest.raises(ValueError):
        G.jacobi_residual_fd(np.zeros((9, 9)), lambda z: 0.0, lambda z: 0.0,
                             lambda z: 0.0, z=np.zeros(9))

    def partial(z):
        if z[0] > 0.3:
            return float("nan")
        return float(z[0])

    with pytest.raises(ValueError):
        G.jacobi_residual_fd(canonical_j2(), partial, lambda z: float(z[1]),
                             lambda z: float(z[0] + z[1]),
                             z=np.array([0.3, 0.0]))


def test_entropy_production_vanishes_at_equilibrium(grid, params, potential):
    # at the sampled Maxwellian the entropy gradient differs from the energy
    # gradient by a constant, so the dissipative production [dS, dS] collapses
    rinf, _ = maxwellian(grid, params, potential)
    state = G.State(rinf, 0.0)
    v_s = G.gradient_entropy(state, grid, params)
    production = G.dissipative_bracket(state, v_s, v_s, grid, params, potential,
                                       Variant.DH)
    ref = G.dissipative_bracket(state, G.CotangentVector(v_s.xi, 0.0),
                                G.CotangentVector(v_s.xi, 0.0), grid, params,
                                potential, Variant.DH)
    assert 0.0 <= production <= 1e-12 * ref


def test_poisson_bracket_with_entropy_gradient_refines():
    # {v, dS} vanishes only in the refinement limit
    params = ModelParams(m=1.0, c=1.0, gamma=0.5, theta=1.0)
    vals = []
    for n in (32, 64, 128):
        g = PhaseGrid(Nq=n, Np=n, Lq=16.0, Pmax=10.0)
        rho = np.exp(-0.5 * g.p_mesh**2) \
            * (1.0 + 0.4 * np.sin(2 * np.pi * g.q_mesh / g.Lq)
               * np.exp(-0.125 * g.p_mesh**2))
        rho /= float(np.sum(rho)) * g.cell_volume
        state = G.State(rho, 0.0)
        probe = G.CotangentVector(np.cos(2 * np.pi * g.q_mesh / g.Lq)
                                  * np.exp(-0.2 * g.p_mesh**2), 0.0)
        v_s = G.gradient_entropy(state, g, params)
        vals.append(abs(G.poisson_bracket(state, probe, v_s, g)))
    assert vals[2] < vals[1] < vals[0]
    assert vals[2] <= vals[0] / 8.0
