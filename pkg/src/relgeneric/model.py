"""Physical model layer.

Parameters, external potentials, the relativistic/classical kinetic
energies and their momentum gradients, the two diffusion matrices, and the
closed-form equilibrium (Maxwellian) density on a phase-space grid.

Vector-valued arguments (positions ``q``, momenta ``p``) carry the spatial
dimension on the last axis, so every function broadcasts over arbitrary
leading batch axes.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum

import numpy as np

from .grid import PhaseGrid

#: Distinguished speed-of-light value selecting the classical (Newtonian) mode.
INFINITE = math.inf


class Variant(Enum):
    """Which kinetic Fokker-Planck model the diffusion matrix belongs to."""

    DMR = "dmr"            # identity diffusion, relativistic drift
    DH = "dh"              # momentum-dependent diffusion, linear drift
    CLASSICAL = "classical"  # Kramers equation, requires c = INFINITE


@dataclass(frozen=True)
class ModelParams:
    m: float = 1.0       # rest mass
    c: float = 1.0       # speed of light, INFINITE selects classical mode
    gamma: float = 1.0   # friction coefficient
    theta: float = 1.0   # temperature kT
    nu: float = 1.0      # thermal diffusivity (heat equation only)
    d: int = 1           # spatial dimension

    def __post_init__(self):
        for name in ("m", "gamma", "theta", "nu"):
            v = getattr(self, name)
            if not (math.isfinite(v) and v > 0):
                raise ValueError(f"{name} must be positive and finite, got {v}")
        if not self.c > 0:
            raise ValueError(f"c must be positive (or INFINITE), got {self.c}")
        if math.isnan(self.c):
            raise ValueError("c must not be NaN")
        if not (isinstance(self.d, int) and self.d >= 1):
            raise ValueError(f"d must be an integer >= 1, got {self.d}")

    @property
    def classical(self) -> bool:
        return math.isinf(self.c)


def check_variant(variant: Variant, params: ModelParams) -> None:
    """DMR/DH need a finite speed of light, CLASSICAL needs c = INFINITE."""
    if variant is Variant.CLASSICAL and not params.classical:
        raise ValueError("CLASSICAL variant requires c = INFINITE")
    if variant is not Variant.CLASSICAL and params.classical:
        raise ValueError(f"{variant.value} variant requires finite c")


# ---------------------------------------------------------------------------
# external potentials (all nonnegative, with exact analytic gradients)

class Potential:
    """Nonnegative external potential V(q) with analytic gradient."""

    def evaluate(self, q):
        raise NotImplementedError

    def gradient(self, q):
        raise NotImplementedError


@dataclass(frozen=True)
class ZeroPotential(Potential):
    def evaluate(self, q):
        q = np.asarray(q, dtype=float)
        return np.zeros(q.shape[:-1])

    def gradient(self, q):
        return np.zeros_like(np.asarray(q, dtype=float))


@dataclass(frozen=True)
class HarmonicPotential(Potential):
    stiffness: float

    def __post_init__(self):
        if not (math.isfinite(self.stiffness) and self.stiffness >= 0):
            raise ValueError(f"harmonic stiffness must be >= 0, got {self.stiffness}")

    def evaluate(self, q):
        q = np.asarray(q, dtype=float)
        return 0.5 * self.stiffness * np.sum(q * q, axis=-1)

    def gradient(self, q):
        return self.stiffness * np.asarray(q, dtype=float)


@dataclass(frozen=True)
class CosinePotential(Potential):
    """V(q) = a * sum_i (1 + cos(2 pi q_i / period)), nonnegative for a >= 0."""

    amplitude: float
    period: float

    def __post_init__(self):
        if not (math.isfinite(self.amplitude) and self.amplitude >= 0):
            raise ValueError(f"cosine amplitude must be >= 0, got {self.amplitude}")
        if not (math.isfinite(self.period) and self.period > 0):
            raise ValueError(f"cosine period must be > 0, got {self.period}")

    def evaluate(self, q):
        q = np.asarray(q, dtype=float)
        return self.amplitude * np.sum(1.0 + np.cos(2.0 * np.pi * q / self.period), axis=-1)

    def gradient(self, q):
        q = np.asarray(q, dtype=float)
        k = 2.0 * np.pi / self.period
        return -self.amplitude * k * np.sin(k * q)


# ---------------------------------------------------------------------------
# pointwise kinetic quantities

def _as_vectors(x) -> np.ndarray:
    x = np.asarray(x, dtype=float)
    if x.ndim == 0:
        x = x[np.newaxis]
    if not np.all(np.isfinite(x)):
        raise ValueError("non-finite input")
    return x


def kinetic_energy(p, params: ModelParams):
    """c*sqrt(m^2 c^2 + |p|^2), or |p|^2/(2m) in classical mode."""
    p = _as_vectors(p)
    psq = np.sum(p * p, axis=-1)
    if params.classical:
        return psq / (2.0 * params.m)
    mc = params.m * params.c
    return params.c * np.sqrt(mc * mc + psq)


def hamiltonian(q, p, params: ModelParams, potential: Potential):
    """Total one-particle energy: kinetic(p) + V(q)."""
    q = _as_vectors(q)
    return kinetic_energy(p, params) + potential.evaluate(q)


def velocity(p, params: ModelParams):
    """Momentum gradient of the kinetic energy; norm < c for finite c."""
    p = _as_vectors(p)
    if params.classical:
        return p / params.m
    mc = params.m * params.c
    psq = np.sum(p * p, axis=-1, keepdims=True)
    return params.c * p / np.sqrt(mc * mc + psq)


def diffusion_matrix(p, variant: Variant, params: ModelParams):
    """Momentum diffusion matrix: identity for DMR/CLASSICAL, D(p) for DH.

    D(p) = (mc / sqrt(m^2 c^2 + |p|^2)) * (I + p (x) p / (m^2 c^2)),
    symmetric positive semidefinite for every p.
    """
    check_variant(variant, params)
    p = _as_vectors(p)
    d = p.shape[-1]
    eye = np.eye(d)
    if variant is not Variant.DH:
        return np.broadcast_to(eye, p.shape[:-1] + (d, d)).copy()
    mc = params.m * params.c
    psq = np.sum(p * p, axis=-1)[..., np.newaxis, np.newaxis]
    outer = p[..., :, np.newaxis] * p[..., np.newaxis, :]
    return (mc / np.sqrt(mc * mc + psq)) * (eye + outer / (mc * mc))


def mobility_drift(p, variant: Variant, params: ModelParams):
    """D(p) applied to the velocity; equals p/m for DH and CLASSICAL."""
    dm = diffusion_matrix(p, variant, params)
    return np.einsum("...ij,...j->...i", dm, velocity(p, params))


def mobility_drift_divergence(p, variant: Variant, params: ModelParams):
    """Momentum divergence of the mobility drift; bounded above by d/m."""
    check_variant(variant, params)
    p = _as_vectors(p)
    d = p.shape[-1]
    if variant is not Variant.DMR:
        return np.full(p.shape[:-1], d / params.m)
    mc = params.m * params.c
    psq = np.sum(p * p, axis=-1)
    s2 = mc * mc + psq
    return params.c * (d / np.sqrt(s2) - psq / s2**1.5)


# ---------------------------------------------------------------------------
# equilibrium density on a phase grid (d = 1)

#: pointwise tail criterion: exp(-(kinetic(Pmax)-kinetic(0))/theta) must be below this
TAIL_CUTOFF = 1e-14


def tail_weight(params: ModelParams, pmax: float) -> float:
    """Boltzmann weight of the momentum-domain edge relative to p = 0."""
    edge = float(kinetic_energy(np.array([pmax]), params))
    base = float(kinetic_energy(np.array([0.0]), params))
    return math.exp(-(edge - base) / params.theta)


def boltzmann_weight(grid: PhaseGrid, params: ModelParams, potential: Potential):
    """exp(-(H - min H)/theta) at cell centers, plus the gauge constant min H.

    The gauge keeps the exponential representable even when the rest energy
    m c^2 is huge; all consumers use ratios, which are gauge-independent.
    """
    h_cells = hamiltonian(grid.q_mesh[..., np.newaxis], grid.p_mesh[..., np.newaxis],
                          params, potential)
    h_min = float(h_cells.min())
    return np.exp(-(h_cells - h_min) / params.theta), h_min


def maxwellian(grid: PhaseGrid, params: ModelParams, potential: Potential):
    """Grid-sampled equilibrium density rho_inf = Z^-1 exp(-H/theta) and Z.

    Z is the midpoint-quadrature normalizer of the gauged weight
    exp(-(H - min H)/theta), so the discrete mass of rho_inf is exactly 1.
    Fails if the momentum truncation leaves a tail above TAIL_CUTOFF.
    """
    w = tail_weight(params, grid.Pmax)
    if not w < TAIL_CUTOFF:
        raise ValueError(
            f"momentum domain under-resolved: tail weight {w:.3e} at Pmax={grid.Pmax} "
            f"is not below {TAIL_CUTOFF:.0e}; enlarge grid.Pmax")
    weight, _ = boltzmann_weight(grid, params, potential)
    z = float(np.sum(weight)) * grid.cell_volume
    return weight / z, z
