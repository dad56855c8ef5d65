"""Uniform tensor grids: periodic position axis, truncated momentum axis."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np


@dataclass(frozen=True)
class PhaseGrid:
    """Uniform (q, p) grid for the d=1 kinetic solvers.

    Position axis: Nq cells on [-Lq/2, Lq/2), periodic.
    Momentum axis: Np cells on [-Pmax, Pmax], zero-flux faces at the ends.
    Cell centers sit at the midpoints; fields are arrays of shape (Nq, Np).
    """

    Nq: int
    Np: int
    Lq: float
    Pmax: float

    def __post_init__(self):
        for name in ("Nq", "Np"):
            n = getattr(self, name)
            if not (isinstance(n, int) and n >= 8 and n % 2 == 0):
                raise ValueError(f"{name} must be an even integer >= 8, got {n}")
        if not self.Lq > 0:
            raise ValueError(f"Lq must be > 0, got {self.Lq}")
        if not self.Pmax > 0:
            raise ValueError(f"Pmax must be > 0, got {self.Pmax}")

    @property
    def hq(self) -> float:
        return self.Lq / self.Nq

    @property
    def hp(self) -> float:
        return 2.0 * self.Pmax / self.Np

    @property
    def q(self) -> np.ndarray:
        return -0.5 * self.Lq + (np.arange(self.Nq) + 0.5) * self.hq

    @property
    def p(self) -> np.ndarray:
        return -self.Pmax + (np.arange(self.Np) + 0.5) * self.hp

    @property
    def p_faces(self) -> np.ndarray:
        """Interior momentum faces, between cells j and j+1."""
        return -self.Pmax + np.arange(1, self.Np) * self.hp

    @property
    def q_mesh(self) -> np.ndarray:
        return np.broadcast_to(self.q[:, np.newaxis], (self.Nq, self.Np))

    @property
    def p_mesh(self) -> np.ndarray:
        return np.broadcast_to(self.p[np.newaxis, :], (self.Nq, self.Np))

    @property
    def cell_volume(self) -> float:
        return self.hq * self.hp

    @property
    def shape(self) -> tuple:
        return (self.Nq, self.Np)


@dataclass(frozen=True)
class LineGrid:
    """Periodic 1-D grid for the heat solver: N cells on [0, L)."""

    N: int
    L: float

    def __post_init__(self):
        if not (isinstance(self.N, int) and self.N >= 8):
            raise ValueError(f"N must be an integer >= 8, got {self.N}")
        if not self.L > 0:
            raise ValueError(f"L must be > 0, got {self.L}")

    @property
    def h(self) -> float:
        return self.L / self.N

    @property
    def x(self) -> np.ndarray:
        return (np.arange(self.N) + 0.5) * self.h
