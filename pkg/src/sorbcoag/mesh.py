"""Uniform discretization of the truncated configuration space (0,P)x(0,1).

Cells are indexed (j, i) with j = 0..J along polymer size p and i = 0..I
along ion ratio r.  Edges are computed by multiplication (j*dp, i*dr), not
cumulative addition, so accessors are bit-reproducible for any J, I.
"""
from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property

import numpy as np

from .errors import ConfigError


@dataclass(frozen=True, eq=True)
class GridSpec:
    """Uniform rectangular mesh of (0,P)x(0,1).

    dp = P/(J+1) and dr = 1/(I+1); cell (j,i) spans
    (j*dp,(j+1)*dp) x (i*dr,(i+1)*dr) with center ((j+1/2)*dp, (i+1/2)*dr).
    Immutable after construction; safe to share across readers.
    """

    P: float
    J: int
    I: int

    def __post_init__(self) -> None:
        if not np.isfinite(self.P) or self.P <= 0.0:
            raise ConfigError(f"cutoff size P must be positive, got {self.P}")
        if self.J < 0 or self.I < 0:
            raise ConfigError(f"cell index bounds must be >= 0, got J={self.J}, I={self.I}")

    @property
    def dp(self) -> float:
        return self.P / (self.J + 1)

    @property
    def dr(self) -> float:
        return 1.0 / (self.I + 1)

    @property
    def cell_volume(self) -> float:
        return self.dp * self.dr

    @property
    def shape(self) -> tuple[int, int]:
        return (self.J + 1, self.I + 1)

    @cached_property
    def p_edges(self) -> np.ndarray:
        """Lower p-edge of cell j at index j; index J+1 is the cutoff P."""
        return np.arange(self.J + 2) * self.dp

    @cached_property
    def r_edges(self) -> np.ndarray:
        """Lower r-edge of cell i at index i; index I+1 equals 1."""
        return np.arange(self.I + 2) * self.dr

    @cached_property
    def p_centers(self) -> np.ndarray:
        return (np.arange(self.J + 1) + 0.5) * self.dp

    @cached_property
    def r_centers(self) -> np.ndarray:
        return (np.arange(self.I + 1) + 0.5) * self.dr


@dataclass(frozen=True, eq=True)
class TimeSpec:
    """Uniform time axis t_n = n*dt with dt = T/N."""

    T: float
    N: int

    def __post_init__(self) -> None:
        if not np.isfinite(self.T) or self.T <= 0.0:
            raise ConfigError(f"final time T must be positive, got {self.T}")
        if self.N < 0:
            raise ConfigError(f"step count N must be >= 0, got {self.N}")

    @property
    def dt(self) -> float:
        if self.N == 0:
            return 0.0
        return self.T / self.N

    @classmethod
    def from_dt(cls, T: float, dt: float) -> "TimeSpec":
        """Nearest step count for a requested dt; the realized dt is T/N."""
        if dt <= 0.0 or not np.isfinite(dt):
            raise ConfigError(f"time step dt must be positive, got {dt}")
        n = max(1, round(T / dt))
        return cls(T=T, N=n)


def build_grid(P: float, J: int, I: int) -> GridSpec:
    """Construct and validate a uniform grid (rejects nonpositive P)."""
    return GridSpec(P=float(P), J=int(J), I=int(I))
