"""Uniform position grids and wavefunctions sampled on them."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import TruncationError


@dataclass(frozen=True)
class GridSpec:
    """``n_points`` samples at ``z_j = -extent/2 + j*spacing``.

    The sample set contains ``z = 0`` and is symmetric about it except for
    the single leftmost point, which is what FFT-based propagation expects.
    """

    n_points: int
    extent: float

    def __post_init__(self):
        n = self.n_points
        if n < 2 or n & (n - 1):
            raise ValueError(f"n_points must be a power of two, got {n}")
        if not self.extent > 0:
            raise ValueError("extent must be positive")

    @property
    def spacing(self) -> float:
        return self.extent / self.n_points

    @property
    def z(self) -> np.ndarray:
        return (np.arange(self.n_points) - self.n_points // 2) * self.spacing

    @property
    def k(self) -> np.ndarray:
        """Angular wavenumbers in FFT order."""
        return 2 * np.pi * np.fft.fftfreq(self.n_points, self.spacing)

    @property
    def k_nyquist(self) -> float:
        return np.pi / self.spacing

    def refined(self, factor: int = 2) -> "GridSpec":
        return GridSpec(self.n_points * factor, self.extent)


@dataclass(frozen=True, eq=False)
class GridWavefunction:
    """Complex samples, shape ``(components, n_points)``, one row per spin level."""

    values: np.ndarray
    grid: GridSpec
    mass: float

    def __post_init__(self):
        v = np.atleast_2d(np.asarray(self.values, dtype=np.complex128))
        if v.shape[1] != self.grid.n_points:
            raise ValueError("values do not match the grid")
        object.__setattr__(self, "values", v)
        norm = self.norm()
        if abs(norm - 1.0) > 1e-6:
            raise TruncationError(f"grid wavefunction norm {norm:.9f} differs from 1 by more than 1e-6")

    def norm(self) -> float:
        return float(np.sum(np.abs(self.values) ** 2) * self.grid.spacing)

    def density(self) -> np.ndarray:
        """Position probability density summed over spin components (1/m)."""
        return np.sum(np.abs(self.values) ** 2, axis=0)

    def overlap(self, other: "GridWavefunction") -> complex:
        if other.grid != self.grid:
            raise ValueError("grids differ")
        return complex(np.sum(np.conj(self.values) * other.values) * self.grid.spacing)

    def spectral_tail(self, fraction: float = 0.1) -> float:
        """Probability carried by the outermost ``fraction`` of the k range."""
        psi_k = np.fft.fft(self.values, axis=1)
        power = np.sum(np.abs(psi_k) ** 2, axis=0)
        kk = np.abs(self.grid.k)
        tail = kk > (1 - fraction) * self.grid.k_nyquist
        return float(power[tail].sum() / power.sum())
