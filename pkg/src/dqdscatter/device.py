"""Device geometry: two square wells on a finite segment, screened Coulomb."""

from dataclasses import dataclass

import numpy as np

from .units import COULOMB


@dataclass(frozen=True)
class DeviceSpec:
    """Symmetric double-well profile on [0, length]; energies meV, lengths nm."""

    length: float = 100.0
    well_depth: float = 110.0
    well_width: float = 30.0
    barrier_width: float = 20.0
    coulomb_cutoff: float = 1.0       # transverse regularization d
    screening_length: float = 1000.0  # Debye length
    coulomb_on: bool = True

    def __post_init__(self):
        flat = self.length - 2.0 * self.well_width - self.barrier_width
        if flat < 0:
            raise ValueError("wells and barrier do not fit in the device length")
        if self.well_depth < 0 or self.coulomb_cutoff <= 0 or self.screening_length <= 0:
            raise ValueError("device parameters must be positive")

    @property
    def lead_flat(self) -> float:
        """Zero-potential margin between each contact and its well."""
        return (self.length - 2.0 * self.well_width - self.barrier_width) / 2.0

    def potential(self, x):
        """Single-particle profile V(x), vectorized over x."""
        x = np.asarray(x, dtype=float)
        a = self.lead_flat
        eps = 1e-9
        left = (x >= a - eps) & (x <= a + self.well_width + eps)
        right = (x >= self.length - a - self.well_width - eps) & (x <= self.length - a + eps)
        return np.where(left | right, -self.well_depth, 0.0)

    def coulomb_kernel(self, dx):
        """Screened pair interaction w(|x_i - x_j|), regularized at contact."""
        if not self.coulomb_on:
            return np.zeros_like(np.asarray(dx, dtype=float))
        r = np.sqrt(np.asarray(dx, dtype=float) ** 2 + self.coulomb_cutoff**2)
        return COULOMB * np.exp(-r / self.screening_length) / r


@dataclass(frozen=True)
class GridSpec:
    """Uniform grid with `points` nodes per axis including both endpoints."""

    points: int = 81

    def __post_init__(self):
        if self.points < 9:
            raise ValueError("grid too coarse to hold the device")

    def axis(self, device: DeviceSpec):
        return np.linspace(0.0, device.length, self.points)

    def spacing(self, device: DeviceSpec) -> float:
        return device.length / (self.points - 1)

    def interior(self, device: DeviceSpec):
        return self.axis(device)[1:-1]
