"""Physical constants for the GaAs effective-mass model, meV / nm units."""

import numpy as np

HBAR = 1.054571817e-34          # J s
M_E = 9.1093837015e-31          # kg
E_CHARGE = 1.602176634e-19      # C
EPS0 = 8.8541878128e-12         # F/m

M_EFF_RATIO = 0.067             # GaAs conduction band
EPS_R = 12.9                    # GaAs static dielectric constant

# hbar^2 / (2 m*) in meV nm^2: the kinetic prefactor of -kp d^2/dx^2
KP = HBAR**2 / (2.0 * M_EFF_RATIO * M_E) / (E_CHARGE * 1e-3) * 1e18

# e^2 / (4 pi eps0 eps_r) in meV nm
COULOMB = E_CHARGE / (4.0 * np.pi * EPS0 * EPS_R) * 1e12


def wavevector(kinetic_mev: float) -> float:
    """Continuum wavevector (1/nm) at a given kinetic energy."""
    return float(np.sqrt(kinetic_mev / KP))
