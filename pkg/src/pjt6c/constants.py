"""Physical constants (CODATA 2018) and unit helpers.

Everything that converts between meV, eV, J and s^-1 goes through this
table so that the numbers pinned in tests have one source.
"""

import math

PLANCK = 6.62607015e-34  # J s (exact)
HBAR = PLANCK / (2.0 * math.pi)  # J s
ELEMENTARY_CHARGE = 1.602176634e-19  # C (exact)
BOLTZMANN = 1.380649e-23  # J/K (exact)
SPEED_OF_LIGHT = 299792458.0  # m/s (exact)
VACUUM_PERMITTIVITY = 8.8541878128e-12  # F/m
ELECTRON_MASS = 9.1093837015e-31  # kg
BOHR_RADIUS = 5.29177210903e-11  # m

EV = ELEMENTARY_CHARGE  # J per eV
MEV = 1e-3 * EV  # J per meV
BOLTZMANN_MEV_PER_K = BOLTZMANN / MEV  # 0.08617333... meV/K

# squared dipole of one e*a0, in C^2 m^2
ATOMIC_DIPOLE_SQ = (ELEMENTARY_CHARGE * BOHR_RADIUS) ** 2

# 12C -> 13C frequency scaling for a mode carried entirely by carbon
CARBON13_SCALE = math.sqrt(12.000 / 13.0034)


def mev_to_ev(value):
    return value * 1e-3


def ev_to_mev(value):
    return value * 1e3


def kT_meV(temperature_K):
    """Thermal energy k_B T in meV."""
    return BOLTZMANN_MEV_PER_K * temperature_K
