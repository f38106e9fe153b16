"""ZPL position, thermally activated brightness, radiative/ISC rates, QE.

Brightness model: the polaron levels (dark lowest level, bright E'
doublet above it, ...) are populated by a Boltzmann distribution, and
the effective fraction of E' character ``eta(T)`` scales the radiative
rate.  This two-level-style equilibrium stands in for a kinetic model.
"""

from __future__ import annotations

import io
import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from . import constants as C
from ._io import fmt
from .polaron import PolaronState, levels

MODEL_NOTE = "brightness: Boltzmann population of polaron levels (equilibrium approximation)"


@dataclass(frozen=True)
class ZplInputs:
    e_excited_eV: float
    e_ground_eV: float
    lambda_meV: float
    delta_meV: float
    hbar_omega_meV: float
    polaron_ground_meV: float

    def __post_init__(self):
        if not self.e_excited_eV > self.e_ground_eV:
            raise ValueError("excited-state energy must exceed the ground-state energy")


def zpl_energy(inputs: ZplInputs) -> float:
    """``E_e - E_g + (Lambda + Delta)/2 - hbar_omega + <H_tot>`` in eV."""
    correction_meV = (
        0.5 * (inputs.lambda_meV + inputs.delta_meV)
        - inputs.hbar_omega_meV
        + inputs.polaron_ground_meV
    )
    return (inputs.e_excited_eV - inputs.e_ground_eV) + C.mev_to_ev(correction_meV)


@dataclass(frozen=True)
class EmissionLevels:
    """Polaron levels relative to the lowest one (meV), with degeneracy and brightness."""

    energies_meV: tuple[float, ...]
    degeneracies: tuple[int, ...]
    brightness: tuple[float, ...]

    def __post_init__(self):
        e = np.asarray(self.energies_meV, float)
        g = np.asarray(self.degeneracies, int)
        b = np.asarray(self.brightness, float)
        if not (e.shape == g.shape == b.shape) or e.size == 0:
            raise ValueError("energies, degeneracies and brightness must be equal, non-empty lists")
        if np.any(e < 0) or abs(e.min()) > 1e-12:
            raise ValueError("level energies must be >= 0 with the lowest at 0")
        if np.any(g < 1):
            raise ValueError("degeneracies must be >= 1")
        if np.any((b < 0) | (b > 1)):
            raise ValueError("brightness weights must lie in [0, 1]")
        object.__setattr__(self, "energies_meV", tuple(float(x) for x in e))
        object.__setattr__(self, "degeneracies", tuple(int(x) for x in g))
        object.__setattr__(self, "brightness", tuple(float(x) for x in b))

    @classmethod
    def from_states(cls, states: Sequence[PolaronState], n_levels: int | None = None) -> EmissionLevels:
        """Levels from classified polaron states; brightness is the mean E' fraction."""
        groups = levels(states)
        if n_levels is not None:
            groups = groups[:n_levels]
        e0 = groups[0][0].energy_meV
        return cls(
            tuple(float(np.mean([s.energy_meV for s in g])) - e0 for g in groups),
            tuple(len(g) for g in groups),
            tuple(float(np.mean([s.w_E for s in g])) for g in groups),
        )

    @classmethod
    def dark_bright(cls, splitting_meV: float, bright: float = 1.0) -> EmissionLevels:
        """Dark singlet ground level plus a bright doublet at ``splitting_meV``."""
        return cls((0.0, splitting_meV), (1, 2), (0.0, bright))


def thermal_populations(levels_: EmissionLevels, temperature_K: float) -> np.ndarray:
    if temperature_K < 0:
        raise ValueError("temperature must be >= 0 K")
    e = np.asarray(levels_.energies_meV)
    g = np.asarray(levels_.degeneracies, float)
    if temperature_K == 0:
        p = np.where(e == e.min(), g, 0.0)
    else:
        p = g * np.exp(-(e - e.min()) / C.kT_meV(temperature_K))
    return p / p.sum()


def thermal_brightness(levels_: EmissionLevels, temperature_K: float) -> float:
    """Population-weighted brightness ``eta(T) = sum_i p_i b_i``."""
    p = thermal_populations(levels_, temperature_K)
    return float(p @ np.asarray(levels_.brightness))


@dataclass(frozen=True)
class RateInputs:
    """Inputs of the radiative rate; give exactly one of dipole / oscillator strength.

    ``dipole_sq`` is interpreted in ``dipole_unit``: ``"au"`` means
    ``(e a0)**2``, ``"SI"`` means C^2 m^2.
    """

    e_zpl_eV: float
    refractive_index: float = 2.5
    dipole_sq: float | None = None
    oscillator_strength: float | None = None
    dipole_unit: str = "au"

    def __post_init__(self):
        if (self.dipole_sq is None) == (self.oscillator_strength is None):
            raise ValueError("give exactly one of dipole_sq and oscillator_strength")
        if self.refractive_index < 1:
            raise ValueError("refractive index must be >= 1")
        if self.e_zpl_eV <= 0:
            raise ValueError("ZPL energy must be positive")
        if self.dipole_unit not in ("au", "SI"):
            raise ValueError(f"dipole_unit must be 'au' or 'SI', got {self.dipole_unit!r}")

    def dipole_sq_SI(self) -> float:
        if self.dipole_sq is not None:
            factor = C.ATOMIC_DIPOLE_SQ if self.dipole_unit == "au" else 1.0
            return self.dipole_sq * factor
        return dipole_sq_from_oscillator_strength(self.oscillator_strength, self.e_zpl_eV)


def dipole_sq_from_oscillator_strength(f: float, energy_eV: float) -> float:
    """``mu^2 = 3 hbar^2 e^2 f / (2 m_e E)`` in C^2 m^2."""
    E = energy_eV * C.EV
    return 3.0 * C.HBAR**2 * C.ELEMENTARY_CHARGE**2 * f / (2.0 * C.ELECTRON_MASS * E)


def radiative_rate(rates: RateInputs, eta: float = 1.0) -> tuple[float, float]:
    """Spontaneous emission rate (1/s) and lifetime (ns) in a medium of index n_D.

    ``Gamma = eta n_D E^3 mu^2 / (3 pi eps0 c^3 hbar^4)``.
    """
    if not 0.0 <= eta <= 1.0:
        raise ValueError("eta must lie in [0, 1]")
    mu2 = rates.dipole_sq_SI()
    if mu2 <= 0:
        raise ValueError("transition dipole is zero")
    E = rates.e_zpl_eV * C.EV
    gamma = (
        eta * rates.refractive_index * E**3 * mu2
        / (3.0 * math.pi * C.VACUUM_PERMITTIVITY * C.SPEED_OF_LIGHT**3 * C.HBAR**4)
    )
    tau_ns = math.inf if gamma == 0 else 1e9 / gamma
    return gamma, tau_ns


def isc_rate(lambda_z_GHz: float, overlap_per_eV: float) -> float:
    """Intersystem-crossing rate ``4 pi hbar lambda_z^2 F(dE)`` in 1/s.

    ``lambda_z`` enters as a rate (``lambda_z_GHz * 1e9`` 1/s) and the
    spectral function ``F`` is converted to 1/J.
    """
    if lambda_z_GHz < 0:
        raise ValueError("lambda_z must be >= 0")
    if overlap_per_eV < 0:
        raise ValueError("spectral overlap F must be >= 0")
    lam = lambda_z_GHz * 1e9
    return 4.0 * math.pi * C.HBAR * lam**2 * (overlap_per_eV / C.EV)


def quantum_efficiency(gamma_rad: float, gamma_nonrad: float) -> float:
    if gamma_rad < 0 or gamma_nonrad < 0:
        raise ValueError("rates must be non-negative")
    if gamma_rad == 0 and gamma_nonrad == 0:
        raise ValueError("both rates are zero; quantum efficiency undefined")
    return gamma_rad / (gamma_rad + gamma_nonrad)


RATES_HEADER = "quantity,value,unit,temperature_K"


def rates_csv(rows: Sequence[tuple[str, float, str, float | None]]) -> str:
    buf = io.StringIO()
    buf.write(RATES_HEADER + "\n")
    for quantity, value, unit, T in rows:
        buf.write(f"{quantity},{fmt(value)},{unit},{'' if T is None else fmt(T)}\n")
    return buf.getvalue()
