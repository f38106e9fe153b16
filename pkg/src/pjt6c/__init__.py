"""Vibronic model of the carbon-ring (6C) colour centre in hexagonal BN.

Submodules:

* :mod:`pjt6c.vibronic` -- model Hamiltonian, classical surfaces, fits
* :mod:`pjt6c.polaron` -- low-lying polaron eigenstates
* :mod:`pjt6c.lineshape` -- Franck-Condon emission spectra, isotopes
* :mod:`pjt6c.emission` -- ZPL, brightness, radiative / ISC rates, QE
* :mod:`pjt6c.thermo` -- formation energies and charge transition levels
* :mod:`pjt6c.config`, :mod:`pjt6c.cli` -- run configuration and CLI
"""

from .vibronic import (
    DETERMINANTS,
    ApesSample,
    OscillatorBasis,
    SpinManifold,
    VibronicHamiltonian,
    VibronicParameterSet,
    apes_slice,
    build_electronic_W,
    build_pjt_coupling,
    build_total_hamiltonian,
    couplings_from_jt_energies,
    fit_apes,
    jt_energies_from_couplings,
)
from .polaron import PolaronState, classify, convergence_sweep, solve_lowest
from .lineshape import (
    SpectralModel,
    Spectrum,
    compare_defect_sidebands,
    franck_condon_spectrum,
    hr_and_dw,
    isotope_rescale,
)
from .emission import (
    EmissionLevels,
    RateInputs,
    ZplInputs,
    isc_rate,
    quantum_efficiency,
    radiative_rate,
    thermal_brightness,
    zpl_energy,
)
from .thermo import ChemicalPotentials, DefectEntry, diagram_export, formation_energy, transition_levels
from .config import load_preset, parse_config


def preset_parameters(name: str) -> VibronicParameterSet:
    """Parameter set of a bundled preset (``cc2_singlet``, ``cc2_triplet``, ...)."""
    from .cli import resolve_params

    return resolve_params(load_preset(name))


__version__ = "0.1.0"
