import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from pjt6c.constants import kT_meV
from pjt6c.emission import (
    RATES_HEADER,
    EmissionLevels,
    RateInputs,
    ZplInputs,
    isc_rate,
    quantum_efficiency,
    radiative_rate,
    rates_csv,
    thermal_brightness,
    thermal_populations,
    zpl_energy,
)
from pjt6c.lineshape import SpectralModel, spectral_density_per_eV

from oracles import radiative_rate_closed_form


def zpl(**kw):
    base = dict(e_excited_eV=5.0, e_ground_eV=1.0, lambda_meV=0.0, delta_meV=0.0,
                hbar_omega_meV=0.0, polaron_ground_meV=0.0)
    base.update(kw)
    return ZplInputs(**base)


def test_zpl_plain_difference():
    assert zpl_energy(zpl()) == pytest.approx(4.0, abs=1e-15)


def test_zpl_ordering_enforced():
    with pytest.raises(ValueError):
        zpl(e_excited_eV=1.0)


@pytest.mark.parametrize("key, sign", [
    ("polaron_ground_meV", 1), ("hbar_omega_meV", -1), ("lambda_meV", 0.5), ("delta_meV", 0.5),
])
def test_zpl_unit_slope(key, sign):
    a = zpl_energy(zpl())
    b = zpl_energy(zpl(**{key: 10.0}))
    assert (b - a) * 1e3 == pytest.approx(10.0 * sign, abs=1e-9)


def test_zpl_constructed_composite():
    # corrections: -394 - 180.3 + 84.3 = -490 meV on a 4.70 eV gap
    inp = zpl(e_excited_eV=10.70, e_ground_eV=6.00, lambda_meV=-168.5, delta_meV=-619.5,
              hbar_omega_meV=180.3, polaron_ground_meV=84.3)
    assert zpl_energy(inp) == pytest.approx(4.21, abs=1e-12)


def test_kt_value():
    assert kT_meV(300.0) == pytest.approx(25.852, abs=5e-4)


def test_dark_bright_brightness_300K():
    lv = EmissionLevels.dark_bright(7.1)
    x = 2 * math.exp(-7.1 / kT_meV(300.0))
    assert thermal_brightness(lv, 300.0) == pytest.approx(x / (1 + x), rel=1e-12)
    assert thermal_brightness(lv, 300.0) == pytest.approx(0.603, abs=5e-4)
    assert thermal_brightness(lv, 0.0) == 0.0


def test_single_bright_level():
    lv = EmissionLevels((0.0,), (1,), (1.0,))
    for T in (0.0, 4.0, 300.0, 1e5):
        assert thermal_brightness(lv, T) == 1.0


def test_brightness_monotone_and_bounded():
    lv = EmissionLevels((0.0, 7.1, 40.0), (1, 2, 1), (0.1, 0.9, 0.3))
    Ts = np.linspace(1, 2000, 200)
    eta = [thermal_brightness(lv, T) for T in Ts]
    assert all(0.1 <= e <= 0.9 for e in eta)
    two = EmissionLevels.dark_bright(7.1, 0.8)
    eta2 = [thermal_brightness(two, T) for T in Ts]
    assert all(b >= a - 1e-15 for a, b in zip(eta2, eta2[1:]))


def test_brightness_high_temperature_limit():
    lv = EmissionLevels((0.0, 7.1, 40.0), (1, 2, 1), (0.1, 0.9, 0.3))
    g = np.array(lv.degeneracies)
    mean = float(g @ np.array(lv.brightness) / g.sum())
    assert abs(thermal_brightness(lv, 1e6) - mean) < 1e-3
    # the residual is first order in E/kT; it vanishes as T grows
    assert abs(thermal_brightness(lv, 1e12) - mean) < 1e-9


def test_levels_validation():
    with pytest.raises(ValueError):
        EmissionLevels((1.0, 2.0), (1, 1), (0.0, 1.0))
    with pytest.raises(ValueError):
        EmissionLevels((0.0,), (1,), (1.5,))
    with pytest.raises(ValueError):
        EmissionLevels((0.0,), (0,), (1.0,))
    with pytest.raises(ValueError):
        thermal_populations(EmissionLevels.dark_bright(5.0), -1.0)


def test_radiative_rate_matches_closed_form():
    g, tau = radiative_rate(RateInputs(4.21, 2.5, oscillator_strength=0.93))
    ref = radiative_rate_closed_form(0.93, 4.21, 2.5)
    assert g == pytest.approx(ref, rel=1e-12)
    assert tau == pytest.approx(1e9 / ref, rel=1e-12)


def test_radiative_rate_dark():
    g, tau = radiative_rate(RateInputs(4.21, oscillator_strength=0.93), eta=0.0)
    assert g == 0.0 and tau == math.inf


def test_radiative_rate_homogeneity():
    g1 = radiative_rate(RateInputs(2.0, dipole_sq=1.5))[0]
    assert radiative_rate(RateInputs(2.0, dipole_sq=3.0))[0] == pytest.approx(2 * g1, rel=1e-14)
    assert radiative_rate(RateInputs(4.0, dipole_sq=1.5))[0] == pytest.approx(8 * g1, rel=1e-14)
    f1 = radiative_rate(RateInputs(2.0, oscillator_strength=0.5))[0]
    assert radiative_rate(RateInputs(4.0, oscillator_strength=0.5))[0] == pytest.approx(4 * f1, rel=1e-14)


@given(st.floats(0, 0.5), st.floats(0, 0.5))
def test_radiative_rate_linear_in_eta(a, b):
    r = RateInputs(4.21, oscillator_strength=0.93)
    total = radiative_rate(r, a + b)[0]
    assert total == pytest.approx(radiative_rate(r, a)[0] + radiative_rate(r, b)[0], rel=1e-12, abs=1e-3)


def test_dipole_units_consistent():
    from pjt6c.constants import ATOMIC_DIPOLE_SQ
    a = radiative_rate(RateInputs(4.0, dipole_sq=2.0))[0]
    b = radiative_rate(RateInputs(4.0, dipole_sq=2.0 * ATOMIC_DIPOLE_SQ, dipole_unit="SI"))[0]
    assert a == pytest.approx(b, rel=1e-14)


def test_rate_inputs_validation():
    with pytest.raises(ValueError):
        RateInputs(4.0)
    with pytest.raises(ValueError):
        RateInputs(4.0, dipole_sq=1.0, oscillator_strength=1.0)
    with pytest.raises(ValueError):
        RateInputs(4.0, 0.9, dipole_sq=1.0)
    with pytest.raises(ValueError):
        radiative_rate(RateInputs(4.0, dipole_sq=0.0))
    with pytest.raises(ValueError):
        radiative_rate(RateInputs(4.0, oscillator_strength=0.0))
    with pytest.raises(ValueError):
        radiative_rate(RateInputs(4.0, dipole_sq=1.0), eta=1.2)


def test_lifetime_longer_when_cold():
    lv = EmissionLevels.dark_bright(7.1)
    r = RateInputs(4.21, oscillator_strength=0.93)
    t300 = radiative_rate(r, thermal_brightness(lv, 300.0))[1]
    t150 = radiative_rate(r, thermal_brightness(lv, 150.0))[1]
    assert t150 / t300 > 1


def test_isc_basic():
    assert isc_rate(0.0, 3.0) == 0.0
    assert isc_rate(3.0, 0.2) == pytest.approx(4 * isc_rate(1.5, 0.2), rel=1e-14)
    with pytest.raises(ValueError):
        isc_rate(1.5, -1.0)
    with pytest.raises(ValueError):
        isc_rate(-1.5, 1.0)


@given(st.floats(1e-3, 1e3), st.floats(1e-3, 10), st.floats(0.01, 100))
def test_isc_scaling_invariance(lam, F, c):
    assert isc_rate(c * lam, F / c**2) == pytest.approx(isc_rate(lam, F), rel=1e-12)


def test_isc_negligible_against_radiative():
    model = SpectralModel.single_mode(4.21, 180.3, 2.16)
    gamma = radiative_rate(RateInputs(4.21, oscillator_strength=0.93))[0]
    gaps = np.arange(300.0, 1500.0, 5.0)
    F = spectral_density_per_eV(model, gaps)
    assert F.max() > 0
    assert isc_rate(1.5, F.max()) < 1e-3 * gamma


def test_quantum_efficiency():
    assert quantum_efficiency(1.0, 0.0) == 1.0
    assert quantum_efficiency(1e9 / 1.54, 509e6) == pytest.approx(0.5606, abs=5e-4)
    qs = [quantum_efficiency(0.649e9, g) for g in np.linspace(0, 2e9, 30)]
    assert all(b < a for a, b in zip(qs, qs[1:]))
    with pytest.raises(ValueError):
        quantum_efficiency(0.0, 0.0)
    with pytest.raises(ValueError):
        quantum_efficiency(-1.0, 1.0)


def test_rates_csv():
    text = rates_csv([("tau_rad", 1.54, "ns", 300.0), ("QE", 0.56, "", None)])
    assert text.splitlines() == [RATES_HEADER, "tau_rad,1.54,ns,300", "QE,0.56,,"]
