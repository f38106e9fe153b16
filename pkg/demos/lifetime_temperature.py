"""
Radiative lifetime versus temperature
=====================================

Only the E' doublet emits.  With a dark ground level 7.1 meV below it, the
bright fraction follows a Boltzmann factor, so the lifetime lengthens on
cooling.  Also compare against the intersystem crossing channel and the
non-radiative rate.
"""

import matplotlib.pyplot as plt
import numpy as np

from _plot import save
from pjt6c import (
    EmissionLevels,
    RateInputs,
    SpectralModel,
    isc_rate,
    quantum_efficiency,
    radiative_rate,
    thermal_brightness,
)
from pjt6c.lineshape import spectral_density_per_eV

levels = EmissionLevels.dark_bright(7.1)
rates = RateInputs(4.21, refractive_index=2.5, oscillator_strength=0.93)

T = np.linspace(5, 400, 200)
eta = np.array([thermal_brightness(levels, t) for t in T])
tau = np.array([radiative_rate(rates, e)[1] for e in eta])
for t in (150.0, 300.0):
    e = thermal_brightness(levels, t)
    print(f"T = {t:.0f} K: eta = {e:.4f}, tau_rad = {radiative_rate(rates, e)[1]:.3f} ns")

# quantum efficiency with the tabulated lifetime and non-radiative rate
print(f"QE(1/1.54 ns, 509 MHz) = {quantum_efficiency(1 / 1.54e-9, 509e6):.3f}")

# ISC through lambda_z = 1.5 GHz across a range of singlet-triplet gaps
model = SpectralModel.single_mode(4.21, 180.3, 2.16)
gaps = np.arange(300, 1500, 10.0)
k_isc = np.array([isc_rate(1.5, f) for f in spectral_density_per_eV(model, gaps)])
print(f"largest ISC rate above 300 meV: {k_isc.max():.3e} 1/s "
      f"({k_isc.max() / radiative_rate(rates)[0]:.1e} of the full radiative rate)")

fig, ax = plt.subplots(figsize=(5, 4))
ax.plot(T, tau)
ax.set_xlabel("temperature (K)")
ax.set_ylabel("radiative lifetime (ns)")
save(fig, "lifetime.png")
