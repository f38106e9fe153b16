"""
Phonon sideband, 13C substitution and other carbon defects
==========================================================

A single effective 180.3 meV mode with S = 2.16 gives a Poisson ladder of
replicas; the ZPL keeps e^-S of the intensity.  Replacing 12C by 13C softens
the mode by sqrt(12/13.0034) so replica n moves up by about 7n meV.  A
smaller Huang-Rhys factor (dimer, 4C pair) shifts weight back to the ZPL.
"""

import matplotlib.pyplot as plt
import numpy as np

from _plot import save
from pjt6c import SpectralModel, compare_defect_sidebands, franck_condon_spectrum, hr_and_dw, isotope_rescale
from pjt6c.lineshape import replica_peaks

six_c = SpectralModel.single_mode(4.175, 180.3, 2.16, broadening_meV=10.0, alignment_shift_eV=-0.08)
S, dw = hr_and_dw(six_c)
print(f"S = {S}, Debye-Waller = {dw:.4f}")

light = franck_condon_spectrum(six_c, step_meV=0.5)
heavy_model = isotope_rescale(six_c, 0.960643, s_override=1.78)
heavy = franck_condon_spectrum(heavy_model, energy_eV=light.energy_eV)
for n, (a, b) in enumerate(zip(replica_peaks(light, 4), replica_peaks(heavy, 4))):
    print(f"replica {n}: 12C {a:.4f} eV  13C {b:.4f} eV  shift {1e3 * (b - a):+.2f} meV")

fig, axes = plt.subplots(1, 2, figsize=(10, 4))
axes[0].plot(light.energy_eV, light.intensity, "r", label="12C")
axes[0].plot(heavy.energy_eV, heavy.intensity, "b--", label="13C")
axes[0].set_xlim(3.3, 4.2)
axes[0].set_xlabel("energy (eV)")
axes[0].legend()

others = {
    "6C": SpectralModel.single_mode(4.2, 180.3, 2.16),
    "CNCB": SpectralModel.single_mode(4.1, 180.3, 1.6),
    "4Cpair": SpectralModel.single_mode(4.3, 180.3, 1.9),
}
for name, sp in compare_defect_sidebands(others).items():
    axes[1].plot(sp.energy_eV, sp.intensity, label=name)
axes[1].set_xlim(-0.9, 0.1)
axes[1].set_xlabel("energy relative to ZPL (eV)")
axes[1].legend()
save(fig, "sideband.png")
