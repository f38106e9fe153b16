"""
Formation energy diagram of a constructed defect set
====================================================

Read the example defect table, evaluate formation energies against the Fermi
level for N-rich and N-poor potentials, and list the charge transition
levels and whether each defect stays neutral across the gap.
"""

from pathlib import Path

import matplotlib.pyplot as plt
import numpy as np

from _plot import save
from pjt6c import ChemicalPotentials, formation_energy, transition_levels
from pjt6c.thermo import group_entries, read_defects_csv

entries = read_defects_csv((Path(__file__).parents[1] / "configs" / "data" / "defects.csv").read_text())
conditions = {
    "N-rich": ChemicalPotentials(-9.2, -9.4, -8.3, 0.0, -1002.0, "N-rich"),
    "N-poor": ChemicalPotentials(-9.2, -6.7, -11.0, 0.0, -1002.0, "N-poor"),
}
ef = np.linspace(0.0, 6.0, 301)


def charge(q):
    return f"{q:+d}" if q else "0"


fig, axes = plt.subplots(1, 2, figsize=(10, 4), sharey=True)
for ax, (tag, mu) in zip(axes, conditions.items()):
    print(f"\n{tag}")
    for name, group in sorted(group_entries(entries).items()):
        if len(group) > 1:
            t = transition_levels(group, mu)
            ax.plot(t.fermi_eV, t.envelope_eV, label=name)
            levels = ", ".join(f"({charge(q)}/{charge(q2)}) {e:.2f} eV" for q, q2, e in t.ctls)
            print(f"  {name}: {levels}; neutral across gap: {t.is_photostable_neutral()}")
        else:
            ax.plot(ef, formation_energy(group[0], mu, ef), label=name)
            print(f"  {name}: single charge state, E_f = {float(formation_energy(group[0], mu)):.2f} eV")
    ax.set_title(tag)
    ax.set_xlabel("Fermi level above VBM (eV)")
axes[0].set_ylabel("formation energy (eV)")
axes[0].legend()
save(fig, "formation_energy.png")
