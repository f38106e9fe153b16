"""
Polaron levels of the singlet and triplet manifolds
===================================================

Build the coupled electron-phonon Hamiltonian for each bundled CC2 preset,
take its lowest eigenpairs and look at how much A1', E' and A2' character
each level carries.  Then check how the two lowest energies move with the
oscillator cutoff.
"""

import matplotlib.pyplot as plt
import numpy as np

from _plot import save
from pjt6c import build_total_hamiltonian, classify, convergence_sweep, preset_parameters, solve_lowest
from pjt6c.polaron import first_excitation_meV

N_MAX = 40

fig, axes = plt.subplots(1, 2, figsize=(9, 4), sharey=False)
for ax, preset in zip(axes, ("cc2_singlet", "cc2_triplet")):
    p = preset_parameters(preset)
    H = build_total_hamiltonian(p, N_MAX)
    print(f"\n{preset}: dimension {H.dim}, E_JT = {p.jt_energies[0]:.2f} / {p.jt_energies[1]:.2f} meV")
    states = classify(solve_lowest(H, 8))
    for s in states:
        print(f"  {s.energy_meV:10.3f} meV  {s.label:6s} A1'={s.w_A1:.3f} E'={s.w_E:.3f} A2'={s.w_A2:.3f}")
    print(f"  first excitation: {first_excitation_meV(states):.3f} meV")

    # stacked bars: symmetry content of each state
    e = np.array([s.energy_meV for s in states])
    w = np.array([[s.w_A1, s.w_E, s.w_A2] for s in states])
    left = np.zeros(len(states))
    for j, (lab, col) in enumerate(zip(("A1'", "E'", "A2'"), ("k", "c", "r"))):
        ax.barh(e, w[:, j], left=left, height=6, color=col, label=lab)
        left += w[:, j]
    ax.set_title(preset)
    ax.set_xlabel("weight")
axes[0].set_ylabel("energy (meV)")
axes[0].legend(loc="lower right")
save(fig, "polaron_levels.png")

# cutoff convergence
for preset in ("cc2_singlet", "cc2_triplet"):
    rep = convergence_sweep(preset_parameters(preset), [20, 28, 36, 40], k=2)
    print(f"\n{preset} lowest two levels vs n_max:")
    for n, en in zip(rep.n_max_values, rep.energies_meV):
        print(f"  n_max={n:2d}: {en[0]:.6f} {en[1]:.6f}")
