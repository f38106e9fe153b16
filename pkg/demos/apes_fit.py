"""
Adiabatic surfaces and recovering the couplings from them
=========================================================

The classical part of the Hamiltonian gives four adiabatic branches as a
function of the displacement.  Without the electronic splitting the lowest
branch has a well of depth E_JT1; with the CC2 splitting switched on the well
is washed out.  Finally, perturb sampled energies by 1 % noise and fit the
couplings back.
"""

import matplotlib.pyplot as plt
import numpy as np

from _plot import save
from pjt6c import VibronicParameterSet, apes_slice, fit_apes, preset_parameters

x = np.linspace(-3, 3, 241)
bare = VibronicParameterSet.from_jt_energies("singlet", 0.0, 0.0, 187.0, 0.46, 180.3)
full = preset_parameters("cc2_singlet")

fig, axes = plt.subplots(1, 2, figsize=(9, 4), sharey=True)
for ax, p, title in zip(axes, (bare, full), ("no electronic splitting", "CC2 singlet")):
    E = np.array([s.branch_energies for s in apes_slice(p, x)])
    ax.plot(x, E, lw=1.2)
    ax.set_title(title)
    ax.set_xlabel("x (dimensionless)")
    print(f"{title}: lowest-branch depth {E[len(x) // 2, 0] - E[:, 0].min():.2f} meV")
axes[0].set_ylabel("energy (meV)")
axes[0].set_ylim(-900, 1500)
save(fig, "apes.png")

# noisy fit
rng = np.random.default_rng(1)
samples = [(s.x, np.asarray(s.branch_energies) * (1 + 0.01 * rng.standard_normal(4)))
           for s in apes_slice(bare, np.linspace(-2.5, 2.5, 21))]
guess = bare.replace(f_o_meV=100.0, f_u_meV=80.0, hbar_omega_meV=150.0)
fitted, rep = fit_apes(samples, guess)
e1, e2 = fitted.jt_energies
print(f"fit: E_JT1 = {e1:.2f} meV, E_JT2 = {e2:.3f} meV, hbar_omega = {fitted.hbar_omega_meV:.2f} meV")
print(f"     relative residual {rep.relative_std:.4f} after {rep.n_iterations} evaluations")
