"""Defect formation energies versus Fermi level and charge transition levels."""

from __future__ import annotations

import csv
import io
from collections import defaultdict
from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np

from ._io import fmt

DEFAULT_GAP_EV = 6.0
DEFECTS_HEADER = ("defect", "charge", "total_energy_eV", "n_C", "n_B", "n_N", "correction_eV")


@dataclass(frozen=True)
class DefectEntry:
    """One defect supercell in one charge state.

    ``n_C`` carbons are added, ``n_B`` borons and ``n_N`` nitrogens removed.
    """

    name: str
    charge: int
    total_energy_eV: float
    n_C: int = 0
    n_B: int = 0
    n_N: int = 0
    correction_eV: float = 0.0

    def __post_init__(self):
        if min(self.n_C, self.n_B, self.n_N) < 0:
            raise ValueError(f"{self.name}: substitution counts must be >= 0")
        if self.charge == 0 and self.correction_eV != 0:
            raise ValueError(f"{self.name}: neutral state must carry no charge correction")


@dataclass(frozen=True)
class ChemicalPotentials:
    mu_C_eV: float
    mu_B_eV: float
    mu_N_eV: float
    e_vbm_eV: float
    e_pristine_eV: float
    condition: str = "custom"
    gap_eV: float = DEFAULT_GAP_EV

    @classmethod
    def n_rich(cls, mu_C_eV, e_N2_eV, mu_BN_eV, e_vbm_eV, e_pristine_eV, gap_eV=DEFAULT_GAP_EV):
        """``mu_N = E(N2)/2`` and ``mu_B = mu_BN - mu_N``."""
        mu_N = 0.5 * e_N2_eV
        return cls(mu_C_eV, mu_BN_eV - mu_N, mu_N, e_vbm_eV, e_pristine_eV, "N-rich", gap_eV)

    @classmethod
    def n_poor(cls, mu_C_eV, mu_B_bulk_eV, mu_BN_eV, e_vbm_eV, e_pristine_eV, gap_eV=DEFAULT_GAP_EV):
        """``mu_B`` from bulk boron and ``mu_N = mu_BN - mu_B``."""
        return cls(mu_C_eV, mu_B_bulk_eV, mu_BN_eV - mu_B_bulk_eV, e_vbm_eV, e_pristine_eV, "N-poor", gap_eV)


def formation_energy(entry: DefectEntry, mu: ChemicalPotentials, e_fermi_eV=0.0):
    """Formation energy (eV) at Fermi level(s) measured from the VBM."""
    return intercept(entry, mu) + entry.charge * np.asarray(e_fermi_eV, dtype=float)


def intercept(entry: DefectEntry, mu: ChemicalPotentials) -> float:
    return (
        entry.total_energy_eV
        - mu.e_pristine_eV
        - entry.n_C * mu.mu_C_eV
        + entry.n_B * mu.mu_B_eV
        + entry.n_N * mu.mu_N_eV
        + entry.charge * mu.e_vbm_eV
        + entry.correction_eV
    )


@dataclass
class FormationEnergyTable:
    """Formation-energy lines of one defect under one set of potentials."""

    defect: str
    lines: dict[int, tuple[float, int]]  # q -> (intercept at E_F = 0, slope = q)
    ctls: list[tuple[int, int, float]]  # (q, q - 1 neighbour, level above VBM)
    fermi_eV: np.ndarray
    envelope_eV: np.ndarray
    stable_charge: np.ndarray
    potentials: ChemicalPotentials | None = field(default=None, repr=False)

    def line(self, q: int, e_fermi_eV):
        b, s = self.lines[q]
        return b + s * np.asarray(e_fermi_eV, dtype=float)

    def crossing(self, q: int, q2: int) -> float:
        """Fermi level at which charge states ``q`` and ``q2`` are degenerate."""
        return (self.lines[q2][0] - self.lines[q][0]) / (q - q2)

    def envelope_transitions(self) -> list[tuple[int, int, float]]:
        """Levels where the most stable charge changes, left to right, in (0, gap)."""
        out = []
        lo, hi = float(self.fermi_eV[0]), float(self.fermi_eV[-1])
        qs = sorted(self.lines, reverse=True)
        q = max(qs, key=lambda c: (-self.line(c, lo), -c))
        while True:
            candidates = [(self.crossing(q, q2), q2) for q2 in qs if q2 < q]
            candidates = [(e, q2) for e, q2 in candidates if e > lo]
            if not candidates:
                break
            e, q2 = min(candidates, key=lambda t: (t[0], t[1]))
            if e >= hi:
                break
            out.append((q, q2, e))
            q, lo = q2, e
        return out

    def is_photostable_neutral(self, window: tuple[float, float] | None = None) -> bool:
        """True when q = 0 is the lowest line everywhere in ``window`` (default: full grid)."""
        if 0 not in self.lines:
            return False
        lo, hi = window if window is not None else (self.fermi_eV[0], self.fermi_eV[-1])
        mask = (self.fermi_eV >= lo) & (self.fermi_eV <= hi)
        return bool(np.all(self.stable_charge[mask] == 0))


def transition_levels(
    entries: Sequence[DefectEntry], mu: ChemicalPotentials, fermi_step_eV: float = 0.01
) -> FormationEnergyTable:
    """Lines, adjacent-charge CTLs and the lower envelope for one defect."""
    entries = list(entries)
    if len(entries) < 2:
        raise ValueError("need at least two charge states")
    names = {e.name for e in entries}
    if len(names) != 1:
        raise ValueError(f"entries belong to several defects: {sorted(names)}")
    charges = [e.charge for e in entries]
    if len(set(charges)) != len(charges):
        raise ValueError(f"duplicate charge states for {entries[0].name}")
    return _table(entries, mu, fermi_step_eV)


def _table(entries, mu, fermi_step_eV):
    lines = {e.charge: (intercept(e, mu), e.charge) for e in sorted(entries, key=lambda e: e.charge)}
    qs = sorted(lines, reverse=True)
    ctls = [(q, q2, (lines[q2][0] - lines[q][0]) / (q - q2)) for q, q2 in zip(qs, qs[1:])]
    n = int(round(mu.gap_eV / fermi_step_eV))
    grid = np.linspace(0.0, mu.gap_eV, n + 1)
    stack = np.array([lines[q][0] + q * grid for q in qs])
    best = np.argmin(stack, axis=0)
    return FormationEnergyTable(
        entries[0].name, lines, ctls, grid, stack.min(axis=0), np.array(qs)[best], mu
    )


def group_entries(entries: Iterable[DefectEntry]) -> dict[str, list[DefectEntry]]:
    out: dict[str, list[DefectEntry]] = defaultdict(list)
    for e in entries:
        out[e.name].append(e)
    return dict(out)


def read_defects_csv(text: str) -> list[DefectEntry]:
    reader = csv.DictReader(io.StringIO(text))
    if reader.fieldnames is None:
        return []
    if tuple(reader.fieldnames) != DEFECTS_HEADER:
        raise ValueError(f"defect table header must be {','.join(DEFECTS_HEADER)}")
    out = []
    for row in reader:
        out.append(
            DefectEntry(
                row["defect"], int(row["charge"]), float(row["total_energy_eV"]),
                int(row["n_C"]), int(row["n_B"]), int(row["n_N"]), float(row["correction_eV"]),
            )
        )
    return out


DIAGRAM_HEADER = "defect,charge,e_fermi_eV,formation_energy_eV"
CTL_HEADER = "defect,transition,level_eV"


def _qlabel(q: int) -> str:
    return f"{q:+d}" if q else "0"


def diagram_export(
    entries: Sequence[DefectEntry], mu: ChemicalPotentials, fermi_grid_eV: Sequence[float] | None = None
) -> str:
    """Long-format series: one per (defect, charge), plus an envelope per multi-charge defect."""
    grid = np.linspace(0.0, mu.gap_eV, 61) if fermi_grid_eV is None else np.asarray(fermi_grid_eV, float)
    if grid.size and (grid.min() < 0 or grid.max() > mu.gap_eV + 1e-12):
        raise ValueError("Fermi grid must lie within [0, gap]")
    rows = [DIAGRAM_HEADER]
    for name, group in sorted(group_entries(entries).items()):
        group = sorted(group, key=lambda e: e.charge)
        charges = [e.charge for e in group]
        if len(set(charges)) != len(charges):
            raise ValueError(f"duplicate charge states for {name}")
        curves = []
        for e in group:
            vals = formation_energy(e, mu, grid)
            curves.append(vals)
            rows += [f"{name},{_qlabel(e.charge)},{fmt(x)},{fmt(v)}" for x, v in zip(grid, vals)]
        if len(group) > 1:
            env = np.min(curves, axis=0)
            rows += [f"{name},envelope,{fmt(x)},{fmt(v)}" for x, v in zip(grid, env)]
    return "\n".join(rows) + "\n"


def ctl_csv(tables: Sequence[FormationEnergyTable]) -> str:
    rows = [CTL_HEADER]
    for t in tables:
        rows += [f"{t.defect},{_qlabel(q)}/{_qlabel(q2)},{fmt(e)}" for q, q2, e in t.ctls]
    return "\n".join(rows) + "\n"
