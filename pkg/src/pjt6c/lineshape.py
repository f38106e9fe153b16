"""Franck-Condon emission lineshapes from effective-mode Huang-Rhys data.

Emission convention: a term with occupations ``{n_k}`` sits at
``zpl - sum_k n_k * hbar_omega_k`` and carries the Poisson product weight
``prod_k exp(-S_k) S_k**n_k / n_k!``.  Sticks are Gaussian-broadened
with standard deviation ``broadening_meV``.
"""

from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass, field, replace
from typing import Mapping, Sequence

import numpy as np
from scipy.signal import find_peaks
from scipy.special import gammaln

from ._io import fmt

DEFAULT_BROADENING_MEV = 10.0
DEFAULT_STEP_MEV = 1.0
TRUNCATION = 1e-6
MAX_TERMS = 5_000_000

NOTE_SIMPLE_SCALING = "isotope: frequencies scaled, Huang-Rhys factors kept"
NOTE_SINGLE_MODE = "single-effective-mode approximation in use"


@dataclass(frozen=True)
class SpectralModel:
    zpl_eV: float
    modes: tuple[tuple[float, float], ...]  # (hbar_omega_meV, S_k)
    broadening_meV: float = DEFAULT_BROADENING_MEV
    alignment_shift_eV: float = 0.0
    notes: tuple[str, ...] = ()

    def __post_init__(self):
        modes = tuple((float(w), float(s)) for w, s in self.modes)
        for w, s in modes:
            if not w > 0:
                raise ValueError(f"mode energy must be > 0, got {w}")
            if not (s >= 0 and math.isfinite(s)):
                raise ValueError(f"Huang-Rhys factor must be finite and >= 0, got {s}")
        if self.broadening_meV < 0:
            raise ValueError("broadening must be >= 0")
        object.__setattr__(self, "modes", modes)

    @classmethod
    def single_mode(cls, zpl_eV, hbar_omega_meV, S, **kw) -> SpectralModel:
        kw.setdefault("notes", (NOTE_SINGLE_MODE,))
        return cls(zpl_eV, ((hbar_omega_meV, S),), **kw)

    @property
    def total_S(self) -> float:
        return float(sum(s for _, s in self.modes))

    @property
    def line_eV(self) -> float:
        """ZPL position after the rigid alignment shift."""
        return self.zpl_eV + self.alignment_shift_eV


@dataclass
class Spectrum:
    energy_eV: np.ndarray
    intensity: np.ndarray  # max normalised to 1
    norm: float = 1.0  # raw = intensity * norm, in 1/eV
    sticks_eV: np.ndarray | None = None
    stick_weights: np.ndarray | None = None
    notes: tuple[str, ...] = ()

    @property
    def raw(self) -> np.ndarray:
        return self.intensity * self.norm

    @property
    def step_eV(self) -> float:
        return float(self.energy_eV[1] - self.energy_eV[0])


def hr_and_dw(model: SpectralModel) -> tuple[float, float]:
    """Total Huang-Rhys factor and Debye-Waller factor ``exp(-S)``."""
    S = model.total_S
    return S, math.exp(-S)


def franck_condon_sticks(
    model: SpectralModel, threshold: float = TRUNCATION, max_terms: int = MAX_TERMS
) -> tuple[np.ndarray, np.ndarray]:
    """Enumerate occupation vectors; returns (offset below ZPL in meV, weight).

    Terms lighter than ``threshold`` times the heaviest term are dropped.
    Partial products are pruned with an exact bound (partial weight times the
    best remaining factors), so the retained set equals full enumeration.
    """
    # canonical order makes the float sums independent of input mode order
    modes = sorted((w, s) for w, s in model.modes if s > 0)
    if not modes:
        return np.zeros(1), np.ones(1)

    log_tables = []
    log_best = []
    for w, s in modes:
        mode_peak = max(int(math.floor(s)), 0)
        best = -s + mode_peak * math.log(s) - gammaln(mode_peak + 1)
        n = np.arange(0, mode_peak + 1)
        # extend until this factor alone falls below the threshold
        while True:
            lw = -s + n * math.log(s) - gammaln(n + 1)
            if lw[-1] < best + math.log(threshold):
                break
            n = np.arange(0, len(n) * 2 + 1)
        keep = lw >= best + math.log(threshold)
        log_tables.append((w, n[keep], lw[keep]))
        log_best.append(best)

    cut = sum(log_best) + math.log(threshold)
    rest = np.cumsum(log_best[::-1])[::-1]  # rest[i] = sum of best over modes i..end
    offsets = np.zeros(1)
    logw = np.zeros(1)
    for i, (w, n, lw) in enumerate(log_tables):
        remaining = rest[i + 1] if i + 1 < len(log_tables) else 0.0
        new_off = (offsets[:, None] + w * n[None, :]).ravel()
        new_lw = (logw[:, None] + lw[None, :]).ravel()
        keep = new_lw + remaining >= cut
        offsets, logw = new_off[keep], new_lw[keep]
        if len(offsets) > max_terms:
            raise ValueError(
                f"more than {max_terms} Franck-Condon terms; coarse-grain the mode table"
            )
    order = np.lexsort((-logw, offsets))
    return offsets[order], np.exp(logw[order])


def _gaussian(x, sigma):
    return np.exp(-0.5 * (x / sigma) ** 2) / (sigma * math.sqrt(2.0 * math.pi))


def default_grid(model: SpectralModel, step_meV=DEFAULT_STEP_MEV, offsets_meV=None):
    """Grid anchored on the (aligned) ZPL covering the whole sideband."""
    sigma = model.broadening_meV
    w_max = max((w for w, _ in model.modes), default=0.0)
    below = 6.0 * model.total_S * w_max
    if offsets_meV is not None and len(offsets_meV):
        below = max(below, float(np.max(offsets_meV)))
    below += 5.0 * sigma
    above = 5.0 * sigma
    n_lo = int(math.ceil(below / step_meV))
    n_hi = max(int(math.ceil(above / step_meV)), 1)
    return model.line_eV + 1e-3 * step_meV * np.arange(-n_lo, n_hi + 1)


def franck_condon_spectrum(
    model: SpectralModel,
    step_meV: float = DEFAULT_STEP_MEV,
    energy_eV: np.ndarray | None = None,
    threshold: float = TRUNCATION,
) -> Spectrum:
    """Broadened multi-mode Poisson emission spectrum.

    Pass ``energy_eV`` for an explicit ascending uniform grid, otherwise a
    grid with ``step_meV`` spacing is generated around the sideband.
    """
    if model.broadening_meV == 0 and model.total_S == 0:
        raise ValueError("no phonon modes and zero broadening: the spectrum is a bare delta")
    offsets, weights = franck_condon_sticks(model, threshold)
    if energy_eV is None:
        energy_eV = default_grid(model, step_meV, offsets)
    E = np.asarray(energy_eV, dtype=float)
    if E.ndim != 1 or len(E) < 2 or np.any(np.diff(E) <= 0):
        raise ValueError("energy grid must be 1-D and strictly ascending")
    sticks = model.line_eV - 1e-3 * offsets

    if model.broadening_meV > 0:
        sigma = 1e-3 * model.broadening_meV
        raw = np.zeros_like(E)
        chunk = max(1, 2_000_000 // len(E))
        for i in range(0, len(sticks), chunk):
            s, w = sticks[i : i + chunk], weights[i : i + chunk]
            raw += (w[:, None] * _gaussian(E[None, :] - s[:, None], sigma)).sum(axis=0)
    else:
        step = E[1] - E[0]
        idx = np.clip(np.rint((sticks - E[0]) / step).astype(int), 0, len(E) - 1)
        raw = np.bincount(idx, weights=weights, minlength=len(E)) / step

    peak = float(raw.max())
    if peak <= 0:
        raise ValueError("energy grid does not overlap the spectrum")
    return Spectrum(E, raw / peak, peak, sticks, weights, model.notes)


def spectral_density_per_eV(model: SpectralModel, offset_meV) -> np.ndarray:
    """Broadened Franck-Condon density at energy offsets below the ZPL, in 1/eV.

    This is the vibrational-overlap spectral function used by the ISC rate.
    """
    if model.broadening_meV <= 0:
        raise ValueError("the spectral density needs a finite broadening")
    offsets, weights = franck_condon_sticks(model)
    d = np.atleast_1d(np.asarray(offset_meV, dtype=float))
    sigma = model.broadening_meV
    dens_per_meV = (weights[:, None] * _gaussian(d[None, :] - offsets[:, None], sigma)).sum(axis=0)
    return 1e3 * dens_per_meV


def isotope_rescale(
    model: SpectralModel,
    scale_factors,
    s_override: Sequence[float] | float | None = None,
) -> SpectralModel:
    """Scale mode frequencies, for example by ``sqrt(12/13.0034)`` for 13C.

    ``s_override`` replaces the Huang-Rhys factors: a sequence gives one
    value per mode, a single number is a new total distributed in
    proportion to the old ``S_k``.  Without it the factors are kept and the
    result carries a note that only frequencies were scaled.
    """
    n = len(model.modes)
    scales = np.broadcast_to(np.asarray(scale_factors, dtype=float), (n,)) if np.ndim(scale_factors) == 0 \
        else np.asarray(scale_factors, dtype=float)
    if scales.shape != (n,):
        raise ValueError(f"need one scale factor per mode ({n}), got {scales.shape[0]}")
    if np.any(scales <= 0):
        raise ValueError("scale factors must be positive")

    S = np.array([s for _, s in model.modes])
    notes = [x for x in model.notes if x != NOTE_SIMPLE_SCALING]
    if s_override is None:
        notes.append(NOTE_SIMPLE_SCALING)
    elif np.ndim(s_override) == 0:
        total = model.total_S
        if total == 0:
            raise ValueError("cannot distribute a new total S over modes with S = 0")
        S = S * (float(s_override) / total)
    else:
        S = np.asarray(s_override, dtype=float)
        if S.shape != (n,):
            raise ValueError("s_override needs one value per mode")
    modes = tuple((w * f, s) for (w, _), f, s in zip(model.modes, scales, S))
    return replace(model, modes=modes, notes=tuple(notes))


def compare_defect_sidebands(
    models: Mapping[str, SpectralModel], step_meV: float = DEFAULT_STEP_MEV
) -> dict[str, Spectrum]:
    """Spectra on one grid of energy relative to each model's ZPL (ZPL at 0)."""
    if len(models) < 2:
        raise ValueError("need at least two models to compare")
    aligned = {name: replace(m, zpl_eV=0.0, alignment_shift_eV=0.0) for name, m in models.items()}
    lo = hi = 0
    for m in aligned.values():
        g = default_grid(m, step_meV, franck_condon_sticks(m)[0])
        lo = max(lo, int(round(-g[0] / (1e-3 * step_meV))))
        hi = max(hi, int(round(g[-1] / (1e-3 * step_meV))))
    grid = 1e-3 * step_meV * np.arange(-lo, hi + 1)
    return {name: franck_condon_spectrum(m, energy_eV=grid) for name, m in aligned.items()}


def replica_peaks(spectrum: Spectrum, count: int | None = None, min_height: float = 1e-3) -> np.ndarray:
    """Local maxima (eV), descending in energy, refined by parabolic interpolation."""
    y = spectrum.intensity
    idx, _ = find_peaks(y, height=min_height)
    E = spectrum.energy_eV
    step = spectrum.step_eV
    out = []
    for i in idx:
        if 0 < i < len(y) - 1:
            a, b, c = y[i - 1], y[i], y[i + 1]
            den = a - 2 * b + c
            shift = 0.5 * (a - c) / den if den != 0 else 0.0
            out.append(E[i] + shift * step)
        else:
            out.append(E[i])
    out = np.sort(np.array(out))[::-1]
    return out if count is None else out[:count]


SPECTRUM_HEADER = "energy_eV,intensity"
MODES_HEADER = "hbar_omega_meV,S"


def spectrum_csv(spectrum: Spectrum) -> str:
    lines = [SPECTRUM_HEADER]
    lines += [f"{fmt(e)},{fmt(i)}" for e, i in zip(spectrum.energy_eV, spectrum.intensity)]
    return "\n".join(lines) + "\n"


def modes_csv(modes) -> str:
    lines = [MODES_HEADER] + [f"{fmt(w)},{fmt(s)}" for w, s in modes]
    return "\n".join(lines) + "\n"


def read_modes_csv(text: str) -> tuple[tuple[float, float], ...]:
    rows = list(csv.DictReader(io.StringIO(text)))
    if rows and set(rows[0]) != {"hbar_omega_meV", "S"}:
        raise ValueError(f"mode table header must be {MODES_HEADER!r}")
    return tuple((float(r["hbar_omega_meV"]), float(r["S"])) for r in rows)
