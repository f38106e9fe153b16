"""Low-lying polaron eigenstates of the product Jahn-Teller Hamiltonian."""

from __future__ import annotations

import io
import logging
from dataclasses import dataclass, replace
from typing import Sequence

import numpy as np
import scipy.linalg
import scipy.sparse.linalg as spla

from ._io import fmt
from .vibronic import DETERMINANTS, VibronicHamiltonian, VibronicParameterSet, build_total_hamiltonian

logger = logging.getLogger(__name__)

DEFAULT_DEGENERACY_TOL_MEV = 0.01
DENSE_THRESHOLD = 5000

LABEL_A1 = "A1'"
LABEL_A2 = "A2'"
LABEL_E = "E'"
LABEL_MIXED = "mixed"


class EigensolverError(RuntimeError):
    pass


@dataclass(frozen=True)
class PolaronState:
    """One eigenpair summarised by its electronic symmetry content.

    ``composition`` is ``(w_A1, w_A2, w_Ex, w_Ey)``.
    """

    energy_meV: float
    composition: tuple[float, float, float, float]
    label: str = ""
    degeneracy_group: int = -1
    residual: float = 0.0

    @property
    def w_A1(self) -> float:
        return self.composition[0]

    @property
    def w_A2(self) -> float:
        return self.composition[1]

    @property
    def w_E(self) -> float:
        return self.composition[2] + self.composition[3]


def _compositions(H: VibronicHamiltonian, vecs: np.ndarray) -> np.ndarray:
    # symmetry order of U rows is (A1', E'x, E'y, A2'); report (A1', A2', E'x, E'y)
    U = H.determinants.U
    M = H.oscillator.dimension
    out = np.empty((vecs.shape[1], 4))
    for j in range(vecs.shape[1]):
        w = ((U @ vecs[:, j].reshape(4, M)) ** 2).sum(axis=1)
        w = w / w.sum()
        out[j] = (w[0], w[3], w[1], w[2])
    return out


def _dense(H, k):
    vals, vecs = scipy.linalg.eigh(H.matrix.toarray(), subset_by_index=[0, k - 1])
    return vals, vecs


def _iterative(H, k, max_restarts, tol):
    n = H.dim
    ncv = min(n, max(2 * k + 1, 20))
    v0 = np.ones(n) / np.sqrt(n)  # fixed start vector keeps results deterministic
    for attempt in range(max_restarts + 1):
        try:
            vals, vecs = spla.eigsh(H.matrix, k=k, which="SA", v0=v0, ncv=ncv, tol=tol, maxiter=20 * n)
            order = np.argsort(vals)
            return vals[order], vecs[:, order]
        except spla.ArpackNoConvergence as exc:
            logger.warning("eigsh restart %d: %s", attempt + 1, exc)
            ncv = min(n, 2 * ncv)
    raise EigensolverError(f"iterative eigensolver failed after {max_restarts} restarts")


def solve_lowest(
    H: VibronicHamiltonian,
    k: int = 6,
    method: str = "auto",
    max_restarts: int = 3,
    tol: float = 0.0,
    dense_threshold: int = DENSE_THRESHOLD,
) -> list[PolaronState]:
    """``k`` lowest eigenpairs, each reduced to a :class:`PolaronState`.

    ``method`` is ``"auto"`` (Krylov solver, dense fallback when it fails
    and ``dim <= dense_threshold``), ``"sparse"`` or ``"dense"``.  Every
    pair is checked against ``|Hv - Ev| < 1e-8 |H|``.
    """
    n = H.dim
    if not 1 <= k <= n:
        raise ValueError(f"k must lie in [1, {n}], got {k}")
    if method not in ("auto", "sparse", "dense"):
        raise ValueError(f"unknown method {method!r}")

    use_dense = method == "dense" or k >= n - 1
    vals = vecs = None
    if not use_dense:
        try:
            vals, vecs = _iterative(H, k, max_restarts, tol)
        except EigensolverError:
            if method == "sparse" or n > dense_threshold:
                raise
            logger.warning("falling back to dense diagonalisation (dim=%d)", n)
    if vals is None:
        vals, vecs = _dense(H, k)

    norm_H = spla.norm(H.matrix, ord=np.inf)
    resid = np.linalg.norm(H.matrix @ vecs - vecs * vals, axis=0)
    bad = resid > 1e-8 * norm_H
    if np.any(bad):
        if vecs is not None and not use_dense and n <= dense_threshold:
            logger.warning("residual check failed on iterative result; redoing densely")
            vals, vecs = _dense(H, k)
            resid = np.linalg.norm(H.matrix @ vecs - vecs * vals, axis=0)
            bad = resid > 1e-8 * norm_H
        if np.any(bad):
            raise EigensolverError(f"eigenpair residual {resid.max():.3e} exceeds 1e-8*|H|")

    comps = _compositions(H, vecs)
    return [
        PolaronState(float(e), tuple(float(c) for c in comp), residual=float(r))
        for e, comp, r in zip(vals, comps, resid)
    ]


def classify(
    states: Sequence[PolaronState], tol_meV: float = DEFAULT_DEGENERACY_TOL_MEV
) -> list[PolaronState]:
    """Group near-degenerate levels and attach symmetry labels.

    Rules: a doubly degenerate group is ``E'``; a non-degenerate state is
    ``A2'`` when ``w_A2 > 0.9`` and ``A1'`` when ``w_A1 > 0.5``; anything
    else (including accidental higher degeneracies) is ``mixed``.
    """
    states = sorted(states, key=lambda s: s.energy_meV)
    groups: list[list[PolaronState]] = []
    for s in states:
        if groups and s.energy_meV - groups[-1][-1].energy_meV < tol_meV:
            groups[-1].append(s)
        else:
            groups.append([s])

    out = []
    for gid, members in enumerate(groups):
        if len(members) == 2:
            label = LABEL_E
        elif len(members) == 1:
            s = members[0]
            if s.w_A2 > 0.9:
                label = LABEL_A2
            elif s.w_A1 > 0.5:
                label = LABEL_A1
            else:
                label = LABEL_MIXED
        else:
            label = LABEL_MIXED
        out += [replace(s, label=label, degeneracy_group=gid) for s in members]
    return out


def levels(states: Sequence[PolaronState]) -> list[list[PolaronState]]:
    """Classified states bundled per degeneracy group, lowest first."""
    groups: dict[int, list[PolaronState]] = {}
    for s in states:
        groups.setdefault(s.degeneracy_group, []).append(s)
    return [groups[g] for g in sorted(groups)]


def first_excitation_meV(states: Sequence[PolaronState]) -> float:
    """Gap between the two lowest distinct levels of a classified list."""
    lv = levels(states)
    if len(lv) < 2:
        raise ValueError("need at least two distinct levels")
    return lv[1][0].energy_meV - lv[0][0].energy_meV


@dataclass
class ConvergenceReport:
    n_max_values: list[int]
    energies_meV: list[np.ndarray]

    @property
    def drift_meV(self) -> np.ndarray:
        """Absolute change per level between the last two cutoffs."""
        if len(self.energies_meV) < 2:
            return np.zeros_like(self.energies_meV[0])
        return np.abs(self.energies_meV[-1] - self.energies_meV[-2])

    @property
    def ground_monotone(self) -> bool:
        g = [e[0] for e in self.energies_meV]
        return all(b <= a + 1e-9 for a, b in zip(g, g[1:]))


def convergence_sweep(
    params: VibronicParameterSet, n_max_values: Sequence[int], k: int = 2, method: str = "auto"
) -> ConvergenceReport:
    n_max_values = [int(n) for n in n_max_values]
    if n_max_values != sorted(n_max_values):
        raise ValueError("n_max values must be ascending")
    energies = []
    for n_max in n_max_values:
        H = build_total_hamiltonian(params, n_max)
        states = solve_lowest(H, min(k, H.dim), method=method)
        energies.append(np.array([s.energy_meV for s in states]))
    return ConvergenceReport(n_max_values, energies)


STATES_HEADER = "energy_meV,w_A1,w_A2,w_Ex,w_Ey,label,group"


def states_csv(states: Sequence[PolaronState], convergence: ConvergenceReport | None = None) -> str:
    buf = io.StringIO()
    buf.write(STATES_HEADER + "\n")
    for s in states:
        cols = [fmt(s.energy_meV), *(fmt(c) for c in s.composition), s.label, str(s.degeneracy_group)]
        buf.write(",".join(cols) + "\n")
    if convergence is not None:
        cut = convergence.n_max_values
        buf.write(f"# convergence n_max={' '.join(str(n) for n in cut)}\n")
        buf.write("# drift_meV=" + " ".join(fmt(d) for d in convergence.drift_meV) + "\n")
    return buf.getvalue()
