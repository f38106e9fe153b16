"""Electronic + E-phonon model of the 6C ring excited states.

The excited states of one spin manifold are spanned by four Slater
determinants ``|e_o e_u>`` (occupied x/y orbital times unoccupied x/y
orbital); both orbital pairs couple linearly to one effective,
doubly degenerate E vibration.  This module builds that product
Jahn-Teller Hamiltonian on the truncated 2D oscillator basis, evaluates
the classical adiabatic surfaces and fits coupling constants to sampled
surfaces.

Conventions
-----------
* energies in meV;
* dimensionless displacements with ``x = (a + a^dag)/sqrt(2)``, so the
  classical vibrational potential is ``hbar_omega * (x**2 + y**2) / 2``;
* product-basis vectors are electronic-major: ``index = 4-state * M + osc``.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field, replace
from typing import Iterable, Sequence

import numpy as np
import scipy.sparse as sp
from scipy.optimize import least_squares

DETERMINANT_LABELS = ("xx", "xy", "yx", "yy")
SYMMETRY_LABELS = ("A1'", "E'x", "E'y", "A2'")

_R2 = 1.0 / math.sqrt(2.0)
# rows: symmetry-adapted states, columns: determinants xx, xy, yx, yy
_U = np.array(
    [
        [_R2, 0.0, 0.0, _R2],  # A1'
        [_R2, 0.0, 0.0, -_R2],  # E'x
        [0.0, _R2, _R2, 0.0],  # E'y
        [0.0, _R2, -_R2, 0.0],  # A2'
    ]
)

DEFAULT_MAX_DIMENSION = 10**6


class CutoffOverflowError(ValueError):
    """The requested oscillator cutoff gives an unreasonably large matrix."""


class RankDeficientError(ValueError):
    """The APES samples do not determine the requested parameters."""


class FitConvergenceError(RuntimeError):
    pass


class SpinManifold(str, enum.Enum):
    SINGLET = "singlet"
    TRIPLET = "triplet"


@dataclass(frozen=True)
class VibronicParameterSet:
    """Model constants of one spin manifold (all in meV).

    ``f_o_meV`` and ``f_u_meV`` are the linear couplings of the occupied
    and unoccupied orbital pairs per unit dimensionless displacement.
    """

    spin: SpinManifold
    lambda_meV: float
    delta_meV: float
    f_o_meV: float
    f_u_meV: float
    hbar_omega_meV: float
    provenance: str = "user"

    def __post_init__(self):
        object.__setattr__(self, "spin", SpinManifold(self.spin))
        for name in ("lambda_meV", "delta_meV", "f_o_meV", "f_u_meV", "hbar_omega_meV"):
            value = float(getattr(self, name))
            if not math.isfinite(value):
                raise ValueError(f"{name} must be finite, got {value!r}")
            object.__setattr__(self, name, value)
        if self.hbar_omega_meV <= 0:
            raise ValueError(f"hbar_omega_meV must be > 0, got {self.hbar_omega_meV}")

    @classmethod
    def from_jt_energies(
        cls,
        spin,
        lambda_meV: float,
        delta_meV: float,
        e_jt1_meV: float,
        e_jt2_meV: float,
        hbar_omega_meV: float,
        provenance: str = "user",
    ) -> VibronicParameterSet:
        f_o, f_u = couplings_from_jt_energies(e_jt1_meV, e_jt2_meV, hbar_omega_meV)
        return cls(spin, lambda_meV, delta_meV, f_o, f_u, hbar_omega_meV, provenance)

    @property
    def jt_energies(self) -> tuple[float, float]:
        return jt_energies_from_couplings(self.f_o_meV, self.f_u_meV, self.hbar_omega_meV)

    def replace(self, **changes) -> VibronicParameterSet:
        return replace(self, **changes)


@dataclass(frozen=True)
class DeterminantBasis:
    """The four determinants and their map onto D3h symmetry-adapted states."""

    labels: tuple[str, ...] = DETERMINANT_LABELS
    symmetry_labels: tuple[str, ...] = SYMMETRY_LABELS

    @property
    def U(self) -> np.ndarray:
        """Orthogonal 4x4 matrix; row ``i`` is symmetry state ``i`` in determinants."""
        return _U.copy()


DETERMINANTS = DeterminantBasis()


class OscillatorBasis:
    """States ``|n, m>`` of the 2D oscillator with ``n + m <= n_max``."""

    def __init__(self, n_max: int):
        n_max = int(n_max)
        if n_max < 0:
            raise ValueError(f"n_max must be >= 0, got {n_max}")
        self.n_max = n_max
        pairs = [(n, s - n) for s in range(n_max + 1) for n in range(s, -1, -1)]
        self.quanta = np.array(pairs, dtype=np.int64).reshape(-1, 2)
        self._index = {p: i for i, p in enumerate(pairs)}

    @staticmethod
    def dimension_for(n_max: int) -> int:
        return (n_max + 1) * (n_max + 2) // 2

    @property
    def dimension(self) -> int:
        return len(self.quanta)

    def index(self, n: int, m: int) -> int:
        return self._index[(n, m)]

    def state(self, index: int) -> tuple[int, int]:
        n, m = self.quanta[index]
        return int(n), int(m)

    def number_operator(self) -> sp.csr_matrix:
        """Diagonal of ``n + m``."""
        return sp.diags(self.quanta.sum(axis=1).astype(float), format="csr")

    def _position(self, axis: int) -> sp.csr_matrix:
        rows, cols, vals = [], [], []
        for i, (n, m) in enumerate(self.quanta):
            raised = (n + 1, m) if axis == 0 else (n, m + 1)
            j = self._index.get(raised)
            if j is None:
                continue
            q = raised[axis]
            amp = math.sqrt(q / 2.0)
            rows += [i, j]
            cols += [j, i]
            vals += [amp, amp]
        d = self.dimension
        return sp.csr_matrix((vals, (rows, cols)), shape=(d, d))

    def x_operator(self) -> sp.csr_matrix:
        return self._position(0)

    def y_operator(self) -> sp.csr_matrix:
        return self._position(1)


@dataclass(frozen=True, eq=False)
class VibronicHamiltonian:
    matrix: sp.csr_matrix
    params: VibronicParameterSet
    oscillator: OscillatorBasis
    determinants: DeterminantBasis = field(default=DETERMINANTS)

    @property
    def dim(self) -> int:
        return self.matrix.shape[0]

    def electronic_blocks(self, vector: np.ndarray) -> np.ndarray:
        """Reshape a product-basis vector to ``(4, M)`` determinant rows."""
        return np.asarray(vector).reshape(4, self.oscillator.dimension)


def build_electronic_W(
    params: VibronicParameterSet, basis: DeterminantBasis = DETERMINANTS
) -> np.ndarray:
    """Electronic Hamiltonian ``W`` in the determinant basis.

    ``W = Lambda (|A1'><A1'| - |A2'><A2'|) - Delta (|E'x><E'x| + |E'y><E'y|)``.
    """
    U = basis.U
    diag = np.array([params.lambda_meV, -params.delta_meV, -params.delta_meV, -params.lambda_meV])
    W = U.T @ np.diag(diag) @ U
    return 0.5 * (W + W.T)


def jt_coefficients(params: VibronicParameterSet) -> tuple[np.ndarray, np.ndarray]:
    """4x4 electronic coefficients of ``x`` and ``y`` in the linear pJT term.

    Layout in determinants ``(xx, xy, yx, yy)``::

        x:  diag(Fo+Fu, -(Fo-Fu), Fo-Fu, -(Fo+Fu))
        y:  Fo on (xx,xy), (yx,yy);  Fu on (xx,yx), (xy,yy)
    """
    fo, fu = params.f_o_meV, params.f_u_meV
    cx = np.diag([fo + fu, -(fo - fu), fo - fu, -(fo + fu)])
    cy = np.zeros((4, 4))
    cy[0, 1] = cy[1, 0] = fo
    cy[2, 3] = cy[3, 2] = fo
    cy[0, 2] = cy[2, 0] = fu
    cy[1, 3] = cy[3, 1] = fu
    return cx, cy


def build_pjt_coupling(params: VibronicParameterSet, x_op, y_op) -> sp.csr_matrix:
    cx, cy = jt_coefficients(params)
    cx, cy = sp.csr_matrix(cx), sp.csr_matrix(cy)
    return (sp.kron(cx, x_op) + sp.kron(cy, y_op)).tocsr()


def build_total_hamiltonian(
    params: VibronicParameterSet,
    n_max: int = 40,
    max_dimension: int = DEFAULT_MAX_DIMENSION,
) -> VibronicHamiltonian:
    """Assemble ``hbar_omega (n + m + 1) + W + H_JT`` on the truncated basis."""
    n_max = int(n_max)
    if n_max < 0:
        raise ValueError(f"n_max must be >= 0, got {n_max}")
    dim = 4 * OscillatorBasis.dimension_for(n_max)
    if dim > max_dimension:
        raise CutoffOverflowError(
            f"n_max={n_max} gives dimension {dim} > max_dimension={max_dimension}"
        )
    osc = OscillatorBasis(n_max)
    eye_osc = sp.identity(osc.dimension, format="csr")
    vib = params.hbar_omega_meV * (osc.number_operator() + eye_osc)
    W = sp.csr_matrix(build_electronic_W(params))
    H = (
        sp.kron(sp.identity(4, format="csr"), vib)
        + sp.kron(W, eye_osc)
        + build_pjt_coupling(params, osc.x_operator(), osc.y_operator())
    )
    H = H.tocsr()
    H.eliminate_zeros()
    H.sort_indices()
    return VibronicHamiltonian(H, params, osc)


# --- classical surfaces -------------------------------------------------


@dataclass(frozen=True)
class ApesSample:
    """Four adiabatic energies (ascending) at one classical displacement."""

    x: float
    branch_energies: tuple[float, ...]
    y: float = 0.0
    compositions: np.ndarray | None = field(default=None, compare=False)


def classical_matrix(params: VibronicParameterSet, x: float, y: float = 0.0) -> np.ndarray:
    cx, cy = jt_coefficients(params)
    elastic = 0.5 * params.hbar_omega_meV * (x * x + y * y)
    return elastic * np.eye(4) + build_electronic_W(params) + x * cx + y * cy


def _adiabatic(M: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Eigenvalues/compositions with label tie-breaking when M is diagonal by symmetry."""
    sym = _U @ M @ _U.T
    off = sym - np.diag(np.diag(sym))
    if not np.any(np.abs(off) > 1e-12 * max(1.0, np.abs(sym).max())):
        d = np.diag(sym)
        order = np.argsort(d, kind="stable")
        return d[order], np.eye(4)[order]
    vals, vecs = np.linalg.eigh(M)
    comps = ((_U @ vecs) ** 2).T
    return vals, comps


def apes_slice(
    params: VibronicParameterSet, x_values: Iterable[float], y: float = 0.0
) -> list[ApesSample]:
    """Classical adiabatic energies along a line of fixed ``y``.

    Each sample's ``compositions[b]`` holds the (A1', E'x, E'y, A2') weights of
    branch ``b``.
    """
    out = []
    for x in x_values:
        x = float(x)
        if not math.isfinite(x):
            raise ValueError(f"non-finite sample point {x!r}")
        vals, comps = _adiabatic(classical_matrix(params, x, y))
        out.append(ApesSample(x, tuple(float(v) for v in vals), float(y), comps))
    return out


# --- JT energies <-> couplings -------------------------------------------


def jt_energies_from_couplings(f_o: float, f_u: float, hbar_omega: float) -> tuple[float, float]:
    return (f_o + f_u) ** 2 / (2 * hbar_omega), (f_o - f_u) ** 2 / (2 * hbar_omega)


def couplings_from_jt_energies(
    e_jt1: float, e_jt2: float, hbar_omega: float
) -> tuple[float, float]:
    """Invert the JT-energy relations, returning the ``F_o >= F_u >= 0`` branch.

    ``e_jt1`` belongs to the constructive combination ``F_o + F_u``, so it
    must not be smaller than ``e_jt2``.
    """
    if e_jt1 < 0 or e_jt2 < 0:
        raise ValueError(f"JT energies must be non-negative, got ({e_jt1}, {e_jt2})")
    if hbar_omega <= 0:
        raise ValueError(f"hbar_omega must be > 0, got {hbar_omega}")
    if e_jt2 > e_jt1:
        raise ValueError("e_jt2 > e_jt1 has no solution with F_o >= F_u >= 0")
    s = math.sqrt(2.0 * hbar_omega * e_jt1)
    d = math.sqrt(2.0 * hbar_omega * e_jt2)
    return 0.5 * (s + d), 0.5 * (s - d)


# --- fitting --------------------------------------------------------------


@dataclass
class FitReport:
    parameter_names: tuple[str, ...]
    values: np.ndarray
    stderr: np.ndarray
    residuals: np.ndarray  # (n_points, n_branches), model - data, meV
    relative_std: float
    n_iterations: int
    converged: bool
    message: str = ""


def _as_samples(samples) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    xs, ys, rows = [], [], []
    for s in samples:
        if isinstance(s, ApesSample):
            x, y, e = s.x, s.y, s.branch_energies
        else:
            x, e = s[0], s[1]
            y = s[2] if len(s) > 2 else 0.0
        xs.append(float(x))
        ys.append(float(y))
        rows.append(np.atleast_1d(np.asarray(e, dtype=float)))
    if not rows:
        raise RankDeficientError("no APES samples supplied")
    k = min(len(r) for r in rows)
    if k < 1:
        raise ValueError("every sample needs at least the lowest branch")
    E = np.array([r[:k] for r in rows])
    if not np.all(np.isfinite(E)):
        raise ValueError("APES sample energies must be finite")
    return np.array(xs), np.array(ys), E


def fit_apes(
    samples: Sequence,
    initial_guess: VibronicParameterSet,
    fit_electronic: bool = False,
    max_iter: int = 200,
) -> tuple[VibronicParameterSet, FitReport]:
    """Least-squares estimate of the couplings from sampled adiabatic energies.

    Parameters
    ----------
    samples
        :class:`ApesSample` objects or ``(x, energies[, y])`` tuples; energies
        are the lowest ``k`` branches in ascending order (``k`` is the smallest
        count over all samples).
    initial_guess
        Starting point; also supplies spin, provenance and, unless
        ``fit_electronic``, the fixed ``Lambda``/``Delta``.
    fit_electronic
        Also fit ``Lambda`` and ``Delta``.
    max_iter
        Cap on Levenberg-Marquardt iterations.

    Raises
    ------
    RankDeficientError
        Fewer than five distinct displacements, samples on one side of the
        origin only, or a singular Jacobian at the solution (for instance
        ``F_o - F_u`` is invisible when only the lowest branch is given).
    FitConvergenceError
        The iteration cap was hit.
    """
    xs, ys, E = _as_samples(samples)
    n_distinct = len(np.unique(np.round(xs, 12)))
    if n_distinct < 5:
        raise RankDeficientError(f"need >= 5 distinct x samples, got {n_distinct}")
    if not (xs.min() < 0 < xs.max()):
        raise RankDeficientError("x samples must span both signs of the displacement")
    k = E.shape[1]

    g = initial_guess
    p0 = [g.f_o_meV + g.f_u_meV, g.f_o_meV - g.f_u_meV, g.hbar_omega_meV]
    names = ["f_sum_meV", "f_diff_meV", "hbar_omega_meV"]
    if fit_electronic:
        p0 += [g.lambda_meV, g.delta_meV]
        names += ["lambda_meV", "delta_meV"]
    n_par = len(p0)
    if E.size < n_par:
        raise RankDeficientError(f"{E.size} data values for {n_par} parameters")

    U = _U
    # derivatives of the classical matrix w.r.t. (s, d, w, Lambda, Delta), per point
    dcx_ds = np.diag([1.0, 0.0, 0.0, -1.0])
    dcx_dd = np.diag([0.0, -1.0, 1.0, 0.0])
    dcy_ds = np.zeros((4, 4))
    dcy_dd = np.zeros((4, 4))
    # y-couplings: Fo = (s+d)/2 on (0,1),(2,3); Fu = (s-d)/2 on (0,2),(1,3)
    for (i, j), a, b in (((0, 1), 0.5, 0.5), ((2, 3), 0.5, 0.5), ((0, 2), 0.5, -0.5), ((1, 3), 0.5, -0.5)):
        dcy_ds[i, j] = dcy_ds[j, i] = a
        dcy_dd[i, j] = dcy_dd[j, i] = b
    dW_dlam = U.T @ np.diag([1.0, 0.0, 0.0, -1.0]) @ U
    dW_ddel = U.T @ np.diag([0.0, -1.0, -1.0, 0.0]) @ U

    def unpack(p):
        s, d, w = p[0], p[1], p[2]
        lam, dell = (p[3], p[4]) if fit_electronic else (g.lambda_meV, g.delta_meV)
        return s, d, w, lam, dell

    def matrices(p, x, y):
        s, d, w, lam, dell = unpack(p)
        cx = s * dcx_ds + d * dcx_dd
        cy = s * dcy_ds + d * dcy_dd
        W = U.T @ np.diag([lam, -dell, -dell, -lam]) @ U
        return 0.5 * w * (x * x + y * y) * np.eye(4) + W + x * cx + y * cy

    def resid(p):
        out = np.empty_like(E)
        for i, (x, y) in enumerate(zip(xs, ys)):
            out[i] = np.linalg.eigvalsh(matrices(p, x, y))[:k]
        return (out - E).ravel()

    def jac(p):
        J = np.empty((E.size, n_par))
        row = 0
        for x, y in zip(xs, ys):
            _, vecs = np.linalg.eigh(matrices(p, x, y))
            derivs = [x * dcx_ds + y * dcy_ds, x * dcx_dd + y * dcy_dd, 0.5 * (x * x + y * y) * np.eye(4)]
            if fit_electronic:
                derivs += [dW_dlam, dW_ddel]
            for b in range(k):
                v = vecs[:, b]
                J[row] = [v @ D @ v for D in derivs]
                row += 1
        return J

    res = least_squares(
        resid, np.array(p0, float), jac=jac, method="lm",
        xtol=1e-15, ftol=1e-15, gtol=1e-15, max_nfev=max_iter,
    )
    if res.status == 0:
        raise FitConvergenceError(f"APES fit did not converge in {max_iter} iterations")

    J = res.jac
    sv = np.linalg.svd(J, compute_uv=False)
    if sv[-1] <= sv[0] * 1e-10:
        raise RankDeficientError(
            "singular Jacobian: the supplied branches do not determine "
            + ", ".join(names)
        )
    r = res.fun
    dof = max(E.size - n_par, 1)
    sigma2 = float(r @ r) / dof
    cov = np.linalg.inv(J.T @ J) * sigma2
    s, d, w, lam, dell = unpack(res.x)
    s, d = abs(s), abs(d)
    fitted = VibronicParameterSet(
        g.spin, lam, dell, 0.5 * (s + d), 0.5 * (s - d), w, provenance=f"fit({g.provenance})"
    )
    rel = math.sqrt(float(np.mean(r**2))) / max(math.sqrt(float(np.mean(E**2))), 1e-300)
    report = FitReport(
        parameter_names=tuple(names),
        values=np.array([s, d, *res.x[2:]]),
        stderr=np.sqrt(np.diag(cov)),
        residuals=r.reshape(E.shape),
        relative_std=rel,
        n_iterations=int(res.nfev),
        converged=True,
        message=str(res.message),
    )
    return fitted, report
