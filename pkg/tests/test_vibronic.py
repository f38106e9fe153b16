import math

import numpy as np
import pytest
import scipy.sparse as sp
from hypothesis import given, settings
from hypothesis import strategies as st

from pjt6c import preset_parameters
from pjt6c.vibronic import (
    DETERMINANTS,
    CutoffOverflowError,
    OscillatorBasis,
    RankDeficientError,
    VibronicParameterSet,
    apes_slice,
    build_electronic_W,
    build_pjt_coupling,
    build_total_hamiltonian,
    classical_matrix,
    couplings_from_jt_energies,
    fit_apes,
    jt_coefficients,
    jt_energies_from_couplings,
)

from oracles import exe_dvr_lowest

energies = st.floats(-2000, 2000, allow_nan=False)


def params(lam=0.0, delta=0.0, fo=0.0, fu=0.0, w=180.3, spin="singlet"):
    return VibronicParameterSet(spin, lam, delta, fo, fu, w)


# --- basis data ------------------------------------------------------------


def test_U_orthogonal_and_rows():
    U = DETERMINANTS.U
    assert np.allclose(U.T @ U, np.eye(4), atol=1e-12)
    r = 1 / math.sqrt(2)
    np.testing.assert_allclose(U[0], [r, 0, 0, r])
    np.testing.assert_allclose(U[1], [r, 0, 0, -r])
    np.testing.assert_allclose(U[2], [0, r, r, 0])
    np.testing.assert_allclose(U[3], [0, r, -r, 0])


@pytest.mark.parametrize("n_max", [0, 1, 5, 40])
def test_oscillator_basis_dimension_and_roundtrip(n_max):
    b = OscillatorBasis(n_max)
    assert b.dimension == (n_max + 1) * (n_max + 2) // 2
    for n in range(n_max + 1):
        for m in range(n_max + 1 - n):
            assert b.state(b.index(n, m)) == (n, m)


def test_position_operator_matrix_elements():
    b = OscillatorBasis(3)
    X = b.x_operator().toarray()
    assert X[b.index(0, 0), b.index(1, 0)] == pytest.approx(math.sqrt(0.5))
    assert X[b.index(2, 1), b.index(1, 1)] == pytest.approx(1.0)
    Y = b.y_operator().toarray()
    assert Y[b.index(0, 2), b.index(0, 1)] == pytest.approx(1.0)
    assert np.allclose(X, X.T) and np.allclose(Y, Y.T)


def test_parameter_invariants():
    with pytest.raises(ValueError):
        params(w=0.0)
    with pytest.raises(ValueError):
        params(fo=float("nan"))
    assert params(fo=-3.0).f_o_meV == -3.0


# --- electronic W ----------------------------------------------------------


def test_W_zero():
    assert np.array_equal(build_electronic_W(params()), np.zeros((4, 4)))


def test_W_cc2_singlet_eigenvalues():
    ev = np.linalg.eigvalsh(build_electronic_W(params(-168.5, -619.5)))
    np.testing.assert_allclose(ev, [-168.5, 168.5, 619.5, 619.5], atol=1e-10)


def test_W_cc2_triplet_diagonal():
    # hand expansion: xx/yy -> (L - D)/2, xy/yx -> (-L - D)/2
    W = build_electronic_W(params(393.0, 7.0))
    np.testing.assert_allclose(np.diag(W), [193.0, -200.0, -200.0, 193.0], atol=1e-12)
    assert W[0, 3] == pytest.approx((393.0 + 7.0) / 2)
    assert W[1, 2] == pytest.approx((393.0 - 7.0) / 2)


@settings(max_examples=300, deadline=None)
@given(energies, energies)
def test_W_spectrum_property(lam, delta):
    ev = np.linalg.eigvalsh(build_electronic_W(params(lam, delta)))
    np.testing.assert_allclose(ev, np.sort([lam, -lam, -delta, -delta]), atol=1e-10)


# --- JT coupling -----------------------------------------------------------


def test_pjt_coupling_zero():
    b = OscillatorBasis(3)
    M = build_pjt_coupling(params(), b.x_operator(), b.y_operator())
    assert M.nnz == 0 or np.abs(M.toarray()).max() == 0


def test_pjt_classical_x_point():
    fo, fu = 2.0, 0.5
    cx, cy = jt_coefficients(params(fo=fo, fu=fu))
    np.testing.assert_array_equal(np.diag(cx), [fo + fu, -(fo - fu), fo - fu, -(fo + fu)])
    assert np.count_nonzero(cx - np.diag(np.diag(cx))) == 0


def test_pjt_classical_y_point():
    fo, fu = 2.0, 0.5
    M = classical_matrix(params(fo=fo, fu=fu), 0.0, 1.0) - 0.5 * 180.3 * np.eye(4)
    assert M[0, 1] == fo and M[0, 2] == fu and M[0, 3] == 0.0
    assert np.allclose(M, M.T)


def test_pjt_coupling_matches_classical_block():
    # one-quantum matrix element of x is 1/sqrt(2): block equals cx / sqrt(2)
    p = params(fo=3.0, fu=1.0)
    b = OscillatorBasis(2)
    M = build_pjt_coupling(p, b.x_operator(), b.y_operator()).toarray()
    i, j = b.index(0, 0), b.index(1, 0)
    d = b.dimension
    block = np.array([[M[a * d + i, c * d + j] for c in range(4)] for a in range(4)])
    cx, _ = jt_coefficients(p)
    np.testing.assert_allclose(block, cx / math.sqrt(2), atol=1e-14)


# --- total Hamiltonian -----------------------------------------------------


def test_total_hamiltonian_zero_point():
    H = build_total_hamiltonian(params(), 0)
    np.testing.assert_allclose(np.linalg.eigvalsh(H.matrix.toarray()), [180.3] * 4)


def test_total_hamiltonian_dimension_at_forty_quanta():
    assert build_total_hamiltonian(params(), 40).dim == 3444


def test_cutoff_overflow():
    with pytest.raises(CutoffOverflowError):
        build_total_hamiltonian(params(), 1000)
    with pytest.raises(CutoffOverflowError):
        build_total_hamiltonian(params(), 10, max_dimension=100)


def test_total_hamiltonian_symmetric():
    H = build_total_hamiltonian(preset_parameters("cc2_singlet"), 12).matrix
    assert abs(H - H.T).max() < 1e-10


def test_uncoupled_spectrum_is_oscillator_plus_W():
    p = params(-168.5, -619.5)
    n_max = 4
    H = build_total_hamiltonian(p, n_max)
    got = np.linalg.eigvalsh(H.matrix.toarray())
    w = np.linalg.eigvalsh(build_electronic_W(p))
    expect = sorted(180.3 * (N + 1) + x for N in range(n_max + 1) for _ in range(N + 1) for x in w)
    np.testing.assert_allclose(got, expect, atol=1e-9)


def test_uncoupled_block_diagonal_in_quanta():
    H = build_total_hamiltonian(params(-10.0, 20.0), 3)
    d = H.oscillator.dimension
    coo = H.matrix.tocoo()
    assert np.all(coo.row % d == coo.col % d)


def test_fu_zero_is_two_exe_problems():
    # F_u = 0, W = 0: each level of E x e appears twice
    F = math.sqrt(2 * 180.3 * 60.0)
    H = build_total_hamiltonian(params(fo=F), 40)
    from scipy.sparse.linalg import eigsh

    got = np.sort(eigsh(H.matrix, k=6, which="SA", tol=1e-13)[0])
    ref = exe_dvr_lowest(F, 180.3, k=3)
    np.testing.assert_allclose(got[::2], ref, atol=1e-6)
    np.testing.assert_allclose(got[1::2], ref, atol=1e-6)


# --- classical APES ---------------------------------------------------------


def test_apes_origin_is_W_spectrum():
    p = preset_parameters("cc2_singlet")
    (s,) = apes_slice(p, [0.0])
    np.testing.assert_allclose(s.branch_energies, [-168.5, 168.5, 619.5, 619.5], atol=1e-10)
    # ties ordered by label: A1', then E'x before E'y
    np.testing.assert_array_equal(s.compositions[2], [0, 1, 0, 0])
    np.testing.assert_array_equal(s.compositions[3], [0, 0, 1, 0])


def test_apes_lowest_minimum_pure_jt():
    fo, fu, w = 136.3, 123.4, 180.3
    p = params(fo=fo, fu=fu, w=w)
    x0 = -(fo + fu) / w
    xs = x0 + np.linspace(-0.05, 0.05, 201)
    low = np.array([s.branch_energies[0] for s in apes_slice(p, xs)])
    assert low.min() == pytest.approx(-(fo + fu) ** 2 / (2 * w), abs=1e-3)
    assert xs[low.argmin()] == pytest.approx(x0, abs=1e-3)
    # mirror minimum
    (m,) = apes_slice(p, [-x0])
    assert m.branch_energies[0] == pytest.approx(-(fo + fu) ** 2 / (2 * w), abs=1e-9)


@settings(max_examples=60, deadline=None)
@given(
    st.floats(-400, 400), st.floats(-700, 700), st.floats(-300, 300), st.floats(-300, 300),
    st.floats(-3, 3), st.floats(-3, 3),
)
def test_apes_threefold_symmetry(lam, delta, fo, fu, x, y):
    p = params(lam, delta, fo, fu)
    c, s = math.cos(2 * math.pi / 3), math.sin(2 * math.pi / 3)
    pts = [(x, y), (c * x - s * y, s * x + c * y), (c * x + s * y, -s * x + c * y)]
    ref = np.linalg.eigvalsh(classical_matrix(p, *pts[0]))
    for px, py in pts[1:]:
        np.testing.assert_allclose(np.linalg.eigvalsh(classical_matrix(p, px, py)), ref, atol=1e-9)


@pytest.mark.parametrize("preset", [None, "cc2_singlet"])
def test_minima_loop_has_no_A2_admixture(preset):
    base = preset_parameters(preset) if preset else params()
    f_o, f_u = couplings_from_jt_energies(187.0, 0.46, 180.3)
    p = base.replace(f_o_meV=f_o, f_u_meV=f_u, hbar_omega_meV=180.3)
    R = (f_o + f_u) / 180.3
    for phi in np.linspace(0, 2 * math.pi, 13):
        (s,) = apes_slice(p, [R * math.cos(phi)], y=R * math.sin(phi))
        assert s.compositions[0][3] < 0.01


def test_apes_rejects_non_finite():
    with pytest.raises(ValueError):
        apes_slice(params(), [float("inf")])


# --- JT energies <-> couplings ---------------------------------------------


def test_couplings_zero():
    assert couplings_from_jt_energies(0, 0, 50) == (0.0, 0.0)


def test_couplings_singlet_values():
    # sqrt(2*180.3*187) = 259.677, sqrt(2*180.3*0.46) = 12.879
    fo, fu = couplings_from_jt_energies(187, 0.46, 180.3)
    assert fo + fu == pytest.approx(259.677107, abs=1e-5)
    assert fo - fu == pytest.approx(12.879286, abs=1e-5)
    assert fo == pytest.approx(136.278, abs=1e-3) and fu == pytest.approx(123.399, abs=1e-3)


@pytest.mark.parametrize("pair", [(187, 0.46), (239, 0.14)])
def test_couplings_preset_roundtrip(pair):
    back = jt_energies_from_couplings(*couplings_from_jt_energies(*pair, 180.3), 180.3)
    np.testing.assert_allclose(back, pair, rtol=1e-10)


@settings(max_examples=300, deadline=None)
@given(st.floats(0, 1e3), st.floats(0, 1), st.floats(1, 500))
def test_couplings_roundtrip_property(e1, frac, w):
    e2 = e1 * frac
    fo, fu = couplings_from_jt_energies(e1, e2, w)
    assert fo >= fu >= 0
    b1, b2 = jt_energies_from_couplings(fo, fu, w)
    assert b1 == pytest.approx(e1, rel=1e-10, abs=1e-300)
    assert b2 == pytest.approx(e2, rel=1e-10, abs=1e-12 * max(e1, 1e-300))


def test_couplings_reject_negative():
    with pytest.raises(ValueError):
        couplings_from_jt_energies(-1, 0, 180)
    with pytest.raises(ValueError):
        couplings_from_jt_energies(1, -1, 180)


# --- fitting ---------------------------------------------------------------

TRUE = params(fo=136.3, fu=123.4, w=180.3)
XS = np.linspace(-2.5, 2.5, 41)


def guess():
    return params(fo=110.0, fu=90.0, w=150.0)


def test_fit_exact_recovery():
    fitted, rep = fit_apes(apes_slice(TRUE, XS), guess())
    for name in ("f_o_meV", "f_u_meV", "hbar_omega_meV"):
        assert getattr(fitted, name) == pytest.approx(getattr(TRUE, name), rel=1e-6)
    assert rep.relative_std < 1e-9
    assert rep.residuals.shape == (len(XS), 4)


def test_fit_with_electronic_terms():
    truth = params(-168.5, -619.5, 136.3, 123.4)
    start = params(-150.0, -600.0, 120.0, 100.0, 170.0)
    fitted, _ = fit_apes(apes_slice(truth, XS), start, fit_electronic=True)
    for name in ("lambda_meV", "delta_meV", "f_o_meV", "f_u_meV", "hbar_omega_meV"):
        assert getattr(fitted, name) == pytest.approx(getattr(truth, name), rel=1e-6)


def test_fit_noisy_recovery():
    rng = np.random.default_rng(7)
    samples = [
        (s.x, np.sort(np.array(s.branch_energies) * (1 + 0.01 * rng.standard_normal(4))))
        for s in apes_slice(TRUE, XS)
    ]
    fitted, rep = fit_apes(samples, guess())
    assert fitted.f_o_meV == pytest.approx(136.3, rel=0.05)
    assert fitted.f_u_meV == pytest.approx(123.4, rel=0.05)
    assert fitted.hbar_omega_meV == pytest.approx(180.3, rel=0.05)
    assert rep.relative_std < 0.03


def test_fit_two_points_rank_deficient():
    with pytest.raises(RankDeficientError):
        fit_apes(apes_slice(TRUE, [-1.0, 1.0]), guess())


def test_fit_one_sided_rejected():
    with pytest.raises(RankDeficientError):
        fit_apes(apes_slice(TRUE, np.linspace(0.1, 2, 10)), guess())


def test_fit_lowest_branch_cannot_see_difference_coupling():
    low = [(s.x, s.branch_energies[:1]) for s in apes_slice(TRUE, XS)]
    with pytest.raises(RankDeficientError):
        fit_apes(low, guess())
