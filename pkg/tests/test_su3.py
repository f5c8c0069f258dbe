import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from scipy.linalg import expm

from qutritflow import su3
from qutritflow.su3 import (
    D_TABLE,
    F_TABLE,
    GELL_MANN,
    SQRT3,
    NonHermitianInput,
    NonUnitTrace,
    OverflowRisk,
    algebra_case,
    bloch_to_density,
    cubic_invariant,
    cubic_roots,
    density_to_bloch,
    exp_lambda,
    lam_dot,
    listed_tables,
    matrix_exp,
    power_coefficients,
    power_coefficients_closed,
    star,
    star_matrix,
    wedge,
    wedge_matrix,
)

from ._support import e, states, vec8


# ---- oracles -------------------------------------------------------------


def wedge_by_commutator(a, b):
    # [a.l, b.l] = (2i/sqrt3) (a^b).l  and  Tr(l_i l_j) = 2 delta_ij
    c = lam_dot(a) @ lam_dot(b) - lam_dot(b) @ lam_dot(a)
    return np.array([(SQRT3 / 4j * np.trace(c @ g)).real for g in GELL_MANN])


def star_by_anticommutator(a, b):
    # {a.l, b.l} = (4/3) a.b + (2/sqrt3) (a*b).l
    c = lam_dot(a) @ lam_dot(b) + lam_dot(b) @ lam_dot(a)
    return np.array([(SQRT3 / 4 * np.trace(c @ g)).real for g in GELL_MANN])


def wedge_3(a, b):
    """Third coordinate of the wedge product written out by hand."""
    return SQRT3 * (a[0] * b[1] - a[1] * b[0] + (a[3] * b[4] - a[4] * b[3]) / 2 - (a[5] * b[6] - a[6] * b[5]) / 2)


def star_8(a, b):
    """Eighth coordinate of the star product written out by hand."""
    return (a[0] * b[0] + a[1] * b[1] + a[2] * b[2] - a[7] * b[7]
            - (a[3] * b[3] + a[4] * b[4] + a[5] * b[5] + a[6] * b[6]) / 2)


# ---- Gell-Mann basis and structure constants ------------------------------


def test_gell_mann_hermitian_traceless_orthogonal():
    for g in GELL_MANN:
        assert np.allclose(g, g.conj().T)
        assert abs(np.trace(g)) < 1e-15
    gram = np.einsum("iab,jba->ij", GELL_MANN, GELL_MANN)
    assert np.allclose(gram, 2 * np.eye(8), atol=1e-15)


def test_tables_match_listed_constants():
    f, d = listed_tables()
    assert np.abs(f - F_TABLE).max() < 1e-14
    assert np.abs(d - D_TABLE).max() < 1e-14


@pytest.mark.parametrize("idx,value", [((1, 2, 3), 1.0), ((4, 5, 8), SQRT3 / 2), ((6, 7, 8), SQRT3 / 2),
                                       ((1, 4, 7), 0.5), ((5, 1, 6), 0.5), ((6, 3, 7), 0.5)])
def test_known_f_values(idx, value):
    i, j, k = (n - 1 for n in idx)
    assert F_TABLE[i, j, k] == pytest.approx(value, abs=1e-15)
    assert F_TABLE[j, i, k] == pytest.approx(-value, abs=1e-15)


@pytest.mark.parametrize("idx,value", [((1, 1, 8), 1 / SQRT3), ((8, 8, 8), -1 / SQRT3), ((4, 4, 8), -0.5 / SQRT3),
                                       ((2, 4, 7), -0.5), ((3, 6, 6), -0.5), ((1, 4, 6), 0.5)])
def test_known_d_values(idx, value):
    i, j, k = (n - 1 for n in idx)
    for perm in ((i, j, k), (k, i, j), (j, k, i), (j, i, k)):
        assert D_TABLE[perm] == pytest.approx(value, abs=1e-15)


def test_table_symmetries():
    assert np.array_equal(F_TABLE, -F_TABLE.transpose(1, 0, 2))
    assert np.array_equal(F_TABLE, F_TABLE.transpose(1, 2, 0))
    assert np.array_equal(D_TABLE, D_TABLE.transpose(1, 0, 2))
    assert np.array_equal(D_TABLE, D_TABLE.transpose(0, 2, 1))
    assert np.abs(np.einsum("ijj->i", D_TABLE)).max() < 1e-15  # d is traceless


# ---- products -------------------------------------------------------------


@given(vec8, vec8)
def test_wedge_matches_commutator(a, b):
    assert np.allclose(wedge(a, b), wedge_by_commutator(a, b), atol=1e-12)
    assert wedge(a, b)[2] == pytest.approx(wedge_3(a, b), abs=1e-12)


@given(vec8, vec8)
def test_star_matches_anticommutator(a, b):
    assert np.allclose(star(a, b), star_by_anticommutator(a, b), atol=1e-12)
    assert star(a, b)[7] == pytest.approx(star_8(a, b), abs=1e-12)


@given(vec8, vec8)
def test_product_symmetry(a, b):
    assert np.allclose(wedge(a, b), -wedge(b, a), atol=1e-12)
    assert np.allclose(wedge(a, a), 0, atol=1e-12)
    assert np.allclose(star(a, b), star(b, a), atol=1e-12)


@given(vec8, vec8)
def test_product_matrices(a, x):
    assert np.allclose(wedge_matrix(a) @ x, wedge(a, x), atol=1e-12)
    assert np.allclose(star_matrix(a) @ x, star(a, x), atol=1e-12)


def test_diagonal_star():
    a = np.zeros(8)
    b = np.zeros(8)
    a[2], a[7], b[2], b[7] = 0.3, -1.1, 2.0, 0.7
    s = star(a, b)
    assert s[2] == pytest.approx(a[2] * b[7] + a[7] * b[2])
    assert s[7] == pytest.approx(a[2] * b[2] - a[7] * b[7])
    assert np.allclose(np.delete(s, [2, 7]), 0)


def test_basis_products():
    assert np.allclose(wedge(e(1), e(2)), SQRT3 * e(3))
    assert np.allclose(star(e(8), e(8)), -e(8))
    assert np.allclose(star(e(3), e(3)), e(8))


@given(vec8)
def test_cubic_invariant_coordinate_form(a):
    assert cubic_invariant(a) == pytest.approx(a @ star(a, a), abs=1e-10)
    assert cubic_invariant(a) == pytest.approx(SQRT3 / 2 * np.trace(np.linalg.matrix_power(lam_dot(a), 3)).real,
                                               abs=1e-10)


def test_as_vec8_rejects():
    with pytest.raises(ValueError):
        su3.as_vec8(np.zeros(7))
    with pytest.raises(ValueError):
        su3.as_vec8([np.nan] * 8)


# ---- density matrices -----------------------------------------------------


@given(states())
def test_density_round_trip(xi):
    rho = bloch_to_density(xi)
    assert np.trace(rho).real == pytest.approx(1.0)
    assert np.allclose(density_to_bloch(rho), xi, atol=1e-13)


def test_density_errors():
    with pytest.raises(NonUnitTrace):
        density_to_bloch(np.eye(3))
    bad = np.eye(3) / 3
    bad[0, 1] = 0.1
    with pytest.raises(NonHermitianInput):
        density_to_bloch(bad)


def test_maximally_mixed():
    assert np.allclose(bloch_to_density(np.zeros(8)), np.eye(3) / 3)


# ---- cubic and powers -----------------------------------------------------


@given(vec8)
def test_cubic_roots_are_eigenvalues(a):
    r = cubic_roots(a).as_array()
    h = np.sort(np.linalg.eigvalsh(lam_dot(a)))[::-1]
    assert np.allclose(r, h, atol=1e-7 * max(1.0, np.linalg.norm(a)))


@pytest.mark.parametrize("n", [0, 1, 2, 3, 5, 8])
def test_power_coefficients(rng, n):
    a = rng.normal(size=8)
    c, d, ee = power_coefficients(a, n)
    mat = c * np.eye(3) + d * lam_dot(a) + ee * lam_dot(star(a, a))
    assert np.allclose(mat, np.linalg.matrix_power(lam_dot(a), n), atol=1e-10)
    if n >= 1:
        assert np.allclose(power_coefficients_closed(a, n), (c, d, ee), atol=1e-9)


# ---- exponentials ---------------------------------------------------------


@pytest.mark.parametrize("a,case", [
    (np.zeros(8), "zero"),
    (-e(8), "star+"),
    (e(8), "star-"),
    (e(3), "null"),
    (0.2 * e(3) + 0.9 * e(8), "diagonal"),
    (np.arange(1.0, 9.0), "generic"),
])
def test_algebra_case(a, case):
    assert algebra_case(a) == case


@pytest.mark.parametrize("tau", [0.7, -1.3, 2j, 0.4 - 0.9j])
@pytest.mark.parametrize("a", [-e(8), e(8), e(3), 0.2 * e(3) + 0.9 * e(8), np.arange(1.0, 9.0) / 5, e(1) + e(4)])
def test_exp_lambda_closed_forms(a, tau):
    want = expm(tau * lam_dot(a))
    got = exp_lambda(tau, a, check=False)
    assert np.abs(got - want).max() < 1e-11 * max(1.0, np.abs(want).max())


def test_matrix_exp_guards():
    with pytest.raises(OverflowRisk):
        matrix_exp(1e4 * np.eye(3))
    with pytest.raises(ValueError):
        matrix_exp(np.full((3, 3), np.inf))
    m = np.array([[0, 1], [-1, 0]], dtype=complex)
    assert np.allclose(matrix_exp(m), [[math.cos(1), math.sin(1)], [-math.sin(1), math.cos(1)]])


@given(st.floats(-2, 2), vec8)
def test_exp_lambda_property(tau, a):
    a = a / max(1.0, np.linalg.norm(a))
    assert np.allclose(exp_lambda(tau, a), expm(tau * lam_dot(a)), atol=1e-10)
