import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from qutritflow.evolution import SPECIAL_CASES, CaseTag, EvolutionParams, UnsupportedCase, propagate_exact, riccati_rhs, sample_params
from qutritflow.state_space import StateTag, classify, residuals
from qutritflow.stationary import (
    DomainError,
    NotStationary,
    Stability,
    ansatz_classify,
    ansatz_polynomials,
    ansatz_printed_tag,
    ansatz_vector,
    catalog,
    diagonal_boundary,
    diagonal_det,
    find_equilibria,
    newton_equilibrium,
    rational_limit,
    rational_limit_numeric,
    stability,
    triangle_membership,
)
from qutritflow.su3 import SQRT3, star

from ._support import e, vec8


def entry(eqs, source):
    hits = [q for q in eqs if q.source.startswith(source)]
    assert hits, f"no catalog entry {source!r}"
    return hits[0]


@pytest.mark.parametrize("case", SPECIAL_CASES)
def test_catalog_entries_are_equilibria(case, rng):
    p = sample_params(case, rng)
    eqs = catalog(p, samples=3)
    assert eqs
    for q in eqs:
        assert np.linalg.norm(riccati_rhs(q.xi, p)) < 1e-9
        assert q.state_class.valid
        assert q.report.crosscheck, (q.source, q.report.growth)


@pytest.mark.parametrize("case", [c for c in SPECIAL_CASES if c.linear])
def test_linear_equilibria_marginal(case, rng):
    for q in catalog(sample_params(case, rng), samples=2):
        assert q.stability is Stability.MARGINAL


def test_nonlin_star_pos_labels(rng):
    p = sample_params(CaseTag.NONLIN_STAR_POS, rng)
    eqs = catalog(p)
    assert entry(eqs, "pure, b/|b|").stability is Stability.STABLE
    assert entry(eqs, "mixed boundary, -b/(2|b|)").stability is not Stability.STABLE
    assert entry(eqs, "mixed boundary").tag is StateTag.MIXED_BOUNDARY


def test_nonlin_star_neg_labels(rng):
    p = sample_params(CaseTag.NONLIN_STAR_NEG, rng)
    eqs = catalog(p)
    stable = entry(eqs, "mixed boundary, b/(2|b|)")
    assert stable.stability is Stability.STABLE
    assert stable.tag is StateTag.MIXED_BOUNDARY
    assert entry(eqs, "pure, -b/|b|").stability is not Stability.STABLE


def test_nonlin_null_cubic_labels(rng):
    eqs = catalog(sample_params(CaseTag.NONLIN_NULL_CUBIC, rng))
    assert entry(eqs, "pure, ansatz with plus sign").stability is Stability.STABLE
    assert entry(eqs, "pure, ansatz with minus sign").stability is Stability.UNSTABLE
    assert entry(eqs, "pure, proportional to g*g").stability is Stability.UNSTABLE
    assert all(q.tag is StateTag.PURE for q in eqs)


@pytest.mark.parametrize("b3,b8,stable", [
    (0.5, 0.3, "(sqrt3/2, 1/2)"),   # g1 largest: the printed claim
    (-0.5, 0.3, "(-sqrt3/2, 1/2)"),
    (0.1, -0.8, "(0, -1)"),
])
def test_nonlin_diagonal_stable_vertex_has_largest_gain(b3, b8, stable):
    b = b3 * e(3) + b8 * e(8)
    p = EvolutionParams.make(b=b)
    assert p.case_tag is CaseTag.NONLIN_DIAGONAL
    for q in catalog(p):
        want = Stability.STABLE if q.source == f"pure, vertex {stable}" else Stability.UNSTABLE
        assert q.stability is want, q.source


def test_star_neg_basin_counterexamples():
    b = SQRT3 / 2 * e(3) - 0.5 * e(8)
    p = EvolutionParams.make(b=b)
    assert p.case_tag is CaseTag.NONLIN_STAR_NEG
    # the printed first target equals b, which is not a state
    assert not classify(b).valid
    x1 = propagate_exact(0.5 * e(3) + 0.5 * e(8), p, 60.0)
    assert np.abs(x1 - (SQRT3 / 2 * e(3) + 0.5 * e(8))).max() < 1e-4
    c = (1 - SQRT3) / 2
    x2 = propagate_exact(c * e(3) + c * e(8), p, 60.0)
    assert np.abs(x2 + e(8)).max() < 1e-4
    # and neither went to the asymptotically stable mixed point b/2
    assert np.linalg.norm(x1 - b / 2) > 0.5 and np.linalg.norm(x2 - b / 2) > 0.5


def test_linear_null_arc_is_interior(rng):
    p = sample_params(CaseTag.LINEAR_NULL_CUBIC, rng)
    arc = [q for q in catalog(p) if q.source == "interior arc"]
    assert len(arc) == 10
    for q in arc:
        assert q.tag is StateTag.INTERIOR
        assert q.xi @ q.xi == pytest.approx(1 / 3)


def test_general_catalog_unsupported(rng):
    with pytest.raises(UnsupportedCase):
        catalog(sample_params(CaseTag.GENERAL, rng))


def test_stability_requires_equilibrium():
    with pytest.raises(NotStationary):
        stability(0.1 * e(1), EvolutionParams.make(e(2), e(3)))


# ---- rational case ----------------------------------------------------------


def test_rational_limit_is_pure(rng):
    p = sample_params(CaseTag.RATIONAL, rng)
    lim = rational_limit(p)
    assert np.linalg.norm(riccati_rhs(lim, p)) < 1e-12
    assert classify(lim).tag is StateTag.PURE
    assert np.abs(rational_limit_numeric(p) - lim).max() < 1e-8
    with pytest.raises(UnsupportedCase):
        rational_limit(sample_params(CaseTag.GENERAL, rng))


def test_rational_catalog_marginal(rng):
    (q,) = catalog(sample_params(CaseTag.RATIONAL, rng))
    assert q.stability is Stability.MARGINAL
    assert np.allclose(q.report.raw_eigenvalues, 0, atol=1e-6)


# ---- general case -----------------------------------------------------------


def test_find_equilibria_general(rng):
    p = sample_params(CaseTag.GENERAL, rng)
    eqs = find_equilibria(p, n_random=10, grid=5)
    assert eqs
    for q in eqs:
        assert np.linalg.norm(riccati_rhs(q.xi, p)) < 1e-9
        assert q.state_class.valid


def test_newton_converges_from_nearby():
    p = EvolutionParams.make(b=-e(8))
    x = newton_equilibrium(-e(8) + 1e-3 * e(1), p)
    assert x is not None and np.allclose(x, -e(8), atol=1e-10)


# ---- ansatz plane -----------------------------------------------------------

coef = st.floats(-1.5, 1.5)


@given(coef, coef, vec8)
def test_ansatz_expanded_polynomials_match(mu, nu, a):
    if np.linalg.norm(a) < 1e-3:
        return
    a = a / np.linalg.norm(a)
    x = ansatz_vector(mu, nu, a)
    ball, det, pure = ansatz_polynomials(mu, nu, a, printed=False)
    r_ball, r_det, _ = residuals(x)
    assert ball == pytest.approx(r_ball, abs=1e-10)
    assert det == pytest.approx(r_det, abs=1e-10)
    assert pure == pytest.approx(x @ star(x, x), abs=1e-10)


def test_printed_cubics_differ_only_in_mu_nu_term(rng):
    a = rng.normal(size=8)
    a /= np.linalg.norm(a)
    assert np.allclose(ansatz_polynomials(0.4, 0.0, a), ansatz_polynomials(0.4, 0.0, a, printed=False))
    assert np.allclose(ansatz_polynomials(0.0, 0.4, a), ansatz_polynomials(0.0, 0.4, a, printed=False))
    assert not np.allclose(ansatz_polynomials(0.3, 0.4, a), ansatz_polynomials(0.3, 0.4, a, printed=False))


@given(coef, coef)
def test_ansatz_classify_uses_direct_conditions(mu, nu):
    a = np.array([0.3, -0.2, 0.5, 0.1, 0.0, 0.4, -0.6, 0.2])
    assert ansatz_classify(mu, nu, a) == classify(ansatz_vector(mu, nu, a))
    assert isinstance(ansatz_printed_tag(mu, nu, a), StateTag)


def test_ansatz_rejects_zero():
    with pytest.raises(ValueError):
        ansatz_classify(0.1, 0.1, np.zeros(8))


# ---- diagonal plane -----------------------------------------------------------


def test_diagonal_boundary_empty_inside_incircle():
    assert diagonal_boundary(0.1) == []
    assert diagonal_boundary(0.2) == []


def test_diagonal_boundary_incircle_touches_edges():
    pts = diagonal_boundary(0.25)
    assert len(pts) == 3
    for x3, x8 in pts:
        assert diagonal_det(x3, x8) == pytest.approx(1.0, abs=1e-9)


@pytest.mark.parametrize("kappa", [0.3, 0.5, 0.75, 0.95])
def test_diagonal_boundary_on_curve(kappa):
    pts = diagonal_boundary(kappa)
    assert len(pts) == 6
    for x3, x8 in pts:
        assert x3**2 + x8**2 == pytest.approx(kappa)
        assert diagonal_det(x3, x8) == pytest.approx(1.0, abs=1e-9)
        v = x3 * e(3) + x8 * e(8)
        assert classify(v).tag is StateTag.MIXED_BOUNDARY


@pytest.mark.parametrize("kappa", [0.0, 1.0, -0.2, 1.5])
def test_diagonal_boundary_domain(kappa):
    with pytest.raises(DomainError):
        diagonal_boundary(kappa)


def test_triangle_membership():
    assert triangle_membership(0.0, 0.0)
    assert not triangle_membership(0.0, -1.0)
    assert not triangle_membership(0.0, 0.6)
