import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from scipy.linalg import expm

from qutritflow.evolution import (
    SPECIAL_CASES,
    CaseTag,
    EvolutionParams,
    Trajectory,
    UnsupportedCase,
    closed_form,
    closed_form_grid,
    convexity_lambda,
    convexity_residual,
    detect_case,
    embed_qubit,
    integrate,
    linearization,
    propagate_exact,
    propagate_exact_grid,
    qubit_part,
    qubit_rhs,
    riccati_jacobian,
    riccati_rhs,
    sample_params,
    time_grid,
    validate_closed_forms,
)
from qutritflow.state_space import classify, random_state
from qutritflow.su3 import GELL_MANN, SQRT3, bloch_to_density, density_to_bloch, lam_dot, star

from ._support import e, states, vec8

seeds = st.integers(min_value=0, max_value=2**31)


def rhs_oracle(xi, a, b):
    """Bloch components of -i[H, rho] + {G, rho} - 2 Tr(rho G) rho."""
    rho = bloch_to_density(xi)
    h, g = lam_dot(a), lam_dot(b)
    drho = -1j * (h @ rho - rho @ h) + g @ rho + rho @ g - 2 * np.trace(rho @ g) * rho
    return np.array([(SQRT3 / 2 * np.trace(drho @ m)).real for m in GELL_MANN])


def exact_oracle(xi0, a, b, t):
    k = lam_dot(np.asarray(b) - 1j * np.asarray(a))
    amat = expm(t * k)
    r = amat @ bloch_to_density(xi0) @ amat.conj().T
    return density_to_bloch(r / np.trace(r).real, tol=1e-8)


# ---- case detection -------------------------------------------------------


@pytest.mark.parametrize("a,b,tag", [
    (np.zeros(8), np.zeros(8), CaseTag.LINEAR_DIAGONAL),
    (-e(8), np.zeros(8), CaseTag.LINEAR_STAR_POS),
    (e(8), np.zeros(8), CaseTag.LINEAR_STAR_NEG),
    (e(3), np.zeros(8), CaseTag.LINEAR_NULL_CUBIC),
    (0.5 * e(3) + 0.5 * e(8), np.zeros(8), CaseTag.LINEAR_DIAGONAL),
    (np.zeros(8), -e(8), CaseTag.NONLIN_STAR_POS),
    (np.zeros(8), e(8), CaseTag.NONLIN_STAR_NEG),
    (np.zeros(8), e(3), CaseTag.NONLIN_NULL_CUBIC),
    (np.zeros(8), 0.3 * e(3) + 0.2 * e(8), CaseTag.NONLIN_DIAGONAL),
    (e(1), e(2), CaseTag.RATIONAL),
    (e(1), e(1), CaseTag.GENERAL),
    (np.arange(8.0), np.zeros(8), CaseTag.GENERAL),
])
def test_detect_case(a, b, tag):
    assert detect_case(a, b) is tag
    assert EvolutionParams.make(a, b).case_tag is tag


@pytest.mark.parametrize("case", list(SPECIAL_CASES) + [CaseTag.GENERAL])
def test_sample_params_lands_in_case(case, rng):
    for _ in range(3):
        assert sample_params(case, rng).case_tag is case


def test_params_are_read_only():
    p = EvolutionParams.make(e(1), e(2))
    with pytest.raises(ValueError):
        p.a[0] = 2.0


# ---- right-hand side --------------------------------------------------------


@given(states(), vec8, vec8)
def test_rhs_matches_density_matrix_form(xi, a, b):
    p = EvolutionParams.make(a, b)
    assert np.allclose(riccati_rhs(xi, p), rhs_oracle(xi, a, b), atol=1e-10)


@given(states(), vec8, vec8)
def test_jacobian_finite_difference(xi, a, b):
    p = EvolutionParams.make(a, b)
    h = 1e-6
    fd = np.column_stack([(riccati_rhs(xi + h * e(i), p) - riccati_rhs(xi - h * e(i), p)) / (2 * h)
                          for i in range(1, 9)])
    assert np.allclose(riccati_jacobian(xi, p), fd, atol=1e-6 * (1 + np.abs(fd).max()))


def test_linear_rhs_tangent_to_sphere(rng):
    a = rng.normal(size=8)
    p = EvolutionParams.make(a)
    xi = random_state(rng)
    v = riccati_rhs(xi, p)
    assert abs(v @ xi) < 1e-13
    assert abs(v @ star(xi, xi)) < 1e-13


# ---- exact propagator -----------------------------------------------------


@given(states(), vec8, vec8, st.floats(-3, 3))
def test_propagate_exact_matches_expm(xi, a, b, t):
    a, b = a / 3, b / 3
    p = EvolutionParams.make(a, b)
    assert np.allclose(propagate_exact(xi, p, t), exact_oracle(xi, a, b, t), atol=1e-9)


@given(states(), seeds, st.floats(0, 5), st.floats(0, 5))
def test_propagate_exact_semigroup(xi, seed, s, t):
    p = sample_params(CaseTag.GENERAL, np.random.default_rng(seed))
    two = propagate_exact(propagate_exact(xi, p, s), p, t)
    assert np.allclose(two, propagate_exact(xi, p, s + t), atol=1e-8)


def test_propagate_exact_long_time_stays_valid(rng):
    p = sample_params(CaseTag.GENERAL, rng)
    x = propagate_exact(random_state(rng), p, 500.0)
    assert classify(x).valid


def test_propagate_exact_grid(rng):
    p = sample_params(CaseTag.GENERAL, rng)
    xi = random_state(rng)
    ts = np.array([0.0, 0.5, 2.0])
    grid = propagate_exact_grid(xi, p, ts)
    assert np.allclose(grid[0], xi)
    assert np.allclose(grid[2], propagate_exact(xi, p, 2.0), atol=1e-12)


# ---- closed forms ---------------------------------------------------------


@pytest.mark.parametrize("case", SPECIAL_CASES)
@given(seed=seeds, t=st.floats(-2.0, 25.0))
def test_closed_form_matches_exact(case, seed, t):
    rng = np.random.default_rng(seed)
    p = sample_params(case, rng)
    xi0 = random_state(rng, rank=int(rng.integers(1, 4)))
    assert np.allclose(closed_form(xi0, p, t), propagate_exact(xi0, p, t), atol=1e-9)


def test_validate_closed_forms_battery():
    worst = validate_closed_forms(update=False)
    assert set(worst) == set(SPECIAL_CASES)
    assert max(worst.values()) < 1e-10


def test_closed_form_general_unsupported(rng):
    p = sample_params(CaseTag.GENERAL, rng)
    with pytest.raises(UnsupportedCase):
        closed_form(np.zeros(8), p, 1.0)
    with pytest.raises(UnsupportedCase):
        linearization(np.zeros(8), sample_params(CaseTag.LINEAR_NULL_CUBIC, rng), 1.0)


@pytest.mark.parametrize("case", [c for c in SPECIAL_CASES if not c.linear])
def test_linearization_pair(case, rng):
    p = sample_params(case, rng)
    xi0 = random_state(rng)
    pair0 = linearization(xi0, p, 0.0)
    eta0, phi0 = pair0.unscaled()
    assert phi0 == pytest.approx(1.0)
    assert np.allclose(eta0, xi0)
    pair = linearization(xi0, p, 3.0)
    assert pair.phi > 0
    assert np.allclose(pair.xi, propagate_exact(xi0, p, 3.0), atol=1e-10)


def test_nonlinear_star_pos_large_time(rng):
    # scaling keeps eta/phi finite far beyond exp overflow
    p = EvolutionParams.make(b=-3 * e(8))
    x = closed_form(0.2 * e(1), p, 400.0)
    assert np.all(np.isfinite(x))
    assert np.allclose(x, -e(8), atol=1e-12)


def test_closed_form_grid(rng):
    p = sample_params(CaseTag.LINEAR_DIAGONAL, rng)
    xi = random_state(rng)
    ts = time_grid(4.0, 5)
    assert np.allclose(closed_form_grid(xi, p, ts), propagate_exact_grid(xi, p, ts), atol=1e-10)


# ---- linear-flow invariants -----------------------------------------------


@given(states(), vec8, st.floats(0, 30))
def test_linear_flow_conserves_invariants(xi, a, t):
    p = EvolutionParams.make(a / 2)
    x = propagate_exact(xi, p, t)
    assert x @ x == pytest.approx(xi @ xi, abs=1e-10)
    assert x @ star(x, x) == pytest.approx(xi @ star(xi, xi), abs=1e-10)


# ---- qubit embedding ------------------------------------------------------


@given(seeds)
def test_qubit_subspace_rhs(seed):
    rng = np.random.default_rng(seed)
    z = rng.normal(size=3)
    z *= rng.uniform(0, 1) / np.linalg.norm(z)
    a3, b3 = rng.normal(size=3), rng.normal(size=3)
    a = np.concatenate([a3, np.zeros(5)])
    b = np.concatenate([b3, np.zeros(5)])
    xi = embed_qubit(z)
    v = riccati_rhs(xi, EvolutionParams.make(a, b))
    assert np.allclose(v[3:], 0, atol=1e-13)
    assert np.allclose(qubit_part(v), qubit_rhs(z, a3, b3), atol=1e-12)
    assert np.allclose(qubit_part(xi), z)


def test_embedded_qubit_is_state():
    assert classify(embed_qubit([0, 0, 1])).tag.value == "PureBoundary"
    assert classify(embed_qubit([0, 0, 0])).tag.value == "MixedBoundary"


# ---- integration ----------------------------------------------------------


def test_integrate_matches_exact(rng):
    p = sample_params(CaseTag.GENERAL, rng)
    xi0 = random_state(rng)
    traj = integrate(xi0, p, 20.0, samples=201)
    ref = propagate_exact_grid(xi0, p, traj.times)
    assert np.abs(traj.states - ref).max() < 1e-8
    assert traj.meta["engine"] == "ode"
    assert traj.meta["nfev"] > 0


def test_integrate_validation():
    p = EvolutionParams.make(e(1))
    with pytest.raises(ValueError):
        integrate(np.zeros(8), p, 0.0)
    with pytest.raises(ValueError):
        time_grid(1.0, 1)


def test_trajectory_validation():
    with pytest.raises(ValueError):
        Trajectory(np.array([0.0, 1.0]), np.zeros((3, 8)))
    with pytest.raises(ValueError):
        Trajectory(np.array([0.0, 0.0]), np.zeros((2, 8)))
    t = Trajectory(np.array([0.0, 1.0]), np.zeros((2, 8)))
    with pytest.raises(ValueError):
        t.states[0, 0] = 1.0
    assert t.with_entropy().entropy.tolist() == [1.0, 1.0]
    assert Trajectory(np.array([0.0]), np.full((1, 8), 2.0)).invalid_samples() == [0]


# ---- convexity ------------------------------------------------------------


@given(states(), states(), st.floats(0, 1), vec8, vec8, st.floats(0, 4))
def test_convexity_map(x1, x2, lam, a, b, t):
    p = EvolutionParams.make(a / 2, b / 2)
    lam_p = convexity_lambda(x1, x2, lam, p, t)
    assert 0.0 <= lam_p <= 1.0
    mixed = propagate_exact(lam * x1 + (1 - lam) * x2, p, t)
    combo = lam_p * propagate_exact(x1, p, t) + (1 - lam_p) * propagate_exact(x2, p, t)
    assert np.allclose(mixed, combo, atol=1e-9)


def test_convexity_rejects_bad_weight():
    p = EvolutionParams.make(e(1))
    with pytest.raises(ValueError):
        convexity_residual(np.zeros(8), np.zeros(8), 1.5, p, 1.0)
