"""Stationary solutions of the qutrit Riccati system and their stability.

Equilibria of the special cases are generated from the ansatz
``xi = mu g + nu g*g`` (``g`` the nonzero generator) and tabulated by
:func:`catalog`.  :func:`stability` judges them from the Jacobian spectrum and
cross-checks the verdict by evolving perturbed states with the exact
propagator.  :func:`find_equilibria` is a Newton search for the general case.
"""

from __future__ import annotations

import enum
import logging
import math
from dataclasses import dataclass, field

import numpy as np

from . import su3
from .evolution import (
    CaseTag,
    EvolutionParams,
    UnsupportedCase,
    closed_form,
    propagate_exact,
    riccati_jacobian,
    riccati_rhs,
)
from .state_space import TOL_GEOM, StateClass, StateTag, classify, random_state
from .su3 import SQRT3, as_vec8, star, wedge

logger = logging.getLogger(__name__)

TOL_EIG = 1e-7
TOL_STATIONARY = 1e-9
#: default family sample sizes
N_FAMILY = 5


class NotStationary(ValueError):
    pass


class DomainError(ValueError):
    pass


class Stability(str, enum.Enum):
    STABLE = "AsymptoticallyStable"
    UNSTABLE = "Unstable"
    MARGINAL = "Marginal"


@dataclass(frozen=True)
class StabilityReport:
    label: Stability
    raw_eigenvalues: np.ndarray
    restricted_eigenvalues: np.ndarray | None
    crosscheck: bool | None = None
    growth: tuple[float, float] | None = None  # min/max distance ratio after evolution


@dataclass(frozen=True)
class Equilibrium:
    xi: np.ndarray
    state_class: StateClass
    stability: Stability
    source: str
    family: str | None = None
    report: StabilityReport | None = field(default=None, repr=False)

    @property
    def tag(self) -> StateTag:
        return self.state_class.tag


# --------------------------------------------------------------------------
# ansatz geometry


def _ansatz_invariants(a) -> tuple[float, float]:
    a = as_vec8(a, "a")
    return float(a @ a), float(a @ star(a, a))


def ansatz_vector(mu: float, nu: float, a) -> np.ndarray:
    a = as_vec8(a, "a")
    return mu * a + nu * star(a, a)


def ansatz_polynomials(mu: float, nu: float, a, printed: bool = True) -> tuple[float, float, float]:
    """Polynomials of the ``(mu, nu)`` plane.

    Returns ``(ball, det, pure)``: the quadratic form equal to ``xi^2``, the
    cubic meant to equal ``3 xi^2 - 2 xi.(xi*xi)`` and the cubic meant to equal
    ``xi.(xi*xi)`` on the pure stratum.  With ``printed=True`` the two cubics
    carry a ``mu nu`` term where expanding ``xi.(xi*xi)`` gives ``mu nu^2``;
    ``printed=False`` returns the expansion, which matches :func:`residuals`.
    """
    a2, s = _ansatz_invariants(a)
    a4, a6 = a2 * a2, a2**3
    ball = a2 * mu**2 + a4 * nu**2 + 2 * s * mu * nu
    m = mu * nu if printed else mu * nu**2
    det = (
        -2 * s * mu**3 + 2 * (a6 - 2 * s * s) * nu**3 - 6 * a4 * mu**2 * nu
        + 3 * a2 * mu**2 + 3 * a4 * nu**2 + 6 * s * mu * nu - 6 * a2 * s * m
    )
    pure = s * mu**3 + (2 * s * s - a6) * nu**3 + 3 * a4 * mu**2 * nu + 3 * a2 * s * m
    return ball, det, pure


def ansatz_printed_tag(mu: float, nu: float, a, tol: float = TOL_GEOM) -> StateTag:
    """Stratum of ``mu a + nu a*a`` according to the printed polynomial conditions alone."""
    ball, det, pure = ansatz_polynomials(mu, nu, a)
    if ball > 1 + tol or det > 1 + tol:
        return StateTag.INVALID
    if abs(ball - 1) <= tol and abs(pure - 1) <= tol:
        return StateTag.PURE
    if abs(det - 1) <= tol:
        return StateTag.MIXED_BOUNDARY
    return StateTag.INTERIOR


def ansatz_classify(mu: float, nu: float, a, tol: float = TOL_GEOM) -> StateClass:
    """Classify ``mu a + nu a*a``.

    The verdict comes from :func:`classify`; the printed polynomial conditions
    are evaluated alongside and any disagreement is logged, not resolved.
    """
    a = as_vec8(a, "a")
    if not np.linalg.norm(a) > 0:
        raise ValueError("a must be nonzero")
    cls = classify(ansatz_vector(mu, nu, a), tol)
    printed = ansatz_printed_tag(mu, nu, a, tol)
    if printed is not cls.tag:
        logger.info("ansatz polynomials give %s, direct classification %s (mu=%g, nu=%g)",
                    printed.value, cls.tag.value, mu, nu)
    return cls


# --------------------------------------------------------------------------
# diagonal plane


def diagonal_boundary(kappa: float) -> list[tuple[float, float]]:
    """Mixed-boundary points ``(xi3, xi8)`` of the diagonal plane with ``xi3^2 + xi8^2 = kappa``.

    The boundary curve restricted to the plane reduces to the depressed cubic
    ``xi8^3 - (3 kappa / 4) xi8 + (3 kappa - 1) / 8 = 0``.  For ``kappa < 1/4``
    the circle lies inside the inscribed circle of the triangle and the list
    is empty; at ``kappa = 1/4`` it touches the three edges.
    """
    if not 0.0 < kappa < 1.0:
        raise DomainError(f"kappa must lie in (0, 1), got {kappa}")
    r = math.sqrt(kappa)
    if kappa < 0.25:
        # one real root (Cardano), outside the circle
        q = 0.5 * (1 - 3 * kappa)
        disc = math.sqrt(max(0.0, -kappa**3 + q * q))
        xi8 = 0.5 * (np.cbrt(q + disc) + np.cbrt(q - disc))
        roots = [xi8]
    else:
        cos_alpha = -(3 * kappa - 1) / (2 * kappa**1.5)
        alpha = math.acos(min(1.0, max(-1.0, cos_alpha)))
        roots = [
            r * math.cos(alpha / 3),
            -r * math.cos(alpha / 3 + math.pi / 3),
            -r * math.cos(alpha / 3 - math.pi / 3),
        ]
    out: list[tuple[float, float]] = []
    for xi8 in roots:
        rest = kappa - xi8 * xi8
        if rest < -1e-12:
            continue
        xi3 = math.sqrt(max(0.0, rest))
        for s in ((1.0,) if xi3 <= 1e-12 else (1.0, -1.0)):
            pt = (s * xi3, float(xi8))
            if all(abs(pt[0] - o[0]) > 1e-12 or abs(pt[1] - o[1]) > 1e-12 for o in out):
                out.append(pt)
    return out


def diagonal_det(xi3: float, xi8: float) -> float:
    return 2 * xi8**3 - 6 * xi3**2 * xi8 + 3 * (xi3**2 + xi8**2)


def triangle_membership(xi3: float, xi8: float) -> bool:
    """Strict interior of the triangle of diagonal states."""
    return xi3**2 + xi8**2 < 1 and diagonal_det(xi3, xi8) < 1


def _plane(xi3: float, xi8: float) -> np.ndarray:
    v = np.zeros(8)
    v[2], v[7] = xi3, xi8
    return v


# --------------------------------------------------------------------------
# stability


def _restricted_basis(p: EvolutionParams) -> np.ndarray | None:
    g = p.b if np.linalg.norm(p.b) > 0 else p.a
    if not np.linalg.norm(g) > 0:
        return None
    m = np.column_stack([g, star(g, g)])
    u, s, _ = np.linalg.svd(m, full_matrices=False)
    return u[:, s > 1e-10 * s[0]]


def _perturbations(xi: np.ndarray, rng: np.random.Generator, count: int, eps: float,
                   basis: np.ndarray | None) -> list[np.ndarray]:
    rho = su3.bloch_to_density(xi)
    out = []
    for _ in range(count):
        if basis is None:
            sigma = su3.bloch_to_density(random_state(rng))
            out.append(su3.density_to_bloch((1 - eps) * rho + eps * sigma, tol=1e-8))
            continue
        q = basis @ rng.normal(size=basis.shape[1])
        q /= np.linalg.norm(q)
        for cand in (xi + eps * q, xi - eps * q, (1 - eps) * xi):
            if classify(cand).valid:
                out.append(cand)
                break
    return out


def _crosscheck(xi, p, label, rates, restricted, rng, count=20, eps=1e-3) -> tuple[bool, tuple[float, float]]:
    nz = np.abs(rates[np.abs(rates) > TOL_EIG])
    scale = float(np.linalg.norm(p.a) + np.linalg.norm(p.b)) or 1.0
    horizon = min(200.0 / scale, 25.0 / nz.min()) if nz.size else 20.0 / scale
    basis = _restricted_basis(p) if restricted else None
    ratios = []
    for x0 in _perturbations(xi, rng, count, eps, basis):
        d0 = np.linalg.norm(x0 - xi)
        if d0 == 0:
            continue
        ratios.append(np.linalg.norm(propagate_exact(x0, p, horizon) - xi) / d0)
    lo, hi = (min(ratios), max(ratios)) if ratios else (1.0, 1.0)
    if label is Stability.STABLE:
        ok = hi <= 0.1
    elif label is Stability.UNSTABLE:
        ok = hi >= 10.0
    else:
        # bounded transient growth is allowed (nilpotent Jacobians give
        # algebraic, not exponential, behaviour); exponential escape is not
        ok = hi < 100.0
    return ok, (float(lo), float(hi))


def stability(xi, p: EvolutionParams, tol_eig: float = TOL_EIG, crosscheck: bool = True,
              seed: int = 0) -> StabilityReport:
    """Linear stability of an equilibrium.

    Eigenvalues of the Jacobian decide: any real part above ``tol_eig`` means
    unstable, all below ``-tol_eig`` asymptotically stable.  When exact zero
    modes remain (a continuum of equilibria through ``xi``), the verdict is
    taken on the invariant plane ``span{g, g*g}`` containing ``xi``.
    """
    xi = as_vec8(xi, "xi")
    resid = np.linalg.norm(riccati_rhs(xi, p))
    scale = max(1.0, float(np.linalg.norm(p.a) + np.linalg.norm(p.b)))
    if resid > TOL_STATIONARY * scale:
        raise NotStationary(f"|rhs| = {resid:.3g} at the given point")
    jac = riccati_jacobian(xi, p)
    eig = np.linalg.eigvals(jac)
    re = eig.real
    restricted = None
    if re.max() > tol_eig:
        label = Stability.UNSTABLE
    elif re.max() < -tol_eig:
        label = Stability.STABLE
    else:
        label = Stability.MARGINAL
        zero = np.abs(re) <= tol_eig
        basis = _restricted_basis(p)
        if basis is not None and np.all(np.abs(eig[zero].imag) <= tol_eig):
            jq = jac @ basis
            if np.linalg.norm(jq - basis @ (basis.T @ jq)) <= 1e-8 * max(1.0, np.linalg.norm(jq)):
                restricted = np.linalg.eigvals(basis.T @ jq)
                if restricted.real.max() < -tol_eig:
                    label = Stability.STABLE
    ok = growth = None
    if crosscheck:
        ok, growth = _crosscheck(xi, p, label, re, restricted is not None, np.random.default_rng(seed))
        if not ok:
            logger.warning("perturbation check disagrees with %s verdict (growth %s)", label.value, growth)
    return StabilityReport(label, eig, restricted, ok, growth)


# --------------------------------------------------------------------------
# catalog


def _entry(xi, p, source, family=None, crosscheck=True) -> Equilibrium:
    xi = np.asarray(xi, dtype=float)
    rep = stability(xi, p, crosscheck=crosscheck)
    return Equilibrium(xi, classify(xi), rep.label, source, family, rep)


def _sigmas(n: int) -> np.ndarray:
    # log-spaced in (2, 100]
    return np.geomspace(2.0, 100.0, n + 1)[1:]


def _linear_star(p, sign, n, cc):
    a = p.a
    u = a / np.linalg.norm(a)
    fam = f"{'-' if sign > 0 else ''}a/(sigma|a|), sigma > 2"
    out = [
        _entry(sign * u, p, "pure, proportional to a", crosscheck=cc),
        _entry(-sign * u / 2, p, "mixed boundary, proportional to a", crosscheck=cc),
    ]
    out += [_entry(-sign * u / s, p, "interior family", fam, cc) for s in _sigmas(n)]
    return out


def _null_pure_and_boundary(g, p, cc, stable_note=""):
    n2 = g @ g
    gg = star(g, g)
    n = math.sqrt(n2)
    return [
        _entry(SQRT3 / (2 * n) * g + gg / (2 * n2), p, "pure, ansatz with plus sign" + stable_note, crosscheck=cc),
        _entry(-SQRT3 / (2 * n) * g + gg / (2 * n2), p, "pure, ansatz with minus sign", crosscheck=cc),
        _entry(-gg / n2, p, "pure, proportional to g*g", crosscheck=cc),
    ]


def _linear_null(p, n, cc):
    a = p.a
    a2 = a @ a
    aa = star(a, a)
    u = a / math.sqrt(a2)
    out = _null_pure_and_boundary(a, p, cc)
    out += [_entry(s * u / SQRT3, p, "mixed boundary, nu = 0", crosscheck=cc) for s in (1.0, -1.0)]
    for s1 in (1.0, -1.0):
        for s2 in (1.0, -1.0):
            out.append(_entry(s1 * u / (2 * SQRT3) + s2 * aa / (2 * a2), p,
                              "mixed boundary, on xi^2 = 1/3", crosscheck=cc))
    fam = "mu a + nu a*a with a^2 mu^2 + |a|^4 nu^2 = 1/3, 0 < nu < 1/(2 a^2)"
    for nu in np.linspace(0, 1 / (2 * a2), n + 2)[1:-1]:
        mu = math.sqrt((1 / 3 - a2 * a2 * nu * nu) / a2)
        for s in (1.0, -1.0):
            out.append(_entry(s * mu * a + nu * aa, p, "interior arc", fam, cc))
    return out


def _diagonal_plane(p, n, cc, interior=True):
    out = [
        _entry(_plane(0, -1), p, "pure, vertex (0, -1)", crosscheck=cc),
        _entry(_plane(SQRT3 / 2, 0.5), p, "pure, vertex (sqrt3/2, 1/2)", crosscheck=cc),
        _entry(_plane(-SQRT3 / 2, 0.5), p, "pure, vertex (-sqrt3/2, 1/2)", crosscheck=cc),
    ]
    if not interior:
        return out
    fam = "mixed boundary edges of the diagonal triangle"
    for kappa in np.linspace(0.25, 1.0, n + 1)[:-1]:
        for x3, x8 in diagonal_boundary(float(kappa)):
            out.append(_entry(_plane(x3, x8), p, "diagonal boundary", fam, cc))
    fam = "interior of the diagonal triangle"
    for x3, x8 in [(0.0, 0.0), (0.1, 0.1), (-0.2, 0.15), (0.0, -0.3), (0.25, -0.1)][:n]:
        out.append(_entry(_plane(x3, x8), p, "diagonal interior", fam, cc))
    return out


def catalog(p: EvolutionParams, samples: int = N_FAMILY, crosscheck: bool = True) -> list[Equilibrium]:
    """Equilibria known in closed form for the special case of ``p``.

    Continuous families are represented by ``samples`` members each, with the
    family described in :attr:`Equilibrium.family`.
    """
    tag = p.case_tag
    cc = crosscheck
    if tag is CaseTag.GENERAL:
        raise UnsupportedCase("no closed-form equilibria for General parameters; use find_equilibria")
    if tag is CaseTag.LINEAR_STAR_POS:
        return _linear_star(p, 1.0, samples, cc)
    if tag is CaseTag.LINEAR_STAR_NEG:
        return _linear_star(p, -1.0, samples, cc)
    if tag is CaseTag.LINEAR_NULL_CUBIC:
        return _linear_null(p, samples, cc)
    if tag is CaseTag.LINEAR_DIAGONAL:
        return _diagonal_plane(p, samples, cc)
    b = p.b
    if tag in (CaseTag.NONLIN_STAR_POS, CaseTag.NONLIN_STAR_NEG):
        u = b / np.linalg.norm(b)
        if tag is CaseTag.NONLIN_STAR_POS:
            return [_entry(u, p, "pure, b/|b|", crosscheck=cc),
                    _entry(-u / 2, p, "mixed boundary, -b/(2|b|)", crosscheck=cc)]
        return [_entry(u / 2, p, "mixed boundary, b/(2|b|)", crosscheck=cc),
                _entry(-u, p, "pure, -b/|b|", crosscheck=cc)]
    if tag is CaseTag.NONLIN_NULL_CUBIC:
        return _null_pure_and_boundary(b, p, cc)
    if tag is CaseTag.NONLIN_DIAGONAL:
        return _diagonal_plane(p, samples, cc, interior=False)
    if tag is CaseTag.RATIONAL:
        a = p.a
        lim = (star(a, a) + wedge(a, p.b)) / (2 * (a @ a))
        return [_entry(lim, p, "limit of the rational solution from the maximally mixed state", crosscheck=cc)]
    raise UnsupportedCase(tag.value)


def rational_limit(p: EvolutionParams) -> np.ndarray:
    """``(a*a + a^b) / (2 a^2)``, the large-time state reached from ``xi0 = 0``."""
    if p.case_tag is not CaseTag.RATIONAL:
        raise UnsupportedCase("parameters are not in the rational case")
    a = p.a
    return (star(a, a) + wedge(a, p.b)) / (2 * (a @ a))


def rational_limit_numeric(p: EvolutionParams, t: float = 1e12) -> np.ndarray:
    """Closed-form rational solution from ``xi0 = 0`` evaluated at large ``t``."""
    return closed_form(np.zeros(8), p, t)


# --------------------------------------------------------------------------
# general case


def newton_equilibrium(x0, p: EvolutionParams, tol: float = 1e-13, max_iter: int = 100):
    """Damped Newton on the right-hand side; returns the root or ``None``."""
    x = as_vec8(x0, "x0").copy()
    f = riccati_rhs(x, p)
    fn = np.linalg.norm(f)
    for _ in range(max_iter):
        if fn <= tol:
            return x
        step = np.linalg.lstsq(riccati_jacobian(x, p), -f, rcond=None)[0]
        lam = 1.0
        while lam > 1e-6:
            xn = x + lam * step
            fnew = riccati_rhs(xn, p)
            if np.linalg.norm(fnew) < (1 - 1e-4 * lam) * fn:
                break
            lam /= 2
        else:
            return None
        x, f, fn = xn, fnew, np.linalg.norm(fnew)
    return x if fn <= 1e-10 else None


def find_equilibria(p: EvolutionParams, n_random: int = 40, seed: int = 0, grid: int = 9,
                    crosscheck: bool = True) -> list[Equilibrium]:
    """Equilibria inside the state space found by Newton's method.

    Seeds are the ansatz grid ``mu g + nu g*g`` with ``(mu, nu)`` in ``[-2, 2]^2``
    for ``g = a`` and ``g = b``, plus random states.  Completeness is not claimed.
    """
    rng = np.random.default_rng(seed)
    seeds = []
    for g in (p.a, p.b):
        if np.linalg.norm(g) > 0:
            gg = star(g, g)
            for mu in np.linspace(-2, 2, grid):
                for nu in np.linspace(-2, 2, grid):
                    seeds.append(mu * g + nu * gg)
    seeds += [random_state(rng, rank=int(rng.integers(1, 4))) for _ in range(n_random)]
    found: list[np.ndarray] = []
    for s in seeds:
        x = newton_equilibrium(s, p)
        if x is None or not classify(x).valid:
            continue
        if all(np.linalg.norm(x - y) > 1e-7 for y in found):
            found.append(x)
    out = []
    for x in found:
        try:
            out.append(_entry(x, p, "numerical root", crosscheck=crosscheck))
        except NotStationary:
            continue
    return out
