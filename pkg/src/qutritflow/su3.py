"""Exact su(3) algebra on real 8-vectors and 3x3 complex matrices.

Vectors ``a, b`` in R^8 are identified with traceless Hermitian matrices
``a . lambda`` through the Gell-Mann basis.  The structure constants are
regenerated from traces of the basis matrices at import time, and every
bilinear product used elsewhere in the package is built from those tables:

    (a ^ b)_i = sqrt(3) f_ijk a_j b_k        (wedge, antisymmetric)
    (a * b)_i = sqrt(3) d_ijk a_j b_k        (star, symmetric)

Closed forms for ``exp(tau a . lambda)`` are provided for the degenerate
spectra as well as the generic trigonometric case; all of them are checked
against scipy's scaling-and-squaring exponential.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass
from fractions import Fraction
from itertools import permutations

import numpy as np
from scipy.linalg import expm

logger = logging.getLogger(__name__)

SQRT3 = math.sqrt(3.0)

#: relative tolerance used to detect the special algebraic cases
EPS_CASE = 1e-9
#: below this |sin(alpha/3)| (or |cos(alpha/3 + pi/6)|) the generic formula is not used
EPS_TRIG = 1e-6
#: entrywise agreement required between a closed form and the Pade oracle
EXP_CHECK_RTOL = 1e-11
#: largest 1-norm accepted by :func:`matrix_exp`
MAX_EXP_NORM = 600.0


class NonHermitianInput(ValueError):
    pass


class NonUnitTrace(ValueError):
    pass


class OverflowRisk(ArithmeticError):
    """Matrix norm too large for a reliable exponential; shrink the time step."""


def _gell_mann() -> np.ndarray:
    lam = np.zeros((8, 3, 3), dtype=complex)
    lam[0][0, 1] = lam[0][1, 0] = 1
    lam[1][0, 1], lam[1][1, 0] = -1j, 1j
    lam[2][0, 0], lam[2][1, 1] = 1, -1
    lam[3][0, 2] = lam[3][2, 0] = 1
    lam[4][0, 2], lam[4][2, 0] = -1j, 1j
    lam[5][1, 2] = lam[5][2, 1] = 1
    lam[6][1, 2], lam[6][2, 1] = -1j, 1j
    lam[7] = np.diag([1, 1, -2]) / SQRT3
    return lam


#: Gell-Mann matrices, ``GELL_MANN[i]`` is lambda_{i+1}
GELL_MANN = _gell_mann()
GELL_MANN.setflags(write=False)


def _tables_from_traces() -> tuple[np.ndarray, np.ndarray]:
    lam = GELL_MANN
    f = np.empty((8, 8, 8))
    d = np.empty((8, 8, 8))
    for j in range(8):
        for k in range(8):
            comm = lam[j] @ lam[k] - lam[k] @ lam[j]
            anti = lam[j] @ lam[k] + lam[k] @ lam[j]
            for l in range(8):
                f[j, k, l] = (np.trace(comm @ lam[l]) / 4j).real
                d[j, k, l] = (np.trace(anti @ lam[l]) / 4).real
    # kill rounding dust so that zeros are exact
    f[np.abs(f) < 1e-15] = 0.0
    d[np.abs(d) < 1e-15] = 0.0
    return f, d


F_TABLE, D_TABLE = _tables_from_traces()
F_TABLE.setflags(write=False)
D_TABLE.setflags(write=False)


# Independent nonzero constants as usually tabulated (1-based indices).
# Values of the form (rational, power of sqrt(3)) keep the listing exact.
F_LISTED = {
    (1, 2, 3): (Fraction(1), 0),
    (4, 5, 8): (Fraction(1, 2), 1),
    (6, 7, 8): (Fraction(1, 2), 1),
    (1, 4, 7): (Fraction(1, 2), 0),
    (2, 4, 6): (Fraction(1, 2), 0),
    (2, 5, 7): (Fraction(1, 2), 0),
    (3, 4, 5): (Fraction(1, 2), 0),
    (5, 1, 6): (Fraction(1, 2), 0),
    (6, 3, 7): (Fraction(1, 2), 0),
}
D_LISTED = {
    (1, 1, 8): (Fraction(1), -1),
    (2, 2, 8): (Fraction(1), -1),
    (3, 3, 8): (Fraction(1), -1),
    (8, 8, 8): (Fraction(-1), -1),
    (4, 4, 8): (Fraction(-1, 2), -1),
    (5, 5, 8): (Fraction(-1, 2), -1),
    (6, 6, 8): (Fraction(-1, 2), -1),
    (7, 7, 8): (Fraction(-1, 2), -1),
    (1, 4, 6): (Fraction(1, 2), 0),
    (1, 5, 7): (Fraction(1, 2), 0),
    (2, 4, 7): (Fraction(-1, 2), 0),
    (2, 5, 6): (Fraction(1, 2), 0),
    (3, 4, 4): (Fraction(1, 2), 0),
    (3, 5, 5): (Fraction(1, 2), 0),
    (3, 6, 6): (Fraction(-1, 2), 0),
    (3, 7, 7): (Fraction(-1, 2), 0),
}


def _perm_sign(p: tuple[int, ...]) -> int:
    sign = 1
    p = list(p)
    for i in range(len(p)):
        for j in range(i + 1, len(p)):
            if p[i] > p[j]:
                sign = -sign
    return sign


def listed_tables() -> tuple[np.ndarray, np.ndarray]:
    """Dense f and d built by (anti)symmetric closure of the tabulated constants."""
    f = np.zeros((8, 8, 8))
    d = np.zeros((8, 8, 8))
    for idx, (q, p) in F_LISTED.items():
        val = float(q) * SQRT3**p
        for perm in permutations(range(3)):
            tgt = tuple(idx[i] - 1 for i in perm)
            f[tgt] = _perm_sign(perm) * val
    for idx, (q, p) in D_LISTED.items():
        val = float(q) * SQRT3**p
        for perm in permutations(range(3)):
            d[tuple(idx[i] - 1 for i in perm)] = val
    return f, d


# Matrices of the bilinear maps: wedge(a, b) = _WEDGE_OP[:, :, k] ... contracted below.
_WEDGE = SQRT3 * F_TABLE
_STAR = SQRT3 * D_TABLE


def as_vec8(x, name: str = "vector") -> np.ndarray:
    v = np.asarray(x, dtype=float)
    if v.shape != (8,):
        raise ValueError(f"{name} must have shape (8,), got {v.shape}")
    if not np.all(np.isfinite(v)):
        raise ValueError(f"{name} has non-finite entries")
    return v


def wedge(a, b) -> np.ndarray:
    """Antisymmetric product ``sqrt(3) f_ijk a_j b_k``."""
    return np.einsum("ijk,j,k->i", _WEDGE, as_vec8(a), as_vec8(b))


def star(a, b) -> np.ndarray:
    """Symmetric product ``sqrt(3) d_ijk a_j b_k``."""
    return np.einsum("ijk,j,k->i", _STAR, as_vec8(a), as_vec8(b))


def wedge_matrix(a) -> np.ndarray:
    """Matrix ``W`` with ``W @ x == wedge(a, x)``."""
    return np.einsum("ijk,j->ik", _WEDGE, as_vec8(a))


def star_matrix(a) -> np.ndarray:
    """Matrix ``S`` with ``S @ x == star(a, x)``."""
    return np.einsum("ijk,j->ik", _STAR, as_vec8(a))


def cubic_invariant(a) -> float:
    """The invariant ``a . (a * a)`` written out as a polynomial in the coordinates."""
    a1, a2, a3, a4, a5, a6, a7, a8 = as_vec8(a)
    return (
        3 * a8 * (a1**2 + a2**2 + a3**2)
        - a8**3
        - 1.5 * a8 * (a4**2 + a5**2 + a6**2 + a7**2)
        + 1.5 * SQRT3 * a3 * (a4**2 + a5**2 - a6**2 - a7**2)
        + 3 * SQRT3 * ((a1 * a6 - a2 * a7) * a4 + (a1 * a7 + a2 * a6) * a5)
    )


def lam_dot(a) -> np.ndarray:
    """The matrix ``a . lambda`` (``a`` may be complex)."""
    a = np.asarray(a)
    if a.shape != (8,):
        raise ValueError(f"expected shape (8,), got {a.shape}")
    return np.tensordot(a, GELL_MANN, axes=1)


def bloch_to_density(xi) -> np.ndarray:
    """``rho = (1 + sqrt(3) xi . lambda) / 3``; positivity is not checked."""
    return (np.eye(3) + SQRT3 * lam_dot(as_vec8(xi, "xi"))) / 3.0


def density_to_bloch(rho, tol: float = 1e-10) -> np.ndarray:
    """Inverse of :func:`bloch_to_density`, ``xi_i = (sqrt(3)/2) Tr(rho lambda_i)``.

    Raises
    ------
    NonHermitianInput
        if ``rho`` deviates from its adjoint by more than ``tol``.
    NonUnitTrace
        if ``|Tr rho - 1| > tol``.
    """
    rho = np.asarray(rho, dtype=complex)
    if rho.shape != (3, 3) or not np.all(np.isfinite(rho)):
        raise ValueError("rho must be a finite 3x3 matrix")
    scale = max(1.0, float(np.abs(rho).max()))
    if np.abs(rho - rho.conj().T).max() > tol * scale:
        raise NonHermitianInput("density matrix is not Hermitian")
    if abs(np.trace(rho) - 1.0) > tol:
        raise NonUnitTrace(f"density matrix trace {np.trace(rho)!r} != 1")
    tr = np.einsum("kij,ji->k", GELL_MANN, rho)
    return (SQRT3 / 2.0) * tr.real


@dataclass(frozen=True)
class CubicRoots:
    """Roots of ``x^3 - a^2 x - (2/(3 sqrt3)) a.(a*a) = 0``, sorted descending."""

    x1: float
    x2: float
    x3: float
    alpha: float
    discriminantQ: float

    def as_array(self) -> np.ndarray:
        return np.array([self.x1, self.x2, self.x3])


def cubic_roots(a) -> CubicRoots:
    """Trigonometric roots of the characteristic cubic of ``a . lambda``.

    These are exactly the eigenvalues of ``a . lambda``.  For ``a = 0`` the
    triple root 0 is returned with ``alpha = 0``.
    """
    a = as_vec8(a)
    norm = float(np.linalg.norm(a))
    if norm == 0.0:
        return CubicRoots(0.0, 0.0, 0.0, 0.0, 0.0)
    inv = cubic_invariant(a)
    q = (inv**2 - norm**6) / 27.0
    cos_alpha = min(1.0, max(-1.0, inv / norm**3))
    if abs(q) <= EPS_CASE * norm**6:
        # degenerate branch, a * a = +-|a| a
        cos_alpha = 1.0 if inv > 0 else -1.0
    alpha = math.acos(cos_alpha)
    r = 2.0 * norm / SQRT3
    x = sorted(
        (
            r * math.cos(alpha / 3),
            -r * math.cos(alpha / 3 + math.pi / 3),
            -r * math.cos(alpha / 3 - math.pi / 3),
        ),
        reverse=True,
    )
    return CubicRoots(x[0], x[1], x[2], alpha, q)


def power_coefficients(a, n: int) -> tuple[float, float, float]:
    """``(c_n, d_n, e_n)`` with ``(a.l)^n = c_n + d_n a.l + e_n (a*a).l``, by recurrence."""
    a = as_vec8(a)
    a2 = float(a @ a)
    inv = cubic_invariant(a)
    c, d, e = 1.0, 0.0, 0.0
    for _ in range(n):
        c, d, e = (
            (2.0 / 3.0) * a2 * d + (2.0 / 3.0) * inv * e,
            a2 * e / SQRT3 + c,
            d / SQRT3,
        )
    return c, d, e


def _trig_weights(a) -> tuple[np.ndarray, np.ndarray, np.ndarray, np.ndarray]:
    """Roots and the per-root weights of the c, d, e coefficients (generic case)."""
    a = as_vec8(a)
    norm = float(np.linalg.norm(a))
    cos_alpha = min(1.0, max(-1.0, cubic_invariant(a) / norm**3))
    t = math.acos(cos_alpha) / 3.0
    cp, cm = math.cos(t + math.pi / 6), math.cos(t - math.pi / 6)
    s = math.sin(t)
    r = 2.0 * norm / SQRT3
    roots = np.array([r * math.cos(t), -r * math.cos(t + math.pi / 3), -r * math.cos(t - math.pi / 3)])
    wc = np.array(
        [
            (4 * math.cos(t) ** 2 - 1) / (cp * cm),
            (1 - 4 * math.sin(t - math.pi / 6) ** 2) / (cp * s),
            (4 * math.sin(t + math.pi / 6) ** 2 - 1) / (cm * s),
        ]
    ) / 12.0
    wd = np.array(
        [
            math.cos(t) / (cp * cm),
            -math.sin(t - math.pi / 6) / (cp * s),
            -math.sin(t + math.pi / 6) / (cm * s),
        ]
    ) / (2 * SQRT3 * norm)
    we = np.array([1 / (cp * cm), -1 / (cp * s), 1 / (cm * s)]) / (4 * SQRT3 * norm**2)
    return roots, wc, wd, we


def power_coefficients_closed(a, n: int) -> tuple[float, float, float]:
    """Trigonometric closed form of :func:`power_coefficients`; needs ``Q < 0``."""
    roots, wc, wd, we = _trig_weights(a)
    p = roots**n
    return float(wc @ p), float(wd @ p), float(we @ p)


def matrix_exp(m, max_norm: float = MAX_EXP_NORM) -> np.ndarray:
    """Exponential of a small square matrix (scipy's scaling-and-squaring Pade).

    Raises
    ------
    OverflowRisk
        if ``||m||_1 > max_norm``.
    """
    m = np.asarray(m, dtype=complex)
    if not np.all(np.isfinite(m)):
        raise ValueError("matrix has non-finite entries")
    norm = float(np.abs(m).sum(axis=0).max())
    if norm > max_norm:
        raise OverflowRisk(f"||M||_1 = {norm:.3g} exceeds {max_norm}")
    return expm(m)


def algebra_case(a, eps: float = EPS_CASE) -> str:
    """Classify ``a`` as 'zero', 'star+', 'star-', 'null', 'diagonal' or 'generic'.

    'star+' means ``a*a = |a| a``, 'star-' means ``a*a = -|a| a``, 'null' means
    ``a.(a*a) = 0``.  Tests are relative to ``|a|`` and applied in this order.
    """
    a = as_vec8(a)
    norm = float(np.linalg.norm(a))
    if norm == 0.0:
        return "zero"
    aa = star(a, a)
    if np.linalg.norm(aa - norm * a) <= eps * norm**2:
        return "star+"
    if np.linalg.norm(aa + norm * a) <= eps * norm**2:
        return "star-"
    if abs(cubic_invariant(a)) <= eps * norm**3:
        return "null"
    if np.abs(a[[0, 1, 3, 4, 5, 6]]).max() <= eps * norm:
        return "diagonal"
    return "generic"


def _exp_star_pos(tau, a: np.ndarray) -> tuple[complex, complex, complex]:
    norm = float(np.linalg.norm(a))
    ep = np.exp(2 * tau * norm / SQRT3)
    em = np.exp(-tau * norm / SQRT3)
    return ep / 3 + 2 * em / 3, (ep - em) / (SQRT3 * norm), 0.0


def _exp_coefficients(tau, a: np.ndarray, case: str):
    """``(c, d, e)`` of ``exp(tau a.l) = c + d a.l + e (a*a).l`` for non-diagonal cases."""
    if case == "star+":
        return _exp_star_pos(tau, a)
    if case == "star-":
        # a -> -a, tau -> -tau maps onto the star+ case
        c, d, e = _exp_star_pos(-tau, -a)
        return c, -d, e
    norm = float(np.linalg.norm(a))
    if case == "null":
        ch, sh = np.cosh(tau * norm), np.sinh(tau * norm)
        return 1 / 3 + 2 * ch / 3, sh / norm, (ch - 1) / (SQRT3 * norm**2)
    roots, wc, wd, we = _trig_weights(a)
    ex = np.exp(tau * roots)
    return wc @ ex, wd @ ex, we @ ex


def _spectral_exp(tau, a: np.ndarray) -> np.ndarray:
    # Sylvester interpolation on the cubic roots; roots are assumed distinct
    x = cubic_roots(a).as_array()
    m = lam_dot(a)
    ident = np.eye(3)
    out = np.zeros((3, 3), dtype=complex)
    for k in range(3):
        proj = ident.astype(complex)
        for j in range(3):
            if j != k:
                proj = proj @ (m - x[j] * ident) / (x[k] - x[j])
        out += np.exp(tau * x[k]) * proj
    return out


def exp_lambda(tau, a, check: bool = True) -> np.ndarray:
    """``exp(tau a . lambda)`` from the closed forms, verified against :func:`matrix_exp`.

    ``tau`` may be complex.  The closed-form branch is chosen by
    :func:`algebra_case`; near the degenerate set of the generic formula a
    spectral construction is used instead.  With ``check`` on, a result
    disagreeing with the Pade exponential beyond ``EXP_CHECK_RTOL`` is logged
    and replaced by the Pade value.
    """
    a = as_vec8(a)
    tau = complex(tau)
    if not math.isfinite(tau.real) or not math.isfinite(tau.imag):
        raise ValueError("tau must be finite")
    case = algebra_case(a)
    if case == "zero" or tau == 0:
        return np.eye(3, dtype=complex)
    if case == "diagonal":
        a3, a8 = a[2], a[7]
        e1 = np.exp(tau * (a3 + a8 / SQRT3))
        e2 = np.exp(tau * (-a3 + a8 / SQRT3))
        e3 = np.exp(-2 * tau * a8 / SQRT3)
        f = (e1 + e2 + e3) / 3
        gamma = (e1 - e2) / 2
        delta = SQRT3 / 6 * (e1 + e2 - 2 * e3)
        result = f * np.eye(3) + gamma * GELL_MANN[2] + delta * GELL_MANN[7]
    else:
        t = cubic_roots(a).alpha / 3
        if case == "generic" and (abs(math.sin(t)) < EPS_TRIG or abs(math.cos(t + math.pi / 6)) < EPS_TRIG):
            result = _spectral_exp(tau, a)
        else:
            c, d, e = _exp_coefficients(tau, a, case)
            result = c * np.eye(3) + d * lam_dot(a) + e * lam_dot(star(a, a))
    if check:
        oracle = matrix_exp(tau * lam_dot(a))
        scale = max(1.0, float(np.abs(oracle).max()))
        err = float(np.abs(result - oracle).max())
        if not np.isfinite(err) or err > EXP_CHECK_RTOL * scale:
            logger.warning("exp_lambda closed form (%s) off by %.3g for tau=%r a=%r; using Pade value",
                           case, err, tau, a.tolist())
            return oracle
    return result
