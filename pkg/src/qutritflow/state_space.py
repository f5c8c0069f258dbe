"""Geometry of the qutrit state space in Bloch coordinates.

A vector ``xi`` is a state iff ``xi^2 <= 1`` and
``3 xi^2 - 2 xi.(xi*xi) <= 1``; the second quantity equals ``1 - 27 det(rho)``.
The boundary splits into pure states (``xi^2 = 1``, ``xi*xi = xi``) and mixed
boundary states (rank-2 density matrices).
"""

from __future__ import annotations

import enum
import logging
import math
from dataclasses import dataclass

import numpy as np

from .su3 import SQRT3, as_vec8, bloch_to_density, density_to_bloch, star

logger = logging.getLogger(__name__)

TOL_GEOM = 1e-8
#: eigenvalues closer than this to 0 or 1 are snapped before taking logs
EIG_FLOOR = 1e-12


class InvalidState(ValueError):
    pass


class StateTag(str, enum.Enum):
    INTERIOR = "Interior"
    PURE = "PureBoundary"
    MIXED_BOUNDARY = "MixedBoundary"
    INVALID = "Invalid"


@dataclass(frozen=True)
class StateClass:
    tag: StateTag
    r_ball: float
    r_det: float
    r_pure: float

    @property
    def valid(self) -> bool:
        return self.tag is not StateTag.INVALID


def residuals(xi) -> tuple[float, float, float]:
    """``(xi^2, 3 xi^2 - 2 xi.(xi*xi), |xi*xi - xi|)``."""
    xi = as_vec8(xi, "xi")
    ss = star(xi, xi)
    r_ball = float(xi @ xi)
    return r_ball, 3 * r_ball - 2 * float(xi @ ss), float(np.linalg.norm(ss - xi))


def classify(xi, tol: float = TOL_GEOM) -> StateClass:
    r_ball, r_det, r_pure = residuals(xi)
    if r_ball > 1 + tol or r_det > 1 + tol:
        tag = StateTag.INVALID
    elif abs(r_ball - 1) <= tol and r_pure <= tol:
        tag = StateTag.PURE
    elif abs(r_det - 1) <= tol and r_ball < 1 - tol:
        tag = StateTag.MIXED_BOUNDARY
    elif r_det < 1 - tol and r_ball < 1 - tol:
        tag = StateTag.INTERIOR
    else:
        # xi^2 within tol of 1 but the star residual slightly above tol:
        # Tr rho^2 = 1 pins the state to the pure stratum up to rounding
        tag = StateTag.PURE if abs(r_ball - 1) <= tol else StateTag.MIXED_BOUNDARY
    return StateClass(tag, r_ball, r_det, r_pure)


def is_state(xi, tol: float = TOL_GEOM) -> bool:
    return classify(xi, tol).valid


def purity_residual(xi) -> float:
    """``max(|xi^2 - 1|, |xi*xi - xi|)``; zero exactly on pure states."""
    r_ball, _, r_pure = residuals(xi)
    return max(abs(r_ball - 1), r_pure)


def pure_from_angles(alpha: float, beta: float, gamma: float, delta: float) -> np.ndarray:
    """Pure state from the four coset angles.

    The density matrix is the projector on
    ``(cos a sin b e^{i g}, sin a e^{i d}, cos a cos b)`` up to a global phase.
    """
    sa, ca = math.sin(alpha), math.cos(alpha)
    sb, cb = math.sin(beta), math.cos(beta)
    xi = SQRT3 * np.array(
        [
            sa * sb * ca * math.cos(delta - gamma),
            sa * sb * ca * math.sin(delta - gamma),
            0.5 * (ca**2 * sb**2 - sa**2),
            ca**2 * cb * sb * math.cos(gamma),
            -(ca**2) * cb * sb * math.sin(gamma),
            cb * ca * sa * math.cos(delta),
            -cb * ca * sa * math.sin(delta),
            (ca**2 * sb**2 + sa**2 - 2 * ca**2 * cb**2) / (2 * SQRT3),
        ]
    )
    if purity_residual(xi) > TOL_GEOM:
        logger.warning("angle parametrization gave a non-pure vector; rebuilding from the projector")
        psi = np.array([ca * sb * np.exp(1j * gamma), sa * np.exp(1j * delta), ca * cb])
        xi = density_to_bloch(np.outer(psi, psi.conj()))
    return xi


@dataclass(frozen=True)
class EigTriple:
    nu1: float
    nu2: float
    nu3: float
    alpha: float

    def as_array(self) -> np.ndarray:
        return np.array([self.nu1, self.nu2, self.nu3])


def eigenvalues(xi, tol: float = TOL_GEOM) -> EigTriple:
    """Spectrum of ``rho(xi)`` by the trigonometric formula, descending."""
    xi = as_vec8(xi, "xi")
    cls = classify(xi, tol)
    if not cls.valid:
        raise InvalidState(f"xi is outside the state space: {xi.tolist()}")
    if cls.tag is StateTag.PURE:
        # the trigonometric form loses ~sqrt(eps) at the double root 0
        return EigTriple(1.0, 0.0, 0.0, 0.0)
    norm = float(np.linalg.norm(xi))
    if norm < tol:
        return EigTriple(1 / 3, 1 / 3, 1 / 3, 0.0)
    cos_alpha = min(1.0, max(-1.0, float(xi @ star(xi, xi)) / norm**3))
    alpha = math.acos(cos_alpha)
    nu = sorted(
        (
            1 / 3 + 2 / 3 * norm * math.cos(alpha / 3),
            1 / 3 - 2 / 3 * norm * math.cos(alpha / 3 + math.pi / 3),
            1 / 3 - 2 / 3 * norm * math.cos(alpha / 3 - math.pi / 3),
        ),
        reverse=True,
    )
    return EigTriple(nu[0], nu[1], nu[2], alpha)


def entropy_from_spectrum(nu, base: float = 3.0) -> float:
    nu = np.clip(np.asarray(nu, dtype=float), 0.0, 1.0)
    nu[nu < EIG_FLOOR] = 0.0
    nu[nu > 1.0 - EIG_FLOOR] = 1.0
    nz = nu[nu > 0]
    s = -float(np.sum(nz * (np.log(nz) / math.log(base))))
    return max(0.0, s)


def entropy(xi, base: float = 3.0, tol: float = TOL_GEOM) -> float:
    """Von Neumann entropy of ``rho(xi)``, base-3 logarithm by default so that S is in [0, 1]."""
    return entropy_from_spectrum(eigenvalues(xi, tol).as_array(), base)


def random_state(rng: np.random.Generator, rank: int = 3) -> np.ndarray:
    """Bloch vector of a random density matrix of the given rank (Ginibre ensemble)."""
    g = rng.normal(size=(3, rank)) + 1j * rng.normal(size=(3, rank))
    rho = g @ g.conj().T
    rho /= np.trace(rho).real
    return density_to_bloch((rho + rho.conj().T) / 2)
