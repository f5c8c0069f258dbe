"""Nonlinear von Neumann evolution of a qutrit in generalized Bloch coordinates.

Modules
-------
su3          Gell-Mann basis, structure constants, wedge/star products, exponentials
identities   numerical check of the wedge/star and Gell-Mann product identities
state_space  admissibility, boundary classification, spectra and entropy
evolution    Riccati right-hand side, exact propagator, closed forms, ODE integration
stationary   equilibria catalogs and stability
analysis     Poincare sections, trajectory classification, entropy series
cli          scenario configs, figure presets and file output
"""

__version__ = "0.1.0"

from .su3 import bloch_to_density, density_to_bloch, lam_dot, star, wedge
from .state_space import classify, entropy, is_state, pure_from_angles
from .evolution import (
    CaseTag,
    EvolutionParams,
    Trajectory,
    closed_form,
    detect_case,
    integrate,
    propagate_exact,
    riccati_rhs,
)
from .stationary import catalog, stability
from .analysis import SectionSpec, classify_trajectory, entropy_series, poincare
from .identities import verify_identities

__all__ = [
    "bloch_to_density", "density_to_bloch", "lam_dot", "star", "wedge",
    "classify", "entropy", "is_state", "pure_from_angles",
    "CaseTag", "EvolutionParams", "Trajectory", "closed_form", "detect_case", "integrate",
    "propagate_exact", "riccati_rhs", "catalog", "stability",
    "SectionSpec", "classify_trajectory", "entropy_series", "poincare", "verify_identities",
]
