"""Algebraic identities of the wedge and star products and of Gell-Mann matrices.

Each identity is a function of three random 8-vectors returning the largest
absolute residual.  Tensor identities ignore the vectors and check the
structure-constant tables directly.  :func:`verify_identities` runs the whole
suite on seeded draws.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np

from .su3 import D_TABLE, F_TABLE, GELL_MANN, SQRT3, cubic_invariant, lam_dot, star, wedge

Identity = Callable[[np.ndarray, np.ndarray, np.ndarray, float, float], float]

_I3 = np.eye(3)
_D8 = np.eye(8)


def _res(x) -> float:
    return float(np.max(np.abs(x)))


# ---- tensor identities --------------------------------------------------


def _ff_contraction(*_):
    lhs = np.einsum("ijk,klm->ijlm", F_TABLE, F_TABLE)
    rhs = (2 / 3) * (np.einsum("il,jm->ijlm", _D8, _D8) - np.einsum("im,jl->ijlm", _D8, _D8))
    rhs += np.einsum("ilk,jmk->ijlm", D_TABLE, D_TABLE) - np.einsum("jlk,imk->ijlm", D_TABLE, D_TABLE)
    return _res(lhs - rhs)


def _fd_cyclic(*_):
    t = (np.einsum("ijk,klm->ijlm", F_TABLE, D_TABLE) + np.einsum("ilk,jmk->ijlm", F_TABLE, D_TABLE)
         + np.einsum("imk,jlk->ijlm", F_TABLE, D_TABLE))
    return _res(t)


def _fd_second(*_):
    t = (np.einsum("ijk,klm->ijlm", F_TABLE, D_TABLE) + np.einsum("ljk,imk->ijlm", F_TABLE, D_TABLE)
         + np.einsum("mjk,ilk->ijlm", F_TABLE, D_TABLE))
    return _res(t)


def _dd_cyclic(*_):
    lhs = (np.einsum("ijk,klm->ijlm", D_TABLE, D_TABLE) + np.einsum("ilk,kjm->ijlm", D_TABLE, D_TABLE)
           + np.einsum("imk,kjl->ijlm", D_TABLE, D_TABLE))
    rhs = (np.einsum("ij,lm->ijlm", _D8, _D8) + np.einsum("il,jm->ijlm", _D8, _D8)
           + np.einsum("im,jl->ijlm", _D8, _D8)) / 3
    return _res(lhs - rhs)


def _commutator_tables(*_):
    worst = 0.0
    for j in range(8):
        for k in range(8):
            lj, lk = GELL_MANN[j], GELL_MANN[k]
            comm = lj @ lk - lk @ lj - 2j * np.einsum("l,lab->ab", F_TABLE[j, k], GELL_MANN)
            anti = lj @ lk + lk @ lj - (4 / 3) * (j == k) * _I3 - 2 * np.einsum("l,lab->ab", D_TABLE[j, k], GELL_MANN)
            worst = max(worst, _res(comm), _res(anti))
    return worst


def _gell_mann_product(*_):
    worst = 0.0
    for j in range(8):
        for k in range(8):
            rhs = (2 / 3) * (j == k) * _I3 + np.einsum("l,lab->ab", D_TABLE[j, k] + 1j * F_TABLE[j, k], GELL_MANN)
            worst = max(worst, _res(GELL_MANN[j] @ GELL_MANN[k] - rhs))
    return worst


def _trace_orthogonality(*_):
    return _res(np.einsum("jab,kba->jk", GELL_MANN, GELL_MANN) - 2 * _D8)


# ---- vector identities --------------------------------------------------


def _jacobi(a, b, c, *_):
    return _res(wedge(a, wedge(b, c)) + wedge(b, wedge(c, a)) + wedge(c, wedge(a, b)))


def _double_wedge(a, b, c, *_):
    rhs = 2 * (b * (a @ c) - c * (a @ b)) + star(b, star(a, c)) - star(c, star(a, b))
    return _res(wedge(a, wedge(b, c)) - rhs)


def _wedge_norm(a, b, *_):
    ab = wedge(a, b)
    sab = star(a, b)
    rhs = 2 * ((a @ a) * (b @ b) - (a @ b) ** 2) + star(a, a) @ star(b, b) - sab @ sab
    return abs(ab @ ab - rhs)


def _wedge_star_cyclic(a, b, c, *_):
    return _res(wedge(a, star(b, c)) + wedge(b, star(c, a)) + wedge(c, star(a, b)))


def _wedge_star_mixed(a, b, c, *_):
    return _res(wedge(a, star(b, c)) + star(c, wedge(b, a)) + star(b, wedge(c, a)))


def _wedge_self_star(a, *_):
    return _res(wedge(a, star(a, a)))


def _commutant(a, b, c, mu, nu):
    return _res(wedge(a, mu * a + nu * star(a, a)))


def _wedge_star_combined(a, b, c, *_):
    lhs = wedge(b, star(a, c)) + wedge(c, star(a, b))
    rhs = star(c, wedge(b, a)) + star(b, wedge(c, a))
    return _res(lhs - rhs)


def _star_cyclic(a, b, c, *_):
    lhs = star(a, star(b, c)) + star(b, star(c, a)) + star(c, star(a, b))
    rhs = a * (b @ c) + b * (c @ a) + c * (a @ b)
    return _res(lhs - rhs)


def _star_cube(a, *_):
    return _res(star(a, star(a, a)) - (a @ a) * a)


def _star_square_square(a, *_):
    aa = star(a, a)
    return _res(star(aa, aa) - (2 * (a @ aa) * a - (a @ a) * aa))


def _triple_wedge_scalar(a, b, c, *_):
    x, y, z = a @ wedge(b, c), b @ wedge(c, a), c @ wedge(a, b)
    return max(abs(x - y), abs(y - z))


def _triple_star_scalar(a, b, c, *_):
    x, y, z = a @ star(b, c), b @ star(c, a), c @ star(a, b)
    return max(abs(x - y), abs(y - z))


def _star_square_norm(a, *_):
    aa = star(a, a)
    return abs(aa @ aa - (a @ a) ** 2)


# ---- matrix identities --------------------------------------------------


def _pair_product(a, b, *_):
    rhs = (2 / 3) * (a @ b) * _I3 + lam_dot(star(a, b) / SQRT3 + 1j * wedge(a, b) / SQRT3)
    return _res(lam_dot(a) @ lam_dot(b) - rhs)


def _square(a, *_):
    la = lam_dot(a)
    return _res(la @ la - ((2 / 3) * (a @ a) * _I3 + lam_dot(star(a, a)) / SQRT3))


def _commutator(a, b, *_):
    la, lb = lam_dot(a), lam_dot(b)
    return _res(la @ lb - lb @ la - (2j / SQRT3) * lam_dot(wedge(a, b)))


def _anticommutator(a, b, *_):
    la, lb = lam_dot(a), lam_dot(b)
    return _res(la @ lb + lb @ la - ((4 / 3) * (a @ b) * _I3 + (2 / SQRT3) * lam_dot(star(a, b))))


def _triple_product(a, b, c, *_):
    scalar = 2 / (3 * SQRT3) * (c @ star(a, b) + 1j * (c @ wedge(a, b)))
    vec = (
        -(1 / 3) * (star(b, star(a, c)) - star(c, star(a, b)) - star(a, star(b, c)))
        - (2 / 3) * (b * (a @ c) - c * (a @ b) - a * (b @ c))
        + (1j / 3) * (star(c, wedge(a, b)) - wedge(c, star(a, b)))
    )
    return _res(lam_dot(a) @ lam_dot(b) @ lam_dot(c) - (scalar * _I3 + lam_dot(vec)))


def _sandwich(a, b, *_):
    aa = star(a, a)
    scalar = 2 / (3 * SQRT3) * (a @ star(a, b))
    vec = -(2 / 3) * star(b, aa) - (1 / 3) * (a @ a) * b + 2 * (a @ b) * a
    la = lam_dot(a)
    return _res(la @ lam_dot(b) @ la - (scalar * _I3 + lam_dot(vec)))


def _cube(a, *_):
    la = lam_dot(a)
    rhs = 2 / (3 * SQRT3) * (a @ star(a, a)) * _I3 + (a @ a) * la
    return _res(la @ la @ la - rhs)


def _casimir_quadratic(a, *_):
    la = lam_dot(a)
    return abs(0.5 * np.trace(la @ la).real - a @ a)


def _casimir_cubic(a, *_):
    la = lam_dot(a)
    return abs(SQRT3 / 2 * np.trace(la @ la @ la).real - a @ star(a, a))


def _determinant(a, *_):
    return abs(np.linalg.det(lam_dot(a)).real - 2 / (3 * SQRT3) * (a @ star(a, a)))


def _coordinate_invariant(a, *_):
    return abs(cubic_invariant(a) - a @ star(a, a))


IDENTITIES: dict[str, Identity] = {
    "ff_contraction": _ff_contraction,
    "fd_cyclic": _fd_cyclic,
    "fd_second": _fd_second,
    "dd_cyclic": _dd_cyclic,
    "commutation_relations": _commutator_tables,
    "gell_mann_product": _gell_mann_product,
    "trace_orthogonality": _trace_orthogonality,
    "jacobi_wedge": _jacobi,
    "double_wedge": _double_wedge,
    "wedge_norm": _wedge_norm,
    "wedge_star_cyclic": _wedge_star_cyclic,
    "wedge_star_mixed": _wedge_star_mixed,
    "wedge_self_star": _wedge_self_star,
    "commutant_of_a": _commutant,
    "wedge_star_combined": _wedge_star_combined,
    "star_cyclic": _star_cyclic,
    "star_cube": _star_cube,
    "star_square_square": _star_square_square,
    "triple_wedge_scalar": _triple_wedge_scalar,
    "triple_star_scalar": _triple_star_scalar,
    "star_square_norm": _star_square_norm,
    "pair_product": _pair_product,
    "square": _square,
    "commutator": _commutator,
    "anticommutator": _anticommutator,
    "triple_product": _triple_product,
    "sandwich": _sandwich,
    "cube": _cube,
    "casimir_quadratic": _casimir_quadratic,
    "casimir_cubic": _casimir_cubic,
    "determinant": _determinant,
    "coordinate_invariant": _coordinate_invariant,
}

#: identities that do not depend on the random draw
TENSOR_IDENTITIES = frozenset(
    {"ff_contraction", "fd_cyclic", "fd_second", "dd_cyclic", "commutation_relations",
     "gell_mann_product", "trace_orthogonality"}
)


def wedge_norm_as_printed(a, b) -> float:
    """Residual of the norm identity with coefficients 2/3 and 1/3 (known not to hold)."""
    ab = wedge(a, b)
    sab = star(a, b)
    rhs = (2 / 3) * ((a @ a) * (b @ b) - (a @ b) ** 2) + (1 / 3) * (star(a, a) @ star(b, b) - sab @ sab)
    return abs(ab @ ab - rhs)


@dataclass(frozen=True)
class IdentityResult:
    name: str
    max_residual: float
    passed: bool


@dataclass(frozen=True)
class IdentityReport:
    seed: int
    count: int
    tol: float
    results: tuple[IdentityResult, ...]

    @property
    def passed(self) -> bool:
        return all(r.passed for r in self.results)

    def lines(self) -> list[str]:
        out = [f"seed={self.seed} count={self.count} tol={self.tol:g}"]
        out += [f"{r.name},{r.max_residual!r},{'pass' if r.passed else 'FAIL'}" for r in self.results]
        return out


def verify_identities(seed: int, count: int, tol: float = 1e-10) -> IdentityReport:
    """Run every identity on ``count`` seeded draws of ``(a, b, c, mu, nu)``."""
    if count < 1:
        raise ValueError("count must be at least 1")
    rng = np.random.default_rng(seed)
    draws = [(rng.uniform(-1, 1, 8), rng.uniform(-1, 1, 8), rng.uniform(-1, 1, 8),
              float(rng.uniform(-2, 2)), float(rng.uniform(-2, 2))) for _ in range(count)]
    results = []
    for name, fn in IDENTITIES.items():
        if name in TENSOR_IDENTITIES:
            worst = fn()
        else:
            worst = max(fn(*d) for d in draws)
        results.append(IdentityResult(name, float(worst), bool(worst < tol)))
    return IdentityReport(seed, count, tol, tuple(results))
