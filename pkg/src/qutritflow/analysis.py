"""Trajectory post-processing: Poincare sections, classification, entropy.

Crossings and recurrences are refined with the exact propagator, so their
accuracy does not depend on how densely the trajectory was sampled.
"""

from __future__ import annotations

import enum
import logging
import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Any

import numpy as np
from scipy.optimize import minimize_scalar

from .evolution import EvolutionParams, Trajectory, propagate_exact, riccati_rhs
from .state_space import entropy
from .su3 import as_vec8

logger = logging.getLogger(__name__)

TAIL_FRACTION = 0.25
CLUSTER_RADIUS = 1e-5
MAX_PERIODIC_CLUSTERS = 32
RECURRENCE_TOL = 1e-6


class DegenerateSection(ValueError):
    pass


class InsufficientSpan(ValueError):
    pass


class TrajectoryLabel(str, enum.Enum):
    STATIONARY = "Stationary"
    PERIODIC = "Periodic"
    QUASI_PERIODIC = "QuasiPeriodic"
    CONVERGENT = "ConvergentToEquilibrium"
    LIMIT_CYCLE = "LimitCycle"


@dataclass(frozen=True)
class SectionSpec:
    """Hyperplane ``n.(xi - point) = 0`` crossed in the given sense (+1, -1 or 0 for both)."""

    normal: np.ndarray
    point: np.ndarray = field(default_factory=lambda: np.zeros(8))
    direction: int = 0

    def __post_init__(self):
        n = as_vec8(self.normal, "normal").copy()
        if not np.linalg.norm(n) > 0:
            raise ValueError("section normal must be nonzero")
        if self.direction not in (-1, 0, 1):
            raise ValueError("direction must be -1, 0 or +1")
        object.__setattr__(self, "normal", n)
        object.__setattr__(self, "point", as_vec8(self.point, "point").copy())

    def signed(self, x) -> np.ndarray:
        return (np.asarray(x) - self.point) @ self.normal


@dataclass(frozen=True)
class TrajectoryClass:
    label: TrajectoryLabel
    period_estimate: float | None = None
    limit_point: np.ndarray | None = None
    evidence: dict[str, Any] = field(default_factory=dict)


# --------------------------------------------------------------------------
# Poincare sections


def _hermite_root(s0, s1, d0, d1) -> float:
    """Root in [0, 1] of the cubic Hermite interpolant of a signed distance."""
    # coefficients of s(u) = c3 u^3 + c2 u^2 + c1 u + c0
    c0, c1 = s0, d0
    c2 = 3 * (s1 - s0) - 2 * d0 - d1
    c3 = 2 * (s0 - s1) + d0 + d1
    lin = s0 / (s0 - s1)
    roots = np.roots([c3, c2, c1, c0]) if abs(c3) > 0 else np.roots([c2, c1, c0])
    real = [r.real for r in roots if abs(r.imag) < 1e-9 and -1e-9 <= r.real <= 1 + 1e-9]
    return min(real, key=lambda r: abs(r - lin)) if real else lin


def poincare_crossings(traj: Trajectory, spec: SectionSpec, p: EvolutionParams,
                       tol: float = 1e-12) -> tuple[np.ndarray, np.ndarray]:
    """Crossing times and points of the trajectory with a section hyperplane.

    Each bracketing pair of samples gives a first guess from the cubic Hermite
    interpolant (slopes from the right-hand side); the guess is then polished
    by Newton steps along the exact flow from the left sample.
    """
    x, t = traj.states, traj.times
    s = spec.signed(x)
    if np.max(np.abs(s)) <= 1e-12:
        raise DegenerateSection("trajectory lies in the section plane")
    n = spec.normal
    times, points = [], []
    for i in range(len(t) - 1):
        s0, s1 = s[i], s[i + 1]
        if s0 == 0.0 and i > 0:
            continue  # counted as the right end of the previous interval
        up = s0 < 0.0 <= s1
        down = s0 > 0.0 >= s1
        if not ((up and spec.direction >= 0) or (down and spec.direction <= 0)):
            continue
        h = t[i + 1] - t[i]
        d0 = h * (n @ riccati_rhs(x[i], p))
        d1 = h * (n @ riccati_rhs(x[i + 1], p))
        u = _hermite_root(s0, s1, d0, d1)
        tau, lo, hi = u * h, 0.0, h
        y = propagate_exact(x[i], p, tau)
        for _ in range(30):
            g = spec.signed(y)
            if abs(g) <= tol:
                break
            if (g < 0) == (s0 < 0):
                lo = tau
            else:
                hi = tau
            dg = n @ riccati_rhs(y, p)
            step = tau - g / dg if dg != 0 else 0.5 * (lo + hi)
            tau = step if lo < step < hi else 0.5 * (lo + hi)
            y = propagate_exact(x[i], p, tau)
        times.append(t[i] + tau)
        points.append(y)
    return np.array(times), np.array(points).reshape(-1, 8)


def poincare(traj: Trajectory, spec: SectionSpec, p: EvolutionParams) -> np.ndarray:
    """Section points (one row per crossing)."""
    return poincare_crossings(traj, spec, p)[1]


def cluster_count(points: np.ndarray, radius: float = CLUSTER_RADIUS) -> int:
    """Greedy count of balls of the given radius needed to cover the points."""
    centres: list[np.ndarray] = []
    for q in points:
        if not any(np.linalg.norm(q - c) <= radius for c in centres):
            centres.append(q)
    return len(centres)


def return_contraction(points: np.ndarray, floor: float = 1e-9) -> np.ndarray:
    """Distances between successive section returns, cut where they hit ``floor``."""
    d = np.linalg.norm(np.diff(points, axis=0), axis=1)
    small = np.nonzero(d <= floor)[0]
    return d[: small[0]] if small.size else d


# --------------------------------------------------------------------------
# recurrence


def _recurrence_residual(x, p, period) -> float:
    return float(np.linalg.norm(propagate_exact(x, p, period) - x))


def _period_candidates(traj: Trajectory, start: int, limit: int = 12) -> list[float]:
    """Lags of the deepest local minima of ``|xi(t0 + lag) - xi(t0)|``."""
    x, t = traj.states[start:], traj.times[start:]
    d = np.linalg.norm(x - x[0], axis=1)
    # skip the initial departure from x[0]
    k = 1
    while k < len(d) - 1 and d[k + 1] >= d[k]:
        k += 1
    idx = [j for j in range(max(k, 1), len(d) - 1) if d[j] <= d[j - 1] and d[j] <= d[j + 1]]
    idx.sort(key=lambda j: d[j])
    return sorted(float(t[j] - t[0]) for j in idx[:limit])


def find_period(traj: Trajectory, p: EvolutionParams, start: int,
                tol: float = RECURRENCE_TOL, checks: int = 8) -> tuple[float, float] | None:
    """Smallest recurrence time over the samples from ``start`` on, or ``None``.

    Candidate lags come from the sampled distance function; each is refined
    by minimising ``|Phi_T(x) - x|`` along the exact flow.
    """
    x0 = traj.states[start]
    dt = float(np.median(np.diff(traj.times)))
    probe = np.linspace(start, len(traj) - 1, checks).astype(int)
    for lag in _period_candidates(traj, start):
        res = minimize_scalar(lambda T: _recurrence_residual(x0, p, T),
                              bounds=(max(lag - 2 * dt, dt / 4), lag + 2 * dt), method="bounded",
                              options={"xatol": 1e-12})
        period = float(res.x)
        worst = max(_recurrence_residual(traj.states[j], p, period) for j in probe)
        if worst < tol:
            return _fundamental(x0, p, period, worst, probe, traj, tol)
    return None


def _fundamental(x0, p, period, worst, probe, traj, tol, max_div: int = 12):
    """Reduce a recurrence time to the smallest sub-multiple that still recurs."""
    for k in range(max_div, 1, -1):
        guess = period / k
        res = minimize_scalar(lambda T: _recurrence_residual(x0, p, T),
                              bounds=(guess * (1 - 1e-3), guess * (1 + 1e-3)), method="bounded",
                              options={"xatol": 1e-12})
        if res.fun < tol:
            w = max(_recurrence_residual(traj.states[j], p, float(res.x)) for j in probe)
            if w < tol:
                return float(res.x), w
    return period, worst


def linear_frequencies(a) -> np.ndarray:
    """Angular frequencies ``|h_i - h_j|`` of the linear flow (``h`` the eigenvalues of ``a.lambda``)."""
    from .su3 import lam_dot

    h = np.linalg.eigvalsh(lam_dot(as_vec8(a, "a")))
    return np.array([abs(h[i] - h[j]) for i in range(3) for j in range(i + 1, 3)])


def independent_frequency_count(freqs, max_den: int = 64, tol: float = 1e-9) -> int:
    """Rank over the rationals of a set of frequencies (small-denominator test)."""
    f = sorted(float(v) for v in freqs if v > tol)
    basis: list[float] = []
    for v in f:
        dependent = False
        if not basis:
            basis.append(v)
            continue
        # a third eigenvalue gap is always the sum of the other two, so pairwise tests suffice
        for w in basis:
            r = Fraction(v / w).limit_denominator(max_den)
            if abs(v - float(r) * w) <= tol * max(v, 1.0):
                dependent = True
                break
        if not dependent and len(basis) == 2:
            u, w = basis
            for m in range(-max_den, max_den + 1):
                r = Fraction((v - m * u) / w).limit_denominator(max_den)
                if abs(v - m * u - float(r) * w) <= tol * max(v, 1.0):
                    dependent = True
                    break
        if not dependent:
            basis.append(v)
    return len(basis)


# --------------------------------------------------------------------------
# classification


def characteristic_span(p: EvolutionParams) -> float:
    return 50.0 / max(float(np.linalg.norm(p.a)), float(np.linalg.norm(p.b)), 1.0)


def default_section(traj: Trajectory, p: EvolutionParams) -> SectionSpec:
    """Plane through the first tail sample, normal to the flow there."""
    start = int(len(traj) * (1 - TAIL_FRACTION))
    x = traj.states[start]
    v = riccati_rhs(x, p)
    if not np.linalg.norm(v) > 0:
        v = np.eye(8)[0]
    return SectionSpec(v, x, +1)


def classify_trajectory(traj: Trajectory, p: EvolutionParams, section: SectionSpec | None = None,
                        tail_fraction: float = TAIL_FRACTION) -> TrajectoryClass:
    """Qualitative type of a sampled trajectory.

    Raises
    ------
    InsufficientSpan
        if the trajectory is shorter than 50 characteristic times.
    """
    span = traj.times[-1] - traj.times[0]
    need = characteristic_span(p)
    if span < need:
        raise InsufficientSpan(f"span {span:g} < {need:g}")
    x = traj.states
    ev: dict[str, Any] = {"span": float(span)}
    drift = float(np.max(np.linalg.norm(x - x[0], axis=1)))
    ev["total_variation"] = drift
    if drift < 1e-8:
        return TrajectoryClass(TrajectoryLabel.STATIONARY, None, x[0].copy(), ev)

    start = int(len(traj) * (1 - tail_fraction))
    tail = x[start:]
    end = x[-1]
    tail_var = float(np.max(np.linalg.norm(tail - end, axis=1)))
    resid = float(np.linalg.norm(riccati_rhs(end, p)))
    ev.update(tail_variation=tail_var, end_residual=resid)
    if tail_var < 1e-6 and resid < 1e-5:
        return TrajectoryClass(TrajectoryLabel.CONVERGENT, None, end.copy(), ev)
    conv = _slow_convergence(traj, p, start)
    if conv is not None:
        ev.update(conv[1])
        return TrajectoryClass(TrajectoryLabel.CONVERGENT, None, conv[0], ev)

    if not np.linalg.norm(p.b) > 0:
        f = linear_frequencies(p.a)
        ev["frequencies"] = f.tolist()
        ev["independent_frequencies"] = independent_frequency_count(f)

    found = find_period(traj, p, start)
    sec = section or default_section(traj, p)
    try:
        times, pts = poincare_crossings(traj, sec, p)
    except DegenerateSection:
        times, pts = np.empty(0), np.empty((0, 8))
    ev["section_points"] = len(pts)
    if found is not None:
        period, worst = found
        ev["recurrence_residual"] = worst
        ev["amplitude"] = (tail.max(axis=0) - tail.min(axis=0)).tolist()
        from_start = _recurrence_residual(x[0], p, period)
        ev["recurrence_from_start"] = from_start
        if from_start < RECURRENCE_TOL:
            return TrajectoryClass(TrajectoryLabel.PERIODIC, period, None, ev)
        d = return_contraction(pts)
        ev["return_steps"] = d.tolist()
        if d.size >= 2 and d[-1] < d[0]:
            return TrajectoryClass(TrajectoryLabel.LIMIT_CYCLE, period, None, ev)
        return TrajectoryClass(TrajectoryLabel.PERIODIC, period, None, ev)

    tail_pts = pts[times >= traj.times[start]] if len(pts) else pts
    ev["section_clusters"] = cluster_count(pts)
    ev["tail_section_clusters"] = cluster_count(tail_pts)
    if 0 < ev["section_clusters"] <= MAX_PERIODIC_CLUSTERS and ev["tail_section_clusters"] < ev["section_clusters"]:
        # the section set stopped growing even though no recurrence time was resolved
        return TrajectoryClass(TrajectoryLabel.PERIODIC, None, None, ev)
    return TrajectoryClass(TrajectoryLabel.QUASI_PERIODIC, None, None, ev)


def _slow_convergence(traj: Trajectory, p: EvolutionParams, start: int):
    """Detect a tail that is still approaching an equilibrium.

    The end point is polished by Newton's method; the trajectory counts as
    convergent when the polished point lies within 1e-4 of the end and the
    distance to it decreases steadily over the tail.
    """
    from .state_space import classify
    from .stationary import newton_equilibrium

    end = traj.states[-1]
    root = newton_equilibrium(end, p)
    if root is None or not classify(root).valid:
        return None
    dist = np.linalg.norm(traj.states[start:] - root, axis=1)
    if not dist[-1] < 1e-4:
        return None
    quarters = np.array_split(dist, 4)
    peaks = [float(q.max()) for q in quarters]
    if not all(peaks[i + 1] < peaks[i] for i in range(3)):
        return None
    return root, {"limit_distance": float(dist[-1]), "tail_distance_peaks": peaks}


# --------------------------------------------------------------------------
# entropy


def entropy_series(traj: Trajectory) -> np.ndarray:
    if traj.entropy is not None:
        return np.asarray(traj.entropy)
    return np.array([entropy(x) for x in traj.states])


def oscillation_amplitudes(series, chunks: int = 4, tail_fraction: float = 0.5) -> np.ndarray:
    """Peak-to-peak amplitude of a series on consecutive chunks of its tail."""
    s = np.asarray(series, dtype=float)
    tail = s[int(len(s) * (1 - tail_fraction)):]
    return np.array([float(c.max() - c.min()) for c in np.array_split(tail, chunks)])


def sustained_oscillation(series, min_amplitude: float = 1e-3, max_decay: float = 0.1) -> bool:
    """True when the tail keeps oscillating with a non-decaying amplitude."""
    amp = oscillation_amplitudes(series)
    return bool(amp.min() > min_amplitude and amp[-1] >= (1 - max_decay) * amp[0])


def frequency_summary(traj: Trajectory) -> dict[str, float]:
    """Dominant angular frequency of each coordinate over the tail (diagnostic only)."""
    start = int(len(traj) * (1 - TAIL_FRACTION))
    t = traj.times[start:]
    x = traj.states[start:] - traj.states[start:].mean(axis=0)
    dt = float(np.median(np.diff(t)))
    freqs = np.fft.rfftfreq(len(t), dt) * 2 * math.pi
    spec = np.abs(np.fft.rfft(x, axis=0))
    return {f"xi{i + 1}": float(freqs[int(np.argmax(spec[1:, i])) + 1]) for i in range(8)}
