"""Matrix Jacobi fields ``J'' + S J = 0, J(0) = 0, J'(0) = I`` and conjugate instants.

Column ``J(t) v`` is the Jacobi field with initial derivative ``v``, so an
instant ``t`` is conjugate exactly when ``J(t)`` is singular, with
multiplicity ``dim ker J(t)``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from ._search import bisect_sign, golden_min
from .errors import NotAConjugateInstant, UnresolvedCluster
from .geometry import CurvatureProfile

JACOBI_STEPS = 2000
KERNEL_TOL = 1e-7
REFINE_WIDTH = 1e-10
ENDPOINT_GUARD = 1e-9


def _rk4_step(j, p, s0, sm, s1, h):
    k1j, k1p = p, -s0 @ j
    k2j, k2p = p + 0.5 * h * k1p, -sm @ (j + 0.5 * h * k1j)
    k3j, k3p = p + 0.5 * h * k2p, -sm @ (j + 0.5 * h * k2j)
    k4j, k4p = p + h * k3p, -s1 @ (j + h * k3j)
    return (
        j + (h / 6.0) * (k1j + 2 * k2j + 2 * k3j + k4j),
        p + (h / 6.0) * (k1p + 2 * k2p + 2 * k3p + k4p),
    )


@dataclass
class JacobiSolution:
    grid: np.ndarray
    J: np.ndarray  # (steps + 1, n, n)
    Jp: np.ndarray
    profile: CurvatureProfile = field(repr=False)

    @property
    def n(self) -> int:
        return self.J.shape[1]

    @property
    def step(self) -> float:
        return float(self.grid[1] - self.grid[0])

    def at(self, t: float):
        """``(J(t), J'(t))`` by one RK4 step from the grid point at or below ``t``."""
        t = float(t)
        i = min(int(math.floor(t / self.step)), len(self.grid) - 1)
        i = max(i, 0)
        h = t - self.grid[i]
        if h == 0.0:
            return self.J[i].copy(), self.Jp[i].copy()
        s0, sm, s1 = self.profile.many([self.grid[i], self.grid[i] + 0.5 * h, t])
        return _rk4_step(self.J[i], self.Jp[i], s0, sm, s1, h)

    def wronskian(self) -> np.ndarray:
        """``J'^T J - J^T J'`` on the grid; identically zero for symmetric ``S``."""
        return np.swapaxes(self.Jp, 1, 2) @ self.J - np.swapaxes(self.J, 1, 2) @ self.Jp


def solve_jacobi(profile: CurvatureProfile, steps: int = JACOBI_STEPS) -> JacobiSolution:
    if steps < 100:
        raise ValueError("steps must be at least 100")
    n = profile.n_normal
    h = 1.0 / steps
    s = profile.many(np.linspace(0.0, 1.0, 2 * steps + 1))
    J = np.empty((steps + 1, n, n))
    Jp = np.empty((steps + 1, n, n))
    j, p = np.zeros((n, n)), np.eye(n)
    J[0], Jp[0] = j, p
    for i in range(steps):
        j, p = _rk4_step(j, p, s[2 * i], s[2 * i + 1], s[2 * i + 2], h)
        J[i + 1], Jp[i + 1] = j, p
    return JacobiSolution(np.linspace(0.0, 1.0, steps + 1), J, Jp, profile)


@dataclass
class ConjugateReport:
    points: list  # [(t, multiplicity)], strictly increasing, t in (0, 1)
    nondegenerate: bool
    endpoint_multiplicity: int = 0

    @property
    def total(self) -> int:
        return sum(m for _, m in self.points)

    def to_dict(self):
        return {
            "points": [{"t": float(t), "multiplicity": int(m)} for t, m in self.points],
            "total": self.total,
            "nondegenerate": bool(self.nondegenerate),
            "endpoint_multiplicity": int(self.endpoint_multiplicity),
        }


def _scale(j, p):
    # the stacked 2n x n matrix [J; J'] has full rank, so its norm never vanishes
    return float(np.linalg.norm(np.vstack([j, p]), 2))


def _relative_sigma(sol, t):
    j, p = sol.at(t)
    return float(np.linalg.svd(j, compute_uv=False)[-1]) / _scale(j, p)


def _multiplicity(sol, t, kernel_tol):
    j, p = sol.at(t)
    sv = np.linalg.svd(j, compute_uv=False)
    return int(np.sum(sv <= kernel_tol * _scale(j, p)))


def conjugate_points(sol: JacobiSolution, kernel_tol: float = KERNEL_TOL) -> ConjugateReport:
    """Conjugate instants in (0, 1) with multiplicities, plus the non-degeneracy flag.

    Singular values are compared against ``kernel_tol * ||[J; J']||``.
    Zeros of ``det J`` are bracketed by sign changes (odd multiplicity) and
    by local minima of the relative smallest singular value (even
    multiplicity), then refined to width 1e-10.
    """
    grid = sol.grid
    sv = np.linalg.svd(sol.J, compute_uv=False)
    scale = np.linalg.norm(np.concatenate([sol.J, sol.Jp], axis=1), ord=2, axis=(1, 2))
    rel = sv[:, -1] / scale
    sign = np.sign(np.linalg.det(sol.J))
    sign[0] = 1.0  # J(0) = 0 but J(t) ~ t I just after
    flips = sign[:-1] != sign[1:]
    flips[0] = False
    last = len(grid) - 1

    def det_sign(t):
        return float(np.sign(np.linalg.det(sol.at(t)[0])))

    found = []
    for i in np.flatnonzero(flips):
        found.append((bisect_sign(det_sign, grid[i], grid[i + 1], REFINE_WIDTH), True))
    for i in range(2, last):
        if flips[i - 1] or flips[i]:
            continue
        if rel[i] < rel[i - 1] and rel[i] <= rel[i + 1]:
            t0 = golden_min(lambda t: _relative_sigma(sol, t), grid[i - 1], grid[i + 1], REFINE_WIDTH)
            if _relative_sigma(sol, t0) <= kernel_tol:
                found.append((t0, False))
    found.sort()

    endpoint_mult = _multiplicity(sol, 1.0, kernel_tol)
    points = []
    for t0, odd in found:
        if t0 >= 1.0 - ENDPOINT_GUARD:
            endpoint_mult = max(endpoint_mult, _multiplicity(sol, t0, kernel_tol), 1)
            continue
        m = _multiplicity(sol, t0, kernel_tol)
        if m == 0:
            raise UnresolvedCluster(f"refined instant {t0:.10f} shows no kernel at tolerance {kernel_tol:g}")
        if points and t0 - points[-1][0] < sol.step:
            raise UnresolvedCluster(f"conjugate instants {points[-1][0]:.8f} and {t0:.8f} share a grid cell")
        if (m % 2 == 1) != odd:
            raise UnresolvedCluster(f"multiplicity {m} at {t0:.8f} is inconsistent with the sign of det J")
        points.append((float(t0), m))
    return ConjugateReport(points, endpoint_mult == 0, endpoint_mult)


def kernel_fields(sol: JacobiSolution, t0: float, kernel_tol: float = KERNEL_TOL):
    """Orthonormal ``v`` spanning ``ker J(t0)`` and the end slopes ``u'(1) = t0 J'(t0) v``.

    ``u(x) = J(t0 x) v`` is the corresponding solution of the rescaled
    Dirichlet problem on [0, 1].
    """
    j, p = sol.at(t0)
    _, sv, vt = np.linalg.svd(j)
    mask = sv <= kernel_tol * _scale(j, p)
    if not mask.any():
        raise NotAConjugateInstant(f"J({t0:.10f}) has no kernel at tolerance {kernel_tol:g}")
    return [(v, t0 * (p @ v)) for v in vt[mask]]


def sturm_ceiling(profile: CurvatureProfile) -> int:
    """Crude upper bound on the number of conjugate instants, for sanity checks."""
    return profile.n_normal * (1 + math.ceil(math.sqrt(profile.sup_norm()) / math.pi))
