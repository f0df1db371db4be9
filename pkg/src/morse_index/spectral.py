"""Morse index, signature and crossings of paths of symmetric matrices.

A path ``lam -> L(lam)`` of symmetric matrices changes its Morse index only
where it becomes singular.  At a regular crossing the jump is the signature
of the derivative form restricted to the kernel, which is what
:func:`crossing_sum_identity` checks against the endpoint eigencounts.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from ._search import bisect_sign, golden_min
from .errors import Degenerate, EndpointDegenerate, IrregularCrossing, UnresolvedCluster

KERNEL_TOL = 1e-8
REGULARITY_TOL = 1e-6
ZERO_TOL = 1e-9
GRID_SIZE = 512
BISECT_WIDTH = 1e-10
FD_STEP = 1e-5


def as_symmetric(a) -> np.ndarray:
    """Return ``(a + a.T) / 2`` as a float array; the result is exactly symmetric."""
    a = np.asarray(a, dtype=float)
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise ValueError(f"expected a square matrix, got shape {a.shape}")
    return 0.5 * (a + a.T)


@dataclass(frozen=True)
class SymMatrixPath:
    """A map from [0, 1] to n x n symmetric matrices."""

    n: int
    fn: Callable[[float], np.ndarray]
    smoothness_hint: int = GRID_SIZE

    def __call__(self, lam: float) -> np.ndarray:
        return as_symmetric(self.fn(float(lam)))


@dataclass
class Crossing:
    lambda0: float
    kernel_basis: np.ndarray  # columns are orthonormal kernel vectors
    form_eigenvalues: np.ndarray
    signature: int
    bracket: tuple[float, float] = field(default=(0.0, 1.0), repr=False)

    @property
    def kernel_dim(self) -> int:
        return self.kernel_basis.shape[1]

    def to_dict(self):
        return {
            "lambda0": float(self.lambda0),
            "kernel_dim": int(self.kernel_dim),
            "form_eigenvalues": [float(v) for v in self.form_eigenvalues],
            "signature": int(self.signature),
        }


def morse_index(m, zero_tol: float = ZERO_TOL) -> int:
    """Number of eigenvalues below ``-zero_tol``.

    Raises :class:`Degenerate` when an eigenvalue falls in
    ``[-zero_tol, zero_tol]``; the exception still carries the count.
    """
    ev = np.linalg.eigvalsh(as_symmetric(m))
    mu = int(np.sum(ev < -zero_tol))
    near = int(np.sum(np.abs(ev) <= zero_tol))
    if near:
        raise Degenerate(f"{near} eigenvalue(s) within {zero_tol:g} of zero", morse_index=mu, near_zero=near)
    return mu


def signature(m, zero_tol: float = ZERO_TOL) -> int:
    ev = np.linalg.eigvalsh(as_symmetric(m))
    if np.any(np.abs(ev) <= zero_tol):
        raise Degenerate(f"form is degenerate at tolerance {zero_tol:g}")
    return int(np.sum(ev > 0) - np.sum(ev < 0))


def _parity(ev) -> int:
    # sign of det, with exact zeros counted as positive
    return -1 if np.sum(ev < 0) % 2 else 1


def _crossing_at(path, lam0, kernel_tol, regularity_tol, bracket):
    ev, vecs = np.linalg.eigh(path(lam0))
    mask = np.abs(ev) <= kernel_tol
    if not mask.any():
        raise UnresolvedCluster(
            f"no eigenvalue within {kernel_tol:g} of zero at refined crossing {lam0:.12f} "
            f"(smallest |eigenvalue| {np.min(np.abs(ev)):.3e})"
        )
    basis = vecs[:, mask]
    h = min(FD_STEP, 0.5 * min(lam0, 1.0 - lam0))
    dot = (path(lam0 + h) - path(lam0 - h)) / (2.0 * h)
    form = np.linalg.eigvalsh(as_symmetric(basis.T @ dot @ basis))
    if np.any(np.abs(form) <= regularity_tol):
        raise IrregularCrossing(
            f"crossing at {lam0:.10f} has restricted form eigenvalue {form[np.argmin(np.abs(form))]:.3e}"
        )
    sig = int(np.sum(form > 0) - np.sum(form < 0))
    return Crossing(lam0, basis, form, sig, bracket)


def find_crossings(
    path: SymMatrixPath,
    grid_size: int = GRID_SIZE,
    kernel_tol: float = KERNEL_TOL,
    regularity_tol: float = REGULARITY_TOL,
) -> list[Crossing]:
    """Locate all instants in (0, 1) where ``path`` is singular.

    The grid has ``grid_size`` cells.  Cells where det changes sign are
    refined by bisection; interior local minima of the smallest
    |eigenvalue| (even-dimensional kernels leave det's sign unchanged) are
    refined by golden-section search.
    """
    if grid_size < 2:
        raise ValueError("grid_size must be at least 2")
    lams = np.linspace(0.0, 1.0, grid_size + 1)
    evs = np.array([np.linalg.eigvalsh(path(lam)) for lam in lams])
    smin = np.min(np.abs(evs), axis=1)
    for end in (0, -1):
        if smin[end] <= kernel_tol:
            raise EndpointDegenerate(f"path is singular at lambda={lams[end]:g} (|eigenvalue| {smin[end]:.3e})")
    parity = np.array([_parity(ev) for ev in evs])
    mu = np.sum(evs < 0, axis=1)
    flips = parity[:-1] != parity[1:]

    def sign(lam):
        return float(_parity(np.linalg.eigvalsh(path(lam))))

    def sigma(lam):
        return float(np.min(np.abs(np.linalg.eigvalsh(path(lam)))))

    found = []
    for i in np.flatnonzero(flips):
        lam0 = bisect_sign(sign, lams[i], lams[i + 1], BISECT_WIDTH)
        found.append((lam0, i, i + 1))
    for i in range(1, grid_size):
        if flips[i - 1] or flips[i]:
            continue
        if smin[i] < smin[i - 1] and smin[i] <= smin[i + 1]:
            lam0 = golden_min(sigma, lams[i - 1], lams[i + 1], BISECT_WIDTH)
            if sigma(lam0) <= kernel_tol:
                found.append((lam0, i - 1, i + 1))
    found.sort()

    crossings = []
    for lam0, lo, hi in found:
        if crossings and lam0 - crossings[-1].lambda0 < lams[1]:
            raise UnresolvedCluster(
                f"crossings at {crossings[-1].lambda0:.8f} and {lam0:.8f} are closer than the grid spacing"
            )
        c = _crossing_at(path, lam0, kernel_tol, regularity_tol, (lams[lo], lams[hi]))
        # a hidden second crossing in the bracket shows up as an index jump
        # that the local signature does not account for
        if int(mu[lo] - mu[hi]) != c.signature:
            raise UnresolvedCluster(
                f"index jump {int(mu[lo] - mu[hi])} across [{lams[lo]:.6f}, {lams[hi]:.6f}] "
                f"does not match signature {c.signature} at {lam0:.8f}; raise grid_size"
            )
        crossings.append(c)
    return crossings


def crossing_sum_identity(
    path: SymMatrixPath,
    grid_size: int = GRID_SIZE,
    kernel_tol: float = KERNEL_TOL,
    regularity_tol: float = REGULARITY_TOL,
):
    """Compare the endpoint index difference with the sum of crossing signatures.

    Returns ``(mu(path(0)) - mu(path(1)), sum of signatures, equal)``.
    """
    crossings = find_crossings(path, grid_size, kernel_tol, regularity_tol)
    lhs = morse_index(path(0.0), kernel_tol) - morse_index(path(1.0), kernel_tol)
    rhs = sum(c.signature for c in crossings)
    return lhs, rhs, lhs == rhs


def random_orthogonal(rng: np.random.Generator, n: int) -> np.ndarray:
    q, r = np.linalg.qr(rng.standard_normal((n, n)))
    return q * np.sign(np.diag(r))


def planted_path(rng: np.random.Generator, n: int, perturbation: float = 1e-3, min_gap: float = 0.02) -> SymMatrixPath:
    """Random path ``D(lam) + Q^T diag(eps) Q`` with planted roots of the diagonal part.

    ``D`` is diagonal and affine in ``lam``; its roots lie in (0.05, 0.95)
    and are at least ``min_gap`` apart, and each slope has random sign and
    magnitude in [0.5, 2].
    """
    while True:
        roots = np.sort(rng.uniform(0.05, 0.95, size=n))
        if n == 1 or np.min(np.diff(roots)) >= min_gap:
            break
    slopes = rng.choice([-1.0, 1.0], size=n) * rng.uniform(0.5, 2.0, size=n)
    q = random_orthogonal(rng, n)
    pert = q.T @ np.diag(rng.uniform(-perturbation, perturbation, size=n)) @ q

    def fn(lam):
        return np.diag(slopes * (lam - roots)) + pert

    return SymMatrixPath(n, fn)
