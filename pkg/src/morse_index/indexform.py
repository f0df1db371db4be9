"""Galerkin matrices of the scaled index form and the theorem check.

The scaled index form on ``H^1_0([0, 1], R^n)`` is

    q_lam(u) = int |u'|^2 - int <lam^2 S(lam x) u, u>,

with ``q_1`` the Hessian of the energy and ``q_0`` the scalar product
``<u', v'>``.  In the sine basis ``b_{k,i} = sqrt(2)/(k pi) sin(k pi x) e_i``,
which is orthonormal for that scalar product, ``q_lam`` has matrix
``I - lam^2 K(lam)``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import cached_property

import numpy as np

from . import spectral
from .errors import (
    DegenerateError,
    DegenerateGeodesic,
    IrregularCrossing,
    NotAConjugateInstant,
    NotACrossing,
    OracleMismatch,
    ResolutionError,
    UnresolvedCluster,
)
from .geometry import CurvatureProfile
from .jacobi import JACOBI_STEPS, KERNEL_TOL, JacobiSolution, conjugate_points, kernel_fields, solve_jacobi
from .spectral import SymMatrixPath

MODES = 128
QUAD_PANELS = 4096
ZERO_TOL = 1e-9
FD_STEP = 1e-5
ORACLE_RTOL = 1e-3
REGULARITY_TOL = 1e-6


def simpson_weights(panels: int) -> np.ndarray:
    """Composite Simpson weights on ``2 * panels + 1`` equispaced nodes of [0, 1]."""
    w = np.ones(2 * panels + 1)
    w[1:-1:2] = 4.0
    w[2:-1:2] = 2.0
    return w / (6.0 * panels)


@dataclass(eq=False)
class GalerkinBasis:
    n: int
    N: int = MODES
    quad_panels: int = QUAD_PANELS

    @property
    def size(self) -> int:
        return self.n * self.N

    @cached_property
    def nodes(self) -> np.ndarray:
        return np.linspace(0.0, 1.0, 2 * self.quad_panels + 1)

    @cached_property
    def weighted_cos(self) -> np.ndarray:
        """``w_q cos(m pi x_q)`` for m = 0 .. 2N, shape (2N + 1, nodes)."""
        m = np.arange(2 * self.N + 1)
        return np.cos(np.pi * np.outer(m, self.nodes)) * simpson_weights(self.quad_panels)

    @cached_property
    def _pairs(self):
        k = np.arange(1, self.N + 1)
        diff = np.abs(k[:, None] - k[None, :])
        tot = k[:, None] + k[None, :]
        return diff, tot, np.outer(k, k) * math.pi**2

    def gram(self) -> np.ndarray:
        """Quadrature Gram matrix of the mode derivatives ``sqrt(2) cos(k pi x)``; ideally the identity."""
        c = self.weighted_cos.sum(axis=1)
        diff, tot, _ = self._pairs
        return c[diff] + c[tot]

    def evaluate(self, coeffs, x) -> np.ndarray:
        """Values at ``x`` of the field with coefficient vector ``coeffs`` (ordered (k, i))."""
        k = np.arange(1, self.N + 1)
        modes = math.sqrt(2.0) / (k * math.pi) * np.sin(math.pi * np.outer(np.atleast_1d(x), k))
        return modes @ np.asarray(coeffs).reshape(self.N, self.n)


def assemble(profile: CurvatureProfile, lam: float, basis: GalerkinBasis) -> np.ndarray:
    """Matrix of ``q_lam`` in the orthonormal sine basis, index order (k, i)."""
    n, N = basis.n, basis.N
    if profile.n_normal != n:
        raise ValueError(f"profile dimension {profile.n_normal} does not match basis dimension {n}")
    if lam == 0.0:
        return np.eye(basis.size)
    s = profile.many(lam * basis.nodes)
    # int S_ij(lam x) cos(m pi x) dx for m = 0 .. 2N
    c = (basis.weighted_cos @ s.reshape(len(basis.nodes), n * n)).reshape(-1, n, n)
    diff, tot, kl = basis._pairs
    k_blocks = (c[diff] - c[tot]) / kl[:, :, None, None]  # sin sin = (cos(diff) - cos(sum)) / 2
    k_mat = k_blocks.transpose(0, 2, 1, 3).reshape(basis.size, basis.size)
    return spectral.as_symmetric(np.eye(basis.size) - lam**2 * k_mat)


def galerkin_index(profile: CurvatureProfile, lam: float, basis: GalerkinBasis, zero_tol: float = ZERO_TOL) -> int:
    return spectral.morse_index(assemble(profile, lam, basis), zero_tol)


def galerkin_path(profile: CurvatureProfile, basis: GalerkinBasis) -> SymMatrixPath:
    return SymMatrixPath(basis.size, lambda lam: assemble(profile, lam, basis))


def crossing_form_closed(profile: CurvatureProfile, lam0: float, sol: JacobiSolution, kernel_tol: float = KERNEL_TOL):
    """Crossing form ``-(1/lam0) |u'(1)|^2`` on each kernel field ``u(x) = J(lam0 x) v``."""
    try:
        fields = kernel_fields(sol, lam0, kernel_tol)
    except NotAConjugateInstant as exc:
        raise NotACrossing(str(exc)) from None
    return [-float(end @ end) / lam0 for _, end in fields]


def _scaled_field(profile, lam0, v, steps):
    """RK4 for ``u'' + lam0^2 S(lam0 x) u = 0``, ``u(0) = 0``, ``u'(0) = lam0 v`` on ``steps + 1`` nodes."""
    h = 1.0 / steps
    s = lam0**2 * profile.many(lam0 * np.linspace(0.0, 1.0, 2 * steps + 1))
    u = np.zeros((steps + 1, len(v)))
    up = np.zeros_like(u)
    a, b = np.zeros(len(v)), lam0 * np.asarray(v, dtype=float)
    up[0] = b
    for i in range(steps):
        s0, sm, s1 = s[2 * i], s[2 * i + 1], s[2 * i + 2]
        k1a, k1b = b, -s0 @ a
        k2a, k2b = b + 0.5 * h * k1b, -sm @ (a + 0.5 * h * k1a)
        k3a, k3b = b + 0.5 * h * k2b, -sm @ (a + 0.5 * h * k2a)
        k4a, k4b = b + h * k3b, -s1 @ (a + h * k3a)
        a = a + (h / 6.0) * (k1a + 2 * k2a + 2 * k3a + k4a)
        b = b + (h / 6.0) * (k1b + 2 * k2b + 2 * k3b + k4b)
        u[i + 1], up[i + 1] = a, b
    return u, up


def index_form_value(profile: CurvatureProfile, lam: float, u, up) -> float:
    """``q_lam(u)`` by Simpson quadrature of sampled ``u``, ``u'`` on a uniform grid of [0, 1]."""
    nodes = len(u)
    if nodes % 2 == 0:
        raise ValueError("Simpson quadrature needs an odd number of nodes")
    w = simpson_weights((nodes - 1) // 2)
    x = np.linspace(0.0, 1.0, nodes)
    s = profile.many(lam * x)
    kinetic = np.einsum("q,qi,qi->", w, up, up)
    potential = lam**2 * np.einsum("q,qi,qij,qj->", w, u, s, u)
    return float(kinetic - potential)


def crossing_form_fd(profile: CurvatureProfile, lam0: float, kernel_vectors, h: float = FD_STEP, steps: int = 4096):
    """Central-difference oracle ``[q_{lam0+h}(u) - q_{lam0-h}(u)] / 2h`` for each kernel field.

    ``u`` is rebuilt independently of the Jacobi solution by integrating the
    rescaled equation from ``u(0) = 0``, ``u'(0) = lam0 v``.
    """
    if not (0.0 < lam0 - h and lam0 + h < 1.0):
        raise ValueError(f"lam0 +/- h must lie in (0, 1); got lam0={lam0}, h={h}")
    out = []
    for v in kernel_vectors:
        u, up = _scaled_field(profile, lam0, v, steps)
        plus = index_form_value(profile, lam0 + h, u, up)
        minus = index_form_value(profile, lam0 - h, u, up)
        out.append((plus - minus) / (2.0 * h))
    return out


@dataclass
class IndexReport:
    mu_galerkin: int
    conjugate_total: int
    crossing_signature_sum: int
    diagnostics: list = field(default_factory=list)

    @property
    def agree(self) -> bool:
        return self.mu_galerkin == self.conjugate_total == -self.crossing_signature_sum

    def to_dict(self):
        return {
            "mu_galerkin": int(self.mu_galerkin),
            "conjugate_total": int(self.conjugate_total),
            "crossing_signature_sum": int(self.crossing_signature_sum),
            "agree": bool(self.agree),
            "crossings": self.diagnostics,
        }


def verify_theorem(
    profile: CurvatureProfile,
    basis: GalerkinBasis | None = None,
    steps: int = JACOBI_STEPS,
    kernel_tol: float = KERNEL_TOL,
    zero_tol: float = ZERO_TOL,
    fd_step: float = FD_STEP,
    oracle_rtol: float = ORACLE_RTOL,
    regularity_tol: float = REGULARITY_TOL,
) -> IndexReport:
    """Compute the three sides of the index theorem for ``profile``.

    * Galerkin Morse index of ``q_1``;
    * total multiplicity of conjugate instants in (0, 1);
    * sum of crossing signatures along ``lam -> q_lam``, each taken as
      ``-dim ker`` once every closed-form crossing-form value is checked
      negative and matched against the finite-difference oracle.
    """
    basis = basis or GalerkinBasis(profile.n_normal)
    sol = solve_jacobi(profile, steps)
    conj = conjugate_points(sol, kernel_tol)
    if not conj.nondegenerate:
        raise DegenerateGeodesic(
            f"t = 1 is conjugate (multiplicity {conj.endpoint_multiplicity}); the index form is degenerate"
        )
    if galerkin_index(profile, 0.0, basis, zero_tol) != 0:
        raise AssertionError("q_0 must be positive definite")
    mu = galerkin_index(profile, 1.0, basis, zero_tol)

    diagnostics = []
    sig_sum = 0
    for t0, mult in conj.points:
        fields = kernel_fields(sol, t0, kernel_tol)
        closed = crossing_form_closed(profile, t0, sol, kernel_tol)
        h = min(fd_step, 0.5 * min(t0, 1.0 - t0))
        fd = crossing_form_fd(profile, t0, [v for v, _ in fields], h)
        rel = [abs(c - f) / max(abs(c), 1e-6) for c, f in zip(closed, fd)]
        diagnostics.append(
            {"lambda0": float(t0), "multiplicity": int(mult), "closed": closed, "fd": fd, "rel_err": rel}
        )
        if len(fields) != mult:
            raise IrregularCrossing(f"kernel dimension {len(fields)} != multiplicity {mult} at {t0:.10f}")
        if any(c >= -regularity_tol for c in closed):
            raise IrregularCrossing(f"crossing form at {t0:.10f} is not negative definite: {closed}")
        if any(r > oracle_rtol for r in rel):
            raise OracleMismatch(f"closed form {closed} vs finite differences {fd} at {t0:.10f}")
        sig_sum -= len(fields)
    return IndexReport(mu, conj.total, sig_sum, diagnostics)


@dataclass
class CrossingReport:
    """Crossings of the Galerkin path ``lam -> q_lam`` next to the conjugate instants."""

    crossings: list  # spectral.Crossing
    conjugate: list  # (t, multiplicity)

    def matched(self, tol: float = 1e-6) -> bool:
        if len(self.crossings) != len(self.conjugate):
            return False
        return all(
            abs(c.lambda0 - t) <= tol and c.kernel_dim == m for c, (t, m) in zip(self.crossings, self.conjugate)
        )

    def to_dict(self):
        return {
            "crossings": [c.to_dict() for c in self.crossings],
            "conjugate_points": [{"t": float(t), "multiplicity": int(m)} for t, m in self.conjugate],
            "matched": self.matched(),
            "signature_sum": int(sum(c.signature for c in self.crossings)),
        }


def crossing_report(
    profile: CurvatureProfile,
    basis: GalerkinBasis | None = None,
    grid_size: int = spectral.GRID_SIZE,
    kernel_tol: float = spectral.KERNEL_TOL,
    regularity_tol: float = REGULARITY_TOL,
    steps: int = JACOBI_STEPS,
    jacobi_tol: float = KERNEL_TOL,
    max_grid_size: int | None = None,
) -> CrossingReport:
    """Galerkin crossings and conjugate instants side by side.

    When two crossings share a scan bracket the grid is doubled, up to
    ``max_grid_size`` (default ``8 * grid_size``).
    """
    basis = basis or GalerkinBasis(profile.n_normal)
    path = galerkin_path(profile, basis)
    max_grid_size = 8 * grid_size if max_grid_size is None else max_grid_size
    while True:
        try:
            crossings = spectral.find_crossings(path, grid_size, kernel_tol, regularity_tol)
            break
        except UnresolvedCluster:
            if 2 * grid_size > max_grid_size:
                raise
            grid_size *= 2
    conj = conjugate_points(solve_jacobi(profile, steps), jacobi_tol)
    return CrossingReport(crossings, conj.points)


def random_smooth_profile(rng: np.random.Generator, n: int, amplitude: float = (3 * math.pi) ** 2) -> CurvatureProfile:
    """``S(x) = Q^T diag(a_i + b_i sin(pi x + phi_i)) Q`` with ``|a_i|, |b_i| <= amplitude``."""
    q = spectral.random_orthogonal(rng, n)
    a = rng.uniform(-amplitude, amplitude, size=n)
    b = rng.uniform(-amplitude, amplitude, size=n)
    phi = rng.uniform(0.0, 2 * math.pi, size=n)

    def fn(xs):
        d = a + b * np.sin(math.pi * np.asarray(xs)[:, None] + phi)
        return (q.T[None, :, :] * d[:, None, :]) @ q

    return CurvatureProfile(n, fn, "random")


@dataclass
class SuiteResult:
    trials: list  # one dict per non-degenerate trial, in draw order
    profiles: list = field(repr=False)
    redraws: int = 0

    @property
    def all_agree(self) -> bool:
        return all(t.get("agree", False) for t in self.trials)

    @property
    def redraw_rate(self) -> float:
        drawn = len(self.trials) + self.redraws
        return self.redraws / drawn if drawn else 0.0

    def to_dict(self):
        return {
            "trials": self.trials,
            "redraws": self.redraws,
            "redraw_rate": self.redraw_rate,
            "all_agree": self.all_agree,
            "agreeing": sum(1 for t in self.trials if t.get("agree", False)),
        }


def random_suite(
    rng: np.random.Generator,
    trials: int,
    modes: int = MODES,
    quad_panels: int = QUAD_PANELS,
    dims=(1, 2, 3),
    max_redraws: int | None = None,
    **verify_kwargs,
) -> SuiteResult:
    """Run :func:`verify_theorem` on ``trials`` random profiles with a non-degenerate endpoint.

    Profiles degenerate at tolerance are redrawn and counted; numerical
    resolution failures are kept as failed trials.
    """
    max_redraws = trials if max_redraws is None else max_redraws
    records, profiles, redraws = [], [], 0
    while len(records) < trials:
        n = int(rng.choice(dims))
        profile = random_smooth_profile(rng, n)
        try:
            rep = verify_theorem(profile, GalerkinBasis(n, modes, quad_panels), **verify_kwargs)
        except DegenerateError:
            redraws += 1
            if redraws > max_redraws:
                raise
            continue
        except ResolutionError as exc:
            records.append({"trial": len(records), "n": n, "agree": False, "error": exc.to_dict()})
            profiles.append(profile)
            continue
        records.append({"trial": len(records), "n": n, **rep.to_dict()})
        profiles.append(profile)
    return SuiteResult(records, profiles, redraws)
