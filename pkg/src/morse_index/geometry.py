"""Curvature profiles along geodesics.

The analytic core only ever sees ``S(x)``, the matrix of
``g(R(gamma', e_i) gamma', e_j)`` in a parallel orthonormal frame normal to
the geodesic, for ``x`` in [0, 1].  This module produces it from

* a space form of constant curvature ``kappa`` (closed form ``c^2 kappa I``),
* a coordinate metric on a surface (numerical geodesic, parallel frame and
  Gaussian curvature by the Brioschi formula), or
* a profile handed over directly.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from typing import Callable, Optional

import numpy as np
from scipy.interpolate import CubicHermiteSpline

from . import expr as _expr
from .errors import ConfigError, FrameDegenerate, MetricDegenerate

CONSTANT_CURVATURE = "constant_curvature"
METRIC2D = "metric2d"
DIRECT_PROFILE = "direct_profile"
KINDS = (CONSTANT_CURVATURE, METRIC2D, DIRECT_PROFILE)

GEODESIC_STEPS = 2000
REORTHO_EVERY = 32


@dataclass(frozen=True)
class CurvatureProfile:
    """Symmetric matrix path ``x -> S(x)`` on [0, 1].

    ``fn`` is vectorised: it maps an array of shape (M,) to (M, n, n).
    """

    n_normal: int
    fn: Callable[[np.ndarray], np.ndarray]
    label: str = ""

    def many(self, xs) -> np.ndarray:
        xs = np.atleast_1d(np.asarray(xs, dtype=float))
        s = np.asarray(self.fn(xs), dtype=float).reshape(xs.shape[0], self.n_normal, self.n_normal)
        return 0.5 * (s + np.swapaxes(s, 1, 2))

    def __call__(self, x: float) -> np.ndarray:
        return self.many(np.array([float(x)]))[0]

    def sup_norm(self, samples: int = 1025) -> float:
        return float(np.max(np.linalg.norm(self.many(np.linspace(0.0, 1.0, samples)), ord=2, axis=(1, 2))))


def constant_profile(matrix, label="constant") -> CurvatureProfile:
    m = np.atleast_2d(np.asarray(matrix, dtype=float))
    m = 0.5 * (m + m.T)
    n = m.shape[0]
    return CurvatureProfile(n, lambda xs: np.broadcast_to(m, (xs.shape[0], n, n)).copy(), label)


def rescale_profile(profile: CurvatureProfile, lam: float) -> CurvatureProfile:
    """The profile ``x -> lam^2 S(lam x)`` of the scaled index form."""
    lam = float(lam)
    if not 0.0 <= lam <= 1.0:
        raise ValueError(f"lambda must lie in [0, 1], got {lam}")
    return CurvatureProfile(
        profile.n_normal,
        lambda xs: lam**2 * profile.many(lam * np.asarray(xs, dtype=float)),
        f"{profile.label}@{lam:g}",
    )


class Metric2D:
    """Riemannian metric ``g11 dx^2 + 2 g12 dx dy + g22 dy^2`` on a coordinate patch.

    Components are expression strings (see :mod:`morse_index.expr`), sympy
    expressions, or plain callables ``f(x, y)``.  With ``derivatives="exact"``
    partials are differentiated symbolically; ``"fd"`` uses central
    differences with step ``fd_step`` for first partials and ``fd_step2``
    for second partials.  Callables only support ``"fd"``.
    """

    def __init__(self, g11, g12, g22, derivatives="exact", fd_step=1e-5, fd_step2=1e-4):
        if derivatives not in ("exact", "fd"):
            raise ConfigError(f"derivative mode must be 'exact' or 'fd', got {derivatives!r}")
        comps = (g11, g12, g22)
        symbolic = all(not callable(c) for c in comps)
        if derivatives == "exact" and not symbolic:
            raise ConfigError("exact derivatives need expression components, not callables")
        self.derivatives = derivatives
        self.fd_step = float(fd_step)
        self.fd_step2 = float(fd_step2)
        self.source = tuple(c if isinstance(c, str) else None for c in comps)
        if symbolic:
            exprs = [_expr.parse(c) if not hasattr(c, "free_symbols") else c for c in comps]
            self._f = [_expr.compile_expr(e) for e in exprs]
            if derivatives == "exact":
                d = _expr.derivative
                self._dx = [_expr.compile_expr(d(e, "x")) for e in exprs]
                self._dy = [_expr.compile_expr(d(e, "y")) for e in exprs]
                e11, e12, e22 = exprs
                self._e_yy = _expr.compile_expr(d(d(e11, "y"), "y"))
                self._f_xy = _expr.compile_expr(d(d(e12, "x"), "y"))
                self._g_xx = _expr.compile_expr(d(d(e22, "x"), "x"))
        else:
            self._f = [np.vectorize(c, otypes=[float]) for c in comps]

    def components(self, x, y):
        x = np.asarray(x, dtype=float)
        y = np.asarray(y, dtype=float)
        e, f, g = (c(x, y) for c in self._f)
        bad = ~((e > 0) & (e * g - f * f > 0))
        if np.any(bad):
            i = np.flatnonzero(np.atleast_1d(bad))[0]
            px, py = np.broadcast_to(x, bad.shape).ravel()[i], np.broadcast_to(y, bad.shape).ravel()[i]
            raise MetricDegenerate(f"metric is not positive definite at ({px:.6g}, {py:.6g})")
        return e, f, g

    def matrix(self, p) -> np.ndarray:
        e, f, g = self.components(p[0], p[1])
        return np.array([[e, f], [f, g]], dtype=float)

    def first_partials(self, x, y):
        """``(d/dx (E, F, G), d/dy (E, F, G))``."""
        if self.derivatives == "exact":
            return [c(x, y) for c in self._dx], [c(x, y) for c in self._dy]
        h = self.fd_step
        return (
            [(c(x + h, y) - c(x - h, y)) / (2 * h) for c in self._f],
            [(c(x, y + h) - c(x, y - h)) / (2 * h) for c in self._f],
        )

    def second_partials(self, x, y):
        """``(E_yy, F_xy, G_xx)``, the second derivatives the Brioschi formula needs."""
        if self.derivatives == "exact":
            return self._e_yy(x, y), self._f_xy(x, y), self._g_xx(x, y)
        h = self.fd_step2
        e, f, g = self._f
        e_yy = (e(x, y + h) - 2 * e(x, y) + e(x, y - h)) / h**2
        g_xx = (g(x + h, y) - 2 * g(x, y) + g(x - h, y)) / h**2
        f_xy = (f(x + h, y + h) - f(x + h, y - h) - f(x - h, y + h) + f(x - h, y - h)) / (4 * h**2)
        return e_yy, f_xy, g_xx

    def christoffel(self, p) -> np.ndarray:
        """``Gamma[k, i, j]`` at the point ``p``."""
        g = self.matrix(p)
        dx, dy = self.first_partials(p[0], p[1])
        dg = np.empty((2, 2, 2))  # dg[l, i, j] = d_l g_ij
        for l, d in enumerate((dx, dy)):
            dg[l] = [[d[0], d[1]], [d[1], d[2]]]
        # first kind: Gamma_lij = (d_i g_jl + d_j g_il - d_l g_ij) / 2
        first = 0.5 * (np.einsum("ijl->lij", dg) + np.einsum("jil->lij", dg) - dg)
        return np.einsum("kl,lij->kij", np.linalg.inv(g), first)

    def gaussian_curvature(self, x, y):
        """Gaussian curvature by the Brioschi formula, vectorised over points."""
        e, f, g = self.components(x, y)
        (e_x, f_x, g_x), (e_y, f_y, g_y) = self.first_partials(x, y)
        e_yy, f_xy, g_xx = self.second_partials(x, y)
        a = [
            [-0.5 * e_yy + f_xy - 0.5 * g_xx, 0.5 * e_x, f_x - 0.5 * e_y],
            [f_y - 0.5 * g_x, e, f],
            [0.5 * g_y, f, g],
        ]
        b = [[0.0, 0.5 * e_y, 0.5 * g_x], [0.5 * e_y, e, f], [0.5 * g_x, f, g]]
        det_a, det_b = _det3(a), _det3(b)
        return (det_a - det_b) / (e * g - f * f) ** 2


def _det3(rows):
    shape = np.broadcast(*[v for row in rows for v in row]).shape
    m = np.empty(shape + (3, 3))
    for i, row in enumerate(rows):
        for j, v in enumerate(row):
            m[..., i, j] = v
    return np.linalg.det(m)


@dataclass(frozen=True)
class ManifoldSpec:
    kind: str
    dim: int = 2
    kappa: float = 0.0
    metric: Optional[Metric2D] = None
    profile: Optional[CurvatureProfile] = None

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ConfigError(f"unknown manifold kind {self.kind!r}; expected one of {KINDS}")
        if self.kind != DIRECT_PROFILE and self.dim < 2:
            raise ConfigError(f"manifold dimension must be at least 2, got {self.dim}")
        if self.kind == METRIC2D and (self.metric is None or self.dim != 2):
            raise ConfigError("metric2d needs a Metric2D and dim == 2")
        if self.kind == DIRECT_PROFILE and self.profile is None:
            raise ConfigError("direct_profile needs a profile")


@dataclass
class GeodesicRecord:
    grid: np.ndarray
    position: Optional[np.ndarray]  # (steps + 1, dim)
    velocity: Optional[np.ndarray]
    speed: float
    frame: Optional[np.ndarray] = None  # (steps + 1, dim - 1, dim), rows are normal vectors

    @classmethod
    def with_speed(cls, speed: float) -> "GeodesicRecord":
        """Record for a model-space geodesic, where only the speed matters."""
        return cls(np.array([0.0, 1.0]), None, None, float(speed))


def _g_dot(g, u, v):
    return float(u @ g @ v)


def _orthonormal_normals(g, tangent, vectors):
    """g-Gram-Schmidt of ``vectors`` against the unit ``tangent``; drops near-zero remainders."""
    basis = [tangent]
    for w in vectors:
        w = np.array(w, dtype=float)
        for b in basis:
            w = w - _g_dot(g, w, b) * b
        norm = math.sqrt(max(_g_dot(g, w, w), 0.0))
        if norm < 1e-12:
            continue
        basis.append(w / norm)
    return basis[1:]


def _integrate(metric: Metric2D, x0, v0, steps, frame0=None):
    """Fixed-step RK4 for the geodesic and, optionally, the transport of ``frame0``."""
    dim = len(x0)
    nf = 0 if frame0 is None else len(frame0)
    h = 1.0 / steps

    def rhs(state):
        x, v = state[:dim], state[dim : 2 * dim]
        gam = metric.christoffel(x)
        out = np.empty_like(state)
        out[:dim] = v
        out[dim : 2 * dim] = -np.einsum("kij,i,j->k", gam, v, v)
        if nf:
            e = state[2 * dim :].reshape(nf, dim)
            out[2 * dim :] = -np.einsum("kij,i,aj->ak", gam, v, e).ravel()
        return out

    state = np.concatenate([x0, v0] + ([np.asarray(frame0, dtype=float).ravel()] if nf else []))
    states = np.empty((steps + 1, state.size))
    states[0] = state
    for i in range(steps):
        k1 = rhs(state)
        k2 = rhs(state + 0.5 * h * k1)
        k3 = rhs(state + 0.5 * h * k2)
        k4 = rhs(state + h * k3)
        state = state + (h / 6.0) * (k1 + 2 * k2 + 2 * k3 + k4)
        if nf and (i + 1) % REORTHO_EVERY == 0:
            x, v = state[:dim], state[dim : 2 * dim]
            g = metric.matrix(x)
            t = v / math.sqrt(_g_dot(g, v, v))
            e = _orthonormal_normals(g, t, state[2 * dim :].reshape(nf, dim))
            if len(e) != nf:
                raise FrameDegenerate(f"transported frame collapsed at x={(i + 1) * h:.6f}")
            state[2 * dim :] = np.ravel(e)
        states[i + 1] = state
    return states


def shoot_geodesic(spec: ManifoldSpec, start, direction, steps: int = GEODESIC_STEPS) -> GeodesicRecord:
    """Integrate the geodesic with initial point ``start`` and velocity ``direction`` over [0, 1]."""
    if spec.kind != METRIC2D:
        raise ConfigError("shoot_geodesic needs a metric2d manifold")
    x0 = np.asarray(start, dtype=float)
    v0 = np.asarray(direction, dtype=float)
    if not np.any(v0):
        raise ConfigError("initial direction must be nonzero")
    speed = math.sqrt(_g_dot(spec.metric.matrix(x0), v0, v0))
    states = _integrate(spec.metric, x0, v0, steps)
    return GeodesicRecord(np.linspace(0.0, 1.0, steps + 1), states[:, :2], states[:, 2:4], speed)


def initial_frame(metric: Metric2D, x0, v0):
    g = metric.matrix(x0)
    t = v0 / math.sqrt(_g_dot(g, v0, v0))
    dim = len(x0)
    normals = _orthonormal_normals(g, t, np.eye(dim))
    if len(normals) != dim - 1:
        raise FrameDegenerate("could not complete the tangent to an orthonormal basis")
    return np.array(normals)


def parallel_frame(spec: ManifoldSpec, geo: GeodesicRecord) -> GeodesicRecord:
    """Attach a parallel g-orthonormal frame normal to the geodesic.

    The frame at ``x = 0`` comes from Gram-Schmidt of the coordinate axes,
    in order, against the unit tangent; axes with no component left are
    skipped.  It is then transported together with the geodesic, using the
    same RK4 steps, and re-orthonormalised every 32 steps.
    """
    if geo.speed <= 0:
        raise FrameDegenerate("geodesic has zero speed")
    steps = len(geo.grid) - 1
    x0, v0 = geo.position[0], geo.velocity[0]
    frame0 = initial_frame(spec.metric, x0, v0)
    states = _integrate(spec.metric, x0, v0, steps, frame0)
    dim = len(x0)
    frame = states[:, 2 * dim :].reshape(steps + 1, dim - 1, dim)
    return replace(geo, position=states[:, :dim], velocity=states[:, dim : 2 * dim], frame=frame)


def frame_gram(spec: ManifoldSpec, geo: GeodesicRecord) -> np.ndarray:
    """Gram matrices of ``(gamma'/c, e_1, ..., e_{n-1})`` at every grid point."""
    out = []
    for x, v, e in zip(geo.position, geo.velocity, geo.frame):
        g = spec.metric.matrix(x)
        basis = np.vstack([v / geo.speed, e])
        out.append(basis @ g @ basis.T)
    return np.array(out)


def curvature_profile(spec: ManifoldSpec, geo: Optional[GeodesicRecord] = None) -> CurvatureProfile:
    if spec.kind == DIRECT_PROFILE:
        return spec.profile
    if geo is None:
        raise ConfigError(f"{spec.kind} needs a geodesic record")
    c2 = geo.speed**2
    if spec.kind == CONSTANT_CURVATURE:
        return constant_profile(c2 * spec.kappa * np.eye(spec.dim - 1), f"kappa={spec.kappa:g}")
    spline = CubicHermiteSpline(geo.grid, geo.position, geo.velocity, axis=0)
    metric = spec.metric

    def fn(xs):
        p = spline(np.clip(xs, 0.0, 1.0))
        k = metric.gaussian_curvature(p[:, 0], p[:, 1])
        return (c2 * k).reshape(-1, 1, 1)

    return CurvatureProfile(1, fn, "metric2d")


@dataclass(frozen=True)
class CatalogEntry:
    name: str
    spec: ManifoldSpec
    start: Optional[tuple] = None
    direction: Optional[tuple] = None  # unit-speed initial velocity
    default_length: float = 1.0
    notes: str = field(default="", compare=False)


def builtin_catalog(dim: int = 2) -> list[CatalogEntry]:
    """Reference manifolds; ``dim`` applies to the constant-curvature entries."""
    return [
        CatalogEntry("flat", ManifoldSpec(CONSTANT_CURVATURE, dim, 0.0), notes="Euclidean space"),
        CatalogEntry(
            "sphere-constcurv", ManifoldSpec(CONSTANT_CURVATURE, dim, 1.0), default_length=2.5 * math.pi,
            notes="unit round sphere",
        ),
        CatalogEntry("hyperbolic-constcurv", ManifoldSpec(CONSTANT_CURVATURE, dim, -1.0), notes="hyperbolic space"),
        CatalogEntry(
            "halfplane-metric2d",
            ManifoldSpec(METRIC2D, 2, metric=Metric2D("1/y^2", "0", "1/y^2")),
            start=(0.0, 1.0),
            direction=(0.0, 1.0),
            notes="Poincare half-plane, vertical ray",
        ),
        CatalogEntry(
            "sphere-metric2d",
            ManifoldSpec(METRIC2D, 2, metric=Metric2D("1", "0", "sin(x)^2")),
            start=(math.pi / 2, 0.0),
            direction=(0.0, 1.0),
            default_length=2.5 * math.pi,
            notes="unit sphere in (polar, azimuth) coordinates, equator",
        ),
    ]


def catalog_entry(name: str, dim: int = 2) -> CatalogEntry:
    for entry in builtin_catalog(dim):
        if entry.name == name:
            return entry
    names = ", ".join(e.name for e in builtin_catalog())
    raise ConfigError(f"unknown builtin {name!r}; available: {names}")


def build_profile(spec: ManifoldSpec, length=None, start=None, direction=None, steps=GEODESIC_STEPS):
    """Run the geometry pipeline; returns ``(profile, geodesic record or None)``.

    For metric inputs the initial velocity is ``direction`` rescaled to
    speed ``length`` when a length is given.
    """
    if spec.kind == DIRECT_PROFILE:
        return spec.profile, None
    if spec.kind == CONSTANT_CURVATURE:
        geo = GeodesicRecord.with_speed(1.0 if length is None else length)
        return curvature_profile(spec, geo), geo
    if start is None or direction is None:
        raise ConfigError("metric2d needs start and direction")
    v = np.asarray(direction, dtype=float)
    if length is not None:
        speed = math.sqrt(_g_dot(spec.metric.matrix(np.asarray(start, dtype=float)), v, v))
        if speed == 0:
            raise ConfigError("initial direction must be nonzero")
        v = v * (float(length) / speed)
    geo = parallel_frame(spec, shoot_geodesic(spec, start, v, steps))
    return curvature_profile(spec, geo), geo


def entry_profile(entry: CatalogEntry, length=None, steps=GEODESIC_STEPS):
    length = entry.default_length if length is None else length
    return build_profile(entry.spec, length, entry.start, entry.direction, steps)
