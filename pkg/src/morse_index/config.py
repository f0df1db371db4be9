"""Run configuration and the declarative manifold file format.

A manifold file is YAML (JSON is accepted as a subset).  Keys by kind::

    kind: constant_curvature        kind: metric2d              kind: direct_profile
    dim: 3                          metric:                     profile:
    kappa: 1                          g11: "1/y^2"                - ["4 + sin(pi*x)", "0"]
    length: 2.5pi                     g12: "0"                    - ["0", "-1"]
                                      g22: "1/y^2"
                                    derivatives: exact   # or fd
                                    fd_step: 1e-5
                                    fd_step2: 1e-4
                                    start: [0, 1]
                                    direction: [0, 1]
                                    length: 1.0
                                    steps: 2000

Metric entries are expressions in ``x`` and ``y``; profile entries are
expressions in ``x`` (see :mod:`morse_index.expr`).  Numbers may also be
given as expressions (``2.5pi``).  Unknown keys are rejected.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from pathlib import Path
from typing import Optional

import numpy as np
import yaml

from . import expr as _expr
from .errors import ConfigError
from .geometry import (
    CONSTANT_CURVATURE,
    DIRECT_PROFILE,
    GEODESIC_STEPS,
    METRIC2D,
    CurvatureProfile,
    ManifoldSpec,
    Metric2D,
)

_KEYS = {
    CONSTANT_CURVATURE: {"kind", "dim", "kappa", "length"},
    METRIC2D: {"kind", "metric", "derivatives", "fd_step", "fd_step2", "start", "direction", "length", "steps"},
    DIRECT_PROFILE: {"kind", "profile"},
}


@dataclass
class LoadedSpec:
    spec: ManifoldSpec
    length: Optional[float] = None
    start: Optional[tuple] = None
    direction: Optional[tuple] = None
    steps: int = GEODESIC_STEPS


@dataclass
class RunConfig:
    command: str
    builtin: Optional[str] = None
    spec_path: Optional[str] = None
    constant: Optional[str] = None
    dim: int = 2
    length: Optional[str] = None
    steps: int = 2000
    modes: int = 128
    panels: int = 4096
    grid: int = 512
    tol_kernel: Optional[float] = None
    tol_zero: float = 1e-9
    format: str = "text"
    out: Optional[str] = None
    random: Optional[int] = None
    seed: int = 0

    def input_dict(self):
        """The parts of the configuration that determine the numbers in a report."""
        return {
            "builtin": self.builtin,
            "spec": self.spec_path,
            "constant": self.constant,
            "dim": self.dim,
            "length": self.length,
            "steps": self.steps,
            "modes": self.modes,
            "panels": self.panels,
            "grid": self.grid,
            "tol_kernel": self.tol_kernel,
            "tol_zero": self.tol_zero,
            "random": self.random,
            "seed": self.seed if self.random is not None else None,
        }


def number(value, what="value") -> float:
    if isinstance(value, bool):
        raise ConfigError(f"{what}: expected a number, got {value!r}")
    if isinstance(value, (int, float)):
        return float(value)
    try:
        out = _expr.evaluate_constant(value)
    except ConfigError as exc:
        raise ConfigError(f"{what}: {exc}") from None
    if not math.isfinite(out):
        raise ConfigError(f"{what}: {value!r} is not finite")
    return out


def _vector(value, what, size):
    if not isinstance(value, (list, tuple)) or len(value) != size:
        raise ConfigError(f"{what}: expected a list of {size} numbers")
    return tuple(number(v, what) for v in value)


def _profile(rows) -> CurvatureProfile:
    if not isinstance(rows, list) or not rows or not all(isinstance(r, list) and len(r) == len(rows) for r in rows):
        raise ConfigError("profile: expected a square list of lists of expressions")
    n = len(rows)
    fns = [[_expr.compile_expr(_expr.parse(e, ("x",)), ("x",)) for e in row] for row in rows]
    for i in range(n):
        for j in range(i):
            if str(rows[i][j]).replace(" ", "") != str(rows[j][i]).replace(" ", ""):
                raise ConfigError(f"profile: entries ({i},{j}) and ({j},{i}) differ; S must be symmetric")

    def fn(xs):
        out = np.empty((len(xs), n, n))
        for i in range(n):
            for j in range(n):
                out[:, i, j] = fns[i][j](xs)
        return out

    return CurvatureProfile(n, fn, "direct")


def parse_spec(data: dict) -> LoadedSpec:
    if not isinstance(data, dict):
        raise ConfigError("manifold file must contain a mapping")
    kind = data.get("kind")
    if kind not in _KEYS:
        raise ConfigError(f"kind: expected one of {sorted(_KEYS)}, got {kind!r}")
    unknown = set(data) - _KEYS[kind]
    if unknown:
        raise ConfigError(f"unknown key(s) for {kind}: {', '.join(sorted(unknown))}")
    length = number(data["length"], "length") if "length" in data else None

    if kind == CONSTANT_CURVATURE:
        dim = data.get("dim", 2)
        if not isinstance(dim, int) or isinstance(dim, bool) or dim < 2:
            raise ConfigError("dim: expected an integer >= 2")
        return LoadedSpec(ManifoldSpec(kind, dim, number(data.get("kappa", 0.0), "kappa")), length)

    if kind == DIRECT_PROFILE:
        if "profile" not in data:
            raise ConfigError("direct_profile needs a profile")
        prof = _profile(data["profile"])
        return LoadedSpec(ManifoldSpec(kind, prof.n_normal + 1, profile=prof))

    metric = data.get("metric")
    if not isinstance(metric, dict) or set(metric) != {"g11", "g12", "g22"}:
        raise ConfigError("metric: expected exactly the keys g11, g12, g22")
    for key in ("start", "direction"):
        if key not in data:
            raise ConfigError(f"metric2d needs {key}")
    steps = data.get("steps", GEODESIC_STEPS)
    if not isinstance(steps, int) or isinstance(steps, bool) or steps < 10:
        raise ConfigError("steps: expected an integer >= 10")
    m = Metric2D(
        *(str(metric[k]) for k in ("g11", "g12", "g22")),
        derivatives=data.get("derivatives", "exact"),
        fd_step=number(data.get("fd_step", 1e-5), "fd_step"),
        fd_step2=number(data.get("fd_step2", 1e-4), "fd_step2"),
    )
    return LoadedSpec(
        ManifoldSpec(kind, 2, metric=m),
        length,
        _vector(data["start"], "start", 2),
        _vector(data["direction"], "direction", 2),
        steps,
    )


def load_spec_file(path) -> LoadedSpec:
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read {path}: {exc.strerror}") from None
    try:
        data = yaml.safe_load(text)
    except yaml.YAMLError as exc:
        raise ConfigError(f"{path}: not valid YAML/JSON: {exc}") from None
    return parse_spec(data)
