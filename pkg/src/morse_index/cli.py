"""Command line front end: ``morse-index {conjugate,index,crossings,verify}``.

Exit codes: 0 success (for ``verify``: the three counts agree), 1 the
counts disagree, 2 degenerate input, 3 numerical resolution failure,
4 configuration error.
"""

from __future__ import annotations

import argparse
import json
import sys

import numpy as np

from . import indexform, jacobi, report, spectral
from .config import RunConfig, load_spec_file, number
from .errors import ConfigError, MorseIndexError
from .geometry import build_profile, catalog_entry, constant_profile, entry_profile

PRNG = "PCG64"


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise ConfigError(message)


def build_parser():
    common = _Parser(add_help=False)
    src = common.add_argument_group("input (choose one)")
    src.add_argument("--builtin", help="catalog manifold, e.g. sphere-constcurv, halfplane-metric2d")
    src.add_argument("--spec", dest="spec_path", metavar="FILE", help="manifold file (YAML or JSON)")
    src.add_argument("--constant", metavar="EXPR", help="constant profile S = EXPR * I, e.g. '(1.5pi)^2'")
    common.add_argument("--dim", type=int, default=2, help="manifold dimension (profile size is dim - 1)")
    common.add_argument("--length", help="geodesic length, e.g. 2.5pi")
    common.add_argument("--steps", type=int, default=jacobi.JACOBI_STEPS, help="RK4 steps on [0, 1]")
    common.add_argument("--modes", type=int, default=indexform.MODES, help="sine modes per fibre dimension")
    common.add_argument("--panels", type=int, default=indexform.QUAD_PANELS, help="Simpson panels")
    common.add_argument("--grid", type=int, default=spectral.GRID_SIZE, help="lambda scan cells")
    common.add_argument("--tol-kernel", type=float, default=None, help="kernel tolerance")
    common.add_argument("--tol-zero", type=float, default=indexform.ZERO_TOL, help="eigenvalue zero band")
    common.add_argument("--format", choices=("text", "json", "csv"), default="text")
    common.add_argument("--out", help="write the report here instead of standard output")

    parser = _Parser(prog="morse-index", description="Conjugate points, Morse index and crossing forms of geodesics.")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)
    sub.add_parser("conjugate", parents=[common], help="conjugate instants and multiplicities")
    sub.add_parser("index", parents=[common], help="Galerkin Morse index of the index form")
    sub.add_parser("crossings", parents=[common], help="crossings of the scaled index form path")
    verify = sub.add_parser("verify", parents=[common], help="check index = conjugate total = -signature sum")
    verify.add_argument("--random", type=int, help="run this many random-profile trials instead")
    verify.add_argument("--seed", type=int, default=0, help="64-bit seed for the random trials")
    return parser


def _config(ns) -> RunConfig:
    cfg = RunConfig(**{k: v for k, v in vars(ns).items() if k in RunConfig.__dataclass_fields__})
    chosen = [k for k in ("builtin", "spec_path", "constant") if getattr(cfg, k) is not None]
    if cfg.random is not None:
        if chosen:
            raise ConfigError("--random draws its own profiles; drop the input flags")
        if cfg.random < 1:
            raise ConfigError("--random needs a positive trial count")
        if not 0 <= cfg.seed < 2**64:
            raise ConfigError("--seed must be an unsigned 64-bit integer")
    elif len(chosen) != 1:
        raise ConfigError("give exactly one of --builtin, --spec, --constant")
    if cfg.steps < 100 or cfg.modes < 1 or cfg.panels < 1 or cfg.grid < 2 or cfg.dim < 2:
        raise ConfigError("numeric knobs out of range")
    return cfg


def _profile(cfg):
    length = number(cfg.length, "--length") if cfg.length is not None else None
    if cfg.builtin is not None:
        entry = catalog_entry(cfg.builtin, cfg.dim)
        profile, _ = entry_profile(entry, length)
        used = entry.default_length if length is None else length
        return profile, f"{cfg.builtin} (length {used:.10g})"
    if cfg.spec_path is not None:
        loaded = load_spec_file(cfg.spec_path)
        length = loaded.length if length is None else length
        profile, _ = build_profile(loaded.spec, length, loaded.start, loaded.direction, loaded.steps)
        return profile, cfg.spec_path
    value = number(cfg.constant, "--constant")
    return constant_profile(value * np.eye(cfg.dim - 1)), f"constant S = {value:.10g} I"


def _kernel_tol(cfg, default):
    return default if cfg.tol_kernel is None else cfg.tol_kernel


def run_conjugate(cfg):
    profile, source = _profile(cfg)
    sol = jacobi.solve_jacobi(profile, cfg.steps)
    tol = _kernel_tol(cfg, jacobi.KERNEL_TOL)
    rep = jacobi.conjugate_points(sol, tol)
    result = rep.to_dict()
    result["kernel_fields"] = [
        [{"v": v.tolist(), "u_prime_end": w.tolist()} for v, w in jacobi.kernel_fields(sol, t, tol)]
        for t, _ in rep.points
    ]
    result["wronskian_max"] = float(np.max(np.abs(sol.wronskian())))
    result["sturm_ceiling"] = jacobi.sturm_ceiling(profile)
    det = np.linalg.det(sol.J)
    smin = np.linalg.svd(sol.J, compute_uv=False)[:, -1]
    rows = [(float(t), float(d), float(s)) for t, d, s in zip(sol.grid, det, smin)]
    return 0, result, report.text_conjugate(source, result), (["t", "det_J", "sigma_min_J"], rows)


def run_index(cfg):
    profile, source = _profile(cfg)
    basis = indexform.GalerkinBasis(profile.n_normal, cfg.modes, cfg.panels)
    g = indexform.assemble(profile, 1.0, basis)
    mu = spectral.morse_index(g, cfg.tol_zero)
    ev = np.linalg.eigvalsh(g)
    result = {"mu": mu, "lowest_eigenvalues": [float(v) for v in ev[:8]], "size": basis.size}
    rows = [(i, float(v)) for i, v in enumerate(ev)]
    return 0, result, report.text_index(source, result), (["k", "eigenvalue"], rows)


def run_crossings(cfg):
    profile, source = _profile(cfg)
    basis = indexform.GalerkinBasis(profile.n_normal, cfg.modes, cfg.panels)
    rep = indexform.crossing_report(
        profile,
        basis,
        cfg.grid,
        kernel_tol=_kernel_tol(cfg, spectral.KERNEL_TOL),
        steps=cfg.steps,
        jacobi_tol=_kernel_tol(cfg, jacobi.KERNEL_TOL),
    )
    result = rep.to_dict()
    rows = []
    header = None
    if cfg.format == "csv":
        path = indexform.galerkin_path(profile, basis)
        keep = min(6, basis.size)
        header = ["lambda"] + [f"eig{i}" for i in range(keep)]
        for lam in np.linspace(0.0, 1.0, cfg.grid + 1):
            rows.append([float(lam)] + [float(v) for v in np.linalg.eigvalsh(path(lam))[:keep]])
    return 0, result, report.text_crossings(source, result), (header, rows)


def run_verify(cfg):
    tol = _kernel_tol(cfg, jacobi.KERNEL_TOL)
    if cfg.random is not None:
        rng = np.random.Generator(np.random.PCG64(cfg.seed))
        suite = indexform.random_suite(
            rng, cfg.random, cfg.modes, cfg.panels, steps=cfg.steps, kernel_tol=tol, zero_tol=cfg.tol_zero
        )
        result = {"prng": PRNG, "seed": cfg.seed, **suite.to_dict()}
        rows = [
            (t["trial"], t["n"], t.get("mu_galerkin", ""), t.get("conjugate_total", ""),
             t.get("crossing_signature_sum", ""), t["agree"])
            for t in result["trials"]
        ]
        header = ["trial", "n", "mu_galerkin", "conjugate_total", "crossing_signature_sum", "agree"]
        return (0 if suite.all_agree else 1), result, report.text_suite(result), (header, rows)
    profile, source = _profile(cfg)
    basis = indexform.GalerkinBasis(profile.n_normal, cfg.modes, cfg.panels)
    rep = indexform.verify_theorem(profile, basis, cfg.steps, kernel_tol=tol, zero_tol=cfg.tol_zero)
    result = rep.to_dict()
    rows = [
        (d["lambda0"], d["multiplicity"], i, c, f, r)
        for d in result["crossings"]
        for i, (c, f, r) in enumerate(zip(d["closed"], d["fd"], d["rel_err"]))
    ]
    header = ["lambda0", "multiplicity", "field", "closed", "fd", "rel_err"]
    return (0 if rep.agree else 1), result, report.text_verify(source, result), (header, rows)


COMMANDS = {"conjugate": run_conjugate, "index": run_index, "crossings": run_crossings, "verify": run_verify}


def _emit(text, out):
    if out is None:
        sys.stdout.write(text)
    else:
        with open(out, "w") as fh:
            fh.write(text)


def main(argv=None) -> int:
    cfg = None
    command = None
    try:
        ns = build_parser().parse_args(argv)
        command = ns.command
        cfg = _config(ns)
        code, result, text, (header, rows) = COMMANDS[command](cfg)
    except MorseIndexError as exc:
        err = exc.to_dict()
        sys.stderr.write(json.dumps(err, sort_keys=True) + "\n")
        if cfg is not None and cfg.format == "json":
            _emit(report.dump_json(report.envelope(command, cfg, error=err)), cfg.out)
        return exc.exit_code
    if cfg.format == "json":
        _emit(report.dump_json(report.envelope(command, cfg, result)), cfg.out)
    elif cfg.format == "csv":
        _emit(report.dump_csv(header, rows), cfg.out)
    else:
        _emit(text, cfg.out)
    return code


if __name__ == "__main__":
    sys.exit(main())
