"""Command-line front end: config parsing, run orchestration, persistence.

Verbs: groundstate, spectrum, laplacian, reduce, study.  Outputs are FNSF
fields, JSON diagnostics and RFC-4180 CSV tables; every output embeds the
resolved configuration.  Exit codes: 0 success, 2 invalid config, 3 solver
non-convergence, 4 admissibility violation.
"""

from __future__ import annotations

import argparse
import concurrent.futures
import csv
import json
import sys
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import reduction
from .errors import AdmissibilityError, ConfigError, ContractionError, ConvergenceError
from .fracops import frac_laplacian, l2_norm
from .grid import GridSpec, build_grid, read_fnsf, write_fnsf
from .groundstate import (
    GroundState,
    admissible_range,
    compute_ground_state,
    ground_state_from_profile,
)
from .linearized import extremal_eigen, limit_operator, orthonormal_kernel_fields, spectral_gap
from .potential import PotentialSpec, make_potential, normalize_at_critical_point

__all__ = ["RunConfig", "parse_and_validate", "run_command", "main"]

VERBS = ("groundstate", "spectrum", "laplacian", "reduce", "study")

_SOLVER_DEFAULTS = {
    "tol_ground": 1e-10,
    "tol_fixed": 1e-9,
    "tol_root": 1e-8,
    "max_iter": 2000,
    "nu": None,
    "seed": 0,
}


@dataclass(frozen=True)
class RunConfig:
    """Validated configuration with the resolved raw dict kept for provenance."""

    grid: GridSpec
    s: float
    alpha: float
    potential: PotentialSpec
    solver: dict
    eps_list: tuple[float, ...]
    z_init: tuple[float, ...]
    output_directory: Path
    output_formats: tuple[str, ...]
    resolved: dict = field(repr=False)


def _resolve(raw: dict) -> dict:
    out = {
        "grid": dict(raw.get("grid", {})),
        "model": dict(raw.get("model", {})),
        "potential": dict(raw.get("potential", {})),
        "solver": {**_SOLVER_DEFAULTS, **raw.get("solver", {})},
        "study": dict(raw.get("study", {})),
        "output": {"directory": "out", "formats": ["fnsf", "json", "csv"], **raw.get("output", {})},
    }
    out["potential"].setdefault("offset", 0.0)
    out["study"].setdefault("eps_list", [0.2, 0.14, 0.1, 0.07])
    out["study"].setdefault("z_init", out["potential"].get("z0"))
    return out


def parse_and_validate(path, overrides: dict | None = None, verb: str | None = None) -> RunConfig:
    """Load a JSON config, apply flag overrides, and validate every field.

    Raises :class:`ConfigError` carrying one message per violation.
    """
    path = Path(path)
    if not path.exists():
        raise ConfigError(f"config file not found: {path}", [f"{path}: no such file"])
    try:
        raw = json.loads(path.read_text())
    except json.JSONDecodeError as exc:
        raise ConfigError(f"config is not valid JSON: {exc}", [str(exc)]) from exc
    cfg = _resolve(raw)
    for key, value in (overrides or {}).items():
        section, name = key.split(".", 1)
        cfg[section][name] = value

    violations: list[str] = []

    def need(section, name, kinds, predicate=None, message=""):
        value = cfg[section].get(name)
        if value is None or not isinstance(value, kinds) or (predicate and not predicate(value)):
            violations.append(f"{section}.{name}: {message} (got {value!r})")
            return None
        return value

    n = need("grid", "n", int, lambda v: v in (1, 2, 3), "must be 1, 2 or 3")
    npts = need("grid", "N", int, lambda v: v >= 8 and (v & (v - 1)) == 0, "must be a power of two >= 8")
    half = need("grid", "L", (int, float), lambda v: v > 0, "must be positive")
    s = need("model", "s", (int, float), lambda v: 0 < v < 1, "must lie in (0, 1)")
    alpha = need("model", "alpha", (int, float), lambda v: v > 0, "must be positive")

    grid = None
    if None not in (n, npts, half):
        grid = build_grid(n, float(half), npts)

    rng = None
    if None not in (n, s):
        rng = admissible_range(n, float(s))
        if alpha is not None and not (0 < alpha < rng.alpha_max):
            violations.append(
                f"model.alpha: must lie in (0, {rng.alpha_max}) for n={n}, s={s} (got {alpha})"
            )
    if verb in ("reduce", "study") and rng is not None:
        if not rng.theorem_regime:
            violations.append(f"model.s: must exceed max(1/2, n/4) = {rng.s_min} for {verb} (got {s})")
        if alpha is not None and alpha < 1:
            violations.append(f"model.alpha: must be >= 1 for {verb} (got {alpha})")

    spec = None
    pot = cfg["potential"]
    try:
        spec = make_potential(
            pot.get("kind"),
            pot.get("centers", ()),
            pot.get("depths", ()),
            pot.get("widths", ()),
            pot.get("offset", 0.0),
        )
        if n is not None and spec.dim != n:
            violations.append(f"potential.centers: dimension {spec.dim} does not match grid.n={n}")
            spec = None
    except ConfigError as exc:
        violations.append(f"potential: {exc}")
    z0 = pot.get("z0")
    if spec is not None:
        if z0 is None or len(np.atleast_1d(z0)) != spec.dim:
            violations.append(f"potential.z0: required, dimension {spec.dim} (got {z0!r})")
            spec = None
        else:
            try:
                spec = normalize_at_critical_point(spec, z0, grid)
            except ConfigError as exc:
                violations.append(f"potential.z0: {exc}")
                spec = None

    solver = cfg["solver"]
    for key in ("tol_ground", "tol_fixed", "tol_root"):
        if not (isinstance(solver[key], (int, float)) and solver[key] > 0):
            violations.append(f"solver.{key}: must be a positive number (got {solver[key]!r})")
    if not (isinstance(solver["max_iter"], int) and solver["max_iter"] > 0):
        violations.append(f"solver.max_iter: must be a positive integer (got {solver['max_iter']!r})")
    if solver["nu"] is not None and rng is not None:
        lo, hi = rng.nu_interval
        if not (lo < solver["nu"] < hi):
            violations.append(f"solver.nu: must lie in ({lo:.4g}, {hi:.4g}) (got {solver['nu']})")

    eps_list = cfg["study"].get("eps_list", [])
    if not eps_list or any(not isinstance(e, (int, float)) or e <= 0 for e in eps_list):
        violations.append(f"study.eps_list: must be a nonempty list of positive numbers (got {eps_list!r})")
    else:
        if any(b >= a for a, b in zip(eps_list, eps_list[1:])):
            violations.append(f"study.eps_list: must be strictly decreasing (got {eps_list})")
        if max(eps_list) > reduction.EPS_CAP:
            violations.append(f"study.eps_list: entries must be <= {reduction.EPS_CAP} (got {eps_list})")
    z_init = cfg["study"].get("z_init")
    if z_init is None and verb in ("reduce", "study"):
        violations.append("study.z_init: required for reduce/study")
    if z_init is not None and spec is not None and spec.critical_point is not None:
        dist = np.max(np.abs(np.atleast_1d(z_init) - np.asarray(spec.critical_point)))
        if dist > reduction.CENTER_CAP:
            violations.append(
                f"study.z_init: |z_init - z0| = {dist:.3g} exceeds the cap {reduction.CENTER_CAP}"
            )

    formats = cfg["output"]["formats"]
    bad = set(formats) - {"fnsf", "json", "csv"}
    if bad:
        violations.append(f"output.formats: unknown formats {sorted(bad)}")

    if violations:
        raise ConfigError(f"invalid configuration ({len(violations)} problem(s))", violations)

    return RunConfig(
        grid=grid,
        s=float(s),
        alpha=float(alpha),
        potential=spec,
        solver=solver,
        eps_list=tuple(float(e) for e in eps_list),
        z_init=tuple(float(v) for v in np.atleast_1d(z_init)) if z_init is not None else (),
        output_directory=Path(cfg["output"]["directory"]),
        output_formats=tuple(formats),
        resolved=cfg,
    )


def _write_json(path, payload):
    Path(path).write_text(json.dumps(payload, sort_keys=True, indent=2) + "\n")


def _ground(config: RunConfig) -> GroundState:
    return compute_ground_state(
        config.grid,
        config.s,
        config.alpha,
        tol=config.solver["tol_ground"],
        max_iter=config.solver["max_iter"],
    )


def _cmd_groundstate(config: RunConfig, args) -> int:
    g = _ground(config)
    out = Path(args.output) if args.output else config.output_directory / "groundstate.fnsf"
    out.parent.mkdir(parents=True, exist_ok=True)
    write_fnsf(out, g.profile, s=g.s, alpha=g.alpha, kind="groundstate", config=config.resolved)
    _write_json(
        out.with_suffix(".json"),
        {
            "residual": g.residual,
            "mass": g.mass,
            "decay_slope": g.decay_slope,
            "iterations": g.iterations,
            "tail_bounds": list(g.tail_bounds),
            "config": config.resolved,
        },
    )
    print(f"ground state written to {out} (residual {g.residual:.3e}, mass {g.mass:.6f})")
    return 0


def _cmd_spectrum(args) -> int:
    profile, header = read_fnsf(args.ground)
    if header.get("s") is None or header.get("alpha") is None:
        raise ConfigError(f"{args.ground}: FNSF header carries no model parameters (s, alpha)")
    g = ground_state_from_profile(profile, float(header["s"]), float(header["alpha"]))
    op = limit_operator(g)
    seeds = (g.profile, *g.kernel_fields)
    result = extremal_eigen(op, count=args.count, initial_fields=seeds, seed=args.seed)
    index = sum(1 for v in result.eigenvalues if v < -1e-4)
    kernel_residuals = [l2_norm(op.apply(f)) / l2_norm(f) for f in g.kernel_fields]
    _, ortho = orthonormal_kernel_fields(g)
    gap = spectral_gap(op, ortho, count=min(args.count + 2, 8), initial_fields=(g.profile,), seed=args.seed)
    report = {
        "eigenvalues": list(result.eigenvalues),
        "eigen_residuals": list(result.residuals),
        "morse_index": index,
        "kernel_residuals": kernel_residuals,
        "gap": {"l2": gap.l2_gap, "h2s": gap.h2s_gap},
        "config": header.get("config"),
    }
    text = json.dumps(report, sort_keys=True, indent=2)
    print(text)
    if args.output:
        Path(args.output).write_text(text + "\n")
    return 0


def _cmd_laplacian(args) -> int:
    u, header = read_fnsf(args.input)
    out = frac_laplacian(u, args.order)
    write_fnsf(args.output, out, s=args.order, alpha=header.get("alpha"), kind="laplacian",
               config=header.get("config"))
    print(f"fractional Laplacian (order {args.order}) written to {args.output}")
    return 0


def _solve_at_eps(ground, spec, eps, z_init, solver, nu):
    """Full per-eps pipeline: locate z_eps, solve there, measure the scaled map."""
    z_eps = reduction.find_concentration_point(
        ground, spec, eps, z_init, tol=solver["tol_root"], tol_fixed=solver["tol_fixed"]
    )
    problem = reduction.make_problem(ground, spec, eps, z_eps, nu=nu)
    sol = reduction.fixed_point_solve(problem, tol=solver["tol_fixed"])
    study = reduction.scaled_map_study(ground, spec, eps, nu=nu, tol=solver["tol_fixed"])
    return {
        "eps": eps,
        "z_eps": list(map(float, z_eps)),
        "phi_norm_2s": sol.phi_norm_2s,
        "ansatz_residual": sol.ansatz_residual,
        "full_residual": sol.full_residual,
        "contraction_ratio": sol.contraction_ratio,
        "sup_verr": study.sup_discrepancy,
        "iterations": sol.iterations,
    }


def _cmd_reduce(config: RunConfig, args) -> int:
    g = _ground(config)
    eps = args.eps if args.eps is not None else config.eps_list[0]
    if not (0 < eps <= reduction.EPS_CAP):
        raise ConfigError(f"--eps must lie in (0, {reduction.EPS_CAP}] (got {eps})")
    solver = config.solver
    z_eps = reduction.find_concentration_point(
        g, config.potential, eps, np.asarray(config.z_init),
        tol=solver["tol_root"], tol_fixed=solver["tol_fixed"],
    )
    problem = reduction.make_problem(g, config.potential, eps, z_eps, nu=solver["nu"])
    sol = reduction.fixed_point_solve(problem, tol=solver["tol_fixed"])
    assembled = reduction.assemble_solution(g, config.potential, eps, z_eps, sol.phi)
    outdir = Path(args.out) if args.out else config.output_directory
    outdir.mkdir(parents=True, exist_ok=True)
    fnsf_path = outdir / "solution.fnsf"
    write_fnsf(fnsf_path, assembled.field, s=g.s, alpha=g.alpha, kind="solution", config=config.resolved)
    _write_json(
        outdir / "solution.json",
        {
            "eps": eps,
            "z_eps": list(map(float, z_eps)),
            "phi_norm_2s": sol.phi_norm_2s,
            "ansatz_residual": sol.ansatz_residual,
            "projected_residual": sol.full_residual,
            "equation_residual": assembled.full_residual,
            "relative_residual": assembled.relative_residual,
            "contraction_ratio": sol.contraction_ratio,
            "iterations": sol.iterations,
            "peak_location": list(map(float, assembled.peak_location)),
            "config": config.resolved,
        },
    )
    print(f"solution written to {fnsf_path} (z_eps {np.asarray(z_eps).tolist()}, "
          f"relative residual {assembled.relative_residual:.3e})")
    return 0


def _cmd_study(config: RunConfig, args) -> int:
    g = _ground(config)
    solver = config.solver
    tasks = [
        (g, config.potential, eps, np.asarray(config.z_init), solver, solver["nu"])
        for eps in config.eps_list
    ]
    if args.jobs > 1:
        with concurrent.futures.ProcessPoolExecutor(max_workers=args.jobs) as pool:
            rows = list(pool.map(_study_worker, tasks))
    else:
        rows = [_study_worker(t) for t in tasks]

    outdir = Path(args.out) if args.out else config.output_directory
    outdir.mkdir(parents=True, exist_ok=True)
    columns = ["eps", "z_eps", "phi_norm_2s", "ansatz_residual", "full_residual",
               "contraction_ratio", "sup_verr", "config"]
    config_json = json.dumps(config.resolved, sort_keys=True)
    csv_path = outdir / "study.csv"
    with open(csv_path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(columns)
        for row in rows:
            z = row["z_eps"][0] if len(row["z_eps"]) == 1 else json.dumps(row["z_eps"])
            writer.writerow([
                repr(float(row["eps"])), z if isinstance(z, str) else repr(float(z)),
                repr(float(row["phi_norm_2s"])), repr(float(row["ansatz_residual"])),
                repr(float(row["full_residual"])), repr(float(row["contraction_ratio"])),
                repr(float(row["sup_verr"])), config_json,
            ])
    _write_json(outdir / "study.json", {"rows": rows, "config": config.resolved})
    print(f"study written to {csv_path} ({len(rows)} rows)")
    return 0


def _study_worker(task):
    return _solve_at_eps(*task)


def run_command(verb: str, config: RunConfig | None, args) -> int:
    """Dispatch a parsed command; raises package errors upward."""
    if verb == "groundstate":
        return _cmd_groundstate(config, args)
    if verb == "spectrum":
        return _cmd_spectrum(args)
    if verb == "laplacian":
        return _cmd_laplacian(args)
    if verb == "reduce":
        return _cmd_reduce(config, args)
    if verb == "study":
        return _cmd_study(config, args)
    raise ConfigError(f"unknown verb {verb!r}; expected one of {VERBS}")


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="fnls", description=__doc__)
    sub = parser.add_subparsers(dest="verb", required=True)

    p = sub.add_parser("groundstate", help="compute the limit-equation ground state")
    p.add_argument("-c", "--config", required=True)
    p.add_argument("-o", "--output", default=None, help="FNSF output path")

    p = sub.add_parser("spectrum", help="eigenanalysis of the linearized operator")
    p.add_argument("-g", "--ground", required=True, help="ground-state FNSF file")
    p.add_argument("-k", "--count", type=int, default=4)
    p.add_argument("-o", "--output", default=None, help="JSON report path")
    p.add_argument("--seed", type=int, default=0)

    p = sub.add_parser("laplacian", help="apply the fractional Laplacian to a field")
    p.add_argument("-i", "--input", required=True)
    p.add_argument("-o", "--output", required=True)
    p.add_argument("--order", type=float, required=True)

    p = sub.add_parser("reduce", help="solve one (eps, z_init) reduction problem")
    p.add_argument("-c", "--config", required=True)
    p.add_argument("--eps", type=float, default=None, help="override the first eps of the schedule")
    p.add_argument("--z0", type=str, default=None, help="override potential.z0 (comma-separated)")
    p.add_argument("--out", default=None, help="override output.directory")

    p = sub.add_parser("study", help="eps-sweep: concentration points and scaled-map table")
    p.add_argument("-c", "--config", required=True)
    p.add_argument("--eps", type=str, default=None, help="override eps_list (comma-separated)")
    p.add_argument("--z0", type=str, default=None, help="override potential.z0 (comma-separated)")
    p.add_argument("--out", default=None, help="override output.directory")
    p.add_argument("--jobs", type=int, default=1, help="worker pool size for the sweep")
    return parser


def _overrides_from(args) -> dict:
    overrides = {}
    z0 = getattr(args, "z0", None)
    if z0 is not None:
        overrides["potential.z0"] = [float(v) for v in z0.split(",")]
    eps = getattr(args, "eps", None)
    if isinstance(eps, str) and eps is not None:
        overrides["study.eps_list"] = [float(v) for v in eps.split(",")]
    out = getattr(args, "out", None)
    if out is not None:
        overrides["output.directory"] = out
    return overrides


def main(argv=None) -> int:
    args = _build_parser().parse_args(argv)
    try:
        config = None
        if args.verb in ("groundstate", "reduce", "study"):
            config = parse_and_validate(args.config, _overrides_from(args), verb=args.verb)
        return run_command(args.verb, config, args)
    except ConfigError as exc:
        payload = {"error": "config", "message": str(exc), "violations": exc.violations}
        print(json.dumps(payload, sort_keys=True, indent=2), file=sys.stderr)
        return 2
    except AdmissibilityError as exc:
        print(json.dumps({"error": "admissibility", "message": str(exc)}, sort_keys=True), file=sys.stderr)
        return 4
    except (ContractionError, ConvergenceError) as exc:
        payload = {
            "error": "convergence",
            "message": str(exc),
            "residual": exc.residual,
            "iterations": exc.iterations,
            "diagnostics": exc.diagnostics,
        }
        print(json.dumps(payload, sort_keys=True, indent=2, default=str), file=sys.stderr)
        return 3


if __name__ == "__main__":
    sys.exit(main())
