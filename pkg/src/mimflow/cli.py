"""Command-line front-end.

Subcommands:

* ``solve``    -- run one case and write summary.json, fields.csv,
                  fields.vtk and fields.png into the output directory.
* ``converge`` -- run an h-convergence sweep and write errors.csv plus
                  convergence.png.
* ``check``    -- run the structural self-checks and print PASS/FAIL.

Flags can also come from a JSON config file (``--config``); explicit
flags win. Exit codes: 0 success, 1 compute failure, 2 usage error.
The environment variable MIMETIC_THREADS caps sweep parallelism.
"""

import argparse
import json
import sys
import time
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .analysis import ERROR_FIELDS, convergence_study, error_norms
from .assembly import assemble_stokes
from .basis import spectral_basis
from .cases import CASES, get_case
from .checks import run_structure_checks
from .solver import sample, solve
from .topology import MeshSpec, build_complex
from .writers import (
    SUMMARY_SCHEMA,
    write_errors_csv,
    write_fields_csv,
    write_fields_vtk,
    write_summary,
)


class UsageError(Exception):
    pass


@dataclass
class CaseConfig:
    """Validated configuration of one solve run."""

    case: str
    elements: tuple
    degree: int
    resolution: int
    out: Path
    paper_size: bool = False
    structure_check: bool = False

    @classmethod
    def build(cls, args, file_cfg: dict) -> "CaseConfig":
        case = _pick("case", args.case, file_cfg, None)
        if case not in CASES:
            raise UsageError(
                f"unknown case {case!r}; choose from {', '.join(sorted(CASES))}"
            )
        dim = CASES[case].dim
        elements = _pick("elements", args.elements, file_cfg, "2")
        if isinstance(elements, (int, float)):
            elements = str(int(elements))
        if isinstance(elements, (list, tuple)):
            elements = ",".join(str(int(v)) for v in elements)
        parts = [p for p in str(elements).split(",") if p]
        try:
            counts = tuple(int(p) for p in parts)
        except ValueError:
            raise UsageError(f"bad --elements value {elements!r}") from None
        if len(counts) == 1:
            counts = counts * dim
        if len(counts) != dim or any(k < 1 for k in counts):
            raise UsageError(f"--elements needs 1 or {dim} positive counts")
        paper = bool(_pick("paper_size", args.paper_size or None, file_cfg, False))
        degree = int(_pick("degree", args.degree, file_cfg, 8 if paper else 4))
        if degree < 1:
            raise UsageError("--degree must be >= 1")
        if paper:
            degree = max(degree, 8)
        default_res = 50 if dim == 2 else 30
        resolution = int(_pick("resolution", args.resolution, file_cfg, default_res))
        if resolution < 1:
            raise UsageError("--resolution must be >= 1")
        out = Path(_pick("out", args.out, file_cfg, "out"))
        struct = bool(_pick("structure_check", args.structure_check or None, file_cfg, False))
        return cls(case, counts, degree, resolution, out, paper, struct)


def _pick(key, flag_value, file_cfg, default):
    if flag_value is not None:
        return flag_value
    if key in file_cfg:
        return file_cfg[key]
    return default


def _load_config(path) -> dict:
    if path is None:
        return {}
    try:
        with open(path) as fh:
            cfg = json.load(fh)
    except (OSError, json.JSONDecodeError) as exc:
        raise UsageError(f"cannot read config file {path}: {exc}") from None
    if not isinstance(cfg, dict):
        raise UsageError("config file must hold a JSON object")
    return cfg


def cmd_solve(args) -> int:
    cfg = CaseConfig.build(args, _load_config(args.config))
    case = get_case(cfg.case)
    if cfg.structure_check:
        code = cmd_check(args)
        if code != 0:
            return code
    t0 = time.perf_counter()
    spec = MeshSpec(case.dim, cfg.elements, cfg.degree, case.lo, case.hi)
    c = build_complex(spec)
    basis = spectral_basis(cfg.degree)
    sys_ = assemble_stokes(c, basis, case.body_force, case.boundary_velocity)
    sol = solve(sys_)
    sampled = sample(sol, c, cfg.resolution, basis)
    runtime = time.perf_counter() - t0

    umax = float(
        np.max(np.sqrt(sum(np.asarray(sampled["velocity"][i]) ** 2 for i in range(case.dim))))
    )
    divmax = float(np.max(np.abs(sampled["divergence"])))
    cfg.out.mkdir(parents=True, exist_ok=True)
    summary = {
        "schema": SUMMARY_SCHEMA,
        "case": cfg.case,
        "dim": case.dim,
        "elements": list(cfg.elements),
        "degree": cfg.degree,
        "resolution": cfg.resolution,
        "dof_counts": sol.metadata["dofs"],
        "solver_residual": sol.residual,
        "constraint_norm": sol.constraint_norm,
        "max_abs_divergence": divmax,
        "max_abs_velocity": umax,
        "divergence_ratio": divmax / umax if umax > 0 else 0.0,
        "runtime_seconds": round(runtime, 3),
        "outputs": ["summary.json", "fields.csv", "fields.vtk", "fields.png"],
    }
    if case.exact is not None:
        entry = error_norms(sol, case, c, basis)
        summary["errors"] = {k: float(v) for k, v in entry.errors.items()}
    write_summary(cfg.out / "summary.json", summary)
    write_fields_csv(cfg.out / "fields.csv", sampled, case.dim)
    title = f"{cfg.case}, {'x'.join(str(k) for k in cfg.elements)} elements, N={cfg.degree}"
    write_fields_vtk(cfg.out / "fields.vtk", sampled, case.dim, title)
    from .figures import render_solution

    render_solution(cfg.out / "fields.png", sampled, case.dim, title)
    print(
        f"{cfg.case}: residual {sol.residual:.3e}, max|div u| / max|u| = "
        f"{summary['divergence_ratio']:.3e}, wrote {cfg.out}/"
    )
    return 0


def cmd_converge(args) -> int:
    file_cfg = _load_config(args.config)
    case_name = _pick("case", args.case, file_cfg, "manufactured2d")
    case = get_case(case_name)
    if case.exact is None:
        raise UsageError(f"case {case_name!r} has no exact solution to converge against")
    degrees = _parse_int_list(_pick("degrees", args.degrees, file_cfg, "2,3"), "--degrees")
    elements = _parse_int_list(_pick("elements", args.elements, file_cfg, None), "--elements")
    out = Path(_pick("out", args.out, file_cfg, "out"))
    t0 = time.perf_counter()
    report = convergence_study(case, degrees, elements)
    out.mkdir(parents=True, exist_ok=True)
    write_errors_csv(out / "errors.csv", report, degrees, ERROR_FIELDS)
    from .figures import render_convergence

    render_convergence(out / "convergence.png", report, degrees, f"{case_name} h-convergence")
    for n in degrees:
        fits = {f: report.rates[(n, f)] for f in ("omega_hcurl", "u_hdiv", "p_l2")}
        line = ", ".join(f"{f} rate {fit.rate:.2f}" for f, fit in fits.items())
        print(f"N={n}: {line}")
    print(f"sweep finished in {time.perf_counter() - t0:.1f}s, wrote {out}/")
    if report.partial:
        print("warning: sweep partial, one or more solves failed", file=sys.stderr)
        return 1
    return 0


def _parse_int_list(value, flag) -> list:
    if value is None:
        raise UsageError(f"{flag} is required")
    if isinstance(value, (list, tuple)):
        items = list(value)
    else:
        items = [p for p in str(value).split(",") if p]
    if not items:
        raise UsageError(f"{flag} must list at least one integer")
    try:
        out = [int(v) for v in items]
    except ValueError:
        raise UsageError(f"bad {flag} value {value!r}") from None
    if any(v < 1 for v in out):
        raise UsageError(f"{flag} entries must be >= 1")
    return out


def cmd_check(args) -> int:
    results = run_structure_checks()
    width = max(len(r.name) for r in results)
    failed = 0
    for r in results:
        tag = "PASS" if r.passed else "FAIL"
        print(f"{tag}  {r.name:<{width}}  {r.detail}")
        failed += 0 if r.passed else 1
    print(f"{len(results) - failed}/{len(results)} checks passed")
    return 1 if failed else 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="mimflow",
        description="Mimetic spectral element Stokes solver with pointwise "
        "divergence-free velocity",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    ps = sub.add_parser("solve", help="solve one case and write field reports")
    ps.add_argument("--case", choices=sorted(CASES), default=None)
    ps.add_argument("--elements", default=None, help="per-direction element count(s)")
    ps.add_argument("--degree", type=int, default=None)
    ps.add_argument("--resolution", type=int, default=None, help="sampling intervals per direction")
    ps.add_argument("--out", default=None)
    ps.add_argument("--paper-size", action="store_true", dest="paper_size",
                    help="use the published problem size (N = 8)")
    ps.add_argument("--structure-check", action="store_true", dest="structure_check",
                    help="run the structural self-checks first")
    ps.add_argument("--config", default=None, help="JSON config file; flags override")
    ps.set_defaults(func=cmd_solve)

    pc = sub.add_parser("converge", help="h-convergence sweep with fitted rates")
    pc.add_argument("--case", default=None)
    pc.add_argument("--degrees", default=None, help="comma-separated degrees")
    pc.add_argument("--elements", default=None, help="comma-separated mesh sizes")
    pc.add_argument("--out", default=None)
    pc.add_argument("--config", default=None)
    pc.set_defaults(func=cmd_converge)

    pk = sub.add_parser("check", help="structural self-checks, exit 1 on failure")
    pk.add_argument("--config", default=None)
    pk.set_defaults(func=cmd_check)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except UsageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        parser.print_usage(sys.stderr)
        return 2
    except Exception as exc:  # compute failure
        print(f"mimflow failed: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
