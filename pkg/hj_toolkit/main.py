"""
Main entry point for the HJ toolkit command line
"""

import argparse
import sys
import traceback
from pathlib import Path
from typing import Any, Dict, List, Optional, Sequence, Tuple

import numpy as np
from tqdm import tqdm

from . import __version__
from .core.checks import all_passed, run_contract_suite
from .core.errors import (ConfigError, DomainSingularityError, ExpressionSyntaxError, HJToolkitError,
                          SingularityGuardError, StepFailureError, TimeDependenceError, UnknownSymbolError)
from .core.flows import characteristics, compare_lifted, integrate, parallel_map
from .core.hamiltonian import parse_hamiltonian
from .core.hj import hj_residual, relatedness_defect
from .core.structures import contract_check, poisson_bracket, vector_field
from .core.systems import (SYSTEMS, PinneySpec, SystemDefinition, builtin_system, pinney_residual,
                           pinney_solution, pinney_velocity, system_from_dict)
from .models.geometry import ExtendedPoint, StructureKind
from .utils.config import (RunSettings, build_settings, create_sample_config, create_sample_system,
                           load_system_definition)
from .utils.export import FORMATS, open_output, write_table
from .utils.run_context import RunManifest, open_run_context

EXIT_OK = 0
EXIT_UNEXPECTED = 1
EXIT_USAGE = 2
EXIT_SINGULAR = 3
EXIT_CONTRACT = 4
EXIT_TOLERANCE = 5

# relative defect below which a contraction counts as satisfied
CONTRACT_TOLERANCE = 1e-10

POINT_KEYS = {"q": "q", "p": "p", "s": "s", "t": "s", "S": "s"}


def status(message: str) -> None:
    print(message, file=sys.stderr)


def parse_point(text: str, require_p: bool = True) -> Tuple[List[float], Optional[List[float]], float]:
    """Parse "q=1,2;p=0,0;s=0" into (q, p, s); t and S are accepted for s, s defaults to 0

    Raises:
        ValueError: Malformed text
    """
    values: Dict[str, List[float]] = {}
    for part in text.split(";"):
        part = part.strip()
        if not part:
            continue
        key, sep, raw = part.partition("=")
        key = key.strip()
        if not sep or key not in POINT_KEYS:
            raise ValueError(f"Malformed point '{text}': expected q=...;p=...;s=...")
        name = POINT_KEYS[key]
        if name in values:
            raise ValueError(f"Malformed point '{text}': '{name}' given twice")
        try:
            values[name] = [float(v) for v in raw.split(",")]
        except ValueError:
            raise ValueError(f"Malformed point '{text}': '{raw.strip()}' is not a list of numbers") from None
    if "q" not in values:
        raise ValueError(f"Malformed point '{text}': missing q")
    if require_p and "p" not in values:
        raise ValueError(f"Malformed point '{text}': missing p")
    s = values.get("s", [0.0])
    if len(s) != 1:
        raise ValueError(f"Malformed point '{text}': s takes one value")
    return values["q"], values.get("p"), s[0]


def parse_params(items: Optional[Sequence[str]]) -> Dict[str, float]:
    """Parse repeated name=value flags"""
    params: Dict[str, float] = {}
    for item in items or []:
        name, sep, raw = item.partition("=")
        if not sep or not name.strip():
            raise ValueError(f"Malformed parameter '{item}': expected name=value")
        try:
            params[name.strip()] = float(raw)
        except ValueError:
            raise ValueError(f"Malformed parameter '{item}': '{raw}' is not a number") from None
    return params


def _axis(text: str) -> np.ndarray:
    parts = text.split(":")
    if len(parts) != 3:
        raise ValueError(f"Malformed grid axis '{text}': expected min:max:count")
    lo, hi = float(parts[0]), float(parts[1])
    count = int(parts[2])
    if count < 1:
        raise ValueError(f"Grid axis '{text}' needs at least one point")
    return np.linspace(lo, hi, count)


def parse_grid(text: str) -> Tuple[np.ndarray, np.ndarray]:
    """Parse "qmin:qmax:nq,smin:smax:ns" into the two axes"""
    axes = text.split(",")
    if len(axes) != 2:
        raise ValueError(f"Malformed grid '{text}': expected qmin:qmax:nq,smin:smax:ns")
    return _axis(axes[0]), _axis(axes[1])


def load_system(args) -> SystemDefinition:
    """Resolve --system (built-in name or file), --param overrides and --section"""
    params = parse_params(getattr(args, "param", None))
    if args.system in SYSTEMS:
        system = builtin_system(args.system, params)
    else:
        system = system_from_dict(load_system_definition(args.system), params, source=args.system)
    sections = getattr(args, "section", None)
    if sections:
        system = system.with_section(sections)
    if getattr(args, "structure", None):
        system.structure = StructureKind.parse(args.structure)
    return system


def make_manifest(args, settings: RunSettings, system: Optional[SystemDefinition] = None,
                  **extra: Any) -> RunManifest:
    parameters: Dict[str, Any] = {}
    if system is not None:
        parameters.update(dict(sorted(system.params.items())))
        parameters["structure"] = system.structure.value
        if system.section is not None:
            parameters["section"] = list(system.section.sources)
    parameters.update({k: v for k, v in extra.items() if v is not None})
    label = ""
    if system is not None:
        label = system.name if system.source == "builtin" else system.source
    return RunManifest(command=args.command, system=label, parameters=parameters,
                       integrator=settings.integrator.to_dict(), output=args.out or "-", seed=settings.seed)


def emit(args, manifest: RunManifest, columns, rows, notes=None, default_format: str = "csv") -> None:
    args.manifest = manifest
    fmt = args.format or default_format
    with open_output(args.out) as stream:
        write_table(stream, fmt, columns, rows, manifest, notes)
    if args.verbose and args.out:
        status(f"✅ Wrote {len(rows)} rows to {args.out}")


def _span(args) -> Tuple[float, float]:
    return float(args.t0), float(args.t1)


def cmd_field(args, settings: RunSettings) -> int:
    system = load_system(args)
    q, p, s = parse_point(args.point)
    x = ExtendedPoint(tuple(q), tuple(p), s)
    H = system.hamiltonian
    kind = system.structure
    field_value = vector_field(kind, H, x)
    report = contract_check(kind, H, x)
    n = x.n
    rows: List[List[Any]] = [[f"dq{i + 1}", v] for i, v in enumerate(field_value.dq)]
    rows += [[f"dp{i + 1}", v] for i, v in enumerate(field_value.dp)]
    rows.append(["ds", field_value.ds])
    rows += [["eta_pairing", report.eta_pairing], ["omega_defect", report.omega_defect],
             ["hamiltonian_pairing_defect", report.hamiltonian_pairing_defect],
             ["relative_defect", report.relative_defect()]]
    if args.bracket:
        other = parse_hamiltonian(args.bracket, n, system.params)
        rows.append(["poisson_bracket", poisson_bracket(H, other, x)])
    manifest = make_manifest(args, settings, system, point=args.point, bracket=args.bracket)
    emit(args, manifest, ["quantity", "value"], rows, default_format="table")
    if not report.passed(CONTRACT_TOLERANCE):
        status(f"❌ Contract violated: relative defect {report.relative_defect():.3e}")
        return EXIT_CONTRACT
    if args.verbose:
        status(f"✅ Contracts hold at {args.point}")
    return EXIT_OK


def cmd_integrate(args, settings: RunSettings) -> int:
    system = load_system(args)
    q, p, s = parse_point(args.start)
    x0 = ExtendedPoint(tuple(q), tuple(p), s)
    if args.verbose:
        status(f"⏳ Integrating {system.name} ({system.structure.value}) over [{args.t0}, {args.t1}]")
    trajectory = integrate(system.structure, system.hamiltonian, x0, _span(args), settings.integrator)
    manifest = make_manifest(args, settings, system, start=args.start, t0=args.t0, t1=args.t1)
    emit(args, manifest, trajectory.columns(), trajectory.rows())
    return EXIT_OK


def cmd_characteristics(args, settings: RunSettings) -> int:
    system = load_system(args)
    q, gamma, s = parse_point(args.start)
    if args.verbose:
        status(f"⏳ Characteristics of {system.name} ({system.structure.value}) from {args.start}")
    trajectory = characteristics(system.structure, system.hamiltonian, q, gamma, s, _span(args),
                                 settings.integrator)
    manifest = make_manifest(args, settings, system, start=args.start, t0=args.t0, t1=args.t1)
    emit(args, manifest, trajectory.columns(), trajectory.rows())
    return EXIT_OK


def cmd_compare(args, settings: RunSettings) -> int:
    system = load_system(args)
    if system.section is None:
        raise ValueError("compare needs a section (--section or a 'section' entry in the system file)")
    q, _, s = parse_point(args.start, require_p=False)
    result = compare_lifted(system.structure, system.hamiltonian, system.section, (q, s), _span(args),
                            settings.integrator)
    n = system.n
    columns = ["tau"] + [f"q{i}_lifted" for i in range(1, n + 1)] + [f"p{i}_lifted" for i in range(1, n + 1)]
    columns += ["s_lifted"] + [f"q{i}_full" for i in range(1, n + 1)] + [f"p{i}_full" for i in range(1, n + 1)]
    columns += ["s_full", "deviation"]
    rows = [[t, *lifted, *full, d] for t, lifted, full, d in
            zip(result.lifted.taus, result.lifted.states, result.full.states, result.deviations)]
    manifest = make_manifest(args, settings, system, start=args.start, t0=args.t0, t1=args.t1, tol=args.tol)
    emit(args, manifest, columns, rows, notes={"max_point_deviation": result.max_point_deviation})
    status(f"📊 max_point_deviation = {result.max_point_deviation:.17g}")
    if not result.max_point_deviation < args.tol:
        status(f"❌ Deviation above tolerance {args.tol:g}")
        return EXIT_TOLERANCE
    return EXIT_OK


def cmd_hj_residual(args, settings: RunSettings) -> int:
    system = load_system(args)
    if system.section is None:
        raise ValueError("hj-residual needs a section (--section or a 'section' entry in the system file)")
    qs, ss = parse_grid(args.grid)
    n = system.n
    rest = [float(v) for v in args.q_rest.split(",")] if args.q_rest else [0.0] * (n - 1)
    if len(rest) != n - 1:
        raise ValueError(f"--q-rest needs {n - 1} values for n={n}")
    kind = system.structure
    points = [(float(q), float(s)) for q in qs for s in ss]

    def evaluate(point):
        q, s = point
        base = [q] + rest
        residual = hj_residual(kind, system.hamiltonian, system.section, base, s, frozen_ds=args.frozen_ds)
        report = relatedness_defect(kind, system.hamiltonian, system.section, base, s)
        return [q, s, *residual, report.relatedness_defect, report.closedness_defect]

    progress = tqdm(total=len(points), desc="grid", file=sys.stderr, disable=not args.verbose)

    def evaluate_with_progress(point):
        row = evaluate(point)
        progress.update(1)
        return row

    try:
        rows = parallel_map(evaluate_with_progress, points, settings.workers)
    finally:
        progress.close()
    columns = ["q1", "s"] + [f"residual{j}" for j in range(1, n + 1)] + ["relatedness_defect", "closedness_defect"]
    worst = max((max(abs(v) for v in row[2:2 + n]) for row in rows), default=0.0)
    manifest = make_manifest(args, settings, system, grid=args.grid, q_rest=args.q_rest,
                             frozen_ds=args.frozen_ds, tol=args.tol)
    emit(args, manifest, columns, rows, notes={"max_residual": worst})
    if args.tol is not None and not worst < args.tol:
        status(f"❌ Max residual {worst:.3e} above tolerance {args.tol:g}")
        return EXIT_TOLERANCE
    return EXIT_OK


def cmd_pinney(args, settings: RunSettings) -> int:
    spec = PinneySpec(k=args.k, omega=args.omega, y1=args.y1, y2=args.y2, form=args.form,
                      A=args.A, B=args.B, C=args.C, C1=args.C1, C2=args.C2, branch=args.branch)
    if args.rescale:
        spec = spec.rescaled(args.t0)
    ts = np.linspace(args.t0, args.t1, settings.integrator.samples)
    residuals = pinney_residual(spec, ts)
    rows = [[t, pinney_solution(spec, t), pinney_velocity(spec, t), r] for t, r in zip(ts, residuals)]
    manifest = RunManifest(command=args.command, system="pinney",
                           parameters={"k": spec.k, "omega": spec.omega, "y1": spec.y1, "y2": spec.y2,
                                       "form": spec.form, "A": spec.A, "B": spec.B, "C": spec.C,
                                       "C1": spec.C1, "C2": spec.C2, "branch": spec.branch,
                                       "t0": args.t0, "t1": args.t1},
                           integrator=settings.integrator.to_dict(), output=args.out or "-", seed=settings.seed)
    emit(args, manifest, ["t", "q", "gamma", "residual"], rows,
         notes={"max_residual": float(np.max(residuals)), "wronskian": spec.wronskian(args.t0)})
    return EXIT_OK


def cmd_check(args, settings: RunSettings) -> int:
    results = run_contract_suite(seed=settings.seed, workers=settings.workers, verbose=args.verbose,
                                 points=args.points)
    manifest = RunManifest(command=args.command, parameters={"points": args.points},
                           integrator=settings.integrator.to_dict(), output=args.out or "-", seed=settings.seed)
    emit(args, manifest, ["check", "measured", "threshold", "status", "detail"],
         [r.as_row() for r in results], default_format="table")
    return EXIT_OK if all_passed(results) else EXIT_CONTRACT


def cmd_init(args, settings: Optional[RunSettings]) -> int:
    create_sample_config(directory=args.dir)
    create_sample_system(directory=args.dir)
    return EXIT_OK


def _common_parent() -> argparse.ArgumentParser:
    parent = argparse.ArgumentParser(add_help=False)
    parent.add_argument("--verbose", action="store_true", help="Print progress to stderr")
    parent.add_argument("--log-dir", help="Tee status output into LOG_DIR/<timestamp>/output.log with a manifest")
    parent.add_argument("--config", help="TOML configuration file ([integrator] and [run] tables)")
    parent.add_argument("--seed", type=int, help="Seed recorded in the output header and used for random draws")
    parent.add_argument("--workers", type=int, help="Threads for independent grid points or checks")
    parent.add_argument("--out", help="Output path (default: stdout)")
    parent.add_argument("--format", choices=FORMATS, help="Output format")
    return parent


def _system_parent() -> argparse.ArgumentParser:
    parent = argparse.ArgumentParser(add_help=False)
    parent.add_argument("--system", required=True,
                        help=f"Built-in system ({', '.join(sorted(SYSTEMS))}) or path to a .json/.toml definition")
    parent.add_argument("--structure", choices=[k.value for k in StructureKind],
                        help="Structure (default: the system's own)")
    parent.add_argument("--param", action="append", metavar="NAME=VALUE", help="Parameter override (repeatable)")
    parent.add_argument("--section", action="append", metavar="EXPR",
                        help="Section component gamma^j (repeat once per component)")
    return parent


def _integrator_parent() -> argparse.ArgumentParser:
    parent = argparse.ArgumentParser(add_help=False)
    parent.add_argument("--method", choices=["rk45", "rk45-adaptive", "rk4", "rk4-fixed"], help="Integration method")
    parent.add_argument("--rtol", type=float, help="Relative tolerance (rk45)")
    parent.add_argument("--atol", type=float, help="Absolute tolerance (rk45)")
    parent.add_argument("--step", type=float, help="Step size (rk4)")
    parent.add_argument("--max-steps", type=int, dest="max_steps", help="Step budget")
    parent.add_argument("--samples", type=int, help="Output samples (rk45 and pinney)")
    parent.add_argument("--q-min", type=float, dest="q_min", help="Singularity guard for q-singular systems")
    parent.add_argument("--t0", type=float, default=0.0, help="Start time")
    parent.add_argument("--t1", type=float, default=1.0, help="End time")
    return parent


def build_parser() -> argparse.ArgumentParser:
    common = _common_parent()
    system = _system_parent()
    integrator = _integrator_parent()
    parser = argparse.ArgumentParser(prog="hj-toolkit",
                                     description="Geometric Hamilton-Jacobi toolkit for symplectic, "
                                                 "cosymplectic and contact systems")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("field", parents=[common, system], help="Vector field and contract defects at a point")
    p.add_argument("--point", required=True, help='Point "q=...;p=...;s=..."')
    p.add_argument("--bracket", metavar="EXPR", help="Also print the Poisson bracket {H, EXPR} at the point")
    p.set_defaults(handler=cmd_field)

    p = sub.add_parser("integrate", parents=[common, system, integrator], help="Integral curve of the field")
    p.add_argument("--from", dest="start", required=True, help='Initial point "q=...;p=...;s=..."')
    p.set_defaults(handler=cmd_integrate)

    p = sub.add_parser("characteristics", parents=[common, system, integrator],
                       help="Characteristic curve of the HJ equation (p read as gamma)")
    p.add_argument("--from", dest="start", required=True, help='Initial data "q=...;p=gamma0...;s=..."')
    p.set_defaults(handler=cmd_characteristics)

    p = sub.add_parser("compare", parents=[common, system, integrator],
                       help="Lifted projected trajectory against the full trajectory")
    p.add_argument("--from", dest="start", required=True, help='Base point "q=...;s=..."')
    p.add_argument("--tol", type=float, default=1e-6, help="Exit 5 unless max deviation is below this")
    p.set_defaults(handler=cmd_compare)

    p = sub.add_parser("hj-residual", parents=[common, system], help="HJ residuals of a section on a grid")
    p.add_argument("--grid", required=True, help="qmin:qmax:nq,smin:smax:ns")
    p.add_argument("--q-rest", dest="q_rest", help="Fixed q2..qn for n > 1 (comma separated, default 0)")
    p.add_argument("--frozen-ds", dest="frozen_ds", type=float,
                   help="Contact only: replace d gamma/ds by this constant in the residual")
    p.add_argument("--tol", type=float, help="Exit 5 unless every residual is below this")
    p.set_defaults(handler=cmd_hj_residual)

    p = sub.add_parser("pinney", parents=[common, integrator], help="Milne-Pinney closed form and its residual")
    p.add_argument("--k", type=float, default=1.0)
    p.add_argument("--omega", default="1", help="omega(t) expression")
    p.add_argument("--y1", default="cos(t)", help="First oscillator solution")
    p.add_argument("--y2", default="sin(t)", help="Second oscillator solution")
    p.add_argument("--form", choices=["classical", "symmetric"], default="classical")
    p.add_argument("--A", type=float, default=1.0)
    p.add_argument("--B", type=float, default=0.0)
    p.add_argument("--C", type=float, default=1.0)
    p.add_argument("--C1", type=float, default=1.0)
    p.add_argument("--C2", type=float, default=1.0)
    p.add_argument("--branch", type=int, choices=[1, -1], default=1)
    p.add_argument("--rescale", action="store_true", help="Rescale A, B, C so that AC - B^2 = k/W^2")
    p.set_defaults(handler=cmd_pinney)

    p = sub.add_parser("check", parents=[common], help="Run the contract and oracle suite")
    p.add_argument("--points", type=int, default=1000, help="Random points per Hamiltonian")
    p.set_defaults(handler=cmd_check)

    p = sub.add_parser("init", help="Write a sample config, .env.sample and system file")
    p.add_argument("--dir", default=None, help="Directory for the sample files")
    p.set_defaults(handler=cmd_init, verbose=False, log_dir=None, config=None)
    return parser


def _settings(args) -> RunSettings:
    flags = {name: getattr(args, name, None)
             for name in ("method", "rtol", "atol", "step", "max_steps", "samples", "q_min", "seed", "workers")}
    return build_settings(flags, config_path=args.config)


def run(args) -> int:
    if args.command == "init":
        return args.handler(args, None)
    if args.config and not Path(args.config).is_file():
        create_sample_config(args.config)
        status("Edit the sample config and run again.")
        return EXIT_OK
    settings = _settings(args)
    return args.handler(args, settings)


# options whose values may start with "-" (negative grid bounds, signed expressions)
VALUE_OPTIONS = ("--grid", "--section", "--bracket", "--omega", "--y1", "--y2", "--q-rest", "--point", "--from")


def attach_option_values(argv: Sequence[str]) -> List[str]:
    """Rewrite "--grid -0.9:0.9:7,0:1:3" as "--grid=-0.9:0.9:7,0:1:3" so argparse keeps the value"""
    out: List[str] = []
    items = list(argv)
    i = 0
    while i < len(items):
        item = items[i]
        if item in VALUE_OPTIONS and i + 1 < len(items) and items[i + 1].startswith("-") \
                and not items[i + 1].startswith("--"):
            out.append(f"{item}={items[i + 1]}")
            i += 2
            continue
        out.append(item)
        i += 1
    return out


def main(argv: Optional[Sequence[str]] = None) -> int:
    """Main entry point; returns the exit code"""
    parser = build_parser()
    argv = sys.argv[1:] if argv is None else argv
    try:
        args = parser.parse_args(attach_option_values(argv))
    except SystemExit as e:
        return int(e.code) if isinstance(e.code, int) else EXIT_USAGE

    context = open_run_context(args.log_dir)
    try:
        code = run(args)
        manifest = getattr(args, "manifest", None)
        if context is not None and manifest is not None:
            context.save_manifest(manifest)
        return code
    except (ExpressionSyntaxError, UnknownSymbolError, ConfigError) as e:
        status(f"❌ {e}")
        return EXIT_USAGE
    except TimeDependenceError as e:
        status(f"❌ {e}")
        return EXIT_CONTRACT
    except (DomainSingularityError, SingularityGuardError, StepFailureError) as e:
        status(f"❌ {e}")
        return EXIT_SINGULAR
    except ValueError as e:
        status(f"❌ {e}")
        return EXIT_USAGE
    except HJToolkitError as e:
        status(f"❌ {e}")
        return EXIT_UNEXPECTED
    except Exception as e:
        status(f"❌ Unhandled error: {e}")
        if args.verbose:
            traceback.print_exc()
        return EXIT_UNEXPECTED
    finally:
        if context is not None:
            context.cleanup()


if __name__ == "__main__":
    sys.exit(main())
