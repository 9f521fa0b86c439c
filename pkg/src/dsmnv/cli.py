"""Command-line front end: ``dsmnv transform|evolve|residual|derive|verify``.

Settings come from built-in defaults, then an optional ``key = value`` config
file (``--config``), then command-line flags.  Every command writes a JSON
report carrying ``schema: 1``; all files are written atomically.

Exit codes: 0 success, 1 a checked property failed, 2 solver non-convergence,
3 input/output error, 4 symbolic derivation or golden mismatch.
"""

from __future__ import annotations

import argparse
import dataclasses
import json
import os
import sys
import time
from pathlib import Path

import numpy as np

from . import checks
from .dbar_solver import NonConvergence, SolverConfig
from .evolution import PHASES, mnv_residual, phase_field, rotate
from .field_core import (
    ComplexField,
    FieldFormatError,
    atomic_write,
    make_grid,
    read_field,
    set_fft_workers,
    write_csv,
    write_field,
)
from .scattering_maps import (
    TransformConfig,
    TransformStats,
    forward_scatter,
    inverse_scatter,
    lin_forward,
    lin_inverse,
)

EXIT_OK, EXIT_CHECK, EXIT_SOLVER, EXIT_IO, EXIT_DERIVATION = 0, 1, 2, 3, 4
SCHEMA = 1


@dataclasses.dataclass
class RunConfig:
    z_L: float = 8.0
    z_N: int = 256
    k_L: float = 6.0
    k_N: int = 128
    tolerance: float = 1e-10
    max_iterations: int = 200
    method: str = "born"
    phase: str = "mnv"
    t: float = 0.0
    delta: float = 1e-3
    input: str | None = None
    potential: str | None = None
    amplitude: float = 0.3
    output_dir: str = "."
    formats: str = "binary,csv"
    threads: int = os.cpu_count() or 1

    def transform_config(self) -> TransformConfig:
        return TransformConfig(
            z_grid=make_grid(self.z_L, self.z_N),
            k_grid=make_grid(self.k_L, self.k_N),
            solver=SolverConfig(self.tolerance, self.max_iterations, self.method),
        )

    def grids(self) -> dict:
        return {"z": {"L": self.z_L, "N": self.z_N}, "k": {"L": self.k_L, "N": self.k_N}}


class ConfigError(ValueError):
    pass


def read_config_file(path: str) -> dict:
    """Parse ``key = value`` lines; ``#`` starts a comment."""
    fields = {f.name: f for f in dataclasses.fields(RunConfig)}
    out = {}
    for lineno, raw in enumerate(Path(path).read_text().splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        key, sep, value = line.partition("=")
        key, value = key.strip().replace("-", "_"), value.strip()
        if not sep or key not in fields:
            raise ConfigError(f"{path}:{lineno}: unrecognised line {raw!r}")
        out[key] = _convert(fields[key], value)
    return out


def _convert(f: dataclasses.Field, value: str):
    kind = type(f.default)
    if f.default is None:
        return value
    try:
        return kind(value)
    except ValueError as exc:
        raise ConfigError(f"bad value for {f.name}: {value!r}") from exc


def build_config(args: argparse.Namespace) -> RunConfig:
    values = {}
    if args.config:
        values.update(read_config_file(args.config))
    for f in dataclasses.fields(RunConfig):
        flag = getattr(args, f.name, None)
        if flag is not None:
            values[f.name] = flag
    return RunConfig(**values)


# potentials


def parse_potential(spec: str, grid) -> ComplexField:
    """``gaussian:A,sigma,z0`` or ``gauss2:A1,s1,z1,A2,s2,z2`` (z0 may be complex, e.g. ``0.5+0.2j``)."""
    kind, _, params = spec.partition(":")
    try:
        values = [complex(p.strip()) for p in params.split(",")] if params else []
    except ValueError as exc:
        raise ConfigError(f"bad potential parameters in {spec!r}") from exc
    counts = {"gaussian": 3, "gauss2": 6}
    if kind not in counts or len(values) != counts[kind]:
        raise ConfigError(f"potential must be gaussian:A,sigma,z0 or gauss2:A1,s1,z1,A2,s2,z2, got {spec!r}")
    total = ComplexField.zeros(grid)
    for amp, width, center in zip(values[0::3], values[1::3], values[2::3]):
        if amp.imag or width.imag or width.real <= 0:
            raise ConfigError(f"amplitude and width must be real, width positive: {spec!r}")
        total = total + checks.gaussian(grid, amp.real, width.real, center)
    return total


def load_input(cfg: RunConfig, grid) -> ComplexField:
    if cfg.input:
        field = read_field(cfg.input)
        if field.grid != grid:
            raise ConfigError(
                f"{cfg.input} holds an L={field.grid.L}, N={field.grid.N} field; "
                f"expected L={grid.L}, N={grid.N}"
            )
        return field
    if cfg.potential:
        return parse_potential(cfg.potential, grid)
    return checks.gaussian(grid, cfg.amplitude)


# output


def _relative(a: ComplexField, b: ComplexField) -> float:
    den = b.l2_norm()
    return (a - b).l2_norm() / den if den > 0 else (a - b).l2_norm()


def write_outputs(field: ComplexField, stem: str, cfg: RunConfig) -> list[str]:
    base = Path(cfg.output_dir)
    base.mkdir(parents=True, exist_ok=True)
    formats = {f.strip() for f in cfg.formats.split(",") if f.strip()}
    written = []
    if "binary" in formats:
        write_field(field, base / f"{stem}.mnvf")
        written.append(str(base / f"{stem}.mnvf"))
    if "csv" in formats:
        write_csv(field, base / f"{stem}.csv")
        written.append(str(base / f"{stem}.csv"))
    return written


def write_report(report: dict, name: str, cfg: RunConfig) -> Path:
    base = Path(cfg.output_dir)
    base.mkdir(parents=True, exist_ok=True)
    path = base / f"{name}.json"
    body = {"schema": SCHEMA, **report, "timestamp": time.strftime("%Y-%m-%dT%H:%M:%S%z")}
    atomic_write(path, (json.dumps(body, indent=2, sort_keys=True, default=_json_default) + "\n").encode())
    return path


def _json_default(obj):
    if isinstance(obj, (np.floating, np.integer)):
        return obj.item()
    if isinstance(obj, complex):
        return [obj.real, obj.imag]
    raise TypeError(f"cannot serialise {type(obj).__name__}")


def _stats_report(stats: TransformStats) -> dict:
    return {
        "iterations_histogram": stats.histogram(),
        "max_residual": stats.max_residual,
        "krylov_nodes": stats.krylov_nodes,
    }


# commands


def cmd_transform(args, cfg: RunConfig) -> int:
    tcfg = cfg.transform_config()
    stats = TransformStats()
    reference = read_field(args.compare) if args.compare else None
    if args.inverse:
        data = load_input(cfg, tcfg.k_grid)
        result = inverse_scatter(data, tcfg, stats)
        stem = args.output or "u"
    else:
        data = load_input(cfg, tcfg.z_grid)
        result = forward_scatter(data, tcfg, stats)
        stem = args.output or "r"
    report = {
        "command": "transform",
        "direction": "inverse" if args.inverse else "direct",
        "grids": cfg.grids(),
        "solver": _stats_report(stats),
        "output_norm": result.l2_norm(),
    }
    if args.save_input:
        write_field(data, args.save_input)
    if reference is not None:
        report["compare"] = {"path": args.compare, "relative_error": _relative(result, reference)}
    report["files"] = write_outputs(result, stem, cfg)
    write_report(report, stem, cfg)
    print(json.dumps({k: report[k] for k in ("direction", "output_norm")} | (
        {"relative_error": report["compare"]["relative_error"]} if args.compare else {})))
    return EXIT_OK


def cmd_evolve(args, cfg: RunConfig) -> int:
    tcfg = cfg.transform_config()
    u0 = load_input(cfg, tcfg.z_grid)
    stats = TransformStats()
    r = forward_scatter(u0, tcfg, stats)
    rt = rotate(r, cfg.t, cfg.phase)
    ut = inverse_scatter(rt, tcfg, stats)
    linear = lin_inverse(
        ComplexField(tcfg.k_grid, lin_forward(u0, tcfg.k_grid).values
                     * np.exp(1j * cfg.t * phase_field(tcfg.k_grid, cfg.phase))),
        tcfg.z_grid,
    )
    report = {
        "command": "evolve",
        "phase": cfg.phase,
        "t": cfg.t,
        "grids": cfg.grids(),
        "solver": _stats_report(stats),
        "data_norm": r.l2_norm(),
        "rotated_data_norm": rt.l2_norm(),
        "linear_oracle_relative_error": _relative(ut, linear),
        "initial_relative_change": _relative(ut, u0),
    }
    stem = args.output or "u_t"
    report["files"] = write_outputs(ut, stem, cfg)
    write_report(report, stem, cfg)
    print(json.dumps({k: report[k] for k in ("phase", "t", "linear_oracle_relative_error",
                                             "data_norm", "rotated_data_norm")}))
    return EXIT_OK


def cmd_residual(args, cfg: RunConfig) -> int:
    tcfg = cfg.transform_config()
    u0 = load_input(cfg, tcfg.z_grid)
    _, rep = mnv_residual(u0, cfg.t, cfg.delta, tcfg)
    report = {
        "command": "residual",
        "grids": cfg.grids(),
        "residual_norm": rep.residual_norm,
        "d3_norm": rep.d3_norm,
        "nonlinear_norm": rep.nonlinear_norm,
        "ratio": rep.ratio,
        "delta": rep.delta,
        "t": rep.t,
        "tol": args.tol,
        "passed": rep.ratio <= args.tol,
    }
    write_report(report, args.output or "residual", cfg)
    print(json.dumps({k: report[k] for k in ("residual_norm", "d3_norm", "nonlinear_norm", "ratio", "passed")}))
    return EXIT_OK if report["passed"] else EXIT_CHECK


def cmd_derive(args, cfg: RunConfig) -> int:
    from .symbolic import DerivationError, check_golden, derive_mnv, plain_coefficients

    try:
        derivation = derive_mnv()
    except DerivationError as exc:
        print(f"derivation failed: {exc}", file=sys.stderr)
        return EXIT_DERIVATION

    report: dict = {"command": "derive"}
    lines: list[str] = []
    if args.level is not None:
        nu1, nu2 = plain_coefficients(args.level)
        if args.family == "sharp":
            nu1, nu2 = [c.sharp() for c in nu1], [c.sharp() for c in nu2]
        prefix = "nus" if args.family == "sharp" else "nu"
        for name, expr in ((f"{prefix}1{args.level}", nu1[-1]), (f"{prefix}2{args.level}", nu2[-1])):
            lines.append(f"{name} = {expr}")
            report[name] = str(expr)
    else:
        families = {"nu1": derivation.nu1, "nu2": derivation.nu2,
                    "nus1": derivation.nus1, "nus2": derivation.nus2}
        for prefix, fam in families.items():
            for level, expr in enumerate(fam):
                lines.append(f"{prefix}{level} = {expr}")
                report[f"{prefix}{level}"] = str(expr)
        for name in ("bracket_plain", "bracket_conj"):
            expr = getattr(derivation, name)
            report[name] = str(expr)
            report[f"{name}_orders_5_7_zero"] = expr.part(5).is_zero() and expr.part(7).is_zero()
            lines.append(f"{name} = {expr}")
            lines.append(f"{name}: order-5 and order-7 parts vanish: {report[f'{name}_orders_5_7_zero']}")
    coefficients = sorted({str(c) for c, *_ in derivation.folded})
    report["equation"] = f"u_t + d(d(d(u))) + db(db(db(u))) = {derivation.folded_text()}"
    report["final_terms"] = len(derivation.folded)
    report["final_coefficients"] = coefficients
    lines.append(report["equation"])
    lines.append(f"final terms: {len(derivation.folded)}, coefficients {', '.join(coefficients)}")

    status = EXIT_OK
    if args.check_golden:
        results = check_golden()
        report["golden"] = {name: ok for name, ok, _ in results}
        for name, ok, diff in results:
            lines.append(f"golden {name}: {'ok' if ok else 'MISMATCH, first differing term ' + diff}")
            if not ok:
                status = EXIT_DERIVATION
    print("\n".join(lines))
    if args.json:
        cfg.output_dir = str(Path(args.json).parent)
        write_report(report, Path(args.json).stem, cfg)
    return status


def cmd_verify(args, cfg: RunConfig) -> int:
    tcfg = cfg.transform_config()
    selected = args.only or list(checks.ALL_CHECKS)
    results = []
    for name in selected:
        if name == "symmetry":
            res = checks.symmetry_check(tcfg)
        elif name == "eta":
            res = checks.eta_check(tcfg.solver, tcfg.k_grid)
        elif name == "residue":
            res = checks.residue_check(tcfg.k_grid)
        else:
            res = checks.bridge_check(tcfg)
        print(res.line())
        results.append(res)
    passed = all(r.passed for r in results)
    write_report({"command": "verify", "grids": cfg.grids(), "passed": passed,
                  "checks": [r.as_dict() for r in results]}, args.output or "verify", cfg)
    return EXIT_OK if passed else EXIT_CHECK


# parser


def _common(parser: argparse.ArgumentParser, io: bool = True) -> None:
    g = parser.add_argument_group("settings (override the config file)")
    g.add_argument("--config", help="key = value settings file")
    g.add_argument("--threads", type=int, help="FFT worker threads (default: all cores)")
    g.add_argument("--z-L", dest="z_L", type=float)
    g.add_argument("--z-N", dest="z_N", type=int)
    g.add_argument("--k-L", dest="k_L", type=float)
    g.add_argument("--k-N", dest="k_N", type=int)
    g.add_argument("--tolerance", type=float)
    g.add_argument("--max-iterations", dest="max_iterations", type=int)
    g.add_argument("--method", choices=("born", "krylov"))
    g.add_argument("--output-dir", dest="output_dir")
    g.add_argument("--output", help="file stem for outputs")
    if io:
        g.add_argument("--input", help="field file (.mnvf)")
        g.add_argument("--potential", help="gaussian:A,sigma,z0 or gauss2:A1,s1,z1,A2,s2,z2")
        g.add_argument("--amplitude", type=float, help="amplitude of the default unit Gaussian")
        g.add_argument("--formats", help="comma list from binary,csv")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="dsmnv", description=__doc__.split("\n\n")[0])
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("transform", help="direct or inverse scattering transform")
    way = p.add_mutually_exclusive_group(required=True)
    way.add_argument("--direct", action="store_true")
    way.add_argument("--inverse", action="store_true")
    p.add_argument("--compare", help="reference field; report the relative L2 error against it")
    p.add_argument("--save-input", dest="save_input", help="also write the input field here")
    _common(p)

    p = sub.add_parser("evolve", help="evolve a potential through its scattering data")
    p.add_argument("--phase", choices=PHASES)
    p.add_argument("--t", type=float)
    _common(p)

    p = sub.add_parser("residual", help="residual of the mNV equation along the evolved solution")
    p.add_argument("--t", type=float)
    p.add_argument("--delta", type=float)
    p.add_argument("--tol", type=float, default=0.05)
    _common(p)

    p = sub.add_parser("derive", help="symbolic expansion coefficients and the equation of motion")
    p.add_argument("--check-golden", action="store_true")
    p.add_argument("--level", type=int, choices=range(4))
    p.add_argument("--family", choices=("plain", "sharp"), default="plain")
    p.add_argument("--json", help="also write the report to this path")
    _common(p, io=False)

    p = sub.add_parser("verify", help="property checks with one pass/fail line each")
    p.add_argument("--only", action="append", choices=tuple(checks.ALL_CHECKS))
    _common(p, io=False)
    return parser


COMMANDS = {
    "transform": cmd_transform,
    "evolve": cmd_evolve,
    "residual": cmd_residual,
    "derive": cmd_derive,
    "verify": cmd_verify,
}


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        cfg = build_config(args)
        set_fft_workers(max(1, cfg.threads))
        return COMMANDS[args.command](args, cfg)
    except NonConvergence as exc:
        print(f"solver did not converge at node {exc.node}: residual {exc.residual:.3e}", file=sys.stderr)
        return EXIT_SOLVER
    except (OSError, FieldFormatError) as exc:
        print(f"i/o error: {exc}", file=sys.stderr)
        return EXIT_IO
    except ConfigError as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return EXIT_IO


if __name__ == "__main__":
    sys.exit(main())
