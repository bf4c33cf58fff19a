"""Command-line entry point.

Exit codes: 0 success, 1 runtime error, 2 validation error,
3 verification failure.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from .config import ConfigError, RunSpec, parse_config, parse_text
from .protocol import run_protocol, stage1, sweep
from .traces import TraceFile, dumps, protocol_rows, stage1_rows

EXIT_OK, EXIT_RUNTIME, EXIT_VALIDATION, EXIT_VERIFY = 0, 1, 2, 3

# Parameter family behind each figure id.
FIGURES = {
    "fig2": {"kind": "stage1", "vary": "omegaM", "values": (0.5, 1.0, 1.5, 10.0, 30.0, 50.0), "G": 2.0},
    "fig3": {"kind": "stage1", "vary": "G", "values": (2.0, 2.5, 3.0), "omegaM": 0.5},
    "fig4": {"kind": "protocol", "vary": "G", "values": (1.0, 2.0), "omegaM": 0.5, "t": 0.8},
    "fig5": {"kind": "protocol", "vary": "omegaM", "values": (0.5, 1.0), "G": 1.0, "t": 0.8},
}


def _header(spec: RunSpec, command: str, **extra) -> dict:
    params = spec.echo()
    params.pop("out", None)
    params["command"] = command
    params.update(extra)
    return params


def cmd_stage1(spec: RunSpec) -> TraceFile:
    result = stage1(spec.to_params(), spec.t_grid)
    return TraceFile(_header(spec, "stage1"), stage1_rows(result))


def cmd_protocol(spec: RunSpec) -> TraceFile:
    result = run_protocol(spec.to_params(), spec.t, spec.tau_grid, spec.t_grid)
    header = _header(spec, "protocol", handoff_probability=result.handoff_probability)
    return TraceFile(header, protocol_rows(result, tau_grid=spec.tau_grid))


def cmd_sweep(spec: RunSpec) -> dict[str, TraceFile]:
    if spec.sweep_param is None:
        raise ConfigError("sweep needs sweep_param and sweep_values", field="sweep_param")
    results = sweep(
        spec.to_params(), spec.sweep_param, spec.sweep_values, spec.t, spec.tau_grid, spec.t_grid
    )
    files = {}
    for value, result in zip(spec.sweep_values, results):
        header = _header(spec, "sweep", sweep_value=value,
                         handoff_probability=result.handoff_probability)
        rows = protocol_rows(result, tau_grid=spec.tau_grid)
        files[f"sweep_{spec.sweep_param}={value:g}"] = TraceFile(header, rows)
    return files


def cmd_figure(fig_id: str, grid_points: int = 2001) -> dict[str, TraceFile]:
    """Trace files reproducing one figure family, keyed by file stem."""
    if fig_id not in FIGURES:
        raise ConfigError(f"unknown figure id; choose from {sorted(FIGURES)}", field="figure")
    fig = FIGURES[fig_id]
    files = {}
    for value in fig["values"]:
        omega_m = value if fig["vary"] == "omegaM" else fig["omegaM"]
        g = value if fig["vary"] == "G" else fig["G"]
        spec = RunSpec(omega_m=omega_m, g=g, t=fig.get("t", 0.8),
                       grid_points=grid_points, tau_points=grid_points)
        header = _header(spec, "figure", figure=fig_id)
        if fig["kind"] == "stage1":
            rows = stage1_rows(stage1(spec.to_params(), spec.t_grid), include_amplitudes=False)
        else:
            result = run_protocol(spec.to_params(), spec.t, spec.tau_grid, spec.t_grid)
            header["handoff_probability"] = result.handoff_probability
            rows = protocol_rows(result, include_stage1=False, tau_grid=spec.tau_grid)
        files[f"{fig_id}_{fig['vary']}={value:g}"] = TraceFile(header, rows)
    return files


def cmd_verify(spec: RunSpec, s_fault: float = 0.0) -> tuple[int, dict]:
    from .verification import run_verification

    report = run_verification(spec, s_fault=s_fault)
    return (EXIT_OK if report.passed else EXIT_VERIFY), report.to_dict()


def _parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", metavar="PATH", help="key = value run configuration")
    common.add_argument("--out", metavar="PATH", help="output file (directory for sweep/figure)")
    common.add_argument("--format", choices=("csv", "json"))
    common.add_argument("--grid-points", type=int, metavar="N")
    common.add_argument("--t", type=float, metavar="VALUE", help="stage-1 handoff time lambda1 t")
    common.add_argument("--omega-m", type=float, metavar="VALUE", help="omegaM / lambda1")
    common.add_argument("--g", type=float, metavar="VALUE", help="G / lambda1")

    parser = argparse.ArgumentParser(
        prog="optorepeater",
        description="Optomechanical quantum-repeater simulation.",
    )
    sub = parser.add_subparsers(dest="command", required=True)
    sub.add_parser("stage1", parents=[common], help="entropy/probability of the (1,4) pair")
    sub.add_parser("protocol", parents=[common], help="full protocol for the (1,8) pair")
    sub.add_parser("sweep", parents=[common], help="protocol over a parameter sweep")
    fig = sub.add_parser("figure", parents=[common], help="data for one figure family")
    fig.add_argument("fig_id", choices=sorted(FIGURES))
    ver = sub.add_parser("verify", parents=[common], help="run the numerical self-checks")
    ver.add_argument("--inject-s-fault", type=float, default=0.0, help=argparse.SUPPRESS)
    return parser


def _spec_from_args(args, defaults: dict | None = None) -> RunSpec:
    overrides = {
        "omega_m": args.omega_m,
        "g": args.g,
        "t": args.t,
        "grid_points": args.grid_points,
        "tau_points": args.grid_points,
        "format": args.format,
        "out": args.out,
    }
    if args.config:
        return parse_config(args.config, overrides)
    text = "\n".join(f"{k} = {v}" for k, v in (defaults or {}).items())
    return parse_text(text, overrides)


def _emit(text: str, out: str | None) -> None:
    if out is None:
        sys.stdout.write(text)
    else:
        Path(out).write_text(text, newline="")


def _emit_many(files: dict[str, TraceFile], out: str, fmt: str) -> None:
    directory = Path(out)
    directory.mkdir(parents=True, exist_ok=True)
    for stem, trace in files.items():
        (directory / f"{stem}.{fmt}").write_text(dumps(trace, fmt), newline="")


def main(argv=None) -> int:
    args = _parser().parse_args(argv)
    try:
        if args.command == "figure":
            fmt = args.format or "csv"
            files = cmd_figure(args.fig_id, args.grid_points or 2001)
            _emit_many(files, args.out or f"{args.fig_id}_data", fmt)
            return EXIT_OK
        if args.command == "verify":
            spec = _spec_from_args(args, defaults={"omega_m": 0.5, "g": 2.0})
            code, report = cmd_verify(spec, s_fault=args.inject_s_fault)
            _emit(json.dumps(report, indent=1) + "\n", spec.out)
            return code
        spec = _spec_from_args(args)
        if args.command == "stage1":
            _emit(dumps(cmd_stage1(spec), spec.format), spec.out)
        elif args.command == "protocol":
            _emit(dumps(cmd_protocol(spec), spec.format), spec.out)
        elif args.command == "sweep":
            _emit_many(cmd_sweep(spec), spec.out or "sweep_data", spec.format)
        return EXIT_OK
    except (ConfigError, ValueError) as err:
        print(f"error: {err}", file=sys.stderr)
        return EXIT_VALIDATION
    except Exception as err:  # noqa: BLE001
        print(f"runtime error: {err}", file=sys.stderr)
        return EXIT_RUNTIME


if __name__ == "__main__":
    sys.exit(main())
