"""Command-line interface.

Subcommands: ``point`` (one grid cell), ``sweep`` (full grid to CSV),
``limits`` (adiabatic / sudden-quench reference values), ``validate``
(invariant suite), ``summarize`` (extrema of a persisted sweep).

Exit codes: 0 success, 1 validation failure, 2 usage error, 3 numerical
failure, 4 I/O error.
"""

from __future__ import annotations

import argparse
import sys

import numpy as np

from .approximations import (
    ApproximationScheme,
    exact_ni_adiabatic_work,
)
from .drives import build_drive
from .errors import DomainError, NumericalFailureError, SweepFormatError
from .lattice import ChainSpec, assemble_hamiltonian, build_sector_basis
from .metrics import adiabatic_work, sudden_quench_work
from .spectra import diagonalize, thermal_populations, thermal_state
from .sweep import SweepConfig, SweepResult, load, run_sweep, summarize
from .validation import run_validation

EXIT_OK = 0
EXIT_VALIDATION = 1
EXIT_USAGE = 2
EXIT_NUMERICAL = 3
EXIT_IO = 4


def _add_cell_flags(p: argparse.ArgumentParser, need_tau: bool = True) -> None:
    p.add_argument("--L", type=int, required=True, help="chain length (even, half-filled)")
    p.add_argument("--drive", choices=("comb", "mi", "aef", "custom"), required=True)
    p.add_argument("--mu0", type=str, help="comma-separated mu0 vector for --drive custom")
    p.add_argument("--mutau", type=str, help="comma-separated mutau vector for --drive custom")
    temp = p.add_mutually_exclusive_group(required=True)
    temp.add_argument("--T", type=float, help="temperature (J/k_B)")
    temp.add_argument("--beta", type=float, help="inverse temperature (1/J)")
    p.add_argument("--U", type=float, required=True, help="interaction strength (J)")
    if need_tau:
        p.add_argument("--tau", type=float, required=True, help="total drive time (1/J)")
    p.add_argument("--steps", type=int, default=2000, help="propagator steps (default 2000)")
    p.add_argument("--tol", type=float, help="auto step count: double until the probe moves < tol")


def _beta_T(args) -> tuple[float, float]:
    if args.T is not None:
        if args.T <= 0:
            raise DomainError("--T must be positive")
        return 1.0 / args.T, args.T
    if args.beta <= 0:
        raise DomainError("--beta must be positive")
    return args.beta, 1.0 / args.beta


def _parse_vector(text: str | None, L: int, flag: str) -> tuple[float, ...]:
    if text is None:
        raise DomainError(f"--drive custom requires {flag}")
    try:
        values = tuple(float(x) for x in text.split(","))
    except ValueError as exc:
        raise DomainError(f"{flag} must be comma-separated floats: {exc}") from exc
    if len(values) != L:
        raise DomainError(f"{flag} must have L={L} entries, got {len(values)}")
    return values


def _custom_kwargs(args) -> dict:
    if args.drive != "custom":
        return {}
    return {
        "mu0": _parse_vector(args.mu0, args.L, "--mu0"),
        "mutau": _parse_vector(args.mutau, args.L, "--mutau"),
    }


def _print_record(rec) -> None:
    print(
        f"drive={rec.drive} T={rec.T:g} J/k_B beta={rec.beta:g} 1/J "
        f"U={rec.U:g} J tau={rec.tau:g} 1/J method={rec.method} steps={rec.steps}"
    )
    print(f"W_avg={rec.W_avg:.12g} J")
    print(f"W_ext={rec.W_ext:.12g} J")
    print(f"dF={rec.dF:.12g} J")
    print(f"dS={rec.dS:.12g} dimensionless")
    print(f"clamped={int(rec.clamped)}")


def _cmd_point(args) -> int:
    beta, T = _beta_T(args)
    method = args.method
    if args.drive == "custom":
        # custom drives do not go through the sweep engine
        from .approximations import (
            _tagged_spec,
            approx_work,
            build_cell_operators,
            record_from_propagator,
        )
        from .drives import converged_propagate
        from .lattice import build_sector_basis

        scheme = ApproximationScheme.from_label(method)
        spec = ChainSpec.half_filling(args.L, U=args.U)
        drive = build_drive("custom", args.L, tau=args.tau, **_custom_kwargs(args))
        if args.tol is not None:
            basis = build_sector_basis(spec)
            evo_spec = _tagged_spec(spec, scheme.evo_tag)
            prop = converged_propagate(evo_spec, basis, drive, beta, args.tol)
            ops = build_cell_operators(scheme, spec, basis, drive, beta)
            rec = record_from_propagator(ops, prop, spec, drive, T, beta)
        else:
            rec = approx_work(scheme, spec, drive, beta, args.steps, T=T)
        _print_record(rec)
        return EXIT_OK
    config = SweepConfig(
        L=args.L, drives=(args.drive,), temperatures=(T,),
        U_values=(args.U,), tau_values=(args.tau,),
        steps=args.steps, tol=args.tol, methods=(method,), workers=1,
    )
    result = run_sweep(config)
    for rec in result.records:
        _print_record(rec)
    return EXIT_OK


def _cmd_sweep(args) -> int:
    if args.config:
        config = SweepConfig.from_file(args.config)
    elif args.preset_L:
        config = SweepConfig.paper_preset(args.preset_L)
    else:
        raise DomainError("sweep needs --config FILE or --preset-L N")
    overrides = {}
    if args.output:
        overrides["output"] = args.output
    if args.workers:
        overrides["workers"] = args.workers
    if args.steps is not None:
        overrides["steps"] = args.steps
    if overrides:
        from dataclasses import replace

        config = replace(config, **overrides)
    if not config.output:
        raise DomainError("sweep needs an output path (config key 'output' or --output)")

    total_cells = config.n_cells()
    print(f"sweep: {total_cells} cells "
          f"({len(config.drives)} drives x {len(config.temperatures)} T x "
          f"{len(config.U_values)} U x {len(config.tau_values)} tau x "
          f"{len(config.methods)} methods)")

    def progress(done: int, total: int) -> None:
        print(f"progress: {done}/{total} groups", flush=True)

    result = run_sweep(config, progress=progress)
    print(f"wrote {config.output} ({len(result.records)} records)")
    _print_summary(summarize(result))
    return EXIT_OK


def _fmt_coord(coord: tuple[float | None, float]) -> str:
    u, tau = coord
    u_part = "U=all" if u is None else f"U={u:g}"
    return f"({u_part}, tau={tau:g})"


def _print_summary(entries) -> None:
    for e in entries:
        print(
            f"summary drive={e.drive} T={e.T:g} method={e.method} "
            f"W_ext[min={e.w_ext_min:.6g} J at {_fmt_coord(e.w_ext_min_at)}, "
            f"max={e.w_ext_max:.6g} J at {_fmt_coord(e.w_ext_max_at)}] "
            f"dS[min={e.ds_min:.6g} at {_fmt_coord(e.ds_min_at)}, "
            f"max={e.ds_max:.6g} at {_fmt_coord(e.ds_max_at)}]"
        )


def _cmd_limits(args) -> int:
    beta, T = _beta_T(args)
    spec = ChainSpec.half_filling(args.L, U=args.U)
    basis = build_sector_basis(spec)
    tau_ref = 1.0  # the limit formulas do not involve tau
    drive = build_drive(args.drive, args.L, tau=tau_ref, **_custom_kwargs(args))
    v0 = np.asarray(drive.mu0)
    vf = v0 + np.asarray(drive.mutau)

    H0 = assemble_hamiltonian(basis, spec, v0)
    Hf = assemble_hamiltonian(basis, spec, vf)
    s0, sf = diagonalize(H0), diagonalize(Hf)
    pops = thermal_populations(s0, beta)
    rho0 = thermal_state(s0, beta)

    w_ad_ext = adiabatic_work(s0, pops, sf)
    w_sq = sudden_quench_work(rho0, H0, Hf)

    ni_spec = ChainSpec.half_filling(args.L, U=0.0)
    H0n = assemble_hamiltonian(basis, ni_spec, v0)
    Hfn = assemble_hamiltonian(basis, ni_spec, vf)
    s0n, sfn = diagonalize(H0n), diagonalize(Hfn)
    w9 = exact_ni_adiabatic_work(s0, pops, s0n, sfn)
    w_sq_eni = sudden_quench_work(rho0, H0n, Hfn)

    print(f"drive={args.drive} L={args.L} T={T:g} J/k_B beta={beta:g} 1/J U={args.U:g} J")
    print(f"W_adiabatic_avg={-w_ad_ext:.12g} J")
    print(f"W_adiabatic_ext={w_ad_ext:.12g} J")
    print(f"W_sudden_avg={w_sq:.12g} J")
    print(f"W_sudden_ext={-w_sq:.12g} J")
    print(f"W_adiabatic_exact_ni_avg={w9:.12g} J")
    print(f"W_adiabatic_exact_ni_ext={-w9:.12g} J")
    print(f"W_sudden_exact_ni_avg={w_sq_eni:.12g} J")
    print(f"W_sudden_exact_ni_ext={-w_sq_eni:.12g} J")
    return EXIT_OK


def _cmd_validate(args) -> int:
    results = run_validation(quick=args.quick, inject_fault=args.inject_fault)
    failed = [r for r in results if not r.passed]
    for r in results:
        print(f"check {r.name}: {'PASS' if r.passed else 'FAIL'} ({r.detail})")
    if failed:
        print(f"validation FAILED: {', '.join(r.name for r in failed)}")
        return EXIT_VALIDATION
    print("validation passed")
    return EXIT_OK


def _cmd_summarize(args) -> int:
    result: SweepResult = load(args.input)
    _print_summary(summarize(result))
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="hubbard-thermo",
        description="Work extraction and entropy production in driven Hubbard chains",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("point", help="evaluate one grid cell")
    _add_cell_flags(p)
    p.add_argument("--method", choices=("exact", "ni", "exact-ni"), required=True)
    p.set_defaults(func=_cmd_point)

    p = sub.add_parser("sweep", help="evaluate a grid and write CSV + sidecar")
    p.add_argument("--config", type=str, help="JSON config file")
    p.add_argument("--preset-L", type=int, help="use the production grid at this chain length")
    p.add_argument("--output", type=str, help="CSV output path (overrides config)")
    p.add_argument("--workers", type=int, default=0, help="worker processes (default: cpu count)")
    p.add_argument("--steps", type=int, default=None, help="override propagator steps")
    p.set_defaults(func=_cmd_sweep)

    p = sub.add_parser("limits", help="adiabatic and sudden-quench reference values")
    _add_cell_flags(p, need_tau=False)
    p.set_defaults(func=_cmd_limits)

    p = sub.add_parser("validate", help="run the built-in invariant suite")
    p.add_argument("--quick", action="store_true", help="small grid, completes in under a minute")
    p.add_argument("--inject-fault", choices=("damp-step",), default=None, help=argparse.SUPPRESS)
    p.set_defaults(func=_cmd_validate)

    p = sub.add_parser("summarize", help="print extrema of a persisted sweep")
    p.add_argument("--input", type=str, required=True, help="sweep CSV path")
    p.set_defaults(func=_cmd_summarize)

    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except DomainError as exc:
        print(f"error: {exc}", file=sys.stderr)
        parser.print_usage(sys.stderr)
        return EXIT_USAGE
    except NumericalFailureError as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL
    except SweepFormatError as exc:
        print(f"file format error: {exc}", file=sys.stderr)
        return EXIT_IO
    except OSError as exc:
        print(f"i/o error: {exc}", file=sys.stderr)
        return EXIT_IO


if __name__ == "__main__":
    sys.exit(main())
