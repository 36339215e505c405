"""ritm-sim: ejecuta escenarios y genera trazas de revocación."""
from __future__ import annotations

import argparse
import sys
from pathlib import Path

from app.cli.common import add_log_level, configure_logging
from app.core.errors import ScenarioInvalid
from app.schemas.simulation import TraceParams
from app.services.metrics_service import format_summary, measure_overheads, write_outputs, write_series_dat
from app.services.simulation_service import ScenarioRunner, load_scenario
from app.services.trace_service import generate_trace, load_trace_csv, measure_storage, revocations_per_day, save_trace_csv


def _run(args: argparse.Namespace) -> int:
    scenario = load_scenario(args.scenario)
    if args.seed is not None:
        scenario = scenario.model_copy(update={"seed": args.seed})
    trace = load_trace_csv(args.trace) if args.trace else None
    runner = ScenarioRunner(scenario, trace)
    report = runner.run()
    written = write_outputs(report, args.out, trace=runner.trace, day_seconds=scenario.trace.day_seconds)
    print(format_summary(measure_overheads(report)))
    for path in written:
        print(f"[OK] {path}")
    return 0


def _trace(args: argparse.Namespace) -> int:
    params = TraceParams(
        profile=args.profile,
        cas=args.cas,
        mean_per_ca=args.mean,
        duration_days=args.days,
        burst_day=args.burst_day,
        burst_multiple=args.burst_multiple,
        burst_width_days=args.burst_width,
    )
    trace = generate_trace(args.profile, params, args.seed)
    save_trace_csv(trace, args.out)
    print(f"[OK] {len(trace):,} revocaciones escritas en {args.out}")
    print(f"[INFO] Almacenamiento de réplicas: {measure_storage(trace):,} bytes")
    if args.dat:
        write_series_dat(args.dat, "day revocations", revocations_per_day(trace, params.day_seconds))
        print(f"[OK] Serie diaria en {args.dat}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="ritm-sim", description="Simulador de RITM con reloj simulado")
    add_log_level(parser)
    sub = parser.add_subparsers(dest="command", required=True)

    run = sub.add_parser("run", help="Ejecuta un escenario TOML")
    run.add_argument("scenario", type=Path)
    run.add_argument("--seed", type=int, default=None, help="Sustituye la semilla del escenario")
    run.add_argument("--out", type=Path, default=Path("resultados"))
    run.add_argument("--trace", type=Path, default=None, help="Traza CSV timestamp,ca_id,serial_hex")
    run.set_defaults(handler=_run)

    trace = sub.add_parser("trace", help="Genera una traza sintética")
    trace.add_argument("--profile", choices=["steady", "heartbleed"], default="steady")
    trace.add_argument("--cas", type=int, default=254)
    trace.add_argument("--mean", type=float, default=5_440.0, help="Revocaciones medias por CA")
    trace.add_argument("--days", type=float, default=30.0)
    trace.add_argument("--burst-day", type=float, default=14.0)
    trace.add_argument("--burst-multiple", type=float, default=10.0)
    trace.add_argument("--burst-width", type=float, default=2.0)
    trace.add_argument("--seed", type=int, default=0)
    trace.add_argument("--out", type=Path, default=Path("trace.csv"))
    trace.add_argument("--dat", type=Path, default=None, help="Escribe además revocations_per_day.dat")
    trace.set_defaults(handler=_trace)
    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    configure_logging(args.log_level)
    try:
        return args.handler(args)
    except ScenarioInvalid as exc:
        print(f"[WARN] Escenario inválido en {exc.location}: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
