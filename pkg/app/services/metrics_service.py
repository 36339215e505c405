"""Resumen de sobrecostes y ficheros de salida de una simulación."""
from __future__ import annotations

import csv
import logging
from pathlib import Path
from statistics import fmean
from typing import Sequence

from app.schemas.simulation import MetricsReport, RevocationTrace
from app.services.trace_service import revocations_per_day


logger = logging.getLogger(__name__)

SUMMARY_FIELDS = ("metric", "value")


def _stats(values: Sequence[float]) -> tuple[float, float, float]:
    if not values:
        return 0, 0, 0
    return min(values), round(fmean(values), 3), max(values)


def measure_overheads(report: MetricsReport) -> list[tuple[str, float]]:
    """Tabla (métrica, valor); un sistema vacío da todo a cero."""
    storage = list(report.storage_bytes.values())
    bandwidth = report.bandwidth_per_delta
    latencies = [c.detection_latency for c in report.connections if c.detection_latency is not None]
    bw_min, bw_mean, bw_max = _stats(bandwidth)
    lat_min, lat_mean, lat_max = _stats(latencies)
    phases = [c.phase for c in report.connections]
    return [
        ("revocations", report.revocations),
        ("storage_bytes_max", max(storage, default=0)),
        ("storage_bytes_total", sum(storage)),
        ("bandwidth_per_delta_min", bw_min),
        ("bandwidth_per_delta_mean", bw_mean),
        ("bandwidth_per_delta_max", bw_max),
        ("status_count", report.status_sizes.count),
        ("status_bytes_min", report.status_sizes.minimum),
        ("status_bytes_mean", report.status_sizes.mean),
        ("status_bytes_max", report.status_sizes.maximum),
        ("detection_latency_min", lat_min),
        ("detection_latency_mean", lat_mean),
        ("detection_latency_max", lat_max),
        ("connections_accepted", phases.count("Accepted")),
        ("connections_interrupted", phases.count("Interrupted")),
        ("connections_rejected", phases.count("Rejected")),
        ("misbehavior_proofs", len(report.misbehavior_proofs)),
    ]


def format_summary(rows: Sequence[tuple[str, float]]) -> str:
    width = max((len(name) for name, _ in rows), default=0)
    lines = []
    for name, value in rows:
        shown = f"{value:,.3f}" if isinstance(value, float) and not float(value).is_integer() else f"{int(value):,}"
        lines.append(f"{name.ljust(width)}  {shown}")
    return "\n".join(lines)


def write_summary_csv(rows: Sequence[tuple[str, float]], path: str | Path) -> None:
    with Path(path).open("w", newline="", encoding="utf-8") as handle:
        writer = csv.writer(handle)
        writer.writerow(SUMMARY_FIELDS)
        writer.writerows(rows)


def write_series_dat(path: str | Path, header: str, rows: Sequence[Sequence[float]]) -> None:
    """Serie lista para gnuplot: una cabecera con # y columnas separadas por espacios."""
    with Path(path).open("w", encoding="utf-8") as handle:
        handle.write(f"# {header}\n")
        for row in rows:
            handle.write(" ".join(str(v) for v in row) + "\n")


def write_outputs(report: MetricsReport, out_dir: str | Path, trace: RevocationTrace | None = None, day_seconds: float = 86_400.0) -> list[Path]:
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    rows = measure_overheads(report)
    written = [out / "metrics.csv", out / "events.log", out / "bandwidth_per_delta.dat", out / "report.json"]
    write_summary_csv(rows, written[0])
    written[1].write_text("".join(f"{e.to_line()}\n" for e in report.events), encoding="utf-8")
    write_series_dat(
        written[2],
        f"window bytes (delta={report.delta}s)",
        [(w, size) for w, size in enumerate(report.bandwidth_per_delta)],
    )
    written[3].write_text(report.model_dump_json(indent=2), encoding="utf-8")
    if trace is not None:
        path = out / "revocations_per_day.dat"
        write_series_dat(path, "day revocations", revocations_per_day(trace, day_seconds))
        written.append(path)
    logger.info(f"Resultados de {report.scenario} escritos en {out}")
    return written
