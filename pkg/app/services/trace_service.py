"""Trazas de revocación: generador sintético, importación CSV y series diarias."""
from __future__ import annotations

import csv
import logging
import math
import random
from collections import defaultdict
from pathlib import Path
from typing import Iterable, Iterator

from app.core.crypto import hash_data
from app.core.errors import ScenarioInvalid
from app.schemas.authdict import CA_ID_SIZE, ca_id_from_hex, validate_serial
from app.schemas.simulation import RevocationEvent, RevocationTrace, TraceParams
from app.services.authdict_service import storage_size


logger = logging.getLogger(__name__)

SERIAL_MIN = 0x010000
SERIAL_MAX = 0xFFFFFF
SERIAL_BYTES = 3
CSV_HEADER = ("timestamp", "ca_id", "serial_hex")


def trace_ca_ids(count: int) -> list[bytes]:
    return [hash_data(f"ca-{i}".encode())[:CA_ID_SIZE] for i in range(count)]


def daily_intensity(params: TraceParams, day: float) -> float:
    """Multiplicador sobre la tasa base; en `heartbleed` una campana centrada en burst_day."""
    if params.profile != "heartbleed":
        return 1.0
    bump = math.exp(-((day - params.burst_day) ** 2) / (2 * params.burst_width_days**2))
    return 1.0 + (params.burst_multiple - 1.0) * bump


def _stochastic_round(value: float, rng: random.Random) -> int:
    whole = math.floor(value)
    return whole + (1 if rng.random() < value - whole else 0)


def _fresh_serial(rng: random.Random, used: set[int]) -> bytes:
    if len(used) >= SERIAL_MAX - SERIAL_MIN + 1:
        raise ScenarioInvalid("Espacio de series de 3 bytes agotado para una CA", location="trace.mean_per_ca")
    while True:
        value = rng.randint(SERIAL_MIN, SERIAL_MAX)
        if value not in used:
            used.add(value)
            return value.to_bytes(SERIAL_BYTES, "big")


def iter_trace(params: TraceParams, seed: int) -> Iterator[RevocationEvent]:
    """Eventos ordenados por tiempo, generados día a día."""
    if params.profile in ("none", "csv") or params.mean_per_ca <= 0:
        return
    rng = random.Random(seed)
    ca_ids = trace_ca_ids(params.cas)
    # Cada CA tiene su propio volumen total alrededor de la media (desviación del 10 %)
    totals = [max(0.0, rng.gauss(params.mean_per_ca, 0.1 * params.mean_per_ca)) for _ in ca_ids]
    used: list[set[int]] = [set() for _ in ca_ids]
    days = math.ceil(params.duration_days)
    for day in range(days):
        fraction = min(1.0, params.duration_days - day)
        intensity = daily_intensity(params, day + 0.5)
        batch: list[RevocationEvent] = []
        for i, ca_id in enumerate(ca_ids):
            expected = totals[i] / params.duration_days * fraction * intensity
            for _ in range(_stochastic_round(expected, rng)):
                offset = (day + rng.random() * fraction) * params.day_seconds
                batch.append(RevocationEvent(params.start + offset, ca_id, _fresh_serial(rng, used[i])))
        batch.sort(key=lambda e: (e.timestamp, e.ca_id, e.serial))
        yield from batch


def generate_trace(profile: str, params: TraceParams, seed: int) -> RevocationTrace:
    params = params.model_copy(update={"profile": profile})
    events = list(iter_trace(params, seed))
    logger.info(f"Traza {profile}: {len(events):,} revocaciones para {params.cas} CAs (semilla {seed})")
    # Los eventos ya salen válidos del generador
    return RevocationTrace.model_construct(events=events)


def validate_trace(events: Iterable[RevocationEvent], source: str = "trace") -> RevocationTrace:
    seen: dict[bytes, set[bytes]] = defaultdict(set)
    previous = -math.inf
    checked: list[RevocationEvent] = []
    for i, event in enumerate(events, start=1):
        if event.timestamp < previous:
            raise ScenarioInvalid("Marcas de tiempo decrecientes", location=f"{source}:{i}")
        if event.serial in seen[event.ca_id]:
            raise ScenarioInvalid(f"Serie {event.serial.hex()} repetida para la CA {event.ca_id.hex()}", location=f"{source}:{i}")
        seen[event.ca_id].add(event.serial)
        previous = event.timestamp
        checked.append(event)
    return RevocationTrace.model_construct(events=checked)


def load_trace_csv(path: str | Path) -> RevocationTrace:
    path = Path(path)
    events: list[RevocationEvent] = []
    locations: list[str] = []
    with path.open(newline="", encoding="utf-8") as handle:
        for line_number, row in enumerate(csv.reader(handle), start=1):
            if not row or row[0].startswith("#") or tuple(c.strip() for c in row) == CSV_HEADER:
                continue
            location = f"{path}:{line_number}"
            if len(row) != 3:
                raise ScenarioInvalid("Se esperaban 3 columnas: timestamp,ca_id,serial_hex", location=location)
            try:
                event = RevocationEvent(float(row[0]), ca_id_from_hex(row[1].strip()), validate_serial(bytes.fromhex(row[2].strip())))
            except ValueError as exc:
                raise ScenarioInvalid(f"Fila inválida: {exc}", location=location)
            events.append(event)
            locations.append(location)
    try:
        return validate_trace(events, source=str(path))
    except ScenarioInvalid as exc:
        # La posición del validador es el número de evento; se traduce a la línea del fichero
        index = int(exc.location.rsplit(":", 1)[1]) - 1
        raise ScenarioInvalid(str(exc), location=locations[index])


def save_trace_csv(trace: RevocationTrace, path: str | Path) -> None:
    with Path(path).open("w", newline="", encoding="utf-8") as handle:
        writer = csv.writer(handle)
        writer.writerow(CSV_HEADER)
        for event in trace.events:
            writer.writerow([f"{event.timestamp:.3f}", event.ca_id.hex(), event.serial.hex()])


def revocations_per_day(trace: RevocationTrace, day_seconds: float = 86_400.0, start: float = 0.0) -> list[tuple[int, int]]:
    counts: dict[int, int] = defaultdict(int)
    for event in trace.events:
        counts[int((event.timestamp - start) // day_seconds)] += 1
    if not counts:
        return []
    return [(day, counts.get(day, 0)) for day in range(min(counts), max(counts) + 1)]


def measure_storage(trace: RevocationTrace) -> int:
    """Bytes en disco de todas las réplicas que resultan de la traza (formato de almacenamiento)."""
    by_ca: dict[bytes, list[bytes]] = defaultdict(list)
    for event in trace.events:
        by_ca[event.ca_id].append(event.serial)
    return sum(storage_size(serials) for serials in by_ca.values())
