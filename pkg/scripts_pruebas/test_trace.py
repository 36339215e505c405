"""Trazas de revocación: generador, CSV, series diarias y almacenamiento."""
import pytest

from app.core.errors import ScenarioInvalid
from app.schemas.simulation import RevocationEvent, RevocationTrace, TraceParams
from app.services.trace_service import (
    daily_intensity,
    generate_trace,
    load_trace_csv,
    measure_storage,
    revocations_per_day,
    save_trace_csv,
    trace_ca_ids,
    validate_trace,
)


STEADY = TraceParams(cas=5, mean_per_ca=40, duration_days=4, day_seconds=100)


def test_generator_is_deterministic():
    first = generate_trace("steady", STEADY, seed=3)
    assert first.events == generate_trace("steady", STEADY, seed=3).events
    assert first.events != generate_trace("steady", STEADY, seed=4).events


def test_generated_trace_is_valid_and_bounded():
    trace = generate_trace("steady", STEADY, seed=1)
    validate_trace(trace.events)
    assert {e.ca_id for e in trace.events} <= set(trace_ca_ids(5))
    assert all(0 <= e.timestamp < 400 for e in trace.events)
    assert all(len(e.serial) == 3 and e.serial[0] != 0 for e in trace.events)
    # Alrededor de 5 × 40 revocaciones
    assert 120 <= len(trace) <= 280


def test_empty_profiles():
    assert len(generate_trace("none", STEADY, seed=1)) == 0
    assert len(generate_trace("steady", STEADY.model_copy(update={"mean_per_ca": 0}), seed=1)) == 0


def test_heartbleed_burst_peaks_on_burst_day():
    params = TraceParams(profile="heartbleed", cas=20, mean_per_ca=200, duration_days=6, day_seconds=100, burst_day=3, burst_multiple=10, burst_width_days=0.5)
    assert daily_intensity(params, 3) == pytest.approx(10.0)
    assert daily_intensity(STEADY, 3) == 1.0
    per_day = revocations_per_day(generate_trace("heartbleed", params, seed=2), day_seconds=100)
    counts = [count for _, count in per_day]
    assert counts.index(max(counts)) in (2, 3)
    assert max(counts) > 3 * min(counts)


def test_revocations_per_day_fills_quiet_days():
    ca = trace_ca_ids(1)[0]
    trace = RevocationTrace(events=[RevocationEvent(5.0, ca, b"\x01"), RevocationEvent(250.0, ca, b"\x02")])
    assert revocations_per_day(trace, day_seconds=100) == [(0, 1), (1, 0), (2, 1)]
    assert revocations_per_day(RevocationTrace(), day_seconds=100) == []


def test_csv_roundtrip(tmp_path):
    trace = generate_trace("steady", STEADY, seed=5)
    path = tmp_path / "traza.csv"
    save_trace_csv(trace, path)
    loaded = load_trace_csv(path)
    assert [(e.ca_id, e.serial) for e in loaded.events] == [(e.ca_id, e.serial) for e in trace.events]


@pytest.mark.parametrize(
    "rows, line",
    [
        (["1.0,1111111111111111,0a", "0.5,1111111111111111,0b"], 3),
        (["1.0,1111111111111111,0a", "2.0,1111111111111111,0a"], 3),
        (["1.0,1111111111111111"], 2),
        (["1.0,11,0a"], 2),
        (["1.0,1111111111111111,000a"], 2),
    ],
)
def test_csv_errors_point_to_the_line(tmp_path, rows, line):
    path = tmp_path / "mala.csv"
    path.write_text("\n".join(["timestamp,ca_id,serial_hex", *rows]) + "\n", encoding="utf-8")
    with pytest.raises(ScenarioInvalid) as excinfo:
        load_trace_csv(path)
    assert excinfo.value.location == f"{path}:{line}"


def test_csv_skips_comments(tmp_path):
    path = tmp_path / "traza.csv"
    path.write_text("# generada a mano\n1.0,1111111111111111,0a\n", encoding="utf-8")
    assert len(load_trace_csv(path)) == 1


@pytest.mark.slow
def test_steady_year_storage_fits_in_eight_megabytes():
    params = TraceParams(cas=254, mean_per_ca=5440, duration_days=365, day_seconds=86_400)
    trace = generate_trace("steady", params, seed=0)
    total = measure_storage(trace)
    assert 4_000_000 < total <= 8 * 1024 * 1024
