"""Escenarios completos sobre el reloj simulado."""
from pathlib import Path

import pytest

from app.core.errors import ScenarioInvalid
from app.schemas.simulation import RevocationEvent, RevocationTrace
from app.services.monitor_service import proof_from_bytes, verify_misbehavior
from app.services.simulation_service import ScenarioRunner, load_scenario, parse_scenario, run_scenario


ESCENARIOS = Path(__file__).resolve().parent.parent / "scripts_utiles" / "escenarios"

BASELINE = {"name": "baseline", "seed": 1, "duration": 120.0, "delta": 10, "grace": 2.0}
SMALL_TRACE = {"profile": "steady", "mean_per_ca": 30, "duration_days": 1, "day_seconds": 100}
# Retardo de red realista en los dos enlaces de una conexión con una RA
JITTERED_LINKS = [{"link": 0, "delay": 0.05, "jitter": 0.05}, {"link": 1, "delay": 0.05, "jitter": 0.05}]


def _scenario(**overrides):
    return parse_scenario({**BASELINE, **overrides})


def test_baseline_connection_stays_accepted():
    report = run_scenario(_scenario())
    (conn,) = report.connections
    assert conn.phase == "Accepted" and conn.reason is None
    assert conn.accepted_at - report.start == pytest.approx(1.0)
    # Un estado en el handshake y uno por periodo después
    assert report.status_sizes.count >= 11
    assert report.replicas_converged
    assert report.misbehavior_proofs == []
    assert report.bandwidth_per_delta == [24] * 12


def test_legacy_client_gets_no_status():
    report = run_scenario(_scenario(connections=[{"server": 0, "start": 1.0, "ritm": False}]))
    assert report.connections[0].phase == "Accepted"
    assert report.status_sizes.count == 0


def test_chained_agents_deliver_one_status_stream():
    report = run_scenario(_scenario(topology={"ras": 2}, connections=[{"server": 0, "start": 1.0, "path": [0, 1]}]))
    (conn,) = report.connections
    assert conn.phase == "Accepted"
    assert conn.last_valid_status - report.start > 100


def test_race_revocation_interrupts_within_two_periods():
    scenario = _scenario(seed=7, faults={"revoke_server": [{"server": 0, "at": 45.0}]})
    (conn,) = run_scenario(scenario).connections
    assert conn.phase == "Interrupted" and conn.reason == "Revoked"
    assert 0 <= conn.detection_latency <= 2 * scenario.delta + scenario.grace


@pytest.mark.slow
@pytest.mark.parametrize("seed", range(50))
def test_race_latency_bound_over_seeds(seed):
    scenario = _scenario(seed=seed, trace=SMALL_TRACE, faults={"revoke_server": [{"server": 0, "at": 45.0}]})
    (conn,) = run_scenario(scenario).connections
    assert conn.reason == "Revoked"
    assert conn.detection_latency <= 2 * scenario.delta + scenario.delta * scenario.sync_jitter + scenario.grace


@pytest.mark.slow
@pytest.mark.parametrize("seed", range(50))
def test_race_latency_bound_holds_with_link_delays(seed):
    scenario = _scenario(
        seed=seed,
        trace=SMALL_TRACE,
        faults={"revoke_server": [{"server": 0, "at": 45.0}], "delays": JITTERED_LINKS},
    )
    (conn,) = run_scenario(scenario).connections
    assert conn.reason == "Revoked"
    assert conn.detection_latency <= 2 * scenario.delta + scenario.delta * scenario.sync_jitter + scenario.grace


def test_link_delays_shift_the_handshake():
    delays = [{"link": 0, "delay": 0.3}, {"link": 1, "delay": 0.2}]
    report = run_scenario(_scenario(faults={"delays": delays}))
    (conn,) = report.connections
    assert conn.phase == "Accepted"
    # Ida y vuelta por los dos enlaces
    assert conn.accepted_at - report.start == pytest.approx(2.0)
    assert conn.last_valid_status - report.start > 100


@pytest.mark.slow
@pytest.mark.parametrize("seed", range(20))
def test_liveness_with_link_delays(seed):
    scenario = _scenario(
        seed=seed,
        connections=[{"server": 0, "start": 1.0}, {"server": 0, "start": 2.0}],
        faults={"block_status": [{"connection": 0, "at": 30.0}], "delays": JITTERED_LINKS},
    )
    blocked, untouched = run_scenario(scenario).connections
    assert untouched.phase == "Accepted"
    assert blocked.phase == "Interrupted" and blocked.reason == "StaleStatus"
    assert blocked.last_valid_status <= blocked.blocked_at
    assert blocked.ended_at == blocked.last_valid_status + 2 * scenario.delta + scenario.grace


def test_blocked_statuses_interrupt_at_exact_deadline():
    scenario = _scenario(seed=3, faults={"block_status": [{"connection": 0, "at": 30.0}]})
    report = run_scenario(scenario)
    (conn,) = report.connections
    assert conn.phase == "Interrupted" and conn.reason == "StaleStatus"
    assert conn.blocked_at - report.start == pytest.approx(30.0)
    assert conn.last_valid_status - report.start == pytest.approx(21.0)
    assert conn.ended_at == conn.last_valid_status + 2 * scenario.delta + scenario.grace


def test_equivocation_produces_verifiable_proof():
    scenario = load_scenario(ESCENARIOS / "equivocation.toml")
    runner = ScenarioRunner(scenario)
    report = runner.run()
    assert report.misbehavior_proofs
    for blob in report.misbehavior_proofs:
        proof = proof_from_bytes(bytes.fromhex(blob))
        assert verify_misbehavior(proof, runner.registry.public_key(proof.ca_id))
    assert report.misbehavior_detected_at - report.start <= 40.0 + 2 * scenario.monitor_every * scenario.delta
    assert any(e.event == "MISBEHAVIOR" for e in report.events)


@pytest.mark.slow
@pytest.mark.parametrize("seed", range(100))
def test_honest_runs_produce_no_proofs(seed):
    scenario = _scenario(
        seed=seed,
        duration=150.0,
        monitor_every=1,
        topology={"cas": 2, "edges": 2, "ras": 2},
        trace=SMALL_TRACE,
    )
    assert run_scenario(scenario).misbehavior_proofs == []


def test_runs_are_reproducible():
    scenario = _scenario(trace=SMALL_TRACE, topology={"cas": 2, "ras": 2})
    first = run_scenario(scenario).model_dump_json()
    assert first == run_scenario(scenario).model_dump_json()
    assert first != run_scenario(scenario.model_copy(update={"seed": 2})).model_dump_json()


def test_replicas_converge_after_lossy_links():
    scenario = _scenario(
        duration=200.0,
        topology={"ras": 2},
        trace=SMALL_TRACE,
        faults={"links": [{"edge": 0, "start": 0.0, "end": 80.0, "drop": 0.5, "duplicate": 0.3, "reorder": 0.5}]},
    )
    report = run_scenario(scenario)
    assert report.revocations > 0
    assert report.replicas_converged
    assert len(set(report.storage_bytes.values())) == 1


@pytest.mark.parametrize(
    "raw, location",
    [
        ({"duration": 0}, "scenario:duration"),
        ({"duration": 10, "bogus": 1}, "scenario:bogus"),
        ({"duration": 10, "connections": [{"server": 2}]}, "scenario"),
        ({"duration": 10, "faults": {"equivocate": [{"at": 1.0}]}}, "scenario"),
        ({"duration": 10, "faults": {"delays": [{"link": 2}]}}, "scenario"),
        ({"duration": 10, "faults": {"delays": [{"delay": -1}]}}, "scenario:faults.delays.0.delay"),
    ],
)
def test_invalid_scenarios_report_location(raw, location):
    with pytest.raises(ScenarioInvalid) as excinfo:
        parse_scenario(raw)
    assert excinfo.value.location == location


def test_missing_scenario_file(tmp_path):
    with pytest.raises(ScenarioInvalid):
        load_scenario(tmp_path / "no-existe.toml")


def test_trace_with_unknown_ca_is_rejected():
    trace = RevocationTrace(events=[RevocationEvent(1.0, b"\x99" * 8, b"\x01")])
    with pytest.raises(ScenarioInvalid):
        ScenarioRunner(_scenario(), trace)


@pytest.mark.parametrize("path", sorted(ESCENARIOS.glob("*.toml")), ids=lambda p: p.stem)
def test_bundled_scenarios_load(path):
    scenario = load_scenario(path)
    assert scenario.name == path.stem
