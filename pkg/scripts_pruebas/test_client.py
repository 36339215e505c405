"""Decisiones del cliente: aceptación del certificado, vivacidad y separación de estados."""
import random

import pytest

from app.core.errors import MalformedStatusRecord
from app.core.tls import build_certificate, build_handshake_records, build_record, build_server_hello_done, build_status_record
from app.core.wire import UNKNOWN_CA_NOTICE, encode_status
from app.schemas.authdict import FreshnessStatement
from app.schemas.client import ClientPolicy, ConnPhase, ConnVerdict, InterruptReason, RejectReason
from app.schemas.middlebox import ContentType
from app.services import authdict_service
from app.services.client_service import ClientConnection, accept_certificate, emit_client_hello, liveness_check, strip_status


SERIAL = b"\x0a\x0b"
NOT_AFTER = 2_000_000_000


def _status(ca, serial=SERIAL):
    return authdict_service.prove(ca.dictionary, serial, ca.signed_root, FreshnessStatement(value=ca.signed_root.anchor))


@pytest.fixture
def policy(registry):
    return ClientPolicy(registry=registry, grace=2)


@pytest.fixture
def certificate(ca):
    return ca.issue_certificate(SERIAL, "srv.example", NOT_AFTER)


def test_valid_absence_is_accepted(ca, clock, policy, certificate):
    verdict = accept_certificate(certificate, [_status(ca)], policy, clock.now())
    assert verdict.phase is ConnPhase.ACCEPTED
    assert verdict.last_valid_status == clock.now()
    assert (verdict.ca_id, verdict.serial) == (ca.ca_id, SERIAL)


def test_presence_is_rejected(ca, clock, policy, certificate):
    ca.revoke([SERIAL])
    verdict = accept_certificate(certificate, [_status(ca)], policy, clock.now())
    assert verdict.phase is ConnPhase.REJECTED
    assert verdict.reason is RejectReason.REVOKED


def test_missing_status_depends_on_policy(registry, clock, policy, certificate):
    assert accept_certificate(certificate, [], policy, clock.now()).reason is RejectReason.NO_STATUS
    # El aviso de CA desconocida no cuenta como estado
    assert accept_certificate(certificate, [None], policy, clock.now()).reason is RejectReason.NO_STATUS
    legacy = ClientPolicy(registry=registry, expect_ritm=False)
    verdict = accept_certificate(certificate, [], legacy, clock.now())
    assert verdict.phase is ConnPhase.ACCEPTED
    assert verdict.last_valid_status is None


def test_bad_certificates(ca, make_ca, clock, policy):
    assert accept_certificate(b"\x00\x01", [], policy, clock.now()).reason is RejectReason.BAD_CERTIFICATE
    stranger = make_ca(index=3)
    foreign = stranger.issue_certificate(SERIAL, "x.example", NOT_AFTER)
    assert accept_certificate(foreign, [_status(ca)], policy, clock.now()).reason is RejectReason.BAD_CERTIFICATE
    expired = ca.issue_certificate(SERIAL, "x.example", int(clock.now()) - 1)
    assert accept_certificate(expired, [_status(ca)], policy, clock.now()).reason is RejectReason.BAD_CERTIFICATE


def test_status_for_other_serial_is_invalid(ca, clock, policy, certificate):
    ca.revoke([b"\x01", b"\x99"])
    verdict = accept_certificate(certificate, [_status(ca, serial=b"\x01")], policy, clock.now())
    assert verdict.reason is RejectReason.INVALID_STATUS


def test_stale_status_is_invalid(ca, clock, policy, certificate):
    status = _status(ca)
    clock.advance(2 * ca.delta + 1)
    verdict = accept_certificate(certificate, [status], policy, clock.now())
    assert verdict.reason is RejectReason.INVALID_STATUS


def test_conflicting_statuses_yield_evidence(ca, clock, policy, certificate):
    twin = ca.fork()
    ca.revoke([SERIAL])
    twin.revoke([b"\x55"])
    verdict = accept_certificate(certificate, [_status(ca), _status(twin)], policy, clock.now())
    assert verdict.reason is RejectReason.INVALID_STATUS
    assert verdict.evidence is not None
    assert verdict.evidence.signed_root_a.n == verdict.evidence.signed_root_b.n == 1


def test_one_valid_status_among_invalid_ones_suffices(ca, make_ca, clock, policy, certificate):
    good = _status(ca)
    broken = good.model_copy(update={"freshness": FreshnessStatement(value=b"\x00" * 20)})
    verdict = accept_certificate(certificate, [broken, None, good], policy, clock.now())
    assert verdict.phase is ConnPhase.ACCEPTED


def test_liveness_boundary_is_inclusive(ca, policy):
    start = 1_700_000_000.0
    verdict = ConnVerdict(phase=ConnPhase.ACCEPTED, ca_id=ca.ca_id, serial=SERIAL, last_valid_status=start)
    deadline = start + policy.window(ca.ca_id)
    assert policy.window(ca.ca_id) == 2 * ca.delta + 2
    assert liveness_check(verdict, policy, deadline - 0.001).phase is ConnPhase.ACCEPTED
    interrupted = liveness_check(verdict, policy, deadline)
    assert interrupted.phase is ConnPhase.INTERRUPTED
    assert interrupted.reason is InterruptReason.STALE_STATUS
    # Fuera de Accepted no se toca nada
    rejected = ConnVerdict.rejected(RejectReason.REVOKED)
    assert liveness_check(rejected, policy, deadline + 100) is rejected


def test_strip_status_separates_records(ca):
    data = build_record(ContentType.APPLICATION_DATA, b"uno")
    status = build_status_record(encode_status(_status(ca)))
    notice = build_status_record(UNKNOWN_CA_NOTICE)
    clean, statuses = strip_status(data + status + notice + data + b"\x17\x03")
    assert clean == data + data + b"\x17\x03"
    assert len(statuses) == 2
    assert statuses[0].signed_root == ca.signed_root and statuses[1] is None


def test_strip_status_rejects_malformed_records(ca):
    with pytest.raises(MalformedStatusRecord):
        strip_status(build_status_record(b"\x01\x02\x03"))
    truncated = build_status_record(encode_status(_status(ca)))[:-5]
    with pytest.raises(MalformedStatusRecord):
        strip_status(truncated)


def test_client_rejects_malformed_status_during_handshake(policy, clock):
    client = ClientConnection(policy, clock, rng=random.Random(1))
    client.start()
    assert client.receive(build_status_record(b"\x02\xff")) == b""
    assert client.verdict.phase is ConnPhase.REJECTED
    assert client.verdict.reason is RejectReason.INVALID_STATUS
    assert [e.event for e in client.events] == ["ClientHello", "Rejected"]
    assert client.report_lines()[-1].endswith("Rejected InvalidStatus")


def test_legacy_client_hello_has_no_extension(policy, clock):
    client = ClientConnection(policy, clock, rng=random.Random(1), ritm=False)
    assert client.start() == emit_client_hello(random.Random(1), ritm=False)
    assert client.events[0].reason == "legacy"


def test_malformed_status_after_acceptance_interrupts(ca, policy, clock, certificate):
    client = ClientConnection(policy, clock, rng=random.Random(1))
    client.start()
    flight = build_status_record(encode_status(_status(ca)))
    flight += build_handshake_records(build_certificate([certificate]) + build_server_hello_done())
    assert client.receive(flight) != b""
    assert client.verdict.phase is ConnPhase.ACCEPTED
    # Los registros anteriores al estado dañado se procesan igualmente
    segment = build_record(ContentType.APPLICATION_DATA, b"hola") + build_status_record(b"\x02\xff")
    segment += build_record(ContentType.APPLICATION_DATA, b"perdido")
    assert client.receive(segment) == b""
    assert bytes(client.application_data) == b"hola"
    assert client.verdict.phase is ConnPhase.INTERRUPTED
    assert client.verdict.reason is InterruptReason.MALFORMED_STATUS
    assert client.report_lines()[-1].endswith("Interrupted MalformedStatus")
