"""Entramado TLS, certificados y corpus de handshakes."""
import random

import pytest

from app.core.certificate import build_x509_certificate, encode_fixture_certificate, parse_certificate, verify_certificate, x509_issuer_id
from app.core.crypto import signing_key_from_seed
from app.core.errors import WireFormatError
from app.core.tls import (
    RITM_EXTENSION,
    HandshakeReassembler,
    RecordSplitter,
    build_certificate,
    build_handshake_records,
    build_record,
    looks_like_tls,
    parse_certificate_list,
    parse_client_hello,
    split_records,
)
from app.schemas.middlebox import ContentType, HandshakeType
from app.services.client_service import emit_client_hello
from app.services.fixture_service import generate_corpus, load_corpus
from app.services.stub_server_service import ServerSession


def test_record_splitter_handles_byte_by_byte_delivery():
    stream = build_record(ContentType.HANDSHAKE, b"abc") + build_record(ContentType.APPLICATION_DATA, b"x" * 300)
    splitter = RecordSplitter()
    records = []
    for i in range(len(stream)):
        records += splitter.feed(stream[i:i + 1])
    assert [r.content_type for r, _ in records] == [ContentType.HANDSHAKE, ContentType.APPLICATION_DATA]
    assert b"".join(raw for _, raw in records) == stream
    assert not splitter.buffer


def test_invalid_header_does_not_consume_buffer():
    splitter = RecordSplitter()
    splitter.push(b"\x99\x03\x03\x00\x01z")
    with pytest.raises(WireFormatError):
        splitter.next_record()
    assert splitter.take_pending() == b"\x99\x03\x03\x00\x01z"


def test_split_records_returns_remainder():
    complete = build_record(ContentType.HANDSHAKE, b"hi")
    records, rest = split_records(complete + complete[:3])
    assert len(records) == 1 and rest == complete[:3]


def test_looks_like_tls():
    assert looks_like_tls(b"") is None
    assert looks_like_tls(b"\x16") is None
    assert looks_like_tls(b"\x16\x03") is True
    assert looks_like_tls(b"GE") is False


def test_client_hello_extension_detection():
    rng = random.Random(1)
    for ritm in (True, False):
        records, _ = split_records(emit_client_hello(rng, ritm=ritm))
        (msg_type, body), = HandshakeReassembler().feed(records[0].payload)
        assert msg_type == HandshakeType.CLIENT_HELLO
        assert parse_client_hello(body).has_extension(RITM_EXTENSION) is ritm


def test_fragmented_certificate_reassembles():
    certificate = b"\x01" * 5000
    wire = build_handshake_records(build_certificate([certificate]), max_fragment=64)
    reassembler = HandshakeReassembler()
    messages = []
    for record, _ in RecordSplitter().feed(wire):
        messages += reassembler.feed(record.payload)
    assert len(messages) == 1
    assert parse_certificate_list(messages[0][1]).certificates == (certificate,)


def test_fixture_certificate_parses_and_verifies():
    key = signing_key_from_seed(b"cert")
    raw = encode_fixture_certificate(b"\x01\x02", b"\x33" * 8, "host.example", 2_000_000_000, key)
    info = parse_certificate(raw)
    assert (info.serial, info.issuer_id, info.subject) == (b"\x01\x02", b"\x33" * 8, "host.example")
    assert verify_certificate(info, key.public_key(), 1_700_000_000)
    assert not verify_certificate(info, key.public_key(), 2_000_000_001)
    with pytest.raises(WireFormatError):
        parse_certificate(raw[:-3])


def test_x509_certificate_parses():
    ca_key = signing_key_from_seed(b"x509-ca")
    raw = build_x509_certificate(0x1234, "srv.example", "Test CA", 2_000_000_000, ca_key, signing_key_from_seed(b"srv"))
    info = parse_certificate(raw)
    assert info.is_x509 and info.serial == b"\x12\x34"
    assert info.issuer_id == x509_issuer_id("Test CA")
    assert info.subject == "srv.example"
    assert verify_certificate(info, ca_key.public_key(), 1_700_000_000)


def test_server_session_flight_and_finished():
    session = ServerSession(b"cert", random.Random(2), max_fragment=64)
    flight = session.receive(emit_client_hello(random.Random(3)))
    types = []
    reassembler = HandshakeReassembler()
    for record, _ in RecordSplitter().feed(flight):
        types += [t for t, _ in reassembler.feed(record.payload)]
    assert types == [HandshakeType.SERVER_HELLO, HandshakeType.CERTIFICATE, HandshakeType.SERVER_HELLO_DONE]
    assert session.application_data(b"x") == b""
    session.receive(build_record(ContentType.HANDSHAKE, bytes([HandshakeType.FINISHED, 0, 0, 1, 0])))
    assert session.established and session.application_data(b"x")


def test_corpus_generation(tmp_path):
    generate_corpus(tmp_path, count=12, seed=4)
    entries = load_corpus(tmp_path)
    assert len(entries) == 12
    assert sum(1 for e in entries if not e.ritm) == 4
    for entry in entries:
        records, rest = split_records(entry.server_flight)
        assert not rest
        reassembler = HandshakeReassembler()
        certificates = [
            parse_certificate_list(body).certificates[0]
            for record in records
            for msg_type, body in reassembler.feed(record.payload)
            if msg_type == HandshakeType.CERTIFICATE
        ]
        info = parse_certificate(certificates[0])
        assert (info.issuer_id, info.serial) == (entry.issuer_id, entry.serial)
