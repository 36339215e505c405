"""Diccionario autenticado: pruebas de pertenencia/ausencia, actualización de réplicas y tamaños."""
import math
import random

import pytest

from app.core.crypto import public_key_bytes, load_public_key, signing_key_from_seed
from app.core.errors import BadSignature, CountMismatch, DictRootMismatch, DuplicateSerial, RootMismatch, StaleTimestamp
from app.core.wire import encode_status
from app.schemas.authdict import (
    FreshnessStatement,
    InvalidReason,
    ProofKind,
    StatusOutcome,
    serial_from_int,
)
from app.services import authdict_service
from app.services.authdict_service import EMPTY_ROOT, Dictionary, storage_size

CA_ID = b"\x11" * 8
DELTA = 10
NOW = 1_700_000_000


@pytest.fixture(scope="module")
def key():
    return signing_key_from_seed(b"authdict")


@pytest.fixture(scope="module")
def public(key):
    return load_public_key(public_key_bytes(key))


def _signed(key, dictionary, now=NOW, m=100):
    sr, secret = authdict_service.make_signed_root(key, dictionary, now, m=m, seed=b"\x05" * 20)
    return sr, secret, FreshnessStatement(value=sr.anchor)


def _random_serials(rng, count):
    chosen = set()
    while len(chosen) < count:
        chosen.add(serial_from_int(rng.randint(0, 0xFFFFFF)))
    serials = list(chosen)
    rng.shuffle(serials)
    return serials


def _check(key, public, serials, query):
    dictionary = Dictionary(CA_ID, serials)
    sr, _, fs = _signed(key, dictionary)
    status = authdict_service.prove(dictionary, query, sr, fs)
    return status, authdict_service.verify_status(status, query, public, NOW, DELTA, ca_id=CA_ID)


def test_empty_dictionary_root_and_absence(key, public):
    assert Dictionary(CA_ID).root == EMPTY_ROOT
    status, verdict = _check(key, public, [], b"\x42")
    assert status.proof.kind is ProofKind.ABSENT and not status.proof.leaves
    assert verdict.outcome is StatusOutcome.NOT_REVOKED


@pytest.mark.parametrize("query,expected", [(b"\x05", StatusOutcome.REVOKED), (b"\x01", StatusOutcome.NOT_REVOKED), (b"\x09", StatusOutcome.NOT_REVOKED), (b"\x06", StatusOutcome.NOT_REVOKED)])
def test_single_and_small_dictionaries(key, public, query, expected):
    _, verdict = _check(key, public, [b"\x05", b"\x03", b"\x07"], query)
    assert verdict.outcome is expected


def test_absent_proof_between_neighbours_uses_two_leaves(key, public):
    serials = [serial_from_int(v) for v in range(10, 200, 10)]
    status, verdict = _check(key, public, serials, serial_from_int(55))
    assert verdict.outcome is StatusOutcome.NOT_REVOKED
    assert [leaf.serial for leaf in status.proof.leaves] == [serial_from_int(50), serial_from_int(60)]
    # El segundo camino se detiene donde se une al primero
    assert len(status.proof.paths[1].digests) < len(status.proof.paths[0].digests)


def test_proof_for_wrong_serial_is_rejected(key, public):
    serials = [serial_from_int(v) for v in range(1, 40)]
    dictionary = Dictionary(CA_ID, serials)
    sr, _, fs = _signed(key, dictionary)
    status = authdict_service.prove(dictionary, serial_from_int(7), sr, fs)
    verdict = authdict_service.verify_status(status, serial_from_int(8), public, NOW, DELTA)
    assert verdict.outcome is StatusOutcome.INVALID and verdict.reason is InvalidReason.BAD_PROOF


def test_prove_requires_matching_root(key):
    dictionary = Dictionary(CA_ID, [b"\x01"])
    sr, _, fs = _signed(key, Dictionary(CA_ID, [b"\x02"]))
    with pytest.raises(DictRootMismatch):
        authdict_service.prove(dictionary, b"\x01", sr, fs)


def test_duplicate_serial_is_refused():
    dictionary = Dictionary(CA_ID, [b"\x01"])
    with pytest.raises(DuplicateSerial):
        dictionary.with_serials([b"\x01"])
    with pytest.raises(DuplicateSerial):
        dictionary.with_serials([b"\x02", b"\x02"])


def test_storage_roundtrip_keeps_index_order():
    serials = [b"\x09", b"\x01\x00", b"\x05"]
    dictionary = Dictionary(CA_ID, serials)
    restored = Dictionary.from_storage(dictionary.to_storage())
    assert restored.serials_by_index == tuple(serials)
    assert restored.root == dictionary.root
    assert len(dictionary.to_storage()) == storage_size(serials) == 8 + 8 + (2 + 3 + 2)


def test_update_applies_signed_batch(key, public):
    replica = authdict_service.empty_replica(CA_ID)
    updated_dict = Dictionary(CA_ID, [b"\x01", b"\x02"])
    sr, _, _ = _signed(key, updated_dict)
    replica = authdict_service.update(replica, [b"\x01", b"\x02"], sr, public, NOW)
    assert replica.n == 2 and replica.signed_root == sr
    assert replica.freshness.value == sr.anchor


def test_update_is_all_or_nothing(key, public):
    replica = authdict_service.empty_replica(CA_ID)
    sr, _, _ = _signed(key, Dictionary(CA_ID, [b"\x01", b"\x02"]))
    with pytest.raises(CountMismatch):
        authdict_service.update(replica, [b"\x01"], sr, public, NOW)
    with pytest.raises(RootMismatch):
        authdict_service.update(replica, [b"\x01", b"\x03"], sr, public, NOW)
    other = load_public_key(public_key_bytes(signing_key_from_seed(b"otra-ca")))
    with pytest.raises(BadSignature):
        authdict_service.update(replica, [b"\x01", b"\x02"], sr, other, NOW)
    assert replica.n == 0 and replica.signed_root is None


def test_update_rejects_older_or_future_roots(key, public):
    first = Dictionary(CA_ID, [b"\x01"])
    sr1, _, _ = _signed(key, first, now=NOW)
    replica = authdict_service.update(authdict_service.empty_replica(CA_ID), [b"\x01"], sr1, public, NOW)
    older, _, _ = _signed(key, first.with_serials([b"\x02"]), now=NOW - 5)
    with pytest.raises(StaleTimestamp):
        authdict_service.update(replica, [b"\x02"], older, public, NOW)
    future, _, _ = _signed(key, first.with_serials([b"\x02"]), now=NOW + 61)
    with pytest.raises(StaleTimestamp):
        authdict_service.update(replica, [b"\x02"], future, public, NOW)


def test_renewal_keeps_content(key, public):
    dictionary = Dictionary(CA_ID, [b"\x01"])
    sr, _, _ = _signed(key, dictionary)
    replica = authdict_service.update(authdict_service.empty_replica(CA_ID), [b"\x01"], sr, public, NOW)
    renewed, _, _ = _signed(key, dictionary, now=NOW + 100)
    assert authdict_service.adopt_renewal(replica, renewed, public, NOW + 100).signed_root == renewed
    changed, _, _ = _signed(key, Dictionary(CA_ID, [b"\x02"]), now=NOW + 100)
    with pytest.raises(RootMismatch):
        authdict_service.adopt_renewal(replica, changed, public, NOW + 100)


def test_oracle_equivalence_small(key, public):
    rng = random.Random(3)
    for _ in range(50):
        serials = _random_serials(rng, rng.randint(0, 40))
        dictionary = Dictionary(CA_ID, serials)
        sr, _, fs = _signed(key, dictionary)
        for _ in range(20):
            query = rng.choice(serials) if serials and rng.random() < 0.5 else serial_from_int(rng.randint(0, 0xFFFFFF))
            verdict = authdict_service.verify_status(authdict_service.prove(dictionary, query, sr, fs), query, public, NOW, DELTA)
            assert (verdict.outcome is StatusOutcome.REVOKED) == (query in serials)
            assert verdict.is_valid


@pytest.mark.slow
def test_oracle_equivalence_full(key, public):
    rng = random.Random(2024)
    mismatches = 0
    for _ in range(1000):
        serials = _random_serials(rng, rng.randint(0, 256))
        dictionary = Dictionary(CA_ID, serials)
        sr, _, fs = _signed(key, dictionary)
        for _ in range(100):
            query = rng.choice(serials) if serials and rng.random() < 0.5 else serial_from_int(rng.randint(0, 0xFFFFFF))
            verdict = authdict_service.verify_status(authdict_service.prove(dictionary, query, sr, fs), query, public, NOW, DELTA)
            if (verdict.outcome is StatusOutcome.REVOKED) != any(s == query for s in serials):
                mismatches += 1
    assert mismatches == 0


@pytest.mark.slow
def test_status_size_for_large_dictionary(key, public):
    rng = random.Random(339_557)
    values = rng.sample(range(0x010000, 0x1000000), 339_557)
    dictionary = Dictionary(CA_ID, [v.to_bytes(3, "big") for v in values])
    sr, _, fs = _signed(key, dictionary)
    present = set(values)
    sizes = []
    while len(sizes) < 1000:
        value = rng.randint(0x010000, 0xFFFFFF)
        if value in present:
            continue
        serial = value.to_bytes(3, "big")
        status = authdict_service.prove(dictionary, serial, sr, fs)
        if len(sizes) < 20:
            assert authdict_service.verify_status(status, serial, public, NOW, DELTA).outcome is StatusOutcome.NOT_REVOKED
        sizes.append(len(encode_status(status)))
    assert 500 <= min(sizes)
    assert max(sizes) <= 900


@pytest.mark.parametrize("n", [2, 3, 5, 19, 33])
def test_every_path_spans_the_full_height(n):
    dictionary = Dictionary(CA_ID, [serial_from_int(v) for v in range(1, n + 1)])
    height = math.ceil(math.log2(n))
    # Incluye la última hoja, que no tiene hermano real en los niveles impares
    assert {len(dictionary.auth_path(pos).digests) for pos in range(n)} == {height}


def test_edge_leaf_status_is_not_shorter(key):
    dictionary = Dictionary(CA_ID, [serial_from_int(v) for v in range(300, 630, 10)])
    sr, _, fs = _signed(key, dictionary)
    inner = encode_status(authdict_service.prove(dictionary, serial_from_int(310), sr, fs))
    last = encode_status(authdict_service.prove(dictionary, serial_from_int(620), sr, fs))
    assert len(last) == len(inner)
