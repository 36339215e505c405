"""Un estado con un solo byte alterado nunca se da por bueno."""
import random

import pytest

from app.core.wire import encode_status
from app.schemas.authdict import FreshnessStatement, StatusOutcome, serial_from_int
from app.services import authdict_service


def _mutations(blob: bytes, count: int, seed: int):
    rng = random.Random(seed)
    for _ in range(count):
        position = rng.randrange(len(blob))
        mutated = bytearray(blob)
        mutated[position] ^= rng.randint(1, 255)
        yield bytes(mutated)


def _statuses(ca):
    rng = random.Random(8)
    # Series pares de 3 bytes; la impar siguiente a una revocada queda en medio
    values = sorted({2 * rng.randint(0x8000, 0x7FFFFF) for _ in range(100)})
    revoked = [serial_from_int(v) for v in values]
    ca.revoke(revoked)
    fs = FreshnessStatement(value=ca.signed_root.anchor)
    missing = serial_from_int(values[50] + 1)
    absent = authdict_service.prove(ca.dictionary, missing, ca.signed_root, fs)
    present = authdict_service.prove(ca.dictionary, revoked[40], ca.signed_root, fs)
    return [(missing, absent), (revoked[40], present)]


def _check(ca, clock, count):
    key = ca.signing_key.public_key()
    for serial, status in _statuses(ca):
        blob = encode_status(status)
        genuine = authdict_service.verify_status_bytes(blob, serial, key, clock.now(), ca.delta, ca_id=ca.ca_id)
        assert genuine.outcome is not StatusOutcome.INVALID
        for mutated in _mutations(blob, count, seed=len(blob)):
            verdict = authdict_service.verify_status_bytes(mutated, serial, key, clock.now(), ca.delta, ca_id=ca.ca_id)
            assert verdict.outcome is StatusOutcome.INVALID, mutated.hex()


def test_single_byte_mutations_are_invalid(ca, clock):
    _check(ca, clock, 500)


@pytest.mark.slow
def test_ten_thousand_mutations_are_invalid(ca, clock):
    _check(ca, clock, 10_000)
