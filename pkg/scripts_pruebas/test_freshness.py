"""Ventana de frescura: una declaración del periodo p vale desde t+pΔ hasta t+(p+2)Δ incluido."""
import pytest

from app.core.crypto import load_public_key, public_key_bytes, signing_key_from_seed
from app.core.errors import BadChainLink
from app.schemas.authdict import FreshnessStatement, InvalidReason, NeedNewRoot, StatusOutcome
from app.services import authdict_service
from app.services.authdict_service import Dictionary

CA_ID = b"\x22" * 8
DELTA = 10
M = 40
T = 1_700_000_000


@pytest.fixture(scope="module")
def setup():
    key = signing_key_from_seed(b"freshness")
    dictionary = Dictionary(CA_ID, [b"\x10", b"\x20"])
    sr, secret = authdict_service.make_signed_root(key, dictionary, T, m=M, seed=b"\x09" * 20)
    return load_public_key(public_key_bytes(key)), dictionary, sr, secret


def _verdict(setup, period, now):
    public, dictionary, sr, secret = setup
    fs = authdict_service.refresh(secret, sr, T + period * DELTA, DELTA)
    status = authdict_service.prove(dictionary, b"\x15", sr, fs)
    return authdict_service.verify_status(status, b"\x15", public, now, DELTA)


def test_accepted_iff_staleness_at_most_two_deltas(setup):
    for period in range(M):
        for offset in range(0, 3 * DELTA + 1):
            verdict = _verdict(setup, period, T + period * DELTA + offset)
            if offset <= 2 * DELTA:
                assert verdict.outcome is StatusOutcome.NOT_REVOKED, (period, offset)
            else:
                assert verdict.reason is InvalidReason.STALE_FRESHNESS, (period, offset)


def test_exact_boundaries(setup):
    assert _verdict(setup, 3, T + 5 * DELTA).outcome is StatusOutcome.NOT_REVOKED
    late = _verdict(setup, 3, T + 5 * DELTA + 0.001)
    assert late.outcome is StatusOutcome.INVALID
    assert late.reason is InvalidReason.STALE_FRESHNESS
    # El ancla del periodo 0 también vale justo 2Δ después de la firma
    public, dictionary, sr, _ = setup
    status = authdict_service.prove(dictionary, b"\x15", sr, FreshnessStatement(value=sr.anchor))
    assert authdict_service.verify_status(status, b"\x15", public, T + 2 * DELTA, DELTA).outcome is StatusOutcome.NOT_REVOKED
    assert authdict_service.verify_status(status, b"\x15", public, T + 2 * DELTA + 0.001, DELTA).outcome is StatusOutcome.INVALID
    # Un reloj que va un periodo por detrás sigue aceptando la declaración siguiente
    assert _verdict(setup, 3, T + 2 * DELTA).outcome is StatusOutcome.NOT_REVOKED
    assert _verdict(setup, 3, T + 2 * DELTA - 1).outcome is StatusOutcome.INVALID


def test_chain_exhaustion_needs_new_root(setup):
    _, _, sr, secret = setup
    assert isinstance(authdict_service.refresh(secret, sr, T + M * DELTA, DELTA), NeedNewRoot)
    assert isinstance(authdict_service.refresh(secret, sr, T + (M - 1) * DELTA, DELTA), FreshnessStatement)


def test_future_root_is_rejected(setup):
    public, dictionary, _, _ = setup
    key = signing_key_from_seed(b"freshness")
    future, _ = authdict_service.make_signed_root(key, dictionary, T + 61, m=M, seed=b"\x09" * 20)
    fs = FreshnessStatement(value=future.anchor)
    assert not authdict_service.check_freshness(fs, future, T, DELTA)
    assert authdict_service.check_freshness(fs, future, T + 1, DELTA)


def test_apply_freshness_keeps_newest(setup):
    public, dictionary, sr, secret = setup
    replica = authdict_service.update(authdict_service.empty_replica(CA_ID), [b"\x10", b"\x20"], sr, public, T)
    newer = authdict_service.refresh(secret, sr, T + 4 * DELTA, DELTA)
    older = authdict_service.refresh(secret, sr, T + 2 * DELTA, DELTA)
    replica = authdict_service.apply_freshness(replica, newer, T + 4 * DELTA, DELTA)
    assert authdict_service.apply_freshness(replica, older, T + 4 * DELTA, DELTA).freshness == newer
    with pytest.raises(BadChainLink):
        authdict_service.apply_freshness(replica, FreshnessStatement(value=b"\x00" * 20), T + 4 * DELTA, DELTA)
