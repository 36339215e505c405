"""Hash truncado, cadena de hashes y firmas Ed25519."""
from app.core.crypto import (
    DIGEST_SIZE,
    PUBLIC_KEY_SIZE,
    SIGNATURE_SIZE,
    chain_evaluate,
    hash_data,
    load_public_key,
    public_key_bytes,
    sign,
    signing_key_from_seed,
    verify_signature,
)
from app.schemas.authdict import CHAIN_CHECKPOINT_EVERY, HashChainSecret


def test_hash_is_truncated_sha256():
    assert len(hash_data(b"ritm")) == DIGEST_SIZE
    assert hash_data(b"a") != hash_data(b"b")


def test_chain_evaluate_composes():
    seed = b"\x01" * DIGEST_SIZE
    assert chain_evaluate(seed, 0) == seed
    assert chain_evaluate(chain_evaluate(seed, 3), 4) == chain_evaluate(seed, 7)


def test_secret_values_use_checkpoints_consistently():
    secret = HashChainSecret(v=b"\x07" * DIGEST_SIZE, m=3 * CHAIN_CHECKPOINT_EVERY + 5, t0=0)
    for k in (0, 1, CHAIN_CHECKPOINT_EVERY, CHAIN_CHECKPOINT_EVERY + 1, secret.m):
        assert secret.value_at(k) == chain_evaluate(secret.v, k)
    assert secret.anchor == chain_evaluate(secret.v, secret.m)
    # Publicar el valor del periodo p: p hashes llevan al ancla
    assert chain_evaluate(secret.value_at(secret.m - 9), 9) == secret.anchor


def test_signatures_roundtrip_and_reject_tampering():
    key = signing_key_from_seed(b"firma")
    public = load_public_key(public_key_bytes(key))
    assert len(public_key_bytes(key)) == PUBLIC_KEY_SIZE
    signature = sign(key, b"mensaje")
    assert len(signature) == SIGNATURE_SIZE
    assert verify_signature(public, b"mensaje", signature)
    assert not verify_signature(public, b"mensaje!", signature)
    assert not verify_signature(public, b"mensaje", signature[:-1])
    other = load_public_key(public_key_bytes(signing_key_from_seed(b"otra")))
    assert not verify_signature(other, b"mensaje", signature)
    # Un mensaje que no es bytes no se puede verificar
    assert not verify_signature(public, "mensaje", signature)


def test_seeded_keys_are_deterministic():
    assert public_key_bytes(signing_key_from_seed(b"x")) == public_key_bytes(signing_key_from_seed(b"x"))
