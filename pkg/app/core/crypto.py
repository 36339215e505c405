import hashlib
import secrets

from cryptography.exceptions import InvalidSignature
from cryptography.hazmat.primitives import serialization
from cryptography.hazmat.primitives.asymmetric.ed25519 import Ed25519PrivateKey, Ed25519PublicKey


# SHA-256 truncado a 20 bytes
DIGEST_SIZE = 20
SIGNATURE_SIZE = 64
PUBLIC_KEY_SIZE = 32


def hash_data(data: bytes) -> bytes:
    return hashlib.sha256(data).digest()[:DIGEST_SIZE]


def chain_evaluate(seed: bytes, k: int) -> bytes:
    """H^k(seed); H^0(seed) = seed."""
    if k < 0:
        raise ValueError("k debe ser >= 0")
    value = seed
    for _ in range(k):
        value = hashlib.sha256(value).digest()[:DIGEST_SIZE]
    return value


def random_seed() -> bytes:
    return secrets.token_bytes(DIGEST_SIZE)


def generate_signing_key() -> Ed25519PrivateKey:
    return Ed25519PrivateKey.generate()


def signing_key_from_seed(seed: bytes) -> Ed25519PrivateKey:
    # Claves deterministas para el simulador (semilla de 32 bytes)
    return Ed25519PrivateKey.from_private_bytes(hashlib.sha256(seed).digest())


def sign(private_key: Ed25519PrivateKey, message: bytes) -> bytes:
    return private_key.sign(message)


def public_key_bytes(key: Ed25519PrivateKey | Ed25519PublicKey) -> bytes:
    public = key.public_key() if isinstance(key, Ed25519PrivateKey) else key
    return public.public_bytes(
        encoding=serialization.Encoding.Raw,
        format=serialization.PublicFormat.Raw,
    )


def load_public_key(raw: bytes) -> Ed25519PublicKey:
    if len(raw) != PUBLIC_KEY_SIZE:
        raise ValueError(f"La clave pública debe tener {PUBLIC_KEY_SIZE} bytes")
    return Ed25519PublicKey.from_public_bytes(raw)


def verify_signature(public_key: Ed25519PublicKey, message: bytes, signature: bytes) -> bool:
    # Nunca propagar errores de la librería; una firma inválida es simplemente False
    if len(signature) != SIGNATURE_SIZE:
        return False
    try:
        public_key.verify(signature, message)
        return True
    except InvalidSignature:
        return False
    except (TypeError, ValueError):
        # Mensaje o firma de un tipo que la librería no acepta
        return False
