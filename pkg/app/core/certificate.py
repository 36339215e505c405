"""Certificados de servidor.

Formato de fixture (todos los campos con prefijo de longitud de 2 bytes):
    serial ‖ issuer_id ‖ subject ‖ not_after(8) ‖ firma Ed25519 sobre los cuatro primeros campos

Además se aceptan certificados X.509 en DER; el issuer_id es entonces
hash(nombre DER del emisor)[:8].
"""
from __future__ import annotations

import datetime
import struct

from cryptography import x509
from cryptography.hazmat.primitives.asymmetric.ed25519 import Ed25519PrivateKey, Ed25519PublicKey
from cryptography.hazmat.primitives.serialization import Encoding
from cryptography.x509.oid import NameOID
from pydantic import BaseModel, ConfigDict

from app.core.crypto import hash_data, sign, verify_signature
from app.core.errors import WireFormatError
from app.core.wire import Reader
from app.schemas.authdict import CA_ID_SIZE, serial_from_int, validate_serial


DER_SEQUENCE_TAG = 0x30


class CertificateInfo(BaseModel):
    model_config = ConfigDict(frozen=True)

    serial: bytes
    issuer_id: bytes
    subject: str
    not_after: int
    signature: bytes
    tbs: bytes
    is_x509: bool = False


def issuer_id_for_name(der_name: bytes) -> bytes:
    return hash_data(der_name)[:CA_ID_SIZE]


def _field(value: bytes) -> bytes:
    return struct.pack("!H", len(value)) + value


def encode_fixture_certificate(
    serial: bytes,
    issuer_id: bytes,
    subject: str,
    not_after: int,
    ca_key: Ed25519PrivateKey,
) -> bytes:
    tbs = _field(validate_serial(serial)) + _field(issuer_id) + _field(subject.encode("utf-8")) + _field(not_after.to_bytes(8, "big"))
    return tbs + _field(sign(ca_key, tbs))


def _parse_fixture(raw: bytes) -> CertificateInfo:
    reader = Reader(raw)
    serial = reader.take(reader.uint(2))
    issuer_id = reader.take(reader.uint(2))
    subject = reader.take(reader.uint(2))
    not_after = reader.take(reader.uint(2))
    tbs_end = reader.pos
    signature = reader.take(reader.uint(2))
    reader.expect_end()
    if len(issuer_id) != CA_ID_SIZE or len(not_after) != 8:
        raise WireFormatError("Certificado de fixture con campos de tamaño incorrecto")
    try:
        serial = validate_serial(serial)
        subject_text = subject.decode("utf-8")
    except ValueError as exc:
        raise WireFormatError(f"Certificado de fixture inválido: {exc}")
    return CertificateInfo(
        serial=serial,
        issuer_id=issuer_id,
        subject=subject_text,
        not_after=int.from_bytes(not_after, "big"),
        signature=signature,
        tbs=raw[:tbs_end],
    )


def _parse_x509(raw: bytes) -> CertificateInfo:
    try:
        cert = x509.load_der_x509_certificate(raw)
        serial = serial_from_int(cert.serial_number)
    except ValueError as exc:
        raise WireFormatError(f"Certificado X.509 ilegible: {exc}")
    subject = cert.subject.get_attributes_for_oid(NameOID.COMMON_NAME)
    return CertificateInfo(
        serial=serial,
        issuer_id=issuer_id_for_name(cert.issuer.public_bytes()),
        subject=str(subject[0].value) if subject else cert.subject.rfc4514_string(),
        not_after=int(cert.not_valid_after_utc.timestamp()),
        signature=cert.signature,
        tbs=cert.tbs_certificate_bytes,
        is_x509=True,
    )


def parse_certificate(raw: bytes) -> CertificateInfo:
    """Extrae (emisor, serie) de un certificado; WireFormatError si no se reconoce."""
    if not raw:
        raise WireFormatError("Certificado vacío")
    if raw[0] == DER_SEQUENCE_TAG:
        return _parse_x509(raw)
    return _parse_fixture(raw)


def verify_certificate(info: CertificateInfo, ca_public_key: Ed25519PublicKey, now: float) -> bool:
    # Validación estándar mínima: firma del emisor y caducidad
    if info.not_after < now:
        return False
    return verify_signature(ca_public_key, info.tbs, info.signature)


def build_x509_certificate(
    serial: int,
    subject: str,
    issuer_name: str,
    not_after: int,
    ca_key: Ed25519PrivateKey,
    subject_key: Ed25519PrivateKey,
) -> bytes:
    issuer = x509.Name([x509.NameAttribute(NameOID.COMMON_NAME, issuer_name)])
    not_after_dt = datetime.datetime.fromtimestamp(not_after, tz=datetime.timezone.utc)
    cert = (
        x509.CertificateBuilder()
        .subject_name(x509.Name([x509.NameAttribute(NameOID.COMMON_NAME, subject)]))
        .issuer_name(issuer)
        .public_key(subject_key.public_key())
        .serial_number(serial)
        .not_valid_before(not_after_dt - datetime.timedelta(days=365))
        .not_valid_after(not_after_dt)
        .sign(ca_key, algorithm=None)
    )
    return cert.public_bytes(Encoding.DER)


def x509_issuer_id(issuer_name: str) -> bytes:
    return issuer_id_for_name(x509.Name([x509.NameAttribute(NameOID.COMMON_NAME, issuer_name)]).public_bytes())
