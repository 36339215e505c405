"""Serializaciones binarias canónicas (todos los enteros en big-endian).

SignedRoot         = ca_id(8) ‖ root(20) ‖ n(8) ‖ anchor(20) ‖ timestamp(8) ‖ firma(64)
FreshnessStatement = value(20)
RevocationStatus   = kind(1) ‖ leaf_count(1) ‖ hojas ‖ path_count(1)
                     ‖ por camino [len(2) ‖ bitmap de direcciones ‖ digests]
                     ‖ SignedRoot ‖ FreshnessStatement
"""
from __future__ import annotations

import struct
from typing import Iterable

from pydantic import ValidationError

from app.core.crypto import DIGEST_SIZE, SIGNATURE_SIZE
from app.core.errors import WireFormatError
from app.schemas.authdict import (
    CA_ID_SIZE,
    AuthPath,
    FreshnessStatement,
    Leaf,
    MembershipProof,
    ProofKind,
    RevocationStatus,
    SignedRoot,
)
from app.schemas.dissemination import IssuanceMessage


SIGNED_ROOT_SIZE = CA_ID_SIZE + DIGEST_SIZE + 8 + DIGEST_SIZE + 8 + SIGNATURE_SIZE
FRESHNESS_SIZE = DIGEST_SIZE
FRAME_HEADER = struct.Struct("!I")
# Aviso de CA desconocida: un registro de estado con un único byte 0x00
UNKNOWN_CA_NOTICE = b"\x00"

_KIND_CODES = {ProofKind.PRESENT: 0x01, ProofKind.ABSENT: 0x02}
_KIND_BY_CODE = {code: kind for kind, code in _KIND_CODES.items()}


class Reader:
    """Cursor sobre un buffer; cualquier lectura fuera de rango es WireFormatError."""

    def __init__(self, data: bytes) -> None:
        self.data = data
        self.pos = 0

    def take(self, size: int) -> bytes:
        if size < 0 or self.pos + size > len(self.data):
            raise WireFormatError(f"Mensaje truncado: se pedían {size} bytes en {self.pos}")
        chunk = self.data[self.pos:self.pos + size]
        self.pos += size
        return chunk

    def uint(self, size: int) -> int:
        return int.from_bytes(self.take(size), "big")

    @property
    def remaining(self) -> int:
        return len(self.data) - self.pos

    def expect_end(self) -> None:
        if self.remaining:
            raise WireFormatError(f"Sobran {self.remaining} bytes al final del mensaje")


# SignedRoot / FreshnessStatement
def encode_signed_root(sr: SignedRoot) -> bytes:
    return sr.signed_payload() + sr.signature


def read_signed_root(reader: Reader) -> SignedRoot:
    ca_id = reader.take(CA_ID_SIZE)
    root = reader.take(DIGEST_SIZE)
    n = reader.uint(8)
    anchor = reader.take(DIGEST_SIZE)
    timestamp = reader.uint(8)
    signature = reader.take(SIGNATURE_SIZE)
    return SignedRoot(ca_id=ca_id, root=root, n=n, anchor=anchor, timestamp=timestamp, signature=signature)


def decode_signed_root(data: bytes) -> SignedRoot:
    reader = Reader(data)
    sr = read_signed_root(reader)
    reader.expect_end()
    return sr


def encode_freshness(fs: FreshnessStatement) -> bytes:
    return fs.value


def decode_freshness(data: bytes) -> FreshnessStatement:
    if len(data) != FRESHNESS_SIZE:
        raise WireFormatError(f"La declaración de frescura debe tener {FRESHNESS_SIZE} bytes")
    return FreshnessStatement(value=data)


# RevocationStatus
def _encode_directions(directions: tuple[bool, ...]) -> bytes:
    bitmap = bytearray((len(directions) + 7) // 8)
    for i, is_left in enumerate(directions):
        if is_left:
            bitmap[i // 8] |= 0x80 >> (i % 8)
    return bytes(bitmap)


def _decode_directions(bitmap: bytes, count: int) -> tuple[bool, ...]:
    directions = tuple(bool(bitmap[i // 8] & (0x80 >> (i % 8))) for i in range(count))
    # Los bits de relleno deben ser cero para que la codificación sea única
    for i in range(count, len(bitmap) * 8):
        if bitmap[i // 8] & (0x80 >> (i % 8)):
            raise WireFormatError("Bits de relleno distintos de cero en el bitmap de direcciones")
    return directions


def encode_status(status: RevocationStatus) -> bytes:
    proof = status.proof
    out = bytearray()
    out.append(_KIND_CODES[proof.kind])
    out.append(len(proof.leaves))
    for leaf in proof.leaves:
        out += leaf.encode()
    out.append(len(proof.paths))
    for path in proof.paths:
        out += len(path.digests).to_bytes(2, "big")
        out += _encode_directions(path.directions)
        for digest in path.digests:
            out += digest
    out += encode_signed_root(status.signed_root)
    out += encode_freshness(status.freshness)
    return bytes(out)


def decode_status(data: bytes) -> RevocationStatus:
    reader = Reader(data)
    try:
        kind = _KIND_BY_CODE.get(reader.uint(1))
        if kind is None:
            raise WireFormatError("Tipo de prueba desconocido")
        leaves = []
        for _ in range(reader.uint(1)):
            serial = reader.take(reader.uint(1))
            index = reader.uint(8)
            leaves.append(Leaf(serial=serial, index=index))
        paths = []
        for _ in range(reader.uint(1)):
            count = reader.uint(2)
            directions = _decode_directions(reader.take((count + 7) // 8), count)
            digests = tuple(reader.take(DIGEST_SIZE) for _ in range(count))
            paths.append(AuthPath(directions=directions, digests=digests))
        signed_root = read_signed_root(reader)
        freshness = FreshnessStatement(value=reader.take(FRESHNESS_SIZE))
        reader.expect_end()
        proof = MembershipProof(kind=kind, leaves=tuple(leaves), paths=tuple(paths))
        return RevocationStatus(proof=proof, signed_root=signed_root, freshness=freshness)
    except ValidationError as exc:
        raise WireFormatError(f"Estado de revocación inválido: {exc.error_count()} errores de validación")


# Enmarcado de mensajes: prefijo de 4 bytes por mensaje
def frame(payload: bytes) -> bytes:
    return FRAME_HEADER.pack(len(payload)) + payload


def frame_all(payloads: Iterable[bytes]) -> bytes:
    return b"".join(frame(p) for p in payloads)


def unframe_all(data: bytes) -> list[bytes]:
    reader = Reader(data)
    payloads = []
    while reader.remaining:
        payloads.append(reader.take(reader.uint(4)))
    return payloads


# Mensajes de diseminación
# IssuanceMessage = serial_count(4) ‖ por serie [len(1) ‖ serie] ‖ SignedRoot
def encode_issuance(msg: IssuanceMessage) -> bytes:
    out = bytearray(len(msg.serials).to_bytes(4, "big"))
    for serial in msg.serials:
        out.append(len(serial))
        out += serial
    out += encode_signed_root(msg.signed_root)
    return bytes(out)


def decode_issuance(data: bytes) -> IssuanceMessage:
    reader = Reader(data)
    try:
        serials = tuple(reader.take(reader.uint(1)) for _ in range(reader.uint(4)))
        signed_root = read_signed_root(reader)
        reader.expect_end()
        return IssuanceMessage(ca_id=signed_root.ca_id, serials=serials, signed_root=signed_root)
    except ValidationError as exc:
        raise WireFormatError(f"Mensaje de emisión inválido: {exc.error_count()} errores de validación")


# Prueba de mal comportamiento = SignedRoot_a ‖ SignedRoot_b
def encode_root_pair(a: SignedRoot, b: SignedRoot) -> bytes:
    return encode_signed_root(a) + encode_signed_root(b)


def decode_root_pair(data: bytes) -> tuple[SignedRoot, SignedRoot]:
    reader = Reader(data)
    try:
        a = read_signed_root(reader)
        b = read_signed_root(reader)
    except ValidationError as exc:
        raise WireFormatError(f"Par de raíces inválido: {exc.error_count()} errores de validación")
    reader.expect_end()
    return a, b
