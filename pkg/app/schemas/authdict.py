from __future__ import annotations

from enum import Enum
from typing import Annotated

from pydantic import BaseModel, ConfigDict, Field, PrivateAttr, field_validator, model_validator

from app.core.crypto import DIGEST_SIZE, SIGNATURE_SIZE, chain_evaluate


CA_ID_SIZE = 8
MAX_SERIAL_SIZE = 20
MAX_INDEX = 2**64 - 1
# Cada cuántos eslabones guarda la CA un valor intermedio de la cadena
CHAIN_CHECKPOINT_EVERY = 256

Digest = Annotated[bytes, Field(min_length=DIGEST_SIZE, max_length=DIGEST_SIZE)]
CaId = Annotated[bytes, Field(min_length=CA_ID_SIZE, max_length=CA_ID_SIZE)]


def validate_serial(raw: bytes) -> bytes:
    """Comprueba la codificación canónica: 1..20 bytes, sin cero inicial salvo el valor 0."""
    if not 1 <= len(raw) <= MAX_SERIAL_SIZE:
        raise ValueError(f"El número de serie debe tener entre 1 y {MAX_SERIAL_SIZE} bytes")
    if len(raw) > 1 and raw[0] == 0:
        raise ValueError("Número de serie no canónico (cero inicial)")
    return bytes(raw)


def serial_from_int(value: int) -> bytes:
    if value < 0:
        raise ValueError("El número de serie no puede ser negativo")
    length = max(1, (value.bit_length() + 7) // 8)
    return validate_serial(value.to_bytes(length, "big"))


def serial_to_int(serial: bytes) -> int:
    return int.from_bytes(serial, "big")


def ca_id_from_hex(value: str) -> bytes:
    raw = bytes.fromhex(value.strip())
    if len(raw) != CA_ID_SIZE:
        raise ValueError(f"El identificador de CA debe tener {CA_ID_SIZE} bytes")
    return raw


class Leaf(BaseModel):
    model_config = ConfigDict(frozen=True)

    serial: bytes
    index: int = Field(ge=1, le=MAX_INDEX)

    @field_validator("serial")
    @classmethod
    def _canonical(cls, v: bytes) -> bytes:
        return validate_serial(v)

    def encode(self) -> bytes:
        return encode_leaf(self.serial, self.index)


def encode_leaf(serial: bytes, index: int) -> bytes:
    # longitud (1) ‖ serie ‖ índice (8, big-endian)
    return bytes([len(serial)]) + serial + index.to_bytes(8, "big")


class HashChainSecret(BaseModel):
    """Semilla de la cadena de hashes; solo la conoce la CA."""

    v: Digest
    m: int = Field(ge=1)
    t0: int

    _checkpoints: list[bytes] = PrivateAttr(default_factory=list)

    def model_post_init(self, __context) -> None:
        # checkpoints[i] = H^(i*CHAIN_CHECKPOINT_EVERY)(v)
        value = self.v
        checkpoints = [value]
        for _ in range(self.m // CHAIN_CHECKPOINT_EVERY):
            value = chain_evaluate(value, CHAIN_CHECKPOINT_EVERY)
            checkpoints.append(value)
        self._checkpoints = checkpoints

    def value_at(self, k: int) -> bytes:
        """H^k(v) usando el checkpoint más cercano por debajo de k."""
        if not 0 <= k <= self.m:
            raise ValueError(f"k fuera de rango: {k}")
        base = k // CHAIN_CHECKPOINT_EVERY
        return chain_evaluate(self._checkpoints[base], k - base * CHAIN_CHECKPOINT_EVERY)

    @property
    def anchor(self) -> bytes:
        return self.value_at(self.m)


class SignedRoot(BaseModel):
    model_config = ConfigDict(frozen=True)

    ca_id: CaId
    root: Digest
    n: int = Field(ge=0, le=MAX_INDEX)
    anchor: Digest
    timestamp: int = Field(ge=0, le=MAX_INDEX)
    signature: bytes = Field(min_length=SIGNATURE_SIZE, max_length=SIGNATURE_SIZE)

    def signed_payload(self) -> bytes:
        return signed_root_payload(self.ca_id, self.root, self.n, self.anchor, self.timestamp)


def signed_root_payload(ca_id: bytes, root: bytes, n: int, anchor: bytes, timestamp: int) -> bytes:
    return ca_id + root + n.to_bytes(8, "big") + anchor + timestamp.to_bytes(8, "big")


class FreshnessStatement(BaseModel):
    model_config = ConfigDict(frozen=True)

    value: Digest


class NeedNewRoot(BaseModel):
    """La cadena de la raíz actual se agotó (p >= m)."""

    model_config = ConfigDict(frozen=True)

    period: int


class ProofKind(str, Enum):
    PRESENT = "Present"
    ABSENT = "Absent"


class AuthPath(BaseModel):
    """Hermanos de abajo hacia arriba; directions[i] es True si el hermano i está a la izquierda."""

    model_config = ConfigDict(frozen=True)

    directions: tuple[bool, ...] = ()
    digests: tuple[Digest, ...] = ()

    @model_validator(mode="after")
    def _same_length(self) -> "AuthPath":
        if len(self.directions) != len(self.digests):
            raise ValueError("directions y digests deben tener la misma longitud")
        return self


class MembershipProof(BaseModel):
    model_config = ConfigDict(frozen=True)

    kind: ProofKind
    leaves: tuple[Leaf, ...] = ()
    paths: tuple[AuthPath, ...] = ()

    @model_validator(mode="after")
    def _shape(self) -> "MembershipProof":
        if len(self.leaves) != len(self.paths):
            raise ValueError("Cada hoja necesita su camino de autenticación")
        if self.kind is ProofKind.PRESENT and len(self.leaves) != 1:
            raise ValueError("Una prueba de presencia lleva exactamente una hoja")
        if len(self.leaves) > 2:
            raise ValueError("Una prueba de ausencia lleva como máximo dos hojas")
        return self


class RevocationStatus(BaseModel):
    model_config = ConfigDict(frozen=True)

    proof: MembershipProof
    signed_root: SignedRoot
    freshness: FreshnessStatement


class StatusOutcome(str, Enum):
    REVOKED = "Revoked"
    NOT_REVOKED = "NotRevoked"
    INVALID = "Invalid"


class InvalidReason(str, Enum):
    BAD_SIGNATURE = "BadSignature"
    BAD_PROOF = "BadProof"
    STALE_FRESHNESS = "StaleFreshness"
    MALFORMED_STATUS = "MalformedStatus"


class StatusVerdict(BaseModel):
    model_config = ConfigDict(frozen=True)

    outcome: StatusOutcome
    reason: InvalidReason | None = None
    detail: str = ""

    @property
    def is_valid(self) -> bool:
        return self.outcome is not StatusOutcome.INVALID

    @classmethod
    def invalid(cls, reason: InvalidReason, detail: str = "") -> "StatusVerdict":
        return cls(outcome=StatusOutcome.INVALID, reason=reason, detail=detail)
