from __future__ import annotations

from enum import Enum

from pydantic import BaseModel, ConfigDict, Field

from app.config.settings import CLIENT_GRACE_SECONDS
from app.repositories.ca_registry_repository import CaRegistry
from app.schemas.monitor import MisbehaviorProof


class ConnPhase(str, Enum):
    HANDSHAKING = "Handshaking"
    ACCEPTED = "Accepted"
    REJECTED = "Rejected"
    INTERRUPTED = "Interrupted"


class RejectReason(str, Enum):
    REVOKED = "Revoked"
    NO_STATUS = "NoStatus"
    INVALID_STATUS = "InvalidStatus"
    BAD_CERTIFICATE = "BadCertificate"


class InterruptReason(str, Enum):
    STALE_STATUS = "StaleStatus"
    REVOKED = "Revoked"
    MALFORMED_STATUS = "MalformedStatus"


class ClientPolicy(BaseModel):
    model_config = ConfigDict(arbitrary_types_allowed=True, frozen=True)

    registry: CaRegistry
    grace: float = Field(default=CLIENT_GRACE_SECONDS, ge=0)
    # Un cliente RITM que no recibe estado rechaza; uno heredado acepta igualmente
    expect_ritm: bool = True
    # Δ impuesto por configuración; si falta se usa el de la CA en el registro
    delta: int | None = Field(default=None, ge=1)

    def delta_for(self, ca_id: bytes) -> int:
        return self.delta if self.delta is not None else self.registry.delta(ca_id)

    def window(self, ca_id: bytes) -> float:
        return 2 * self.delta_for(ca_id) + self.grace


class ConnVerdict(BaseModel):
    model_config = ConfigDict(frozen=True)

    phase: ConnPhase = ConnPhase.HANDSHAKING
    reason: RejectReason | InterruptReason | None = None
    ca_id: bytes | None = None
    serial: bytes | None = None
    last_valid_status: float | None = None
    evidence: MisbehaviorProof | None = None

    @classmethod
    def rejected(cls, reason: RejectReason, **kwargs) -> "ConnVerdict":
        return cls(phase=ConnPhase.REJECTED, reason=reason, **kwargs)

    @property
    def is_open(self) -> bool:
        return self.phase in (ConnPhase.HANDSHAKING, ConnPhase.ACCEPTED)


class ClientEvent(BaseModel):
    model_config = ConfigDict(frozen=True)

    timestamp: float
    event: str
    reason: str = ""

    def to_line(self) -> str:
        return f"{self.timestamp:.3f} {self.event} {self.reason}".rstrip()
