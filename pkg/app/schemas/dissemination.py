from __future__ import annotations

from pydantic import BaseModel, ConfigDict, Field, field_validator, model_validator

from app.schemas.authdict import CaId, FreshnessStatement, SignedRoot, validate_serial


class IssuanceMessage(BaseModel):
    """Series revocadas + nueva raíz firmada."""

    model_config = ConfigDict(frozen=True)

    ca_id: CaId
    serials: tuple[bytes, ...]
    signed_root: SignedRoot

    @field_validator("serials")
    @classmethod
    def _serials(cls, v: tuple[bytes, ...]) -> tuple[bytes, ...]:
        if not v:
            raise ValueError("Un mensaje de emisión necesita al menos una serie")
        return tuple(validate_serial(s) for s in v)

    @model_validator(mode="after")
    def _consistent(self) -> "IssuanceMessage":
        if self.signed_root.ca_id != self.ca_id:
            raise ValueError("La raíz firmada es de otra CA")
        if self.signed_root.n < len(self.serials):
            raise ValueError("n de la raíz firmada menor que el número de series")
        return self

    @property
    def first_index(self) -> int:
        return self.signed_root.n - len(self.serials) + 1

    @property
    def prior_n(self) -> int:
        return self.signed_root.n - len(self.serials)


class FreshnessMessage(BaseModel):
    model_config = ConfigDict(frozen=True)

    ca_id: CaId
    statement: FreshnessStatement


class CaLog(BaseModel):
    """Vista de solo lectura del log de una CA en el punto de distribución."""

    ca_id: CaId
    issuances: list[IssuanceMessage] = Field(default_factory=list)
    published_at: list[float] = Field(default_factory=list)
    freshness: FreshnessMessage | None = None
    active_since: float | None = None


class UpdateLog(BaseModel):
    cas: list[CaLog] = Field(default_factory=list)


class SyncCursor(BaseModel):
    ca_id: CaId
    confirmed_n: int = Field(default=0, ge=0)


class SyncResult(BaseModel):
    ca_id: CaId
    applied: int = 0
    confirmed_n: int = 0
    recovered: bool = False
    renewed_root: bool = False
    fresh: bool = False
    error: str | None = None


class CaRegistryEntry(BaseModel):
    model_config = ConfigDict(frozen=True)

    ca_id: CaId
    public_key: bytes = Field(min_length=32, max_length=32)
    delta: int = Field(ge=1)

    def to_line(self) -> str:
        return f"{self.ca_id.hex()} {self.public_key.hex()} {self.delta}"
