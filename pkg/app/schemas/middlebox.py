from __future__ import annotations

from enum import Enum, IntEnum

from pydantic import BaseModel, ConfigDict, Field


class ContentType(IntEnum):
    CHANGE_CIPHER_SPEC = 20
    ALERT = 21
    HANDSHAKE = 22
    APPLICATION_DATA = 23
    RITM_STATUS = 0x52


class HandshakeType(IntEnum):
    CLIENT_HELLO = 1
    SERVER_HELLO = 2
    CERTIFICATE = 11
    SERVER_HELLO_DONE = 14
    FINISHED = 20


class Direction(str, Enum):
    CLIENT_TO_SERVER = "c2s"
    SERVER_TO_CLIENT = "s2c"


class Stage(str, Enum):
    CLIENT_HELLO = "ClientHello"
    SERVER_HELLO = "ServerHello"
    ESTABLISHED = "Established"


class TlsRecord(BaseModel):
    model_config = ConfigDict(frozen=True)

    content_type: int
    version: int
    payload: bytes

    @property
    def length(self) -> int:
        return len(self.payload)


class HandshakeView(BaseModel):
    model_config = ConfigDict(frozen=True)

    msg_type: int
    version: int = 0
    extensions: tuple[tuple[int, bytes], ...] = ()
    certificates: tuple[bytes, ...] = ()

    def has_extension(self, ext_type: int) -> bool:
        return any(t == ext_type for t, _ in self.extensions)


class ConnKey(BaseModel):
    """4-tupla vista desde el cliente (origen = cliente)."""

    model_config = ConfigDict(frozen=True)

    client_ip: str
    server_ip: str
    client_port: int
    server_port: int

    def __str__(self) -> str:
        return f"{self.client_ip}:{self.client_port}->{self.server_ip}:{self.server_port}"


class ConnState(BaseModel):
    key: ConnKey
    stage: Stage = Stage.CLIENT_HELLO
    ca_id: bytes | None = None
    serial: bytes | None = None
    last_status: float | None = None
    record_version: int = 0x0303
    created_at: float
    last_activity: float
    statuses_injected: int = Field(default=0, ge=0)
