from __future__ import annotations

from typing import Literal, NamedTuple

from pydantic import BaseModel, ConfigDict, Field, model_validator

from app.config.settings import (
    CLIENT_GRACE_SECONDS,
    DELTA_SECONDS,
    EDGE_TTL_SECONDS,
    MONITOR_EVERY_DELTAS,
    STATE_TIMEOUT_SECONDS,
    SYNC_JITTER,
)


class RevocationEvent(NamedTuple):
    timestamp: float
    ca_id: bytes
    serial: bytes


class RevocationTrace(BaseModel):
    events: list[RevocationEvent] = Field(default_factory=list)

    def __len__(self) -> int:
        return len(self.events)


class TraceParams(BaseModel):
    """Perfil sintético: `steady` reparte tasas por CA alrededor de la media; `heartbleed` añade un pico."""

    model_config = ConfigDict(extra="forbid")

    profile: Literal["none", "steady", "heartbleed", "csv"] = "none"
    cas: int = Field(default=1, ge=1)
    mean_per_ca: float = Field(default=0.0, ge=0)
    duration_days: float = Field(default=1.0, gt=0)
    day_seconds: float = Field(default=86_400.0, gt=0)
    start: float = 0.0
    burst_day: float = 7.0
    burst_multiple: float = Field(default=10.0, ge=1)
    burst_width_days: float = Field(default=2.0, gt=0)
    csv_path: str | None = None


class TopologySpec(BaseModel):
    model_config = ConfigDict(extra="forbid")

    cas: int = Field(default=1, ge=1)
    edges: int = Field(default=1, ge=1)
    ras: int = Field(default=1, ge=1)
    servers: int = Field(default=1, ge=1)


class ConnectionSpec(BaseModel):
    model_config = ConfigDict(extra="forbid")

    server: int = Field(default=0, ge=0)
    start: float = Field(default=1.0, ge=0)
    # RAs en el camino, del lado del cliente hacia el servidor
    path: list[int] = Field(default_factory=lambda: [0])
    ritm: bool = True


class LinkFault(BaseModel):
    """Pérdidas, duplicados y reordenación entre un edge y las RAs que lo usan."""

    model_config = ConfigDict(extra="forbid")

    edge: int = Field(ge=0)
    start: float = Field(ge=0)
    end: float
    drop: float = Field(default=0.0, ge=0, le=1)
    duplicate: float = Field(default=0.0, ge=0, le=1)
    reorder: float = Field(default=0.0, ge=0, le=1)


class DelayFault(BaseModel):
    """Retardo de tránsito en un enlace del camino de las conexiones: `delay` fijo más un jitter uniforme en [0, jitter].

    El enlace k une el nodo k y el k+1 de la cadena cliente, RAs del camino, servidor; el 0 es cliente y primera RA.
    Cada enlace entrega en orden en cada sentido aunque el jitter varíe.
    """

    model_config = ConfigDict(extra="forbid")

    link: int = Field(default=0, ge=0)
    # Sin conexión concreta afecta a todas las que tengan ese enlace
    connection: int | None = Field(default=None, ge=0)
    start: float = Field(default=0.0, ge=0)
    end: float | None = None
    delay: float = Field(default=0.0, ge=0)
    jitter: float = Field(default=0.0, ge=0)

    def active(self, elapsed: float) -> bool:
        return self.start <= elapsed and (self.end is None or elapsed < self.end)


class OutageFault(BaseModel):
    model_config = ConfigDict(extra="forbid")

    target: Literal["dp", "edge"]
    index: int = Field(default=0, ge=0)
    start: float = Field(ge=0)
    end: float


class RevokeServerFault(BaseModel):
    model_config = ConfigDict(extra="forbid")

    server: int = Field(ge=0)
    at: float = Field(ge=0)


class BlockStatusFault(BaseModel):
    """Un atacante en el camino descarta los registros de estado de una conexión desde `at`."""

    model_config = ConfigDict(extra="forbid")

    connection: int = Field(ge=0)
    at: float = Field(ge=0)


class EquivocationFault(BaseModel):
    model_config = ConfigDict(extra="forbid")

    ca: int = Field(default=0, ge=0)
    at: float = Field(ge=0)


class FaultsSpec(BaseModel):
    model_config = ConfigDict(extra="forbid")

    links: list[LinkFault] = Field(default_factory=list)
    delays: list[DelayFault] = Field(default_factory=list)
    outages: list[OutageFault] = Field(default_factory=list)
    revoke_server: list[RevokeServerFault] = Field(default_factory=list)
    block_status: list[BlockStatusFault] = Field(default_factory=list)
    equivocate: list[EquivocationFault] = Field(default_factory=list)


class Scenario(BaseModel):
    model_config = ConfigDict(extra="forbid")

    name: str = "scenario"
    seed: int = 0
    duration: float = Field(gt=0)
    delta: int = Field(default=DELTA_SECONDS, ge=1)
    chain_length: int = Field(default=1000, ge=1)
    grace: float = Field(default=CLIENT_GRACE_SECONDS, ge=0)
    edge_ttl: float = Field(default=EDGE_TTL_SECONDS, ge=0)
    sync_jitter: float = Field(default=SYNC_JITTER, ge=0, lt=1)
    monitor_every: int = Field(default=MONITOR_EVERY_DELTAS, ge=1)
    # El servidor de prueba envía datos con esta cadencia; mantiene vivo el estado en las RAs
    server_data_interval: float | None = Field(default=30.0, gt=0)
    state_timeout: float = Field(default=STATE_TIMEOUT_SECONDS, gt=0)
    topology: TopologySpec = Field(default_factory=TopologySpec)
    connections: list[ConnectionSpec] = Field(default_factory=lambda: [ConnectionSpec()])
    trace: TraceParams = Field(default_factory=TraceParams)
    faults: FaultsSpec = Field(default_factory=FaultsSpec)

    @model_validator(mode="after")
    def _references(self) -> "Scenario":
        topo = self.topology
        for i, conn in enumerate(self.connections):
            if conn.server >= topo.servers:
                raise ValueError(f"connections[{i}].server fuera de rango")
            if not conn.path or any(not 0 <= r < topo.ras for r in conn.path):
                raise ValueError(f"connections[{i}].path referencia una RA inexistente")
            if len(set(conn.path)) != len(conn.path):
                raise ValueError(f"connections[{i}].path repite una RA")
        for i, fault in enumerate(self.faults.links):
            if fault.edge >= topo.edges or fault.end < fault.start:
                raise ValueError(f"faults.links[{i}] inválido")
        for i, fault in enumerate(self.faults.delays):
            if fault.end is not None and fault.end < fault.start:
                raise ValueError(f"faults.delays[{i}] inválido")
            if fault.connection is not None:
                if fault.connection >= len(self.connections):
                    raise ValueError(f"faults.delays[{i}].connection fuera de rango")
                if fault.link > len(self.connections[fault.connection].path):
                    raise ValueError(f"faults.delays[{i}].link fuera del camino")
            elif all(fault.link > len(conn.path) for conn in self.connections):
                raise ValueError(f"faults.delays[{i}].link fuera de todos los caminos")
        for i, fault in enumerate(self.faults.outages):
            limit = topo.edges if fault.target == "edge" else 2
            if fault.index >= limit or fault.end < fault.start:
                raise ValueError(f"faults.outages[{i}] inválido")
        for i, fault in enumerate(self.faults.revoke_server):
            if fault.server >= topo.servers:
                raise ValueError(f"faults.revoke_server[{i}].server fuera de rango")
        for i, fault in enumerate(self.faults.block_status):
            if fault.connection >= len(self.connections):
                raise ValueError(f"faults.block_status[{i}].connection fuera de rango")
        for i, fault in enumerate(self.faults.equivocate):
            if fault.ca >= topo.cas:
                raise ValueError(f"faults.equivocate[{i}].ca fuera de rango")
            if topo.edges < 2:
                raise ValueError("La equivocación necesita al menos dos edges (uno por rama)")
        if len({f.ca for f in self.faults.equivocate}) != len(self.faults.equivocate):
            raise ValueError("Solo una equivocación por CA")
        if self.trace.profile == "csv" and not self.trace.csv_path:
            raise ValueError("trace.csv_path es obligatorio con el perfil csv")
        return self


class EventLogEntry(BaseModel):
    model_config = ConfigDict(frozen=True)

    timestamp: float
    party: str
    event: str
    detail: str = ""

    def to_line(self) -> str:
        return f"{self.timestamp:.3f} {self.party} {self.event} {self.detail}".rstrip()


class SizeStats(BaseModel):
    count: int = 0
    minimum: int = 0
    mean: float = 0.0
    maximum: int = 0


class ConnectionOutcome(BaseModel):
    index: int
    server: int
    phase: str
    reason: str | None = None
    accepted_at: float | None = None
    ended_at: float | None = None
    revoked_at: float | None = None
    detection_latency: float | None = None
    blocked_at: float | None = None
    last_valid_status: float | None = None


class MetricsReport(BaseModel):
    scenario: str
    seed: int
    start: float
    end: float
    delta: int
    revocations: int = 0
    bandwidth_per_delta: list[int] = Field(default_factory=list)
    storage_bytes: dict[str, int] = Field(default_factory=dict)
    status_sizes: SizeStats = Field(default_factory=SizeStats)
    connections: list[ConnectionOutcome] = Field(default_factory=list)
    misbehavior_proofs: list[str] = Field(default_factory=list)
    misbehavior_detected_at: float | None = None
    replicas_converged: bool = False
    events: list[EventLogEntry] = Field(default_factory=list)
