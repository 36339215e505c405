"""Simulador de escenarios: CAs, puntos de distribución, edges, RAs, clientes y servidores de prueba
unidos en proceso y movidos por un reloj simulado.

Todas las interacciones pasan por el código real de cada parte (firmas, formato de cable, DPI).
La entrega entre partes es instantánea; el tiempo solo avanza entre eventos programados.
"""
from __future__ import annotations

import json
import logging
import math
import random
try:
    import tomllib
except ModuleNotFoundError:  # Python < 3.11
    import tomli as tomllib
from collections import defaultdict
from dataclasses import dataclass, field
from pathlib import Path
from statistics import fmean
from typing import Callable

from pydantic import ValidationError

from app.core.clock import SimulatedClock
from app.core.crypto import signing_key_from_seed
from app.core.errors import DpUnreachable, EdgeUnreachable, RitmError, ScenarioInvalid, WireFormatError
from app.core.scheduler import EventScheduler, ScheduledEvent
from app.core.tls import RecordSplitter
from app.db.session import build_engine, build_session_factory
from app.models.base import Base
import app.models.update_log  # noqa: F401  (registra las tablas del log)
from app.repositories.ca_registry_repository import CaRegistry
from app.schemas.authdict import SignedRoot, serial_from_int
from app.schemas.client import ClientPolicy, ConnPhase
from app.schemas.dissemination import FreshnessMessage, IssuanceMessage
from app.schemas.middlebox import ConnKey, ContentType, Direction
from app.schemas.simulation import (
    ConnectionOutcome,
    ConnectionSpec,
    EventLogEntry,
    LinkFault,
    MetricsReport,
    RevocationTrace,
    Scenario,
    SizeStats,
)
from app.services.audit_service import AuditAction, AuditService
from app.services.bandwidth_service import bandwidth_account
from app.services.ca_service import CertificationAuthority
from app.services.client_service import ClientConnection
from app.services.distribution_service import DisseminationSource, DistributionService
from app.services.edge_service import EdgeServer
from app.services.monitor_service import MonitorService, proof_to_bytes
from app.services.ra_service import RevocationAgent
from app.services.stub_server_service import ServerSession
from app.services.sync_service import RaSyncClient, ReplicaStore
from app.services.trace_service import iter_trace, load_trace_csv, trace_ca_ids


logger = logging.getLogger(__name__)

# Series fuera del espacio de 3 bytes de las trazas: certificados de servidor y revocaciones de equivocación
SERVER_SERIAL_BASE = 0x0100_0000
EQUIVOCATION_SERIAL_BASE = 0x0200_0000
CERTIFICATE_LIFETIME = 10 * 365 * 86_400


def load_scenario(path: str | Path) -> Scenario:
    path = Path(path)
    try:
        with path.open("rb") as handle:
            raw = tomllib.load(handle)
    except FileNotFoundError:
        raise ScenarioInvalid("El fichero de escenario no existe", location=str(path))
    except tomllib.TOMLDecodeError as exc:
        raise ScenarioInvalid(f"TOML inválido: {exc}", location=str(path))
    scenario = parse_scenario(raw, source=str(path))
    csv_path = scenario.trace.csv_path
    if csv_path and not Path(csv_path).is_absolute():
        # Rutas relativas al fichero de escenario
        trace = scenario.trace.model_copy(update={"csv_path": str(path.parent / csv_path)})
        scenario = scenario.model_copy(update={"trace": trace})
    return scenario


def parse_scenario(raw: dict, source: str = "scenario") -> Scenario:
    try:
        return Scenario.model_validate(raw)
    except ValidationError as exc:
        error = exc.errors()[0]
        where = ".".join(str(part) for part in error["loc"])
        raise ScenarioInvalid(error["msg"], location=f"{source}:{where}" if where else source)


class FaultyLink:
    """Enlace hacia una fuente de difusión con caídas, pérdidas, duplicados y reordenación programados."""

    def __init__(
        self,
        target: DisseminationSource,
        name: str,
        clock: SimulatedClock,
        rng: random.Random,
        *,
        start: float,
        outages: list[tuple[float, float]] | None = None,
        faults: list[LinkFault] | None = None,
        unreachable: type[RitmError] = EdgeUnreachable,
    ) -> None:
        self.target = target
        self.name = name
        self.clock = clock
        self.rng = rng
        self.start = start
        self.outages = outages or []
        self.faults = faults or []
        self.unreachable = unreachable
        self.dropped = 0

    def _elapsed(self) -> float:
        return self.clock.now() - self.start

    def _check_up(self) -> None:
        elapsed = self._elapsed()
        if any(begin <= elapsed < end for begin, end in self.outages):
            raise self.unreachable(f"{self.name} caído en t={elapsed:.3f}")

    def _active(self) -> list[LinkFault]:
        elapsed = self._elapsed()
        return [f for f in self.faults if f.start <= elapsed < f.end]

    def updates(self, ca_id: bytes, from_n: int) -> list[IssuanceMessage]:
        self._check_up()
        messages = self.target.updates(ca_id, from_n)
        for fault in self._active():
            kept = [m for m in messages if self.rng.random() >= fault.drop]
            self.dropped += len(messages) - len(kept)
            messages = kept
            messages = messages + [m for m in messages if self.rng.random() < fault.duplicate]
            if messages and self.rng.random() < fault.reorder:
                self.rng.shuffle(messages)
        return messages

    def freshness(self, ca_id: bytes) -> FreshnessMessage | None:
        self._check_up()
        statement = self.target.freshness(ca_id)
        for fault in self._active():
            if self.rng.random() < fault.drop:
                self.dropped += 1
                return None
        return statement

    def root(self, ca_id: bytes) -> SignedRoot | None:
        self._check_up()
        return self.target.root(ca_id)


@dataclass
class _CaNode:
    ca: CertificationAuthority
    targets: list[DistributionService]
    refresh_event: ScheduledEvent | None = None


@dataclass
class _RaNode:
    name: str
    agent: RevocationAgent
    sync: RaSyncClient
    monitor: MonitorService
    audit: AuditService
    dp_index: int
    tick_event: ScheduledEvent | None = None


@dataclass
class _SimConnection:
    index: int
    spec: ConnectionSpec
    key: ConnKey
    client: ClientConnection
    server: ServerSession
    path: list[_RaNode]
    blocked_at: float | None = None
    blocker: RecordSplitter = field(default_factory=RecordSplitter)
    revoked_at: float | None = None
    liveness_event: ScheduledEvent | None = None
    closed: bool = False
    # Instante de la última entrega programada por (enlace, sentido)
    in_flight: dict[tuple[int, Direction], float] = field(default_factory=dict)


class ScenarioRunner:
    def __init__(self, scenario: Scenario, trace: RevocationTrace | None = None) -> None:
        self.scenario = scenario
        self.clock = SimulatedClock()
        self.start = self.clock.now()
        self.end = self.start + scenario.duration
        self.scheduler = EventScheduler(self.clock)
        self.rng = random.Random(scenario.seed)
        self._delay_rng = random.Random(f"{scenario.seed}-delays")
        self.notes: list[EventLogEntry] = []
        self.revocations = 0
        self.trace = trace
        self._equivocation_serials = 0
        self._build()

    # Construcción
    def _child_rng(self) -> random.Random:
        return random.Random(self.rng.getrandbits(64))

    def _note(self, party: str, event: str, detail: str = "") -> None:
        self.notes.append(EventLogEntry(timestamp=self.clock.now(), party=party, event=event, detail=detail))

    def _build(self) -> None:
        s = self.scenario
        self.ca_ids = trace_ca_ids(s.topology.cas)
        self.ca_nodes: dict[bytes, list[_CaNode]] = {}
        cas = []
        for i, ca_id in enumerate(self.ca_ids):
            key = signing_key_from_seed(f"{s.seed}-ca-{i}".encode())
            cas.append(
                CertificationAuthority(
                    ca_id, key, self.clock, delta=s.delta, chain_length=s.chain_length, rng=self._child_rng(), name=f"ca-{i}"
                )
            )
        self.registry = CaRegistry(ca.registry_entry() for ca in cas)

        dp_count = 2 if s.faults.equivocate else 1
        self.dps: list[DistributionService] = []
        for _ in range(dp_count):
            engine = build_engine("sqlite://")
            Base.metadata.create_all(bind=engine)
            self.dps.append(DistributionService(build_session_factory(engine)(), self.registry, self.clock))
        for ca in cas:
            node = _CaNode(ca=ca, targets=list(self.dps))
            self.ca_nodes[ca.ca_id] = [node]
            self._publish(node, ca.bootstrap())
            self._schedule_refresh(node)

        self.edges: list[EdgeServer] = []
        self.edge_dp: list[int] = []
        for e in range(s.topology.edges):
            dp_index = e % dp_count
            origin = FaultyLink(
                self.dps[dp_index],
                f"dp-{dp_index}",
                self.clock,
                self._child_rng(),
                start=self.start,
                outages=[(o.start, o.end) for o in s.faults.outages if o.target == "dp" and o.index == dp_index],
                unreachable=DpUnreachable,
            )
            self.edges.append(EdgeServer(origin, self.clock, ttl=s.edge_ttl, name=f"edge-{e}"))
            self.edge_dp.append(dp_index)

        self.ras: list[_RaNode] = []
        for r in range(s.topology.ras):
            edge_index = r % s.topology.edges
            name = f"ra-{r}"
            link = FaultyLink(
                self.edges[edge_index],
                f"edge-{edge_index}",
                self.clock,
                self._child_rng(),
                start=self.start,
                outages=[(o.start, o.end) for o in s.faults.outages if o.target == "edge" and o.index == edge_index],
                faults=[f for f in s.faults.links if f.edge == edge_index],
            )
            store = ReplicaStore()
            audit = AuditService(self.clock, party=name)
            monitor = MonitorService(name, store, self.registry, audit, rng=self._child_rng())
            agent = RevocationAgent(name, store, self.registry, self.clock, state_timeout=s.state_timeout, monitor=monitor, audit=audit)
            sync = RaSyncClient(store, self.registry, link, self.clock, name=name)
            node = _RaNode(name, agent, sync, monitor, audit, self.edge_dp[edge_index])
            self.ras.append(node)
            self.scheduler.at(self.start, self._sync_round, node, label=f"{name} sync")
            self.scheduler.at(self.start, self._tick, node, label=f"{name} tick")
            self.scheduler.at(self.start + s.monitor_every * s.delta, self._monitor_round, node, label=f"{name} monitor")

        not_after = int(self.start) + CERTIFICATE_LIFETIME
        self.certificates: list[tuple[bytes, bytes, bytes]] = []
        for j in range(s.topology.servers):
            ca = cas[j % len(cas)]
            serial = serial_from_int(SERVER_SERIAL_BASE + j)
            self.certificates.append((ca.ca_id, serial, ca.issue_certificate(serial, f"server-{j}.example", not_after)))

        self.connections: list[_SimConnection] = []
        self._by_key: dict[ConnKey, _SimConnection] = {}
        for i, spec in enumerate(s.connections):
            self.scheduler.at(self.start + spec.start, self._open_connection, i, spec, label=f"conn-{i} start")
        for fault in s.faults.revoke_server:
            self.scheduler.at(self.start + fault.at, self._revoke_server, fault.server, label="revoke server")
        for fault in s.faults.block_status:
            self.scheduler.at(self.start + fault.at, self._block, fault.connection, label="block status")
        for fault in s.faults.equivocate:
            self.scheduler.at(self.start + fault.at, self._equivocate, self.ca_ids[fault.ca], label="equivocate")
        self._schedule_trace()

    def _schedule_trace(self) -> None:
        s = self.scenario
        if self.trace is not None:
            events = self.trace.events
        elif s.trace.profile == "csv":
            events = load_trace_csv(s.trace.csv_path).events
        else:
            params = s.trace.model_copy(update={"cas": s.topology.cas})
            events = list(iter_trace(params, s.seed))
        if self.trace is None:
            self.trace = RevocationTrace.model_construct(events=events)
        batches: dict[tuple[float, bytes], list[bytes]] = defaultdict(list)
        for event in events:
            if event.ca_id not in self.ca_nodes:
                raise ScenarioInvalid(f"La traza referencia la CA desconocida {event.ca_id.hex()}", location="trace")
            if 0 <= event.timestamp < s.duration:
                batches[(event.timestamp, event.ca_id)].append(event.serial)
        for (timestamp, ca_id), serials in batches.items():
            self.scheduler.at(self.start + timestamp, self._revoke, ca_id, serials, label="trace")

    # CA
    def _publish(self, node: _CaNode, message: IssuanceMessage | FreshnessMessage | SignedRoot) -> None:
        for dp in node.targets:
            try:
                dp.publish(message)
            except RitmError as exc:
                logger.warning(f"{node.ca.name}: publicación rechazada: {exc}")
                self._note(node.ca.name, "publish-error", str(exc))

    def _schedule_refresh(self, node: _CaNode) -> None:
        if node.refresh_event is not None:
            node.refresh_event.cancel()
        t = node.ca.signed_root.timestamp
        delta = node.ca.delta
        # Siguiente frontera de periodo t + kΔ estrictamente posterior a ahora
        k = math.floor((self.clock.now() - t) / delta) + 1
        instant = t + k * delta
        while instant <= self.clock.now():
            k += 1
            instant = t + k * delta
        node.refresh_event = self.scheduler.at(instant, self._refresh, node, label=f"{node.ca.name} refresh")

    def _refresh(self, node: _CaNode) -> None:
        node.refresh_event = None
        renewed, freshness = node.ca.refresh()
        if renewed is not None:
            self._publish(node, renewed)
            self._note(node.ca.name, "root-renewed", f"n={renewed.n}")
        self._publish(node, freshness)
        self._schedule_refresh(node)

    def _revoke(self, ca_id: bytes, serials: list[bytes]) -> None:
        for node in self.ca_nodes[ca_id]:
            try:
                message = node.ca.revoke(serials)
            except RitmError as exc:
                self._note(node.ca.name, "revoke-error", str(exc))
                continue
            self.revocations += len(serials)
            self._publish(node, message)
            self._schedule_refresh(node)

    def _revoke_server(self, server: int) -> None:
        ca_id, serial, _ = self.certificates[server]
        self._note(f"server-{server}", "revoked", serial.hex())
        self._revoke(ca_id, [serial])
        for conn in self.connections:
            if conn.spec.server == server and conn.revoked_at is None:
                conn.revoked_at = self.clock.now()

    def _equivocate(self, ca_id: bytes) -> None:
        honest = self.ca_nodes[ca_id][0]
        twin = _CaNode(ca=honest.ca.fork(), targets=[self.dps[1]])
        honest.targets = [self.dps[0]]
        self.ca_nodes[ca_id] = [honest, twin]
        self._note(honest.ca.name, "equivocation", "dos ramas del diccionario")
        for node in (honest, twin):
            self._equivocation_serials += 1
            serial = serial_from_int(EQUIVOCATION_SERIAL_BASE + self._equivocation_serials)
            self.revocations += 1
            self._publish(node, node.ca.revoke([serial]))
            self._schedule_refresh(node)

    # RA
    def _sync_round(self, node: _RaNode) -> None:
        for result in node.sync.sync_all():
            if result.error:
                self._note(node.name, "sync-error", f"{result.ca_id.hex()} {result.error}")
            elif result.recovered:
                self._note(node.name, "sync-recovered", result.ca_id.hex())
        # Intervalo en [Δ(1 - jitter), Δ]
        interval = self.scenario.delta * (1 - self.rng.random() * self.scenario.sync_jitter)
        self.scheduler.after(interval, self._sync_round, node, label=f"{node.name} sync")

    def _tick(self, node: _RaNode) -> None:
        node.tick_event = None
        for key, record in node.agent.tick().items():
            conn = self._by_key.get(key)
            if conn is not None and not conn.closed:
                position = next(i for i, hop in enumerate(conn.path) if hop is node)
                self._to_client(conn, record, position)
        now = self.clock.now()
        due = node.agent.next_status_due()
        instant = now + self.scenario.delta if due is None else min(due, now + self.scenario.delta)
        if instant <= now:
            # Estado pendiente sin réplica utilizable: se reintenta en la próxima décima de Δ
            instant = now + self.scenario.delta / 10
        node.tick_event = self.scheduler.at(instant, self._tick, node, label=f"{node.name} tick")

    def _rearm_tick(self, node: _RaNode) -> None:
        due = node.agent.next_status_due()
        # Sin evento pendiente es que el propio tick está en curso y se reprogramará al terminar
        if due is None or node.tick_event is None or node.tick_event.instant <= due:
            return
        node.tick_event.cancel()
        node.tick_event = self.scheduler.at(max(due, self.clock.now()), self._tick, node, label=f"{node.name} tick")

    def _monitor_round(self, node: _RaNode) -> None:
        edges = [(edge.name, edge) for edge in self.edges]
        peers = [other.monitor for other in self.ras if other is not node]
        node.monitor.monitor_round(edges, peers)
        self.scheduler.after(self.scenario.monitor_every * self.scenario.delta, self._monitor_round, node, label=f"{node.name} monitor")

    # Conexiones
    def _open_connection(self, index: int, spec: ConnectionSpec) -> None:
        name = f"client-{index}"
        key = ConnKey(
            client_ip=f"10.1.{index // 250}.{index % 250 + 1}",
            server_ip=f"10.2.0.{spec.server + 1}",
            client_port=40_000 + index,
            server_port=443,
        )
        policy = ClientPolicy(registry=self.registry, grace=self.scenario.grace, expect_ritm=spec.ritm)
        client = ClientConnection(policy, self.clock, rng=self._child_rng(), ritm=spec.ritm, name=name)
        server = ServerSession(self.certificates[spec.server][2], self._child_rng())
        conn = _SimConnection(index, spec, key, client, server, [self.ras[r] for r in spec.path])
        self.connections.append(conn)
        self._by_key[key] = conn
        self._to_server(conn, client.start())
        if self.scenario.server_data_interval is not None:
            self.scheduler.after(self.scenario.server_data_interval, self._server_data, conn, label=f"{name} data")

    def _link_delay(self, conn: _SimConnection, link: int) -> float:
        elapsed = self.clock.now() - self.start
        total = 0.0
        for fault in self.scenario.faults.delays:
            if fault.link == link and fault.connection in (None, conn.index) and fault.active(elapsed):
                total += fault.delay + (self._delay_rng.uniform(0, fault.jitter) if fault.jitter else 0.0)
        return total

    def _cross(self, conn: _SimConnection, link: int, direction: Direction, data: bytes, arrive: Callable[..., None]) -> None:
        """Pone `data` en el enlace; llega tras su retardo y nunca antes que lo enviado previamente en ese sentido."""
        now = self.clock.now()
        instant = max(now + self._link_delay(conn, link), conn.in_flight.get((link, direction), now))
        if instant <= now:
            arrive(conn, link, data)
            return
        conn.in_flight[(link, direction)] = instant
        self.scheduler.at(instant, arrive, conn, link, data, label=f"client-{conn.index} link {link}")

    def _to_server(self, conn: _SimConnection, data: bytes, link: int = 0) -> None:
        """Envía hacia el servidor por el enlace `link` (0 sale del cliente)."""
        self._cross(conn, link, Direction.CLIENT_TO_SERVER, data, self._arrive_server_side)

    def _arrive_server_side(self, conn: _SimConnection, link: int, data: bytes) -> None:
        if conn.closed:
            return
        if link < len(conn.path):
            data = conn.path[link].agent.inspect(conn.key, Direction.CLIENT_TO_SERVER, data)
            if data:
                self._to_server(conn, data, link + 1)
            return
        reply = conn.server.receive(data)
        if reply:
            self._to_client(conn, reply, len(conn.path))

    def _to_client(self, conn: _SimConnection, data: bytes, link: int) -> None:
        """Envía hacia el cliente por el enlace `link`: len(path) sale del servidor y k de la RA path[k]."""
        self._cross(conn, link, Direction.SERVER_TO_CLIENT, data, self._arrive_client_side)

    def _arrive_client_side(self, conn: _SimConnection, link: int, data: bytes) -> None:
        if conn.closed:
            return
        if link > 0:
            data = conn.path[link - 1].agent.inspect(conn.key, Direction.SERVER_TO_CLIENT, data)
            if data:
                self._to_client(conn, data, link - 1)
            return
        data = self._filter_blocked(conn, data)
        if not data:
            return
        reply = conn.client.receive(data)
        for hop in conn.path:
            self._rearm_tick(hop)
        self._after_client_update(conn)
        if reply and not conn.closed:
            self._to_server(conn, reply)

    def _filter_blocked(self, conn: _SimConnection, data: bytes) -> bytes:
        if conn.blocked_at is None:
            return data
        conn.blocker.push(data)
        out = bytearray()
        try:
            while (item := conn.blocker.next_record()) is not None:
                record, raw = item
                if record.content_type != ContentType.RITM_STATUS:
                    out += raw
        except WireFormatError:
            out += conn.blocker.take_pending()
        return bytes(out)

    def _block(self, index: int) -> None:
        if index < len(self.connections):
            conn = self.connections[index]
            conn.blocked_at = self.clock.now()
            self._note(f"client-{index}", "status-blocked")

    def _after_client_update(self, conn: _SimConnection) -> None:
        verdict = conn.client.verdict
        if not verdict.is_open:
            self._close(conn)
            return
        if verdict.phase is ConnPhase.ACCEPTED and verdict.last_valid_status is not None:
            deadline = verdict.last_valid_status + conn.client.policy.window(verdict.ca_id)
            if conn.liveness_event is not None:
                if conn.liveness_event.instant == deadline:
                    return
                conn.liveness_event.cancel()
            conn.liveness_event = self.scheduler.at(deadline, self._liveness, conn, label=f"client-{conn.index} liveness")

    def _liveness(self, conn: _SimConnection) -> None:
        conn.liveness_event = None
        if conn.closed:
            return
        conn.client.check_liveness()
        self._after_client_update(conn)

    def _server_data(self, conn: _SimConnection) -> None:
        if conn.closed:
            return
        payload = conn.server.application_data(f"data {self.clock.now():.3f}\n".encode())
        if payload:
            self._to_client(conn, payload, len(conn.path))
        if not conn.closed:
            self.scheduler.after(self.scenario.server_data_interval, self._server_data, conn, label=f"client-{conn.index} data")

    def _close(self, conn: _SimConnection) -> None:
        if conn.closed:
            return
        conn.closed = True
        conn.server.closed = True
        if conn.liveness_event is not None:
            conn.liveness_event.cancel()
        for hop in conn.path:
            hop.agent.close(conn.key)

    # Ejecución e informe
    def run(self) -> MetricsReport:
        logger.info(f"Escenario {self.scenario.name}: semilla {self.scenario.seed}, {self.scenario.duration} s simulados")
        self.scheduler.run_until(self.end)
        report = self.report()
        logger.info(f"Escenario {self.scenario.name} terminado: {self.scheduler.processed} eventos")
        return report

    def _outcome(self, conn: _SimConnection) -> ConnectionOutcome:
        verdict = conn.client.verdict
        accepted_at = next((e.timestamp for e in conn.client.events if e.event == ConnPhase.ACCEPTED.value), None)
        ended_at = next(
            (e.timestamp for e in conn.client.events if e.event in (ConnPhase.REJECTED.value, ConnPhase.INTERRUPTED.value)),
            None,
        )
        latency = None
        if conn.revoked_at is not None and ended_at is not None and ended_at >= conn.revoked_at:
            latency = ended_at - conn.revoked_at
        return ConnectionOutcome(
            index=conn.index,
            server=conn.spec.server,
            phase=verdict.phase.value,
            reason=verdict.reason.value if verdict.reason else None,
            accepted_at=accepted_at,
            ended_at=ended_at,
            revoked_at=conn.revoked_at,
            detection_latency=latency,
            blocked_at=conn.blocked_at,
            last_valid_status=verdict.last_valid_status,
        )

    def _converged(self) -> bool:
        for node in self.ras:
            dp = self.dps[node.dp_index]
            for ca_id in self.ca_ids:
                expected = dp.root(ca_id)
                replica = node.agent.store.get(ca_id)
                if expected is None:
                    continue
                if replica is None or replica.signed_root is None:
                    return False
                if (replica.signed_root.n, replica.signed_root.root) != (expected.n, expected.root):
                    return False
        return True

    def _events(self) -> list[EventLogEntry]:
        events = list(self.notes)
        audits: list[dict] = [entry for node in self.ras for entry in node.audit.entries]
        for conn in self.connections:
            audits += conn.client.audit.entries
            party = f"client-{conn.index}"
            events += [EventLogEntry(timestamp=e.timestamp, party=party, event=e.event, detail=e.reason) for e in conn.client.events]
        for entry in audits:
            if entry["action"] == AuditAction.VERDICT.value:
                continue
            detail = f"{entry['entity']} {json.dumps(entry['details'], sort_keys=True)}"
            events.append(EventLogEntry(timestamp=entry["timestamp"], party=entry["party"], event=entry["action"], detail=detail))
        return sorted(events, key=lambda e: (e.timestamp, e.party, e.event, e.detail))

    def report(self) -> MetricsReport:
        sizes = [size for node in self.ras for size in node.agent.status_sizes]
        proofs = {proof_to_bytes(p).hex() for node in self.ras for p in node.monitor.proofs}
        proofs |= {proof_to_bytes(c.client.verdict.evidence).hex() for c in self.connections if c.client.verdict.evidence is not None}
        detections = [
            entry["timestamp"]
            for node in self.ras
            for entry in node.audit.by_action(AuditAction.MISBEHAVIOR)
        ]
        detections += [e["timestamp"] for c in self.connections for e in c.client.audit.by_action(AuditAction.MISBEHAVIOR)]
        return MetricsReport(
            scenario=self.scenario.name,
            seed=self.scenario.seed,
            start=self.start,
            end=self.end,
            delta=self.scenario.delta,
            revocations=self.revocations,
            bandwidth_per_delta=bandwidth_account(self.dps[0].export_log(), self.scenario.delta, self.start, self.end),
            storage_bytes={node.name: node.agent.store.storage_bytes() for node in self.ras},
            status_sizes=SizeStats(
                count=len(sizes),
                minimum=min(sizes, default=0),
                mean=round(fmean(sizes), 3) if sizes else 0.0,
                maximum=max(sizes, default=0),
            ),
            connections=[self._outcome(conn) for conn in self.connections],
            misbehavior_proofs=sorted(proofs),
            misbehavior_detected_at=min(detections, default=None),
            replicas_converged=self._converged(),
            events=self._events(),
        )


def run_scenario(scenario: Scenario, trace: RevocationTrace | None = None) -> MetricsReport:
    return ScenarioRunner(scenario, trace).run()

