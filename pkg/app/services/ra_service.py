"""Agente de revocación (RA): inspección pasiva de TLS e inyección de estados de revocación.

El flujo cliente→servidor se reenvía sin retener nada y se analiza una copia.
El flujo servidor→cliente se corta en registros completos para poder insertar
registros de estado (tipo 0x52) entre ellos.
"""
from __future__ import annotations

import logging
import threading

from app.config.settings import STATE_TIMEOUT_SECONDS
from app.core.certificate import parse_certificate
from app.core.clock import Clock
from app.core.errors import DictRootMismatch, WireFormatError
from app.core.tls import (
    HandshakeReassembler,
    RITM_EXTENSION,
    RecordSplitter,
    build_status_record,
    looks_like_tls,
    parse_certificate_list,
    parse_client_hello,
    parse_server_hello,
)
from app.core.wire import UNKNOWN_CA_NOTICE, decode_status, encode_status
from app.repositories.ca_registry_repository import CaRegistry
from app.schemas.authdict import RevocationStatus
from app.schemas.middlebox import ConnKey, ConnState, ContentType, Direction, HandshakeType, HandshakeView, Stage, TlsRecord
from app.services import authdict_service
from app.services.audit_service import AuditAction, AuditService
from app.services.monitor_service import MonitorService
from app.services.sync_service import ReplicaStore


logger = logging.getLogger(__name__)


class _ClientStream:
    """Vista del flujo del cliente mientras no se sabe si la conexión usa RITM."""

    def __init__(self, now: float) -> None:
        self.last_activity = now
        self.tls = False
        self.prefix = bytearray()
        self.records = RecordSplitter()
        self.handshake = HandshakeReassembler()


class _ServerStream:
    def __init__(self) -> None:
        self.records = RecordSplitter()
        self.handshake = HandshakeReassembler()
        self.after_ccs = False
        # Tras el registro que completa Certificate: falta decidir si inyectamos nuestro estado
        self.awaiting_status = False
        self.own_status: bytes | None = None


class RevocationAgent:
    def __init__(
        self,
        name: str,
        store: ReplicaStore,
        registry: CaRegistry,
        clock: Clock,
        *,
        state_timeout: float = STATE_TIMEOUT_SECONDS,
        monitor: MonitorService | None = None,
        audit: AuditService | None = None,
    ) -> None:
        self.name = name
        self.store = store
        self.registry = registry
        self.clock = clock
        self.state_timeout = state_timeout
        self.monitor = monitor
        self.audit = audit or AuditService(clock, party=name)
        self.table: dict[ConnKey, ConnState] = {}
        self._client_streams: dict[ConnKey, _ClientStream] = {}
        self._server_streams: dict[ConnKey, _ServerStream] = {}
        # Conexiones ya decididas como transparentes en sentido cliente→servidor (clave → última actividad)
        self._passthrough: dict[ConnKey, float] = {}
        self._lock = threading.RLock()
        self.status_sizes: list[int] = []
        self.injected = 0

    # Punto de entrada del middlebox
    def inspect(self, key: ConnKey, direction: Direction, segment: bytes) -> bytes:
        with self._lock:
            if direction is Direction.CLIENT_TO_SERVER:
                self._inspect_client(key, segment)
                return segment
            return self._inspect_server(key, segment)

    def close(self, key: ConnKey) -> None:
        with self._lock:
            self.table.pop(key, None)
            self._client_streams.pop(key, None)
            self._server_streams.pop(key, None)
            self._passthrough.pop(key, None)

    def tracked_keys(self) -> set[ConnKey]:
        """Toda clave con memoria en la RA (estado, flujo del cliente o marca de transparencia)."""
        with self._lock:
            return set(self.table) | set(self._client_streams) | set(self._server_streams) | set(self._passthrough)

    def _pass_through(self, key: ConnKey) -> None:
        self._client_streams.pop(key, None)
        self._passthrough[key] = self.clock.now()

    def _downgrade(self, key: ConnKey, reason: str) -> None:
        logger.warning(f"{self.name}: {key} pasa a modo transparente: {reason}")
        self.audit.record(AuditAction.DOWNGRADE, str(key), {"reason": reason})
        self.table.pop(key, None)
        self._server_streams.pop(key, None)
        self._pass_through(key)

    # Cliente → servidor (solo se observa)
    def _inspect_client(self, key: ConnKey, segment: bytes) -> None:
        now = self.clock.now()
        state = self.table.get(key)
        if state is not None:
            state.last_activity = now
        if key in self._passthrough:
            self._passthrough[key] = now
            return
        stream = self._client_streams.get(key)
        if stream is None:
            stream = self._client_streams[key] = _ClientStream(now)
        stream.last_activity = now
        if not stream.tls:
            stream.prefix += segment
            verdict = looks_like_tls(bytes(stream.prefix[:2]))
            if verdict is None:
                return
            data = bytes(stream.prefix)
            stream.prefix.clear()
            if not verdict:
                self._pass_through(key)
                return
            stream.tls = True
        else:
            data = segment
        try:
            for record, _ in stream.records.feed(data):
                if record.content_type == ContentType.CHANGE_CIPHER_SPEC:
                    # A partir de aquí el cliente solo envía datos cifrados
                    self._pass_through(key)
                    return
                if record.content_type != ContentType.HANDSHAKE:
                    continue
                for msg_type, body in stream.handshake.feed(record.payload):
                    if msg_type == HandshakeType.CLIENT_HELLO:
                        if self.on_client_hello(key, parse_client_hello(body)) is None:
                            self._pass_through(key)
                            return
        except WireFormatError as exc:
            self._downgrade(key, f"handshake del cliente ilegible ({exc})")

    def on_client_hello(self, key: ConnKey, hello: HandshakeView) -> ConnState | None:
        if not hello.has_extension(RITM_EXTENSION):
            # Sin extensión RITM la conexión no se sigue (y se olvida un estado previo de la misma 4-tupla)
            self.table.pop(key, None)
            self._server_streams.pop(key, None)
            return None
        now = self.clock.now()
        state = ConnState(key=key, created_at=now, last_activity=now)
        self.table[key] = state
        self._server_streams[key] = _ServerStream()
        logger.info(f"{self.name}: ClientHello con RITM en {key}")
        return state

    # Servidor → cliente (se puede modificar)
    def _inspect_server(self, key: ConnKey, segment: bytes) -> bytes:
        state = self.table.get(key)
        stream = self._server_streams.get(key)
        if state is None or stream is None:
            return segment
        now = self.clock.now()
        state.last_activity = now
        out = bytearray()
        stream.records.push(segment)
        while True:
            try:
                item = stream.records.next_record()
            except WireFormatError as exc:
                self._downgrade(key, f"registro del servidor ilegible ({exc})")
                out += stream.records.take_pending()
                return bytes(out)
            if item is None:
                break
            record, raw = item
            if record.content_type == ContentType.RITM_STATUS:
                out += self._forward_upstream_status(record, raw, state, stream, now)
                continue
            if stream.awaiting_status:
                out += self._release_own_status(stream)
            elif self._status_due(state, now):
                out += self.periodic_status(state, now) or b""
            out += raw
            try:
                self._observe_server_record(record, state, stream, now)
            except WireFormatError as exc:
                self._downgrade(key, f"handshake del servidor ilegible ({exc})")
                out += stream.records.take_pending()
                return bytes(out)
        if stream.awaiting_status and not stream.records.buffer:
            out += self._release_own_status(stream)
        return bytes(out)

    def _observe_server_record(self, record: TlsRecord, state: ConnState, stream: _ServerStream, now: float) -> None:
        if record.content_type == ContentType.CHANGE_CIPHER_SPEC:
            stream.after_ccs = True
            return
        if record.content_type != ContentType.HANDSHAKE or state.stage is Stage.ESTABLISHED:
            return
        if stream.after_ccs:
            # Primer registro de handshake tras CCS: el Finished cifrado
            self.on_finished(state, now)
            return
        for msg_type, body in stream.handshake.feed(record.payload):
            if msg_type == HandshakeType.SERVER_HELLO:
                parse_server_hello(body)
                state.record_version = record.version
            elif msg_type == HandshakeType.CERTIFICATE:
                own = self.on_server_hello(state, parse_certificate_list(body), now)
                if own is not None:
                    stream.awaiting_status = True
                    stream.own_status = own
            elif msg_type == HandshakeType.FINISHED:
                self.on_finished(state, now)

    def _release_own_status(self, stream: _ServerStream) -> bytes:
        stream.awaiting_status = False
        own, stream.own_status = stream.own_status, None
        if own is None:
            return b""
        self.injected += 1
        return own

    def on_server_hello(self, state: ConnState, certificate: HandshakeView, now: float) -> bytes | None:
        """Registro a inyectar tras el certificado: un estado, el aviso de CA desconocida o nada."""
        info = parse_certificate(certificate.certificates[0])
        state.stage = Stage.SERVER_HELLO
        state.ca_id = info.issuer_id
        state.serial = info.serial
        # Instante de la decisión de ServerHello (estado, aviso o nada); de él parten los refrescos periódicos
        state.last_status = now
        if info.issuer_id not in self.registry:
            logger.info(f"{self.name}: emisor desconocido {info.issuer_id.hex()} en {state.key}")
            return build_status_record(UNKNOWN_CA_NOTICE, state.record_version)
        return self._status_record(state)

    def on_finished(self, state: ConnState, now: float) -> None:
        state.stage = Stage.ESTABLISHED
        logger.info(f"{self.name}: conexión {state.key} establecida")

    def _current_status(self, state: ConnState) -> RevocationStatus | None:
        replica = self.store.get(state.ca_id) if state.ca_id else None
        if replica is None or replica.signed_root is None or replica.freshness is None or state.serial is None:
            logger.warning(f"{self.name}: sin réplica utilizable para {state.ca_id.hex() if state.ca_id else '?'}")
            return None
        try:
            return authdict_service.prove(replica.dictionary, state.serial, replica.signed_root, replica.freshness)
        except DictRootMismatch as exc:
            logger.error(f"{self.name}: réplica inconsistente: {exc}")
            return None

    def _status_record(self, state: ConnState) -> bytes | None:
        status = self._current_status(state)
        if status is None:
            return None
        payload = encode_status(status)
        self.status_sizes.append(len(payload))
        state.statuses_injected += 1
        return build_status_record(payload, state.record_version)

    def _status_due(self, state: ConnState, now: float) -> bool:
        if state.stage is not Stage.ESTABLISHED or state.ca_id not in self.registry or state.last_status is None:
            return False
        return now >= state.last_status + self.registry.delta(state.ca_id)

    def periodic_status(self, state: ConnState, now: float) -> bytes | None:
        if not self._status_due(state, now):
            return None
        record = self._status_record(state)
        if record is not None:
            state.last_status = now
            self.injected += 1
        return record

    # Coexistencia con RAs aguas arriba
    def coexist(self, upstream: RevocationStatus, state: ConnState) -> RevocationStatus:
        """Se reenvía el estado de aguas arriba salvo que nuestra réplica sea estrictamente más nueva."""
        replica = self.store.get(state.ca_id) if state.ca_id else None
        own_root = replica.signed_root if replica is not None else None
        theirs = upstream.signed_root
        if own_root is None or own_root.ca_id != theirs.ca_id:
            return upstream
        if own_root.n > theirs.n:
            own = self._current_status(state)
            if own is not None:
                logger.info(f"{self.name}: estado de aguas arriba (n={theirs.n}) sustituido por el propio (n={own_root.n})")
                return own
        elif own_root.n == theirs.n and own_root.root != theirs.root and self.monitor is not None:
            self.monitor.check(theirs, origin=f"upstream {state.key}")
        return upstream

    def _forward_upstream_status(self, record: TlsRecord, raw: bytes, state: ConnState, stream: _ServerStream, now: float) -> bytes:
        # Hay un estado de otra RA en este punto: el nuestro sobra
        stream.awaiting_status = False
        stream.own_status = None
        if state.stage is not Stage.CLIENT_HELLO:
            state.last_status = now
        if record.payload == UNKNOWN_CA_NOTICE:
            return raw
        try:
            upstream = decode_status(record.payload)
        except WireFormatError as exc:
            logger.warning(f"{self.name}: estado de aguas arriba ilegible en {state.key}: {exc}")
            return raw
        chosen = self.coexist(upstream, state)
        if chosen is upstream:
            return raw
        payload = encode_status(chosen)
        self.status_sizes.append(len(payload))
        return build_status_record(payload, record.version)

    # Temporizador
    def tick(self, now: float | None = None) -> dict[ConnKey, bytes]:
        """Estados periódicos sueltos para conexiones sin tráfico del servidor; también expulsa estados caducados."""
        now = self.clock.now() if now is None else now
        with self._lock:
            self.evict_idle(now)
            injections: dict[ConnKey, bytes] = {}
            for key, state in self.table.items():
                stream = self._server_streams.get(key)
                if stream is None or stream.records.buffer:
                    continue
                record = self.periodic_status(state, now)
                if record is not None:
                    injections[key] = record
            return injections

    def next_status_due(self) -> float | None:
        with self._lock:
            due = [
                s.last_status + self.registry.delta(s.ca_id)
                for s in self.table.values()
                if s.stage is Stage.ESTABLISHED and s.last_status is not None and s.ca_id in self.registry
            ]
            return min(due) if due else None

    def evict_idle(self, now: float) -> list[ConnKey]:
        with self._lock:
            expired = [k for k, s in self.table.items() if now - s.last_activity >= self.state_timeout]
            for key in expired:
                logger.info(f"{self.name}: estado de {key} expulsado por inactividad")
                self.close(key)
            # Flujos sin estado RITM: clientes a medio ClientHello y conexiones transparentes
            forgotten = [k for k, s in self._client_streams.items() if k not in self.table and now - s.last_activity >= self.state_timeout]
            forgotten += [k for k, seen in self._passthrough.items() if k not in self.table and now - seen >= self.state_timeout]
            for key in forgotten:
                self.close(key)
            return expired
