"""Lado cliente: anuncia RITM, separa los registros de estado del flujo TLS y decide sobre la conexión.

El cliente nunca contacta con terceros; todo lo que necesita llega dentro de la conexión.
"""
from __future__ import annotations

import logging
import random
from collections.abc import Iterator

from app.core.certificate import parse_certificate, verify_certificate
from app.core.clock import Clock
from app.core.errors import MalformedStatusRecord, WireFormatError
from app.core.tls import (
    RITM_EXTENSION,
    HandshakeReassembler,
    RecordSplitter,
    build_client_hello,
    build_finished,
    build_record,
    parse_certificate_list,
)
from app.core.wire import UNKNOWN_CA_NOTICE, decode_status
from app.schemas.authdict import RevocationStatus, StatusOutcome
from app.schemas.client import ClientEvent, ClientPolicy, ConnPhase, ConnVerdict, InterruptReason, RejectReason
from app.schemas.middlebox import ContentType, HandshakeType
from app.schemas.monitor import MisbehaviorProof
from app.services import authdict_service
from app.services.audit_service import AuditAction, AuditService


logger = logging.getLogger(__name__)

# Un elemento de estado es un RevocationStatus o None (aviso de CA desconocida)
StatusItem = RevocationStatus | None


def emit_client_hello(rng: random.Random | None = None, ritm: bool = True) -> bytes:
    rng = rng or random.Random()
    extensions = [(RITM_EXTENSION, b"")] if ritm else []
    return build_record(ContentType.HANDSHAKE, build_client_hello(rng.randbytes(32), extensions))


def _decode_item(payload: bytes) -> StatusItem:
    if payload == UNKNOWN_CA_NOTICE:
        return None
    try:
        return decode_status(payload)
    except WireFormatError as exc:
        raise MalformedStatusRecord(f"Registro de estado ilegible: {exc}")


class StatusStripper:
    """Separa en orden los registros 0x52 del resto del flujo."""

    def __init__(self) -> None:
        self.records = RecordSplitter()

    def iter_ordered(self, segment: bytes) -> Iterator[tuple[StatusItem, bytes | None]]:
        """(estado, None) o (None, registro crudo) en el orden de llegada, decodificados de uno en uno.

        Un registro de estado ilegible lanza MalformedStatusRecord después de entregar los anteriores.
        """
        self.records.push(segment)
        while (item := self.records.next_record()) is not None:
            record, raw = item
            if record.content_type == ContentType.RITM_STATUS:
                yield _decode_item(record.payload), None
            else:
                yield None, raw

    def feed_ordered(self, segment: bytes) -> list[tuple[StatusItem, bytes | None]]:
        return list(self.iter_ordered(segment))

    def pending_status(self) -> bool:
        return bool(self.records.buffer) and self.records.buffer[0] == ContentType.RITM_STATUS


def strip_status(segment: bytes) -> tuple[bytes, list[StatusItem]]:
    """Versión de un solo segmento: devuelve el flujo limpio y los estados encontrados."""
    stripper = StatusStripper()
    clean = bytearray()
    statuses: list[StatusItem] = []
    for status, raw in stripper.feed_ordered(segment):
        if raw is None:
            statuses.append(status)
        else:
            clean += raw
    if stripper.pending_status():
        raise MalformedStatusRecord("Registro de estado truncado")
    clean += stripper.records.take_pending()
    return bytes(clean), statuses


def accept_certificate(certificate: bytes, statuses: list[StatusItem], policy: ClientPolicy, now: float) -> ConnVerdict:
    try:
        info = parse_certificate(certificate)
    except WireFormatError:
        return ConnVerdict.rejected(RejectReason.BAD_CERTIFICATE)
    if info.issuer_id not in policy.registry:
        return ConnVerdict.rejected(RejectReason.BAD_CERTIFICATE, serial=info.serial)
    public_key = policy.registry.public_key(info.issuer_id)
    ids = {"ca_id": info.issuer_id, "serial": info.serial}
    if not verify_certificate(info, public_key, now):
        return ConnVerdict.rejected(RejectReason.BAD_CERTIFICATE, **ids)

    real = [s for s in statuses if s is not None]
    if not real:
        if policy.expect_ritm:
            return ConnVerdict.rejected(RejectReason.NO_STATUS, **ids)
        return ConnVerdict(phase=ConnPhase.ACCEPTED, **ids)

    delta = policy.delta_for(info.issuer_id)
    revoked: list[RevocationStatus] = []
    not_revoked: list[RevocationStatus] = []
    for status in real:
        verdict = authdict_service.verify_status(status, info.serial, public_key, now, delta, ca_id=info.issuer_id)
        if verdict.outcome is StatusOutcome.REVOKED:
            revoked.append(status)
        elif verdict.outcome is StatusOutcome.NOT_REVOKED:
            not_revoked.append(status)
        else:
            logger.info(f"Estado inválido para {info.serial.hex()}: {verdict.reason.value} {verdict.detail}")

    for r in revoked:
        for f in not_revoked:
            if r.signed_root.n == f.signed_root.n:
                # Presente y ausente con el mismo n: la CA firmó dos diccionarios distintos
                evidence = MisbehaviorProof(signed_root_a=r.signed_root, signed_root_b=f.signed_root)
                return ConnVerdict.rejected(RejectReason.INVALID_STATUS, evidence=evidence, **ids)
    if revoked:
        return ConnVerdict.rejected(RejectReason.REVOKED, **ids)
    if not_revoked:
        return ConnVerdict(phase=ConnPhase.ACCEPTED, last_valid_status=now, **ids)
    return ConnVerdict.rejected(RejectReason.INVALID_STATUS, **ids)


def liveness_check(verdict: ConnVerdict, policy: ClientPolicy, now: float) -> ConnVerdict:
    if verdict.phase is not ConnPhase.ACCEPTED or verdict.last_valid_status is None or verdict.ca_id is None:
        return verdict
    if now >= verdict.last_valid_status + policy.window(verdict.ca_id):
        return verdict.model_copy(update={"phase": ConnPhase.INTERRUPTED, "reason": InterruptReason.STALE_STATUS})
    return verdict


class ClientConnection:
    """Un cliente TLS mínimo con soporte RITM."""

    def __init__(
        self,
        policy: ClientPolicy,
        clock: Clock,
        *,
        rng: random.Random | None = None,
        ritm: bool = True,
        name: str = "client",
        audit: AuditService | None = None,
    ) -> None:
        self.policy = policy
        self.clock = clock
        self.rng = rng or random.Random()
        self.ritm = ritm
        self.name = name
        self.audit = audit or AuditService(clock, party=name)
        self.verdict = ConnVerdict()
        self.events: list[ClientEvent] = []
        self.application_data = bytearray()
        self._stripper = StatusStripper()
        self._handshake = HandshakeReassembler()
        self._statuses: list[StatusItem] = []
        self._certificate: bytes | None = None

    def _set_verdict(self, verdict: ConnVerdict) -> None:
        if verdict.phase is not self.verdict.phase:
            reason = verdict.reason.value if verdict.reason else ""
            self.events.append(ClientEvent(timestamp=self.clock.now(), event=verdict.phase.value, reason=reason))
            self.audit.record(AuditAction.VERDICT, self.name, {"phase": verdict.phase.value, "reason": reason})
            if verdict.evidence is not None:
                self.audit.record(AuditAction.MISBEHAVIOR, verdict.evidence.ca_id.hex(), {"origin": "client", "n": verdict.evidence.signed_root_a.n})
        self.verdict = verdict

    def start(self) -> bytes:
        self.events.append(ClientEvent(timestamp=self.clock.now(), event="ClientHello", reason="ritm" if self.ritm else "legacy"))
        return emit_client_hello(self.rng, ritm=self.ritm)

    def check_liveness(self, now: float | None = None) -> ConnVerdict:
        now = self.clock.now() if now is None else now
        self._set_verdict(liveness_check(self.verdict, self.policy, now))
        return self.verdict

    def receive(self, segment: bytes) -> bytes:
        """Procesa bytes del servidor; devuelve lo que el cliente responde."""
        self.check_liveness()
        if not self.verdict.is_open:
            return b""
        reply = bytearray()
        try:
            for status, raw in self._stripper.iter_ordered(segment):
                if not self.verdict.is_open:
                    break
                if raw is None:
                    self._on_status(status)
                else:
                    try:
                        reply += self._on_record(raw)
                    except WireFormatError as exc:
                        logger.warning(f"{self.name}: handshake ilegible: {exc}")
                        self._set_verdict(ConnVerdict.rejected(RejectReason.BAD_CERTIFICATE))
        except MalformedStatusRecord as exc:
            # Un portador de estado manipulado se trata como un ataque
            logger.warning(f"{self.name}: {exc}")
            if self.verdict.phase is ConnPhase.HANDSHAKING:
                self._set_verdict(ConnVerdict.rejected(RejectReason.INVALID_STATUS))
            elif self.verdict.phase is ConnPhase.ACCEPTED:
                self._set_verdict(self.verdict.model_copy(update={"phase": ConnPhase.INTERRUPTED, "reason": InterruptReason.MALFORMED_STATUS}))
        except WireFormatError as exc:
            logger.warning(f"{self.name}: flujo TLS ilegible: {exc}")
            if self.verdict.phase is ConnPhase.HANDSHAKING:
                self._set_verdict(ConnVerdict.rejected(RejectReason.BAD_CERTIFICATE))
        return bytes(reply)

    def _on_status(self, status: StatusItem) -> None:
        if self.verdict.phase is ConnPhase.HANDSHAKING:
            self._statuses.append(status)
            return
        if status is None or self.verdict.ca_id is None or self.verdict.serial is None:
            return
        now = self.clock.now()
        result = authdict_service.verify_status(
            status,
            self.verdict.serial,
            self.policy.registry.public_key(self.verdict.ca_id),
            now,
            self.policy.delta_for(self.verdict.ca_id),
            ca_id=self.verdict.ca_id,
        )
        if result.outcome is StatusOutcome.REVOKED:
            self._set_verdict(self.verdict.model_copy(update={"phase": ConnPhase.INTERRUPTED, "reason": InterruptReason.REVOKED}))
        elif result.outcome is StatusOutcome.NOT_REVOKED:
            self.verdict = self.verdict.model_copy(update={"last_valid_status": now})
        else:
            logger.info(f"{self.name}: estado periódico inválido ({result.reason.value})")

    def _on_record(self, raw: bytes) -> bytes:
        content_type = raw[0]
        payload = raw[5:]
        if content_type == ContentType.APPLICATION_DATA:
            if self.verdict.phase is ConnPhase.ACCEPTED:
                self.application_data += payload
            return b""
        if content_type != ContentType.HANDSHAKE or self.verdict.phase is not ConnPhase.HANDSHAKING:
            return b""
        reply = b""
        for msg_type, body in self._handshake.feed(payload):
            if msg_type == HandshakeType.CERTIFICATE:
                self._certificate = parse_certificate_list(body).certificates[0]
            elif msg_type == HandshakeType.SERVER_HELLO_DONE:
                if self._certificate is None:
                    self._set_verdict(ConnVerdict.rejected(RejectReason.BAD_CERTIFICATE))
                    return b""
                self._set_verdict(accept_certificate(self._certificate, self._statuses, self.policy, self.clock.now()))
                if self.verdict.phase is ConnPhase.ACCEPTED:
                    reply += build_record(ContentType.HANDSHAKE, build_finished(self.rng.randbytes(12)))
        return reply

    def report_lines(self) -> list[str]:
        return [event.to_line() for event in self.events]
