"""Punto de distribución: acepta publicaciones de las CAs y sirve el log a edges y RAs."""
from __future__ import annotations

import logging
import math
from typing import Protocol

from sqlalchemy.exc import IntegrityError
from sqlalchemy.orm import Session

from app.core.clock import Clock
from app.core.crypto import verify_signature
from app.core.errors import BadChainLink, BadSignature, GapInSequence, RootMismatch, StaleTimestamp, UnknownCA
from app.core.wire import decode_issuance, decode_signed_root, encode_issuance, encode_signed_root
from app.repositories.ca_registry_repository import CaRegistry
from app.repositories.update_log_repository import UpdateLogRepository
from app.schemas.authdict import FreshnessStatement, SignedRoot
from app.schemas.dissemination import CaLog, FreshnessMessage, IssuanceMessage, UpdateLog
from app.services.authdict_service import EMPTY_ROOT, freshness_period


logger = logging.getLogger(__name__)


class DisseminationSource(Protocol):
    """Lo que una RA (o un edge) puede pedir aguas arriba."""

    def updates(self, ca_id: bytes, from_n: int) -> list[IssuanceMessage]: ...

    def freshness(self, ca_id: bytes) -> FreshnessMessage | None: ...

    def root(self, ca_id: bytes) -> SignedRoot | None: ...


class DistributionService:
    def __init__(self, db: Session, registry: CaRegistry, clock: Clock) -> None:
        self.repo = UpdateLogRepository(db)
        self.registry = registry
        self.clock = clock

    def _verify(self, sr: SignedRoot) -> None:
        public_key = self.registry.public_key(sr.ca_id)
        if not verify_signature(public_key, sr.signed_payload(), sr.signature):
            raise BadSignature(f"Firma inválida en la raíz de {sr.ca_id.hex()}")

    def _current_root(self, ca_hex: str) -> SignedRoot | None:
        record = self.repo.get_root(ca_hex)
        return None if record is None else decode_signed_root(record.payload)

    # Publicación (dp_publish)
    def publish(self, msg: IssuanceMessage | FreshnessMessage | SignedRoot) -> bool:
        """Valida y añade al log. Devuelve False si el mensaje ya estaba (publicación idempotente)."""
        try:
            if isinstance(msg, IssuanceMessage):
                accepted = self._publish_issuance(msg)
            elif isinstance(msg, FreshnessMessage):
                accepted = self._publish_freshness(msg)
            else:
                accepted = self._publish_root(msg)
            self.repo.commit()
            return accepted
        except Exception:
            self.repo.rollback()
            raise

    def _publish_issuance(self, msg: IssuanceMessage) -> bool:
        ca_hex = msg.ca_id.hex()
        self._verify(msg.signed_root)
        payload = encode_issuance(msg)
        existing = self.repo.get_issuance(ca_hex, msg.signed_root.n)
        if existing is not None:
            if existing.payload == payload:
                return False
            logger.error(f"Emisión distinta para {ca_hex} con n={msg.signed_root.n} ya publicado")
            raise GapInSequence(f"n={msg.signed_root.n} ya publicado con otro contenido")
        current = self._current_root(ca_hex)
        current_n = current.n if current is not None else self.repo.latest_n(ca_hex)
        if msg.prior_n != current_n:
            logger.error(f"Hueco en la secuencia de {ca_hex}: se esperaba índice {current_n + 1}, llegó {msg.first_index}")
            raise GapInSequence(f"Se esperaba el índice {current_n + 1}, el lote empieza en {msg.first_index}")
        if current is not None and msg.signed_root.timestamp < current.timestamp:
            raise StaleTimestamp("La nueva raíz es anterior a la vigente")
        now = self.clock.now()
        try:
            self.repo.add_issuance(
                ca_id=ca_hex,
                first_index=msg.first_index,
                last_n=msg.signed_root.n,
                payload=payload,
                published_at=now,
            )
        except IntegrityError:
            raise GapInSequence(f"n={msg.signed_root.n} publicado en paralelo")
        self._store_root(msg.signed_root, now)
        logger.info(f"Emisión aceptada para {ca_hex}: {len(msg.serials)} series, n={msg.signed_root.n}")
        return True

    def _store_root(self, sr: SignedRoot, now: float) -> None:
        ca_hex = sr.ca_id.hex()
        self.repo.put_root(ca_id=ca_hex, n=sr.n, payload=encode_signed_root(sr), published_at=now)
        # Con la raíz nueva el ancla misma es la frescura del periodo 0
        self.repo.put_freshness(ca_id=ca_hex, value=sr.anchor, period=0, published_at=now)

    def _publish_root(self, sr: SignedRoot) -> bool:
        ca_hex = sr.ca_id.hex()
        self._verify(sr)
        current = self._current_root(ca_hex)
        if current is None:
            if sr.n != self.repo.latest_n(ca_hex) or (sr.n == 0 and sr.root != EMPTY_ROOT):
                raise GapInSequence("La primera raíz de una CA debe corresponder al diccionario publicado")
        else:
            if current == sr:
                return False
            if sr.n != current.n or sr.root != current.root:
                raise RootMismatch("Una renovación no puede cambiar el contenido del diccionario")
            if sr.timestamp < current.timestamp:
                raise StaleTimestamp("La renovación es anterior a la raíz vigente")
        self._store_root(sr, self.clock.now())
        logger.info(f"Raíz renovada para {ca_hex} (n={sr.n}, t={sr.timestamp})")
        return True

    def _publish_freshness(self, msg: FreshnessMessage) -> bool:
        ca_hex = msg.ca_id.hex()
        self.registry.get(msg.ca_id)
        current = self._current_root(ca_hex)
        if current is None:
            raise BadChainLink(f"No hay raíz publicada para {ca_hex}")
        now = self.clock.now()
        delta = self.registry.delta(msg.ca_id)
        p_now = max(0, int(math.floor((now - current.timestamp) / delta)))
        period = freshness_period(msg.statement, current, p_now + 1)
        if period is None:
            logger.error(f"Frescura rechazada para {ca_hex}: no encadena con el ancla vigente")
            raise BadChainLink("La declaración no encadena con el ancla vigente")
        stored = self.repo.get_freshness(ca_hex)
        if stored is not None and stored.period >= period:
            return False
        self.repo.put_freshness(ca_id=ca_hex, value=msg.statement.value, period=period, published_at=now)
        return True

    # Lectura (DisseminationSource)
    def updates(self, ca_id: bytes, from_n: int) -> list[IssuanceMessage]:
        self.registry.get(ca_id)
        return [decode_issuance(r.payload) for r in self.repo.list_issuances(ca_id.hex(), after_n=from_n)]

    def freshness(self, ca_id: bytes) -> FreshnessMessage | None:
        self.registry.get(ca_id)
        record = self.repo.get_freshness(ca_id.hex())
        if record is None:
            return None
        return FreshnessMessage(ca_id=ca_id, statement=FreshnessStatement(value=record.value))

    def root(self, ca_id: bytes) -> SignedRoot | None:
        self.registry.get(ca_id)
        return self._current_root(ca_id.hex())

    def export_log(self) -> UpdateLog:
        cas = []
        for root_record in self.repo.list_roots():
            ca_id = bytes.fromhex(root_record.ca_id)
            records = self.repo.list_issuances(root_record.ca_id)
            try:
                freshness = self.freshness(ca_id)
            except UnknownCA:
                freshness = None
            cas.append(
                CaLog(
                    ca_id=ca_id,
                    issuances=[decode_issuance(r.payload) for r in records],
                    published_at=[r.published_at for r in records],
                    freshness=freshness,
                    active_since=root_record.active_since,
                )
            )
        return UpdateLog(cas=cas)
