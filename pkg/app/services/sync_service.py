from __future__ import annotations

import logging
import threading
from pathlib import Path

from app.core.clock import Clock
from app.core.errors import (
    BadChainLink,
    BadSignature,
    CountMismatch,
    DpUnreachable,
    EdgeUnreachable,
    RootMismatch,
    StaleTimestamp,
    UnknownCA,
)
from app.core.wire import decode_freshness, decode_signed_root, encode_freshness, encode_signed_root, frame_all, unframe_all
from app.repositories.ca_registry_repository import CaRegistry
from app.schemas.dissemination import FreshnessMessage, IssuanceMessage, SyncCursor, SyncResult
from app.services import authdict_service
from app.services.authdict_service import Dictionary, ReplicaSnapshot
from app.services.distribution_service import DisseminationSource


logger = logging.getLogger(__name__)

REPLICA_SUFFIX = ".replica"


class ReplicaStore:
    """Réplicas por CA. Las lecturas no bloquean; cada actualización sustituye la instantánea entera."""

    def __init__(self) -> None:
        self._snapshots: dict[bytes, ReplicaSnapshot] = {}
        self._lock = threading.Lock()

    def get(self, ca_id: bytes) -> ReplicaSnapshot | None:
        return self._snapshots.get(ca_id)

    def swap(self, ca_id: bytes, snapshot: ReplicaSnapshot) -> None:
        with self._lock:
            self._snapshots = {**self._snapshots, ca_id: snapshot}

    def ca_ids(self) -> list[bytes]:
        return list(self._snapshots)

    def snapshots(self) -> dict[bytes, ReplicaSnapshot]:
        return dict(self._snapshots)

    def storage_bytes(self) -> int:
        return sum(len(s.dictionary.to_storage()) for s in self._snapshots.values())

    # Persistencia
    def dump(self, directory: str | Path) -> int:
        target = Path(directory)
        target.mkdir(parents=True, exist_ok=True)
        for ca_id, snapshot in self._snapshots.items():
            body = frame_all(
                [
                    snapshot.dictionary.to_storage(),
                    encode_signed_root(snapshot.signed_root) if snapshot.signed_root else b"",
                    encode_freshness(snapshot.freshness) if snapshot.freshness else b"",
                ]
            )
            (target / f"{ca_id.hex()}{REPLICA_SUFFIX}").write_bytes(body)
        return len(self._snapshots)

    @classmethod
    def load(cls, directory: str | Path) -> "ReplicaStore":
        store = cls()
        for path in sorted(Path(directory).glob(f"*{REPLICA_SUFFIX}")):
            storage, root_raw, fresh_raw = unframe_all(path.read_bytes())
            dictionary = Dictionary.from_storage(storage)
            signed_root = decode_signed_root(root_raw) if root_raw else None
            if signed_root is not None and (signed_root.root != dictionary.root or signed_root.n != dictionary.n):
                logger.warning(f"Réplica {path.name} no coincide con su raíz firmada; se descarta la raíz")
                signed_root = None
            store.swap(
                dictionary.ca_id,
                ReplicaSnapshot(
                    dictionary=dictionary,
                    signed_root=signed_root,
                    freshness=decode_freshness(fresh_raw) if fresh_raw and signed_root else None,
                ),
            )
        logger.info(f"{len(store.ca_ids())} réplicas cargadas desde {directory}")
        return store


class RaSyncClient:
    def __init__(
        self,
        store: ReplicaStore,
        registry: CaRegistry,
        source: DisseminationSource,
        clock: Clock,
        *,
        name: str = "ra",
    ) -> None:
        self.store = store
        self.registry = registry
        self.source = source
        self.clock = clock
        self.name = name

    def ra_sync(self, cursor: SyncCursor) -> tuple[list[IssuanceMessage], FreshnessMessage | None]:
        """Trae lo publicado después del cursor; no modifica la réplica."""
        messages = self.source.updates(cursor.ca_id, cursor.confirmed_n)
        freshness = self.source.freshness(cursor.ca_id)
        return messages, freshness

    def cursor(self, ca_id: bytes) -> SyncCursor:
        replica = self.store.get(ca_id)
        return SyncCursor(ca_id=ca_id, confirmed_n=replica.n if replica else 0)

    def _apply(self, replica: ReplicaSnapshot, messages: list[IssuanceMessage]) -> tuple[ReplicaSnapshot, int]:
        public_key = self.registry.public_key(replica.dictionary.ca_id)
        now = self.clock.now()
        applied = 0
        # Duplicados y desorden se toleran; un hueco detiene la aplicación hasta la siguiente ronda
        for message in sorted(messages, key=lambda m: m.signed_root.n):
            if message.signed_root.n <= replica.n:
                continue
            if message.prior_n != replica.n:
                logger.info(f"{self.name}: hueco antes del índice {message.first_index} para {replica.dictionary.ca_id.hex()}")
                break
            replica = authdict_service.update(replica, message.serials, message.signed_root, public_key, now)
            self.store.swap(replica.dictionary.ca_id, replica)
            applied += len(message.serials)
        return replica, applied

    def _renew_root(self, replica: ReplicaSnapshot) -> ReplicaSnapshot | None:
        ca_id = replica.dictionary.ca_id
        sr = self.source.root(ca_id)
        if sr is None or sr == replica.signed_root:
            return None
        try:
            renewed = authdict_service.adopt_renewal(replica, sr, self.registry.public_key(ca_id), self.clock.now())
        except (BadSignature, StaleTimestamp, CountMismatch, RootMismatch) as exc:
            logger.info(f"{self.name}: raíz de {ca_id.hex()} no adoptable todavía ({exc})")
            return None
        self.store.swap(ca_id, renewed)
        return renewed

    def sync_ca(self, ca_id: bytes) -> SyncResult:
        replica = self.store.get(ca_id) or authdict_service.empty_replica(ca_id)
        result = SyncResult(ca_id=ca_id, confirmed_n=replica.n)
        try:
            messages, freshness = self.ra_sync(self.cursor(ca_id))
            try:
                replica, applied = self._apply(replica, messages)
            except (RootMismatch, CountMismatch, BadSignature, StaleTimestamp) as exc:
                # Recuperación: se descarta lo recibido y se vuelve a pedir desde el último n confirmado
                logger.warning(f"{self.name}: desincronización con {ca_id.hex()} ({exc}); repidiendo desde n={self.cursor(ca_id).confirmed_n}")
                result.recovered = True
                replica = self.store.get(ca_id) or replica
                messages, freshness = self.ra_sync(self.cursor(ca_id))
                replica, applied = self._apply(replica, messages)
            result.applied = applied

            if replica.signed_root is None:
                renewed = self._renew_root(replica)
                if renewed is not None:
                    replica = renewed
                    result.renewed_root = True
            if freshness is not None and replica.signed_root is not None:
                replica, renewed_flag = self._apply_freshness(replica, freshness)
                result.renewed_root = result.renewed_root or renewed_flag
        except (DpUnreachable, EdgeUnreachable, UnknownCA) as exc:
            logger.warning(f"{self.name}: sincronización de {ca_id.hex()} fallida: {exc}")
            result.error = str(exc)
        except (RootMismatch, CountMismatch, BadSignature, StaleTimestamp) as exc:
            logger.error(f"{self.name}: lote rechazado para {ca_id.hex()} tras recuperación: {exc}")
            result.error = str(exc)

        current = self.store.get(ca_id)
        if current is not None:
            result.confirmed_n = current.n
            if current.signed_root is not None and current.freshness is not None:
                result.fresh = authdict_service.check_freshness(
                    current.freshness, current.signed_root, self.clock.now(), self.registry.delta(ca_id)
                )
        return result

    def _apply_freshness(self, replica: ReplicaSnapshot, freshness: FreshnessMessage) -> tuple[ReplicaSnapshot, bool]:
        ca_id = replica.dictionary.ca_id
        delta = self.registry.delta(ca_id)
        try:
            updated = authdict_service.apply_freshness(replica, freshness.statement, self.clock.now(), delta)
            renewed = False
        except BadChainLink:
            # Puede que la CA haya renovado la raíz; se intenta adoptar la nueva
            fresh_root = self._renew_root(replica)
            if fresh_root is None:
                logger.info(f"{self.name}: frescura de {ca_id.hex()} no encadena y no hay raíz nueva")
                return replica, False
            try:
                updated = authdict_service.apply_freshness(fresh_root, freshness.statement, self.clock.now(), delta)
            except BadChainLink:
                return fresh_root, True
            renewed = True
        if updated is not replica:
            self.store.swap(ca_id, updated)
        return updated, renewed

    def sync_all(self) -> list[SyncResult]:
        return [self.sync_ca(ca_id) for ca_id in self.registry.ca_ids()]
