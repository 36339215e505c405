"""Servidor edge: espejo de solo lectura del punto de distribución con TTL por CA."""
from __future__ import annotations

import logging
import threading
from dataclasses import dataclass, field

from app.config.settings import EDGE_TTL_SECONDS
from app.core.clock import Clock
from app.core.errors import DpUnreachable
from app.schemas.authdict import SignedRoot
from app.schemas.dissemination import FreshnessMessage, IssuanceMessage
from app.services.distribution_service import DisseminationSource


logger = logging.getLogger(__name__)


@dataclass
class _CacheEntry:
    issuances: list[IssuanceMessage] = field(default_factory=list)
    freshness: FreshnessMessage | None = None
    root: SignedRoot | None = None
    fetched_at: float | None = None
    stale: bool = False

    @property
    def n(self) -> int:
        return self.issuances[-1].signed_root.n if self.issuances else 0


class EdgeServer:
    def __init__(self, origin: DisseminationSource, clock: Clock, *, ttl: float = EDGE_TTL_SECONDS, name: str = "edge") -> None:
        self.origin = origin
        self.clock = clock
        self.ttl = ttl
        self.name = name
        self.origin_fetches = 0
        self._cache: dict[bytes, _CacheEntry] = {}
        self._lock = threading.Lock()

    def is_stale(self, ca_id: bytes) -> bool:
        entry = self._cache.get(ca_id)
        return entry is not None and entry.stale

    def pull(self, ca_id: bytes) -> list[IssuanceMessage]:
        """edge_pull: trae del origen lo nuevo para una CA y lo añade a la caché."""
        with self._lock:
            entry = self._cache.setdefault(ca_id, _CacheEntry())
            self.origin_fetches += 1
            try:
                new = [m for m in self.origin.updates(ca_id, entry.n) if m.signed_root.n > entry.n]
                freshness = self.origin.freshness(ca_id)
                root = self.origin.root(ca_id)
            except DpUnreachable as exc:
                if entry.fetched_at is None:
                    del self._cache[ca_id]
                    raise
                entry.stale = True
                logger.warning(f"{self.name}: origen inalcanzable para {ca_id.hex()}, sirviendo caché antigua ({exc})")
                return []
            # Solo se encadenan lotes contiguos; el resto se pedirá en el siguiente pull
            for message in sorted(new, key=lambda m: m.signed_root.n):
                if message.prior_n == entry.n:
                    entry.issuances.append(message)
            entry.freshness = freshness
            entry.root = root
            entry.fetched_at = self.clock.now()
            entry.stale = False
            return new

    def _entry(self, ca_id: bytes) -> _CacheEntry:
        entry = self._cache.get(ca_id)
        now = self.clock.now()
        if entry is None or entry.fetched_at is None or now - entry.fetched_at >= self.ttl:
            self.pull(ca_id)
            entry = self._cache[ca_id]
        return entry

    # DisseminationSource
    def updates(self, ca_id: bytes, from_n: int) -> list[IssuanceMessage]:
        return [m for m in self._entry(ca_id).issuances if m.signed_root.n > from_n]

    def freshness(self, ca_id: bytes) -> FreshnessMessage | None:
        return self._entry(ca_id).freshness

    def root(self, ca_id: bytes) -> SignedRoot | None:
        return self._entry(ca_id).root
