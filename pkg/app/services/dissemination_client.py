"""Clientes HTTP de los endpoints de diseminación (RAs, edges y monitores aguas arriba; CAs publicando)."""
from __future__ import annotations

import logging

import requests

from app.core.errors import DpUnreachable, RitmError, UnknownCA, WireFormatError
from app.core.wire import (
    decode_freshness,
    decode_issuance,
    decode_signed_root,
    encode_freshness,
    encode_issuance,
    encode_signed_root,
    frame,
    unframe_all,
)
from app.schemas.authdict import SignedRoot
from app.schemas.dissemination import FreshnessMessage, IssuanceMessage


logger = logging.getLogger(__name__)

OCTET_STREAM = "application/octet-stream"


class HttpDisseminationSource:
    """Implementa DisseminationSource contra un dp o un edge remoto."""

    def __init__(
        self,
        base_url: str,
        *,
        timeout: float = 5.0,
        session: requests.Session | None = None,
        unreachable: type[RitmError] = DpUnreachable,
    ) -> None:
        self.base_url = base_url.rstrip("/")
        self.timeout = timeout
        self.session = session or requests.Session()
        self.unreachable = unreachable
        self.last_stale = False

    def _get(self, ca_id: bytes, path: str, params: dict | None = None) -> list[bytes] | None:
        url = f"{self.base_url}/dict/{ca_id.hex()}/{path}"
        try:
            response = self.session.get(url, params=params, timeout=self.timeout)
        except requests.RequestException as exc:
            raise self.unreachable(f"{url}: {exc}")
        if response.status_code == 404:
            raise UnknownCA(f"CA desconocida para {self.base_url}: {ca_id.hex()}")
        if response.status_code == 204:
            return None
        if response.status_code >= 500:
            raise self.unreachable(f"{url}: HTTP {response.status_code}")
        if response.status_code != 200:
            raise WireFormatError(f"{url}: HTTP {response.status_code}")
        self.last_stale = response.headers.get("X-Ritm-Stale") == "1"
        return unframe_all(response.content)

    def updates(self, ca_id: bytes, from_n: int) -> list[IssuanceMessage]:
        frames = self._get(ca_id, "updates", {"from": from_n}) or []
        return [decode_issuance(f) for f in frames]

    def freshness(self, ca_id: bytes) -> FreshnessMessage | None:
        frames = self._get(ca_id, "freshness")
        if not frames:
            return None
        return FreshnessMessage(ca_id=ca_id, statement=decode_freshness(frames[0]))

    def root(self, ca_id: bytes) -> SignedRoot | None:
        frames = self._get(ca_id, "root")
        return decode_signed_root(frames[0]) if frames else None


class HttpPublisher:
    """Publicación de una CA en el punto de distribución."""

    def __init__(self, base_url: str, *, timeout: float = 5.0, session: requests.Session | None = None) -> None:
        self.base_url = base_url.rstrip("/")
        self.timeout = timeout
        self.session = session or requests.Session()

    def _post(self, ca_id: bytes, path: str, body: bytes) -> bool:
        url = f"{self.base_url}/dict/{ca_id.hex()}/{path}"
        try:
            response = self.session.post(url, data=frame(body), headers={"Content-Type": OCTET_STREAM}, timeout=self.timeout)
        except requests.RequestException as exc:
            raise DpUnreachable(f"{url}: {exc}")
        if response.status_code >= 400:
            logger.error(f"Publicación rechazada en {url}: HTTP {response.status_code} {response.text}")
            raise RitmError(f"{url}: HTTP {response.status_code}")
        return response.status_code == 201

    def publish(self, msg: IssuanceMessage | FreshnessMessage | SignedRoot) -> bool:
        if isinstance(msg, IssuanceMessage):
            return self._post(msg.ca_id, "issuance", encode_issuance(msg))
        if isinstance(msg, FreshnessMessage):
            return self._post(msg.ca_id, "freshness", encode_freshness(msg.statement))
        return self._post(msg.ca_id, "root", encode_signed_root(msg))
