from __future__ import annotations

import logging
import random
from typing import Sequence

from cryptography.hazmat.primitives.asymmetric.ed25519 import Ed25519PrivateKey

from app.config.settings import CHAIN_LENGTH, DELTA_SECONDS
from app.core.certificate import encode_fixture_certificate
from app.core.clock import Clock
from app.core.crypto import DIGEST_SIZE, public_key_bytes, random_seed
from app.schemas.authdict import FreshnessStatement, HashChainSecret, NeedNewRoot, SignedRoot
from app.schemas.dissemination import CaRegistryEntry, FreshnessMessage, IssuanceMessage
from app.services import authdict_service
from app.services.authdict_service import Dictionary


logger = logging.getLogger(__name__)


class CertificationAuthority:
    """Estado de una CA: diccionario de revocaciones, raíz firmada vigente y secreto de la cadena."""

    def __init__(
        self,
        ca_id: bytes,
        signing_key: Ed25519PrivateKey,
        clock: Clock,
        *,
        delta: int = DELTA_SECONDS,
        chain_length: int = CHAIN_LENGTH,
        rng: random.Random | None = None,
        name: str | None = None,
    ) -> None:
        self.ca_id = ca_id
        self.name = name or ca_id.hex()
        self.signing_key = signing_key
        self.clock = clock
        self.delta = delta
        self.chain_length = chain_length
        self.rng = rng
        self.dictionary = Dictionary(ca_id)
        self.signed_root: SignedRoot | None = None
        self.secret: HashChainSecret | None = None
        self.history: list[IssuanceMessage] = []

    def _seed(self) -> bytes:
        # Con rng el simulador es reproducible; en producción la semilla es aleatoria
        return self.rng.randbytes(DIGEST_SIZE) if self.rng is not None else random_seed()

    def _sign_current(self) -> SignedRoot:
        self.signed_root, self.secret = authdict_service.make_signed_root(
            self.signing_key, self.dictionary, self.clock.now(), m=self.chain_length, seed=self._seed()
        )
        return self.signed_root

    def registry_entry(self) -> CaRegistryEntry:
        return CaRegistryEntry(ca_id=self.ca_id, public_key=public_key_bytes(self.signing_key), delta=self.delta)

    def bootstrap(self) -> SignedRoot:
        """Raíz inicial del diccionario vacío (se publica como renovación)."""
        sr = self._sign_current()
        logger.info(f"CA {self.name}: raíz inicial publicada (n=0, t={sr.timestamp})")
        return sr

    def revoke(self, serials: Sequence[bytes]) -> IssuanceMessage:
        self.dictionary, _, n = authdict_service.insert(self.dictionary, serials)
        sr = self._sign_current()
        message = IssuanceMessage(ca_id=self.ca_id, serials=tuple(serials), signed_root=sr)
        self.history.append(message)
        logger.info(f"CA {self.name}: {len(serials)} revocaciones, n={n}")
        return message

    def refresh(self) -> tuple[SignedRoot | None, FreshnessMessage]:
        """Declaración de frescura del periodo actual; renueva la raíz si la cadena se agotó."""
        if self.signed_root is None or self.secret is None:
            raise ValueError(f"CA {self.name} sin raíz firmada; llamar antes a bootstrap")
        renewed: SignedRoot | None = None
        result = authdict_service.refresh(self.secret, self.signed_root, self.clock.now(), self.delta)
        if isinstance(result, NeedNewRoot):
            renewed = self._sign_current()
            logger.info(f"CA {self.name}: cadena agotada en el periodo {result.period}, raíz renovada")
            statement = FreshnessStatement(value=self.signed_root.anchor)
        else:
            statement = result
        return renewed, FreshnessMessage(ca_id=self.ca_id, statement=statement)

    def issue_certificate(self, serial: bytes, subject: str, not_after: int) -> bytes:
        return encode_fixture_certificate(serial, self.ca_id, subject, not_after, self.signing_key)

    def fork(self) -> "CertificationAuthority":
        """Copia con la misma clave y el mismo diccionario; base de las pruebas de equivocación."""
        twin = CertificationAuthority(
            self.ca_id,
            self.signing_key,
            self.clock,
            delta=self.delta,
            chain_length=self.chain_length,
            rng=random.Random(self.rng.random()) if self.rng is not None else None,
            name=f"{self.name}-fork",
        )
        twin.dictionary = self.dictionary
        twin.signed_root = self.signed_root
        twin.secret = self.secret
        twin.history = list(self.history)
        return twin
