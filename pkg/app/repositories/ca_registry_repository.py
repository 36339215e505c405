"""Registro de CAs: una línea por CA `ca_id_hex public_key_hex delta_segundos`.

Las líneas vacías y las que empiezan por `#` se ignoran.
"""
from __future__ import annotations

import logging
from pathlib import Path
from typing import Iterable

from cryptography.hazmat.primitives.asymmetric.ed25519 import Ed25519PublicKey
from pydantic import ValidationError

from app.core.crypto import load_public_key
from app.core.errors import ScenarioInvalid, UnknownCA
from app.schemas.authdict import ca_id_from_hex
from app.schemas.dissemination import CaRegistryEntry


logger = logging.getLogger(__name__)


class CaRegistry:
    def __init__(self, entries: Iterable[CaRegistryEntry] = ()) -> None:
        self._entries: dict[bytes, CaRegistryEntry] = {}
        self._keys: dict[bytes, Ed25519PublicKey] = {}
        for entry in entries:
            self.add(entry)

    def add(self, entry: CaRegistryEntry) -> None:
        self._entries[entry.ca_id] = entry
        self._keys[entry.ca_id] = load_public_key(entry.public_key)

    def get(self, ca_id: bytes) -> CaRegistryEntry:
        entry = self._entries.get(ca_id)
        if entry is None:
            raise UnknownCA(f"CA no registrada: {ca_id.hex()}")
        return entry

    def public_key(self, ca_id: bytes) -> Ed25519PublicKey:
        self.get(ca_id)
        return self._keys[ca_id]

    def delta(self, ca_id: bytes) -> int:
        return self.get(ca_id).delta

    def __contains__(self, ca_id: object) -> bool:
        return ca_id in self._entries

    def __len__(self) -> int:
        return len(self._entries)

    def entries(self) -> list[CaRegistryEntry]:
        return list(self._entries.values())

    def ca_ids(self) -> list[bytes]:
        return list(self._entries)

    # Archivo
    @classmethod
    def load(cls, path: str | Path) -> "CaRegistry":
        registry = cls()
        for number, raw in enumerate(Path(path).read_text(encoding="utf-8").splitlines(), start=1):
            line = raw.strip()
            if not line or line.startswith("#"):
                continue
            parts = line.split()
            if len(parts) != 3:
                raise ScenarioInvalid("se esperaban 3 campos: ca_id clave delta", location=f"{path}:{number}")
            try:
                entry = CaRegistryEntry(
                    ca_id=ca_id_from_hex(parts[0]),
                    public_key=bytes.fromhex(parts[1]),
                    delta=int(parts[2]),
                )
            except (ValueError, ValidationError) as exc:
                raise ScenarioInvalid(f"entrada de registro inválida: {exc}", location=f"{path}:{number}")
            registry.add(entry)
        logger.info(f"Registro de CAs cargado desde {path}: {len(registry)} CAs")
        return registry

    def save(self, path: str | Path) -> None:
        lines = ["# ca_id public_key delta_seconds"] + [entry.to_line() for entry in self._entries.values()]
        Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")
