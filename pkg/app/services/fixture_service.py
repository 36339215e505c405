"""Corpus de handshakes de prueba: vuelos del servidor en bruto y anotación `issuer_hex serial_hex` al lado."""
from __future__ import annotations

import logging
import random
from pathlib import Path

from pydantic import BaseModel, ConfigDict

from app.core.certificate import build_x509_certificate, encode_fixture_certificate, x509_issuer_id
from app.core.crypto import signing_key_from_seed
from app.schemas.authdict import serial_from_int
from app.services.client_service import emit_client_hello
from app.services.stub_server_service import ServerSession


logger = logging.getLogger(__name__)

FLIGHT_SUFFIX = ".flight"
HELLO_SUFFIX = ".hello"
META_SUFFIX = ".meta"
FIXTURE_ISSUER = "RITM Fixture CA"


class CorpusEntry(BaseModel):
    model_config = ConfigDict(frozen=True)

    name: str
    client_hello: bytes
    server_flight: bytes
    issuer_id: bytes
    serial: bytes
    ritm: bool


def generate_corpus(out_dir: str | Path, count: int, seed: int = 0, *, max_fragment: int = 2**14) -> list[Path]:
    """Mitad certificados de fixture y mitad X.509; uno de cada tres ClientHello sin extensión RITM."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    rng = random.Random(seed)
    ca_key = signing_key_from_seed(f"fixture-ca-{seed}".encode())
    x509_issuer = x509_issuer_id(FIXTURE_ISSUER)
    fixture_issuer = x509_issuer[::-1]
    not_after = 1_700_000_000 + 10 * 365 * 86_400
    written: list[Path] = []
    for i in range(count):
        serial_value = rng.randint(0x010000, 0xFFFFFF)
        serial = serial_from_int(serial_value)
        if i % 2 == 0:
            certificate = encode_fixture_certificate(serial, fixture_issuer, f"host-{i}.example", not_after, ca_key)
            issuer = fixture_issuer
        else:
            subject_key = signing_key_from_seed(f"fixture-host-{seed}-{i}".encode())
            certificate = build_x509_certificate(serial_value, f"host-{i}.example", FIXTURE_ISSUER, not_after, ca_key, subject_key)
            issuer = x509_issuer
        ritm = i % 3 != 2
        # Fragmentos pequeños en algunas capturas para forzar el reensamblado
        fragment = max_fragment if i % 4 else 64
        session = ServerSession(certificate, rng, max_fragment=fragment)
        name = f"handshake-{i:04d}"
        (out / f"{name}{HELLO_SUFFIX}").write_bytes(emit_client_hello(rng, ritm=ritm))
        (out / f"{name}{FLIGHT_SUFFIX}").write_bytes(session.server_flight())
        meta = out / f"{name}{META_SUFFIX}"
        meta.write_text(f"{issuer.hex()} {serial.hex()} {'ritm' if ritm else 'legacy'}\n", encoding="utf-8")
        written.append(meta)
    logger.info(f"Corpus de {count} handshakes escrito en {out}")
    return written


def load_corpus(directory: str | Path) -> list[CorpusEntry]:
    entries = []
    for meta in sorted(Path(directory).glob(f"*{META_SUFFIX}")):
        issuer_hex, serial_hex, mode = meta.read_text(encoding="utf-8").split()
        stem = meta.with_suffix("")
        entries.append(
            CorpusEntry(
                name=stem.name,
                client_hello=stem.with_suffix(HELLO_SUFFIX).read_bytes(),
                server_flight=stem.with_suffix(FLIGHT_SUFFIX).read_bytes(),
                issuer_id=bytes.fromhex(issuer_hex),
                serial=bytes.fromhex(serial_hex),
                ritm=mode == "ritm",
            )
        )
    return entries
