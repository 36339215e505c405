"""ritm-ca: CA de despliegue real que publica en un punto de distribución por HTTP.

El directorio de la CA guarda la clave (`ca.key`), el diccionario (`ca.dict`) y una bandeja
`revocations.txt` con series en hexadecimal que `run` procesa en cada periodo.
"""
from __future__ import annotations

import argparse
import logging
import sys
import time
from pathlib import Path

from cryptography.hazmat.primitives import serialization
from cryptography.hazmat.primitives.asymmetric.ed25519 import Ed25519PrivateKey

from app.cli.common import add_log_level, configure_logging
from app.config.settings import CHAIN_LENGTH, DELTA_SECONDS, ORIGIN_URL, REGISTRY_FILE
from app.core.certificate import build_x509_certificate, x509_issuer_id
from app.core.clock import SystemClock
from app.core.crypto import generate_signing_key, hash_data, public_key_bytes
from app.core.errors import RitmError
from app.repositories.ca_registry_repository import CaRegistry
from app.schemas.authdict import CA_ID_SIZE, validate_serial
from app.services.authdict_service import Dictionary
from app.services.ca_service import CertificationAuthority
from app.services.dissemination_client import HttpPublisher


logger = logging.getLogger(__name__)

KEY_FILE = "ca.key"
DICT_FILE = "ca.dict"
INBOX_FILE = "revocations.txt"
INBOX_OFFSET_FILE = "revocations.offset"


def ca_id_for_key(key: Ed25519PrivateKey) -> bytes:
    return hash_data(public_key_bytes(key))[:CA_ID_SIZE]


def _load_key(directory: Path) -> Ed25519PrivateKey:
    return Ed25519PrivateKey.from_private_bytes(bytes.fromhex((directory / KEY_FILE).read_text(encoding="utf-8").strip()))


def _init(args: argparse.Namespace) -> int:
    directory: Path = args.dir
    directory.mkdir(parents=True, exist_ok=True)
    if (directory / KEY_FILE).exists():
        print(f"[WARN] {directory / KEY_FILE} ya existe; no se sobrescribe")
        return 1
    key = generate_signing_key()
    raw = key.private_bytes(serialization.Encoding.Raw, serialization.PrivateFormat.Raw, serialization.NoEncryption())
    (directory / KEY_FILE).write_text(raw.hex() + "\n", encoding="utf-8")
    ca_id = x509_issuer_id(args.name) if args.x509_name else ca_id_for_key(key)
    (directory / DICT_FILE).write_bytes(Dictionary(ca_id).to_storage())
    (directory / INBOX_FILE).touch()
    registry = CaRegistry.load(args.registry) if Path(args.registry).exists() else CaRegistry()
    ca = CertificationAuthority(ca_id, key, SystemClock(), delta=args.delta)
    registry.add(ca.registry_entry())
    registry.save(args.registry)
    print(f"[OK] CA {ca_id.hex()} creada en {directory}")
    print(f"[OK] Registro actualizado: {args.registry}")
    return 0


def _read_inbox(directory: Path) -> list[bytes]:
    inbox = directory / INBOX_FILE
    offset_file = directory / INBOX_OFFSET_FILE
    offset = int(offset_file.read_text()) if offset_file.exists() else 0
    lines = inbox.read_text(encoding="utf-8").splitlines() if inbox.exists() else []
    serials = []
    for line in lines[offset:]:
        line = line.strip()
        if line and not line.startswith("#"):
            try:
                serials.append(validate_serial(bytes.fromhex(line)))
            except ValueError as exc:
                logger.error(f"Serie ignorada en {inbox}: {line!r} ({exc})")
    offset_file.write_text(str(len(lines)), encoding="utf-8")
    return serials


def _run(args: argparse.Namespace) -> int:
    directory: Path = args.dir
    key = _load_key(directory)
    dictionary = Dictionary.from_storage((directory / DICT_FILE).read_bytes())
    ca = CertificationAuthority(dictionary.ca_id, key, SystemClock(), delta=args.delta, chain_length=args.chain_length)
    ca.dictionary = dictionary
    publisher = HttpPublisher(args.dp)
    try:
        publisher.publish(ca.bootstrap())
    except RitmError as exc:
        print(f"[WARN] El dp no aceptó la raíz inicial: {exc}")
        return 1
    print(f"[OK] CA {ca.name} publicando en {args.dp} cada {args.delta} s")
    try:
        while True:
            time.sleep(args.delta)
            try:
                fresh = [s for s in _read_inbox(directory) if s not in ca.dictionary]
                if fresh:
                    publisher.publish(ca.revoke(fresh))
                    (directory / DICT_FILE).write_bytes(ca.dictionary.to_storage())
                renewed, freshness = ca.refresh()
                if renewed is not None:
                    publisher.publish(renewed)
                publisher.publish(freshness)
            except RitmError as exc:
                print(f"[WARN] Publicación fallida: {exc}")
    except KeyboardInterrupt:
        print("\n[INFO] CA detenida")
    return 0


def _issue(args: argparse.Namespace) -> int:
    directory: Path = args.dir
    key = _load_key(directory)
    dictionary = Dictionary.from_storage((directory / DICT_FILE).read_bytes())
    not_after = int(time.time()) + args.days * 86_400
    serial = validate_serial(bytes.fromhex(args.serial))
    if args.x509_name:
        subject_key = generate_signing_key()
        raw = build_x509_certificate(int.from_bytes(serial, "big"), args.subject, args.x509_name, not_after, key, subject_key)
    else:
        raw = CertificationAuthority(dictionary.ca_id, key, SystemClock()).issue_certificate(serial, args.subject, not_after)
    args.out.write_bytes(raw)
    print(f"[OK] Certificado {args.serial} para {args.subject} en {args.out}")
    return 0


def main(argv: list[str] | None = None) -> int:
    parser = argparse.ArgumentParser(prog="ritm-ca", description="Autoridad de certificación RITM")
    add_log_level(parser)
    sub = parser.add_subparsers(dest="command", required=True)

    init = sub.add_parser("init", help="Crea clave, diccionario vacío y entrada de registro")
    init.add_argument("--dir", type=Path, required=True)
    init.add_argument("--registry", default=REGISTRY_FILE)
    init.add_argument("--delta", type=int, default=DELTA_SECONDS)
    init.add_argument("--name", default="RITM CA")
    init.add_argument("--x509-name", action="store_true", help="Identificador derivado del nombre X.509 del emisor")
    init.set_defaults(handler=_init)

    run = sub.add_parser("run", help="Publica raíces y frescura en el dp")
    run.add_argument("--dir", type=Path, required=True)
    run.add_argument("--dp", default=ORIGIN_URL)
    run.add_argument("--delta", type=int, default=DELTA_SECONDS)
    run.add_argument("--chain-length", type=int, default=CHAIN_LENGTH)
    run.set_defaults(handler=_run)

    issue = sub.add_parser("issue", help="Emite un certificado para el servidor de prueba")
    issue.add_argument("--dir", type=Path, required=True)
    issue.add_argument("--serial", required=True, help="Serie en hexadecimal")
    issue.add_argument("--subject", default="localhost")
    issue.add_argument("--days", type=int, default=365)
    issue.add_argument("--x509-name", default=None, help="Emite X.509 con este nombre de emisor")
    issue.add_argument("--out", type=Path, required=True)
    issue.set_defaults(handler=_issue)

    args = parser.parse_args(argv)
    configure_logging(args.log_level)
    return args.handler(args)


if __name__ == "__main__":
    sys.exit(main())
