"""ritm-monitor: verificación de pruebas de mal comportamiento, comparación de raíces entre edges y auditoría."""
from __future__ import annotations

import argparse
import itertools
import sys
from pathlib import Path

from app.cli.common import add_log_level, configure_logging
from app.config.settings import REGISTRY_FILE
from app.core.errors import DpUnreachable, HistoryGap, RitmError, UnknownCA, WireFormatError
from app.repositories.ca_registry_repository import CaRegistry
from app.schemas.authdict import ca_id_from_hex
from app.schemas.monitor import ComparisonOutcome
from app.services.dissemination_client import HttpDisseminationSource
from app.services.monitor_service import audit_replay, compare_roots, proof_from_bytes, proof_to_bytes, verify_misbehavior


def _verify(args: argparse.Namespace) -> int:
    registry = CaRegistry.load(args.registry)
    try:
        proof = proof_from_bytes(args.proof.read_bytes())
        valid = verify_misbehavior(proof, registry.public_key(proof.ca_id))
    except (WireFormatError, UnknownCA) as exc:
        print(f"[WARN] Prueba no verificable: {exc}")
        return 1
    if valid:
        print(f"[OK] Mal comportamiento probado para la CA {proof.ca_id.hex()} en n={proof.signed_root_a.n}")
        return 0
    print("[WARN] La prueba no es válida")
    return 1


def _compare(args: argparse.Namespace) -> int:
    registry = CaRegistry.load(args.registry)
    sources = [(url, HttpDisseminationSource(url)) for url in args.edge]
    found = 0
    for ca_id in registry.ca_ids():
        roots = []
        for url, source in sources:
            try:
                sr = source.root(ca_id)
            except (DpUnreachable, UnknownCA, WireFormatError) as exc:
                print(f"[WARN] {url}: {exc}")
                continue
            if sr is not None:
                roots.append(sr)
        for a, b in itertools.combinations(roots, 2):
            comparison = compare_roots(a, b, registry.public_key(ca_id))
            if comparison.outcome is ComparisonOutcome.MISBEHAVIOR:
                found += 1
                path = args.out / f"{ca_id.hex()}-{a.n}.proof"
                args.out.mkdir(parents=True, exist_ok=True)
                path.write_bytes(proof_to_bytes(comparison.proof))
                print(f"[WARN] Equivocación de {ca_id.hex()} en n={a.n}: prueba en {path}")
    if not found:
        print(f"[OK] Raíces consistentes en {len(sources)} fuentes")
    return 1 if found else 0


def _audit(args: argparse.Namespace) -> int:
    registry = CaRegistry.load(args.registry)
    ca_id = ca_id_from_hex(args.ca)
    source = HttpDisseminationSource(args.source)
    try:
        history = source.updates(ca_id, 0)
        claimed = source.root(ca_id)
    except RitmError as exc:
        print(f"[WARN] No se pudo obtener el historial: {exc}")
        return 2
    if claimed is None:
        print("[INFO] La CA no tiene raíz publicada")
        return 0
    try:
        result = audit_replay(history, claimed, registry.public_key(ca_id))
    except HistoryGap as exc:
        print(f"[WARN] Historial incompleto: {exc}")
        return 1
    print(f"[{'OK' if result.passed else 'WARN'}] Auditoría hasta n={result.replayed_n}: {result.detail or 'correcta'}")
    return 0 if result.passed else 1


def main(argv: list[str] | None = None) -> int:
    parser = argparse.ArgumentParser(prog="ritm-monitor", description="Monitor de CAs RITM")
    add_log_level(parser)
    sub = parser.add_subparsers(dest="command", required=True)

    verify = sub.add_parser("verify", help="Verifica una prueba de mal comportamiento (código 0 si es válida)")
    verify.add_argument("proof", type=Path)
    verify.add_argument("--registry", default=REGISTRY_FILE)
    verify.set_defaults(handler=_verify)

    compare = sub.add_parser("compare", help="Compara las raíces publicadas en varios edges")
    compare.add_argument("--edge", action="append", required=True)
    compare.add_argument("--registry", default=REGISTRY_FILE)
    compare.add_argument("--out", type=Path, default=Path("pruebas"))
    compare.set_defaults(handler=_compare)

    audit = sub.add_parser("audit", help="Reconstruye el diccionario de una CA y comprueba su raíz")
    audit.add_argument("--ca", required=True, help="Identificador de la CA en hexadecimal")
    audit.add_argument("--source", required=True)
    audit.add_argument("--registry", default=REGISTRY_FILE)
    audit.set_defaults(handler=_audit)

    args = parser.parse_args(argv)
    configure_logging(args.log_level)
    return args.handler(args)


if __name__ == "__main__":
    sys.exit(main())
