"""ritm-client: cliente TLS mínimo con RITM; escribe un informe de eventos al terminar."""
from __future__ import annotations

import argparse
import socket
import sys
import time
from pathlib import Path

from app.cli.common import add_log_level, boolean, configure_logging, host_port
from app.config.settings import CLIENT_GRACE_SECONDS, REGISTRY_FILE
from app.core.clock import SystemClock
from app.repositories.ca_registry_repository import CaRegistry
from app.schemas.client import ClientPolicy, ConnPhase
from app.services.client_service import ClientConnection


def run_client(connection: ClientConnection, address: tuple[str, int], duration: float, poll: float = 0.5) -> ClientConnection:
    deadline = time.monotonic() + duration
    with socket.create_connection(address, timeout=10) as sock:
        sock.settimeout(poll)
        sock.sendall(connection.start())
        while time.monotonic() < deadline and connection.verdict.is_open:
            try:
                data = sock.recv(4096)
                if not data:
                    break
                reply = connection.receive(data)
                if reply:
                    sock.sendall(reply)
            except socket.timeout:
                pass
            connection.check_liveness()
    return connection


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="ritm-client", description="Cliente TLS de prueba con RITM")
    parser.add_argument("--connect", type=host_port, required=True)
    parser.add_argument("--registry", default=REGISTRY_FILE)
    parser.add_argument(
        "--expect-ritm",
        type=boolean,
        default=None,
        help="Rechazar si el handshake llega sin estado (por defecto sí, salvo con --no-ritm)",
    )
    parser.add_argument("--delta", type=int, default=None, help="Δ en segundos; por defecto el de cada CA en el registro")
    parser.add_argument("--grace", type=float, default=CLIENT_GRACE_SECONDS)
    parser.add_argument("--duration", type=float, default=60.0, help="Segundos que se mantiene la conexión")
    parser.add_argument("--no-ritm", action="store_true", help="Cliente heredado sin extensión RITM")
    parser.add_argument("--report", type=Path, default=None)
    add_log_level(parser)
    return parser


def build_policy(args: argparse.Namespace, registry: CaRegistry) -> ClientPolicy:
    expect_ritm = not args.no_ritm if args.expect_ritm is None else args.expect_ritm
    return ClientPolicy(registry=registry, grace=args.grace, expect_ritm=expect_ritm, delta=args.delta)


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    configure_logging(args.log_level)

    registry = CaRegistry.load(args.registry)
    policy = build_policy(args, registry)
    connection = ClientConnection(policy, SystemClock(), ritm=not args.no_ritm, name="ritm-client")
    try:
        run_client(connection, args.connect, args.duration)
    except OSError as exc:
        print(f"[WARN] Conexión fallida: {exc}")
        return 2
    lines = connection.report_lines()
    if args.report is not None:
        args.report.write_text("\n".join(lines) + "\n", encoding="utf-8")
        print(f"[OK] Informe en {args.report}")
    for line in lines:
        print(line)
    verdict = connection.verdict
    print(f"[INFO] Estado final: {verdict.phase.value} {verdict.reason.value if verdict.reason else ''}".rstrip())
    return 0 if verdict.phase is ConnPhase.ACCEPTED else 1


if __name__ == "__main__":
    sys.exit(main())
