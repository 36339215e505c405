"""ritm-ra: agente de revocación como proxy TCP transparente delante de un servidor TLS."""
from __future__ import annotations

import argparse
import sys
from pathlib import Path

from app.cli.common import add_log_level, configure_logging, host_port, upstream_address
from app.config.settings import ORIGIN_URL, REGISTRY_FILE, STATE_TIMEOUT_SECONDS
from app.core.clock import SystemClock
from app.core.errors import EdgeUnreachable
from app.repositories.ca_registry_repository import CaRegistry
from app.services.audit_service import AuditService
from app.services.dissemination_client import HttpDisseminationSource
from app.services.monitor_service import MonitorService
from app.services.proxy_service import RaProxy
from app.services.ra_service import RevocationAgent
from app.services.sync_service import RaSyncClient, ReplicaStore


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="ritm-ra", description="Agente de revocación RITM (proxy TCP)")
    parser.add_argument("--listen", type=host_port, default=("0.0.0.0", 8443))
    parser.add_argument(
        "--upstream",
        "--target",
        dest="upstream",
        type=upstream_address,
        required=True,
        help="host:puerto del servidor, o 'transparent' para seguir el destino original (iptables REDIRECT)",
    )
    parser.add_argument("--edge", "--source", dest="edge", default=ORIGIN_URL, help="URL del edge o dp del que se sincroniza")
    parser.add_argument("--registry", default=REGISTRY_FILE)
    parser.add_argument("--replicas", type=Path, default=None, help="Directorio de réplicas persistentes")
    parser.add_argument("--name", default="ra")
    parser.add_argument(
        "--delta",
        "--sync-interval",
        dest="delta",
        type=float,
        default=None,
        help="Segundos entre sincronizaciones; por defecto el Δ más pequeño del registro",
    )
    parser.add_argument("--tick-interval", type=float, default=0.5)
    parser.add_argument("--state-timeout", type=float, default=STATE_TIMEOUT_SECONDS)
    add_log_level(parser)
    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    configure_logging(args.log_level)

    registry = CaRegistry.load(args.registry)
    print(f"[OK] Registro de CAs cargado: {len(registry)} CAs")
    store = ReplicaStore.load(args.replicas) if args.replicas and args.replicas.exists() else ReplicaStore()
    clock = SystemClock()
    audit = AuditService(clock, party=args.name)
    monitor = MonitorService(args.name, store, registry, audit)
    agent = RevocationAgent(args.name, store, registry, clock, state_timeout=args.state_timeout, monitor=monitor, audit=audit)
    source = HttpDisseminationSource(args.edge, unreachable=EdgeUnreachable)
    sync = RaSyncClient(store, registry, source, clock, name=args.name)
    interval = args.delta or min((e.delta for e in registry.entries()), default=10)

    proxy = RaProxy(
        agent,
        args.listen[0],
        args.listen[1],
        *(args.upstream or (None, None)),
        sync=sync,
        sync_interval=interval,
        tick_interval=args.tick_interval,
    )
    if proxy.transparent:
        print("[INFO] Modo transparente: cada conexión se reenvía a su destino original")
    try:
        proxy.start()
    finally:
        if args.replicas is not None:
            written = store.dump(args.replicas)
            print(f"[INFO] {written} réplicas guardadas en {args.replicas}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
