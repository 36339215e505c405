"""ritm-server: servidor TLS de prueba que presenta un certificado y envía datos periódicos."""
from __future__ import annotations

import argparse
import sys
from pathlib import Path

from app.cli.common import add_log_level, configure_logging
from app.services.stub_server_service import StubTlsServer


def main(argv: list[str] | None = None) -> int:
    parser = argparse.ArgumentParser(prog="ritm-server", description="Servidor TLS de prueba")
    parser.add_argument("--cert", type=Path, required=True, help="Certificado (fixture o DER) emitido con ritm-ca issue")
    parser.add_argument("--host", default="0.0.0.0")
    parser.add_argument("--port", type=int, default=9443)
    parser.add_argument("--data-interval", type=float, default=1.0)
    add_log_level(parser)
    args = parser.parse_args(argv)
    configure_logging(args.log_level)
    StubTlsServer(args.cert.read_bytes(), args.host, args.port, data_interval=args.data_interval).serve_forever()
    return 0


if __name__ == "__main__":
    sys.exit(main())
