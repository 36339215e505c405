"""ritm-dp: lanza el servicio HTTP de diseminación como punto de distribución o como edge."""
from __future__ import annotations

import argparse
import os
import sys

import uvicorn


def main(argv: list[str] | None = None) -> int:
    parser = argparse.ArgumentParser(prog="ritm-dp", description="Punto de distribución / edge de RITM")
    parser.add_argument("--role", choices=["dp", "edge"], default=None)
    parser.add_argument("--host", default="0.0.0.0")
    parser.add_argument("--port", type=int, default=8000)
    parser.add_argument("--registry", default=None, help="Fichero de registro de CAs (rol dp)")
    parser.add_argument("--database-url", default=None)
    parser.add_argument("--origin", default=None, help="URL del dp de origen (rol edge)")
    parser.add_argument("--edge-ttl", type=float, default=None)
    parser.add_argument("--log-level", default="info")
    args = parser.parse_args(argv)

    # La configuración se lee del entorno al importar la app: los flags se vuelcan antes
    overrides = {
        "RITM_ROLE": args.role,
        "RITM_REGISTRY_FILE": args.registry,
        "RITM_DATABASE_URL": args.database_url,
        "RITM_ORIGIN_URL": args.origin,
        "RITM_EDGE_TTL_SECONDS": None if args.edge_ttl is None else str(args.edge_ttl),
    }
    for name, value in overrides.items():
        if value is not None:
            os.environ[name] = value

    print(f"Iniciando servidor en {args.host}:{args.port}...")
    uvicorn.run("app.api.main:create_app", factory=True, host=args.host, port=args.port, log_level=args.log_level)
    return 0


if __name__ == "__main__":
    sys.exit(main())
