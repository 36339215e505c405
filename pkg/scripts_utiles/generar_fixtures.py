#!/usr/bin/env python3

"""
Genera el corpus de handshakes TLS (ClientHello + vuelo del servidor) usado por las pruebas
del agente de revocación y por el benchmark de DPI.

Uso: python scripts_utiles/generar_fixtures.py [directorio] [cantidad] [semilla]
"""

import os
import sys
from pathlib import Path

sys.path.insert(0, os.path.dirname(os.path.dirname(os.path.abspath(__file__))))

from app.services.fixture_service import generate_corpus, load_corpus  # noqa: E402


def main() -> None:
    out_dir = Path(sys.argv[1]) if len(sys.argv) > 1 else Path("fixtures")
    count = int(sys.argv[2]) if len(sys.argv) > 2 else 20
    seed = int(sys.argv[3]) if len(sys.argv) > 3 else 7
    generate_corpus(out_dir, count=count, seed=seed)
    entries = load_corpus(out_dir)
    legacy = sum(1 for e in entries if not e.ritm)
    print(f"[OK] {len(entries)} handshakes en {out_dir} ({legacy} sin extensión RITM)")


if __name__ == "__main__":
    main()
