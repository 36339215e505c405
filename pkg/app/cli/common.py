from __future__ import annotations

import argparse
import logging

from app.config.settings import LOG_LEVEL


def configure_logging(level: str = LOG_LEVEL) -> None:
    logging.basicConfig(level=getattr(logging, level.upper(), logging.INFO), format="%(asctime)s %(levelname)s %(name)s: %(message)s")


def host_port(value: str) -> tuple[str, int]:
    host, sep, port = value.rpartition(":")
    if not sep or not port.isdigit():
        raise argparse.ArgumentTypeError(f"Se esperaba host:puerto, se recibió {value!r}")
    return host or "127.0.0.1", int(port)


def add_log_level(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--log-level", default=LOG_LEVEL, help="Nivel de logging (por defecto RITM_LOG_LEVEL)")


TRANSPARENT = "transparent"


def upstream_address(value: str) -> tuple[str, int] | None:
    """host:puerto del servidor protegido, o None con `transparent` (destino original de cada conexión)."""
    if value.strip().lower() == TRANSPARENT:
        return None
    return host_port(value)


def boolean(value: str) -> bool:
    lowered = value.strip().lower()
    if lowered in ("1", "true", "yes", "si", "sí", "on"):
        return True
    if lowered in ("0", "false", "no", "off"):
        return False
    raise argparse.ArgumentTypeError(f"Se esperaba un booleano (true/false), se recibió {value!r}")
