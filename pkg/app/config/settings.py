import os
from typing import Final

from dotenv import load_dotenv


load_dotenv()


def get_env(name: str, default: str = "") -> str:
    value = os.getenv(name, default)
    return value.strip() if isinstance(value, str) else default


def get_int_env(name: str, default: int) -> int:
    raw = get_env(name, str(default))
    try:
        return int(raw)
    except ValueError:
        raise RuntimeError(f"{name} debe ser un entero, se recibió {raw!r}")


def get_float_env(name: str, default: float) -> float:
    raw = get_env(name, str(default))
    try:
        return float(raw)
    except ValueError:
        raise RuntimeError(f"{name} debe ser un número, se recibió {raw!r}")


def get_database_url() -> str:
    # El log del punto de distribución vive en SQLite salvo que se indique otra cosa
    database_url = get_env("RITM_DATABASE_URL", "sqlite:///./ritm_dp.db")
    if not database_url:
        raise RuntimeError("RITM_DATABASE_URL no puede estar vacío")
    return database_url


DATABASE_URL: Final[str] = get_database_url()

# Parámetros del protocolo
DELTA_SECONDS: Final[int] = get_int_env("RITM_DELTA_SECONDS", 10)
# 86400 periodos = un día con Δ de 1 s
CHAIN_LENGTH: Final[int] = get_int_env("RITM_CHAIN_LENGTH", 86_400)
CLOCK_SKEW_SECONDS: Final[int] = get_int_env("RITM_CLOCK_SKEW_SECONDS", 60)
STATE_TIMEOUT_SECONDS: Final[int] = get_int_env("RITM_STATE_TIMEOUT_SECONDS", 300)
CLIENT_GRACE_SECONDS: Final[float] = get_float_env("RITM_CLIENT_GRACE_SECONDS", 2.0)
EDGE_TTL_SECONDS: Final[float] = get_float_env("RITM_EDGE_TTL_SECONDS", 0.0)
SYNC_JITTER: Final[float] = get_float_env("RITM_SYNC_JITTER", 0.1)
MONITOR_EVERY_DELTAS: Final[int] = get_int_env("RITM_MONITOR_EVERY_DELTAS", 10)

# Despliegue
REGISTRY_FILE: Final[str] = get_env("RITM_REGISTRY_FILE", "ca_registry.txt")
ORIGIN_URL: Final[str] = get_env("RITM_ORIGIN_URL", "http://127.0.0.1:8000")
ROLE: Final[str] = get_env("RITM_ROLE", "dp")
LOG_LEVEL: Final[str] = get_env("RITM_LOG_LEVEL", "INFO").upper()
CORS_ORIGINS: Final[str] = get_env("RITM_CORS_ORIGINS", "*")
