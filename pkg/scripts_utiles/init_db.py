#!/usr/bin/env python3

"""
Inicializa la base de datos apuntada por RITM_DATABASE_URL (crea la tabla del log de actualizaciones).
"""

import os
import sys

sys.path.insert(0, os.path.dirname(os.path.dirname(os.path.abspath(__file__))))

from app.config.settings import DATABASE_URL  # noqa: E402
from app.db.session import engine  # noqa: E402
from app.models import update_log as _update_log  # noqa: E402,F401
from app.models.base import Base  # noqa: E402


def init_db() -> None:
    Base.metadata.create_all(bind=engine)


if __name__ == "__main__":
    init_db()
    print(f"[OK] Tablas creadas en {DATABASE_URL}: {', '.join(sorted(Base.metadata.tables))}")
