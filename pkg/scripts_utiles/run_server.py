#!/usr/bin/env python3

"""
Arranca el nodo de diseminación con recarga automática (desarrollo).
El rol (dp o edge) y el resto de parámetros salen de las variables RITM_* del .env.
"""

import os
import sys

import uvicorn

sys.path.insert(0, os.path.dirname(os.path.dirname(os.path.abspath(__file__))))

from app.config.settings import LOG_LEVEL, ROLE  # noqa: E402


if __name__ == "__main__":
    port = int(os.getenv("PORT", "8000"))
    print(f"[INFO] Iniciando nodo de diseminación (rol {ROLE}) en el puerto {port}...")
    try:
        uvicorn.run(
            "app.api.main:create_app",
            factory=True,
            host="0.0.0.0",
            port=port,
            reload=True,
            log_level=LOG_LEVEL.lower(),
        )
    except Exception as e:
        print(f"[WARN] Error al iniciar servidor: {e}")
        raise
