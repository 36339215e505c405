from __future__ import annotations

import logging
from typing import Callable, Iterator

from fastapi import FastAPI
from starlette.middleware.cors import CORSMiddleware

from app.api.v1.routers.dict_router import router as dict_router
from app.config.settings import CORS_ORIGINS, DATABASE_URL, ORIGIN_URL, REGISTRY_FILE, ROLE
from app.core.clock import SystemClock
from app.db.session import SessionLocal, engine, test_connection
from app.models import update_log as _update_log  # noqa: F401  Asegura el registro del modelo en metadata
from app.models.base import Base
from app.repositories.ca_registry_repository import CaRegistry
from app.services.dissemination_client import HttpDisseminationSource
from app.services.distribution_service import DisseminationSource, DistributionService
from app.services.edge_service import EdgeServer


logger = logging.getLogger(__name__)

SourceFactory = Callable[[], Iterator[DisseminationSource]]


def dp_source_factory(registry: CaRegistry, session_factory=SessionLocal, clock=None) -> SourceFactory:
    clock = clock or SystemClock()

    def factory() -> Iterator[DisseminationSource]:
        db = session_factory()
        try:
            yield DistributionService(db, registry, clock)
        finally:
            db.close()

    return factory


def singleton_source_factory(source: DisseminationSource) -> SourceFactory:
    def factory() -> Iterator[DisseminationSource]:
        yield source

    return factory


def _default_factory(role: str) -> SourceFactory:
    if role == "edge":
        print(f"[INFO] Rol edge, origen: {ORIGIN_URL}")
        return singleton_source_factory(EdgeServer(HttpDisseminationSource(ORIGIN_URL), SystemClock()))
    try:
        registry = CaRegistry.load(REGISTRY_FILE)
        print(f"[OK] Registro de CAs cargado: {len(registry)} CAs")
    except (OSError, ValueError) as exc:
        print(f"[WARN] No fue posible cargar el registro {REGISTRY_FILE}: {exc}")
        registry = CaRegistry()
    return dp_source_factory(registry)


def create_app(source_factory: SourceFactory | None = None, *, role: str = ROLE) -> FastAPI:
    app = FastAPI(title=f"RITM {role}")
    owns_database = source_factory is None and role != "edge"
    app.state.source_factory = source_factory or _default_factory(role)

    @app.on_event("startup")
    def on_startup() -> None:
        print("[INFO] ===== NODO DE DISEMINACIÓN INICIANDO =====")
        if not owns_database:
            return
        try:
            test_connection()
            print("[OK] Base de datos conectada correctamente.")
            print(f"[INFO] DATABASE_URL activo: {DATABASE_URL}")
        except Exception as exc:  # noqa: BLE001
            # No abortar; /health debe seguir respondiendo
            print(f"[WARN] Falló la conexión a la base de datos: {exc}")
        try:
            Base.metadata.create_all(bind=engine)
        except Exception as exc:  # noqa: BLE001
            print(f"[WARN] No fue posible crear/verificar tablas: {exc}")

    @app.get("/health")
    def health_check() -> dict[str, str]:
        return {"status": "ok", "role": role}

    origins = [o.strip() for o in CORS_ORIGINS.split(",") if o.strip()] or ["*"]
    app.add_middleware(
        CORSMiddleware,
        allow_origins=origins,
        allow_credentials=False,
        allow_methods=["GET", "POST"],
        allow_headers=["*"],
    )
    app.include_router(dict_router)
    return app
