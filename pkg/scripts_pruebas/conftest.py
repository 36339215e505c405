"""Fixtures compartidas: reloj simulado, CAs deterministas y un punto de distribución en SQLite en memoria."""
import random

import pytest

from app.core.clock import SimulatedClock
from app.core.crypto import hash_data, signing_key_from_seed
from app.db.session import build_engine, build_session_factory
from app.models import update_log as _update_log  # noqa: F401
from app.models.base import Base
from app.repositories.ca_registry_repository import CaRegistry
from app.schemas.authdict import CA_ID_SIZE
from app.services.ca_service import CertificationAuthority
from app.services.distribution_service import DistributionService


@pytest.fixture
def clock():
    return SimulatedClock()


@pytest.fixture
def make_ca(clock):
    def factory(index: int = 0, delta: int = 10, chain_length: int = 100) -> CertificationAuthority:
        ca_id = hash_data(f"test-ca-{index}".encode())[:CA_ID_SIZE]
        return CertificationAuthority(
            ca_id,
            signing_key_from_seed(f"test-ca-{index}".encode()),
            clock,
            delta=delta,
            chain_length=chain_length,
            rng=random.Random(index),
            name=f"ca-{index}",
        )

    return factory


@pytest.fixture
def ca(make_ca):
    authority = make_ca()
    authority.bootstrap()
    return authority


@pytest.fixture
def registry(ca):
    return CaRegistry([ca.registry_entry()])


@pytest.fixture
def make_dp(clock):
    sessions = []

    def factory(registry: CaRegistry) -> DistributionService:
        engine = build_engine("sqlite://")
        Base.metadata.create_all(bind=engine)
        session = build_session_factory(engine)()
        sessions.append(session)
        return DistributionService(session, registry, clock)

    yield factory
    for session in sessions:
        session.close()


@pytest.fixture
def dp(make_dp, registry, ca):
    service = make_dp(registry)
    service.publish(ca.signed_root)
    return service


@pytest.fixture
def registry_file(tmp_path, registry):
    path = tmp_path / "ca_registry.txt"
    registry.save(path)
    return path
