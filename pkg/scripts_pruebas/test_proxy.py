"""RA alojada en el proxy TCP, con el servidor TLS de prueba detrás (solo localhost)."""
import random
import socket
import threading
import time

import pytest

from app.schemas.client import ClientPolicy, ConnPhase
from app.services.client_service import ClientConnection
from app.services.proxy_service import RaProxy
from app.services.ra_service import RevocationAgent
from app.services.stub_server_service import StubTlsServer
from app.services.sync_service import RaSyncClient, ReplicaStore


def _free_port():
    with socket.socket(socket.AF_INET, socket.SOCK_STREAM) as sock:
        sock.bind(("127.0.0.1", 0))
        return sock.getsockname()[1]


def _wait_listening(port, timeout=5.0):
    deadline = time.monotonic() + timeout
    while time.monotonic() < deadline:
        try:
            socket.create_connection(("127.0.0.1", port), timeout=0.5).close()
            return
        except OSError:
            time.sleep(0.05)
    pytest.fail(f"Nadie escucha en el puerto {port}")


class _Accepted:
    """Socket aceptado mínimo: solo su dirección local."""

    def __init__(self, local):
        self.local = local

    def getsockname(self):
        return self.local


@pytest.fixture(params=["fijo", "transparente"])
def stack(request, dp, ca, registry, clock):
    store = ReplicaStore()
    RaSyncClient(store, registry, dp, clock).sync_ca(ca.ca_id)
    agent = RevocationAgent("ra-proxy", store, registry, clock)
    server_port, proxy_port = _free_port(), _free_port()
    server = StubTlsServer(ca.issue_certificate(b"\x33", "localhost", 2_000_000_000), "127.0.0.1", server_port, data_interval=0.1, rng=random.Random(1))
    threading.Thread(target=server.serve_forever, daemon=True).start()
    _wait_listening(server_port)
    if request.param == "fijo":
        proxy = RaProxy(agent, "127.0.0.1", proxy_port, "127.0.0.1", server_port, tick_interval=0.05)
    else:
        # Sin iptables en las pruebas: el destino original se fija a mano
        proxy = RaProxy(agent, "127.0.0.1", proxy_port, None, None, tick_interval=0.05)
        proxy.resolve_original = lambda sock: ("127.0.0.1", server_port)
    threading.Thread(target=proxy.start, daemon=True).start()
    _wait_listening(proxy_port)
    yield agent, proxy_port, server_port
    proxy.stop()
    server.stop()


def test_handshake_through_proxy_gets_status(stack, registry, clock):
    agent, proxy_port, _ = stack
    client = ClientConnection(ClientPolicy(registry=registry), clock, rng=random.Random(2))
    with socket.create_connection(("127.0.0.1", proxy_port), timeout=5) as sock:
        sock.sendall(client.start())
        deadline = time.monotonic() + 5
        while not client.application_data and time.monotonic() < deadline:
            data = sock.recv(4096)
            if not data:
                break
            reply = client.receive(data)
            if reply:
                sock.sendall(reply)
    assert client.verdict.phase is ConnPhase.ACCEPTED
    assert client.application_data.startswith(b"tick")
    assert agent.injected >= 1


def test_fixed_upstream_ignores_original_destination(registry, clock):
    agent = RevocationAgent("ra", ReplicaStore(), registry, clock)
    proxy = RaProxy(agent, "127.0.0.1", 8443, "10.0.0.9", 9443)
    proxy.resolve_original = lambda sock: pytest.fail("no debe consultarse")
    assert not proxy.transparent
    assert proxy.upstream_for(_Accepted(("127.0.0.1", 8443))) == ("10.0.0.9", 9443)


def test_transparent_upstream_follows_original_destination(registry, clock):
    agent = RevocationAgent("ra", ReplicaStore(), registry, clock)
    proxy = RaProxy(agent, "0.0.0.0", 8443, None, None)
    proxy.resolve_original = lambda sock: ("93.184.216.34", 443)
    assert proxy.transparent
    assert proxy.upstream_for(_Accepted(("10.0.0.1", 8443))) == ("93.184.216.34", 443)
    # Una conexión que no llegó redirigida apunta al propio proxy
    proxy.resolve_original = lambda sock: ("10.0.0.1", 8443)
    with pytest.raises(ConnectionRefusedError):
        proxy.upstream_for(_Accepted(("10.0.0.1", 8443)))
