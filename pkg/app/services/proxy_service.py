"""Proxy TCP transparente que aloja una RA entre clientes y un servidor."""
from __future__ import annotations

import logging
import random
import socket
import struct
import threading
import time
from typing import Callable

from app.config.settings import SYNC_JITTER
from app.schemas.middlebox import ConnKey, Direction
from app.services.ra_service import RevocationAgent
from app.services.sync_service import RaSyncClient


logger = logging.getLogger(__name__)

RECV_SIZE = 4096
# linux/netfilter_ipv4.h
SO_ORIGINAL_DST = 80


def original_destination(sock: socket.socket) -> tuple[str, int]:
    """Destino al que iba una conexión redirigida al proxy con iptables REDIRECT."""
    raw = sock.getsockopt(socket.SOL_IP, SO_ORIGINAL_DST, 16)
    port, packed = struct.unpack_from("!2xH4s", raw)
    return socket.inet_ntoa(packed), port


class _Connection:
    def __init__(self, key: ConnKey, client: socket.socket, target: socket.socket) -> None:
        self.key = key
        self.client = client
        self.target = target
        # Los estados sueltos del temporizador y el reenvío comparten el socket del cliente
        self.client_lock = threading.Lock()


class RaProxy:
    def __init__(
        self,
        agent: RevocationAgent,
        listen_host: str,
        listen_port: int,
        target_host: str | None,
        target_port: int | None,
        *,
        sync: RaSyncClient | None = None,
        sync_interval: float = 10.0,
        tick_interval: float = 0.5,
        rng: random.Random | None = None,
    ) -> None:
        self.agent = agent
        self.listen_host = listen_host
        self.listen_port = listen_port
        self.target_host = target_host
        self.target_port = target_port
        self.sync = sync
        self.sync_interval = sync_interval
        self.tick_interval = tick_interval
        self.rng = rng or random.Random()
        # Sin destino fijo el proxy es transparente: cada conexión sigue a su destino original
        self.resolve_original: Callable[[socket.socket], tuple[str, int]] = original_destination
        self.connections: dict[ConnKey, _Connection] = {}
        self.total_connections = 0
        self.bytes_forwarded = 0
        self._stop = threading.Event()
        self._server: socket.socket | None = None

    @property
    def transparent(self) -> bool:
        return self.target_host is None or self.target_port is None

    def upstream_for(self, client_socket: socket.socket) -> tuple[str, int]:
        if not self.transparent:
            return self.target_host, self.target_port
        host, port = self.resolve_original(client_socket)
        if (host, port) == client_socket.getsockname():
            # Conexión que no llegó redirigida: reenviarla volvería al propio proxy
            raise ConnectionRefusedError(f"Sin destino original para la conexión (apunta a {host}:{port})")
        return host, port

    def handle_client(self, client_socket: socket.socket, client_address: tuple[str, int]) -> None:
        target_socket = None
        key: ConnKey | None = None
        try:
            self.total_connections += 1
            server_host, server_port = self.upstream_for(client_socket)
            key = ConnKey(
                client_ip=client_address[0],
                server_ip=server_host,
                client_port=client_address[1],
                server_port=server_port,
            )
            logger.info(f"[PROXY] Nueva conexión {key}")
            target_socket = socket.create_connection((server_host, server_port), timeout=10)
            target_socket.settimeout(None)
            conn = _Connection(key, client_socket, target_socket)
            self.connections[key] = conn
            upstream = threading.Thread(target=self.forward_data, args=(conn, Direction.CLIENT_TO_SERVER), daemon=True)
            downstream = threading.Thread(target=self.forward_data, args=(conn, Direction.SERVER_TO_CLIENT), daemon=True)
            upstream.start()
            downstream.start()
            upstream.join()
            downstream.join()
        except OSError as exc:
            logger.warning(f"[PROXY] Error con {key or client_address}: {exc}")
        finally:
            if key is not None:
                self.connections.pop(key, None)
                self.agent.close(key)
            if target_socket is not None:
                target_socket.close()
            client_socket.close()
            logger.info(f"[PROXY] Conexión {key or client_address} cerrada")

    def forward_data(self, conn: _Connection, direction: Direction) -> None:
        source, dest = (conn.client, conn.target) if direction is Direction.CLIENT_TO_SERVER else (conn.target, conn.client)
        try:
            while True:
                data = source.recv(RECV_SIZE)
                if not data:
                    break
                out = self.agent.inspect(conn.key, direction, data)
                if direction is Direction.SERVER_TO_CLIENT:
                    with conn.client_lock:
                        dest.sendall(out)
                else:
                    dest.sendall(out)
                self.bytes_forwarded += len(out)
        except OSError as exc:
            logger.info(f"[PROXY] Reenvío {direction.value} de {conn.key} terminado: {exc}")
        finally:
            try:
                source.shutdown(socket.SHUT_RD)
                dest.shutdown(socket.SHUT_WR)
            except OSError:
                pass

    def _tick_loop(self) -> None:
        while not self._stop.wait(self.tick_interval):
            for key, record in self.agent.tick().items():
                conn = self.connections.get(key)
                if conn is None:
                    continue
                try:
                    with conn.client_lock:
                        conn.client.sendall(record)
                except OSError as exc:
                    logger.info(f"[PROXY] No se pudo enviar estado periódico a {key}: {exc}")

    def _sync_loop(self) -> None:
        while not self._stop.is_set():
            started = time.monotonic()
            for result in self.sync.sync_all():
                if result.error:
                    logger.warning(f"[PROXY] Sincronización de {result.ca_id.hex()} con error: {result.error}")
            # Intervalo en [Δ(1 - jitter), Δ]: nunca más tarde que Δ
            interval = self.sync_interval * (1 - self.rng.random() * SYNC_JITTER)
            self._stop.wait(max(0.0, interval - (time.monotonic() - started)))

    def start(self) -> None:
        server_socket = socket.socket(socket.AF_INET, socket.SOCK_STREAM)
        server_socket.setsockopt(socket.SOL_SOCKET, socket.SO_REUSEADDR, 1)
        self._server = server_socket
        try:
            server_socket.bind((self.listen_host, self.listen_port))
            server_socket.listen(64)
            print(f"[OK] RA {self.agent.name} escuchando en {self.listen_host}:{self.listen_port}")
            print(f"[INFO] Reenviando a {self.target_host}:{self.target_port}")
            threading.Thread(target=self._tick_loop, daemon=True).start()
            if self.sync is not None:
                threading.Thread(target=self._sync_loop, daemon=True).start()
            while not self._stop.is_set():
                client_socket, client_address = server_socket.accept()
                threading.Thread(target=self.handle_client, args=(client_socket, client_address), daemon=True).start()
        except KeyboardInterrupt:
            print("\n[INFO] Deteniendo la RA...")
        except OSError as exc:
            if not self._stop.is_set():
                print(f"[WARN] Error del servidor: {exc}")
        finally:
            self._stop.set()
            server_socket.close()
            print(f"[INFO] Conexiones: {self.total_connections} | Bytes reenviados: {self.bytes_forwarded:,} | Estados inyectados: {self.agent.injected}")

    def stop(self) -> None:
        self._stop.set()
        if self._server is not None:
            self._server.close()
