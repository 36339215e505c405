"""Servidor TLS mínimo: responde al ClientHello con ServerHello, Certificate y ServerHelloDone
en registros separados, cierra el handshake con un Finished en claro y luego envía datos."""
from __future__ import annotations

import logging
import random
import socket
import threading

from app.core.errors import WireFormatError
from app.core.tls import (
    HandshakeReassembler,
    RecordSplitter,
    build_certificate,
    build_finished,
    build_handshake_records,
    build_record,
    build_server_hello,
    build_server_hello_done,
)
from app.schemas.middlebox import ContentType, HandshakeType


logger = logging.getLogger(__name__)


class ServerSession:
    def __init__(self, certificate: bytes, rng: random.Random, *, max_fragment: int = 2**14) -> None:
        self.certificate = certificate
        self.rng = rng
        self.max_fragment = max_fragment
        self.established = False
        self.closed = False
        self._records = RecordSplitter()
        self._handshake = HandshakeReassembler()

    def receive(self, segment: bytes) -> bytes:
        if self.closed:
            return b""
        reply = bytearray()
        try:
            for record, _ in self._records.feed(segment):
                if record.content_type != ContentType.HANDSHAKE:
                    continue
                for msg_type, _body in self._handshake.feed(record.payload):
                    if msg_type == HandshakeType.CLIENT_HELLO:
                        reply += self.server_flight()
                    elif msg_type == HandshakeType.FINISHED and not self.established:
                        self.established = True
                        reply += build_record(ContentType.HANDSHAKE, build_finished(self.rng.randbytes(12)))
        except WireFormatError as exc:
            logger.warning(f"Flujo del cliente ilegible: {exc}")
            self.closed = True
        return bytes(reply)

    def server_flight(self) -> bytes:
        return (
            build_handshake_records(build_server_hello(self.rng.randbytes(32)), max_fragment=self.max_fragment)
            + build_handshake_records(build_certificate([self.certificate]), max_fragment=self.max_fragment)
            + build_handshake_records(build_server_hello_done(), max_fragment=self.max_fragment)
        )

    def application_data(self, payload: bytes) -> bytes:
        return build_record(ContentType.APPLICATION_DATA, payload) if self.established and not self.closed else b""


class StubTlsServer:
    """Servidor de sockets para despliegues reales (un hilo por conexión)."""

    def __init__(self, certificate: bytes, host: str, port: int, *, data_interval: float = 1.0, rng: random.Random | None = None) -> None:
        self.certificate = certificate
        self.host = host
        self.port = port
        self.data_interval = data_interval
        self.rng = rng or random.Random()
        self._stop = threading.Event()

    def handle_client(self, client_socket: socket.socket, address: tuple[str, int]) -> None:
        session = ServerSession(self.certificate, self.rng)
        counter = 0
        try:
            client_socket.settimeout(self.data_interval)
            while not self._stop.is_set() and not session.closed:
                try:
                    data = client_socket.recv(4096)
                    if not data:
                        break
                    reply = session.receive(data)
                    if reply:
                        client_socket.sendall(reply)
                except socket.timeout:
                    pass
                if session.established:
                    counter += 1
                    client_socket.sendall(session.application_data(f"tick {counter}\n".encode()))
        except OSError as exc:
            logger.info(f"Conexión con {address} terminada: {exc}")
        finally:
            client_socket.close()

    def serve_forever(self) -> None:
        with socket.socket(socket.AF_INET, socket.SOCK_STREAM) as server_socket:
            server_socket.setsockopt(socket.SOL_SOCKET, socket.SO_REUSEADDR, 1)
            server_socket.bind((self.host, self.port))
            server_socket.listen(16)
            print(f"[OK] Servidor TLS de prueba en {self.host}:{self.port}")
            try:
                while not self._stop.is_set():
                    client_socket, address = server_socket.accept()
                    threading.Thread(target=self.handle_client, args=(client_socket, address), daemon=True).start()
            except KeyboardInterrupt:
                print("\n[INFO] Servidor detenido")

    def stop(self) -> None:
        self._stop.set()
