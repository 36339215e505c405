"""Entramado TLS 1.2 en claro: registros, mensajes de handshake y un mini-handshake de prueba.

Solo se interpreta lo que viaja sin cifrar (hellos, Certificate, ServerHelloDone);
el resto de registros se trata como bytes opacos.
"""
from __future__ import annotations

import struct
from typing import Iterable

from app.core.errors import WireFormatError
from app.core.wire import Reader
from app.schemas.middlebox import ContentType, HandshakeType, HandshakeView, TlsRecord


RECORD_HEADER = struct.Struct("!BHH")
HANDSHAKE_HEADER_SIZE = 4
MAX_FRAGMENT = 2**14
# Registros cifrados pueden crecer hasta 2^14 + 2048
MAX_RECORD_LENGTH = MAX_FRAGMENT + 2048
TLS12 = 0x0303
RITM_EXTENSION = 0xFF02
DEFAULT_CIPHER_SUITE = 0xC02F

_CONTENT_TYPES = {int(ct) for ct in ContentType}


def check_record_header(content_type: int, version: int, length: int) -> None:
    if content_type not in _CONTENT_TYPES:
        raise WireFormatError(f"Tipo de registro desconocido: {content_type:#x}")
    if version >> 8 != 3:
        raise WireFormatError(f"Versión de registro inválida: {version:#06x}")
    if length > MAX_RECORD_LENGTH:
        raise WireFormatError(f"Registro demasiado largo: {length}")


def looks_like_tls(prefix: bytes) -> bool | None:
    """None mientras no haya bytes suficientes para decidir."""
    if len(prefix) < 2:
        return None if not prefix or prefix[0] == ContentType.HANDSHAKE else False
    return prefix[0] == ContentType.HANDSHAKE and prefix[1] == 3


class RecordSplitter:
    """Corta un flujo de bytes en registros completos; lo incompleto queda en el buffer."""

    def __init__(self) -> None:
        self.buffer = bytearray()

    def push(self, data: bytes) -> None:
        self.buffer += data

    def next_record(self) -> tuple[TlsRecord, bytes] | None:
        """Siguiente registro completo; una cabecera inválida no consume nada del buffer."""
        if len(self.buffer) < RECORD_HEADER.size:
            return None
        content_type, version, length = RECORD_HEADER.unpack_from(self.buffer)
        check_record_header(content_type, version, length)
        end = RECORD_HEADER.size + length
        if len(self.buffer) < end:
            return None
        raw = bytes(self.buffer[:end])
        del self.buffer[:end]
        return TlsRecord(content_type=content_type, version=version, payload=raw[RECORD_HEADER.size:]), raw

    def feed(self, data: bytes) -> list[tuple[TlsRecord, bytes]]:
        self.push(data)
        records = []
        while (item := self.next_record()) is not None:
            records.append(item)
        return records

    def take_pending(self) -> bytes:
        pending = bytes(self.buffer)
        self.buffer.clear()
        return pending


class HandshakeReassembler:
    """Une fragmentos de handshake repartidos en varios registros."""

    def __init__(self) -> None:
        self.buffer = bytearray()

    def feed(self, payload: bytes) -> list[tuple[int, bytes]]:
        self.buffer += payload
        messages = []
        while len(self.buffer) >= HANDSHAKE_HEADER_SIZE:
            msg_type = self.buffer[0]
            length = int.from_bytes(self.buffer[1:4], "big")
            if length > 2**20:
                raise WireFormatError(f"Mensaje de handshake demasiado largo: {length}")
            end = HANDSHAKE_HEADER_SIZE + length
            if len(self.buffer) < end:
                break
            messages.append((msg_type, bytes(self.buffer[HANDSHAKE_HEADER_SIZE:end])))
            del self.buffer[:end]
        return messages

    def reset(self) -> None:
        self.buffer.clear()


def split_records(data: bytes) -> tuple[list[TlsRecord], bytes]:
    splitter = RecordSplitter()
    records = [record for record, _ in splitter.feed(data)]
    return records, splitter.take_pending()


# Parsing de mensajes
def _read_extensions(reader: Reader) -> tuple[tuple[int, bytes], ...]:
    if not reader.remaining:
        return ()
    block = Reader(reader.take(reader.uint(2)))
    extensions = []
    while block.remaining:
        ext_type = block.uint(2)
        extensions.append((ext_type, block.take(block.uint(2))))
    return tuple(extensions)


def parse_client_hello(body: bytes) -> HandshakeView:
    reader = Reader(body)
    version = reader.uint(2)
    reader.take(32)
    reader.take(reader.uint(1))  # session_id
    suites = reader.uint(2)
    if suites % 2:
        raise WireFormatError("Lista de cipher suites con longitud impar")
    reader.take(suites)
    reader.take(reader.uint(1))  # compresión
    extensions = _read_extensions(reader)
    reader.expect_end()
    return HandshakeView(msg_type=HandshakeType.CLIENT_HELLO, version=version, extensions=extensions)


def parse_server_hello(body: bytes) -> HandshakeView:
    reader = Reader(body)
    version = reader.uint(2)
    reader.take(32)
    reader.take(reader.uint(1))
    reader.take(2)  # cipher suite elegida
    reader.take(1)
    extensions = _read_extensions(reader)
    reader.expect_end()
    return HandshakeView(msg_type=HandshakeType.SERVER_HELLO, version=version, extensions=extensions)


def parse_certificate_list(body: bytes) -> HandshakeView:
    reader = Reader(body)
    chain = Reader(reader.take(reader.uint(3)))
    reader.expect_end()
    certificates = []
    while chain.remaining:
        certificates.append(chain.take(chain.uint(3)))
    if not certificates:
        raise WireFormatError("Mensaje Certificate sin certificados")
    return HandshakeView(msg_type=HandshakeType.CERTIFICATE, certificates=tuple(certificates))


def parse_handshake(msg_type: int, body: bytes) -> HandshakeView:
    if msg_type == HandshakeType.CLIENT_HELLO:
        return parse_client_hello(body)
    if msg_type == HandshakeType.SERVER_HELLO:
        return parse_server_hello(body)
    if msg_type == HandshakeType.CERTIFICATE:
        return parse_certificate_list(body)
    return HandshakeView(msg_type=msg_type)


# Construcción
def build_record(content_type: int, payload: bytes, version: int = TLS12) -> bytes:
    return RECORD_HEADER.pack(content_type, version, len(payload)) + payload


def build_handshake(msg_type: int, body: bytes) -> bytes:
    return bytes([msg_type]) + len(body).to_bytes(3, "big") + body


def _extensions_block(extensions: Iterable[tuple[int, bytes]]) -> bytes:
    block = b"".join(struct.pack("!HH", t, len(d)) + d for t, d in extensions)
    return struct.pack("!H", len(block)) + block


def build_client_hello(
    random: bytes,
    extensions: Iterable[tuple[int, bytes]] = (),
    cipher_suites: Iterable[int] = (DEFAULT_CIPHER_SUITE,),
    session_id: bytes = b"",
) -> bytes:
    suites = b"".join(struct.pack("!H", s) for s in cipher_suites)
    body = (
        struct.pack("!H", TLS12)
        + random
        + bytes([len(session_id)]) + session_id
        + struct.pack("!H", len(suites)) + suites
        + b"\x01\x00"
        + _extensions_block(extensions)
    )
    return build_handshake(HandshakeType.CLIENT_HELLO, body)


def build_server_hello(random: bytes, cipher_suite: int = DEFAULT_CIPHER_SUITE, extensions: Iterable[tuple[int, bytes]] = ()) -> bytes:
    body = struct.pack("!H", TLS12) + random + b"\x00" + struct.pack("!H", cipher_suite) + b"\x00"
    extensions = tuple(extensions)
    if extensions:
        body += _extensions_block(extensions)
    return build_handshake(HandshakeType.SERVER_HELLO, body)


def build_certificate(certificates: Iterable[bytes]) -> bytes:
    chain = b"".join(len(c).to_bytes(3, "big") + c for c in certificates)
    return build_handshake(HandshakeType.CERTIFICATE, len(chain).to_bytes(3, "big") + chain)


def build_server_hello_done() -> bytes:
    return build_handshake(HandshakeType.SERVER_HELLO_DONE, b"")


def build_finished(verify_data: bytes) -> bytes:
    return build_handshake(HandshakeType.FINISHED, verify_data)


def build_handshake_records(messages: bytes, version: int = TLS12, max_fragment: int = MAX_FRAGMENT) -> bytes:
    """Fragmenta mensajes de handshake en registros de como mucho max_fragment bytes."""
    return b"".join(
        build_record(ContentType.HANDSHAKE, messages[i:i + max_fragment], version)
        for i in range(0, len(messages), max_fragment)
    )


def build_status_record(payload: bytes, version: int = TLS12) -> bytes:
    return build_record(ContentType.RITM_STATUS, payload, version)
