"""Diccionario autenticado: árbol de hashes sobre hojas ordenadas, cadena de frescura,
generación de pruebas y toda la verificación compartida por RAs, clientes y monitores.
"""
from __future__ import annotations

import logging
import math
from bisect import bisect_left
from typing import Iterable, Sequence

from cryptography.hazmat.primitives.asymmetric.ed25519 import Ed25519PrivateKey, Ed25519PublicKey
from pydantic import BaseModel, ConfigDict

from app.config.settings import CHAIN_LENGTH, CLOCK_SKEW_SECONDS
from app.core.crypto import chain_evaluate, hash_data, random_seed, sign, verify_signature
from app.core.errors import (
    BadChainLink,
    BadSignature,
    CountMismatch,
    DictRootMismatch,
    DuplicateSerial,
    RootMismatch,
    StaleTimestamp,
    WireFormatError,
)
from app.core.wire import Reader, decode_status
from app.schemas.authdict import (
    CA_ID_SIZE,
    AuthPath,
    FreshnessStatement,
    HashChainSecret,
    InvalidReason,
    Leaf,
    MembershipProof,
    NeedNewRoot,
    ProofKind,
    RevocationStatus,
    SignedRoot,
    StatusOutcome,
    StatusVerdict,
    encode_leaf,
    signed_root_payload,
    validate_serial,
)


logger = logging.getLogger(__name__)

LEAF_PREFIX = b"\x00"
NODE_PREFIX = b"\x01"
PAD_PREFIX = b"\x02"
EMPTY_ROOT = hash_data(b"")


def leaf_hash(serial: bytes, index: int) -> bytes:
    return hash_data(LEAF_PREFIX + encode_leaf(serial, index))


def node_hash(left: bytes, right: bytes) -> bytes:
    return hash_data(NODE_PREFIX + left + right)


_PADDING = [hash_data(PAD_PREFIX)]


def empty_subtree(level: int) -> bytes:
    """Digest de un subárbol sin hojas de altura `level`."""
    while len(_PADDING) <= level:
        _PADDING.append(node_hash(_PADDING[-1], _PADDING[-1]))
    return _PADDING[level]


def _build_levels(leaf_hashes: list[bytes]) -> list[list[bytes]]:
    # Un nodo sin hermano se combina con el subárbol vacío de su nivel: todos los caminos miden ceil(log2 n)
    levels = [leaf_hashes]
    level = leaf_hashes
    while len(level) > 1:
        pad = empty_subtree(len(levels) - 1)
        parent = [node_hash(level[i], level[i + 1] if i + 1 < len(level) else pad) for i in range(0, len(level), 2)]
        levels.append(parent)
        level = parent
    return levels


def level_widths(n: int) -> list[int]:
    widths = [n]
    while widths[-1] > 1:
        widths.append((widths[-1] + 1) // 2)
    return widths


class Dictionary:
    """Versión inmutable del diccionario de una CA; insertar produce una versión nueva."""

    __slots__ = ("ca_id", "_by_index", "_sorted_serials", "_sorted_indexes", "_levels")

    def __init__(self, ca_id: bytes, serials_by_index: Sequence[bytes] = ()) -> None:
        if len(ca_id) != CA_ID_SIZE:
            raise ValueError(f"El identificador de CA debe tener {CA_ID_SIZE} bytes")
        self.ca_id = bytes(ca_id)
        self._by_index = tuple(serials_by_index)
        entries = sorted(zip(self._by_index, range(1, len(self._by_index) + 1)))
        self._sorted_serials = [serial for serial, _ in entries]
        self._sorted_indexes = [index for _, index in entries]
        for previous, current in zip(self._sorted_serials, self._sorted_serials[1:]):
            if previous == current:
                raise DuplicateSerial(f"Serie repetida en el diccionario: {current.hex()}")
        self._levels = _build_levels([leaf_hash(s, i) for s, i in entries]) if entries else []

    @property
    def n(self) -> int:
        return len(self._by_index)

    @property
    def root(self) -> bytes:
        return self._levels[-1][0] if self._levels else EMPTY_ROOT

    @property
    def serials_by_index(self) -> tuple[bytes, ...]:
        return self._by_index

    def leaves(self) -> list[Leaf]:
        return [Leaf(serial=s, index=i) for s, i in zip(self._sorted_serials, self._sorted_indexes)]

    def position(self, serial: bytes) -> int:
        """Posición de inserción de `serial` en el orden lexicográfico."""
        return bisect_left(self._sorted_serials, serial)

    def __contains__(self, serial: bytes) -> bool:
        pos = self.position(serial)
        return pos < len(self._sorted_serials) and self._sorted_serials[pos] == serial

    def leaf_at(self, position: int) -> Leaf:
        return Leaf(serial=self._sorted_serials[position], index=self._sorted_indexes[position])

    def auth_path(self, position: int, stop_level: int | None = None) -> AuthPath:
        directions: list[bool] = []
        digests: list[bytes] = []
        idx = position
        levels = self._levels[:-1] if stop_level is None else self._levels[:stop_level]
        for depth, level in enumerate(levels):
            sibling = idx ^ 1
            directions.append(sibling < idx)
            digests.append(level[sibling] if sibling < len(level) else empty_subtree(depth))
            idx //= 2
        return AuthPath(directions=tuple(directions), digests=tuple(digests))

    def with_serials(self, serials: Iterable[bytes]) -> "Dictionary":
        batch = [validate_serial(s) for s in serials]
        seen: set[bytes] = set()
        for serial in batch:
            if serial in seen or serial in self:
                raise DuplicateSerial(f"La serie {serial.hex()} ya está revocada")
            seen.add(serial)
        return Dictionary(self.ca_id, self._by_index + tuple(batch))

    # Almacenamiento compacto: ca_id(8) ‖ n(8) ‖ por hoja en orden de índice [len(1) ‖ serie]
    def to_storage(self) -> bytes:
        out = bytearray(self.ca_id)
        out += self.n.to_bytes(8, "big")
        for serial in self._by_index:
            out.append(len(serial))
            out += serial
        return bytes(out)

    @classmethod
    def from_storage(cls, data: bytes) -> "Dictionary":
        reader = Reader(data)
        ca_id = reader.take(CA_ID_SIZE)
        count = reader.uint(8)
        serials = [validate_serial(reader.take(reader.uint(1))) for _ in range(count)]
        reader.expect_end()
        return cls(ca_id, serials)


def storage_size(serials: Iterable[bytes]) -> int:
    return CA_ID_SIZE + 8 + sum(1 + len(s) for s in serials)


class ReplicaSnapshot(BaseModel):
    """Copia de una RA: diccionario + última raíz firmada + última declaración de frescura."""

    model_config = ConfigDict(frozen=True, arbitrary_types_allowed=True)

    dictionary: Dictionary
    signed_root: SignedRoot | None = None
    freshness: FreshnessStatement | None = None

    @property
    def n(self) -> int:
        return self.dictionary.n


# Operaciones de la CA
def insert(dictionary: Dictionary, serials: Sequence[bytes]) -> tuple[Dictionary, bytes, int]:
    updated = dictionary.with_serials(serials)
    return updated, updated.root, updated.n


def make_signed_root(
    ca_key: Ed25519PrivateKey,
    dictionary: Dictionary,
    now: float,
    m: int = CHAIN_LENGTH,
    seed: bytes | None = None,
) -> tuple[SignedRoot, HashChainSecret]:
    timestamp = int(math.floor(now))
    secret = HashChainSecret(v=seed if seed is not None else random_seed(), m=m, t0=timestamp)
    anchor = secret.anchor
    payload = signed_root_payload(dictionary.ca_id, dictionary.root, dictionary.n, anchor, timestamp)
    signed = SignedRoot(
        ca_id=dictionary.ca_id,
        root=dictionary.root,
        n=dictionary.n,
        anchor=anchor,
        timestamp=timestamp,
        signature=sign(ca_key, payload),
    )
    return signed, secret


def refresh(secret: HashChainSecret, sr: SignedRoot, now: float, delta: int) -> FreshnessStatement | NeedNewRoot:
    p = max(0, int(math.floor((now - sr.timestamp) / delta)))
    if p >= secret.m:
        return NeedNewRoot(period=p)
    return FreshnessStatement(value=secret.value_at(secret.m - p))


def freshness_period(fs: FreshnessStatement, sr: SignedRoot, max_steps: int) -> int | None:
    """Número de hashes que llevan de la declaración al ancla, o None si no llega en max_steps."""
    value = fs.value
    for k in range(max_steps + 1):
        if value == sr.anchor:
            return k
        value = hash_data(value)
    return None


# Operaciones de la RA
def empty_replica(ca_id: bytes) -> ReplicaSnapshot:
    return ReplicaSnapshot(dictionary=Dictionary(ca_id))


def _check_signed_root(sr: SignedRoot, ca_public_key: Ed25519PublicKey, replica: ReplicaSnapshot, now: float | None) -> None:
    if sr.ca_id != replica.dictionary.ca_id:
        raise BadSignature("La raíz firmada pertenece a otra CA")
    if not verify_signature(ca_public_key, sr.signed_payload(), sr.signature):
        raise BadSignature("Firma inválida en la raíz firmada")
    current = replica.signed_root
    if current is not None and sr.timestamp < current.timestamp:
        raise StaleTimestamp(f"Marca de tiempo {sr.timestamp} anterior a la actual {current.timestamp}")
    if now is not None and sr.timestamp > now + CLOCK_SKEW_SECONDS:
        raise StaleTimestamp(f"Marca de tiempo {sr.timestamp} en el futuro")


def update(
    replica: ReplicaSnapshot,
    serials: Sequence[bytes],
    sr: SignedRoot,
    ca_public_key: Ed25519PublicKey,
    now: float | None = None,
) -> ReplicaSnapshot:
    """Aplica un lote firmado; todo o nada. La réplica recibida nunca se modifica."""
    _check_signed_root(sr, ca_public_key, replica, now)
    if replica.n + len(serials) != sr.n:
        raise CountMismatch(f"n esperado {replica.n + len(serials)}, la raíz firmada dice {sr.n}")
    try:
        candidate = replica.dictionary.with_serials(serials)
    except (DuplicateSerial, ValueError) as exc:
        raise RootMismatch(f"El lote no puede producir la raíz firmada: {exc}")
    if candidate.root != sr.root:
        raise RootMismatch("La raíz recalculada no coincide con la raíz firmada")
    return ReplicaSnapshot(dictionary=candidate, signed_root=sr, freshness=FreshnessStatement(value=sr.anchor))


def adopt_renewal(replica: ReplicaSnapshot, sr: SignedRoot, ca_public_key: Ed25519PublicKey, now: float | None = None) -> ReplicaSnapshot:
    """Adopta una raíz renovada (mismo contenido, nueva ancla)."""
    _check_signed_root(sr, ca_public_key, replica, now)
    if sr.n != replica.n:
        raise CountMismatch(f"La renovación dice n={sr.n}, la réplica tiene {replica.n}")
    if sr.root != replica.dictionary.root:
        raise RootMismatch("La renovación cambia la raíz sin revocaciones nuevas")
    return ReplicaSnapshot(dictionary=replica.dictionary, signed_root=sr, freshness=FreshnessStatement(value=sr.anchor))


def apply_freshness(replica: ReplicaSnapshot, fs: FreshnessStatement, now: float, delta: int) -> ReplicaSnapshot:
    sr = replica.signed_root
    if sr is None:
        raise BadChainLink("No hay raíz firmada contra la que verificar la frescura")
    p_now = max(0, int(math.floor((now - sr.timestamp) / delta)))
    period = freshness_period(fs, sr, p_now + 1)
    if period is None:
        raise BadChainLink("La declaración de frescura no encadena con el ancla actual")
    if replica.freshness is not None:
        current = freshness_period(replica.freshness, sr, p_now + 1)
        if current is not None and current > period:
            # Declaración más antigua que la que ya tenemos: se ignora
            return replica
    return ReplicaSnapshot(dictionary=replica.dictionary, signed_root=sr, freshness=fs)


def prove(dictionary: Dictionary, serial: bytes, sr: SignedRoot, fs: FreshnessStatement) -> RevocationStatus:
    if dictionary.root != sr.root or dictionary.n != sr.n or dictionary.ca_id != sr.ca_id:
        raise DictRootMismatch("El diccionario no corresponde a la raíz firmada")
    pos = dictionary.position(serial)
    n = dictionary.n
    if serial in dictionary:
        proof = MembershipProof(kind=ProofKind.PRESENT, leaves=(dictionary.leaf_at(pos),), paths=(dictionary.auth_path(pos),))
    elif n == 0:
        proof = MembershipProof(kind=ProofKind.ABSENT)
    elif pos == 0:
        proof = MembershipProof(kind=ProofKind.ABSENT, leaves=(dictionary.leaf_at(0),), paths=(dictionary.auth_path(0),))
    elif pos == n:
        proof = MembershipProof(kind=ProofKind.ABSENT, leaves=(dictionary.leaf_at(n - 1),), paths=(dictionary.auth_path(n - 1),))
    else:
        left, right = pos - 1, pos
        stop = _sibling_level(left, right)
        proof = MembershipProof(
            kind=ProofKind.ABSENT,
            leaves=(dictionary.leaf_at(left), dictionary.leaf_at(right)),
            paths=(dictionary.auth_path(left), dictionary.auth_path(right, stop_level=stop)),
        )
    return RevocationStatus(proof=proof, signed_root=sr, freshness=fs)


def _sibling_level(left: int, right: int) -> int:
    # Nivel en el que los ancestros de left y right son hermanos
    level = 0
    while (left >> (level + 1)) != (right >> (level + 1)):
        level += 1
    return level


# Verificación (pura; nunca lanza)
def position_from_directions(directions: Sequence[bool], widths: Sequence[int]) -> int | None:
    if len(directions) != len(widths) - 1:
        return None
    idx = sum(1 << level for level, is_left in enumerate(directions) if is_left)
    return idx if idx < widths[0] else None


def _climb(node: bytes, idx: int, path: AuthPath, stop_level: int) -> tuple[bytes, dict[int, bytes]] | None:
    """Sube desde `idx` hasta `stop_level`; devuelve el nodo y los hermanos usados por nivel."""
    siblings: dict[int, bytes] = {}
    cursor = 0
    for level in range(stop_level):
        if cursor >= len(path.digests) or path.directions[cursor] != bool(idx & 1):
            return None
        sibling = path.digests[cursor]
        siblings[level] = sibling
        node = node_hash(sibling, node) if idx & 1 else node_hash(node, sibling)
        cursor += 1
        idx //= 2
    if cursor != len(path.digests):
        return None
    return node, siblings


def _verify_proof(proof: MembershipProof, serial: bytes, sr: SignedRoot) -> tuple[bool, str]:
    n = sr.n
    if n == 0:
        if proof.kind is ProofKind.ABSENT and not proof.leaves and sr.root == EMPTY_ROOT:
            return True, ""
        return False, "diccionario vacío mal probado"
    if not proof.leaves:
        return False, "faltan hojas"
    widths = level_widths(n)
    top = len(widths) - 1

    first_leaf, first_path = proof.leaves[0], proof.paths[0]
    pos_a = position_from_directions(first_path.directions, widths)
    if pos_a is None:
        return False, "camino incompatible con n"
    if not 1 <= first_leaf.index <= n:
        return False, "índice de hoja fuera de rango"
    climbed = _climb(leaf_hash(first_leaf.serial, first_leaf.index), pos_a, first_path, top)
    if climbed is None or climbed[0] != sr.root:
        return False, "el camino no reconstruye la raíz"
    siblings_a = climbed[1]

    if proof.kind is ProofKind.PRESENT:
        if first_leaf.serial != serial:
            return False, "la hoja no corresponde a la serie consultada"
        return True, ""

    if len(proof.leaves) == 1:
        if pos_a == 0 and serial < first_leaf.serial:
            return True, ""
        if pos_a == n - 1 and serial > first_leaf.serial:
            return True, ""
        return False, "hoja de borde no acota la serie"

    second_leaf, second_path = proof.leaves[1], proof.paths[1]
    if not first_leaf.serial < serial < second_leaf.serial:
        return False, "las hojas no acotan la serie"
    if not 1 <= second_leaf.index <= n:
        return False, "índice de hoja fuera de rango"
    pos_b = pos_a + 1
    if pos_b >= n:
        return False, "hojas no adyacentes"
    stop = _sibling_level(pos_a, pos_b)
    joined = _climb(leaf_hash(second_leaf.serial, second_leaf.index), pos_b, second_path, stop)
    if joined is None or siblings_a.get(stop) != joined[0]:
        return False, "el segundo camino no se une al primero"
    return True, ""


def check_freshness(fs: FreshnessStatement, sr: SignedRoot, now: float, delta: int) -> bool:
    """Acepta la declaración del periodo k mientras t + (k-1)Δ <= now <= t + (k+2)Δ.

    Con p' = floor((now - t)/Δ) son los periodos p'-1, p' y p'+1, más p'-2 justo en now = t + p'Δ.
    """
    if sr.timestamp > now + CLOCK_SKEW_SECONDS:
        return False
    # Una raíz algo adelantada (dentro del margen de desfase) cuenta como periodo 0
    periods = max(0.0, now - sr.timestamp) / delta
    first = max(0, math.ceil(periods) - 2)
    value = chain_evaluate(fs.value, first)
    for _ in range(first, math.floor(periods) + 2):
        if value == sr.anchor:
            return True
        value = hash_data(value)
    return False


def verify_status(
    status: RevocationStatus,
    serial: bytes,
    ca_public_key: Ed25519PublicKey,
    now: float,
    delta: int,
    ca_id: bytes | None = None,
) -> StatusVerdict:
    sr = status.signed_root
    if ca_id is not None and sr.ca_id != ca_id:
        return StatusVerdict.invalid(InvalidReason.BAD_SIGNATURE, "raíz de otra CA")
    if not verify_signature(ca_public_key, sr.signed_payload(), sr.signature):
        return StatusVerdict.invalid(InvalidReason.BAD_SIGNATURE, "firma inválida")
    ok, detail = _verify_proof(status.proof, serial, sr)
    if not ok:
        return StatusVerdict.invalid(InvalidReason.BAD_PROOF, detail)
    if not check_freshness(status.freshness, sr, now, delta):
        return StatusVerdict.invalid(InvalidReason.STALE_FRESHNESS, "declaración fuera de la ventana 2Δ")
    if status.proof.kind is ProofKind.PRESENT:
        return StatusVerdict(outcome=StatusOutcome.REVOKED)
    return StatusVerdict(outcome=StatusOutcome.NOT_REVOKED)


def verify_status_bytes(
    blob: bytes,
    serial: bytes,
    ca_public_key: Ed25519PublicKey,
    now: float,
    delta: int,
    ca_id: bytes | None = None,
) -> StatusVerdict:
    try:
        status = decode_status(blob)
    except WireFormatError as exc:
        return StatusVerdict.invalid(InvalidReason.MALFORMED_STATUS, str(exc))
    return verify_status(status, serial, ca_public_key, now, delta, ca_id=ca_id)
