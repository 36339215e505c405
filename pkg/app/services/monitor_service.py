"""Monitores: comparación de raíces firmadas entre observadores y auditoría por repetición del historial."""
from __future__ import annotations

import logging
import random
from typing import Iterable, Sequence

from cryptography.hazmat.primitives.asymmetric.ed25519 import Ed25519PublicKey

from app.core.crypto import verify_signature
from app.core.errors import BadSignature, DpUnreachable, EdgeUnreachable, HistoryGap, UnknownCA, WireFormatError
from app.core.wire import decode_root_pair, encode_root_pair
from app.repositories.ca_registry_repository import CaRegistry
from app.schemas.authdict import SignedRoot
from app.schemas.dissemination import IssuanceMessage
from app.schemas.monitor import AuditResult, ComparisonOutcome, MisbehaviorProof, RootComparison
from app.services.audit_service import AuditAction, AuditService
from app.services.authdict_service import EMPTY_ROOT, Dictionary
from app.services.distribution_service import DisseminationSource
from app.services.sync_service import ReplicaStore


logger = logging.getLogger(__name__)


def compare_roots(a: SignedRoot, b: SignedRoot, ca_public_key: Ed25519PublicKey) -> RootComparison:
    for which, sr in (("a", a), ("b", b)):
        if not verify_signature(ca_public_key, sr.signed_payload(), sr.signature):
            raise BadSignature(f"Firma inválida en la raíz {which}", which=which)
    if a.ca_id != b.ca_id or a.n != b.n:
        return RootComparison(outcome=ComparisonOutcome.INCOMPARABLE)
    if a.root == b.root:
        return RootComparison(outcome=ComparisonOutcome.CONSISTENT)
    proof = MisbehaviorProof(signed_root_a=a, signed_root_b=b)
    return RootComparison(outcome=ComparisonOutcome.MISBEHAVIOR, proof=proof)


def verify_misbehavior(proof: MisbehaviorProof, ca_public_key: Ed25519PublicKey) -> bool:
    a, b = proof.signed_root_a, proof.signed_root_b
    return (
        a.ca_id == b.ca_id
        and a.n == b.n
        and a.root != b.root
        and verify_signature(ca_public_key, a.signed_payload(), a.signature)
        and verify_signature(ca_public_key, b.signed_payload(), b.signature)
    )


def audit_replay(history: Sequence[IssuanceMessage], claimed: SignedRoot, ca_public_key: Ed25519PublicKey) -> AuditResult:
    """Reconstruye el diccionario lote a lote y comprueba cada raíz firmada hasta la reclamada."""
    if not verify_signature(ca_public_key, claimed.signed_payload(), claimed.signature):
        return AuditResult(passed=False, detail="firma inválida en la raíz reclamada")
    dictionary = Dictionary(claimed.ca_id)
    last_timestamp = 0
    starts = {m.first_index for m in history}
    for position, message in enumerate(history):
        if message.first_index != dictionary.n + 1:
            if dictionary.n + 1 in starts:
                return AuditResult(passed=False, replayed_n=dictionary.n, detail=f"lote {position} fuera de orden")
            raise HistoryGap(f"Falta el lote que empieza en el índice {dictionary.n + 1}")
        sr = message.signed_root
        if not verify_signature(ca_public_key, sr.signed_payload(), sr.signature):
            return AuditResult(passed=False, replayed_n=dictionary.n, detail=f"firma inválida en n={sr.n}")
        if sr.timestamp < last_timestamp:
            return AuditResult(passed=False, replayed_n=dictionary.n, detail=f"marca de tiempo decreciente en n={sr.n}")
        try:
            dictionary = dictionary.with_serials(message.serials)
        except ValueError as exc:
            return AuditResult(passed=False, replayed_n=dictionary.n, detail=str(exc))
        if dictionary.root != sr.root:
            return AuditResult(passed=False, replayed_n=dictionary.n, detail=f"raíz distinta en n={sr.n}")
        last_timestamp = sr.timestamp
        if dictionary.n >= claimed.n:
            break
    if dictionary.n > claimed.n:
        return AuditResult(passed=False, replayed_n=dictionary.n, detail="la raíz reclamada no cae en el límite de un lote")
    if dictionary.n < claimed.n:
        raise HistoryGap(f"El historial llega a n={dictionary.n}, la raíz reclamada dice {claimed.n}")
    expected = dictionary.root if dictionary.n else EMPTY_ROOT
    if expected != claimed.root:
        return AuditResult(passed=False, replayed_n=dictionary.n, detail="la raíz reclamada no corresponde al historial")
    return AuditResult(passed=True, replayed_n=dictionary.n)


def proof_to_bytes(proof: MisbehaviorProof) -> bytes:
    return encode_root_pair(proof.signed_root_a, proof.signed_root_b)


class MonitorService:
    """Monitor integrado en una RA: compara sus raíces con las de un edge al azar y con las de sus pares."""

    def __init__(
        self,
        name: str,
        store: ReplicaStore,
        registry: CaRegistry,
        audit: AuditService,
        rng: random.Random | None = None,
    ) -> None:
        self.name = name
        self.store = store
        self.registry = registry
        self.audit = audit
        self.rng = rng or random.Random()
        self.proofs: list[MisbehaviorProof] = []

    def _local_root(self, ca_id: bytes) -> SignedRoot | None:
        replica = self.store.get(ca_id)
        return replica.signed_root if replica is not None else None

    def check(self, remote: SignedRoot, origin: str) -> RootComparison | None:
        local = self._local_root(remote.ca_id)
        if local is None or remote.ca_id not in self.registry:
            return None
        try:
            comparison = compare_roots(local, remote, self.registry.public_key(remote.ca_id))
        except BadSignature as exc:
            self.audit.record(AuditAction.FORGERY, remote.ca_id.hex(), {"origin": origin, "which": exc.which})
            return None
        if comparison.proof is not None and comparison.proof not in self.proofs:
            self.proofs.append(comparison.proof)
            self.audit.record(
                AuditAction.MISBEHAVIOR,
                remote.ca_id.hex(),
                {"origin": origin, "n": remote.n, "proof": proof_to_bytes(comparison.proof).hex()},
            )
        return comparison

    def check_all(self, roots: Iterable[SignedRoot], origin: str) -> list[RootComparison]:
        results = []
        for sr in roots:
            comparison = self.check(sr, origin)
            if comparison is not None:
                results.append(comparison)
        return results

    def monitor_round(self, edges: Sequence[tuple[str, DisseminationSource]], peers: Sequence["MonitorService"]) -> list[RootComparison]:
        results: list[RootComparison] = []
        if edges:
            edge_name, edge = edges[self.rng.randrange(len(edges))]
            roots = []
            for ca_id in self.registry.ca_ids():
                try:
                    sr = edge.root(ca_id)
                except (DpUnreachable, EdgeUnreachable, UnknownCA) as exc:
                    logger.info(f"{self.name}: raíz de {ca_id.hex()} no disponible en {edge_name}: {exc}")
                    continue
                if sr is not None:
                    roots.append(sr)
            results += self.check_all(roots, edge_name)
        for peer in peers:
            peer_roots = [s.signed_root for s in peer.store.snapshots().values() if s.signed_root is not None]
            results += self.check_all(peer_roots, peer.name)
        return results


def proof_from_bytes(data: bytes) -> MisbehaviorProof:
    a, b = decode_root_pair(data)
    try:
        return MisbehaviorProof(signed_root_a=a, signed_root_b=b)
    except ValueError as exc:
        raise WireFormatError(f"El par de raíces no es una prueba de conflicto: {exc}")
