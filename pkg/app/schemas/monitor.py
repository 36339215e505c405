from __future__ import annotations

from enum import Enum

from pydantic import BaseModel, ConfigDict, model_validator

from app.schemas.authdict import SignedRoot


class MisbehaviorProof(BaseModel):
    """Dos raíces con la misma CA y el mismo n pero distinto contenido, ambas firmadas."""

    model_config = ConfigDict(frozen=True)

    signed_root_a: SignedRoot
    signed_root_b: SignedRoot

    @model_validator(mode="after")
    def _conflicting(self) -> "MisbehaviorProof":
        a, b = self.signed_root_a, self.signed_root_b
        if a.ca_id != b.ca_id or a.n != b.n or a.root == b.root:
            raise ValueError("Las raíces no forman un conflicto (misma CA, mismo n, raíz distinta)")
        return self

    @property
    def ca_id(self) -> bytes:
        return self.signed_root_a.ca_id


class ComparisonOutcome(str, Enum):
    CONSISTENT = "Consistent"
    INCOMPARABLE = "Incomparable"
    MISBEHAVIOR = "Misbehavior"


class RootComparison(BaseModel):
    model_config = ConfigDict(frozen=True)

    outcome: ComparisonOutcome
    proof: MisbehaviorProof | None = None


class AuditResult(BaseModel):
    model_config = ConfigDict(frozen=True)

    passed: bool
    replayed_n: int = 0
    detail: str = ""
