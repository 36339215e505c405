from __future__ import annotations

import logging
from enum import Enum
from typing import Any, Dict, List, Optional

from app.core.clock import Clock, SystemClock


class AuditAction(str, Enum):
    MISBEHAVIOR = "MISBEHAVIOR"
    FORGERY = "FORGERY"
    AUDIT_FAILED = "AUDIT_FAILED"
    VERDICT = "VERDICT"
    DOWNGRADE = "DOWNGRADE"


class AuditService:
    """Entradas AUDIT estructuradas; además quedan en memoria para los informes del simulador."""

    def __init__(self, clock: Clock | None = None, party: str = "") -> None:
        self.clock = clock or SystemClock()
        self.party = party
        self.entries: List[Dict[str, Any]] = []
        self.logger = logging.getLogger(__name__)

    def record(self, action: AuditAction, entity: str, details: Optional[Dict[str, Any]] = None) -> Dict[str, Any]:
        audit_entry = {
            "timestamp": self.clock.now(),
            "party": self.party,
            "action": action.value,
            "entity": entity,
            "details": details or {},
        }
        self.entries.append(audit_entry)
        if action in (AuditAction.MISBEHAVIOR, AuditAction.FORGERY, AuditAction.AUDIT_FAILED):
            self.logger.warning(f"AUDIT: {audit_entry}")
        else:
            self.logger.info(f"AUDIT: {audit_entry}")
        return audit_entry

    def by_action(self, action: AuditAction) -> List[Dict[str, Any]]:
        return [e for e in self.entries if e["action"] == action.value]
