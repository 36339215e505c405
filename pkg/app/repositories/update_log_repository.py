from typing import List

from sqlalchemy import func, select
from sqlalchemy.orm import Session

from app.models.update_log import FreshnessRecord, IssuanceRecord, RootRecord


class UpdateLogRepository:
    def __init__(self, db: Session) -> None:
        self.db = db

    # Emisiones
    def add_issuance(self, *, ca_id: str, first_index: int, last_n: int, payload: bytes, published_at: float) -> IssuanceRecord:
        entity = IssuanceRecord(
            ca_id=ca_id,
            first_index=first_index,
            last_n=last_n,
            payload=payload,
            published_at=published_at,
        )
        self.db.add(entity)
        self.db.flush()
        return entity

    def get_issuance(self, ca_id: str, last_n: int) -> IssuanceRecord | None:
        stmt = select(IssuanceRecord).where(IssuanceRecord.ca_id == ca_id, IssuanceRecord.last_n == last_n)
        return self.db.execute(stmt).scalar_one_or_none()

    def list_issuances(self, ca_id: str, *, after_n: int = 0) -> List[IssuanceRecord]:
        stmt = (
            select(IssuanceRecord)
            .where(IssuanceRecord.ca_id == ca_id, IssuanceRecord.last_n > after_n)
            .order_by(IssuanceRecord.last_n)
        )
        return list(self.db.execute(stmt).scalars())

    def latest_n(self, ca_id: str) -> int:
        stmt = select(func.max(IssuanceRecord.last_n)).where(IssuanceRecord.ca_id == ca_id)
        return self.db.execute(stmt).scalar() or 0

    # Raíz vigente
    def get_root(self, ca_id: str) -> RootRecord | None:
        return self.db.get(RootRecord, ca_id)

    def put_root(self, *, ca_id: str, n: int, payload: bytes, published_at: float) -> RootRecord:
        entity = self.get_root(ca_id)
        if entity is None:
            entity = RootRecord(ca_id=ca_id, n=n, payload=payload, published_at=published_at, active_since=published_at)
            self.db.add(entity)
        else:
            entity.n = n
            entity.payload = payload
            entity.published_at = published_at
        self.db.flush()
        return entity

    def list_roots(self) -> List[RootRecord]:
        return list(self.db.execute(select(RootRecord).order_by(RootRecord.ca_id)).scalars())

    # Frescura vigente
    def get_freshness(self, ca_id: str) -> FreshnessRecord | None:
        return self.db.get(FreshnessRecord, ca_id)

    def put_freshness(self, *, ca_id: str, value: bytes, period: int, published_at: float) -> FreshnessRecord:
        entity = self.get_freshness(ca_id)
        if entity is None:
            entity = FreshnessRecord(ca_id=ca_id, value=value, period=period, published_at=published_at)
            self.db.add(entity)
        else:
            entity.value = value
            entity.period = period
            entity.published_at = published_at
        self.db.flush()
        return entity

    def commit(self) -> None:
        self.db.commit()

    def rollback(self) -> None:
        self.db.rollback()
