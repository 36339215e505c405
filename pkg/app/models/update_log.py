from sqlalchemy import BigInteger, Float, Integer, LargeBinary, String, UniqueConstraint
from sqlalchemy.orm import Mapped, mapped_column

from app.models.base import Base


class IssuanceRecord(Base):
    __tablename__ = "issuance_record"
    __table_args__ = (UniqueConstraint("ca_id", "last_n", name="uq_issuance_ca_n"),)

    id_issuance: Mapped[int] = mapped_column(Integer, primary_key=True, autoincrement=True)
    ca_id: Mapped[str] = mapped_column(String(16), nullable=False, index=True)
    first_index: Mapped[int] = mapped_column(BigInteger, nullable=False)
    last_n: Mapped[int] = mapped_column(BigInteger, nullable=False)
    # IssuanceMessage serializado tal como llegó de la CA
    payload: Mapped[bytes] = mapped_column(LargeBinary, nullable=False)
    published_at: Mapped[float] = mapped_column(Float, nullable=False)


class RootRecord(Base):
    __tablename__ = "root_record"

    ca_id: Mapped[str] = mapped_column(String(16), primary_key=True)
    n: Mapped[int] = mapped_column(BigInteger, nullable=False)
    payload: Mapped[bytes] = mapped_column(LargeBinary, nullable=False)
    published_at: Mapped[float] = mapped_column(Float, nullable=False)
    # Primera publicación de la CA; a partir de aquí cuenta en el ancho de banda
    active_since: Mapped[float] = mapped_column(Float, nullable=False)


class FreshnessRecord(Base):
    __tablename__ = "freshness_record"

    ca_id: Mapped[str] = mapped_column(String(16), primary_key=True)
    value: Mapped[bytes] = mapped_column(LargeBinary(20), nullable=False)
    period: Mapped[int] = mapped_column(BigInteger, nullable=False)
    published_at: Mapped[float] = mapped_column(Float, nullable=False)
