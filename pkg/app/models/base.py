from sqlalchemy.orm import DeclarativeBase


class Base(DeclarativeBase):
    """Base declarativa del log del punto de distribución."""
