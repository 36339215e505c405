from __future__ import annotations


class RitmError(ValueError):
    """Error base del sistema; hereda de ValueError como el resto del backend."""


# Diccionario autenticado
class DuplicateSerial(RitmError):
    pass


class BadSignature(RitmError):
    def __init__(self, message: str = "Firma inválida", which: str = "") -> None:
        super().__init__(message)
        self.which = which


class StaleTimestamp(RitmError):
    pass


class RootMismatch(RitmError):
    pass


class CountMismatch(RitmError):
    pass


class DictRootMismatch(RitmError):
    pass


# Diseminación
class GapInSequence(RitmError):
    pass


class BadChainLink(RitmError):
    pass


class DpUnreachable(RitmError):
    pass


class EdgeUnreachable(RitmError):
    pass


class UnknownCA(RitmError):
    pass


# Cliente / monitor / simulador
class MalformedStatusRecord(RitmError):
    pass


class HistoryGap(RitmError):
    pass


class ScenarioInvalid(RitmError):
    def __init__(self, message: str, location: str = "") -> None:
        super().__init__(f"{location}: {message}" if location else message)
        self.location = location


class WireFormatError(RitmError):
    pass
