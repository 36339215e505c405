from __future__ import annotations

import time
from typing import Protocol


SIMULATION_EPOCH = 1_700_000_000.0


class Clock(Protocol):
    def now(self) -> float: ...


class SystemClock:
    def now(self) -> float:
        return time.time()


class SimulatedClock:
    """Reloj lógico; solo el planificador lo avanza."""

    def __init__(self, start: float = SIMULATION_EPOCH) -> None:
        self._now = float(start)

    def now(self) -> float:
        return self._now

    def advance_to(self, instant: float) -> None:
        if instant < self._now:
            raise ValueError(f"El reloj no puede retroceder ({instant} < {self._now})")
        self._now = float(instant)

    def advance(self, seconds: float) -> None:
        self.advance_to(self._now + seconds)
