"""Planificador de eventos discretos sobre el reloj simulado."""
from __future__ import annotations

import heapq
import itertools
import logging
from dataclasses import dataclass, field
from typing import Any, Callable

from app.core.clock import SimulatedClock


logger = logging.getLogger(__name__)


@dataclass(order=True)
class ScheduledEvent:
    instant: float
    sequence: int
    callback: Callable[..., Any] = field(compare=False)
    args: tuple = field(default=(), compare=False)
    label: str = field(default="", compare=False)
    cancelled: bool = field(default=False, compare=False)

    def cancel(self) -> None:
        self.cancelled = True


class EventScheduler:
    """Cola de prioridad por (instante, orden de alta): a igual instante, primero lo que se programó antes."""

    def __init__(self, clock: SimulatedClock) -> None:
        self.clock = clock
        self._queue: list[ScheduledEvent] = []
        self._sequence = itertools.count()
        self.processed = 0

    def at(self, instant: float, callback: Callable[..., Any], *args: Any, label: str = "") -> ScheduledEvent:
        if instant < self.clock.now():
            raise ValueError(f"No se puede programar en el pasado ({instant} < {self.clock.now()})")
        event = ScheduledEvent(instant, next(self._sequence), callback, args, label)
        heapq.heappush(self._queue, event)
        return event

    def after(self, delay: float, callback: Callable[..., Any], *args: Any, label: str = "") -> ScheduledEvent:
        return self.at(self.clock.now() + delay, callback, *args, label=label)

    @property
    def pending(self) -> int:
        return sum(1 for e in self._queue if not e.cancelled)

    def run_until(self, end: float) -> int:
        """Ejecuta todos los eventos con instante <= end y deja el reloj en end."""
        executed = 0
        while self._queue and self._queue[0].instant <= end:
            event = heapq.heappop(self._queue)
            if event.cancelled:
                continue
            self.clock.advance_to(event.instant)
            event.callback(*event.args)
            executed += 1
        self.processed += executed
        if self.clock.now() < end:
            self.clock.advance_to(end)
        logger.debug(f"{executed} eventos procesados hasta t={end}")
        return executed
