"""Planificador de eventos sobre el reloj simulado."""
import pytest

from app.core.clock import SIMULATION_EPOCH, SimulatedClock
from app.core.scheduler import EventScheduler


@pytest.fixture
def scheduler():
    return EventScheduler(SimulatedClock())


def test_events_run_in_time_then_insertion_order(scheduler):
    seen = []
    scheduler.at(SIMULATION_EPOCH + 5, seen.append, "b")
    scheduler.at(SIMULATION_EPOCH + 1, seen.append, "a")
    scheduler.at(SIMULATION_EPOCH + 5, seen.append, "c")
    assert scheduler.run_until(SIMULATION_EPOCH + 10) == 3
    assert seen == ["a", "b", "c"]
    assert scheduler.clock.now() == SIMULATION_EPOCH + 10


def test_callbacks_see_their_own_instant_and_can_reschedule(scheduler):
    instants = []

    def tick():
        instants.append(scheduler.clock.now())
        if len(instants) < 4:
            scheduler.after(2.5, tick)

    scheduler.after(1, tick)
    scheduler.run_until(SIMULATION_EPOCH + 100)
    assert [t - SIMULATION_EPOCH for t in instants] == [1, 3.5, 6, 8.5]
    assert scheduler.processed == 4


def test_events_past_the_horizon_wait(scheduler):
    seen = []
    scheduler.after(20, seen.append, 1)
    scheduler.run_until(SIMULATION_EPOCH + 10)
    assert seen == [] and scheduler.pending == 1
    scheduler.run_until(SIMULATION_EPOCH + 20)
    assert seen == [1]


def test_cancelled_events_are_skipped(scheduler):
    seen = []
    event = scheduler.after(1, seen.append, 1)
    event.cancel()
    assert scheduler.pending == 0
    scheduler.run_until(SIMULATION_EPOCH + 5)
    assert seen == []


def test_scheduling_in_the_past_is_an_error(scheduler):
    scheduler.run_until(SIMULATION_EPOCH + 5)
    with pytest.raises(ValueError):
        scheduler.at(SIMULATION_EPOCH + 1, print)
    with pytest.raises(ValueError):
        scheduler.clock.advance_to(SIMULATION_EPOCH)
