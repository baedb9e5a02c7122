"""
Shared test fixtures: a three-process system and a hand-built split-decision schedule
"""

from src.model import Event, Message, MessageKind, build_system
from src.protocols import protocol_P1_forced
from src.scheduler import replay
from src.utils.scenario import Scenario

SPLIT_VALUES = (0, 1, 1)


def split_scenario(**overrides) -> Scenario:
    data = dict(
        name="split",
        process_count=3,
        initial_values=SPLIT_VALUES,
        protocol="p1",
        crash_budget=1,
        step_bound=64,
        depth_bound=24,
        state_cap=200_000,
    )
    data.update(overrides)
    return Scenario(**data)


def split_events():
    """
    p1 hears p0, p0 crashes, p2 times out on its own value, then p1 hears p2.

    p2 decides 1 at step 6 and p1 decides 0 at step 7.
    """
    return [
        Event.start(0),
        Event.start(1),
        Event.deliver(Message(0, 1, MessageKind.VALUE_ANNOUNCE, 0, seq=0)),
        Event.crash(0),
        Event.start(2),
        Event.timeout(2),
        Event.deliver(Message(2, 1, MessageKind.VALUE_ANNOUNCE, 1, seq=1)),
    ]


def split_execution(protocol=None):
    topology, initial = build_system(3, SPLIT_VALUES)
    protocol = protocol or protocol_P1_forced()
    return replay(topology, initial, protocol, split_events())
