"""
Scheduler Module
Adversaries choosing among enabled events: seeded runs, exhaustive exploration,
replay and admissibility checks.
"""

import logging
from collections import deque
from dataclasses import dataclass, field
from enum import Enum
from typing import Callable, Dict, FrozenSet, Iterable, List, Optional, Sequence, Tuple

import numpy as np

from src import config as settings
from src.exceptions import ConfigurationError, ResourceCapError, SchedulerContractError
from src.measurement import PropertyProfile, profile_of
from src.model import (
    Configuration,
    Event,
    EventKind,
    Execution,
    Message,
    MessageKind,
    SystemTopology,
    apply_event,
    config_digest,
    enabled_events,
)

logger = logging.getLogger(__name__)


class AdversaryKind(str, Enum):
    SEEDED_RANDOM = "random"
    EXHAUSTIVE = "exhaustive"
    TARGETED_DELAY = "delay"


@dataclass(frozen=True)
class Adversary:
    """
    Who picks the next event.

    ``crash_plan`` entries ``(step, pid)`` crash ``pid`` once the run reaches ``step``;
    with a plan the adversary never crashes anything on its own.
    """

    kind: AdversaryKind = AdversaryKind.SEEDED_RANDOM
    seed: int = 0
    depth_bound: int = settings.DEFAULT_DEPTH
    victim: Optional[int] = None
    crash_budget: int = 0
    crash_plan: Tuple[Tuple[int, int], ...] = ()
    crash_targets: Optional[FrozenSet[int]] = None

    @classmethod
    def seeded_random(cls, seed: int, crash_budget: int = 0, **kwargs) -> "Adversary":
        return cls(AdversaryKind.SEEDED_RANDOM, seed=seed, crash_budget=crash_budget, **kwargs)

    @classmethod
    def exhaustive(cls, depth_bound: int, crash_budget: int = 0, **kwargs) -> "Adversary":
        return cls(
            AdversaryKind.EXHAUSTIVE, depth_bound=depth_bound, crash_budget=crash_budget, **kwargs
        )

    @classmethod
    def targeted_delay(cls, victim: int, crash_budget: int = 0, **kwargs) -> "Adversary":
        return cls(AdversaryKind.TARGETED_DELAY, victim=victim, crash_budget=crash_budget, **kwargs)

    def validate(self, topology: SystemTopology) -> None:
        if self.crash_budget < 0 or self.crash_budget > topology.size - 1:
            raise ConfigurationError(
                f"Crash budget must be within 0..{topology.size - 1}, got {self.crash_budget}"
            )
        for step, pid in self.crash_plan:
            if step < 0 or pid not in topology.processes:
                raise ConfigurationError(f"Bad crash plan entry ({step}, {pid})")
        if self.kind == AdversaryKind.TARGETED_DELAY and self.victim not in topology.processes:
            raise ConfigurationError(f"Delay victim {self.victim} is not a process")


class _Chooser:
    def __init__(self, adversary: Adversary):
        self.adversary = adversary
        self.rng = np.random.default_rng(adversary.seed)

    def choose(self, events: Sequence[Event]) -> Event:
        kind = self.adversary.kind
        if kind == AdversaryKind.SEEDED_RANDOM:
            return events[int(self.rng.integers(len(events)))]
        if kind == AdversaryKind.TARGETED_DELAY:
            for event in events:
                if not event.involves(self.adversary.victim):
                    return event
        return events[0]


def run(
    topology: SystemTopology,
    initial: Configuration,
    protocol,
    adversary: Adversary,
    step_bound: Optional[int] = None,
) -> Execution:
    """
    Drive one execution.

    Args:
        topology: System topology
        initial: Initial configuration
        protocol: Protocol every process runs
        adversary: Event-selection policy and crash budget
        step_bound: Maximum number of steps (default FLPE_STEP_BOUND)

    Returns:
        The execution; ``truncated`` when events were still enabled at the bound

    Raises:
        ConfigurationError: for the exhaustive adversary, which only ``explore`` drives
    """
    step_bound = settings.step_bound() if step_bound is None else step_bound
    if step_bound < 1:
        raise ConfigurationError(f"Step bound must be >= 1, got {step_bound}")
    if adversary.kind == AdversaryKind.EXHAUSTIVE:
        raise ConfigurationError("The exhaustive adversary covers every schedule; use explore")
    adversary.validate(topology)

    chooser = _Chooser(adversary)
    planned = sorted(adversary.crash_plan)
    spontaneous = 0 if planned else adversary.crash_budget
    initially_crashed = len(initial.crashed_set())
    config = initial
    steps: List[Tuple[Event, Configuration]] = []
    truncated = False

    for step in range(step_bound + 1):
        event = None
        while planned and planned[0][0] <= step:
            _, pid = planned.pop(0)
            if not config.state(pid).crashed:
                event = Event.crash(pid)
                break
        if event is None:
            used = len(config.crashed_set()) - initially_crashed
            events = enabled_events(
                config, topology, protocol, spontaneous - used, adversary.crash_targets
            )
            if not events:
                break
            event = chooser.choose(events)
        if step == step_bound:
            truncated = True
            break
        config = apply_event(config, event, protocol, topology)
        steps.append((event, config))
        logger.debug(f"step {step}: {event.kind.value} -> {config.outputs()}")

    if truncated:
        logger.warning(f"Run truncated at step bound {step_bound}")
    metadata = (
        ("adversary", adversary.kind.value),
        ("seed", adversary.seed),
        ("step_bound", step_bound),
    )
    return Execution(topology, initial, tuple(steps), truncated, metadata)


def replay(
    topology: SystemTopology, initial: Configuration, protocol, events: Iterable[Event]
) -> Execution:
    """
    Re-apply an event list.

    Raises:
        SchedulerContractError: if some event is not enabled when its turn comes
    """
    config = initial
    steps = []
    for event in events:
        config = apply_event(config, event, protocol, topology)
        steps.append((event, config))
    return Execution(topology, initial, tuple(steps), False, (("adversary", "replay"),))


def _matching(config: Configuration, message: Message) -> Optional[Message]:
    for candidate in config.in_flight:
        if (candidate.src, candidate.dst, candidate.kind, candidate.body) == (
            message.src,
            message.dst,
            message.kind,
            message.body,
        ):
            return candidate
    return None


def replay_with_padding(
    topology: SystemTopology, initial: Configuration, padded, base_execution: Execution
) -> Execution:
    """
    Map a schedule of a base protocol onto its dummy-padded version.

    Base events are re-issued in order; right after each ``Start(p)`` every dummy
    ``p`` sent to itself is delivered. Decisions are therefore never held back.

    Args:
        topology: System topology
        initial: Initial configuration (same as the base run's)
        padded: The padded protocol
        base_execution: Execution of the unpadded protocol

    Returns:
        The corresponding padded execution
    """
    config = initial
    steps = []

    def step(event: Event):
        nonlocal config
        config = apply_event(config, event, padded, topology)
        steps.append((event, config))

    for event in base_execution.events:
        if event.kind == EventKind.DELIVER:
            message = _matching(config, event.message)
            if message is None:
                raise SchedulerContractError(f"No in-flight message corresponds to {event.message}")
            step(Event.deliver(message))
            continue
        step(event)
        if event.kind == EventKind.START:
            pid = event.process
            dummies = [m for m in config.in_flight if m.kind == MessageKind.DUMMY and m.dst == pid]
            for dummy in dummies:
                step(Event.deliver(dummy))

    return Execution(topology, initial, tuple(steps), False, (("adversary", "padding-replay"),))


@dataclass
class ExplorationResult:
    """Terminal profiles of every explored schedule, each with a shortest witness."""

    profiles: Dict[PropertyProfile, Execution] = field(default_factory=dict)
    terminal_count: int = 0
    truncated_count: int = 0
    visited: int = 0
    partial: bool = False
    depth_bound: int = 0

    def profile_set(self) -> FrozenSet[PropertyProfile]:
        return frozenset(self.profiles)


def explore(
    topology: SystemTopology,
    initial: Configuration,
    protocol,
    depth_bound: Optional[int] = None,
    crash_budget: int = 0,
    crash_targets: Optional[Iterable[int]] = None,
    state_cap: Optional[int] = None,
    strict: bool = False,
    witness_filter: Optional[Callable[[Execution], bool]] = None,
) -> ExplorationResult:
    """
    Breadth-first search over every schedule up to a depth, deduplicated by digest.

    Args:
        topology: System topology
        initial: Initial configuration
        protocol: Protocol every process runs
        depth_bound: Maximum schedule length (default FLPE_DEPTH)
        crash_budget: Crashes the adversary may inject
        crash_targets: Processes the adversary may crash (default: any)
        state_cap: Visited-configuration cap (default FLPE_CAP)
        strict: Raise ResourceCapError instead of returning a partial result
        witness_filter: Preferred shape of witness; the first terminal in breadth-first
            order that satisfies it wins, otherwise the shortest one is kept

    Returns:
        ExplorationResult with one shortest witness per terminal profile
    """
    depth_bound = settings.depth_bound() if depth_bound is None else depth_bound
    state_cap = settings.state_cap() if state_cap is None else state_cap
    crash_targets = None if crash_targets is None else frozenset(crash_targets)
    initially_crashed = len(initial.crashed_set())

    root = config_digest(initial)
    parents: Dict[str, Tuple[Optional[str], Optional[Event]]] = {root: (None, None)}
    found: Dict[PropertyProfile, str] = {}
    preferred: Dict[PropertyProfile, Execution] = {}
    result = ExplorationResult(depth_bound=depth_bound)

    def witness(digest: str) -> Execution:
        path = []
        while parents[digest][0] is not None:
            digest, event = parents[digest][0], parents[digest][1]
            path.append(event)
        return replay(topology, initial, protocol, reversed(path))
    frontier = deque([(initial, root)])

    logger.info(
        f"Exploring {protocol.name} on {topology.size} processes "
        f"(depth {depth_bound}, crash budget {crash_budget})"
    )
    for depth in range(depth_bound + 1):
        next_frontier = deque()
        while frontier:
            config, digest = frontier.popleft()
            remaining = crash_budget - (len(config.crashed_set()) - initially_crashed)
            events = enabled_events(config, topology, protocol, remaining, crash_targets)
            if not events:
                result.terminal_count += 1
                profile = profile_of(config, topology)
                found.setdefault(profile, digest)
                if witness_filter is not None and profile not in preferred:
                    execution = witness(digest)
                    if witness_filter(execution):
                        preferred[profile] = execution
                continue
            if depth == depth_bound:
                result.truncated_count += 1
                continue
            for event in events:
                successor = apply_event(config, event, protocol, topology)
                key = config_digest(successor)
                if key in parents:
                    continue
                parents[key] = (digest, event)
                next_frontier.append((successor, key))
                if len(parents) > state_cap:
                    result.partial = True
                    break
            if result.partial:
                break
        if result.partial or not next_frontier:
            break
        frontier = next_frontier

    result.visited = len(parents)
    if result.partial:
        logger.warning(f"Exploration stopped at the state cap of {state_cap}; result is partial")
        if strict:
            logger.error(f"Exploration of {protocol.name} exceeded the state cap of {state_cap}")
            raise ResourceCapError(f"Visited-state cap of {state_cap} exceeded")

    for profile, digest in sorted(found.items()):
        result.profiles[profile] = preferred.get(profile) or witness(digest)

    logger.info(
        f"Explored {result.visited} configurations, {result.terminal_count} terminal, "
        f"profiles {[str(p) for p in sorted(result.profiles)]}"
    )
    return result


@dataclass(frozen=True)
class AdmissibilityReport:
    admissible: bool
    undelivered_to_correct: Tuple[Message, ...]
    fault_count: int
    uncovered_fault_count: int = 0
    hierarchy_admissible: bool = False
    advisory: bool = False


def check_admissible(execution: Execution) -> AdmissibilityReport:
    """
    At most one faulty process and every message to a correct process delivered.

    ``hierarchy_admissible`` counts only faults no oracle monitors.
    """
    final = execution.final
    topology = execution.topology
    crashed = final.crashed_set()
    undelivered = tuple(m for m in final.in_flight if m.dst not in crashed)
    monitored = {topology.oracle_target[o] for o in topology.oracles()}
    uncovered = len(crashed - monitored)
    if execution.truncated:
        logger.warning("Admissibility of a truncated execution is advisory only")
    return AdmissibilityReport(
        admissible=not undelivered and len(crashed) <= 1,
        undelivered_to_correct=undelivered,
        fault_count=len(crashed),
        uncovered_fault_count=uncovered,
        hierarchy_admissible=not undelivered and uncovered <= 1,
        advisory=execution.truncated,
    )
