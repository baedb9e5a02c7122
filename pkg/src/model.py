"""
System Model Module
Topologies, process states, messages, configurations and the step relation.
"""

import hashlib
import logging
from dataclasses import dataclass, field, replace
from enum import Enum
from typing import Any, FrozenSet, Iterable, List, Optional, Sequence, Tuple

from src.exceptions import ConfigurationError, SchedulerContractError, TopologyError

logger = logging.getLogger(__name__)

# Finite value alphabet; the undecided marker is None and is never a member.
VALUE_ALPHABET: Tuple[int, ...] = tuple(range(10))
BOTTOM = None


class MessageKind(str, Enum):
    VALUE_ANNOUNCE = "value"
    ORACLE_QUERY = "query"
    ORACLE_REPLY = "reply"
    DUMMY = "dummy"


class EventKind(str, Enum):
    START = "start"
    DELIVER = "deliver"
    TIMEOUT = "timeout"
    CRASH = "crash"


_EVENT_RANK = {
    EventKind.START: 0,
    EventKind.DELIVER: 1,
    EventKind.TIMEOUT: 2,
    EventKind.CRASH: 3,
}


@dataclass(frozen=True)
class SystemTopology:
    """
    The graph of processes and channels, plus the oracle hierarchy.

    Process ids are dense indices. ``oracle_level[p]`` is 0 for ordinary processes
    and n >= 1 for an oracle at hierarchy level n, whose ``oracle_target[p]`` sits at
    level n - 1.
    """

    processes: Tuple[int, ...]
    channels: FrozenSet[Tuple[int, int]]
    oracle_level: Tuple[int, ...]
    oracle_target: Tuple[Optional[int], ...]

    def __post_init__(self):
        n = len(self.processes)
        if self.processes != tuple(range(n)):
            raise TopologyError("Process ids must be dense indices 0..|V|-1")
        if len(self.oracle_level) != n or len(self.oracle_target) != n:
            raise TopologyError("Oracle maps must cover every process")
        for a, b in self.channels:
            if (b, a) not in self.channels:
                raise TopologyError(f"Channel ({a},{b}) has no reverse channel")
        for pid in self.processes:
            level = self.oracle_level[pid]
            target = self.oracle_target[pid]
            if level == 0:
                if target is not None:
                    raise TopologyError(f"Ordinary process {pid} cannot monitor a target")
                continue
            if target is None or not 0 <= target < n:
                raise TopologyError(f"Oracle {pid} has no valid target")
            if self.oracle_level[target] != level - 1:
                raise TopologyError(
                    f"Oracle {pid} at level {level} must monitor a level {level - 1} process"
                )
            missing = [q for q in self.processes if q != pid and (pid, q) not in self.channels]
            if missing:
                raise TopologyError(f"Oracle {pid} is not connected to {missing}")

    @property
    def size(self) -> int:
        return len(self.processes)

    def is_oracle(self, pid: int) -> bool:
        return self.oracle_level[pid] > 0

    def level_zero(self) -> Tuple[int, ...]:
        """Ordinary (non-oracle) processes, the consensus participants."""
        return tuple(p for p in self.processes if self.oracle_level[p] == 0)

    def at_level(self, level: int) -> Tuple[int, ...]:
        return tuple(p for p in self.processes if self.oracle_level[p] == level)

    def oracles(self) -> Tuple[int, ...]:
        return tuple(p for p in self.processes if self.oracle_level[p] > 0)

    def max_level(self) -> int:
        return max(self.oracle_level) if self.oracle_level else 0

    def has_channel(self, src: int, dst: int) -> bool:
        # Self-addressed messages travel on the local loopback.
        return src == dst or (src, dst) in self.channels

    def monitored_chain(self, oracle: int) -> Tuple[int, ...]:
        """Target, target's target, ... down to level 0."""
        chain = []
        target = self.oracle_target[oracle]
        while target is not None:
            chain.append(target)
            target = self.oracle_target[target]
        return tuple(chain)


@dataclass(frozen=True)
class Message:
    """
    A message in a channel.

    ``body`` is a value for VALUE_ANNOUNCE, None for ORACLE_QUERY and DUMMY, and a
    tuple of ``(pid, crashed)`` pairs for ORACLE_REPLY (direct target first).
    """

    src: int
    dst: int
    kind: MessageKind
    body: Any = None
    seq: int = 0

    def sort_key(self) -> Tuple:
        return (self.src, self.seq, self.dst)

    @property
    def verdict(self) -> Optional[bool]:
        """Crash verdict about the direct target, for oracle replies."""
        if self.kind != MessageKind.ORACLE_REPLY or not self.body:
            return None
        return self.body[0][1]


@dataclass(frozen=True)
class ProcessState:
    """
    Local state of one process.

    ``started`` and ``sent`` are simulator bookkeeping: the former flips at the
    process's Start step, the latter numbers outgoing messages.
    """

    id: int
    initial_value: Optional[int]
    output: Optional[int] = BOTTOM
    crashed: bool = False
    started: bool = False
    sent: int = 0
    protocol_locals: Any = None

    @property
    def decided(self) -> bool:
        return self.output is not BOTTOM


@dataclass(frozen=True)
class Configuration:
    """Per-process states plus the in-flight multiset, kept in canonical order."""

    states: Tuple[ProcessState, ...]
    in_flight: Tuple[Message, ...] = ()

    def state(self, pid: int) -> ProcessState:
        return self.states[pid]

    def crashed_set(self) -> FrozenSet[int]:
        return frozenset(s.id for s in self.states if s.crashed)

    def outputs(self) -> Tuple[Optional[int], ...]:
        return tuple(s.output for s in self.states)

    def with_state(self, new_state: ProcessState) -> "Configuration":
        states = list(self.states)
        states[new_state.id] = new_state
        return replace(self, states=tuple(states))


@dataclass(frozen=True)
class Event:
    """A label of the step relation."""

    kind: EventKind
    process: Optional[int] = None
    message: Optional[Message] = None

    @classmethod
    def start(cls, pid: int) -> "Event":
        return cls(EventKind.START, process=pid)

    @classmethod
    def deliver(cls, message: Message) -> "Event":
        return cls(EventKind.DELIVER, process=message.dst, message=message)

    @classmethod
    def timeout(cls, pid: int) -> "Event":
        return cls(EventKind.TIMEOUT, process=pid)

    @classmethod
    def crash(cls, pid: int) -> "Event":
        return cls(EventKind.CRASH, process=pid)

    def sort_key(self) -> Tuple:
        if self.kind == EventKind.DELIVER:
            return (_EVENT_RANK[self.kind],) + self.message.sort_key()
        return (_EVENT_RANK[self.kind], self.process)

    def involves(self, pid: int) -> bool:
        if self.message is not None:
            return pid in (self.message.src, self.message.dst)
        return self.process == pid


@dataclass(frozen=True)
class HandlerContext:
    """Read-only view handed to protocol handlers."""

    topology: SystemTopology
    crashed: FrozenSet[int] = frozenset()


@dataclass(frozen=True)
class Execution:
    """An initial configuration followed by (event, configuration) steps."""

    topology: SystemTopology
    initial: Configuration
    steps: Tuple[Tuple[Event, Configuration], ...] = ()
    truncated: bool = False
    metadata: Tuple[Tuple[str, Any], ...] = field(default=(), compare=False)

    @property
    def final(self) -> Configuration:
        return self.steps[-1][1] if self.steps else self.initial

    @property
    def events(self) -> Tuple[Event, ...]:
        return tuple(event for event, _ in self.steps)

    @property
    def configurations(self) -> Tuple[Configuration, ...]:
        return (self.initial,) + tuple(config for _, config in self.steps)


def build_system(n: int, values: Sequence[int]) -> Tuple[SystemTopology, Configuration]:
    """
    Build a complete graph of n ordinary processes and its initial configuration.

    Args:
        n: Number of processes (>= 1)
        values: Initial value of each process, drawn from VALUE_ALPHABET

    Returns:
        Tuple of (topology, initial configuration)
    """
    if n < 1:
        raise ConfigurationError(f"Process count must be at least 1, got {n}")
    values = list(values)
    if len(values) != n:
        raise ConfigurationError(f"Expected {n} initial values, got {len(values)}")
    for value in values:
        if value not in VALUE_ALPHABET:
            raise ConfigurationError(
                f"Initial value {value!r} is outside the alphabet {VALUE_ALPHABET}"
            )

    channels = frozenset((a, b) for a in range(n) for b in range(n) if a != b)
    topology = SystemTopology(
        processes=tuple(range(n)),
        channels=channels,
        oracle_level=(0,) * n,
        oracle_target=(None,) * n,
    )
    states = tuple(ProcessState(id=pid, initial_value=values[pid]) for pid in range(n))
    logger.debug(f"Built complete system with {n} processes and {len(channels)} channels")
    return topology, Configuration(states=states)


def add_oracle(topology: SystemTopology, target: int) -> SystemTopology:
    """
    Add a fault-detection oracle for ``target``, connected to every existing process.

    Args:
        topology: Existing topology (left unchanged)
        target: Process the new oracle monitors

    Returns:
        New topology with one extra process at level ``level(target) + 1``
    """
    if target not in topology.processes:
        raise TopologyError(f"Unknown oracle target {target}")
    oracle = topology.size
    channels = set(topology.channels)
    for pid in topology.processes:
        channels.add((pid, oracle))
        channels.add((oracle, pid))
    return SystemTopology(
        processes=topology.processes + (oracle,),
        channels=frozenset(channels),
        oracle_level=topology.oracle_level + (topology.oracle_level[target] + 1,),
        oracle_target=topology.oracle_target + (target,),
    )


def build_hierarchy(topology: SystemTopology, known_faulty: Iterable[int]) -> SystemTopology:
    """Add one oracle per known-faulty process (G^k with k = |known_faulty|)."""
    known_faulty = sorted(set(known_faulty))
    for pid in known_faulty:
        if pid not in topology.processes:
            raise TopologyError(f"Known-faulty process {pid} is not in the topology")
    for pid in known_faulty:
        topology = add_oracle(topology, pid)
    return topology


def extend_configuration(config: Configuration, topology: SystemTopology) -> Configuration:
    """Add states for processes the topology gained since ``config`` was built."""
    states = list(config.states)
    for pid in range(len(states), topology.size):
        if not topology.is_oracle(pid):
            raise TopologyError(f"New process {pid} is not an oracle and has no initial value")
        # Oracles take no part in consensus and have nothing to announce.
        states.append(ProcessState(id=pid, initial_value=None, started=True))
    return replace(config, states=tuple(states))


def crash_processes(config: Configuration, pids: Iterable[int]) -> Configuration:
    """Mark processes crashed without taking a step (faulty from the outset)."""
    for pid in pids:
        config = config.with_state(replace(config.state(pid), crashed=True))
    return config


def _with_locals(state: ProcessState, spec, topology: SystemTopology) -> ProcessState:
    if state.protocol_locals is None:
        return replace(state, protocol_locals=spec.initial_locals(state.id, topology))
    return state


def _timeout_armed(
    state: ProcessState, spec, context: HandlerContext
) -> bool:
    if not spec.timeouts_enabled or not state.started or state.crashed or state.decided:
        return False
    state = _with_locals(state, spec, context.topology)
    return bool(spec.blocked_on(state, context) & context.crashed)


def enabled_events(
    config: Configuration,
    topology: SystemTopology,
    protocol,
    crash_budget: int = 0,
    crash_targets: Optional[Iterable[int]] = None,
) -> List[Event]:
    """
    Enumerate the events enabled in a configuration, in canonical order.

    Args:
        config: Current configuration
        topology: System topology
        protocol: Protocol the processes run
        crash_budget: Crashes the adversary may still inject
        crash_targets: Restrict which processes may be crashed (default: any)

    Returns:
        Canonically ordered list of enabled events
    """
    crashed = config.crashed_set()
    context = HandlerContext(topology, crashed)
    events = []

    for state in config.states:
        if not state.started and not state.crashed and not topology.is_oracle(state.id):
            events.append(Event.start(state.id))

    for message in config.in_flight:
        dst = config.state(message.dst)
        if dst.started and not dst.crashed:
            events.append(Event.deliver(message))

    for state in config.states:
        spec = protocol.handlers_for(state.id, topology)
        if _timeout_armed(state, spec, context):
            events.append(Event.timeout(state.id))

    if crash_budget > 0:
        allowed = None if crash_targets is None else set(crash_targets)
        for state in config.states:
            if not state.crashed and (allowed is None or state.id in allowed):
                events.append(Event.crash(state.id))

    events.sort(key=Event.sort_key)
    return events


def _is_enabled(config: Configuration, event: Event, protocol, topology: SystemTopology) -> bool:
    if event.kind == EventKind.DELIVER:
        if event.message not in config.in_flight:
            return False
        dst = config.state(event.message.dst)
        return dst.started and not dst.crashed
    if event.process is None or not 0 <= event.process < len(config.states):
        return False
    state = config.state(event.process)
    if event.kind == EventKind.CRASH:
        return not state.crashed
    if event.kind == EventKind.START:
        return not state.started and not state.crashed and not topology.is_oracle(state.id)
    context = HandlerContext(topology, config.crashed_set())
    return _timeout_armed(state, protocol.handlers_for(state.id, topology), context)


def apply_event(
    config: Configuration, event: Event, protocol, topology: SystemTopology
) -> Configuration:
    """
    Take one step: ``config |- next``.

    Only the process the event concerns changes state; sent messages join the
    in-flight multiset stamped with the sender's next sequence numbers.

    Raises:
        SchedulerContractError: if the event is not enabled in ``config``
    """
    if not _is_enabled(config, event, protocol, topology):
        raise SchedulerContractError(f"Event {event} is not enabled")

    pid = event.process
    state = config.state(pid)

    if event.kind == EventKind.CRASH:
        return config.with_state(replace(state, crashed=True))

    spec = protocol.handlers_for(pid, topology)
    state = _with_locals(state, spec, topology)
    context = HandlerContext(topology, config.crashed_set())
    in_flight = config.in_flight

    if event.kind == EventKind.START:
        state = replace(state, started=True)
        actions = spec.on_init(state, context)
    elif event.kind == EventKind.DELIVER:
        index = in_flight.index(event.message)
        in_flight = in_flight[:index] + in_flight[index + 1:]
        actions = spec.on_message(state, event.message, context)
    else:
        actions = spec.on_timeout(state, context)

    sent = []
    for offset, message in enumerate(actions.sends):
        if not topology.has_channel(pid, message.dst):
            raise SchedulerContractError(f"No channel {pid}->{message.dst}")
        sent.append(replace(message, src=pid, seq=state.sent + offset))

    output = state.output
    if actions.decide is not None:
        if state.decided and actions.decide != state.output:
            raise SchedulerContractError(
                f"Process {pid} tried to change its decision {state.output} -> {actions.decide}"
            )
        output = actions.decide

    new_locals = state.protocol_locals
    if actions.locals_update is not None:
        new_locals = actions.locals_update

    state = replace(
        state, output=output, sent=state.sent + len(sent), protocol_locals=new_locals
    )
    if sent:
        in_flight = tuple(sorted(in_flight + tuple(sent), key=Message.sort_key))
    return Configuration(
        states=config.states[:pid] + (state,) + config.states[pid + 1:],
        in_flight=in_flight,
    )


def _digest_key(message: Message) -> Message:
    # Dummies carry nothing, so which of a sender's dummies is still in flight is irrelevant.
    return replace(message, seq=0) if message.kind == MessageKind.DUMMY else message


def config_digest(config: Configuration) -> str:
    """Fixed-width (128-bit) digest of a configuration, insensitive to in-flight order."""
    in_flight = sorted((_digest_key(m) for m in config.in_flight), key=repr)
    canonical = (config.states, tuple(in_flight))
    return hashlib.blake2b(repr(canonical).encode("utf-8"), digest_size=16).hexdigest()
