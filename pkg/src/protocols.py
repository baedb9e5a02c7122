"""
Protocols Module
Consensus protocols as pure event handlers, the dummy-padding and oracle
transformations, oracle processes and the paraconsistent prototype.
"""

import logging
from abc import ABC, abstractmethod
from dataclasses import dataclass, replace
from typing import Any, FrozenSet, Iterable, Optional, Tuple

from src.exceptions import ConfigurationError, TopologyError
from src.formulas import FormulaSet, outcome_theory
from src.model import (
    Execution,
    HandlerContext,
    Message,
    MessageKind,
    ProcessState,
    SystemTopology,
)
from src.paralogic import LogicId

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class Actions:
    """What a handler asks the simulator to do."""

    sends: Tuple[Message, ...] = ()
    decide: Optional[int] = None
    locals_update: Any = None


NO_ACTIONS = Actions()


class ProtocolSpec(ABC):
    """
    An algorithm as a bundle of pure handlers.

    Handlers never mutate their inputs; all state lives in ``ProcessState`` and
    comes back through ``Actions.locals_update``.
    """

    name = "protocol"
    timeouts_enabled = False

    def initial_locals(self, pid: int, topology: SystemTopology) -> Any:
        return None

    @abstractmethod
    def on_init(self, state: ProcessState, context: HandlerContext) -> Actions:
        ...

    @abstractmethod
    def on_message(
        self, state: ProcessState, message: Message, context: HandlerContext
    ) -> Actions:
        ...

    def on_timeout(self, state: ProcessState, context: HandlerContext) -> Actions:
        return NO_ACTIONS

    def blocked_on(self, state: ProcessState, context: HandlerContext) -> FrozenSet[int]:
        """Peers this process waits on and whose crash would let a timeout decide."""
        return frozenset()

    def handlers_for(self, pid: int, topology: SystemTopology) -> "ProtocolSpec":
        """Oracle processes always run the oracle behaviour."""
        if topology.is_oracle(pid):
            return ORACLE_BEHAVIOR
        return self

    def __repr__(self) -> str:
        return f"<{type(self).__name__} {self.name}>"


@dataclass(frozen=True)
class FloodLocals:
    received: Tuple[Tuple[int, int], ...] = ()
    excluded: Tuple[int, ...] = ()
    literal: Optional[str] = None

    def values(self) -> dict:
        return dict(self.received)


class FloodMin(ProtocolSpec):
    """
    Broadcast the initial value, decide the minimum once every awaited value is in.

    With timeouts enabled a timeout decides the minimum received so far, provided
    at least ``timeout_quorum`` values (own included) were recorded.
    """

    def __init__(self, name: str = "p0", timeouts: bool = False, timeout_quorum: int = 1):
        if timeout_quorum < 1:
            raise ConfigurationError(f"timeout_quorum must be >= 1, got {timeout_quorum}")
        self.name = name
        self.timeouts_enabled = timeouts
        self.timeout_quorum = timeout_quorum

    def initial_locals(self, pid: int, topology: SystemTopology) -> FloodLocals:
        return FloodLocals()

    # Building blocks shared with the oracle augmentation.

    def announce(
        self, state: ProcessState, context: HandlerContext
    ) -> Tuple[FloodLocals, Tuple[Message, ...]]:
        local = self.record(state.protocol_locals, state.id, state.initial_value)
        sends = tuple(
            Message(state.id, peer, MessageKind.VALUE_ANNOUNCE, state.initial_value)
            for peer in context.topology.level_zero()
            if peer != state.id
        )
        return local, sends

    @staticmethod
    def record(local: FloodLocals, sender: int, value: int) -> FloodLocals:
        received = dict(local.received)
        if sender in received:
            return local
        received[sender] = value
        return replace(local, received=tuple(sorted(received.items())))

    @staticmethod
    def with_exclusions(local: FloodLocals, excluded: Iterable[int]) -> FloodLocals:
        return replace(local, excluded=tuple(sorted(set(local.excluded) | set(excluded))))

    @staticmethod
    def missing(local: FloodLocals, topology: SystemTopology) -> FrozenSet[int]:
        awaited = set(topology.level_zero()) - set(local.excluded)
        return frozenset(awaited - set(dict(local.received)))

    def ready_value(self, local: FloodLocals, topology: SystemTopology) -> Optional[int]:
        if self.missing(local, topology):
            return None
        excluded = set(local.excluded)
        values = [v for pid, v in local.received if pid not in excluded]
        return min(values) if values else None

    def timeout_value(self, local: FloodLocals) -> Optional[int]:
        if len(local.received) < self.timeout_quorum:
            return None
        return min(v for _, v in local.received)

    def decide(
        self, local: FloodLocals, value: int, sends: Tuple[Message, ...] = ()
    ) -> Actions:
        return Actions(sends=sends, decide=value, locals_update=local)

    def try_decide(
        self,
        state: ProcessState,
        local: FloodLocals,
        context: HandlerContext,
        sends: Tuple[Message, ...] = (),
    ) -> Actions:
        if not state.decided:
            value = self.ready_value(local, context.topology)
            if value is not None:
                return self.decide(local, value, sends)
        return Actions(sends=sends, locals_update=local)

    # Handlers.

    def on_init(self, state: ProcessState, context: HandlerContext) -> Actions:
        local, sends = self.announce(state, context)
        return self.try_decide(state, local, context, sends)

    def on_message(
        self, state: ProcessState, message: Message, context: HandlerContext
    ) -> Actions:
        if message.kind != MessageKind.VALUE_ANNOUNCE:
            return NO_ACTIONS
        local = self.record(state.protocol_locals, message.src, message.body)
        return self.try_decide(state, local, context)

    def on_timeout(self, state: ProcessState, context: HandlerContext) -> Actions:
        if state.decided:
            return NO_ACTIONS
        local = state.protocol_locals
        value = self.timeout_value(local)
        if value is None:
            return NO_ACTIONS
        logger.debug(f"Process {state.id} forced to decide {value} on timeout")
        return self.decide(local, value)

    def blocked_on(self, state: ProcessState, context: HandlerContext) -> FrozenSet[int]:
        local = state.protocol_locals
        if state.decided or self.timeout_value(local) is None:
            return frozenset()
        return self.missing(local, context.topology)


class ParaconsistentConsensus(FloodMin):
    """
    Forced-termination flood-min whose decisions are annotated literals ``D<v>``.

    The outcome knowledge base pairs the literals with value-exclusivity axioms and
    never asserts the consistency of a decision literal.
    """

    def __init__(self, logic: LogicId, timeout_quorum: int = 1):
        if not logic.is_paraconsistent:
            raise ConfigurationError(
                f"Paraconsistent consensus needs an LFI-capable logic, got {logic}"
            )
        super().__init__(name=f"p3:{logic.key}", timeouts=True, timeout_quorum=timeout_quorum)
        self.logic = logic

    def decide(
        self, local: FloodLocals, value: int, sends: Tuple[Message, ...] = ()
    ) -> Actions:
        local = replace(local, literal=f"D{value}")
        return Actions(sends=sends, decide=value, locals_update=local)

    def knowledge_base(self, execution: Execution) -> FormulaSet:
        """Gamma for a run: decision literals plus exclusivity over the run's values."""
        final = execution.final
        decided = []
        for pid in execution.topology.level_zero():
            local = final.state(pid).protocol_locals
            if isinstance(local, FloodLocals) and local.literal is not None:
                decided.append(int(local.literal[1:]))
        alphabet = {
            s.initial_value for s in execution.initial.states if s.initial_value is not None
        }
        return outcome_theory(decided, alphabet | set(decided))


class OracleBehavior(ProtocolSpec):
    """Answers every query with the crash flags of its monitored chain. Never decides."""

    name = "oracle"

    def on_init(self, state: ProcessState, context: HandlerContext) -> Actions:
        return NO_ACTIONS

    def on_message(
        self, state: ProcessState, message: Message, context: HandlerContext
    ) -> Actions:
        if message.kind != MessageKind.ORACLE_QUERY:
            return NO_ACTIONS
        chain = context.topology.monitored_chain(state.id)
        body = tuple((pid, pid in context.crashed) for pid in chain)
        reply = Message(state.id, message.src, MessageKind.ORACLE_REPLY, body)
        return Actions(sends=(reply,))

    def handlers_for(self, pid: int, topology: SystemTopology) -> ProtocolSpec:
        return self


ORACLE_BEHAVIOR = OracleBehavior()


@dataclass(frozen=True)
class OracleLocals:
    base: FloodLocals
    outstanding: Tuple[int, ...] = ()
    verdicts: Tuple[Tuple[int, bool], ...] = ()

    def crashed_verdicts(self) -> FrozenSet[int]:
        return frozenset(pid for pid, crashed in self.verdicts if crashed)


class OracleAugmented(ProtocolSpec):
    """
    Flood-min that consults fault-detection oracles before deciding.

    Queries go out with the initial broadcast. Processes an oracle reports crashed
    leave the awaited set; the decision waits until every queried oracle answered or
    is itself reported crashed.
    """

    def __init__(self, base: FloodMin, oracles: Iterable[int]):
        if not isinstance(base, FloodMin):
            raise ConfigurationError(
                f"Oracle augmentation needs a flood-min protocol, got {base!r}"
            )
        self.base = base
        self.oracles = frozenset(oracles)
        self.name = f"{base.name}-oracle"
        self.timeouts_enabled = base.timeouts_enabled

    def initial_locals(self, pid: int, topology: SystemTopology) -> OracleLocals:
        return OracleLocals(base=self.base.initial_locals(pid, topology))

    def _queried(self, topology: SystemTopology) -> Tuple[int, ...]:
        return tuple(
            sorted(o for o in self.oracles if o < topology.size and topology.is_oracle(o))
        )

    def _pending(self, local: OracleLocals) -> FrozenSet[int]:
        return frozenset(local.outstanding) - local.crashed_verdicts()

    def _gate(
        self,
        state: ProcessState,
        local: OracleLocals,
        context: HandlerContext,
        sends: Tuple[Message, ...] = (),
    ) -> Actions:
        base_local = FloodMin.with_exclusions(
            local.base,
            (p for p in local.crashed_verdicts() if not context.topology.is_oracle(p)),
        )
        local = replace(local, base=base_local)
        if state.decided or self._pending(local):
            return Actions(sends=sends, locals_update=local)
        value = self.base.ready_value(base_local, context.topology)
        if value is None:
            return Actions(sends=sends, locals_update=local)
        decided = self.base.decide(base_local, value)
        return Actions(
            sends=sends,
            decide=decided.decide,
            locals_update=replace(local, base=decided.locals_update),
        )

    def on_init(self, state: ProcessState, context: HandlerContext) -> Actions:
        base_state = replace(state, protocol_locals=state.protocol_locals.base)
        base_local, sends = self.base.announce(base_state, context)
        queried = self._queried(context.topology)
        queries = tuple(Message(state.id, o, MessageKind.ORACLE_QUERY) for o in queried)
        local = replace(state.protocol_locals, base=base_local, outstanding=queried)
        return self._gate(state, local, context, sends + queries)

    def on_message(
        self, state: ProcessState, message: Message, context: HandlerContext
    ) -> Actions:
        local = state.protocol_locals
        if message.kind == MessageKind.VALUE_ANNOUNCE:
            local = replace(local, base=FloodMin.record(local.base, message.src, message.body))
        elif message.kind == MessageKind.ORACLE_REPLY and message.src in local.outstanding:
            verdicts = dict(local.verdicts)
            verdicts.update(message.body)
            local = replace(
                local,
                outstanding=tuple(o for o in local.outstanding if o != message.src),
                verdicts=tuple(sorted(verdicts.items())),
            )
        else:
            return NO_ACTIONS
        return self._gate(state, local, context)

    def on_timeout(self, state: ProcessState, context: HandlerContext) -> Actions:
        if state.decided:
            return NO_ACTIONS
        local = state.protocol_locals
        value = self.base.timeout_value(local.base)
        if value is None:
            return NO_ACTIONS
        decided = self.base.decide(local.base, value)
        return Actions(decide=value, locals_update=replace(local, base=decided.locals_update))

    def blocked_on(self, state: ProcessState, context: HandlerContext) -> FrozenSet[int]:
        local = state.protocol_locals
        if state.decided or self.base.timeout_value(local.base) is None:
            return frozenset()
        topology = context.topology
        pending = self._pending(local)
        covered = set()
        for oracle in pending:
            covered.update(topology.monitored_chain(oracle))
        excluded = [p for p in local.crashed_verdicts() if not topology.is_oracle(p)]
        waiting = FloodMin.missing(FloodMin.with_exclusions(local.base, excluded), topology)
        return frozenset((set(waiting) | pending) - covered)


@dataclass(frozen=True)
class PaddedLocals:
    inner: Any
    pending: int = 0
    deferred: Optional[int] = None


class DummyPadded(ProtocolSpec):
    """
    Send ``k`` self-addressed dummy messages at start and hold back the first
    decision until all of them are consumed. Everything else is delegated.
    """

    def __init__(self, base: ProtocolSpec, k: int):
        if k < 0:
            raise ConfigurationError(f"Padding must be non-negative, got {k}")
        self.base = base
        self.k = k
        self.name = f"{base.name}-padded:{k}"
        self.timeouts_enabled = base.timeouts_enabled

    def initial_locals(self, pid: int, topology: SystemTopology) -> PaddedLocals:
        return PaddedLocals(inner=self.base.initial_locals(pid, topology), pending=self.k)

    def handlers_for(self, pid: int, topology: SystemTopology) -> ProtocolSpec:
        inner = self.base.handlers_for(pid, topology)
        return self if inner is self.base else inner

    @staticmethod
    def _inner_state(state: ProcessState) -> ProcessState:
        local = state.protocol_locals
        output = state.output if state.decided else local.deferred
        return replace(state, protocol_locals=local.inner, output=output)

    def _wrap(self, state: ProcessState, actions: Actions, consumed: int = 0) -> Actions:
        local = state.protocol_locals
        inner = actions.locals_update if actions.locals_update is not None else local.inner
        pending = local.pending - consumed
        deferred = local.deferred
        if actions.decide is not None and not state.decided and deferred is None:
            deferred = actions.decide
        decide = None
        if pending == 0 and deferred is not None and not state.decided:
            decide = deferred
        return Actions(
            sends=actions.sends,
            decide=decide,
            locals_update=PaddedLocals(inner=inner, pending=pending, deferred=deferred),
        )

    def on_init(self, state: ProcessState, context: HandlerContext) -> Actions:
        actions = self.base.on_init(self._inner_state(state), context)
        dummies = tuple(
            Message(state.id, state.id, MessageKind.DUMMY) for _ in range(self.k)
        )
        return self._wrap(state, replace(actions, sends=actions.sends + dummies))

    def on_message(
        self, state: ProcessState, message: Message, context: HandlerContext
    ) -> Actions:
        local = state.protocol_locals
        if message.kind == MessageKind.DUMMY and message.src == state.id and local.pending > 0:
            return self._wrap(state, NO_ACTIONS, consumed=1)
        return self._wrap(state, self.base.on_message(self._inner_state(state), message, context))

    def on_timeout(self, state: ProcessState, context: HandlerContext) -> Actions:
        return self._wrap(state, self.base.on_timeout(self._inner_state(state), context))

    def blocked_on(self, state: ProcessState, context: HandlerContext) -> FrozenSet[int]:
        if state.protocol_locals.deferred is not None:
            return frozenset()
        return self.base.blocked_on(self._inner_state(state), context)


def protocol_P0_floodmin() -> FloodMin:
    """Deterministic flood-min; waits for every ordinary process, no timeouts."""
    return FloodMin(name="p0")


def protocol_P1_forced(timeout_quorum: int = 1) -> FloodMin:
    """Flood-min whose timeouts force a decision on the minimum seen so far."""
    return FloodMin(name="p1", timeouts=True, timeout_quorum=timeout_quorum)


def pad_with_dummies(base: ProtocolSpec, k: int) -> ProtocolSpec:
    return DummyPadded(base, k)


def augment_with_oracle(
    base: FloodMin, oracles: Iterable[int], topology: Optional[SystemTopology] = None
) -> OracleAugmented:
    """
    Make every process consult the given oracles before deciding.

    Args:
        base: Flood-min protocol to transform
        oracles: Oracle process ids to query
        topology: When given, every oracle id is checked against it

    Returns:
        The augmented protocol
    """
    oracles = frozenset(oracles)
    if topology is not None:
        for oracle in oracles:
            if oracle >= topology.size or not topology.is_oracle(oracle):
                raise TopologyError(f"Process {oracle} is not an oracle in this topology")
    return OracleAugmented(base, oracles)


def oracle_behavior() -> OracleBehavior:
    return ORACLE_BEHAVIOR


def protocol_P3_paraconsistent(logic: LogicId) -> ParaconsistentConsensus:
    return ParaconsistentConsensus(logic)


PROTOCOL_KEYS = ("p0", "p1", "p1-padded:k", "p0-oracle", "p1-oracle", "p3:mbc")


def protocol_from_key(
    key: str, topology: Optional[SystemTopology] = None, timeout_quorum: int = 1
) -> ProtocolSpec:
    """
    Resolve a scenario protocol key.

    Args:
        key: One of ``p0``, ``p1``, ``p0-oracle``, ``p1-oracle``, ``p3:<logic>``,
            optionally suffixed ``-padded:<k>`` (e.g. ``p1-padded:3``)
        topology: Topology whose oracles the ``-oracle`` variants consult
        timeout_quorum: Quorum for timeout-driven decisions

    Returns:
        The protocol
    """
    key = key.strip().lower()
    if "-padded:" in key:
        base_key, raw = key.rsplit("-padded:", 1)
        try:
            k = int(raw)
        except ValueError:
            raise ConfigurationError(f"Bad padding in protocol key {key!r}")
        return pad_with_dummies(protocol_from_key(base_key, topology, timeout_quorum), k)
    oracles = topology.oracles() if topology is not None else ()
    if key == "p0":
        return protocol_P0_floodmin()
    if key == "p1":
        return protocol_P1_forced(timeout_quorum)
    if key == "p0-oracle":
        return augment_with_oracle(protocol_P0_floodmin(), oracles, topology)
    if key == "p1-oracle":
        return augment_with_oracle(protocol_P1_forced(timeout_quorum), oracles, topology)
    if key.startswith("p3:"):
        try:
            logic = LogicId.parse(key.split(":", 1)[1])
        except ValueError as e:
            raise ConfigurationError(f"Bad logic in protocol key {key!r}: {e}")
        return ParaconsistentConsensus(logic, timeout_quorum)
    raise ConfigurationError(
        f"Protocol {key!r} not supported. Choose from {list(PROTOCOL_KEYS)}"
    )
