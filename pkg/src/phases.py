"""
Phases Module
Fault-count sweeps, phase-transition detection and the emergence check.
"""

import logging
from dataclasses import dataclass, field, replace
from enum import Enum
from typing import Callable, Dict, FrozenSet, Iterable, List, Optional

from src.exceptions import ConfigurationError, PreconditionError
from src.measurement import (
    FeatureId,
    FeatureKind,
    PropertyProfile,
    encode_outcome,
    first_inconsistent_step,
    worst_profile,
)
from src.formulas import render_set
from src.model import EventKind, Execution
from src.paralogic import CPL, LogicId, is_inconsistent, trivializes
from src.protocols import DummyPadded
from src.scheduler import explore, replay_with_padding
from src.utils.scenario import Scenario

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class SweepRow:
    value: int
    profiles: FrozenSet[PropertyProfile]
    worst: Optional[PropertyProfile]
    witnesses: Dict[PropertyProfile, Execution] = field(compare=False, default_factory=dict)
    partial: bool = False
    visited: int = 0


@dataclass(frozen=True)
class PhaseTransitionReport:
    feature: FeatureId
    transition_at: int
    before_profile: PropertyProfile
    after_profile: PropertyProfile
    witness: Execution = field(compare=False)

    def describe(self) -> str:
        return f"{self.feature}={self.transition_at}: {self.before_profile} -> {self.after_profile}"


class TransformationKind(str, Enum):
    ADD_ORACLE = "add-oracle"
    PAD = "pad"


@dataclass(frozen=True)
class Transformation:
    kind: TransformationKind
    k: int = 0

    @classmethod
    def parse(cls, text: str) -> "Transformation":
        """``add-oracle`` or ``pad:<k>``."""
        text = text.strip().lower()
        if text == TransformationKind.ADD_ORACLE.value:
            return cls(TransformationKind.ADD_ORACLE)
        if text.startswith("pad:"):
            try:
                k = int(text.split(":", 1)[1])
            except ValueError:
                k = -1
            if k >= 1:
                return cls(TransformationKind.PAD, k)
        raise ConfigurationError(
            f"Transformation {text!r} not supported. Use 'add-oracle' or 'pad:<k>'"
        )

    def __str__(self) -> str:
        return f"pad:{self.k}" if self.kind == TransformationKind.PAD else self.kind.value


@dataclass(frozen=True)
class EmergenceVerdict:
    """
    Outcome of postponing a baseline transition.

    ``recurred`` holds when the transformed system shows the identical profile change.
    """

    transition: PhaseTransitionReport
    postponement: str
    recurred: bool
    recurred_at: Optional[int] = None
    level: Optional[int] = None
    step_shift: Optional[int] = None
    transformed: Optional[PhaseTransitionReport] = None

    def render(self) -> str:
        if not self.recurred:
            return f"NOT RECURRED after {self.postponement}"
        if self.step_shift is not None:
            return f"RECURRED, step index shifted {self.step_shift:+d}"
        return f"RECURRED at level {self.level}"


def baseline_feature(scenario: Scenario) -> FeatureId:
    """Fault count at the top of the scenario's oracle hierarchy."""
    depth = scenario.oracle_depth if scenario.known_faulty else 0
    return FeatureId.at_level(depth)


def sweep(
    scenario: Scenario,
    feature: FeatureId,
    values: Iterable[int],
    witness_filter: Optional[Callable[[Execution], bool]] = None,
) -> List[SweepRow]:
    """
    Explore the scenario once per swept fault count.

    Args:
        scenario: Protocol and topology template
        feature: ``FaultCount`` (any process may crash) or ``FaultCountAtLevel(n)``
        values: Fault counts to sweep
        witness_filter: Preferred shape of the witness kept for each profile

    Returns:
        One row per value, with the reachable profile set and its worst profile. A row
        whose exploration hit the state cap, or found no terminal configuration within
        the depth bound, is marked partial and may have no profiles at all.
    """
    if not feature.sweepable:
        raise ConfigurationError(f"Feature {feature} cannot be swept")
    system = scenario.materialize()
    if feature.kind == FeatureKind.FAULT_COUNT_AT_LEVEL:
        targets = system.crash_targets(feature.level)
    else:
        crashed = system.initial.crashed_set()
        targets = frozenset(p for p in system.topology.processes if p not in crashed)

    rows = []
    for value in values:
        logger.info(f"Sweeping {scenario.name}: {feature}={value}")
        result = explore(
            system.topology,
            system.initial,
            system.protocol,
            depth_bound=scenario.depth_bound,
            crash_budget=min(value, len(targets)),
            crash_targets=targets,
            state_cap=scenario.state_cap,
            witness_filter=witness_filter,
        )
        profiles = result.profile_set()
        if not profiles:
            logger.warning(
                f"No terminal configuration for {feature}={value} "
                f"within depth {scenario.depth_bound}"
            )
        rows.append(
            SweepRow(
                value=value,
                profiles=profiles,
                worst=worst_profile(profiles) if profiles else None,
                witnesses=dict(result.profiles),
                partial=result.partial or not profiles,
                visited=result.visited,
            )
        )
    return rows


def find_transition(feature: FeatureId, rows: List[SweepRow]) -> Optional[PhaseTransitionReport]:
    """
    The first swept value whose worst profile differs from the previous one.

    Comparison stops at the first row without profiles.
    """
    for before, after in zip(rows, rows[1:]):
        if before.worst is None or after.worst is None:
            break
        if before.worst == after.worst:
            continue
        fresh = sorted(after.profiles - before.profiles) or sorted(after.profiles)
        return PhaseTransitionReport(
            feature=feature,
            transition_at=after.value,
            before_profile=before.worst,
            after_profile=after.worst,
            witness=after.witnesses[fresh[0]],
        )
    return None


def add_oracle_scenario(scenario: Scenario, target: Optional[int] = None) -> Scenario:
    """
    Cover the baseline fault with one more oracle level.

    Without oracles, ``target`` (default: the highest-indexed process not yet known
    faulty) becomes known-faulty and gets a level-1 oracle; otherwise the hierarchy of
    the known-faulty processes grows by one level.
    """
    protocol = scenario.protocol
    if "padded" in protocol or protocol.startswith("p3"):
        raise PreconditionError(f"Oracle augmentation is not defined for {protocol!r}")
    if not protocol.endswith("-oracle"):
        protocol = f"{protocol}-oracle"

    if scenario.known_faulty and scenario.oracle_depth >= 1:
        return replace(scenario, protocol=protocol, oracle_depth=scenario.oracle_depth + 1)

    known = set(scenario.known_faulty)
    if target is None:
        candidates = [p for p in range(scenario.process_count) if p not in known]
        if not candidates:
            raise PreconditionError("Every process is already known to be faulty")
        target = candidates[-1]
    return replace(
        scenario,
        protocol=protocol,
        known_faulty=tuple(sorted(known | {target})),
        oracle_depth=1,
    )


def pad_scenario(scenario: Scenario, k: int) -> Scenario:
    return replace(scenario, protocol=f"{scenario.protocol}-padded:{k}")


def check_emergence(
    scenario: Scenario,
    transformation: Transformation,
    values: Iterable[int] = (0, 1),
    target: Optional[int] = None,
) -> EmergenceVerdict:
    """
    Apply a postponing transformation and check the baseline transition comes back.

    Args:
        scenario: Baseline scenario
        transformation: ``add-oracle`` or ``pad:<k>``
        values: Fault counts swept on both sides
        target: Process the new oracle covers (add-oracle only)

    Returns:
        The verdict

    Raises:
        PreconditionError: if the baseline sweep shows no transition
    """
    values = list(values)
    feature = baseline_feature(scenario)
    preference = _starts_before_split if transformation.kind == TransformationKind.PAD else None
    baseline = find_transition(feature, sweep(scenario, feature, values, preference))
    if baseline is None:
        logger.error(f"No baseline transition for {scenario.name!r} over {feature}={values}")
        raise PreconditionError(f"Scenario {scenario.name!r} shows no transition over {feature}")
    logger.info(f"Baseline transition {baseline.describe()}")

    if transformation.kind == TransformationKind.ADD_ORACLE:
        transformed_scenario = add_oracle_scenario(scenario, target)
        new_feature = baseline_feature(transformed_scenario)
    else:
        transformed_scenario = pad_scenario(scenario, transformation.k)
        new_feature = feature

    transformed = find_transition(new_feature, sweep(transformed_scenario, new_feature, values))
    recurred = (
        transformed is not None
        and transformed.before_profile == baseline.before_profile
        and transformed.after_profile == baseline.after_profile
    )

    step_shift = None
    if transformation.kind == TransformationKind.PAD and recurred:
        step_shift = _padding_shift(transformed_scenario, baseline.witness)

    verdict = EmergenceVerdict(
        transition=baseline,
        postponement=str(transformation),
        recurred=recurred,
        recurred_at=transformed.transition_at if transformed else None,
        level=new_feature.level,
        step_shift=step_shift,
        transformed=transformed,
    )
    logger.info(f"Emergence check: {verdict.render()}")
    return verdict


def _starts_before_split(execution: Execution) -> bool:
    """Every live ordinary process takes its Start step before the first split decision."""
    step = first_inconsistent_step(execution)
    if step is None:
        return False
    started = {e.process for e in execution.events[:step] if e.kind == EventKind.START}
    crashed = execution.initial.crashed_set()
    return all(p in started for p in execution.topology.level_zero() if p not in crashed)


def _padding_shift(padded_scenario: Scenario, base_witness: Execution) -> Optional[int]:
    system = padded_scenario.materialize()
    if not isinstance(system.protocol, DummyPadded):
        return None
    base_step = first_inconsistent_step(base_witness)
    if base_step is None:
        return None
    padded = replay_with_padding(system.topology, system.initial, system.protocol, base_witness)
    padded_step = first_inconsistent_step(padded)
    return None if padded_step is None else padded_step - base_step


def outcome_status(logic: LogicId, gamma) -> str:
    """``TRIVIAL``, ``inconsistent, non-trivial`` or ``consistent``."""
    if trivializes(logic, gamma):
        return "TRIVIAL"
    if is_inconsistent(logic, gamma):
        return "inconsistent, non-trivial"
    return "consistent"


def bridge_verdict(execution: Execution, logic: LogicId) -> str:
    """
    Judge an execution's decisions under CPL and another logic side by side.

    Args:
        execution: Any execution; undecided processes contribute nothing
        logic: Logic compared with CPL

    Returns:
        A line such as ``CPL: TRIVIAL | mbc: inconsistent, non-trivial``
    """
    gamma = encode_outcome(execution)
    line = f"CPL: {outcome_status(CPL, gamma)} | {logic.key}: {outcome_status(logic, gamma)}"
    logger.info(f"Bridge verdict for {{{render_set(gamma)}}}: {line}")
    return line
