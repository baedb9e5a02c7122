"""
Measurement Module
Property profiles and fault counters over configurations and executions.
"""

import logging
from dataclasses import dataclass
from enum import Enum
from typing import Iterable, Optional, Tuple

from src.formulas import FormulaSet, outcome_theory
from src.model import Configuration, Execution, SystemTopology

logger = logging.getLogger(__name__)


class FeatureKind(str, Enum):
    TERMINATION = "termination"
    CONSISTENCY = "consistency"
    NON_TRIVIALITY = "non-triviality"
    FAULT_COUNT = "fault-count"
    FAULT_COUNT_AT_LEVEL = "level"


@dataclass(frozen=True)
class FeatureId:
    kind: FeatureKind
    level: Optional[int] = None

    def __post_init__(self):
        if (self.kind == FeatureKind.FAULT_COUNT_AT_LEVEL) != (self.level is not None):
            raise ValueError("Only the per-level fault count carries a level")
        if self.level is not None and self.level < 0:
            raise ValueError(f"Hierarchy level must be >= 0, got {self.level}")

    @classmethod
    def fault_count(cls) -> "FeatureId":
        return cls(FeatureKind.FAULT_COUNT)

    @classmethod
    def at_level(cls, level: int) -> "FeatureId":
        return cls(FeatureKind.FAULT_COUNT_AT_LEVEL, level)

    @classmethod
    def parse(cls, text: str) -> "FeatureId":
        """``fault-count`` or ``level:<n>``."""
        text = text.strip().lower()
        if text in ("fault-count", "g_inf"):
            return cls.fault_count()
        if text.startswith("level:"):
            try:
                return cls.at_level(int(text.split(":", 1)[1]))
            except ValueError:
                pass
        raise ValueError(f"Feature {text!r} not supported. Use 'fault-count' or 'level:<n>'")

    @property
    def sweepable(self) -> bool:
        return self.kind in (FeatureKind.FAULT_COUNT, FeatureKind.FAULT_COUNT_AT_LEVEL)

    def __str__(self) -> str:
        if self.kind == FeatureKind.FAULT_COUNT:
            return "g_inf"
        if self.kind == FeatureKind.FAULT_COUNT_AT_LEVEL:
            return f"g_{self.level}"
        return self.kind.value


def _flag(value: bool) -> str:
    return "T" if value else "F"


@dataclass(frozen=True, order=True)
class PropertyProfile:
    """(termination, consistency, non-triviality). Orders violations first."""

    termination: bool
    consistency: bool
    non_triviality: bool

    def as_tuple(self) -> Tuple[bool, bool, bool]:
        return (self.termination, self.consistency, self.non_triviality)

    @property
    def code(self) -> str:
        return "".join(_flag(v) for v in self.as_tuple())

    @classmethod
    def from_code(cls, code: str) -> "PropertyProfile":
        if len(code) != 3 or set(code) - {"T", "F"}:
            raise ValueError(f"Bad profile code {code!r}")
        return cls(*(c == "T" for c in code))

    def __str__(self) -> str:
        return "(" + ",".join(_flag(v) for v in self.as_tuple()) + ")"


@dataclass(frozen=True)
class MeasuredProperty:
    """A measured truth value; ``advisory`` when the execution was cut off."""

    value: bool
    advisory: bool = False

    def __bool__(self) -> bool:
        return self.value


def _decisions(config: Configuration, topology: SystemTopology) -> Tuple[int, ...]:
    return tuple(
        config.state(p).output for p in topology.level_zero() if config.state(p).decided
    )


def profile_of(config: Configuration, topology: SystemTopology) -> PropertyProfile:
    """
    Profile of a single configuration.

    Termination looks at correct processes only; consistency and non-triviality look at
    every decision made, including those of processes that crashed afterwards.
    """
    level_zero = topology.level_zero()
    termination = all(
        config.state(p).decided for p in level_zero if not config.state(p).crashed
    )
    decided = _decisions(config, topology)
    consistency = len(set(decided)) <= 1
    initial = {config.state(p).initial_value for p in level_zero}
    non_triviality = all(v in initial for v in decided)
    return PropertyProfile(termination, consistency, non_triviality)


def measure_termination(execution: Execution) -> MeasuredProperty:
    """T iff every non-crashed ordinary process has decided at the end."""
    value = profile_of(execution.final, execution.topology).termination
    if execution.truncated:
        logger.warning("Termination measured on a truncated execution; result is advisory")
    return MeasuredProperty(value, advisory=execution.truncated)


def measure_consistency(execution: Execution) -> bool:
    return profile_of(execution.final, execution.topology).consistency


def measure_nontriviality(execution: Execution) -> bool:
    return profile_of(execution.final, execution.topology).non_triviality


def execution_profile(execution: Execution) -> PropertyProfile:
    return profile_of(execution.final, execution.topology)


def count_faulty(execution: Execution, level: int) -> int:
    """g_level: crashed processes at one hierarchy level (level 0 = non-oracles)."""
    topology = execution.topology
    return sum(
        1 for s in execution.final.states if s.crashed and topology.oracle_level[s.id] == level
    )


def count_faulty_total(execution: Execution) -> int:
    """g_inf: crashed processes at any level."""
    return len(execution.final.crashed_set())


def fault_counters(execution: Execution) -> Tuple[int, ...]:
    """(g_0, ..., g_N) for every level N present in the topology."""
    return tuple(
        count_faulty(execution, level) for level in range(execution.topology.max_level() + 1)
    )


def maximal_level_condition(
    execution: Execution, topology: Optional[SystemTopology] = None
) -> bool:
    """
    With N the highest hierarchy level present: g_N = 1 and g_k = 0 for every k > N.

    Levels above N hold no processes, so the second half holds by construction.
    """
    topology = topology or execution.topology
    top = topology.max_level()
    return count_faulty(execution, top) == 1


def first_inconsistent_step(execution: Execution) -> Optional[int]:
    """Index of the first configuration with two different decisions, if any."""
    for index, config in enumerate(execution.configurations):
        if not profile_of(config, execution.topology).consistency:
            return index
    return None


def worst_profile(profiles: Iterable[PropertyProfile]) -> PropertyProfile:
    """Componentwise conjunction: a property is F if any profile violates it."""
    profiles = list(profiles)
    if not profiles:
        raise ValueError("worst_profile needs at least one profile")
    return PropertyProfile(
        all(p.termination for p in profiles),
        all(p.consistency for p in profiles),
        all(p.non_triviality for p in profiles),
    )


def encode_outcome(
    execution: Execution, value_alphabet: Optional[Iterable[int]] = None
) -> FormulaSet:
    """
    Outcome knowledge base of a run: one literal per decided value plus exclusivity.

    Args:
        execution: A finished (or cut off) execution
        value_alphabet: Values the exclusivity axioms range over; by default the
            initial values of the run

    Returns:
        The formula set
    """
    decided = set(_decisions(execution.final, execution.topology))
    if value_alphabet is None:
        value_alphabet = {
            execution.initial.state(p).initial_value for p in execution.topology.level_zero()
        }
    return outcome_theory(decided, value_alphabet)
