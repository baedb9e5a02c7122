"""
Scenario Utilities
Scenario files: parsing, validation and materialization into a runnable system.
"""

import io
import logging
from dataclasses import asdict, dataclass, field, fields, replace
from typing import Dict, FrozenSet, Optional, Tuple

from dotenv import dotenv_values

from src import config
from src.exceptions import ConfigurationError, FlpeError
from src.model import (
    Configuration,
    SystemTopology,
    add_oracle,
    build_hierarchy,
    build_system,
    crash_processes,
    extend_configuration,
)
from src.protocols import ProtocolSpec, protocol_from_key
from src.scheduler import Adversary, AdversaryKind

logger = logging.getLogger(__name__)

SCENARIO_VERSION = "1"


@dataclass(frozen=True)
class System:
    """A materialized scenario, ready to run or explore."""

    topology: SystemTopology
    initial: Configuration
    protocol: ProtocolSpec

    def crash_targets(self, level: Optional[int]) -> Optional[FrozenSet[int]]:
        """Processes at a hierarchy level that are not faulty from the outset."""
        if level is None:
            return None
        crashed = self.initial.crashed_set()
        return frozenset(p for p in self.topology.at_level(level) if p not in crashed)


@dataclass(frozen=True)
class Scenario:
    """
    Everything needed to reproduce a run.

    ``known_faulty`` processes are crashed from the outset. With ``oracle_depth`` d >= 1
    each of them gets a chain of oracles up to level d; the oracles below level d are
    crashed from the outset as well.
    """

    name: str
    process_count: int
    initial_values: Tuple[int, ...]
    protocol: str = "p0"
    timeout_quorum: int = 1
    known_faulty: Tuple[int, ...] = ()
    oracle_depth: int = 0
    adversary: str = AdversaryKind.SEEDED_RANDOM.value
    seed: int = 0
    victim: Optional[int] = None
    crash_budget: int = 0
    crash_plan: Tuple[Tuple[int, int], ...] = ()
    crash_level: Optional[int] = None
    step_bound: int = field(default_factory=config.step_bound)
    depth_bound: int = field(default_factory=config.depth_bound)
    state_cap: int = field(default_factory=config.state_cap)

    ALLOWED_EXTENSIONS = {"scn", "env", "txt"}

    @staticmethod
    def check_file_extension(filename: str) -> bool:
        """
        Check if a file name has a scenario extension.

        Args:
            filename: Name of the file

        Returns:
            True if extension is allowed, False otherwise
        """
        return "." in filename and filename.rsplit(".", 1)[1].lower() in Scenario.ALLOWED_EXTENSIONS

    def validate(self) -> "Scenario":
        if self.process_count < 1:
            raise ConfigurationError(f"process_count must be >= 1, got {self.process_count}")
        if len(self.initial_values) != self.process_count:
            raise ConfigurationError(
                f"Scenario {self.name!r} has {len(self.initial_values)} initial values "
                f"for {self.process_count} processes"
            )
        for pid in self.known_faulty:
            if not 0 <= pid < self.process_count:
                raise ConfigurationError(f"Known-faulty process {pid} does not exist")
        if self.oracle_depth < 0:
            raise ConfigurationError(f"oracle_depth must be >= 0, got {self.oracle_depth}")
        if self.timeout_quorum < 1 or self.timeout_quorum > self.process_count:
            raise ConfigurationError(
                f"timeout_quorum must be within 1..{self.process_count}, got {self.timeout_quorum}"
            )
        if self.adversary not in {k.value for k in AdversaryKind}:
            raise ConfigurationError(f"Unknown adversary {self.adversary!r}")
        if self.step_bound < 1:
            raise ConfigurationError(f"step_bound must be >= 1, got {self.step_bound}")
        self.materialize()
        return self

    def materialize(self) -> System:
        """
        Build topology, initial configuration and protocol.

        Returns:
            The runnable system
        """
        topology, initial = build_system(self.process_count, self.initial_values)
        faulty = sorted(set(self.known_faulty))
        crashed = list(faulty)
        if self.oracle_depth >= 1 and faulty:
            topology = build_hierarchy(topology, faulty)
            chain_tops = list(range(self.process_count, topology.size))
            for _ in range(self.oracle_depth - 1):
                crashed.extend(chain_tops)
                next_tops = []
                for oracle in chain_tops:
                    topology = add_oracle(topology, oracle)
                    next_tops.append(topology.size - 1)
                chain_tops = next_tops
            initial = extend_configuration(initial, topology)
        initial = crash_processes(initial, crashed)
        protocol = protocol_from_key(self.protocol, topology, self.timeout_quorum)
        return System(topology, initial, protocol)

    def to_adversary(self, topology: Optional[SystemTopology] = None) -> Adversary:
        targets = None
        if self.crash_level is not None and topology is not None:
            targets = frozenset(topology.at_level(self.crash_level))
        return Adversary(
            kind=AdversaryKind(self.adversary),
            seed=self.seed,
            depth_bound=self.depth_bound,
            victim=self.victim,
            crash_budget=self.crash_budget,
            crash_plan=self.crash_plan,
            crash_targets=targets,
        )

    def to_dict(self) -> Dict:
        data = asdict(self)
        data["initial_values"] = list(self.initial_values)
        data["known_faulty"] = list(self.known_faulty)
        data["crash_plan"] = [list(entry) for entry in self.crash_plan]
        return data

    @classmethod
    def from_dict(cls, data: Dict) -> "Scenario":
        known = {f.name for f in fields(cls)}
        unknown = set(data) - known
        if unknown:
            raise ConfigurationError(f"Unknown scenario fields {sorted(unknown)}")
        data = dict(data)
        data["initial_values"] = tuple(data.get("initial_values", ()))
        data["known_faulty"] = tuple(data.get("known_faulty", ()))
        data["crash_plan"] = tuple(tuple(entry) for entry in data.get("crash_plan", ()))
        return cls(**data)


_INT_KEYS = (
    "process_count",
    "timeout_quorum",
    "oracle_depth",
    "seed",
    "victim",
    "crash_budget",
    "crash_level",
    "step_bound",
    "depth_bound",
    "state_cap",
)


def _int_list(raw: str, key: str) -> Tuple[int, ...]:
    try:
        return tuple(int(part) for part in raw.split(",") if part.strip())
    except ValueError:
        raise ConfigurationError(f"{key} must be a comma-separated list of integers, got {raw!r}")


def _crash_plan(raw: str) -> Tuple[Tuple[int, int], ...]:
    plan = []
    for entry in raw.split(","):
        entry = entry.strip()
        if not entry:
            continue
        try:
            step, pid = entry.split(":")
            plan.append((int(step), int(pid)))
        except ValueError:
            raise ConfigurationError(f"crash_plan entries look like 'step:pid', got {entry!r}")
    return tuple(plan)


def parse_scenario(text: str, default_name: str = "scenario") -> Scenario:
    """
    Parse scenario text.

    The format is flat ``key=value`` lines with ``#`` comments; the first key must
    be ``version``.

    Args:
        text: Scenario file contents
        default_name: Name used when the file has no ``name`` key

    Returns:
        The validated scenario
    """
    values = dotenv_values(stream=io.StringIO(text))
    keys = list(values)
    if not keys or keys[0] != "version":
        raise ConfigurationError("Scenario must start with a 'version' line")
    if values["version"] != SCENARIO_VERSION:
        raise ConfigurationError(f"Unsupported scenario version {values['version']!r}")

    known = {f.name for f in fields(Scenario)}
    unknown = set(keys[1:]) - known
    if unknown:
        raise ConfigurationError(f"Unknown scenario keys {sorted(unknown)}")

    data = {"name": values.get("name") or default_name}
    for key in keys[1:]:
        raw = (values[key] or "").strip()
        if key == "name" or raw == "":
            continue
        if key in _INT_KEYS:
            try:
                data[key] = int(raw)
            except ValueError:
                raise ConfigurationError(f"{key} must be an integer, got {raw!r}")
        elif key in ("initial_values", "known_faulty"):
            data[key] = _int_list(raw, key)
        elif key == "crash_plan":
            data[key] = _crash_plan(raw)
        else:
            data[key] = raw

    if "initial_values" not in data:
        raise ConfigurationError("Scenario has no initial_values")
    data.setdefault("process_count", len(data["initial_values"]))
    try:
        scenario = Scenario(**data)
    except TypeError as e:
        raise ConfigurationError(f"Invalid scenario: {e}")
    try:
        return scenario.validate()
    except FlpeError:
        raise
    except ValueError as e:
        raise ConfigurationError(f"Invalid scenario {scenario.name!r}: {e}")


def load_scenario(path: str) -> Scenario:
    """Read and parse a scenario file; the file stem is the default name."""
    try:
        with open(path, "r", encoding="utf-8") as f:
            text = f.read()
    except OSError as e:
        logger.error(f"Cannot read scenario {path}: {e}")
        raise ConfigurationError(f"Cannot read scenario {path}: {e}")
    stem = path.replace("\\", "/").rsplit("/", 1)[-1].rsplit(".", 1)[0]
    return parse_scenario(text, default_name=stem)


def with_overrides(scenario: Scenario, **overrides) -> Scenario:
    """Apply command-line overrides that were actually given."""
    given = {key: value for key, value in overrides.items() if value is not None}
    return replace(scenario, **given) if given else scenario
