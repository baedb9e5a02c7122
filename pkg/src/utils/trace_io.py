"""
Trace Utilities
Line-delimited JSON traces with a self-describing header, and CSV sweep reports.
"""

import csv
import json
import logging
import os
from dataclasses import asdict, dataclass
from typing import Dict, Iterable, List, Optional, TextIO, Tuple

from src.exceptions import ConfigurationError, SchedulerContractError, TraceFormatError
from src.model import Configuration, Event, EventKind, Execution, apply_event, config_digest
from src.utils.scenario import Scenario

logger = logging.getLogger(__name__)

TRACE_VERSION = 1
SWEEP_COLUMNS = ("feature", "value", "profiles", "worst", "partial", "visited", "witness")


@dataclass(frozen=True)
class TraceRecord:
    step: int
    event: str
    process: Optional[int]
    src: Optional[int]
    dst: Optional[int]
    seq: Optional[int]
    kind: Optional[str]
    digest: str
    decisions: Tuple[Tuple[int, int], ...] = ()


def _records(execution: Execution) -> List[TraceRecord]:
    records = []
    previous = execution.initial
    for index, (event, config) in enumerate(execution.steps, start=1):
        message = event.message
        decisions = tuple(
            (s.id, s.output)
            for s, before in zip(config.states, previous.states)
            if s.decided and not before.decided
        )
        records.append(
            TraceRecord(
                step=index,
                event=event.kind.value,
                process=event.process,
                src=message.src if message else None,
                dst=message.dst if message else None,
                seq=message.seq if message else None,
                kind=message.kind.value if message else None,
                digest=config_digest(config),
                decisions=decisions,
            )
        )
        previous = config
    return records


def _dump(data: Dict) -> str:
    return json.dumps(data, sort_keys=True, separators=(",", ":"))


def write_trace(path: str, scenario: Scenario, execution: Execution) -> str:
    """
    Write an execution as a header line followed by one record per step.

    Args:
        path: Destination file
        scenario: Scenario the execution came from
        execution: The execution

    Returns:
        The path written
    """
    header = {
        "type": "header",
        "version": TRACE_VERSION,
        "name": scenario.name,
        "seed": scenario.seed,
        "bounds": {
            "step": scenario.step_bound,
            "depth": scenario.depth_bound,
            "state_cap": scenario.state_cap,
        },
        "scenario": scenario.to_dict(),
        "initial_digest": config_digest(execution.initial),
        "truncated": execution.truncated,
    }
    directory = os.path.dirname(path)
    if directory:
        os.makedirs(directory, exist_ok=True)
    with open(path, "w", encoding="utf-8", newline="\n") as f:
        f.write(_dump(header) + "\n")
        for record in _records(execution):
            data = asdict(record)
            data["type"] = "step"
            data["decisions"] = [list(d) for d in record.decisions]
            f.write(_dump(data) + "\n")
    logger.info(f"Wrote {len(execution.steps)} trace records to {path}")
    return path


def read_trace(path: str) -> Tuple[Dict, List[TraceRecord]]:
    """Read a trace file into its header and records."""
    try:
        with open(path, "r", encoding="utf-8") as f:
            lines = [line for line in f.read().splitlines() if line.strip()]
    except OSError as e:
        raise TraceFormatError(f"Cannot read trace {path}: {e}")
    if not lines:
        raise TraceFormatError(f"Trace {path} is empty")
    try:
        header = json.loads(lines[0])
        rows = [json.loads(line) for line in lines[1:]]
    except json.JSONDecodeError as e:
        raise TraceFormatError(f"Trace {path} is not line-delimited JSON: {e}")
    if header.get("type") != "header" or header.get("version") != TRACE_VERSION:
        raise TraceFormatError(f"Trace {path} has no version {TRACE_VERSION} header")
    records = []
    for row in rows:
        row.pop("type", None)
        row["decisions"] = tuple(tuple(d) for d in row.get("decisions", ()))
        try:
            records.append(TraceRecord(**row))
        except TypeError as e:
            raise TraceFormatError(f"Bad trace record {row}: {e}")
    return header, records


def _event_for(record: TraceRecord, config: Configuration) -> Event:
    kind = EventKind(record.event)
    if kind == EventKind.START:
        return Event.start(record.process)
    if kind == EventKind.TIMEOUT:
        return Event.timeout(record.process)
    if kind == EventKind.CRASH:
        return Event.crash(record.process)
    for message in config.in_flight:
        if (message.src, message.dst, message.seq) == (record.src, record.dst, record.seq):
            return Event.deliver(message)
    raise TraceFormatError(f"Step {record.step} delivers a message that is not in flight")


def replay_trace(path: str) -> Tuple[Scenario, Execution]:
    """
    Rebuild the execution a trace describes, checking every recorded digest.

    Raises:
        TraceFormatError: if the trace is unreadable or does not replay
    """
    try:
        return _rebuild(path)
    except TraceFormatError as e:
        logger.error(f"Error replaying trace {path}: {e}")
        raise


def _rebuild(path: str) -> Tuple[Scenario, Execution]:
    header, records = read_trace(path)
    try:
        scenario = Scenario.from_dict(header["scenario"])
        system = scenario.materialize()
    except (KeyError, ConfigurationError, ValueError) as e:
        raise TraceFormatError(f"Trace {path} has an unusable scenario: {e}")

    config = system.initial
    if config_digest(config) != header.get("initial_digest"):
        raise TraceFormatError(f"Trace {path}: initial configuration does not match")
    steps = []
    for record in records:
        event = _event_for(record, config)
        try:
            config = apply_event(config, event, system.protocol, system.topology)
        except SchedulerContractError as e:
            raise TraceFormatError(f"Step {record.step} does not replay: {e}")
        if config_digest(config) != record.digest:
            raise TraceFormatError(f"Step {record.step} replays to a different configuration")
        steps.append((event, config))
    execution = Execution(
        system.topology,
        system.initial,
        tuple(steps),
        bool(header.get("truncated")),
        (("adversary", "trace"), ("seed", header.get("seed"))),
    )
    return scenario, execution


def write_sweep_csv(
    stream: TextIO, feature: str, rows: Iterable, witness_paths: Optional[Dict[int, str]] = None
) -> None:
    """
    One CSV row per swept value.

    Columns: feature, value, profiles (``;``-separated codes such as ``TFT``), worst,
    partial, visited, witness (trace path of the worst profile's witness, if written).
    Rows that reached no terminal configuration leave profiles and worst empty.
    """
    witness_paths = witness_paths or {}
    writer = csv.writer(stream, lineterminator="\n")
    writer.writerow(SWEEP_COLUMNS)
    for row in rows:
        writer.writerow(
            (
                feature,
                row.value,
                ";".join(p.code for p in sorted(row.profiles)),
                row.worst.code if row.worst is not None else "",
                "partial" if row.partial else "",
                row.visited,
                witness_paths.get(row.value, ""),
            )
        )


def read_sweep_csv(stream: TextIO) -> List[Dict[str, str]]:
    reader = csv.DictReader(stream)
    if tuple(reader.fieldnames or ()) != SWEEP_COLUMNS:
        raise TraceFormatError(f"Unexpected sweep columns {reader.fieldnames}")
    return list(reader)
