"""Structured run records and self-stabilization analytics.

One run produces an ordered stream of OperatorEvents (one per intercepted
operation) and SnapshotEvents (one per firing node). RunRecord bundles both
with the scenario digest and seed; the JSONL codec round-trips records
exactly, one self-describing object per line.
"""

from __future__ import annotations

import json
import re
from dataclasses import dataclass, field


class TraceFormatError(ValueError):
    """Malformed snapshot line or trace file."""


_LINE_RE = re.compile(r"^[01](,[01])*$")

# JSON key order follows the field tables; optional keys are omitted, not null.
_EVENT_KEYS = (
    "step", "op", "lhs_clean", "rhs_clean", "lhs_poisoned", "rhs_poisoned",
    "deviated", "clean_result", "emitted_result", "suppressed",
    "origin_id", "lifetime_after",
)
_OPTIONAL_EVENT_KEYS = ("rhs_clean", "rhs_poisoned", "origin_id", "lifetime_after")


@dataclass(slots=True)
class OperatorEvent:
    """One intercepted operator application.

    lhs_poisoned/rhs_poisoned record the operands' poison state on entry
    (whether this operation "used" a poisoned value); deviated records
    whether the emitted result differs from the clean one.
    """

    step: int
    op: str
    lhs_clean: int
    lhs_poisoned: bool
    deviated: bool
    clean_result: int | bool
    emitted_result: int | bool
    suppressed: bool
    rhs_clean: int | None = None
    rhs_poisoned: bool | None = None
    origin_id: int | None = None
    lifetime_after: int | None = None


@dataclass(slots=True)
class SnapshotEvent:
    """One privilege-vector snapshot, emitted just before a node fires."""

    round: int
    firing_node: int
    line: str


@dataclass(slots=True)
class RunRecord:
    """A complete, replayable account of one simulation run."""

    scenario_digest: str
    seed: int
    events: list[OperatorEvent] = field(default_factory=list)
    snapshots: list[SnapshotEvent] = field(default_factory=list)
    final_statuses: list[int] = field(default_factory=list)


def token_count(line: str) -> int:
    """Number of privileged nodes in a snapshot line."""
    if not _LINE_RE.match(line):
        raise TraceFormatError(f"malformed snapshot line: {line!r}")
    return line.count("1")


def is_legitimate(line: str) -> bool:
    """True when the snapshot shows exactly one token."""
    return token_count(line) == 1


def convergence_point(record: RunRecord) -> int | None:
    """Smallest snapshot index from which every later snapshot is legitimate.

    None when the record has no snapshots or its tail is illegitimate.
    """
    snaps = record.snapshots
    if not snaps:
        return None
    i = len(snaps)
    while i > 0 and is_legitimate(snaps[i - 1].line):
        i -= 1
    return i if i < len(snaps) else None


@dataclass(slots=True, frozen=True)
class DeviationStats:
    uses: int
    deviations: int
    rate: float


def deviation_stats(record: RunRecord) -> DeviationStats:
    """Counts over unsuppressed events that used a poisoned operand."""
    uses = 0
    deviations = 0
    for event in record.events:
        if event.suppressed:
            continue
        if event.lhs_poisoned or event.rhs_poisoned:
            uses += 1
            if event.deviated:
                deviations += 1
    return DeviationStats(uses, deviations, deviations / uses if uses else 0.0)


def _event_to_obj(event: OperatorEvent) -> dict:
    obj = {}
    for key in _EVENT_KEYS:
        value = getattr(event, key)
        if value is None and key in _OPTIONAL_EVENT_KEYS:
            continue
        obj[key] = value
    return obj


def dumps_record(record: RunRecord) -> str:
    """Serialize to newline-delimited JSON: header, events, snapshots."""
    lines = [
        json.dumps(
            {
                "type": "run",
                "scenario_digest": record.scenario_digest,
                "seed": record.seed,
                "final_statuses": record.final_statuses,
            },
            separators=(",", ":"),
        )
    ]
    for event in record.events:
        obj = {"type": "op"}
        obj.update(_event_to_obj(event))
        lines.append(json.dumps(obj, separators=(",", ":")))
    for snap in record.snapshots:
        obj = {
            "type": "snapshot",
            "round": snap.round,
            "firing_node": snap.firing_node,
            "line": snap.line,
        }
        lines.append(json.dumps(obj, separators=(",", ":")))
    return "\n".join(lines) + "\n"


def loads_record(text: str) -> RunRecord:
    """Parse a JSONL trace produced by dumps_record."""
    record = None
    events: list[OperatorEvent] = []
    snapshots: list[SnapshotEvent] = []
    for lineno, raw in enumerate(text.splitlines(), start=1):
        if not raw.strip():
            continue
        try:
            obj = json.loads(raw)
        except json.JSONDecodeError as exc:
            raise TraceFormatError(f"line {lineno}: invalid JSON: {exc}") from exc
        kind = obj.pop("type", None)
        if kind == "run":
            record = RunRecord(
                scenario_digest=obj["scenario_digest"],
                seed=obj["seed"],
                final_statuses=list(obj["final_statuses"]),
            )
        elif kind == "op":
            events.append(OperatorEvent(**obj))
        elif kind == "snapshot":
            snapshots.append(SnapshotEvent(**obj))
        else:
            raise TraceFormatError(f"line {lineno}: unknown record type {kind!r}")
    if record is None:
        raise TraceFormatError("trace has no run header")
    record.events = events
    record.snapshots = snapshots
    return record


def write_record(record: RunRecord, path) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(dumps_record(record))


def read_record(path) -> RunRecord:
    with open(path, "r", encoding="utf-8") as fh:
        return loads_record(fh.read())
