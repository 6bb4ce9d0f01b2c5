"""Shared machinery for the stage constructions.

Every construction is a deterministic function of its config: it drives a
stage loop, appends one JSON-serializable event per action to its log,
emits c.e. sets as machine builtins stamped with emission stages, checks
its per-stage invariants as it goes, and hands back an inspectable state.
Replaying the same config yields a byte-identical log.
"""

from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass, field
from typing import Iterable

from ..machine import Machine, MachineIndex
from ..relations import PartitionBuilder


class EventLog:
    def __init__(self) -> None:
        self.records: list[dict] = []

    def emit(self, stage: int, event: str, **data) -> None:
        rec = {"stage": stage, "event": event}
        rec.update(data)
        self.records.append(rec)

    def lines(self) -> list[str]:
        return [json.dumps(rec, sort_keys=True, separators=(",", ":"))
                for rec in self.records]


class RecordedSet:
    """Monotone stage-stamped set, registrable as a machine builtin.

    `flood(stage)` turns the set into omega: from that stage on it grows
    by one fresh natural per stage, swallowing everything in the limit.
    Appends must not be stage-dated earlier than what was already written.
    """

    def __init__(self, name: str):
        self.name = name
        self.events: list[tuple[int, int]] = []  # (elem, stage)
        self._members: set[int] = set()
        self._last_stage = 0
        self.flood_from: int | None = None
        self._index: MachineIndex | None = None
        self._machine: Machine | None = None

    def add(self, elem: int, stage: int) -> bool:
        if stage < self._last_stage:
            raise ValueError(f"{self.name}: stage-dated append went backwards")
        self._last_stage = stage
        if elem in self._members:
            return False
        self._members.add(elem)
        self.events.append((elem, stage))
        return True

    def flood(self, stage: int) -> None:
        if self.flood_from is None:
            self.flood_from = stage
            self._last_stage = max(self._last_stage, stage)

    def members(self) -> frozenset[int]:
        return frozenset(self._members)

    @property
    def flooded(self) -> bool:
        return self.flood_from is not None

    def snapshot(self, s: int) -> frozenset[int]:
        out = {e for e, t in self.events if t < s}
        if self.flood_from is not None and s > self.flood_from:
            out.update(range(s - self.flood_from))
        return frozenset(out)

    def register(self, machine: Machine) -> MachineIndex:
        if self._index is None:
            self._index = machine.register_builtin(self.snapshot, name=self.name,
                                                   volatile=True)
            self._machine = machine
        return self._index

    def freeze(self) -> MachineIndex:
        assert self._index is not None and self._machine is not None
        self._machine.freeze_index(self._index)
        return self._index


class FreshSource:
    """Least natural never mentioned by any strategy (global counter)."""

    def __init__(self) -> None:
        self._next = 0

    def note(self, *numbers: int) -> None:
        for n in numbers:
            if n >= self._next:
                self._next = n + 1

    def fresh(self) -> int:
        out = self._next
        self._next += 1
        return out


@dataclass
class ConstructionState:
    """Inspectable snapshot of a run: log, emitted sets, invariant audit."""

    name: str
    config: dict
    machine: Machine
    log: EventLog = field(default_factory=EventLog)
    stage: int = 0
    partition: PartitionBuilder = field(default_factory=PartitionBuilder)
    emitted: dict[str, RecordedSet] = field(default_factory=dict)
    params: dict = field(default_factory=dict)
    injuries: list[dict] = field(default_factory=list)
    invariant_failures: list[dict] = field(default_factory=list)
    settled: bool = True
    notes: list[str] = field(default_factory=list)

    def emit_set(self, name: str) -> RecordedSet:
        rs = RecordedSet(name)
        rs.register(self.machine)
        self.emitted[name] = rs
        return rs

    def injure(self, stage: int, victim: str, cause: str) -> None:
        rec = {"stage": stage, "victim": victim, "cause": cause}
        self.injuries.append(rec)
        self.log.emit(stage, "injury", victim=victim, cause=cause)

    def check(self, stage: int, invariant: str, ok: bool, **data) -> bool:
        if not ok:
            rec = {"stage": stage, "invariant": invariant}
            rec.update(data)
            self.invariant_failures.append(rec)
            self.log.emit(stage, "invariant-violation", invariant=invariant, **data)
        return ok

    def finish(self) -> None:
        for rs in self.emitted.values():
            rs.freeze()
        self.log.emit(self.stage, "summary",
                      settled=self.settled,
                      invariant_violations=len(self.invariant_failures),
                      injuries=len(self.injuries),
                      emitted=sorted(self.emitted),
                      notes=self.notes)

    def jsonl(self) -> str:
        header = {"stage": -1, "event": "header", "run": self.name,
                  "config": {k: self.config[k] for k in sorted(self.config)},
                  "config_hash": config_hash(self.config)}
        lines = [json.dumps(header, sort_keys=True, separators=(",", ":"))]
        lines.extend(self.log.lines())
        return "\n".join(lines) + "\n"

    @property
    def ok(self) -> bool:
        return not self.invariant_failures


def config_hash(config: dict) -> str:
    canon = json.dumps(config, sort_keys=True, separators=(",", ":"), default=str)
    return hashlib.sha256(canon.encode()).hexdigest()[:16]


def parse_config(text: str) -> dict:
    """Flat key=value lines; ints where they parse, # comments allowed."""
    out: dict = {}
    for raw in text.splitlines():
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ValueError(f"config line without '=': {line!r}")
        key, value = (part.strip() for part in line.split("=", 1))
        try:
            out[key] = int(value)
        except ValueError:
            out[key] = value
    return out


class SimulatedHaltOracle:
    """Fuel-capped stand-in for the halting oracle.

    Every question is answered from the fuel-capped view of the queried
    set and logged with that cap, so a capped "no" stays distinguishable
    from a real one.  Same budget, same answers.
    """

    def __init__(self, machine: Machine, fuel_cap: int, log: EventLog | None = None):
        self.machine = machine
        self.fuel_cap = fuel_cap
        self.log = log
        self.queries: list[dict] = []
        self._views: dict[MachineIndex, frozenset[int]] = {}

    def _record(self, kind: str, **data) -> None:
        rec = {"kind": kind, "cap": self.fuel_cap}
        rec.update(data)
        self.queries.append(rec)
        if self.log is not None:
            self.log.emit(data.get("stage", -1), "oracle", **rec)

    def view(self, e: MachineIndex) -> frozenset[int]:
        """The fuel-capped extension of W_e, memoized at first query."""
        got = self._views.get(e)
        if got is None:
            got = self.machine.enum_W(e, self.fuel_cap).elements
            self._views[e] = got
            self._record("view", index=e, size=len(got))
        return got

    def member(self, e: MachineIndex, x: int) -> bool:
        answer = x in self.view(e)
        self._record("member", index=e, x=x, answer=answer)
        return answer

    def exists_geq(self, e: MachineIndex, bound: int) -> bool:
        answer = any(y >= bound for y in self.view(e))
        self._record("exists-geq", index=e, bound=bound, answer=answer)
        return answer

    def intersects(self, e: MachineIndex, elems: Iterable[int]) -> bool:
        elems = list(elems)
        answer = bool(self.view(e).intersection(elems))
        self._record("intersects", index=e, probe=sorted(elems)[:8], answer=answer)
        return answer
