"""Staged equivalence relations, partitions, and finite-universe oracles.

A StagedRelation is an intensional object: a total predicate
approx(x, y, stage) together with a limit-semantics kind saying how the
stage sequence converges.

  CE      once true, stays true; the limit is the union of the stages
  PI2     true in the limit iff true at infinitely many stages
  SIGMA2  true in the limit iff true at all sufficiently large stages
  DCE     each pair's value changes at most twice, starting from false

Queries always carry a stage or a budget; nothing here pretends to decide
a limit.  `limit_guess` evaluates the kind's finite-window reading and
reports whether the value was settled (constant over the last half of the
window).
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field, replace
from enum import Enum
from typing import Callable, Iterable, Sequence

from .machine import Machine, MachineIndex


class RelKind(Enum):
    CE = "CE"
    PI2 = "PI2"
    SIGMA2 = "SIGMA2"
    DCE = "DCE"


# Weakest-wins order used when combining relations.
_KIND_RANK = {RelKind.CE: 0, RelKind.DCE: 1, RelKind.SIGMA2: 2, RelKind.PI2: 3}


def join_kinds(*kinds: RelKind) -> RelKind:
    return max(kinds, key=lambda k: _KIND_RANK[k])


@dataclass(frozen=True)
class StagedRelation:
    kind: RelKind
    approx: Callable[[int, int, int], bool]
    support_bound: int | None = None
    label: str = ""
    note: str | None = None

    def at(self, x: int, y: int, stage: int) -> bool:
        """Stage-s value; reflexivity and symmetry are normalized here."""
        if x == y:
            return True
        if x > y:
            x, y = y, x
        return bool(self.approx(x, y, stage))

    def with_note(self, note: str) -> "StagedRelation":
        return replace(self, note=note)


@dataclass(frozen=True)
class LimitGuess:
    value: bool
    settled: bool


# Full scan up to here; above it the settling window is sampled.
_SCAN_LIMIT = 512


def _window_stages(budget: int) -> list[int]:
    half = budget // 2
    if budget - half <= _SCAN_LIMIT:
        return list(range(half, budget))
    stride = max(1, (budget - half) // 64)
    stages = list(range(half, budget, stride))
    if stages[-1] != budget - 1:
        stages.append(budget - 1)
    return stages


def limit_guess(rel: StagedRelation, x: int, y: int, budget: int) -> LimitGuess:
    """Finite-window limit reading per the relation's kind.

    CE/DCE/SIGMA2 read the value at the final stage (for SIGMA2 any
    all-true tail of the window includes it); PI2 reads true iff the pair
    was related somewhere in the last half.  settled means the value was
    constant over the sampled last half.
    """
    if budget <= 0:
        raise ValueError("budget must be positive")
    if x == y:
        return LimitGuess(True, True)
    stages = _window_stages(budget)
    values = [rel.at(x, y, s) for s in stages]
    settled = len(set(values)) == 1
    if rel.kind is RelKind.PI2:
        return LimitGuess(any(values), settled)
    return LimitGuess(values[-1], settled)


# --- basic relations and combinators -------------------------------------


def id_relation() -> StagedRelation:
    return StagedRelation(RelKind.CE, lambda x, y, s: x == y, label="Id")


def e_a(machine: Machine, a: MachineIndex) -> StagedRelation:
    """x ~ y iff x = y or both are in the c.e. set with index a."""

    def approx(x: int, y: int, s: int) -> bool:
        snap = machine.enum_W(a, s).elements
        return x in snap and y in snap

    return StagedRelation(RelKind.CE, approx, label=f"E_W{a}")


def from_classes(classes: Iterable[Iterable[int]], label: str = "partition") -> StagedRelation:
    lookup: dict[int, int] = {}
    for i, cls in enumerate(classes):
        for x in cls:
            lookup[x] = i
    bound = max(lookup) if lookup else 0

    def approx(x: int, y: int, s: int) -> bool:
        cx, cy = lookup.get(x), lookup.get(y)
        return cx is not None and cx == cy

    return StagedRelation(RelKind.CE, approx, support_bound=bound, label=label)


def uniform_join(e: StagedRelation, r: StagedRelation) -> StagedRelation:
    def approx(x: int, y: int, s: int) -> bool:
        if x % 2 != y % 2:
            return False
        if x % 2 == 0:
            return e.at(x // 2, y // 2, s)
        return r.at(x // 2, y // 2, s)

    return StagedRelation(join_kinds(e.kind, r.kind), approx,
                          label=f"({e.label})+({r.label})")


def cross(e: StagedRelation, r: StagedRelation) -> StagedRelation:
    from .pairing import unpair

    def approx(x: int, y: int, s: int) -> bool:
        x0, x1 = unpair(x)
        y0, y1 = unpair(y)
        return e.at(x0, y0, s) and r.at(x1, y1, s)

    return StagedRelation(join_kinds(e.kind, r.kind), approx,
                          label=f"({e.label})x({r.label})")


def omega_join(family: Callable[[int], StagedRelation], kind: RelKind | None = None) -> StagedRelation:
    """<x, y> ~ <v, w> iff x = v and y ~ w in the x-th relation."""
    from .pairing import unpair

    def approx(a: int, b: int, s: int) -> bool:
        x, y = unpair(a)
        v, w = unpair(b)
        return x == v and family(x).at(y, w, s)

    return StagedRelation(kind or RelKind.PI2, approx, label="omega-join")


def closure(rel: StagedRelation, base: Iterable[int], stage: int,
            window: Sequence[int] | None = None) -> frozenset[int]:
    """[base] under rel at the given stage, intersected with the window."""
    if window is None:
        if rel.support_bound is None:
            raise ValueError("unbounded closure query needs an explicit window")
        window = range(rel.support_bound + 1)
    base = list(base)
    return frozenset(y for y in window if any(rel.at(y, x, stage) for x in base))


def quotient_size_at_least(rel: StagedRelation, machine: Machine, w: MachineIndex,
                           k: int, stage: int) -> tuple[bool, tuple[int, ...]]:
    """Does W_w at this stage contain k pairwise-unrelated elements?

    Returns the witness tuple so a caller can re-check after collapses;
    for CE relations a True answer can only be invalidated by a merge of
    the witnesses' classes.
    """
    witnesses: list[int] = []
    for x in sorted(machine.enum_W(w, stage).elements):
        if all(not rel.at(x, y, stage) for y in witnesses):
            witnesses.append(x)
            if len(witnesses) == k:
                return True, tuple(witnesses)
    return False, tuple(witnesses)


# --- partitions -----------------------------------------------------------


@dataclass(frozen=True)
class CollapseEvent:
    x: int
    y: int
    stage: int


class PartitionBuilder:
    """Union-find over an initial segment of omega with a replayable log.

    Roots are canonical (the least element of the class), so replaying the
    log reconstructs an identical forest.  Classes only merge.
    """

    def __init__(self) -> None:
        self.parent: dict[int, int] = {}
        self.log: list[CollapseEvent] = []

    def find(self, x: int) -> int:
        if x not in self.parent:
            self.parent[x] = x
            return x
        root = x
        while self.parent[root] != root:
            root = self.parent[root]
        while self.parent[x] != root:
            self.parent[x], x = root, self.parent[x]
        return root

    def same(self, x: int, y: int) -> bool:
        return x == y or self.find(x) == self.find(y)

    def collapse(self, x: int, y: int, stage: int) -> bool:
        """Merge the classes of x and y; returns False if already merged."""
        rx, ry = self.find(x), self.find(y)
        if rx == ry:
            return False
        if rx > ry:
            rx, ry = ry, rx
        self.parent[ry] = rx
        self.log.append(CollapseEvent(x, y, stage))
        return True

    def class_of(self, x: int, window: Iterable[int]) -> frozenset[int]:
        root = self.find(x)
        return frozenset(y for y in window if self.find(y) == root)

    def classes(self, window: Iterable[int]) -> list[frozenset[int]]:
        by_root: dict[int, set[int]] = {}
        for x in window:
            by_root.setdefault(self.find(x), set()).add(x)
        return [frozenset(v) for _, v in sorted(by_root.items())]

    def serialize(self) -> str:
        return "\n".join(f"collapse {ev.x} {ev.y} @{ev.stage}" for ev in self.log)

    @classmethod
    def replay(cls, events: Iterable[CollapseEvent]) -> "PartitionBuilder":
        builder = cls()
        for ev in events:
            builder.collapse(ev.x, ev.y, ev.stage)
        return builder

    @classmethod
    def parse(cls, text: str) -> "PartitionBuilder":
        events = []
        for line in text.splitlines():
            line = line.strip()
            if not line or line.startswith("#"):
                continue
            m = re.fullmatch(r"collapse (\d+) (\d+) @(\d+)", line)
            if m is None:
                raise ValueError(f"bad collapse line: {line!r}")
            events.append(CollapseEvent(int(m[1]), int(m[2]), int(m[3])))
        return cls.replay(events)


class PartitionHistory:
    """Stage-indexed view of a collapse log.

    Queries at non-decreasing stages advance a cursor; going backwards
    rebuilds from scratch (rare in practice).
    """

    def __init__(self, events: Sequence[CollapseEvent]):
        self._events = sorted(events, key=lambda ev: ev.stage)
        self._cursor_builder = PartitionBuilder()
        self._cursor_pos = 0
        self._cursor_stage = -1

    def _advance(self, stage: int) -> PartitionBuilder:
        if stage < self._cursor_stage:
            self._cursor_builder = PartitionBuilder()
            self._cursor_pos = 0
        while (self._cursor_pos < len(self._events)
               and self._events[self._cursor_pos].stage <= stage):
            ev = self._events[self._cursor_pos]
            self._cursor_builder.collapse(ev.x, ev.y, ev.stage)
            self._cursor_pos += 1
        self._cursor_stage = stage
        return self._cursor_builder

    def same(self, x: int, y: int, stage: int) -> bool:
        return self._advance(stage).same(x, y)

    def as_relation(self, kind: RelKind = RelKind.CE, label: str = "built") -> StagedRelation:
        return StagedRelation(kind, lambda x, y, s: self.same(x, y, s), label=label)


# --- finite universes -----------------------------------------------------


@dataclass
class FiniteUniverse:
    """A settled relation on [0, bound] with named fully-known c.e. sets."""

    bound: int
    relation: StagedRelation
    sets: dict[str, frozenset[int]] = field(default_factory=dict)
    name: str = "universe"

    def window(self) -> range:
        return range(self.bound + 1)

    def closure_of(self, elems: Iterable[int], stage: int = 0) -> frozenset[int]:
        return closure(self.relation, elems, stage, self.window())

    def closure_of_name(self, name: str, stage: int = 0) -> frozenset[int]:
        if name not in self.sets:
            raise KeyError(f"unknown set {name!r} in universe {self.name}")
        return self.closure_of(self.sets[name], stage)

    def classes(self, stage: int = 0) -> list[frozenset[int]]:
        seen: set[int] = set()
        out = []
        for x in self.window():
            if x in seen:
                continue
            cls = self.closure_of([x], stage)
            seen |= cls
            out.append(cls)
        return out


def parse_universe(text: str, name: str = "universe") -> FiniteUniverse:
    """Declarative format:

        bound 10
        relation id                      # or: relation classes 0 2 4 | 1 3
        set A 0 2 4

    Elements not mentioned in a `classes` declaration stay singletons.
    """
    bound: int | None = None
    relation: StagedRelation | None = None
    sets: dict[str, frozenset[int]] = {}
    for raw in text.splitlines():
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        head, *rest = line.split()
        if head == "bound":
            bound = int(rest[0])
        elif head == "relation":
            if rest[0] == "id":
                relation = id_relation()
            elif rest[0] == "classes":
                groups = " ".join(rest[1:]).split("|")
                classes = [[int(t) for t in g.split()] for g in groups if g.strip()]
                relation = from_classes(classes)
            else:
                raise ValueError(f"unknown relation form {rest[0]!r}")
        elif head == "set":
            sets[rest[0]] = frozenset(int(t) for t in rest[1:])
        else:
            raise ValueError(f"unknown declaration {head!r}")
    if bound is None or relation is None:
        raise ValueError("universe file needs both a bound and a relation")
    for label, elems in sets.items():
        stray = [x for x in elems if x > bound]
        if stray:
            raise ValueError(f"set {label!r} exceeds the bound: {stray}")
    relation = replace(relation, support_bound=bound)
    return FiniteUniverse(bound, relation, sets, name=name)


def dump_universe(u: FiniteUniverse) -> str:
    lines = [f"bound {u.bound}"]
    nontrivial = [sorted(c) for c in u.classes() if len(c) > 1]
    if nontrivial:
        lines.append("relation classes " + " | ".join(" ".join(map(str, c)) for c in nontrivial))
    else:
        lines.append("relation id")
    for label in sorted(u.sets):
        lines.append(f"set {label} " + " ".join(map(str, sorted(u.sets[label]))))
    return "\n".join(lines) + "\n"
