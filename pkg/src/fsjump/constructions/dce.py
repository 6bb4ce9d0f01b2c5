"""Difference-of-c.e. relation defeating reductions into the identity jump.

Even numbers stay pairwise inequivalent forever.  For each watched
candidate e the module copies elements between the image sets of 4e and
4e+2: when a number w shows up in the image of one side, a fresh odd
mediator from the e-th odd block joins that side; when w later shows up
in the image of the mediator itself, the mediator is re-homed to the
other side.  One mediator is in flight per candidate at a time, which
keeps every pair at two mind changes or fewer (overlapping mediators
would produce odd pairs flipping three times).
"""

from __future__ import annotations

from dataclasses import dataclass, field

from ..machine import Machine, MachineIndex
from ..pairing import pair
from ..relations import RelKind, StagedRelation
from .runtime import ConstructionState


def odd_block_element(e: int, i: int) -> int:
    """The i-th element of the e-th odd block."""
    return 2 * pair(e, i) + 1


@dataclass
class _Candidate:
    e: int
    program: MachineIndex
    next_mediator: int = 0
    active: tuple[int, int, int] | None = None  # (w, side k, mediator z)
    queue: list[tuple[int, int]] = field(default_factory=list)
    seen: set[tuple[int, int]] = field(default_factory=set)
    image: dict[int, MachineIndex | None] = field(default_factory=dict)


def dce_diagonalize(candidates: list[MachineIndex], stage_budget: int,
                    machine: Machine,
                    name: str = "dce") -> tuple[StagedRelation, ConstructionState]:
    config = {"candidates": len(candidates), "stage_budget": stage_budget}
    state = ConstructionState(name, config, machine)

    # home transitions per mediator: list of (stage, even anchor or None)
    homes: dict[int, list[tuple[int, int | None]]] = {}
    cands = [_Candidate(e, prog) for e, prog in enumerate(candidates)]

    def image_of(c: _Candidate, anchor: int, fuel: int) -> MachineIndex | None:
        out = machine.step_eval(c.program, anchor, fuel)
        return out.value if out.halted else None

    for s in range(1, stage_budget + 1):
        for c in cands:
            e0, e1 = 4 * c.e, 4 * c.e + 2
            for k, anchor in ((0, e0), (1, e1)):
                if c.image.get(anchor) is None:
                    c.image[anchor] = image_of(c, anchor, s)
                    if c.image[anchor] is None:
                        continue
                idx = c.image[anchor]
                for w in sorted(machine.enum_W(idx, s).elements):
                    if (w, k) not in c.seen:
                        c.seen.add((w, k))
                        c.queue.append((w, k))
                        state.log.emit(s, "witness-appeared", candidate=c.e,
                                       side=k, w=w)
            if c.active is None and c.queue:
                w, k = c.queue.pop(0)
                z = odd_block_element(c.e, c.next_mediator)
                c.next_mediator += 1
                c.active = (w, k, z)
                anchor = e0 if k == 0 else e1
                homes.setdefault(z, []).append((s, anchor))
                state.log.emit(s, "mediator-joins", candidate=c.e, side=k,
                               mediator=z, anchor=anchor, w=w)
            elif c.active is not None:
                w, k, z = c.active
                img_z = image_of(c, z, s)
                if img_z is not None and w in machine.enum_W(img_z, s).elements:
                    old = e0 if k == 0 else e1
                    new = e1 if k == 0 else e0
                    homes[z].append((s, new))
                    state.log.emit(s, "mediator-rehomed", candidate=c.e,
                                   mediator=z, from_anchor=old, to_anchor=new, w=w)
                    c.active = None
        state.stage = s

    def home_at(z: int, s: int) -> int | None:
        cur: int | None = None
        for t, anchor in homes.get(z, ()):  # transitions sorted by stage
            if t <= s:
                cur = anchor
            else:
                break
        return cur

    def approx(x: int, y: int, s: int) -> bool:
        x_even, y_even = x % 2 == 0, y % 2 == 0
        if x_even and y_even:
            return False  # distinct evens never collapse
        if x_even:
            return home_at(y, s) == x
        if y_even:
            return home_at(x, s) == y
        hx = home_at(x, s)
        return hx is not None and hx == home_at(y, s)

    relation = StagedRelation(RelKind.DCE, approx, label="dce-diagonal")

    # mind-change audit straight off the transition record
    for z, transitions in sorted(homes.items()):
        state.check(stage_budget, "mediator moved at most once",
                    len(transitions) <= 2, mediator=z,
                    transitions=[(t, a) for t, a in transitions])
    audit = audit_mind_changes(relation, homes, stage_budget)
    for (x, y), flips in audit.items():
        state.check(stage_budget, "pair value alternations within bound",
                    flips <= 2, pair=[x, y], alternations=flips)

    state.notes.append("odd mediators are processed one at a time per candidate")
    state.finish()
    return relation, state


def audit_mind_changes(relation: StagedRelation,
                       homes: dict[int, list[tuple[int, int | None]]],
                       stage_budget: int) -> dict[tuple[int, int], int]:
    """Alternation counts for every pair that was ever related."""
    touched = sorted(homes)
    anchors = sorted({a for trs in homes.values() for _, a in trs if a is not None})
    points = touched + anchors
    stages = sorted({t for trs in homes.values() for t, _ in trs})
    stages = [0] + stages + [stage_budget]
    out: dict[tuple[int, int], int] = {}
    for i, x in enumerate(points):
        for y in points[i + 1:]:
            values = [relation.at(x, y, s) for s in stages]
            flips = sum(1 for a, b in zip(values, values[1:]) if a != b)
            if flips or values[0]:
                out[(min(x, y), max(x, y))] = flips
    return out
