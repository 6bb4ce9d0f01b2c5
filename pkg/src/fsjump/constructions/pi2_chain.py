"""Strictly growing c.e. chain inside the jump of an infinite PI2 relation.

Level 0 is {0}.  Level j+1 admits x exactly when every y < x is related,
at some stage s with x <= s < budget, to a member of level j.  Each level
is a finite initial segment: once some y < x has no witness stage for x,
it has none for any larger x either, so the scan stops at the first
failure.
"""

from __future__ import annotations

from ..machine import Machine, MachineIndex
from ..relations import StagedRelation, closure
from .runtime import ConstructionState


def pi2_chain(rel: StagedRelation, chain_length: int, stage_budget: int,
              machine: Machine, window_bound: int | None = None,
              name: str = "pi2-chain") -> tuple[list[MachineIndex], ConstructionState]:
    config = {"chain_length": chain_length, "stage_budget": stage_budget,
              "window_bound": window_bound if window_bound is not None else stage_budget}
    state = ConstructionState(name, config, machine)
    bound = config["window_bound"]

    # heuristic infinitude check: count classes at the last stage
    probe = range(min(bound, 64) + 1)
    reps: list[int] = []
    for x in probe:
        if all(not rel.at(x, r, stage_budget - 1) for r in reps):
            reps.append(x)
    if len(reps) < chain_length + 1:
        state.notes.append(f"relation shows only {len(reps)} classes on the probe window; "
                           "chain may stall early")
        state.settled = False

    levels: list[list[tuple[int, int]]] = [[(0, 1)]]  # (element, certified stage)
    for j in range(1, chain_length):
        prev = [z for z, _ in levels[-1]]
        level: list[tuple[int, int]] = []
        x = 0
        while x <= bound:
            witness_stage = 0
            ok = True
            for y in range(x):
                found = None
                for s in range(max(x, 1), stage_budget):
                    if any(rel.at(y, z, s) for z in prev):
                        found = s
                        break
                if found is None:
                    ok = False
                    break
                witness_stage = max(witness_stage, found)
            if not ok:
                break
            level.append((x, max(witness_stage, x, 1)))
            x += 1
        levels.append(level)
        state.log.emit(j, "level-built", level=j,
                       elements=[z for z, _ in level],
                       certified_at=max((t for _, t in level), default=1))

    indices: list[MachineIndex] = []
    for j, level in enumerate(levels):
        rs = state.emit_set(f"chain[{j}]")
        for elem, stamp in level:
            rs.add(elem, stamp)
        indices.append(rs.register(machine))
        members = [z for z, _ in level]
        state.check(j, "finite initial segment", members == list(range(len(members))),
                    level=j, members=members)

    state.stage = stage_budget
    state.finish()
    return indices, state


def chain_closures(rel: StagedRelation, machine: Machine,
                   indices: list[MachineIndex], stage: int,
                   window_bound: int) -> list[frozenset[int]]:
    window = range(window_bound + 1)
    return [closure(rel, machine.enum_W(i, stage).elements, stage, window)
            for i in indices]
