"""Disjoint witness arrays extracted from a covering family.

Given a uniformly c.e. family (V_i) and a c.e. set A, element z lands in
X_i when V_i is the first member of the family z enters (ties go to the
lowest index) and some stage s > z confirms that every w < z already in
V_i at s is explained away by A or the other members.  The X_i are
pairwise disjoint by the first-entry rule; each is finite and nonempty
when the family genuinely witnesses elements outside A and the union.
"""

from __future__ import annotations

from ..machine import Machine, MachineIndex
from .runtime import ConstructionState


def hhsimple_witness(family: list[MachineIndex], a_set: MachineIndex,
                     stage_budget: int, machine: Machine,
                     name: str = "hhsimple") -> tuple[list[MachineIndex], ConstructionState]:
    config = {"family_size": len(family), "stage_budget": stage_budget}
    state = ConstructionState(name, config, machine)

    final = [machine.enum_W(v, stage_budget).elements for v in family]
    universe = sorted(set().union(*final)) if final else []

    def entry_stage(v: MachineIndex, z: int) -> int | None:
        lo, hi = 0, stage_budget
        if z not in machine.enum_W(v, stage_budget).elements:
            return None
        while lo < hi:
            mid = (lo + hi) // 2
            if z in machine.enum_W(v, mid).elements:
                hi = mid
            else:
                lo = mid + 1
        return lo

    assigned: dict[int, tuple[int, int]] = {}  # z -> (set index, entry stage)
    for z in universe:
        entries = [(entry_stage(v, z), i) for i, v in enumerate(family)]
        entries = [(t, i) for t, i in entries if t is not None]
        if not entries:
            continue
        t, i = min(entries)  # earliest stage, ties to the lowest index
        assigned[z] = (i, t)

    witness_sets = [state.emit_set(f"X[{i}]") for i in range(len(family))]
    for z in universe:
        if z not in assigned:
            continue
        i, t_entry = assigned[z]
        confirm = None
        for s in range(z + 1, stage_budget + 1):
            v_is = machine.enum_W(family[i], s).elements
            a_s = machine.enum_W(a_set, s).elements
            others = set()
            for j, v in enumerate(family):
                if j != i:
                    others |= machine.enum_W(v, s).elements
            if all(w in a_s or w in others for w in v_is if w < z):
                confirm = s
                break
        if confirm is not None:
            witness_sets[i].add(z, max(t_entry, confirm))
            state.log.emit(max(t_entry, confirm), "witness", set=i, element=z,
                           entered=t_entry, confirmed=confirm)

    indices = [rs.register(machine) for rs in witness_sets]
    members = [rs.members() for rs in witness_sets]
    for i in range(len(members)):
        for j in range(i + 1, len(members)):
            state.check(stage_budget, "disjoint witness sets",
                        not (members[i] & members[j]), left=i, right=j)
    state.stage = stage_budget
    state.finish()
    return indices, state
