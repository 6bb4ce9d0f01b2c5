"""Uniform family reduction for one-class relations at the double jump.

For an input index e the emitted family contains omega, the canonical
finite sets, and correction sets V driven by the moving principal
function of the complement of A: F_s(t) is the t-th element of the
complement at stage s.  When i enters W_e, a chain of sets V_{i,t}^j
starts for every position t; an active set fills [0, l] minus {F_s(t)}
while l, the agreement length between W_i and the t-th comparison set,
keeps growing; an F-change at t floods the active set to omega and
activates the successor.  In the limit the family carries omega minus
{F(t)} exactly for the positions whose comparison set matches some
member of W_e.
"""

from __future__ import annotations

from typing import Sequence

from ..machine import Machine, MachineIndex
from ..relations import StagedRelation, closure
from .runtime import ConstructionState, RecordedSet


def _principal(complement: list[int], t: int) -> int | None:
    return complement[t] if t < len(complement) else None


def ea_double_jump_reduction(a_set: MachineIndex, e: MachineIndex,
                             comparison: Sequence[MachineIndex],
                             stage_budget: int, machine: Machine,
                             horizon: int = 64, finite_count: int = 8,
                             name: str = "ea-double-jump") -> tuple[MachineIndex, ConstructionState]:
    """Returns the family index h(e) plus the inspectable run state.

    `comparison` is the desk-scale stand-in for "all c.e. sets": position
    t compares against W_{comparison[t]} and excludes F(t) when agreement
    grows without bound.
    """
    config = {"stage_budget": stage_budget, "horizon": horizon,
              "finite_count": finite_count, "positions": len(comparison)}
    state = ConstructionState(name, config, machine)

    from ..jumps import canonical_finite_set

    family = state.emit_set("family")
    omega_member = state.emit_set("member-omega")
    omega_member.flood(0)
    family.add(omega_member.register(machine), 1)

    chains: dict[tuple[int, int], dict] = {}  # (i, t) -> chain record
    prev_f: dict[int, int | None] = {}

    def window_view(idx: MachineIndex, s: int) -> set[int]:
        return {x for x in machine.enum_W(idx, s).elements if x <= horizon}

    for s in range(1, stage_budget + 1):
        state.stage = s
        if s - 1 < finite_count:  # canonical finite sets trickle in
            family.add(machine.finite_set_index(canonical_finite_set(s - 1)), s)
        a_s = window_view(a_set, s)
        complement = [x for x in range(horizon + 1) if x not in a_s]
        if s == stage_budget and len(complement) < len(comparison):
            state.notes.append("complement thinner than the position range; "
                               "co-infiniteness heuristic failed")
        for i in sorted(machine.enum_W(e, s).elements):
            for t in range(len(comparison)):
                if (i, t) not in chains:
                    rs = state.emit_set(f"V[{i},{t}]#0")
                    family.add(rs.register(machine), s)
                    chains[(i, t)] = {"i": i, "t": t, "version": 0, "set": rs}
                    state.log.emit(s, "activate", i=i, position=t, version=0)
        for t in range(len(comparison)):
            f_now = _principal(complement, t)
            if t in prev_f and prev_f[t] != f_now:
                for (i, tt), chain in chains.items():
                    if tt != t:
                        continue
                    chain["set"].flood(s)
                    chain["version"] += 1
                    rs = state.emit_set(f"V[{i},{t}]#{chain['version']}")
                    family.add(rs.register(machine), s)
                    chain["set"] = rs
                    state.log.emit(s, "f-change", position=t, old=prev_f[t],
                                   new=f_now, i=i, version=chain["version"])
            prev_f[t] = f_now
        for (i, t), chain in chains.items():
            f_now = prev_f[t]
            if f_now is None:
                continue
            wi = window_view(i, s)
            wk = window_view(comparison[t], s)
            if wi == wk:
                ell = s
            else:
                ell = 0
                while (ell in wi) == (ell in wk):
                    ell += 1
            ell = min(ell, s, horizon)
            for x in range(ell + 1):
                if x != f_now:
                    chain["set"].add(x, s)

    state.finish()
    return family.register(machine), state


def family_extension(machine: Machine, family_index: MachineIndex,
                     relation: StagedRelation, stage: int,
                     window_bound: int) -> frozenset[frozenset[int]]:
    """The family as a set of closed member extensions within the window."""
    window = range(window_bound + 1)
    out = set()
    for member in machine.enum_W(family_index, stage).elements:
        elems = machine.enum_W(member, stage).elements
        out.add(closure(relation, elems, stage, window))
    return frozenset(out)
