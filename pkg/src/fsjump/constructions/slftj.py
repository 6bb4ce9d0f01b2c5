"""Witness-family extraction from a claimed jump reduction.

Given h mapping set indices to set indices, the run builds c.e. sets V_i
so that, when h genuinely reduces the identity jump to the jump of E,
each V_i ends up holding an element no other V_j's class touches.

W(F) is the h-image of the canonical index of the finite set F,
normalized to be monotone under inclusion by unioning the raw images of
all registered subsets.  Each strategy keeps a finite base B_i and a
marker a_i, exploits the gap between W(B_i) and W(B_i + {a_i}) to pick a
candidate element, and reacts when the candidate's class gets touched by
another strategy's set:

  touched from above (j > i)   absorb that strategy's base into B_i
  touched from below (j < i)   retire a_i into B_i and pick a fresh marker

One strategy acts per stage (the strongest one requiring attention);
acting injures everything below it.
"""

from __future__ import annotations

from typing import Callable

from ..machine import Machine, MachineIndex
from ..relations import StagedRelation, closure
from .runtime import ConstructionState, FreshSource

_INSTAGE_CAP = 64


def serialize_collapses(rel: StagedRelation, window_bound: int,
                        stage_budget: int) -> StagedRelation:
    """Re-pace a CE relation so at most one class pair merges per stage."""
    from ..relations import CollapseEvent, PartitionHistory, RelKind

    events: list[CollapseEvent] = []
    reps: dict[int, int] = {x: x for x in range(window_bound + 1)}
    pending: list[tuple[int, int]] = []
    out_stage = 1
    for s in range(stage_budget + 1):
        for x in range(window_bound + 1):
            for y in range(x + 1, window_bound + 1):
                if reps[x] != reps[y] and rel.at(x, y, s):
                    pending.append((x, y))
                    rx, ry = reps[x], reps[y]
                    lo, hi = min(rx, ry), max(rx, ry)
                    for z in reps:
                        if reps[z] == hi:
                            reps[z] = lo
        while pending:
            x, y = pending.pop(0)
            events.append(CollapseEvent(x, y, out_stage))
            out_stage += 1
    history = PartitionHistory(tuple(events))
    return history.as_relation(RelKind.CE, label=f"serialized({rel.label})")


def slftj_extract(h: Callable[[MachineIndex], MachineIndex | None],
                  rel: StagedRelation, requirement_count: int,
                  stage_budget: int, machine: Machine,
                  window_bound: int = 32,
                  name: str = "slftj") -> ConstructionState:
    config = {"requirements": requirement_count, "stage_budget": stage_budget,
              "window_bound": window_bound}
    state = ConstructionState(name, config, machine)
    fresh = FreshSource()
    fresh.note(window_bound // 2)
    window = range(window_bound + 1)

    raw_image: dict[frozenset[int], MachineIndex] = {}
    registered: list[frozenset[int]] = []

    def image_of(f_set: frozenset[int]) -> MachineIndex | None:
        if f_set not in raw_image:
            idx = h(machine.finite_set_index(f_set))
            if idx is None:
                state.settled = False
                state.notes.append(f"h-divergence on the index of {sorted(f_set)}")
                state.log.emit(state.stage, "h-divergence", argument=sorted(f_set))
                return None
            raw_image[f_set] = idx
            registered.append(f_set)
        return raw_image[f_set]

    def w_of(f_set: frozenset[int], enum_stage: int) -> frozenset[int] | None:
        """Monotone-normalized W(F) at an enumeration stage."""
        if image_of(f_set) is None:
            return None
        out: set[int] = set()
        for g_set in registered:
            if g_set <= f_set:
                out |= machine.enum_W(raw_image[g_set], enum_stage).elements
        return frozenset(x for x in out if x <= window_bound)

    strategies = [{"label": f"P[{i}]", "a": None, "B": frozenset(), "z": None,
                   "injured": False, "acted_ever": False, "stalled": False,
                   "v": state.emit_set(f"V[{i}]")}
                  for i in range(requirement_count)]

    enum_clock = 1  # shared enumeration stage, advanced by candidate searches

    def others_members(i: int, s: int) -> list[tuple[int, int]]:
        out = []
        for j, other in enumerate(strategies):
            if j != i:
                for w in sorted(other["v"].members()):
                    out.append((j, w))
        return out

    def requires_attention(i: int, s: int) -> bool:
        st = strategies[i]
        if st["stalled"]:
            return False
        if st["injured"] or not st["acted_ever"] or st["z"] is None:
            return True
        return any(rel.at(st["z"], w, s) for _, w in others_members(i, s))

    def pick_a_number(i: int, s: int) -> int | None:
        nonlocal enum_clock
        st = strategies[i]
        base, marked = st["B"], st["B"] | {st["a"]}
        for t in range(enum_clock + 1, stage_budget + 1):
            w_marked = w_of(marked, t)
            w_base = w_of(base, t)
            if w_marked is None or w_base is None:
                return None
            gap = sorted(set(w_marked) - closure(rel, w_base, s, window))
            if gap:
                enum_clock = t
                return gap[0]
        st["stalled"] = True
        state.settled = False
        state.log.emit(s, "pick-unsettled", strategy=st["label"],
                       base=sorted(base), marker=st["a"])
        return None

    def act(i: int, s: int) -> None:
        st = strategies[i]
        if st["injured"] or not st["acted_ever"]:
            if st["a"] is not None:
                st["B"] = st["B"] | {st["a"]}
            st["a"] = fresh.fresh()
            st["injured"] = False
            st["acted_ever"] = True
            state.log.emit(s, "choose-parameters", strategy=st["label"],
                           marker=st["a"], base=sorted(st["B"]))
        candidate = st["z"]
        if candidate is None:
            candidate = pick_a_number(i, s)
            if candidate is None:
                return
        for _ in range(_INSTAGE_CAP):
            hits = [(j, w) for j, w in others_members(i, s)
                    if rel.at(candidate, w, s)]
            if not hits:
                st["z"] = candidate
                if st["v"].add(candidate, s):
                    state.log.emit(s, "enumerate", strategy=st["label"],
                                   element=candidate)
                return
            below = [j for j, _ in hits if j < i]
            if below:
                st["B"] = st["B"] | {st["a"]}
                st["a"] = fresh.fresh()
                state.log.emit(s, "retire-marker", strategy=st["label"],
                               cause=f"P[{min(below)}]", marker=st["a"],
                               base=sorted(st["B"]))
            else:
                j = min(j for j, _ in hits)
                other = strategies[j]
                absorbed = other["B"] | ({other["a"]} if other["a"] is not None else set())
                st["B"] = st["B"] | absorbed
                state.log.emit(s, "absorb-base", strategy=st["label"],
                               source=other["label"], base=sorted(st["B"]))
            st["z"] = None
            candidate = pick_a_number(i, s)
            if candidate is None:
                return
        st["stalled"] = True
        state.settled = False
        state.log.emit(s, "instage-loop-capped", strategy=st["label"])

    for s in range(1, stage_budget + 1):
        state.stage = s
        actor = next((i for i in range(requirement_count)
                      if requires_attention(i, s)), None)
        if actor is None:
            if all(st["z"] is not None or st["stalled"] for st in strategies):
                state.log.emit(s, "quiescent")
                break
            continue
        act(actor, s)
        for j in range(actor + 1, requirement_count):
            if strategies[j]["acted_ever"] and not strategies[j]["injured"]:
                strategies[j]["injured"] = True
                state.injure(s, strategies[j]["label"], strategies[actor]["label"])

        # per-stage invariants
        for i, st in enumerate(strategies):
            for j in range(i + 1, requirement_count):
                other = strategies[j]
                if st["a"] is not None:
                    state.check(s, "marker absent from lower bases",
                                st["a"] not in other["B"] and st["a"] != other["a"],
                                upper=st["label"], lower=other["label"])
        for st in strategies:
            if st["a"] is None:
                continue
            w_now = w_of(st["B"] | {st["a"]}, enum_clock)
            if w_now is None:
                continue
            state.check(s, "emitted set inside its marked image",
                        st["v"].members() <= w_now, strategy=st["label"],
                        extra=sorted(st["v"].members() - w_now)[:4])

    state.params = {st["label"]: {"marker": st["a"], "base": sorted(st["B"]),
                                  "witness": st["z"], "stalled": st["stalled"]}
                    for st in strategies}
    if any(st["stalled"] for st in strategies):
        state.notes.append("some strategies never settled within the stage budget")
    state.finish()
    return state


def private_element_check(state: ConstructionState, rel: StagedRelation,
                          stage: int, window_bound: int) -> dict[str, int | None]:
    """Brute-force: an element of each V_i untouched by every other V_j's class."""
    window = range(window_bound + 1)
    sets = {name: rs.members() for name, rs in state.emitted.items()
            if name.startswith("V[")}
    out: dict[str, int | None] = {}
    for name, members in sets.items():
        private = None
        for x in sorted(members):
            cls = closure(rel, [x], stage, window)
            if all(not (cls & other) for other_name, other in sets.items()
                   if other_name != name):
                private = x
                break
        out[name] = private
    return out
