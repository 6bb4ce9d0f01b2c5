"""Finite-injury construction of a dark minimal ceer, optionally low.

Requirement types, interleaved in priority order:

  I_m        restrains a fresh m-tuple, keeping at least m classes
  R_{e,n}    waits for the watched set W_e to show an element whose class
             avoids every higher-priority restraint, then collapses that
             class with the class of n
  L_e        (optional) when the supplied convergence probe fires, puts
             restraint on the classes the probe queried so the computation
             survives; the machine has no oracle programs, so the probe is
             a pluggable stand-in for relativized self-evaluation

An R action reinitializes everything below it; that is the only injury.
"""

from __future__ import annotations

from typing import Callable, Sequence

from ..machine import Machine, MachineIndex
from ..relations import PartitionBuilder, RelKind, StagedRelation
from .runtime import ConstructionState, FreshSource

# probe(stage, same) -> (converged, queried pairs); `same` tests the
# current relation
Probe = Callable[[int, Callable[[int, int], bool]], tuple[bool, Sequence[tuple[int, int]]]]


def trivial_probe(stage: int, same: Callable[[int, int], bool]):
    return True, ((0, 1),)


def dark_minimal_build(m_max: int, battery: Sequence[MachineIndex], n_max: int,
                       low: bool, stage_budget: int, machine: Machine,
                       probe: Probe | None = None, window_bound: int = 64,
                       name: str = "dark-minimal") -> tuple[StagedRelation, ConstructionState]:
    config = {"m_max": m_max, "battery": len(battery), "n_max": n_max,
              "low": int(low), "stage_budget": stage_budget,
              "window_bound": window_bound}
    state = ConstructionState(name, config, machine)
    fresh = FreshSource()
    fresh.note(n_max, window_bound // 2)
    part = state.partition
    probe = probe or trivial_probe

    reqs: list[dict] = []
    r_specs = [(e, n) for e in range(len(battery)) for n in range(n_max)]
    slots = max(m_max, len(r_specs), len(battery) if low else 0)
    for t in range(slots):
        if t < m_max:
            reqs.append({"kind": "I", "m": t + 1, "label": f"I[{t + 1}]"})
        if t < len(r_specs):
            e, n = r_specs[t]
            reqs.append({"kind": "R", "e": e, "n": n, "label": f"R[{e},{n}]"})
        if low and t < len(battery):
            reqs.append({"kind": "L", "e": t, "label": f"L[{t}]"})
    for req in reqs:
        req.update(acted=False, restraint=(), restraint_classes=(), stamp=None)

    def restrained_above(pos: int) -> set[int]:
        out: set[int] = set()
        for req in reqs[:pos]:
            out.update(req["restraint"])
        return out

    def injure_below(pos: int, s: int, cause: str) -> None:
        for req in reqs[pos + 1:]:
            if req["acted"] or req["restraint"]:
                state.injure(s, req["label"], cause)
            req.update(acted=False, restraint=(), restraint_classes=(), stamp=None)

    window = range(window_bound + 1)
    for s in range(1, stage_budget + 1):
        state.stage = s
        for pos, req in enumerate(reqs[:min(s, len(reqs))]):
            kind = req["kind"]
            if kind == "I":
                if not req["acted"]:
                    tup = tuple(fresh.fresh() for _ in range(req["m"]))
                    req.update(acted=True, restraint=tup)
                    state.log.emit(s, "restrain", requirement=req["label"],
                                   elements=list(tup))
            elif kind == "R":
                if req["acted"]:
                    continue
                blocked = restrained_above(pos)
                found = None
                for z in sorted(machine.enum_W(battery[req["e"]], s).elements):
                    if z > window_bound:
                        break
                    if all(not part.same(z, r) for r in blocked):
                        found = z
                        break
                if found is not None:
                    fresh.note(found)
                    part.collapse(found, req["n"], s)
                    req["acted"] = True
                    state.log.emit(s, "collapse", requirement=req["label"],
                                   element=found, target=req["n"])
                    injure_below(pos, s, req["label"])
            else:  # L
                if req["restraint"]:
                    continue
                converged, queried = probe(s, part.same)
                if converged:
                    elems = tuple(sorted({x for q in queried for x in q}))
                    for x in elems:
                        fresh.note(x)
                    req["restraint"] = elems
                    req["restraint_classes"] = tuple(
                        (x, y, part.same(x, y)) for x, y in queried)
                    req["stamp"] = s
                    state.log.emit(s, "lowness-restraint", requirement=req["label"],
                                   elements=list(elems))
        # audit: held lowness restraints preserve the queried answers
        # (classes may grow by fresh elements; they may not merge with
        # each other or split, which is what would injure the computation)
        for req in reqs:
            if req["kind"] == "L" and req["restraint"]:
                for x, y, answer in req["restraint_classes"]:
                    state.check(s, "lowness restraint preserved",
                                part.same(x, y) == answer,
                                requirement=req["label"], pair=[x, y])

    relation = _as_relation(part)
    state.params = {req["label"]: {"acted": req["acted"],
                                   "restraint": list(req["restraint"])}
                    for req in reqs}
    state.finish()
    return relation, state


def _as_relation(part: PartitionBuilder) -> StagedRelation:
    from ..relations import PartitionHistory

    history = PartitionHistory(tuple(part.log))
    return history.as_relation(RelKind.CE, label="dark-minimal")
