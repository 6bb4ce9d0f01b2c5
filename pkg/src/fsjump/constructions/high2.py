"""Dark minimal ceer whose double jump absorbs the identity double jump.

On top of the I/P machinery of the dark-minimal construction, each Q
instance (j, k, xbar) emits a c.e. set U tracking the guess "W_j = W_k":

  * xbar seen non-distinct           -> U floods to omega, done
  * guess flips equal -> not equal   -> a fresh y is added to U and restrained
  * guess flips back to equal        -> y collapses with xbar[0], unrestrained

Reinitialization floods the current U and starts version n+1; the version
count N(j,k,xbar) is the reinitialization count.  The guess is the
expansionary-agreement reading: "equal" exactly when the windowed views
of W_j and W_k agree strictly longer than ever before.

Odd-closure sets X_xbar for configured odd tuples enumerate the closure
of the tuple, or flood once the tuple is seen non-distinct.
"""

from __future__ import annotations

from typing import Sequence

from ..machine import Machine, MachineIndex
from ..relations import PartitionHistory, RelKind, StagedRelation
from .runtime import ConstructionState, FreshSource


def _agreement(machine: Machine, j: MachineIndex, k: MachineIndex, s: int,
               horizon: int) -> int:
    """s when the windowed views coincide, else the first disagreement."""
    wj = {x for x in machine.enum_W(j, s).elements if x <= horizon}
    wk = {x for x in machine.enum_W(k, s).elements if x <= horizon}
    if wj == wk:
        return s
    d = 0
    while (d in wj) == (d in wk):
        d += 1
    return d


def high2_dark_minimal_build(m_max: int, p_specs: Sequence[tuple[MachineIndex, int]],
                             q_specs: Sequence[tuple[MachineIndex, MachineIndex, tuple[int, ...]]],
                             odd_tuples: Sequence[tuple[int, ...]],
                             stage_budget: int, machine: Machine,
                             window_bound: int = 64,
                             name: str = "high2") -> tuple[StagedRelation, ConstructionState]:
    config = {"m_max": m_max, "p_count": len(p_specs), "q_count": len(q_specs),
              "odd_tuples": len(odd_tuples), "stage_budget": stage_budget,
              "window_bound": window_bound}
    state = ConstructionState(name, config, machine)
    part = state.partition
    fresh = FreshSource()
    for _, _, xbar in q_specs:
        fresh.note(*xbar)
    for tup in odd_tuples:
        fresh.note(*tup)
    for _, o in p_specs:
        fresh.note(o)

    reqs: list[dict] = []
    slots = max(m_max, len(p_specs), len(q_specs))
    for t in range(slots):
        if t < m_max:
            reqs.append({"kind": "I", "m": t + 1, "label": f"I[{t + 1}]",
                         "restraint": (), "acted": False})
        if t < len(p_specs):
            n_idx, o = p_specs[t]
            reqs.append({"kind": "P", "watch": n_idx, "target": o,
                         "label": f"P[{t}]", "acted": False, "restraint": ()})
        if t < len(q_specs):
            j, k, xbar = q_specs[t]
            if len(xbar) % 2 != 0:
                raise ValueError(f"Q tuple {xbar} must have even length")
            reqs.append({"kind": "Q", "j": j, "k": k, "xbar": tuple(xbar),
                         "label": f"Q[{t}]", "restraint": tuple(xbar),
                         "version": 0, "u": None, "y": None, "done": False,
                         "guess": True, "max_agreement": -1, "acted": False})

    window = range(window_bound + 1)

    def new_u(req: dict, s: int) -> None:
        req["version"] += 1
        req["u"] = state.emit_set(f"U[{req['label']}]#{req['version']}")
        req["done"] = False
        req["guess"] = True
        req["max_agreement"] = -1
        req["y"] = None
        req["restraint"] = req["xbar"]
        state.log.emit(s, "q-start-version", requirement=req["label"],
                       version=req["version"])

    def injure_below(pos: int, s: int, cause: str) -> None:
        for req in reqs[pos + 1:]:
            if req["kind"] == "I":
                if req["acted"]:
                    state.injure(s, req["label"], cause)
                req.update(acted=False, restraint=())
            elif req["kind"] == "P":
                if req["acted"]:
                    state.injure(s, req["label"], cause)
                req.update(acted=False)
            else:
                state.injure(s, req["label"], cause)
                if req["u"] is not None:
                    req["u"].flood(s)
                    state.log.emit(s, "q-flood-on-reinit", requirement=req["label"],
                                   version=req["version"])
                req["u"] = None
                req["y"] = None
                req["restraint"] = req["xbar"]

    odd_sets = {}
    for tup in odd_tuples:
        if len(tup) % 2 == 0:
            raise ValueError(f"odd-closure tuple {tup} must have odd length")
        odd_sets[tup] = state.emit_set(f"X[{','.join(map(str, tup))}]")

    def restrained_above(pos: int) -> set[int]:
        out: set[int] = set()
        for req in reqs[:pos]:
            out.update(req["restraint"])
            if req["kind"] == "Q" and req["y"] is not None:
                out.add(req["y"])
        return out

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
            elif kind == "P":
                if req["acted"]:
                    continue
                blocked = restrained_above(pos)
                found = None
                for z in sorted(machine.enum_W(req["watch"], s).elements):
                    if z > window_bound:
                        break
                    if all(not part.same(z, r) for r in blocked):
                        found = z
                        break
                if found is not None:
                    fresh.note(found)
                    part.collapse(found, req["target"], s)
                    req["acted"] = True
                    state.log.emit(s, "collapse", requirement=req["label"],
                                   element=found, target=req["target"])
                    injure_below(pos, s, req["label"])
            else:  # Q
                if req["u"] is None:
                    new_u(req, s)
                u = req["u"]
                xbar = req["xbar"]
                if req["done"]:
                    continue
                distinct = all(not part.same(a, b)
                               for i, a in enumerate(xbar) for b in xbar[i + 1:])
                if not distinct:
                    u.flood(s)
                    req["done"] = True
                    state.log.emit(s, "q-tuple-collapsed", requirement=req["label"])
                    continue
                for x in xbar:
                    for z in part.class_of(x, window):
                        u.add(z, s)
                agreement = _agreement(machine, req["j"], req["k"], s, window_bound)
                expansionary = agreement > req["max_agreement"]
                req["max_agreement"] = max(req["max_agreement"], agreement)
                guess_equal = expansionary
                if req["guess"] and not guess_equal:
                    y = fresh.fresh()
                    req["y"] = y
                    u.add(y, s)
                    state.log.emit(s, "q-pick-y", requirement=req["label"], y=y)
                elif not req["guess"] and guess_equal and req["y"] is not None:
                    part.collapse(req["y"], xbar[0], s)
                    state.log.emit(s, "q-collapse-y", requirement=req["label"],
                                   y=req["y"], target=xbar[0])
                    req["y"] = None
                req["guess"] = guess_equal

        for tup, rs in odd_sets.items():
            if rs.flooded:
                continue
            distinct = all(not part.same(a, b)
                           for i, a in enumerate(tup) for b in tup[i + 1:])
            if not distinct:
                rs.flood(s)
            else:
                for x in tup:
                    for z in part.class_of(x, window):
                        rs.add(z, s)

        # per-stage distinctness audit
        marks: list[tuple[str, int]] = []
        for req in reqs:
            if req["kind"] == "I":
                marks.extend((req["label"], x) for x in req["restraint"])
            elif req["kind"] == "Q" and req["y"] is not None and not req["done"]:
                marks.append((req["label"], req["y"]))
        for i in range(len(marks)):
            for j in range(i + 1, len(marks)):
                state.check(s, "restrained elements pairwise distinct",
                            not part.same(marks[i][1], marks[j][1]),
                            left=marks[i], right=marks[j])
        for hi_pos, hi in enumerate(reqs):
            if hi["kind"] != "Q":
                continue
            for lo in reqs[hi_pos + 1:]:
                if lo["kind"] != "Q" or lo["y"] is None or lo["done"]:
                    continue
                for x in hi["xbar"]:
                    state.check(s, "lower Q parameter clear of higher tuples",
                                not part.same(lo["y"], x),
                                lower=lo["label"], upper=hi["label"], element=x)

    history = PartitionHistory(tuple(part.log))
    relation = history.as_relation(RelKind.CE, label="high2-dark-minimal")
    state.params = {req["label"]: {k: v for k, v in req.items()
                                   if k in ("acted", "version", "y", "done", "restraint")}
                    for req in reqs}
    for req in reqs:
        if req["kind"] == "Q":
            state.params[req["label"]]["reinit_count"] = req["version"] - 1
    state.finish()
    return relation, state
