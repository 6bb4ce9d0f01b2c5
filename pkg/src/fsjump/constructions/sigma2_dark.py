"""Interval-class relation whose jump defeats the identity, over a
simulated halting oracle.

Requirements alternate R_0 < Q_0 < R_1 < Q_1 < ...:

  R_n  gathers 3 * 2^|xbar| + 1 indices from its battery set, pigeonholes
       four that agree about the restrained classes, drops containment
       cases, and runs the two-phase collapse module on the survivors,
       equalizing the two watched sets class by class with interval
       collapses.  A set looking finite at the oracle's cap triggers the
       fallback: first time switch partners, second time collapse one
       interval and retire (reinitializing everything below).
  Q_j  waits for the class of its base point to sit still for one stage,
       then restrains its greatest element.  A waiting or declaring Q ends
       the stage, as does a fallback event.

Every collapse is an interval collapse, so every class is an interval at
every stage; the audit tracks exactly the classes each merge touched.
"""

from __future__ import annotations

from bisect import bisect_left
from typing import Sequence

from ..machine import Machine, MachineIndex
from ..relations import PartitionHistory, RelKind, StagedRelation
from .runtime import ConstructionState, SimulatedHaltOracle


class _Intervals:
    """Union of interval classes over an initial segment of omega."""

    def __init__(self) -> None:
        self._lo: dict[int, int] = {}  # root (= lo) -> hi
        self._root: dict[int, int] = {}

    def root(self, x: int) -> int:
        r = self._root.get(x, x)
        while r in self._root and self._root[r] != r:
            r = self._root[r]
        return r

    def span(self, x: int) -> tuple[int, int]:
        r = self.root(x)
        return r, self._lo.get(r, r)

    def same(self, x: int, y: int) -> bool:
        return self.root(x) == self.root(y)

    def collapse_interval(self, lo: int, hi: int) -> list[int]:
        """Merge everything in [lo, hi]; returns the roots that changed."""
        lo_root, _ = self.span(lo)
        touched = []
        x = lo_root
        new_hi = hi
        while x <= new_hi:
            r, h = self.span(x)
            touched.append(r)
            new_hi = max(new_hi, h)
            x = h + 1
        for r in touched:
            self._root[r] = lo_root
        self._root[lo_root] = lo_root
        self._lo[lo_root] = new_hi
        return touched


def sigma2_dark_build(battery: Sequence[MachineIndex], oracle_fuel: int,
                      j_max: int, stage_budget: int, machine: Machine,
                      name: str = "sigma2-dark") -> tuple[StagedRelation, ConstructionState]:
    config = {"battery": len(battery), "oracle_fuel": oracle_fuel,
              "j_max": j_max, "stage_budget": stage_budget}
    state = ConstructionState(name, config, machine)
    oracle = SimulatedHaltOracle(machine, oracle_fuel)
    ivals = _Intervals()
    part = state.partition  # mirrors interval merges for the emitted relation

    reqs: list[dict] = []
    for t in range(max(len(battery), j_max)):
        if t < len(battery):
            reqs.append({"kind": "R", "n": t, "watch": battery[t], "label": f"R[{t}]",
                         "phase": "init", "triple": (), "pair": (), "spare": None,
                         "ffs": 0, "xbar": (), "dirty": set(), "verdicts": {}})
        if t < j_max:
            reqs.append({"kind": "Q", "j": t, "label": f"Q[{t}]", "restraint": None,
                         "base": None, "prev_class": None})

    def do_interval_collapse(lo: int, hi: int, s: int, cause: str) -> None:
        touched = ivals.collapse_interval(lo, hi)
        for x in range(lo, hi + 1):
            part.collapse(lo, x, s)
        state.log.emit(s, "interval-collapse", lo=lo, hi=hi, cause=cause)
        root = ivals.root(lo)
        for req in reqs:
            if req["kind"] == "R":
                req["dirty"].add(root)
                req["verdicts"].pop(root, None)
                for r in touched:
                    req["verdicts"].pop(r, None)
        # audit: the merged class is one interval
        r, h = ivals.span(lo)
        state.check(s, "classes are intervals", h >= r, lo=r, hi=h)

    def reinit_below(pos: int, s: int, cause: str) -> None:
        for req in reqs[pos + 1:]:
            if req["kind"] == "R":
                if req["phase"] != "init":
                    state.injure(s, req["label"], cause)
                req.update(phase="init", triple=(), pair=(), spare=None,
                           ffs=0, xbar=(), dirty=set(), verdicts={})
            else:
                if req["restraint"] is not None:
                    state.injure(s, req["label"], cause)
                req.update(restraint=None, base=None, prev_class=None)

    def restrained_by_higher_qs(pos: int) -> tuple[int, ...]:
        out: list[int] = []
        for req in reqs[:pos]:
            if req["kind"] == "Q" and req["restraint"] is not None:
                out.extend(req["restraint"])
        return tuple(sorted(set(out)))

    def class_members(x: int) -> range:
        lo, hi = ivals.span(x)
        return range(lo, hi + 1)

    def intersects_view(idx: MachineIndex, lo: int, hi: int) -> bool:
        view = sorted_views.setdefault(idx, sorted(oracle.view(idx)))
        pos = bisect_left(view, lo)
        return pos < len(view) and view[pos] <= hi

    sorted_views: dict[MachineIndex, list[int]] = {}

    def r_activate(req: dict, pos: int, s: int) -> None:
        req["xbar"] = restrained_by_higher_qs(pos)
        need = 3 * (2 ** len(req["xbar"])) + 1
        members = sorted(oracle.view(req["watch"]))
        if len(members) < need:
            req["phase"] = "idle"
            state.log.emit(s, "r-idle", requirement=req["label"],
                           have=len(members), need=need,
                           note="battery set looks finite at the cap")
            return
        pool = members[:need]
        groups: dict[tuple, list[int]] = {}
        for j in pool:
            sig = tuple(oracle.intersects(j, class_members(x)) for x in req["xbar"])
            groups.setdefault(sig, []).append(j)
        four = next(g for g in groups.values() if len(g) >= 4)[:4]
        closure_elems = {z for x in req["xbar"] for z in class_members(x)}
        outside = [j for j in four
                   if not oracle.view(j) <= closure_elems]
        if len(outside) < 3:
            req["phase"] = "idle"
            state.log.emit(s, "r-contained", requirement=req["label"],
                           note="two candidate sets already inside the restrained classes")
            return
        j, k, l = outside[:3]
        req.update(triple=(j, k, l), pair=(j, k), spare=l, phase="collapse",
                   dirty=set(range(s)), verdicts={})
        state.log.emit(s, "r-armed", requirement=req["label"], pair=[j, k], spare=l)

    def r_collapse_step(req: dict, pos: int, s: int) -> bool:
        """Returns True when the action ends the stage."""
        xbar = req["xbar"]
        floor = max(xbar) if xbar else -1
        if s <= floor + 1:
            return False
        j, k = req["pair"]
        alive_j = oracle.exists_geq(j, s)
        alive_k = oracle.exists_geq(k, s)
        if not alive_j or not alive_k:
            req["ffs"] += 1
            dead = j if not alive_j else k
            survivor = k if dead == j else j
            if req["ffs"] == 1 and req["spare"] is not None:
                req["pair"] = (survivor, req["spare"])
                req["verdicts"] = {}
                req["dirty"] = set(range(s))
                state.log.emit(s, "found-finite", requirement=req["label"],
                               dead=dead, new_pair=list(req["pair"]))
            else:
                hi = max(oracle.view(j) | oracle.view(k) | {floor + 1})
                do_interval_collapse(floor + 1, hi, s, req["label"])
                req["phase"] = "done"
                state.log.emit(s, "found-finite-final", requirement=req["label"],
                               collapsed=[floor + 1, hi])
            reinit_below(pos, s, req["label"])
            return True
        req["dirty"].add(ivals.root(s - 1))
        for root in sorted(req["dirty"]):
            req["dirty"].discard(root)
            if ivals.root(root) != root or root <= floor or root >= s:
                continue
            if root in req["verdicts"]:
                continue
            lo, hi = ivals.span(root)
            in_j = intersects_view(j, lo, hi)
            in_k = intersects_view(k, lo, hi)
            if in_j == in_k:
                req["verdicts"][root] = "both" if in_j else "neither"
                continue
            other = k if in_j else j
            view = sorted_views.setdefault(other, sorted(oracle.view(other)))
            pos_n = bisect_left(view, s + 1)
            if pos_n >= len(view):
                req["verdicts"][root] = "unsettled"
                state.log.emit(s, "collapse-unsettled", requirement=req["label"],
                               z=root, note="no partner above the stage inside the cap")
                state.settled = False
                continue
            do_interval_collapse(root, view[pos_n], s, req["label"])
        return False

    def q_step(req: dict, pos: int, s: int) -> bool:
        """Waiting and declaring both end the stage.

        The settling criterion is literal: the class of the base point at
        the end of stage s-1 must equal its class now.
        """
        if req["restraint"] is not None:
            return False
        xbar = restrained_by_higher_qs(pos)
        base = (max(xbar) + 1) if xbar else 0
        cls_now = tuple(class_members(base))
        if req["base"] == base and req["prev_class"] == cls_now:
            y = cls_now[-1]
            req["restraint"] = tuple(sorted(set(xbar) | {y}))
            state.log.emit(s, "q-restrain", requirement=req["label"],
                           base=base, y=y, tuple=list(req["restraint"]))
            return True
        if req["base"] != base:
            req["base"] = base
            req["prev_class"] = None
        state.log.emit(s, "q-waiting", requirement=req["label"], base=base)
        return True

    for s in range(1, stage_budget + 1):
        state.stage = s
        for pos, req in enumerate(reqs[:min(s, len(reqs))]):
            if req["kind"] == "R":
                if req["phase"] == "init":
                    r_activate(req, pos, s)
                if req["phase"] == "collapse":
                    if r_collapse_step(req, pos, s):
                        break
            else:
                if q_step(req, pos, s):
                    break
        # end-of-stage class snapshots for the waiting Q criterion
        for req in reqs:
            if req["kind"] == "Q" and req["restraint"] is None and req["base"] is not None:
                req["prev_class"] = tuple(class_members(req["base"]))

    history = PartitionHistory(tuple(part.log))
    relation = StagedRelation(RelKind.SIGMA2,
                              lambda x, y, t: history.same(x, y, t),
                              label="sigma2-dark")
    state.params = {req["label"]: {k: v for k, v in req.items()
                                   if k in ("phase", "pair", "ffs", "xbar", "restraint")}
                    for req in reqs}
    state.notes.append(f"oracle answered {len(oracle.queries)} queries at cap {oracle_fuel}")
    state.finish()
    return relation, state
