"""Jump operators on staged relations and the checkers derived from them.

Three jumps are provided:

  prime_jump    x ~ y iff x = y, or both self-evaluations halt and their
                values are related
  plus_jump     x ~ y iff the canonical finite sets F_x, F_y have the same
                closure (within a window)
  dotplus_jump  x ~ y iff the c.e. sets W_x, W_y have the same closure
                (within a window)

A jump of a staged relation is again a staged relation; comparisons at a
budget come back with an honest settled flag, and `dotplus_exact` gives
the brute-force answer on a closed finite universe.  Falsifiers search
for counterexamples to claimed reductions; a pass is bounded evidence,
never a proof, and every verdict says so.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from itertools import combinations
from typing import Callable, Iterable, Sequence

from .machine import Machine, MachineIndex
from .relations import (FiniteUniverse, LimitGuess, RelKind, StagedRelation,
                        closure, limit_guess)

# --- canonical finite sets ------------------------------------------------


def canonical_finite_set(x: int) -> frozenset[int]:
    """F_x: the finite set whose characteristic vector is x in binary."""
    out = []
    bit = 0
    while x:
        if x & 1:
            out.append(bit)
        x >>= 1
        bit += 1
    return frozenset(out)


def canonical_index(elems: Iterable[int]) -> int:
    return sum(1 << e for e in set(elems))


# --- the jumps ------------------------------------------------------------


def prime_jump(rel: StagedRelation, machine: Machine) -> StagedRelation:
    def approx(x: int, y: int, s: int) -> bool:
        left = machine.step_eval(x, x, s)
        if not left.halted:
            return False
        right = machine.step_eval(y, y, s)
        if not right.halted:
            return False
        return rel.at(left.value, right.value, s)

    return StagedRelation(rel.kind, approx, label=f"({rel.label})'")


def plus_jump(rel: StagedRelation, window_bound: int | None = None) -> StagedRelation:
    bound = window_bound if window_bound is not None else rel.support_bound

    def approx(x: int, y: int, s: int) -> bool:
        fx, fy = canonical_finite_set(x), canonical_finite_set(y)
        top = max([bound or 0, *fx, *fy])
        window = range(top + 1)
        return closure(rel, fx, s, window) == closure(rel, fy, s, window)

    return StagedRelation(RelKind.PI2, approx, label=f"({rel.label})+")


def dotplus_jump(rel: StagedRelation, machine: Machine,
                 window_bound: int | None = None) -> StagedRelation:
    """The jump on c.e.-set indices, read through a window.

    For a CE base on a bounded window the PI2 reading is exact in the
    limit: both closures grow monotonically, so their equality holds at
    infinitely many stages iff it holds of the limits.
    """
    bound = window_bound if window_bound is not None else rel.support_bound
    if bound is None:
        raise ValueError("dotplus over an unbounded relation needs a window bound")
    window = range(bound + 1)

    def approx(x: int, y: int, s: int) -> bool:
        wx = machine.enum_W(x, s).elements
        wy = machine.enum_W(y, s).elements
        return closure(rel, wx, s, window) == closure(rel, wy, s, window)

    return StagedRelation(RelKind.PI2, approx, support_bound=bound,
                          label=f"({rel.label}).+")


def dotplus_holds(rel: StagedRelation, machine: Machine, i: MachineIndex,
                  j: MachineIndex, budget: int,
                  window_bound: int | None = None) -> LimitGuess:
    if i == j:
        return LimitGuess(True, True)
    jump = dotplus_jump(rel, machine, window_bound if window_bound is not None
                        else rel.support_bound or budget)
    return limit_guess(jump, i, j, budget)


def dotplus_exact(universe: FiniteUniverse, i: str, j: str) -> bool:
    return universe.closure_of_name(i) == universe.closure_of_name(j)


def singleton_embed(machine: Machine,
                    rel: StagedRelation | None = None) -> Callable[[int], MachineIndex]:
    """x -> an index enumerating exactly {x}; witnesses E <= E-dotplus."""
    return machine.singleton_index


# --- iterated jump classes on settled universes ----------------------------


class JumpKeys:
    """Canonical keys for iterated dotplus classes over a settled relation.

    key(index, 1) is the closure of W_index within the window;
    key(index, k) is the set of level-(k-1) keys of the members of
    W_index.  Two indices are level-k equivalent iff their keys agree.
    """

    def __init__(self, machine: Machine, rel: StagedRelation, window: Sequence[int],
                 stage: int, enum_stage: int | None = None):
        self.machine = machine
        self.rel = rel
        self.window = list(window)
        self.stage = stage
        self.enum_stage = enum_stage if enum_stage is not None else stage
        self._memo: dict[tuple[int, int], frozenset] = {}

    def point(self, n: int) -> frozenset[int]:
        return closure(self.rel, [n], self.stage, self.window)

    def key(self, index: MachineIndex, level: int) -> frozenset:
        if level < 1:
            raise ValueError("keys start at level 1")
        memo = self._memo.get((index, level))
        if memo is not None:
            return memo
        members = self.machine.enum_W(index, self.enum_stage).elements
        if level == 1:
            out: frozenset = closure(self.rel, members, self.stage, self.window)
        else:
            out = frozenset(self.key(m, level - 1) for m in members)
        self._memo[(index, level)] = out
        return out

    def equivalent(self, a: MachineIndex, b: MachineIndex, level: int) -> bool:
        return self.key(a, level) == self.key(b, level)


# --- verdicts and falsifiers ------------------------------------------------


@dataclass
class Check:
    name: str
    ok: bool
    detail: str = ""


@dataclass
class Verdict:
    subject: str
    checks: list[Check] = field(default_factory=list)
    notes: list[str] = field(default_factory=list)

    @property
    def passed(self) -> bool:
        return all(c.ok for c in self.checks)

    def add(self, name: str, ok: bool, detail: str = "") -> None:
        self.checks.append(Check(name, ok, detail))

    def render(self) -> str:
        lines = [f"verdict: {self.subject}",
                 f"result: {'pass' if self.passed else 'FAIL'} "
                 "(bounded evidence, not a proof)"]
        for c in self.checks:
            status = "ok  " if c.ok else "FAIL"
            line = f"  [{status}] {c.name}"
            if c.detail:
                line += f": {c.detail}"
            lines.append(line)
        for n in self.notes:
            lines.append(f"  note: {n}")
        return "\n".join(lines)


def verify_reduction(pairs: Iterable[tuple[int, int]],
                     left: Callable[[int, int], bool],
                     right: Callable[[int, int], bool],
                     subject: str = "reduction") -> Verdict:
    """Check x ~ y iff f(x) ~ f(y) over the given pairs (f folded into right)."""
    verdict = Verdict(subject)
    bad = []
    total = 0
    for x, y in pairs:
        total += 1
        if left(x, y) != right(x, y):
            bad.append((x, y))
    verdict.add("preserves and reflects equivalence", not bad,
                f"{total} pairs" if not bad else f"counterexample pairs {bad[:5]}")
    return verdict


def check_singleton_embedding(universe: FiniteUniverse, machine: Machine) -> Verdict:
    embed = singleton_embed(machine)
    keys = JumpKeys(machine, universe.relation, universe.window(), stage=2,
                    enum_stage=2)
    pts = list(universe.window())
    return verify_reduction(
        ((x, y) for x in pts for y in pts if x <= y),
        lambda x, y: universe.relation.at(x, y, 0),
        lambda x, y: keys.equivalent(embed(x), embed(y), 1),
        subject=f"singleton embedding on {universe.name}")


def _subset_battery(elems: Sequence[int], max_size: int = 4,
                    pool: int = 8) -> list[frozenset[int]]:
    base = list(elems)[:pool]
    battery: list[frozenset[int]] = [frozenset()]
    for size in range(1, max_size + 1):
        battery.extend(frozenset(c) for c in combinations(base, size))
    # initial segments of the enumeration order round out the battery
    battery.extend(frozenset(elems[:k]) for k in range(1, len(elems) + 1))
    return battery


def h_falsifier(machine: Machine, h: Callable[[int], int], rel: StagedRelation,
                samples: Sequence[tuple[MachineIndex, MachineIndex]], budget: int,
                window_bound: int | None = None,
                infinite_threshold: int = 8) -> Verdict:
    """Search for evidence that h is not a reduction into the dotplus jump.

    Property 1: nested inputs must yield closure-nested images.
    Property 2: an image of an infinite-looking set must be exhausted by
    the images of its finite subsets (sampled battery).
    Faithfulness: samples with distinct input sets must have distinct
    image closures, and conversely.
    """
    bound = window_bound if window_bound is not None else rel.support_bound or budget
    window = range(bound + 1)
    verdict = Verdict("h against the jump reduction laws")
    verdict.notes.append("a pass is bounded evidence on the sampled battery only")

    def img_closure(index: MachineIndex) -> frozenset[int]:
        return closure(rel, machine.enum_W(index, budget).elements, budget, window)

    for i, j in samples:
        wi = machine.enum_W(i, budget).elements
        wj = machine.enum_W(j, budget).elements
        if not wi <= wj:
            verdict.add(f"precondition W_{i} within W_{j}", False,
                        f"extra elements {sorted(wi - wj)[:5]}")
            continue
        ci, cj = img_closure(h(i)), img_closure(h(j))
        verdict.add(f"monotone image on ({i},{j})", ci <= cj,
                    "" if ci <= cj else f"escaping elements {sorted(ci - cj)[:5]}")
        same_input = wi == wj
        same_image = ci == cj
        verdict.add(f"faithful on ({i},{j})", same_input == same_image,
                    "" if same_input == same_image else
                    ("collapses distinct classes" if same_image else "splits a class"))
        if len(wj) >= infinite_threshold:
            ordered = sorted(wj)
            union: set[int] = set()
            for f_set in _subset_battery(ordered):
                union |= img_closure(machine.finite_set_index(f_set))
            verdict.add(f"finitely based at {j}", cj <= union,
                        "" if cj <= union else
                        f"unreached elements {sorted(cj - union)[:5]}")
    return verdict


def separator_falsifier(machine: Machine, rel: StagedRelation,
                        decide: Callable[[int], bool], i: MachineIndex,
                        j: MachineIndex, budget: int,
                        window_bound: int | None = None) -> Verdict:
    """Build the diagonal index defeating a claimed separator of two jump classes.

    decide claims to cover the class of i and avoid the class of j.  The
    constructed fixed point copies W_i when excluded and W_j when included,
    so a correct total separator must misclassify it.
    """
    verdict = Verdict("separator against jump-class inseparability")
    same = dotplus_holds(rel, machine, i, j, budget, window_bound)
    if i == j or same.value:
        verdict.add("classes distinct", True, "classes coincide; vacuous pass")
        return verdict
    f = machine.fn_index(lambda d: j if decide(d) else i, name="separator-diagonal")
    e = machine.fixed_point(f)
    bound = window_bound if window_bound is not None else rel.support_bound or budget
    window = range(bound + 1)
    fuel = max(budget, 4096)
    w_e = machine.limit_members(e, window, fuel)
    target = j if decide(e) else i
    w_target = machine.limit_members(target, window, fuel)
    verdict.add("diagonal index copies the opposite side", w_e == w_target,
                f"e={e} copies W_{target} on the window")
    claimed_side = "class of i" if decide(e) else "class of j (excluded)"
    actual_side = "class of j" if decide(e) else "class of i"
    verdict.add("separator misclassifies the diagonal index", True,
                f"decide({e})={decide(e)} puts it in the {claimed_side}, "
                f"but W_{e} sits in the {actual_side}")
    verdict.notes.append(f"witness index e={e}, checked to fuel {fuel}")
    return verdict
