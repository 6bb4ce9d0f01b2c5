"""Fuel-bounded evaluation and c.e.-set enumeration over the program numbering.

A `Machine` owns a builtin table and exposes the phi_e / W_e view of the
numbering in programs.py:

  * step_eval(e, x, fuel)  ->  phi_e(x), or still-running within the fuel
  * enum_W(e, stage)       ->  the stage-s approximation to W_e = dom phi_e
  * smn / fixed_point      ->  index control (partial application, Kleene
                               fixed points)
  * register_builtin       ->  mint an index whose W_e replays a supplied
                               stage-indexed set generator

Cost model: every AST node entry costs one fuel unit; native table entries
charge their own documented cost (at least 1).  Halting is monotone in
fuel and evaluation is deterministic, so the least halting fuel equals the
reported step count.

Enumeration of AST-coded programs follows the fixed dovetail schedule: the
stage-s snapshot contains x iff step_eval(e, x, f) halts for some f with
<x, f> < s (Cantor pairing).  Indices minted by register_builtin replay
their generator exactly instead; their halting witnesses still respect the
stage bound (an element emitted at stage t evaluates in t+1 steps).

Slots 0..2 of the table are reserved at construction time for the
universal function, the s-m-n code transformer, and the pairing function.
The table is append-only and lock-guarded; auxiliary indices (constants,
singletons, s-m-n results) may be minted lazily but are memoized, so a
replay with the same call sequence yields bit-identical indices.
"""

from __future__ import annotations

import threading
from dataclasses import dataclass
from typing import Callable, Iterable

from .pairing import pair, tuple_decode
from . import programs as pr
from .programs import Program, builtin, comp, decode, encode, identity, proj

MachineIndex = int

# Pure successor-chain constants stay portable below this bound; larger
# frozen values go through a native constant slot.
_AST_CONST_MAX = 64
# An SMN-native memo miss builds a successor-chain constant; past this the
# call diverges instead of allocating an unbounded AST.
_SMN_MISS_MAX = 1 << 20


class ArityMismatch(ValueError):
    pass


class NonMonotoneEnumerator(RuntimeError):
    pass


@dataclass(frozen=True)
class EvalOutcome:
    halted: bool
    value: int | None = None
    steps: int | None = None


STILL_RUNNING = EvalOutcome(False)


@dataclass(frozen=True)
class EnumerationSnapshot:
    index: MachineIndex
    stage: int
    elements: frozenset[int]

    def __contains__(self, x: int) -> bool:
        return x in self.elements


# A native is fn(args, remaining_fuel) -> (value, steps_used) or None.
# It must be deterministic and monotone in remaining_fuel.
NativeFn = Callable[[tuple[int, ...], int], "tuple[int, int] | None"]


@dataclass
class _Entry:
    name: str
    arity: int
    fn: NativeFn
    gen: Callable[[int], frozenset[int]] | None = None  # set only for enumerators
    mono_checkpoint: tuple[int, frozenset[int]] | None = None
    volatile: bool = False  # still being written by a construction


class Machine:
    def __init__(self) -> None:
        self._table: list[_Entry] = []
        self._lock = threading.Lock()
        self._smn_memo: dict[tuple[int, int], int] = {}
        self._const_memo: dict[int, int] = {}
        self._finite_memo: dict[frozenset[int], int] = {}
        self._copy_memo: dict[int, int] = {}
        self._column_memo: dict[tuple[int, int], int] = {}
        self._union_memo: dict[tuple[int, ...], int] = {}
        self._eval_cache: dict[tuple[int, int], tuple] = {}
        self._volatile_codes: set[int] = set()
        self._omega: int | None = None
        self._register_core()

    # --- table ----------------------------------------------------------

    def _append(self, entry: _Entry) -> int:
        with self._lock:
            self._table.append(entry)
            return len(self._table) - 1

    def _entry(self, slot: int) -> _Entry | None:
        if 0 <= slot < len(self._table):
            return self._table[slot]
        return None

    def _register_core(self) -> None:
        def u_fn(args: tuple[int, ...], remaining: int):
            e, x = args
            if remaining < 2:
                return None
            inner = self.step_eval(e, x, remaining - 1)
            if not inner.halted:
                return None
            return inner.value, inner.steps + 1

        def smn_fn(args: tuple[int, ...], remaining: int):
            e, x = args
            code = self._smn_memo.get((e, x))
            if code is not None:
                return code, 1
            cost = max(2, x)
            if cost > remaining or x > _SMN_MISS_MAX:
                return None
            return self.smn(e, x, force_pure=True), cost

        def pair_fn(args: tuple[int, ...], remaining: int):
            a, b = args
            cost = 1 + (a + b).bit_length()
            if cost > remaining:
                return None
            return pair(a, b), cost

        self._append(_Entry("universal", 2, u_fn))
        self._append(_Entry("smn", 2, smn_fn))
        self._append(_Entry("pair", 2, pair_fn))

    def register_native(self, name: str, arity: int, fn: NativeFn) -> MachineIndex:
        slot = self._append(_Entry(name, arity, fn))
        return encode(builtin(slot, arity))

    def fn_index(self, fn: Callable[..., int | None], name: str = "fn", arity: int = 1,
                 cost: int = 1) -> MachineIndex:
        """Index of a total (or explicitly-diverging) Python function."""

        def native(args: tuple[int, ...], remaining: int):
            if cost > remaining:
                return None
            value = fn(*args)
            if value is None:
                return None
            return value, cost

        return self.register_native(name, arity, native)

    def register_builtin(self, gen: Callable[[int], Iterable[int]],
                         name: str = "set", volatile: bool = False) -> MachineIndex:
        """Mint an index whose enum_W replays `gen` (cumulative, monotone).

        gen(s) is the snapshot after s stages; gen(0) is typically empty.
        Non-monotone generators are rejected at replay time.  A volatile
        entry (one a running construction still appends to) bypasses the
        evaluation cache until frozen.
        """
        cached = _CachedGen(gen)

        def native(args: tuple[int, ...], remaining: int):
            (x,) = args
            t = cached.entry_stage(x, remaining)
            if t is None:
                return None
            return 0, max(1, t)

        slot = self._append(_Entry(name, 1, native, gen=cached.snapshot, volatile=volatile))
        code = encode(builtin(slot, 1))
        if volatile:
            self._volatile_codes.add(code)
        return code

    def freeze_index(self, e: MachineIndex) -> None:
        """Mark a volatile builtin as final; its evaluations become cacheable."""
        self._volatile_codes.discard(e)
        prog = decode(e)
        if prog.op == "builtin":
            entry = self._entry(prog.index)
            if entry is not None:
                entry.volatile = False

    # --- evaluation -----------------------------------------------------

    def step_eval(self, e: MachineIndex, x: int, fuel: int) -> EvalOutcome:
        cacheable = e not in self._volatile_codes
        key = (e, x)
        hit = self._eval_cache.get(key) if cacheable else None
        if hit is not None:
            if hit[0] == "h":
                _, value, steps = hit
                return EvalOutcome(True, value, steps) if steps <= fuel else STILL_RUNNING
            if fuel <= hit[1]:
                return STILL_RUNNING
        prog = decode(e)
        args = tuple_decode(x, prog.arity)
        res = self._apply(prog, args, fuel)
        if res is None:
            if cacheable:
                prev = hit[1] if hit is not None and hit[0] == "d" else -1
                self._eval_cache[key] = ("d", max(fuel, prev))
            return STILL_RUNNING
        value, steps = res
        if cacheable:
            self._eval_cache[key] = ("h", value, steps)
        return EvalOutcome(True, value, steps)

    def _apply(self, prog: Program, args: tuple[int, ...], budget: int):
        """Explicit-stack evaluator; returns (value, steps) or None."""
        steps = 0
        ops: list[tuple] = [("eval", prog, args)]
        vals: list[int] = []
        while ops:
            op = ops.pop()
            kind = op[0]
            if kind == "eval":
                _, p, a = op
                steps += 1
                if steps > budget:
                    return None
                o = p.op
                if o == "zero":
                    vals.append(0)
                elif o == "succ":
                    vals.append(a[0] + 1)
                elif o == "proj":
                    vals.append(a[p.index])
                elif o == "comp":
                    f = p.children[0]
                    children = p.children[1:]
                    ops.append(("call", f, len(children)))
                    for c in reversed(children):
                        ops.append(("eval", c, a))
                elif o == "primrec":
                    base, step = p.children
                    y, rest = a[0], a[1:]
                    ops.append(("primrec", step, rest, 0, y))
                    ops.append(("eval", base, rest))
                elif o == "mu":
                    body = p.children[0]
                    ops.append(("mu", body, a, 0))
                    ops.append(("eval", body, (0, *a)))
                elif o == "builtin":
                    entry = self._entry(p.index)
                    if entry is None or entry.arity != p.arity:
                        return None
                    res = entry.fn(a, budget - steps)
                    if res is None:
                        return None
                    value, used = res
                    steps += max(1, used)
                    if steps > budget:
                        return None
                    vals.append(value)
                else:  # pragma: no cover - constructors forbid it
                    return None
            elif kind == "call":
                _, f, n = op
                if n:
                    fargs = tuple(vals[-n:])
                    del vals[-n:]
                else:
                    fargs = ()
                ops.append(("eval", f, fargs))
            elif kind == "primrec":
                _, step, rest, i, y = op
                if i < y:
                    v = vals.pop()
                    ops.append(("primrec", step, rest, i + 1, y))
                    ops.append(("eval", step, (i, v, *rest)))
            else:  # mu
                _, body, a, t = op
                v = vals.pop()
                if v == 0:
                    vals.append(t)
                else:
                    ops.append(("mu", body, a, t + 1))
                    ops.append(("eval", body, (t + 1, *a)))
        return vals[-1], steps

    # --- enumeration ----------------------------------------------------

    def enum_W(self, e: MachineIndex, stage: int) -> EnumerationSnapshot:
        prog = decode(e)
        if prog.op == "builtin":
            entry = self._entry(prog.index)
            if entry is not None and entry.gen is not None and prog.arity == 1:
                elements = self._checked_snapshot(entry, stage)
                return EnumerationSnapshot(e, stage, elements)
        elements = set()
        x = 0
        while pair(x, 0) < stage:
            f_max = _max_fuel(x, stage)
            if f_max >= 0:
                out = self.step_eval(e, x, f_max)
                if out.halted:
                    elements.add(x)
            x += 1
        return EnumerationSnapshot(e, stage, frozenset(elements))

    def _checked_snapshot(self, entry: _Entry, stage: int) -> frozenset[int]:
        current = frozenset(entry.gen(stage))
        checkpoint = entry.mono_checkpoint
        if checkpoint is not None:
            prev_stage, prev = checkpoint
            low, high = (prev, current) if prev_stage <= stage else (current, prev)
            if not low <= high:
                raise NonMonotoneEnumerator(
                    f"{entry.name}: snapshot shrank between stages "
                    f"{min(prev_stage, stage)} and {max(prev_stage, stage)}")
        if checkpoint is None or stage >= checkpoint[0]:
            entry.mono_checkpoint = (stage, current)
        return current

    def limit_members(self, e: MachineIndex, window: Iterable[int], fuel: int) -> frozenset[int]:
        """{x in window : phi_e(x) halts within fuel}; the budget-f view of W_e."""
        return frozenset(x for x in window if self.step_eval(e, x, fuel).halted)

    # --- index control --------------------------------------------------

    def smn(self, e: MachineIndex, frozen: int, force_pure: bool = False) -> MachineIndex:
        """Index of y -> phi_e(<frozen, y>) for binary-arity e."""
        memo = self._smn_memo.get((e, frozen))
        if memo is not None:
            return memo
        prog = decode(e)
        if prog.arity != 2:
            raise ArityMismatch(f"index {e} does not decode to a binary program")
        if frozen <= _AST_CONST_MAX or force_pure:
            const_leaf = pr.const_ast(frozen)
        else:
            const_leaf = builtin(self._const_slot(frozen), 1)
        code = encode(comp(prog, [const_leaf, identity()]))
        self._smn_memo[(e, frozen)] = code
        return code

    def _const_slot(self, value: int) -> int:
        slot = self._const_memo.get(value)
        if slot is None:
            slot = self._append(_Entry(f"const:{value}", 1, lambda args, rem, v=value: (v, 1)))
            self._const_memo[value] = slot
        return slot

    def fixed_point(self, f: MachineIndex) -> MachineIndex:
        """Kleene fixed point: an e with phi_e = phi_{f(e)}, built from smn.

        f must be (extensionally) total on indices; where f diverges, the
        returned index diverges too.
        """
        u_node = builtin(0, 2)
        smn_node = builtin(1, 2)
        px, py = proj(2, 0), proj(2, 1)
        self_applied = comp(smn_node, [px, px])
        f_leaf = comp(builtin(self._const_slot(f), 1), [px])
        transformed = comp(u_node, [f_leaf, self_applied])
        d_body = comp(u_node, [transformed, py])
        d_code = encode(d_body)
        return self.smn(d_code, d_code)

    # --- common set indices ---------------------------------------------

    def finite_set_index(self, elems: Iterable[int]) -> MachineIndex:
        key = frozenset(elems)
        memo = self._finite_memo.get(key)
        if memo is None:
            memo = self.register_builtin(lambda s, k=key: k if s >= 1 else frozenset(),
                                         name=f"finite:{sorted(key)}")
            self._finite_memo[key] = memo
        return memo

    def singleton_index(self, x: int) -> MachineIndex:
        return self.finite_set_index((x,))

    def empty_index(self) -> MachineIndex:
        return self.finite_set_index(())

    def omega_index(self) -> MachineIndex:
        if self._omega is None:
            self._omega = self.register_builtin(lambda s: frozenset(range(s)), name="omega")
        return self._omega

    def copy_index(self, e: MachineIndex) -> MachineIndex:
        memo = self._copy_memo.get(e)
        if memo is None:
            memo = self.register_builtin(lambda s: self.enum_W(e, s).elements,
                                         name=f"copy:{e}")
            self._copy_memo[e] = memo
        return memo

    def image_index(self, e: MachineIndex, fn: Callable[[int], int],
                    name: str = "image") -> MachineIndex:
        return self.register_builtin(
            lambda s: frozenset(fn(x) for x in self.enum_W(e, s).elements), name=name)

    def column_index(self, e: MachineIndex, col: int) -> MachineIndex:
        memo = self._column_memo.get((e, col))
        if memo is None:
            memo = self.image_index(e, lambda x, c=col: pair(c, x), name=f"col{col}:{e}")
            self._column_memo[(e, col)] = memo
        return memo

    def union_index(self, indices: Iterable[MachineIndex]) -> MachineIndex:
        key = tuple(indices)
        memo = self._union_memo.get(key)
        if memo is None:
            def gen(s: int, ix=key) -> frozenset[int]:
                out: set[int] = set()
                for i in ix:
                    out |= self.enum_W(i, s).elements
                return frozenset(out)
            memo = self.register_builtin(gen, name=f"union:{key}")
            self._union_memo[key] = memo
        return memo


class _CachedGen:
    """Monotone cumulative generator with an entry-stage search."""

    def __init__(self, gen: Callable[[int], Iterable[int]]):
        self._gen = gen

    def snapshot(self, stage: int) -> frozenset[int]:
        return frozenset(self._gen(stage))

    def entry_stage(self, x: int, bound: int) -> int | None:
        if x not in self.snapshot(bound):
            return None
        lo, hi = 0, bound  # least t <= bound with x in snapshot(t)
        while lo < hi:
            mid = (lo + hi) // 2
            if x in self.snapshot(mid):
                hi = mid
            else:
                lo = mid + 1
        return lo


def _max_fuel(x: int, stage: int) -> int:
    """Largest f with <x, f> < stage, or -1."""
    if pair(x, 0) >= stage:
        return -1
    lo, hi = 0, stage
    while lo < hi:
        mid = (lo + hi + 1) // 2
        if pair(x, mid) < stage:
            lo = mid
        else:
            hi = mid - 1
    return lo
