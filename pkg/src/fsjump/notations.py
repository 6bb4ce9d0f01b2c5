"""A certified fragment of ordinal notations below omega^omega.

Notations are library-built only: 1 denotes 0, a power denotes a
successor, and a limit carries its fundamental sequence together with a
declared supremum that is spot-checked on a prefix (the supremum of a
black-box sequence is not computable from finitely many samples).  Raw
naturals claiming to be notations are never accepted.

Every notation carries its ordinal in Cantor normal form.  Arithmetic
(`add_O`, `double_O`) follows the standard structural recursions;
doubling is left multiplication, so 2.omega = omega and the certified
ordinal of a doubled limit equals the original (the strict-growth law
`a < 2a` holds exactly when the ordinal has a nonzero finite part).

Numeric codes follow the 1 / 2^code / 3*5^e convention.  Iterated powers
are power towers, so `code_int` gives up above a bit cap and `code_str`
renders the exact symbolic form instead.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from typing import Callable, Iterable

from .machine import Machine, MachineIndex
from .pairing import pair, unpair
from .relations import RelKind, StagedRelation
from .jumps import dotplus_jump

CODE_BIT_CAP = 4096
_LIMIT_SEARCH_SLACK = 64
_CERTIFY_PREFIX = 6


class NotCertified(ValueError):
    pass


# --- ordinals in Cantor normal form --------------------------------------


@dataclass(frozen=True)
class OrdinalCNF:
    """sum of omega^exp * coeff terms, exponents descending and finite."""

    terms: tuple[tuple[int, int], ...] = ()

    @staticmethod
    def from_nat(n: int) -> "OrdinalCNF":
        return OrdinalCNF(((0, n),)) if n else OrdinalCNF()

    @staticmethod
    def omega(exp: int = 1, coeff: int = 1) -> "OrdinalCNF":
        return OrdinalCNF(((exp, coeff),))

    def is_zero(self) -> bool:
        return not self.terms

    def finite_part(self) -> int:
        if self.terms and self.terms[-1][0] == 0:
            return self.terms[-1][1]
        return 0

    def limit_part(self) -> "OrdinalCNF":
        if self.terms and self.terms[-1][0] == 0:
            return OrdinalCNF(self.terms[:-1])
        return self

    def is_limit(self) -> bool:
        return not self.is_zero() and self.finite_part() == 0

    def successor(self) -> "OrdinalCNF":
        return self.add(OrdinalCNF.from_nat(1))

    def add(self, other: "OrdinalCNF") -> "OrdinalCNF":
        if other.is_zero():
            return self
        lead = other.terms[0][0]
        kept = [t for t in self.terms if t[0] > lead]
        merged = list(other.terms)
        for e, c in self.terms:
            if e == lead:
                merged[0] = (lead, c + merged[0][1])
        return OrdinalCNF(tuple(kept) + tuple(merged))

    def double_left(self) -> "OrdinalCNF":
        """2 * alpha: only the finite part doubles."""
        n = self.finite_part()
        return self.limit_part().add(OrdinalCNF.from_nat(2 * n))

    def plus_omega(self) -> "OrdinalCNF":
        """Least limit ordinal strictly above self."""
        return self.limit_part().add(OrdinalCNF.omega())

    def key(self) -> tuple:
        return self.terms

    def __lt__(self, other: "OrdinalCNF") -> bool:
        return self.key() < other.key()

    def __le__(self, other: "OrdinalCNF") -> bool:
        return self.key() <= other.key()

    def __str__(self) -> str:
        if not self.terms:
            return "0"
        parts = []
        for e, c in self.terms:
            if e == 0:
                parts.append(str(c))
            else:
                base = "w" if e == 1 else f"w^{e}"
                parts.append(base if c == 1 else f"{base}*{c}")
        return " + ".join(parts)


# --- notations ------------------------------------------------------------


class Notation:
    """Certified notation: shape one | power(base) | limit(fundamental)."""

    __slots__ = ("shape", "base", "_fundamental", "_fund_memo", "ordinal",
                 "expr", "_index_memo")

    def __init__(self, shape: str, ordinal: OrdinalCNF, expr: str,
                 base: "Notation | None" = None,
                 fundamental: "Callable[[int], Notation] | None" = None):
        self.shape = shape
        self.base = base
        self._fundamental = fundamental
        self._fund_memo: dict[int, Notation] = {}
        self.ordinal = ordinal
        self.expr = expr
        self._index_memo: dict[int, MachineIndex] = {}

    def fundamental(self, i: int) -> "Notation":
        if self.shape != "limit":
            raise NotCertified("only limits have fundamental sequences")
        got = self._fund_memo.get(i)
        if got is None:
            got = self._fundamental(i)
            self._fund_memo[i] = got
        return got

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, Notation):
            return NotImplemented
        if self.shape != other.shape:
            return False
        if self.shape == "one":
            return True
        if self.shape == "power":
            return self.base == other.base
        return self is other

    def __hash__(self) -> int:
        if self.shape == "one":
            return hash("one")
        if self.shape == "power":
            return hash(("power", self.base))
        return id(self)

    def __repr__(self) -> str:
        return f"<Notation {self.expr} |.|={self.ordinal}>"

    def limit_index(self, machine: Machine) -> MachineIndex:
        """Index whose evaluation yields codes of the fundamental sequence.

        Columns whose codes exceed the bit cap diverge honestly.
        """
        if self.shape != "limit":
            raise NotCertified("only limits carry a sequence index")
        key = id(machine)
        memo = self._index_memo.get(key)
        if memo is None:
            def native(args: tuple[int, ...], remaining: int):
                (i,) = args
                code = code_int(self.fundamental(i))
                if code is None or code.bit_length() > remaining:
                    return None
                return code, max(1, code.bit_length())

            memo = machine.register_native(f"fund:{self.expr}", 1, native)
            self._index_memo[key] = memo
        return memo


_ONE = Notation("one", OrdinalCNF(), "one")


def one() -> Notation:
    return _ONE


def p(a: Notation) -> Notation:
    return Notation("power", a.ordinal.successor(), f"p({a.expr})", base=a)


def p_iter(a: Notation, k: int) -> Notation:
    for _ in range(k):
        a = p(a)
    return a


def lim(fundamental: Callable[[int], Notation], sup: OrdinalCNF,
        expr: str = "lim", check_prefix: int = _CERTIFY_PREFIX) -> Notation:
    """Certify a limit notation against its declared supremum.

    The prefix check requires strictly <_O increasing entries with
    strictly increasing ordinals below a limit-shaped sup.
    """
    if not sup.is_limit():
        raise NotCertified(f"declared supremum {sup} is not a limit ordinal")
    note = Notation("limit", sup, expr, fundamental=fundamental)
    prev: Notation | None = None
    for i in range(check_prefix):
        cur = note.fundamental(i)
        if not cur.ordinal < sup:
            raise NotCertified(f"fundamental({i}) reaches the declared sup")
        if prev is not None:
            if not prev.ordinal < cur.ordinal or not lt_O(prev, cur):
                raise NotCertified(f"fundamental sequence not strictly increasing at {i}")
        prev = cur
    return note


def ord_of(a: Notation) -> OrdinalCNF:
    return a.ordinal


# --- order ----------------------------------------------------------------


def lt_O(a: Notation, b: Notation) -> bool:
    """Structural notation order; total on comparable certified notations.

    Distinct limit notations of the same ordinal are incomparable and
    return False both ways.  The search inside a limit's fundamental
    sequence stops a bounded number of columns past the first ordinal
    crossing.
    """
    if not a.ordinal < b.ordinal:
        return False
    if b.shape == "power":
        return a == b.base or lt_O(a, b.base)
    if b.shape == "limit":
        budget = _LIMIT_SEARCH_SLACK
        for i in itertools.count():
            f = b.fundamental(i)
            if a == f or lt_O(a, f):
                return True
            if a.ordinal < f.ordinal:
                budget -= 1
                if budget <= 0:
                    return False
        raise AssertionError("unreachable")
    return False  # b = one has empty strict downset


def le_O(a: Notation, b: Notation) -> bool:
    return a == b or lt_O(a, b)


# --- arithmetic -----------------------------------------------------------

# Limit results are memoized so repeated sums yield the *same* notation;
# freshly minted limits of equal ordinal would be <_O-incomparable.
_add_memo: dict[tuple[Notation, Notation], Notation] = {}
_double_memo: dict[Notation, Notation] = {}


def add_O(a: Notation, b: Notation) -> Notation:
    if b.shape == "one":
        return a
    if b.shape == "power":
        return p(add_O(a, b.base))
    memo = _add_memo.get((a, b))
    if memo is None:
        memo = lim(lambda i: add_O(a, b.fundamental(i)),
                   a.ordinal.add(b.ordinal),
                   expr=f"add({a.expr},{b.expr})")
        _add_memo[(a, b)] = memo
    return memo


def double_O(a: Notation) -> Notation:
    """Left multiplication by 2; the base case 2*0 = 0 forces one -> one."""
    if a.shape == "one":
        return a
    if a.shape == "power":
        return p(p(double_O(a.base)))
    memo = _double_memo.get(a)
    if memo is None:
        memo = lim(lambda i: double_O(a.fundamental(i)),
                   a.ordinal.double_left(),
                   expr=f"double({a.expr})")
        _double_memo[a] = memo
    return memo


# --- standard limits ------------------------------------------------------

_omega_times_memo: dict[int, Notation] = {}
_omega_squared: Notation | None = None


def omega_notation() -> Notation:
    return omega_times(1)


def omega_times(n: int) -> Notation:
    if n < 1:
        raise NotCertified("omega_times needs n >= 1")
    memo = _omega_times_memo.get(n)
    if memo is not None:
        return memo
    if n == 1:
        note = lim(lambda i: p_iter(one(), i), OrdinalCNF.omega(),
                   expr="omega")
    else:
        prev = omega_times(n - 1)
        note = lim(lambda i: p_iter(prev, i), OrdinalCNF.omega(1, n),
                   expr=f"omega*{n}")
    _omega_times_memo[n] = note
    return note


def omega_squared() -> Notation:
    global _omega_squared
    if _omega_squared is None:
        _omega_squared = lim(lambda i: omega_times(i + 1),
                             OrdinalCNF.omega(2), expr="omega^2")
    return _omega_squared


# --- numeric codes --------------------------------------------------------


def code_int(a: Notation, bit_cap: int = CODE_BIT_CAP) -> int | None:
    """The literal numeric code, or None once it exceeds the bit cap.

    Limit codes are 3 * 5^e with e a machine index, which is never
    materializable, so limits always report None here.
    """
    if a.shape == "one":
        return 1
    if a.shape == "power":
        inner = code_int(a.base, bit_cap)
        if inner is None or inner >= bit_cap:
            return None
        return 1 << inner
    return None


def code_str(a: Notation, machine: Machine | None = None) -> str:
    if a.shape == "one":
        return "1"
    if a.shape == "power":
        return f"2^({code_str(a.base, machine)})"
    if machine is not None:
        return f"3*5^{a.limit_index(machine)}"
    return f"3*5^e[{a.expr}]"


# --- constructor-text parser ----------------------------------------------


def parse_notation(text: str) -> Notation:
    """Parse library constructor text: one, p(x), omega, omega*N, omega^2,
    add(x,y), double(x)."""
    text = text.strip()
    if text == "one":
        return one()
    if text in ("omega", "limit-omega"):
        return omega_notation()
    if text == "omega^2":
        return omega_squared()
    if text.startswith("omega*"):
        return omega_times(int(text[len("omega*"):]))
    for head, builder in (("p", lambda xs: p(xs[0])),
                          ("double", lambda xs: double_O(xs[0])),
                          ("add", lambda xs: add_O(xs[0], xs[1]))):
        if text.startswith(head + "(") and text.endswith(")"):
            inner = text[len(head) + 1:-1]
            parts = _split_args(inner)
            want = 2 if head == "add" else 1
            if len(parts) != want:
                raise NotCertified(f"{head} takes {want} argument(s)")
            return builder([parse_notation(q) for q in parts])
    raise NotCertified(f"cannot parse notation {text!r}")


def _split_args(text: str) -> list[str]:
    parts, depth, cur = [], 0, []
    for ch in text:
        if ch == "," and depth == 0:
            parts.append("".join(cur))
            cur = []
            continue
        if ch == "(":
            depth += 1
        elif ch == ")":
            depth -= 1
        cur.append(ch)
    parts.append("".join(cur))
    return [q.strip() for q in parts if q.strip()]


# --- the transfinite jump tower -------------------------------------------


def transfinite_jump(rel: StagedRelation, a: Notation, machine: Machine,
                     truncation: int) -> StagedRelation:
    """E lifted along the notation; truncation bounds windows and columns.

    At a limit, pair codes <i, x> with i at or beyond the truncation are
    related only reflexively and the relation is flagged as truncated.
    """
    if a.shape == "one":
        return rel
    if a.shape == "power":
        prev = transfinite_jump(rel, a.base, machine, truncation)
        return dotplus_jump(prev, machine, window_bound=truncation)
    columns = [transfinite_jump(rel, a.fundamental(i), machine, truncation)
               for i in range(truncation)]

    def approx(x: int, y: int, s: int) -> bool:
        i, xv = unpair(x)
        j, yv = unpair(y)
        if i != j or i >= truncation:
            return False
        return columns[i].at(xv, yv, s)

    return StagedRelation(RelKind.PI2, approx, support_bound=truncation,
                          label=f"({rel.label})^+{a.expr}",
                          note=f"columns >= {truncation} truncated to empty")


@dataclass(frozen=True)
class LiftMap:
    """Composable reduction along a <_O path, with its provenance."""

    fn: Callable[[int], int]
    description: str

    def __call__(self, x: int) -> int:
        return self.fn(x)


def uniform_lift(a: Notation, b: Notation, machine: Machine) -> LiftMap:
    """The canonical reduction of the truncated E^{+a} into E^{+b}.

    Built by composing singleton embeddings (one per power step) with
    column injections (one per limit passed through).
    """
    if not lt_O(a, b):
        raise NotCertified(f"{a.expr} is not <_O {b.expr}")
    return _lift_path(a, b, machine)


def _lift_path(a: Notation, b: Notation, machine: Machine) -> LiftMap:
    if b.shape == "power":
        if a == b.base:
            return LiftMap(machine.singleton_index, "embed")
        inner = _lift_path(a, b.base, machine)
        return LiftMap(lambda x: machine.singleton_index(inner.fn(x)),
                       f"embed . {inner.description}")
    if b.shape == "limit":
        i = 0
        while not le_O(a, b.fundamental(i)):
            i += 1
        target = b.fundamental(i)
        if a == target:
            return LiftMap(lambda x, c=i: pair(c, x), f"inject@{i}")
        inner = _lift_path(a, target, machine)
        return LiftMap(lambda x, c=i: pair(c, inner.fn(x)),
                       f"inject@{i} . {inner.description}")
    raise NotCertified("no path descends below one")
