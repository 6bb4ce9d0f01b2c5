"""Strong set reductions and the combinators that climb the hierarchy.

A witness (h, i, j) classifies membership in a set by which of two jump
classes the image lands in: h(x) falls with j when x is in the set and
with i when it is not, and W_i is closure-contained in W_j.  The
`level` notation says at which iterate of the jump over the base
relation the classification happens: level p(one) compares plain set
closures, each combinator application adds jumps.

Combinators follow the transfer lemmas:

  ssr_sigma1       c.e. sets classify at one jump (empty set vs omega)
  ssr_negate       complement, one jump up, via the superset families
  ssr_union        effective union, one jump up, via column injection
  ssr_sigma2_step  exists-forall step over initial-segment sections
  ssr_transport    pushforward along a reduction of the base
  ssr_to_er_reduction   a classified equivalence relation reduces to the jump

`ssr_negate` enumerates superset families by union padding (indices of
W_pool + W_h(x)); this is exactly the c.e. supersets up to closure and
needs no revocation.

Everything is desk-scale: windows, truncations, and budgets are explicit,
and every verification is bounded evidence.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace
from typing import Callable, Iterable, Sequence

from .machine import Machine, MachineIndex
from .notations import Notation, lt_O, one, p, p_iter, double_O
from .pairing import pair, tuple_code, unpair
from .relations import StagedRelation, closure, id_relation


@dataclass
class SSRWitness:
    h: Callable[[int], MachineIndex]
    i: MachineIndex
    j: MachineIndex
    level: Notation
    base: StagedRelation
    machine: Machine
    dom: "Dom" = None  # set by every constructor; images are keyed through it
    label: str = "witness"
    strict_checked: bool = False

    def describe(self) -> str:
        return (f"ssr {self.label}: level {self.level.expr} over {self.base.label}"
                f" (i={self.i}, j={self.j})")


# --- canonical keys through the domain structure ----------------------------


@dataclass(frozen=True)
class Dom:
    """Shape of the domain a witness's image sets enumerate over.

    points          bottom elements, canonicalized through the window
    jump(inner)     indices of sets of inner-domain elements
    cross(n, inner) pair codes <c, u> with c < n and u in the inner domain

    Enumeration lag makes raw snapshots of equal sets differ forever, so
    jump keys keep exactly the members the inner domain accepts (the
    window at the bottom, in-range columns at a crossing) and compare
    those canonical extents.
    """

    kind: str
    inner: "Dom | None" = None
    cols: int | None = None

    def accepts(self, u: int, window) -> bool:
        if self.kind == "points":
            return u in window
        if self.kind == "cross":
            c, v = unpair(u)
            return c < self.cols and self.inner.accepts(v, window)
        return True

    def key(self, machine: Machine, u: int, stage: int, window):
        if self.kind == "points":
            return u
        if self.kind == "cross":
            c, v = unpair(u)
            return c, self.inner.key(machine, v, stage, window)
        members = machine.enum_W(u, stage).elements
        return frozenset(self.inner.key(machine, m, stage, window)
                         for m in members if self.inner.accepts(m, window))


POINTS = Dom("points")


def jump_dom(inner: Dom) -> Dom:
    return Dom("jump", inner=inner)


def cross_dom(cols: int, inner: Dom) -> Dom:
    return Dom("cross", inner=inner, cols=cols)


def check_ssr(w: SSRWitness, membership: Callable[[int], bool],
              points: Iterable[int], enum_stage: int,
              window: Sequence[int] | None = None) -> tuple[bool, list[dict]]:
    """Exact classification check on a finite battery (identity base).

    Returns (ok, failures); also verifies the two reference classes are
    distinct and marks the witness strict when they are.
    """
    window = window if window is not None else range(16)
    machine = w.machine

    def key(u: int):
        return w.dom.key(machine, u, enum_stage, window)

    failures: list[dict] = []
    key_i, key_j = key(w.i), key(w.j)
    if key_i == key_j:
        failures.append({"point": None, "why": "reference classes coincide"})
    else:
        w.strict_checked = True
    for x in points:
        got = key(w.h(x))
        want = key_j if membership(x) else key_i
        if got != want:
            failures.append({"point": x, "in_set": membership(x),
                             "why": "image landed with the wrong reference"})
    return not failures, failures


# --- base case --------------------------------------------------------------


def ssr_sigma1(machine: Machine, s_index: MachineIndex,
               label: str | None = None) -> SSRWitness:
    """Any c.e. set classifies at one jump: empty set vs omega."""
    i = machine.empty_index()
    j = machine.omega_index()
    memo: dict[int, MachineIndex] = {}
    entry: dict[int, int | None] = {}

    def h(x: int) -> MachineIndex:
        got = memo.get(x)
        if got is None:
            def gen(t: int, x=x) -> frozenset[int]:
                u = entry.get(x, -1)
                if u is None or (u >= 0 and u <= t):
                    return frozenset(range(t - u)) if u is not None else frozenset()
                for s in range(t + 1):
                    if x in machine.enum_W(s_index, s).elements:
                        entry[x] = s
                        return frozenset(range(t - s))
                if t >= _SIGMA1_SETTLE:
                    entry[x] = None
                return frozenset()
            got = machine.register_builtin(gen, name=f"s1[{s_index}]@{x}")
            memo[x] = got
        return got

    return SSRWitness(h, i, j, p(one()), id_relation(), machine,
                      dom=jump_dom(POINTS), label=label or f"sigma1[{s_index}]")


_SIGMA1_SETTLE = 1 << 20  # past this stage a silent element is pinned absent


# --- transport and negation -------------------------------------------------


def ssr_transport(w: SSRWitness, g: Callable[[int], int], depth: int,
                  new_base: StagedRelation, machine: Machine | None = None,
                  new_dom: "Dom | None" = None,
                  label: str = "transported") -> SSRWitness:
    """Pushforward along a verified reduction g of the base relation.

    depth 1 moves sets elementwise; depth 2 moves families by re-indexing
    their member sets.
    """
    machine = machine or w.machine
    if depth == 1:
        def push(idx: MachineIndex) -> MachineIndex:
            return machine.image_index(idx, g, name=f"push:{idx}")
        pushed: dict[int, MachineIndex] = {}
    elif depth == 2:
        inner: dict[int, MachineIndex] = {}

        def push_member(m: int) -> int:
            got = inner.get(m)
            if got is None:
                got = machine.image_index(m, g, name=f"push-m:{m}")
                inner[m] = got
            return got

        def push(idx: MachineIndex) -> MachineIndex:
            return machine.register_builtin(
                lambda t, idx=idx: frozenset(push_member(m)
                                             for m in machine.enum_W(idx, t).elements),
                name=f"push-fam:{idx}")
        pushed = {}
    else:
        raise ValueError("depth must be 1 or 2")

    def new_h(x: int) -> MachineIndex:
        got = pushed.get(x)
        if got is None:
            got = push(w.h(x))
            pushed[x] = got
        return got

    return SSRWitness(new_h, push(w.i), push(w.j), w.level, new_base, machine,
                      dom=new_dom or w.dom, label=f"{label}({w.label})")


def superset_pool(machine: Machine, pool_bound: int) -> tuple[MachineIndex, ...]:
    """All subsets of [0, pool_bound) plus omega, as indices."""
    subsets = []
    for mask in range(1 << pool_bound):
        subsets.append(machine.finite_set_index(
            frozenset(b for b in range(pool_bound) if mask >> b & 1)))
    return tuple(subsets) + (machine.omega_index(),)


def ssr_negate(w: SSRWitness, pool_bound: int = 3,
               label: str = "negate") -> SSRWitness:
    """Complement classification, one jump up, via superset families.

    The pool carries the witness's own reference sets: supersets of the
    larger reference must re-appear among supersets of the smaller one,
    and the padding union that realizes them needs both on hand.
    """
    machine = w.machine
    pool = superset_pool(machine, pool_bound) + (w.i, w.j)

    def superset_family(idx: MachineIndex) -> MachineIndex:
        return machine.finite_set_index(
            machine.union_index((member, idx)) for member in pool)

    fam_of_i = superset_family(w.i)
    fam_of_j = superset_family(w.j)
    memo: dict[int, MachineIndex] = {}

    def g(x: int) -> MachineIndex:
        got = memo.get(x)
        if got is None:
            got = superset_family(w.h(x))
            memo[x] = got
        return got

    return SSRWitness(g, fam_of_j, fam_of_i, p(w.level), w.base, machine,
                      dom=jump_dom(w.dom), label=f"{label}({w.label})")


# --- union over a uniform family --------------------------------------------


def ssr_union(family: Callable[[int], SSRWitness], count: int,
              machine: Machine, label: str = "union") -> SSRWitness:
    """B(n) = exists k < count with A_k(n); one jump up by column injection.

    Requires every member witness to sit at the same level over the
    identity; the cross-with-Id coding stays inside the identity base.
    """
    members = [family(k) for k in range(count)]
    level = members[0].level
    for wk in members:
        if wk.level != level:
            raise ValueError("union needs a uniformly levelled family")

    def inject(idx: MachineIndex, col: int) -> MachineIndex:
        return machine.column_index(idx, col)

    i_cols = [inject(wk.i, x) for x, wk in enumerate(members)]
    j_cols = [inject(wk.j, x) for x, wk in enumerate(members)]
    v_sets = [machine.union_index((i_cols[x], *(j_cols[y] for y in range(count) if y != x)))
              for x in range(count)]
    all_j = machine.union_index(tuple(j_cols))
    a_ref = machine.finite_set_index(v_sets)
    b_ref = machine.finite_set_index(tuple(v_sets) + (all_j,))
    memo: dict[int, MachineIndex] = {}

    def f(n: int) -> MachineIndex:
        got = memo.get(n)
        if got is None:
            tops = [machine.union_index((v_sets[x], inject(members[x].h(n), x)))
                    for x in range(count)]
            got = machine.finite_set_index(tuple(v_sets) + tuple(tops))
            memo[n] = got
        return got

    return SSRWitness(f, a_ref, b_ref, p(level), members[0].base, machine,
                      dom=jump_dom(jump_dom(cross_dom(count, members[0].dom.inner))),
                      label=f"{label}[{count}]")


# --- the exists-forall step --------------------------------------------------


def ssr_sigma2_step(w: SSRWitness, sections_initial: Callable[[int, int], bool],
                    count: int, p_max: int, machine: Machine,
                    spot_checks: Sequence[tuple[int, int]] = ((0, 0), (1, 1)),
                    label: str = "sigma2-step") -> Callable[[int], SSRWitness] | SSRWitness:
    """B(n) = exists p forall q A(<n,p,q>), assuming initial q-sections.

    `sections_initial(n, p)` certifies that {q : A(<n,p,q>)} is an initial
    segment of omega; it is spot-checked on the supplied sample and
    rejected when violated.
    """
    for n, pp in spot_checks:
        if not sections_initial(n, pp):
            raise ValueError(f"initial-segment certificate refused at (n,p)=({n},{pp})")

    def inject(idx: MachineIndex, col: int) -> MachineIndex:
        return machine.column_index(idx, col)

    i_cols = [inject(w.i, x) for x in range(count)]
    j_cols = [inject(w.j, x) for x in range(count)]
    # every ramp keeps a nonempty i-tail; the all-j set is the b-side marker
    ramps = [machine.union_index(tuple(j_cols[:y]) + tuple(i_cols[y:]))
             for y in range(count)]
    full_j = machine.union_index(tuple(j_cols))
    a_ref = machine.finite_set_index(ramps)
    b_ref = machine.finite_set_index(tuple(ramps) + (full_j,))
    memo: dict[int, MachineIndex] = {}

    def g(n: int) -> MachineIndex:
        got = memo.get(n)
        if got is None:
            diagonals = [machine.union_index(
                tuple(inject(w.h(tuple_code((n, pp, x))), x) for x in range(count)))
                for pp in range(p_max)]
            got = machine.finite_set_index(tuple(ramps) + tuple(diagonals))
            memo[n] = got
        return got

    return SSRWitness(g, a_ref, b_ref, p(p(w.level)), w.base, machine,
                      dom=jump_dom(jump_dom(cross_dom(count, w.dom.inner))),
                      label=f"{label}({w.label})")


# --- from a classified relation to an equivalence-relation reduction --------


@dataclass(frozen=True)
class ErReduction:
    fn: Callable[[int], MachineIndex]
    level: Notation
    description: str
    dom: "Dom | None" = None

    def __call__(self, x: int) -> MachineIndex:
        return self.fn(x)


def ssr_to_er_reduction(w: SSRWitness, truncation: int, machine: Machine,
                        polarity: str = "set",
                        absorb: Callable[[int], int] | None = None) -> ErReduction:
    """Turn a witness for {<x,y> : x R y} (or its complement) into a
    reduction of R to the jump at the witness's level.

    The image of x is the union over columns y of the column-injected
    witness image at <x, y>; `absorb` is the cross-absorption reduction
    mapping pair codes back into the base (identity for Id).
    """
    absorb = absorb or (lambda u: u)
    memo: dict[int, MachineIndex] = {}

    def fn(x: int) -> MachineIndex:
        got = memo.get(x)
        if got is None:
            cols = tuple(machine.column_index(w.h(pair(x, y)), y)
                         for y in range(truncation))
            union = machine.union_index(cols)
            got = machine.image_index(union, absorb, name=f"er-image:{x}")
            memo[x] = got
        return got

    return ErReduction(fn, w.level, f"er-reduction[{polarity}] from {w.label}",
                       dom=jump_dom(cross_dom(truncation, w.dom.inner)))


# --- sigma formulas -----------------------------------------------------------


@dataclass(frozen=True)
class SigmaFormula:
    """Prenex formula tree with budget-decidable atoms.

    An atom tests membership of the code of the full in-scope variable
    tuple in a c.e. set, decided at the evaluation budget; co_atom is its
    complement.  Unbounded quantifiers range over the evaluation window.
    The certified level counts alternating unbounded quantifier blocks.
    """

    node: str  # exists | forall | bounded_forall | atom | co_atom
    index: MachineIndex | None = None
    bound: int | None = None
    body: "SigmaFormula | None" = None

    def evaluate(self, machine: Machine, args: tuple[int, ...], window: int,
                 budget: int) -> bool:
        if self.node == "atom":
            return machine.step_eval(self.index, tuple_code(args), budget).halted
        if self.node == "co_atom":
            return not machine.step_eval(self.index, tuple_code(args), budget).halted
        if self.node == "uncurry":
            a, b = unpair(args[0])
            return self.body.evaluate(machine, (a, b) + args[1:], window, budget)
        if self.node == "exists":
            return any(self.body.evaluate(machine, args + (v,), window, budget)
                       for v in range(window))
        if self.node == "forall":
            return all(self.body.evaluate(machine, args + (v,), window, budget)
                       for v in range(window))
        return all(self.body.evaluate(machine, args + (v,), window, budget)
                   for v in range(self.bound))

    def blocks(self) -> tuple[str, int]:
        """(leading quantifier kind, alternation depth); atoms are depth 0."""
        if self.node in ("atom", "co_atom"):
            return "none", 0
        if self.node in ("bounded_forall", "uncurry"):
            return self.body.blocks()
        kind, depth = self.body.blocks()
        mine = "S" if self.node == "exists" else "P"
        if kind == "none":
            return mine, 1
        if kind == mine:
            return mine, depth
        return mine, depth + 1

    def level_notation(self) -> Notation:
        return p_iter(one(), self.blocks()[1])

    def dual(self) -> "SigmaFormula":
        if self.node == "atom":
            return replace(self, node="co_atom")
        if self.node == "co_atom":
            return replace(self, node="atom")
        if self.node == "exists":
            return SigmaFormula("forall", body=self.body.dual())
        if self.node == "forall":
            return SigmaFormula("exists", body=self.body.dual())
        if self.node == "uncurry":
            return SigmaFormula("uncurry", body=self.body.dual())
        return SigmaFormula("bounded_forall", bound=self.bound,
                            body=self.body.dual())

    def to_text(self) -> str:
        if self.node == "atom":
            return f"in[{self.index}]"
        if self.node == "co_atom":
            return f"out[{self.index}]"
        if self.node == "uncurry":
            return f"(split {self.body.to_text()})"
        if self.node == "bounded_forall":
            return f"(all<{self.bound} {self.body.to_text()})"
        head = "some" if self.node == "exists" else "all"
        return f"({head} {self.body.to_text()})"


def atom(index: MachineIndex) -> SigmaFormula:
    return SigmaFormula("atom", index=index)


def co_atom(index: MachineIndex) -> SigmaFormula:
    return SigmaFormula("co_atom", index=index)


def exists(body: SigmaFormula) -> SigmaFormula:
    return SigmaFormula("exists", body=body)


def forall(body: SigmaFormula) -> SigmaFormula:
    return SigmaFormula("forall", body=body)


def bounded_forall(bound: int, body: SigmaFormula) -> SigmaFormula:
    return SigmaFormula("bounded_forall", bound=bound, body=body)


def uncurry(body: SigmaFormula) -> SigmaFormula:
    """View a two-variable formula as a formula of the pair code."""
    return SigmaFormula("uncurry", body=body)


def _float_exists(phi: SigmaFormula) -> SigmaFormula:
    """Rewrite uncurry(exists X) as exists(uncurry X) at the root.

    Splitting the first variable commutes with quantifying the last one,
    so the leading existential can surface through any uncurry prefix.
    """
    if phi.node != "uncurry":
        return phi
    body = _float_exists(phi.body)
    if body.node == "exists":
        return SigmaFormula("exists", body=SigmaFormula("uncurry", body=body.body))
    return SigmaFormula("uncurry", body=body)


def formula_extension(machine: Machine, phi: SigmaFormula, window: int,
                      budget: int) -> frozenset[int]:
    return frozenset(n for n in range(window)
                     if phi.evaluate(machine, (n,), window, budget))


def formulas_equal(machine: Machine, left: SigmaFormula, right: SigmaFormula,
                   window: int, budget: int) -> bool:
    """Extensional equality over the window; syntactic equality fast path."""
    if left == right:
        return True
    return (formula_extension(machine, left, window, budget)
            == formula_extension(machine, right, window, budget))


def ce_formula(machine: Machine, set_index: MachineIndex,
               stage: int) -> SigmaFormula:
    """The canonical one-quantifier formula whose extension is W_set."""
    graph = machine.image_index(set_index, lambda n: pair(n, 0),
                                name=f"graph:{set_index}")
    return exists(atom(graph))


# --- the tower ---------------------------------------------------------------


@dataclass
class TowerResult:
    level: Notation
    witness: SSRWitness
    trace: list[str] = field(default_factory=list)


def hyp_tower(c: Notation, phi, machine: Machine, window: int = 8,
              budget: int = 2048, union_width: int | None = None,
              pool_bound: int = 3,
              points: Sequence[int] | None = None) -> TowerResult:
    """Classify a set given at level c, returning the jump notation H(c)
    and the witness into the identity tower at H(c).

    Successor levels take a SigmaFormula phi = exists(...); a limit level
    takes a callable k -> SigmaFormula at the fundamental level.  The
    recursion is negate-then-union, so H(p(c')) = p(p(H(c'))), and at
    limits H(c) = p(p(lim_k H(fund_k))).

    `points` are the domain elements the witness will be probed on; the
    recursion probes the pair codes <n, k> of each point n against every
    union column k, so the sparse closure stays small.
    """
    width = union_width if union_width is not None else window
    probe = list(points) if points is not None else list(range(window))

    if c.shape == "power" and c.base.shape == "one":
        if not isinstance(phi, SigmaFormula):
            raise TypeError("successor levels take a formula")
        kind, depth = phi.blocks()
        if depth > 1 or kind == "P":
            raise ValueError(f"level-one step got a depth-{depth} {kind}-formula")
        extension = tuple(sorted(n for n in probe
                                 if phi.evaluate(machine, (n,), window, budget)))
        # elements enter by position, so entry stages stay small even for
        # large pair codes
        s_index = machine.register_builtin(
            lambda t, ext=extension: frozenset(ext[:t]),
            name=f"s1-ext:{phi.to_text()[:40]}")
        w = ssr_sigma1(machine, s_index, label=f"s1({phi.to_text()[:40]})")
        return TowerResult(p(one()), w, [f"base: {phi.to_text()}"])

    if c.shape == "power":
        if not isinstance(phi, SigmaFormula):
            raise TypeError("successor levels take a formula")
        phi = _float_exists(phi)
        if phi.node != "exists":
            raise TypeError("successor levels take an exists-rooted formula")
        inner_phi = uncurry(phi.body.dual())
        inner_points = sorted({pair(n, k) for n in probe for k in range(width)})
        inner = hyp_tower(c.base, inner_phi, machine, window, budget,
                          union_width, pool_bound, points=inner_points)
        negated = ssr_negate(inner.witness, pool_bound=pool_bound)

        def member(k: int) -> SSRWitness:
            return replace(negated, h=lambda n, k=k: negated.h(pair(n, k)),
                           label=f"{negated.label}@col{k}")

        union = ssr_union(member, width, machine)
        level = p(p(inner.level))
        trace = inner.trace + [f"negate -> {p(inner.level).expr}",
                               f"union[{width}] -> {level.expr}"]
        return TowerResult(level, union, trace)

    if c.shape == "limit":  # noqa: SIM102 - structured to mirror the lemmas
        if isinstance(phi, SigmaFormula):
            raise TypeError("limit levels take a uniform family k -> formula")
        parts = [hyp_tower(c.fundamental(k), phi(k), machine, window, budget,
                           union_width, pool_bound, points=probe)
                 for k in range(width)]
        for part in parts:
            if part.level.shape != "power":
                raise ValueError("tower levels are successor notations")
        # the aligned limit enumerates the predecessor levels: a member
        # witness's sets push forward elementwise into its column
        from .notations import lim as lim_notation
        sup = parts[-1].level.base.ordinal.plus_omega()

        def fund(k: int, parts=tuple(parts)) -> Notation:
            if k < len(parts):
                return parts[k].level.base
            return p_iter(parts[-1].level.base, k - len(parts) + 1)

        a_lim = lim_notation(fund, sup, expr=f"H-tower({c.expr})")

        def aligned(k: int) -> SSRWitness:
            wk = parts[k].witness
            lifted = ssr_transport(wk, lambda u, kk=k: pair(kk, u), depth=1,
                                   new_base=wk.base,
                                   new_dom=jump_dom(cross_dom(width, wk.dom.inner)),
                                   label=f"lift@{k}")
            return replace(lifted, level=p(a_lim))

        union = ssr_union(aligned, width, machine)
        level = p(p(a_lim))
        trace = [t for part in parts for t in part.trace]
        trace.append(f"limit align + union -> {level.expr}")
        return TowerResult(level, union, trace)

    raise ValueError("the tower starts at level one jump")


# --- equality of sigma-definable sets ----------------------------------------


def sigma_eq_reduction(a: Notation, truncation: int, machine: Machine,
                       window: int = 8, budget: int = 2048) -> Callable[[int], SigmaFormula]:
    """Map jump-tower elements to formulas whose extensional equality
    mirrors tower equivalence; output formulas sit at level double of a.

    Base: n goes to the formula for {n}.  Successor: i goes to the padded
    two-quantifier formula for "some previously-indexed set equal to mine
    comes from W_i".  Limit: elements route through their column's map and
    get re-levelled.  On pure successor towers the structural level equals
    the doubled notation exactly.
    """
    if a.shape == "one":
        def base_map(n: int) -> SigmaFormula:
            return atom(machine.finite_set_index({n}))
        return base_map

    if a.shape == "power":
        prev = sigma_eq_reduction(a.base, truncation, machine, window, budget)
        pool = list(range(window))
        prev_formulas = {m: prev(m) for m in pool}
        pad_depth = 2 * len(_power_chain(a)) - 2  # blocks below the leading pair
        memo: dict[int, SigmaFormula] = {}

        def succ_map(i: int) -> SigmaFormula:
            got = memo.get(i)
            if got is not None:
                return got
            w_i = machine.enum_W(i, budget).elements
            members = {m for m in pool
                       if any(k in w_i and formulas_equal(machine, prev_formulas[m],
                                                          prev_formulas[k], window, budget)
                              for k in pool)}
            codes = {tuple_code((m, v1, v2))
                     for m in members for v1 in range(window) for v2 in range(window)}
            kernel = machine.finite_set_index(codes)
            body: SigmaFormula = atom(kernel)
            got = exists(forall(_pad(body, pad_depth)))
            memo[i] = got
            return got

        return succ_map

    prev_maps = [sigma_eq_reduction(a.fundamental(k), truncation, machine,
                                    window, budget)
                 for k in range(truncation)]

    def limit_map(u: int) -> SigmaFormula:
        col, v = unpair(u)
        if col >= truncation:
            return atom(machine.empty_index())
        return prev_maps[col](v)

    return limit_map


def _power_chain(a: Notation) -> list[Notation]:
    out = [a]
    while out[-1].shape == "power":
        out.append(out[-1].base)
    return out


def _pad(body: SigmaFormula, depth: int) -> SigmaFormula:
    # alternating quantifier padding, innermost first
    for d in range(depth):
        body = exists(body) if d % 2 == 0 else forall(body)
    return body


# --- a Pi01 relation classifying a given Sigma02 set -------------------------


def pi1_relation_for_sigma2(machine: Machine,
                            a_approx: Callable[[int, int], bool],
                            x_points: Sequence[int], stage_budget: int,
                            label: str = "pi1-for-sigma2"
                            ) -> tuple[StagedRelation, SSRWitness, dict]:
    """Build a co-c.e.-style relation Y and a witness that the set
    approximated by a_approx (true at cofinitely many stages) classifies
    into the jump of Y.

    The class of 0 holds one live mediator per point while the
    approximation says yes; a retraction expels the mediator into a
    permanent singleton.  All images share one global enumeration of the
    confirmed complement (odds plus expelled mediators), so a retracted
    point's image closes to exactly the complement.
    """
    link_spans: dict[int, list[tuple[int, int | None]]] = {}  # z -> [(from, to)]
    own: dict[int, list[tuple[int, int]]] = {x: [] for x in x_points}
    expelled: list[tuple[int, int]] = []  # (z, stage)
    live: dict[int, int | None] = {x: None for x in x_points}
    counter: dict[int, int] = {x: 0 for x in x_points}

    for s in range(1, stage_budget + 1):
        for x in x_points:
            says_yes = a_approx(x, s)
            z = live[x]
            if says_yes and z is None:
                z = 2 * (pair(x, counter[x]) + 1)
                counter[x] += 1
                live[x] = z
                link_spans.setdefault(z, []).append((s, None))
                own[x].append((z, s))
            elif not says_yes and z is not None:
                spans = link_spans[z]
                spans[-1] = (spans[-1][0], s)
                expelled.append((z, s))
                live[x] = None

    def linked_at(z: int, s: int) -> bool:
        for frm, to in link_spans.get(z, ()):
            if frm <= s and (to is None or s < to):
                return True
        return False

    def y_approx(u: int, v: int, s: int) -> bool:
        in_zero_u = u == 0 or (u % 2 == 0 and linked_at(u, s))
        in_zero_v = v == 0 or (v % 2 == 0 and linked_at(v, s))
        return in_zero_u and in_zero_v

    from .relations import RelKind
    relation = StagedRelation(RelKind.PI2, y_approx, label=label)

    def complement_gen(t: int) -> frozenset[int]:
        out = {2 * k + 1 for k in range(t)}
        out.update(z for z, s in expelled if s < t)
        return frozenset(out)

    comp_idx = machine.register_builtin(complement_gen, name=f"{label}:complement")
    j_idx = machine.register_builtin(
        lambda t: complement_gen(t) | ({0} if t >= 1 else set()),
        name=f"{label}:complement+0")
    h_memo: dict[int, MachineIndex] = {}

    def h(x: int) -> MachineIndex:
        got = h_memo.get(x)
        if got is None:
            events = tuple(own.get(x, ()))
            got = machine.register_builtin(
                lambda t, ev=events: complement_gen(t) | {z for z, s in ev if s < t},
                name=f"{label}:image@{x}")
            h_memo[x] = got
        return got

    witness = SSRWitness(h, comp_idx, j_idx, p(one()), relation, machine,
                         dom=jump_dom(POINTS), label=label)
    info = {"expelled": list(expelled), "live": dict(live)}
    return relation, witness, info
