"""Program syntax and its numbering.

Programs are ASTs over the partial-recursive primitives plus a leaf
that points into a machine's builtin table:

    zero(arity)            constant 0
    succ()                 unary successor
    proj(arity, k)         k-th coordinate
    comp(f, children)      f applied to the children's results
    primrec(base, step)    h(0, xs) = base(xs); h(y+1, xs) = step(y, h(y, xs), xs)
    mu(body)               least y with body(y, xs) = 0
    builtin(slot, arity)   native entry in a machine's table

Every program has an explicit arity.  The numbering is a self-delimiting
binary code read MSB-first under a leading 1 sentinel: each node is a
3-bit tag followed by its payload, and embedded numbers use Elias-gamma.
Code length is therefore linear in tree size (a pairing-based numbering
grows double-exponentially with depth and cannot express even a depth-10
constant).

    000  zero      gamma(arity)
    001  succ
    010  proj      gamma(arity) gamma(k)
    011  comp      gamma(n_children) [gamma(arity) if n = 0] f children...
    100  primrec   base step
    101  mu        body
    110  builtin   gamma(slot) gamma(arity)

decode() is total: every natural is a code, and anything that fails to
parse exactly decodes to a canonical everywhere-divergent program.
"""

from __future__ import annotations

from dataclasses import dataclass, field

TAG_ZERO, TAG_SUCC, TAG_PROJ, TAG_COMP, TAG_PRIMREC, TAG_MU, TAG_BUILTIN = range(7)


class MalformedProgram(ValueError):
    pass


@dataclass(frozen=True)
class Program:
    op: str
    arity: int
    index: int = 0
    children: tuple["Program", ...] = field(default=())

    def __repr__(self) -> str:  # pragma: no cover - debugging aid
        return f"<Program {self.op}/{self.arity}>"


def zero(arity: int = 1) -> Program:
    if arity < 0:
        raise MalformedProgram("negative arity")
    return Program("zero", arity)


def succ() -> Program:
    return Program("succ", 1)


def proj(arity: int, k: int) -> Program:
    if not 0 <= k < arity:
        raise MalformedProgram(f"projection index {k} out of range for arity {arity}")
    return Program("proj", arity, index=k)


def comp(f: Program, children: list[Program] | tuple[Program, ...], arity: int | None = None) -> Program:
    children = tuple(children)
    if f.arity != len(children):
        raise MalformedProgram(f"outer arity {f.arity} != {len(children)} children")
    if children:
        arities = {c.arity for c in children}
        if len(arities) != 1:
            raise MalformedProgram("children disagree on arity")
        child_arity = arities.pop()
        if arity is not None and arity != child_arity:
            raise MalformedProgram("declared arity contradicts children")
        arity = child_arity
    elif arity is None:
        raise MalformedProgram("zero-children composition needs an explicit arity")
    return Program("comp", arity, children=(f, *children))


def primrec(base: Program, step: Program) -> Program:
    if step.arity != base.arity + 2:
        raise MalformedProgram("step arity must be base arity + 2")
    return Program("primrec", base.arity + 1, children=(base, step))


def mu(body: Program) -> Program:
    if body.arity < 1:
        raise MalformedProgram("mu body needs the search variable")
    return Program("mu", body.arity - 1, children=(body,))


def builtin(slot: int, arity: int = 1) -> Program:
    if slot < 0:
        raise MalformedProgram("negative builtin slot")
    return Program("builtin", arity, index=slot)


def identity() -> Program:
    return proj(1, 0)


def const_ast(value: int, arity: int = 1) -> Program:
    """value as a successor chain; evaluation cost grows with value."""
    prog = zero(arity)
    for _ in range(value):
        prog = comp(succ(), [prog])
    return prog


def diverge(arity: int = 1) -> Program:
    """Canonical program that halts on no input."""
    body = comp(succ(), [zero(arity + 1)])
    return mu(body)


# --- numbering ----------------------------------------------------------


class _BitWriter:
    def __init__(self) -> None:
        self.value = 1  # sentinel bit keeps leading zeros

    def bits(self, v: int, width: int) -> None:
        self.value = (self.value << width) | v

    def gamma(self, n: int) -> None:
        # Elias gamma of n >= 0 via n + 1
        m = n + 1
        width = m.bit_length()
        self.bits(0, width - 1)
        self.bits(m, width)


class _BitReader:
    def __init__(self, code: int):
        if code <= 0:
            raise MalformedProgram("no sentinel")
        self.length = code.bit_length() - 1
        self.payload = code - (1 << self.length)
        self.pos = 0

    def bits(self, width: int) -> int:
        if self.pos + width > self.length:
            raise MalformedProgram("truncated code")
        shift = self.length - self.pos - width
        self.pos += width
        return (self.payload >> shift) & ((1 << width) - 1)

    def gamma(self) -> int:
        zeros = 0
        while self.bits(1) == 0:
            zeros += 1
        rest = self.bits(zeros) if zeros else 0
        return (1 << zeros) + rest - 1

    def exhausted(self) -> bool:
        return self.pos == self.length


def encode(p: Program) -> int:
    w = _BitWriter()
    stack = [p]
    while stack:
        node = stack.pop()
        op = node.op
        if op == "zero":
            w.bits(TAG_ZERO, 3)
            w.gamma(node.arity)
        elif op == "succ":
            w.bits(TAG_SUCC, 3)
        elif op == "proj":
            w.bits(TAG_PROJ, 3)
            w.gamma(node.arity)
            w.gamma(node.index)
        elif op == "comp":
            w.bits(TAG_COMP, 3)
            w.gamma(len(node.children) - 1)
            if len(node.children) == 1:
                w.gamma(node.arity)
            stack.extend(reversed(node.children))
        elif op == "primrec":
            w.bits(TAG_PRIMREC, 3)
            stack.extend(reversed(node.children))
        elif op == "mu":
            w.bits(TAG_MU, 3)
            stack.append(node.children[0])
        elif op == "builtin":
            w.bits(TAG_BUILTIN, 3)
            w.gamma(node.index)
            w.gamma(node.arity)
        else:  # pragma: no cover - constructors forbid it
            raise MalformedProgram(f"unknown op {op!r}")
    return w.value


def decode(code: int) -> Program:
    try:
        r = _BitReader(code)
        prog = _read(r)
        if not r.exhausted():
            raise MalformedProgram("trailing bits")
        return prog
    except MalformedProgram:
        return diverge()


def _read(r: _BitReader) -> Program:
    # iterative prefix parse; frames are [kind, wanted, extra, parts]
    frames: list[list] = [["root", 1, None, []]]
    while True:
        tag = r.bits(3)
        if tag == TAG_ZERO:
            node = zero(r.gamma())
        elif tag == TAG_SUCC:
            node = succ()
        elif tag == TAG_PROJ:
            arity = r.gamma()
            node = proj(arity, r.gamma())
        elif tag == TAG_BUILTIN:
            slot = r.gamma()
            node = builtin(slot, r.gamma())
        elif tag == TAG_COMP:
            n = r.gamma()
            arity = r.gamma() if n == 0 else None
            frames.append(["comp", n + 1, arity, []])
            continue
        elif tag == TAG_PRIMREC:
            frames.append(["primrec", 2, None, []])
            continue
        elif tag == TAG_MU:
            frames.append(["mu", 1, None, []])
            continue
        else:
            raise MalformedProgram(f"tag {tag} out of range")
        while True:
            frame = frames[-1]
            frame[3].append(node)
            if len(frame[3]) < frame[1]:
                break
            frames.pop()
            kind, _, extra, parts = frame
            if kind == "root":
                return parts[0]
            if kind == "comp":
                node = comp(parts[0], parts[1:], arity=extra)
            elif kind == "primrec":
                node = primrec(parts[0], parts[1])
            else:
                node = mu(parts[0])


# --- s-expression form --------------------------------------------------


def to_sexpr(p: Program) -> str:
    if p.op == "zero":
        return f"(zero {p.arity})"
    if p.op == "succ":
        return "(succ)"
    if p.op == "proj":
        return f"(proj {p.arity} {p.index})"
    if p.op == "comp":
        f, *children = p.children
        if children:
            inner = " ".join(to_sexpr(c) for c in (f, *children))
            return f"(comp {inner})"
        return f"(comp0 {p.arity} {to_sexpr(f)})"
    if p.op == "primrec":
        return f"(primrec {to_sexpr(p.children[0])} {to_sexpr(p.children[1])})"
    if p.op == "mu":
        return f"(mu {to_sexpr(p.children[0])})"
    if p.op == "builtin":
        return f"(builtin {p.index} {p.arity})"
    raise MalformedProgram(f"unknown op {p.op!r}")


def _tokenize(text: str) -> list[str]:
    return text.replace("(", " ( ").replace(")", " ) ").split()


def from_sexpr(text: str) -> Program:
    tokens = _tokenize(text)
    prog, rest = _parse(tokens)
    if rest:
        raise MalformedProgram("trailing tokens")
    return prog


def _parse(tokens: list[str]) -> tuple[Program, list[str]]:
    if not tokens or tokens[0] != "(":
        raise MalformedProgram("expected '('")
    head, tokens = tokens[1], tokens[2:]
    if head == "zero":
        arity, tokens = int(tokens[0]), tokens[1:]
        prog = zero(arity)
    elif head == "succ":
        prog = succ()
    elif head == "proj":
        arity, k, tokens = int(tokens[0]), int(tokens[1]), tokens[2:]
        prog = proj(arity, k)
    elif head == "comp":
        parts = []
        while tokens and tokens[0] == "(":
            part, tokens = _parse(tokens)
            parts.append(part)
        if len(parts) < 2:
            raise MalformedProgram("comp needs a function and children")
        prog = comp(parts[0], parts[1:])
    elif head == "comp0":
        arity, tokens = int(tokens[0]), tokens[1:]
        f, tokens = _parse(tokens)
        prog = comp(f, [], arity=arity)
    elif head == "primrec":
        base, tokens = _parse(tokens)
        step, tokens = _parse(tokens)
        prog = primrec(base, step)
    elif head == "mu":
        body, tokens = _parse(tokens)
        prog = mu(body)
    elif head == "builtin":
        slot, arity, tokens = int(tokens[0]), int(tokens[1]), tokens[2:]
        prog = builtin(slot, arity)
    else:
        raise MalformedProgram(f"unknown head {head!r}")
    if not tokens or tokens[0] != ")":
        raise MalformedProgram("expected ')'")
    return prog, tokens[1:]
