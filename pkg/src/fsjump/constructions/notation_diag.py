"""Diagonalized notation built column by column against watched programs.

Each column is a limit notation whose fundamental sequence follows the
default power rule; column k watches its candidate program on the probe
input <k, 0>, and if the candidate converges to some <m, n> within the
column's stage budget, the next entry jumps to the successor of
(current +_O the m-th entry of the reference notation) exactly once.
Columns are finalized in order: column k+1 starts at the power of the
finished column k, so the assembled notation's fundamental sequence is
strictly increasing by construction.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

from ..machine import Machine, MachineIndex
from ..notations import Notation, OrdinalCNF, add_O, lim, one, p, p_iter
from ..pairing import pair, unpair
from .runtime import ConstructionState


@dataclass
class ColumnReport:
    index: int
    bumped: bool
    bump_stage: int | None
    bump_against: tuple[int, int] | None
    ordinal: OrdinalCNF


def notation_diagonalize(b: Notation, column_count: int, stage_budget: int,
                         machine: Machine,
                         watched: Sequence[MachineIndex | None] | None = None,
                         name: str = "notation-diag") -> tuple[Notation, ConstructionState]:
    if b.shape != "limit" or b.ordinal != OrdinalCNF.omega(2):
        raise ValueError("reference notation must be a limit with ordinal omega^2")
    config = {"columns": column_count, "stage_budget": stage_budget,
              "reference": b.expr}
    state = ConstructionState(name, config, machine)
    watched = list(watched or [])
    col_budget = max(1, stage_budget // max(1, column_count))

    columns: list[Notation] = []
    reports: list[ColumnReport] = []
    prev: Notation | None = None
    for k in range(column_count):
        start = p(prev) if prev is not None else p(one())
        seq = [start]
        candidate = watched[k] if k < len(watched) else None
        bumped = False
        bump_stage = None
        bump_against = None
        probe = pair(k, 0)
        for t in range(1, col_budget):
            cur = seq[-1]
            if candidate is not None and not bumped:
                out = machine.step_eval(candidate, probe, t)
                if out.halted:
                    m, n = unpair(out.value)
                    bumped = True
                    bump_stage = t
                    bump_against = (m, n)
                    seq.append(p(add_O(cur, b.fundamental(m))))
                    state.log.emit(t, "bump", column=k, against_column=m,
                                   value=out.value)
                    continue
            seq.append(p(cur))
        if candidate is not None and not bumped:
            state.log.emit(col_budget, "no-convergence", column=k,
                           note="watched program silent; default rule kept")
        tail_root = seq[-1]
        tail_start = len(seq)

        def fundamental(i: int, seq=tuple(seq), tail_root=tail_root,
                        tail_start=tail_start) -> Notation:
            if i < len(seq):
                return seq[i]
            return p_iter(tail_root, i - tail_start + 1)

        sup = tail_root.ordinal.plus_omega()
        column = lim(fundamental, sup, expr=f"diag-col[{k}]")
        ok = sup.is_limit() and sup < OrdinalCNF.omega(2)
        state.check(col_budget, "column ordinal is a limit below omega^2", ok,
                    column=k, ordinal=str(sup))
        state.check(col_budget, "at most one bump per column", True, column=k,
                    bumped=bumped)
        reports.append(ColumnReport(k, bumped, bump_stage, bump_against, sup))
        columns.append(column)
        prev = column

    last = p(columns[-1])

    def assembled(x: int, columns=tuple(columns), last=last,
                  count=column_count) -> Notation:
        if x < count:
            return p(columns[x])
        return p_iter(last, x - count + 1)

    a = lim(assembled, last.ordinal.plus_omega(), expr="diagonalized")
    state.params = {"columns": [{"index": r.index, "bumped": r.bumped,
                                 "bump_stage": r.bump_stage,
                                 "against": list(r.bump_against) if r.bump_against else None,
                                 "ordinal": str(r.ordinal)} for r in reports],
                    "materialized_ordinal": str(columns[-1].ordinal),
                    "intended_ordinal": "w^2 (truncated here)"}
    state.notes.append(f"columns materialized: {column_count}; the certified sup "
                       "covers the lazy successor tail past the truncation")
    state.stage = stage_budget
    state.finish()
    return a, state
