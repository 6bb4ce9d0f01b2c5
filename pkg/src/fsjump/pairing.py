"""Cantor pairing and tuple coding on the naturals.

The pairing is <x,y> = (x+y)(x+y+1)/2 + y, so <0,0> = 0 and the
function walks the diagonals.  Tuples are coded right-nested:
(a, b, c) codes as <a, <b, c>>.  A 1-tuple is its own code and a
0-tuple codes as 0.
"""

from __future__ import annotations

from math import isqrt


def pair(x: int, y: int) -> int:
    s = x + y
    return s * (s + 1) // 2 + y


def unpair(z: int) -> tuple[int, int]:
    s = (isqrt(8 * z + 1) - 1) // 2
    y = z - s * (s + 1) // 2
    return s - y, y


def tuple_code(values: tuple[int, ...] | list[int]) -> int:
    if not values:
        return 0
    code = values[-1]
    for v in reversed(values[:-1]):
        code = pair(v, code)
    return code


def tuple_decode(code: int, k: int) -> tuple[int, ...]:
    if k == 0:
        return ()
    out = []
    for _ in range(k - 1):
        head, code = unpair(code)
        out.append(head)
    out.append(code)
    return tuple(out)
