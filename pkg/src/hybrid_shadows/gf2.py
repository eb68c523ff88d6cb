"""GF(2) linear algebra on int bitsets."""

from __future__ import annotations


def rank(rows: list[int]) -> int:
    """Rank over GF(2); rows are bitmask integers."""
    pivots: list[int] = []
    r = 0
    for row in rows:
        for piv in pivots:
            row = min(row, row ^ piv)
        if row:
            pivots.append(row)
            r += 1
    return r


def in_rowspan(vec: int, rows: list[int]) -> bool:
    pivots: list[int] = []
    for row in rows:
        for piv in pivots:
            row = min(row, row ^ piv)
        if row:
            pivots.append(row)
    for piv in pivots:
        vec = min(vec, vec ^ piv)
    return vec == 0
