"""GF(2) linear algebra on bit-packed rows.

Rows are packed into Python integers, so elimination is a handful of XORs
per row regardless of width.
"""

from __future__ import annotations

import numpy as np


def pack_rows(matrix) -> list[int]:
    m = np.asarray(matrix, dtype=np.uint8) & 1
    if m.ndim != 2:
        raise ValueError("expected a 2-d bit matrix")
    if m.shape[1] == 0:
        return [0] * m.shape[0]
    packed = np.packbits(m, axis=1, bitorder="little")
    return [int.from_bytes(row.tobytes(), "little") for row in packed]


def gf2_rank(matrix) -> int:
    """Rank over GF(2) of a 0/1 matrix."""
    pivots: dict[int, int] = {}
    for row in pack_rows(matrix):
        while row:
            top = row.bit_length() - 1
            if top not in pivots:
                pivots[top] = row
                break
            row ^= pivots[top]
    return len(pivots)
