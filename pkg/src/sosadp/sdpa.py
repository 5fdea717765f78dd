"""SDPA sparse format (.dat-s) writer and reader.

SDPA solves ``minimize c'y  s.t.  sum_i F_i y_i - F_0 >= 0``, whose dual is
``maximize <F_0, X>  s.t.  <F_i, X> = c_i, X >= 0``.  Our primal
``minimize <C, X>`` therefore maps to ``F_0 = -C``, ``F_i = A_i``,
``c_i = b_i``; the SDPA optimal value is the negative of ours.
"""
from __future__ import annotations

import numpy as np

from .sdp import SdpProblem


def _fmt(v: float) -> str:
    return repr(float(v))


def export_sdpa(prob: SdpProblem, comment: str | None = None) -> str:
    lines = []
    if comment:
        lines += ['" ' + c for c in comment.splitlines()]
    lines.append(f"{prob.m} = mDIM")
    lines.append(f"{prob.nblocks} = nBLOCK")
    lines.append(" ".join(str(s) for s in prob.block_sizes) + " = bLOCKsTRUCT")
    lines.append(" ".join(_fmt(v) for v in prob.b) if prob.m else "")
    for (k, blk, i, j), v in zip(prob.entries, prob.values):
        val = -v if k == 0 else v
        lines.append(f"{k} {blk + 1} {i + 1} {j + 1} {_fmt(val)}")
    return "\n".join(lines) + "\n"


def _numbers(line: str) -> list:
    for ch in ",{}()":
        line = line.replace(ch, " ")
    out = []
    for tok in line.split():
        try:
            out.append(float(tok))
        except ValueError:
            break
    return out


def parse_sdpa(text: str) -> SdpProblem:
    """Read an SDPA sparse file written by :func:`export_sdpa` or any SDPA tool."""
    rows = [ln for ln in text.splitlines() if ln.strip() and ln.lstrip()[0] not in '"*']
    if len(rows) < 3:
        raise ValueError("truncated SDPA file")
    m = int(_numbers(rows[0])[0])
    nblock = int(_numbers(rows[1])[0])
    sizes = [int(v) for v in _numbers(rows[2])[:nblock]]
    if len(sizes) != nblock:
        raise ValueError("block structure line does not match nBLOCK")
    pos = 3
    b = []
    while len(b) < m:
        if pos >= len(rows):
            raise ValueError("objective vector is truncated")
        b += _numbers(rows[pos])
        pos += 1
    if m == 0 and pos < len(rows) and len(_numbers(rows[pos])) != 5:
        pos += 1
    ent, val = [], []
    for ln in rows[pos:]:
        nums = _numbers(ln)
        if len(nums) != 5:
            raise ValueError(f"bad entry line: {ln!r}")
        k, blk, i, j = (int(v) for v in nums[:4])
        ent.append((k, blk - 1, i - 1, j - 1))
        val.append(-nums[4] if k == 0 else nums[4])
    return SdpProblem(sizes, np.array(b[:m]), np.array(ent, dtype=np.int64).reshape(-1, 4), np.array(val))
