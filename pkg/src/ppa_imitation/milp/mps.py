"""MPS writer for :class:`MilpModel`.

Fixed-format MPS is produced when every name fits in 8 characters without
collisions and every number prints exactly in 12 characters; otherwise the
writer falls back to free format, which carries full names and ``repr``
precision.  The objective constant is written as the negated RHS of the
objective row, the convention most readers (HiGHS, CPLEX) follow.
"""

from __future__ import annotations

import math

import numpy as np

from .model import EQ, GE, LE, MilpModel

_ROW_TYPE = {LE: "L", EQ: "E", GE: "G"}
OBJ_ROW = "OBJ"


def _num12(v: float) -> str | None:
    """Shortest exact rendering in <= 12 characters, or None."""
    v = float(v)
    if v == int(v) and abs(v) < 1e11:
        s = str(int(v))
        return s if len(s) <= 12 else None
    s = repr(v)
    return s if len(s) <= 12 and float(s) == v else None


def _fixed_ok(model: MilpModel) -> bool:
    names = list(model.names) + list(model.row_names) + [OBJ_ROW]
    if any(len(n) > 8 or " " in n for n in names) or len(set(names)) != len(names):
        return False
    nums = list(model.c[model.c != 0]) + list(model.A[model.A != 0]) + list(model.rhs)
    nums += [b for b in np.concatenate([model.lb, model.ub]) if math.isfinite(b)]
    nums.append(model.obj_constant)
    return all(_num12(v) is not None for v in nums)


def _bounds(model: MilpModel):
    for j, name in enumerate(model.names):
        lo, hi = model.lb[j], model.ub[j]
        if model.is_int[j] and lo == 0.0 and hi == 1.0:
            yield ("BV", name, None)
        elif lo == hi:
            yield ("FX", name, lo)
        else:
            if lo == -math.inf:
                yield ("MI", name, None)
            elif lo != 0.0:
                yield ("LO", name, lo)
            if hi != math.inf:
                yield ("UP", name, hi)


def export_mps(model: MilpModel, name: str = "PPA", free: bool | None = None) -> bytes:
    """Serialize ``model``; ``free=None`` picks fixed format when it is lossless."""
    if free is None:
        free = not _fixed_ok(model)

    if free:
        def line(f1="", f2="", f3="", f4=None, f5="", f6=None):
            parts = [f1, f2, f3, "" if f4 is None else repr(float(f4)), f5,
                     "" if f6 is None else repr(float(f6))]
            return " " + " ".join(p for p in parts if p)
    else:
        def line(f1="", f2="", f3="", f4=None, f5="", f6=None):
            s = f" {f1:<2} {f2:<8}  {f3:<8}  {'' if f4 is None else _num12(f4):>12}"
            if f5:
                s += f"   {f5:<8}  {_num12(f6):>12}"
            return s.rstrip()

    out = [f"NAME          {name}", "ROWS", line("N", OBJ_ROW)]
    for i, rname in enumerate(model.row_names):
        out.append(line(_ROW_TYPE[int(model.sense[i])], rname))

    out.append("COLUMNS")
    for j, vname in enumerate(model.names):
        entries = []
        if model.c[j] != 0:
            entries.append((OBJ_ROW, model.c[j]))
        entries += [(model.row_names[i], model.A[i, j]) for i in np.flatnonzero(model.A[:, j])]
        if not entries:
            entries.append((OBJ_ROW, 0.0))
        for k in range(0, len(entries), 2):
            pair = entries[k:k + 2]
            if len(pair) == 2:
                out.append(line("", vname, pair[0][0], pair[0][1], pair[1][0], pair[1][1]))
            else:
                out.append(line("", vname, pair[0][0], pair[0][1]))

    out.append("RHS")
    rhs = [(model.row_names[i], model.rhs[i]) for i in np.flatnonzero(model.rhs)]
    if model.obj_constant != 0:
        rhs.append((OBJ_ROW, -model.obj_constant))
    for k in range(0, len(rhs), 2):
        pair = rhs[k:k + 2]
        if len(pair) == 2:
            out.append(line("", "RHS", pair[0][0], pair[0][1], pair[1][0], pair[1][1]))
        else:
            out.append(line("", "RHS", pair[0][0], pair[0][1]))

    bounds = list(_bounds(model))
    if bounds:
        out.append("BOUNDS")
        for kind, vname, val in bounds:
            out.append(line(kind, "BND", vname, val))
    out.append("ENDATA")
    return ("\n".join(out) + "\n").encode("ascii")


def write_mps(model: MilpModel, path, **kw) -> None:
    with open(path, "wb") as fh:
        fh.write(export_mps(model, **kw))
