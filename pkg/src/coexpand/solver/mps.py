"""Free-format MPS export/import and solution CSV exchange."""
from __future__ import annotations

import csv
import io
import logging
import math

import numpy as np

from ..linear import LinearModel
from .mip import MipSolution

logger = logging.getLogger(__name__)

OBJ_ROW = "OBJ"
_SENSE_CODE = {"<=": "L", ">=": "G", "=": "E"}
_CODE_SENSE = {v: k for k, v in _SENSE_CODE.items()}


class MpsError(ValueError):
    pass


def fmt_number(v: float) -> str:
    """Shortest text that parses back to exactly ``v``; never emits -0."""
    v = float(v)
    if v == 0.0:
        return "0"
    if v.is_integer() and abs(v) < 1e15:
        return str(int(v))
    return repr(v)


def _check_names(model: LinearModel):
    seen = {OBJ_ROW}
    for kind, names in (("variable", model.catalog.names),
                        ("constraint", [c.name for c in model.constraints])):
        for name in names:
            if len(name) > 255:
                raise MpsError(f"{kind} name longer than 255 chars: {name[:40]}...")
            if not name or any(ch.isspace() for ch in name):
                raise MpsError(f"{kind} name {name!r} contains whitespace")
            if kind == "constraint" and name in seen:
                raise MpsError(f"constraint name collision: {name!r}")
            seen.add(name)


def export_mps(model: LinearModel) -> str:
    """Render ``model`` as free-format MPS text in catalog order."""
    _check_names(model)
    n = model.n_vars
    names = model.catalog.names
    col_entries: list = [[] for _ in range(n)]
    c = model.objective
    for j in range(n):
        if c[j] != 0.0:
            col_entries[j].append((OBJ_ROW, c[j]))
    for con in model.constraints:
        for j, v in zip(con.cols, con.vals):
            col_entries[j].append((con.name, v))

    out = [f"NAME {model.name}", "ROWS", f" N {OBJ_ROW}"]
    for con in model.constraints:
        out.append(f" {_SENSE_CODE[con.sense]} {con.name}")
    out.append("COLUMNS")
    in_int = False
    marker = 0
    for j in range(n):
        is_int = model.catalog.integer[j]
        if is_int and not in_int:
            out.append(f"    MARKER{marker} 'MARKER' 'INTORG'")
            in_int = True
        elif not is_int and in_int:
            out.append(f"    MARKER{marker} 'MARKER' 'INTEND'")
            marker += 1
            in_int = False
        entries = col_entries[j]
        if not entries:
            # keep empty columns visible so the variable survives a round trip
            out.append(f"    {names[j]} {OBJ_ROW} 0")
        for row, v in entries:
            out.append(f"    {names[j]} {row} {fmt_number(v)}")
    if in_int:
        out.append(f"    MARKER{marker} 'MARKER' 'INTEND'")
    out.append("RHS")
    if model.constant != 0.0:
        out.append(f"    RHS {OBJ_ROW} {fmt_number(-model.constant)}")
    for con in model.constraints:
        if con.rhs != 0.0:
            out.append(f"    RHS {con.name} {fmt_number(con.rhs)}")
    out.append("RANGES")
    out.append("BOUNDS")
    for j in range(n):
        lo, hi = model.catalog.lb[j], model.catalog.ub[j]
        is_int = model.catalog.integer[j]
        nm = names[j]
        if lo == hi:
            out.append(f" FX BND {nm} {fmt_number(lo)}")
            continue
        if lo == -math.inf and hi == math.inf:
            out.append(f" FR BND {nm}")
            continue
        if lo == -math.inf:
            out.append(f" MI BND {nm}")
        elif lo != 0.0 or is_int:
            out.append(f" LO BND {nm} {fmt_number(lo)}")
        if hi != math.inf:
            out.append(f" UP BND {nm} {fmt_number(hi)}")
        elif is_int:
            out.append(f" PL BND {nm}")
    out.append("ENDATA")
    return "\n".join(out) + "\n"


def read_mps(text: str) -> LinearModel:
    """Parse free-format MPS into a LinearModel (variables keep MPS order)."""
    section = None
    model = None
    obj_row = None
    row_sense: dict = {}
    row_order: list = []
    row_coefs: dict = {}
    rhs: dict = {}
    col_order: list = []
    cols: dict = {}
    integer = set()
    bounds: dict = {}
    obj_coef: dict = {}
    constant = 0.0
    in_int = False
    name = "model"

    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.rstrip()
        if not line or line.startswith("*"):
            continue
        if not line[0].isspace():
            head = line.split()
            section = head[0].upper()
            if section == "NAME":
                name = head[1] if len(head) > 1 else "model"
            elif section == "ENDATA":
                break
            elif section not in ("ROWS", "COLUMNS", "RHS", "RANGES", "BOUNDS", "OBJSENSE"):
                raise MpsError(f"line {lineno}: unknown section {section}")
            continue
        tok = line.split()
        if section == "ROWS":
            code, rname = tok[0].upper(), tok[1]
            if code == "N":
                if obj_row is None:
                    obj_row = rname
                continue
            if code not in _CODE_SENSE:
                raise MpsError(f"line {lineno}: bad row type {code}")
            if rname in row_sense:
                raise MpsError(f"line {lineno}: duplicate row {rname}")
            row_sense[rname] = _CODE_SENSE[code]
            row_order.append(rname)
            row_coefs[rname] = {}
        elif section == "COLUMNS":
            if len(tok) >= 3 and tok[1] == "'MARKER'":
                if tok[2] == "'INTORG'":
                    in_int = True
                elif tok[2] == "'INTEND'":
                    in_int = False
                continue
            cname = tok[0]
            if cname not in cols:
                cols[cname] = len(col_order)
                col_order.append(cname)
                if in_int:
                    integer.add(cname)
            pairs = tok[1:]
            if len(pairs) % 2:
                raise MpsError(f"line {lineno}: unpaired COLUMNS entry")
            for rname, val in zip(pairs[::2], pairs[1::2]):
                v = float(val)
                if rname == obj_row:
                    obj_coef[cname] = obj_coef.get(cname, 0.0) + v
                elif rname in row_coefs:
                    row_coefs[rname][cols[cname]] = v
                else:
                    raise MpsError(f"line {lineno}: unknown row {rname}")
        elif section == "RHS":
            pairs = tok[1:] if len(tok) % 2 else tok
            for rname, val in zip(pairs[::2], pairs[1::2]):
                if rname == obj_row:
                    constant = -float(val)
                elif rname in row_sense:
                    rhs[rname] = float(val)
                else:
                    raise MpsError(f"line {lineno}: RHS for unknown row {rname}")
        elif section == "RANGES":
            raise MpsError(f"line {lineno}: ranged rows are not supported")
        elif section == "BOUNDS":
            btype = tok[0].upper()
            cname = tok[2]
            if cname not in cols:
                raise MpsError(f"line {lineno}: bound on unknown column {cname}")
            lo, hi = bounds.get(cname, (0.0, math.inf))
            val = float(tok[3]) if len(tok) > 3 else None
            if btype == "UP":
                hi = val
                if val < 0 and lo == 0.0:
                    lo = -math.inf
            elif btype == "LO":
                lo = val
            elif btype == "FX":
                lo = hi = val
            elif btype == "FR":
                lo, hi = -math.inf, math.inf
            elif btype == "MI":
                lo = -math.inf
            elif btype == "PL":
                hi = math.inf
            elif btype == "BV":
                lo, hi = 0.0, 1.0
                integer.add(cname)
            else:
                raise MpsError(f"line {lineno}: unsupported bound type {btype}")
            bounds[cname] = (lo, hi)

    model = LinearModel(name)
    for cname in col_order:
        lo, hi = bounds.get(cname, (0.0, math.inf))
        j = model.add_var(cname, lo, hi, cname in integer)
        model.add_objective(j, obj_coef.get(cname, 0.0))
    model.constant = constant
    for rname in row_order:
        model.add_constraint(rname, row_coefs[rname], row_sense[rname], rhs.get(rname, 0.0))
    return model


def write_solution(model: LinearModel, values) -> str:
    """Solution CSV with a ``variable,value`` header, catalog order."""
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["variable", "value"])
    for name, v in zip(model.catalog.names, values):
        w.writerow([name, fmt_number(v)])
    return buf.getvalue()


def import_solution(model: LinearModel, doc: str) -> MipSolution:
    """Map a ``name,value`` CSV onto ``model``; the objective is recomputed."""
    values = np.zeros(model.n_vars)
    seen = set()
    for lineno, row in enumerate(csv.reader(io.StringIO(doc)), 1):
        if not row or not "".join(row).strip():
            continue
        if lineno == 1 and row[0].strip().lower() in ("variable", "name"):
            continue
        if len(row) != 2:
            raise MpsError(f"line {lineno}: expected 2 fields, got {len(row)}")
        name = row[0].strip()
        try:
            v = float(row[1])
        except ValueError:
            raise MpsError(f"line {lineno}: bad value {row[1]!r}") from None
        if name not in model.catalog:
            raise MpsError(f"line {lineno}: unknown variable {name!r}")
        values[model.catalog.index(name)] = v
        seen.add(name)
    missing = [n for n in model.catalog.names if n not in seen]
    if missing:
        logger.warning("%d variables missing from solution, set to 0 (first: %s)",
                       len(missing), missing[0])
    obj = model.evaluate(values)
    feasible = model.max_violation(values) <= 1e-6
    return MipSolution("optimal" if feasible else "infeasible", obj, -math.inf, values, 0,
                       engine="import")
