"""Plain-text LP export in the CPLEX-style ``.lp`` layout.

Layout (see docs/lp_format.md)::

    \\ comment
    Minimize
     obj: 2 x0 - 1.5 x1
    Subject To
     r0: x0 + x1 >= 1
    Bounds
     0 <= x0 <= 5
     x1 free
    End

Names are sanitized to ``[A-Za-z0-9_.]``; brackets and commas become
underscores.  Every column gets an explicit bound line so the reader never
relies on format defaults.
"""

from __future__ import annotations

import re

import numpy as np
import scipy.sparse as sp

from gridsched.lp.program import LinearProgram

_SENSE_OUT = {"<=": "<=", "==": "=", ">=": ">="}
_SENSE_IN = {"<=": "<=", "=<": "<=", "<": "<=", "=": "==", ">=": ">=", "=>": ">=", ">": ">="}


def _clean(name: str) -> str:
    return re.sub(r"[^A-Za-z0-9_.]", "_", name).strip("_") or "x"


def _num(v: float) -> str:
    if v == np.inf:
        return "+inf"
    if v == -np.inf:
        return "-inf"
    return repr(float(v))


def _terms(coefs, names) -> str:
    parts = []
    for k, (a, nm) in enumerate(zip(coefs, names)):
        sign = "-" if a < 0 else "+"
        mag = repr(abs(float(a)))
        if k == 0:
            parts.append(f"{'-' if a < 0 else ''}{mag} {nm}")
        else:
            parts.append(f"{sign} {mag} {nm}")
    return " ".join(parts) if parts else "0 " + (names[0] if names else "")


def write_lp(lp: LinearProgram, path=None, comment: str | None = None) -> str:
    cols = [_clean(lp.col_name(j)) for j in range(lp.n)]
    rows = [_clean(lp.row_name(i)) for i in range(lp.m)]
    if len(set(cols)) != len(cols):
        cols = [f"x{j}" for j in range(lp.n)]
    if len(set(rows)) != len(rows):
        rows = [f"r{i}" for i in range(lp.m)]
    out = []
    if comment:
        out += [f"\\ {line}" for line in comment.splitlines()]
    out.append("Minimize")
    nz = np.flatnonzero(lp.c)
    if nz.size:
        out.append(" obj: " + _terms(lp.c[nz], [cols[j] for j in nz]))
    else:
        out.append(f" obj: 0 {cols[0]}" if lp.n else " obj:")
    out.append("Subject To")
    A = lp.A.tocsr()
    for i in range(lp.m):
        s, e = A.indptr[i], A.indptr[i + 1]
        idx, vals = A.indices[s:e], A.data[s:e]
        lhs = _terms(vals, [cols[j] for j in idx]) if idx.size else f"0 {cols[0]}"
        out.append(f" {rows[i]}: {lhs} {_SENSE_OUT[lp.senses[i]]} {_num(lp.rhs[i])}")
    out.append("Bounds")
    for j in range(lp.n):
        lo, hi = lp.lower[j], lp.upper[j]
        if lo == -np.inf and hi == np.inf:
            out.append(f" {cols[j]} free")
        elif lo == hi:
            out.append(f" {cols[j]} = {_num(lo)}")
        else:
            out.append(f" {_num(lo)} <= {cols[j]} <= {_num(hi)}")
    out.append("End")
    text = "\n".join(out) + "\n"
    if path is not None:
        with open(path, "w") as fh:
            fh.write(text)
    return text


_TERM = re.compile(r"([+-]?)\s*([0-9.eE+-]*(?:inf)?)\s*([A-Za-z_][A-Za-z0-9_.]*)")


def _parse_expr(expr: str) -> list[tuple[float, str]]:
    terms = []
    for sign, coef, name in _TERM.findall(expr):
        coef = coef.strip()
        val = float(coef) if coef not in ("", "+", "-") else 1.0
        terms.append((-val if sign == "-" else val, name))
    return terms


def _parse_float(tok: str) -> float:
    tok = tok.strip().lower()
    if tok in ("inf", "+inf", "infinity", "+infinity"):
        return np.inf
    if tok in ("-inf", "-infinity"):
        return -np.inf
    return float(tok)


def read_lp(text: str) -> LinearProgram:
    """Parse the subset of the LP format that :func:`write_lp` emits."""
    section = None
    obj_expr = ""
    row_lines: list[str] = []
    bound_lines: list[str] = []
    for raw in text.splitlines():
        line = raw.split("\\", 1)[0].strip()
        if not line:
            continue
        key = line.lower()
        if key in ("minimize", "minimise", "min"):
            section = "obj"
            continue
        if key in ("subject to", "st", "s.t."):
            section = "rows"
            continue
        if key == "bounds":
            section = "bounds"
            continue
        if key == "end":
            break
        if section == "obj":
            obj_expr += " " + line
        elif section == "rows":
            row_lines.append(line)
        elif section == "bounds":
            bound_lines.append(line)

    names: dict[str, int] = {}

    def col(nm: str) -> int:
        return names.setdefault(nm, len(names))

    bounds = {}
    # bound lines come first so the writer's column order is kept
    for line in bound_lines:
        if line.endswith(" free"):
            bounds[col(line[:-5].strip())] = (-np.inf, np.inf)
            continue
        parts = re.split(r"\s*(<=|=)\s*", line)
        if len(parts) == 5:
            bounds[col(parts[2])] = (_parse_float(parts[0]), _parse_float(parts[4]))
        elif len(parts) == 3 and parts[1] == "=":
            v = _parse_float(parts[2])
            bounds[col(parts[0])] = (v, v)
        else:
            raise ValueError(f"cannot parse bound {line!r}")
    obj_expr = obj_expr.split(":", 1)[1] if ":" in obj_expr else obj_expr
    obj = [(a, col(nm)) for a, nm in _parse_expr(obj_expr)]
    row_names, senses, rhs, entries = [], [], [], []
    for k, line in enumerate(row_lines):
        name, body = line.split(":", 1) if ":" in line else (f"r{k}", line)
        m = re.match(r"(.*?)(<=|>=|=<|=>|=|<|>)\s*(\S+)\s*$", body)
        if not m:
            raise ValueError(f"cannot parse constraint {line!r}")
        for a, nm in _parse_expr(m.group(1)):
            entries.append((len(rhs), col(nm), a))
        row_names.append(name.strip())
        senses.append(_SENSE_IN[m.group(2)])
        rhs.append(_parse_float(m.group(3)))
    n = len(names)
    c = np.zeros(n)
    for a, j in obj:
        c[j] += a
    lower = np.zeros(n)
    upper = np.full(n, np.inf)
    for j, (lo, hi) in bounds.items():
        lower[j], upper[j] = lo, hi
    if entries:
        r, cidx, v = zip(*entries)
    else:
        r, cidx, v = (), (), ()
    A = sp.csc_matrix((v, (r, cidx)), shape=(len(rhs), n))
    order = sorted(names, key=names.get)
    return LinearProgram(c, A, np.array(senses, dtype=object), np.array(rhs, dtype=float), lower, upper,
                         order, row_names)
