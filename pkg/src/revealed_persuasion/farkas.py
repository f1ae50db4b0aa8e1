"""Exact linear programming and two-sided feasibility certificates.

``solve_lp`` is a dense two-phase tableau simplex with Bland's rule. Arithmetic
runs on ``gmpy2.mpq`` when available (much faster than ``Fraction``) and all
results are handed back as ``Fraction``.

``decide`` answers the alternative used by every consistency test: either some
``x >= 0`` satisfies the equality rows with zero, the inequality rows with
``<= 0`` and has ``c . x < 0`` (a primal witness), or there is ``y`` with
``M^T y <= c`` and ``y <= 0`` on the inequality rows (a dual certificate).
"""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from typing import Hashable, Sequence

from .rational import render, to_rational

try:  # pragma: no cover - exercised implicitly
    from gmpy2 import mpq as _num

    def _out(q) -> Fraction:
        return Fraction(int(q.numerator), int(q.denominator))

    def _in(x: Fraction):
        return _num(x.numerator, x.denominator)

except ImportError:  # pragma: no cover
    _num = Fraction

    def _out(q) -> Fraction:
        return q

    def _in(x: Fraction):
        return x


EQ = "eq"
LE = "le"


@dataclass(frozen=True)
class LPResult:
    status: str  # "optimal", "infeasible" or "unbounded"
    x: tuple = ()
    value: Fraction | None = None
    y_eq: tuple = ()
    y_ub: tuple = ()
    farkas_eq: tuple = ()
    farkas_ub: tuple = ()
    pivots: int = 0


class _Tableau:
    def __init__(self, rows: list, rhs: list, n: int):
        self.m = len(rows)
        self.n = n
        width = n + self.m
        self.t = []
        for r, (row, b) in enumerate(zip(rows, rhs)):
            full = row + [_num(0)] * self.m + [b]
            full[n + r] = _num(1)
            self.t.append(full)
        self.basis = [n + r for r in range(self.m)]
        self.width = width
        self.d: list = []
        self.z = _num(0)
        self.pivots = 0

    def set_costs(self, costs: list) -> None:
        cb = [costs[b] for b in self.basis]
        d = list(costs) + [_num(0)]
        for r, row in enumerate(self.t):
            w = cb[r]
            if w:
                for k, v in enumerate(row):
                    if v:
                        d[k] -= w * v
        self.z = -d[-1]
        self.d = d

    def pivot(self, pr: int, pc: int) -> None:
        prow = self.t[pr]
        piv = prow[pc]
        if piv != 1:
            prow = [v / piv for v in prow]
            self.t[pr] = prow
        nz = [k for k, v in enumerate(prow) if v]
        for r, row in enumerate(self.t):
            if r == pr:
                continue
            f = row[pc]
            if f:
                for k in nz:
                    row[k] -= f * prow[k]
        f = self.d[pc]
        if f:
            for k in nz:
                self.d[k] -= f * prow[k]
            self.z = -self.d[-1]
        self.basis[pr] = pc
        self.pivots += 1

    def run(self, allowed: int) -> str:
        """Bland's rule over columns ``< allowed``; maximizes."""
        while True:
            pc = next((j for j in range(allowed) if self.d[j] > 0), None)
            if pc is None:
                return "optimal"
            best = None
            for r, row in enumerate(self.t):
                a = row[pc]
                if a > 0:
                    ratio = row[-1] / a
                    key = (ratio, self.basis[r])
                    if best is None or key < best[0]:
                        best = (key, r)
            if best is None:
                return "unbounded"
            self.pivot(best[1], pc)


def solve_lp(
    c: Sequence,
    A_eq: Sequence[Sequence] = (),
    b_eq: Sequence = (),
    A_ub: Sequence[Sequence] = (),
    b_ub: Sequence = (),
) -> LPResult:
    """Maximize ``c . x`` subject to ``A_eq x = b_eq``, ``A_ub x <= b_ub``, ``x >= 0``.

    Duals follow the convention ``min b.y`` s.t. ``A^T y >= c`` with ``y_ub >= 0``.
    On infeasibility a Farkas ray ``w`` is returned: ``A^T w >= 0`` over the
    original and slack columns, with ``b . w < 0``.
    """
    nx = len(c)
    m_eq, m_ub = len(A_eq), len(A_ub)
    n = nx + m_ub
    rows, rhs, sign = [], [], []
    for r in range(m_eq + m_ub):
        if r < m_eq:
            src, b = A_eq[r], b_eq[r]
            slack = []
        else:
            src, b = A_ub[r - m_eq], b_ub[r - m_eq]
            slack = [_num(int(k == r - m_eq)) for k in range(m_ub)]
        if len(src) != nx:
            raise ValueError("constraint row has the wrong number of columns")
        row = [_in(to_rational(v)) for v in src] + (slack or [_num(0)] * m_ub)
        bb = _in(to_rational(b))
        if bb < 0:
            row = [-v for v in row]
            bb = -bb
            sign.append(-1)
        else:
            sign.append(1)
        rows.append(row)
        rhs.append(bb)
    m = len(rows)
    tab = _Tableau(rows, rhs, n)

    phase1 = [_num(0)] * n + [_num(-1)] * m
    tab.set_costs(phase1)
    tab.run(n)
    if tab.z < 0:
        y = [(-1 - tab.d[n + r]) * sign[r] for r in range(m)]
        w = [_out(v) for v in y]
        return LPResult("infeasible", farkas_eq=tuple(w[:m_eq]), farkas_ub=tuple(w[m_eq:]), pivots=tab.pivots)

    for r in range(m):
        if tab.basis[r] >= n:
            j = next((k for k in range(n) if tab.t[r][k] != 0), None)
            if j is not None:
                tab.pivot(r, j)

    costs = [_in(to_rational(v)) for v in c] + [_num(0)] * (m_ub + m)
    tab.set_costs(costs)
    status = tab.run(n)
    if status == "unbounded":
        return LPResult("unbounded", pivots=tab.pivots)
    x = [_num(0)] * n
    for r, b in enumerate(tab.basis):
        if b < n:
            x[b] = tab.t[r][-1]
    y = [_out(-tab.d[n + r] * sign[r]) for r in range(m)]
    return LPResult(
        "optimal",
        x=tuple(_out(v) for v in x[:nx]),
        value=_out(tab.z),
        y_eq=tuple(y[:m_eq]),
        y_ub=tuple(y[m_eq:]),
        pivots=tab.pivots,
    )


# Feasibility systems ------------------------------------------------------


@dataclass(frozen=True)
class FeasibilitySystem:
    """Rows ``M x (= or <=) 0`` over ``x >= 0`` with objective ``c``."""

    matrix: tuple
    row_kinds: tuple
    objective: tuple
    row_labels: tuple
    column_labels: tuple

    def __post_init__(self):
        ncols = len(self.objective)
        if len(self.column_labels) != ncols:
            raise ValueError("one label per column is required")
        if len(self.row_labels) != len(self.matrix) or len(self.row_kinds) != len(self.matrix):
            raise ValueError("one label and one kind per row are required")
        if any(len(row) != ncols for row in self.matrix):
            raise ValueError("every row needs one entry per column")
        if len(set(self.row_labels)) != len(self.row_labels):
            raise ValueError("row labels must be unique")
        if len(set(self.column_labels)) != len(self.column_labels):
            raise ValueError("column labels must be unique")
        if any(k not in (EQ, LE) for k in self.row_kinds):
            raise ValueError("row kinds must be 'eq' or 'le'")

    @property
    def shape(self) -> tuple:
        return len(self.matrix), len(self.objective)

    def row_index(self) -> dict:
        return {label: i for i, label in enumerate(self.row_labels)}

    def column_index(self) -> dict:
        return {label: j for j, label in enumerate(self.column_labels)}


class SystemBuilder:
    """Accumulates sparse entries keyed by row and column labels."""

    def __init__(self):
        self._rows: dict = {}
        self._kinds: dict = {}
        self._cols: dict = {}
        self._cost: dict = {}
        self._entries: dict = {}

    def add_row(self, label: Hashable, kind: str = EQ) -> None:
        if label not in self._rows:
            self._rows[label] = len(self._rows)
            self._kinds[label] = kind

    def add_column(self, label: Hashable, cost: Fraction = Fraction(0)) -> None:
        if label in self._cols:
            raise ValueError(f"duplicate column {label!r}")
        self._cols[label] = len(self._cols)
        self._cost[label] = Fraction(cost)

    def has_column(self, label: Hashable) -> bool:
        return label in self._cols

    def set(self, row: Hashable, col: Hashable, value: Fraction) -> None:
        if value == 0:
            return
        self.add_row(row)
        key = (row, col)
        self._entries[key] = self._entries.get(key, Fraction(0)) + value

    def build(self, drop_empty_rows: bool = True) -> FeasibilitySystem:
        used = {r for (r, _), v in self._entries.items() if v != 0}
        rows = [r for r in self._rows if (r in used or not drop_empty_rows)]
        cols = list(self._cols)
        ridx = {r: i for i, r in enumerate(rows)}
        cidx = {c: j for j, c in enumerate(cols)}
        matrix = [[Fraction(0)] * len(cols) for _ in rows]
        for (r, c), v in self._entries.items():
            if r in ridx:
                matrix[ridx[r]][cidx[c]] = v
        return FeasibilitySystem(
            tuple(tuple(row) for row in matrix),
            tuple(self._kinds[r] for r in rows),
            tuple(self._cost[c] for c in cols),
            tuple(rows),
            tuple(cols),
        )


PRIMAL = "PrimalWitness"
DUAL = "DualRationalizer"


@dataclass(frozen=True)
class Certificate:
    kind: str
    primal: tuple = ()
    dual: tuple = ()
    shift: Fraction = Fraction(0)
    optimum: Fraction = Fraction(0)
    pivots: int = field(default=0, compare=False)

    def to_dict(self) -> dict:
        out = {"kind": self.kind, "optimum": render(self.optimum)}
        if self.kind == PRIMAL:
            out["primal"] = [render(v) for v in self.primal]
        else:
            out["dual"] = [render(v) for v in self.dual]
            out["shift"] = render(self.shift)
        return out

    @classmethod
    def from_dict(cls, data: dict) -> "Certificate":
        kind = data["kind"]
        if kind == PRIMAL:
            return cls(PRIMAL, primal=tuple(to_rational(v) for v in data["primal"]),
                       optimum=to_rational(data.get("optimum", "0")))
        if kind == DUAL:
            return cls(DUAL, dual=tuple(to_rational(v) for v in data["dual"]),
                       shift=to_rational(data.get("shift", "0")), optimum=to_rational(data.get("optimum", "0")))
        raise ValueError(f"unknown certificate kind {kind!r}")


def _normalized_lp(system: FeasibilitySystem) -> LPResult:
    eq = [row for row, k in zip(system.matrix, system.row_kinds) if k == EQ]
    le = [row for row, k in zip(system.matrix, system.row_kinds) if k == LE]
    ncols = len(system.objective)
    A_eq = eq + [[Fraction(1)] * ncols]
    b_eq = [Fraction(0)] * len(eq) + [Fraction(1)]
    return solve_lp([-v for v in system.objective], A_eq, b_eq, le, [Fraction(0)] * len(le))


def _scatter(system: FeasibilitySystem, eq_vals: Sequence, le_vals: Sequence) -> tuple:
    out, ie, il = [], iter(eq_vals), iter(le_vals)
    for k in system.row_kinds:
        out.append(next(ie) if k == EQ else next(il))
    return tuple(out)


def maximize(system: FeasibilitySystem) -> tuple:
    """Maximize ``-c . x`` over the cone slice ``sum(x) = 1``.

    Returns ``(optimum, argmax, dual)``. When only ``x = 0`` lies in the cone
    the optimum is reported as 0 and ``argmax`` is ``None``; the dual is then
    built from the infeasibility ray.
    """
    cert = decide(system)
    argmax = cert.primal if cert.kind == PRIMAL else None
    if cert.kind == PRIMAL:
        return cert.optimum, argmax, None
    return cert.optimum, argmax, cert.dual


def decide(system: FeasibilitySystem) -> Certificate:
    res = _normalized_lp(system)
    n_eq = sum(1 for k in system.row_kinds if k == EQ)
    if res.status == "unbounded":  # pragma: no cover - impossible under normalization
        raise RuntimeError("normalized feasibility LP reported unbounded")
    if res.status == "optimal":
        if res.value > 0:
            return Certificate(PRIMAL, primal=res.x, optimum=res.value, pivots=res.pivots)
        t = res.y_eq[n_eq]
        dual = _scatter(system, [-v for v in res.y_eq[:n_eq]], [-v for v in res.y_ub])
        return Certificate(DUAL, dual=dual, shift=t, optimum=res.value, pivots=res.pivots)
    # Only the origin lies in the cone: scale the infeasibility ray.
    w_t = res.farkas_eq[n_eq]
    worst = max([-v for v in system.objective] + [Fraction(0)])
    k = max(Fraction(1), worst / -w_t)
    dual = _scatter(system, [-k * v for v in res.farkas_eq[:n_eq]], [-k * v for v in res.farkas_ub])
    return Certificate(DUAL, dual=dual, shift=k * w_t, optimum=Fraction(0), pivots=res.pivots)


def replay(system: FeasibilitySystem, cert: Certificate) -> bool:
    """Check a certificate's defining (in)equalities with exact arithmetic."""
    nrows, ncols = system.shape
    if cert.kind == PRIMAL:
        x = cert.primal
        if len(x) != ncols or any(v < 0 for v in x):
            return False
        for row, kind in zip(system.matrix, system.row_kinds):
            s = sum((a * b for a, b in zip(row, x)), Fraction(0))
            if (kind == EQ and s != 0) or (kind == LE and s > 0):
                return False
        return sum((a * b for a, b in zip(system.objective, x)), Fraction(0)) < 0
    if cert.kind == DUAL:
        y = cert.dual
        if len(y) != nrows:
            return False
        if any(v > 0 for v, k in zip(y, system.row_kinds) if k == LE):
            return False
        for j in range(ncols):
            s = sum((system.matrix[i][j] * y[i] for i in range(nrows)), Fraction(0))
            if s > system.objective[j]:
                return False
        return True
    return False
