"""Dense two-phase tableau simplex.

Pricing is Dantzig (most negative reduced cost) until a run of degenerate
pivots is seen, after which the solve switches permanently to Bland's
smallest-index rule, which cannot cycle.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

PIVOT_TOL = 1e-9
COST_TOL = 1e-9
FEAS_TOL = 1e-7
DEGENERATE_RUN = 25


@dataclass
class LpSolution:
    status: str
    objective: float
    values: np.ndarray
    duals: np.ndarray = field(default_factory=lambda: np.zeros(0))
    iterations: int = 0
    dual_objective: float = math.nan

    @property
    def ok(self) -> bool:
        return self.status == "optimal"


class _Tableau:
    def __init__(self, T, basis, n_art_start):
        self.T = T  # rows 0..M-1 constraints, row M reduced costs; last col rhs
        self.basis = basis
        self.n_art_start = n_art_start
        self.iterations = 0

    @property
    def M(self):
        return self.T.shape[0] - 1

    def pivot(self, i, j):
        T = self.T
        T[i] /= T[i, j]
        col = T[:, j].copy()
        col[i] = 0.0
        nz = np.nonzero(col)[0]
        if len(nz):
            T[nz] -= np.outer(col[nz], T[i])
        self.basis[i] = j
        self.iterations += 1

    def run(self, allowed, max_iter):
        """Iterate to optimality over columns in ``allowed``; returns status."""
        T = self.T
        M = self.M
        bland = False
        degenerate = 0
        cols = np.nonzero(allowed)[0]
        while True:
            if self.iterations >= max_iter:
                raise RuntimeError(f"simplex iteration limit {max_iter} reached")
            d = T[M, cols]
            if bland:
                neg = np.nonzero(d < -COST_TOL)[0]
                if not len(neg):
                    return "optimal"
                j = cols[neg[0]]
            else:
                k = int(np.argmin(d))
                if d[k] >= -COST_TOL:
                    return "optimal"
                j = cols[k]
            colj = T[:M, j]
            pos = np.nonzero(colj > PIVOT_TOL)[0]
            if not len(pos):
                return "unbounded"
            ratios = T[pos, -1] / colj[pos]
            best = ratios.min()
            ties = pos[ratios <= best + 1e-12 * (1.0 + abs(best))]
            i = ties[np.argmin(np.asarray(self.basis)[ties])]
            if best <= PIVOT_TOL:
                degenerate += 1
                if degenerate > DEGENERATE_RUN:
                    bland = True
            else:
                degenerate = 0
            self.pivot(i, j)


def _standardize(c, A, senses, b, lb, ub):
    """Shift/split variables so every working column is >= 0.

    Returns the working data and a reconstruction map.
    """
    n = len(c)
    cols = []  # (orig j, sign)
    shift = np.zeros(n)
    bound_rows = []  # (working col, upper)
    for j in range(n):
        lo, hi = lb[j], ub[j]
        if math.isfinite(lo) and math.isfinite(hi) and hi - lo <= 0.0:
            shift[j] = lo
        elif math.isfinite(lo):
            shift[j] = lo
            cols.append((j, 1.0))
            if math.isfinite(hi):
                bound_rows.append((len(cols) - 1, hi - lo))
        elif math.isfinite(hi):
            shift[j] = hi
            cols.append((j, -1.0))
        else:
            cols.append((j, 1.0))
            cols.append((j, -1.0))
    nw = len(cols)
    m = A.shape[0]
    Aw = np.zeros((m + len(bound_rows), nw))
    cw = np.zeros(nw)
    for k, (j, s) in enumerate(cols):
        Aw[:m, k] = s * A[:, j]
        cw[k] = s * c[j]
    bw = np.concatenate([b - A @ shift, [u for _, u in bound_rows]])
    sw = list(senses) + ["<="] * len(bound_rows)
    for r, (k, _) in enumerate(bound_rows):
        Aw[m + r, k] = 1.0
    return cw, Aw, sw, bw, cols, shift, float(c @ shift)


def _dual_objective(c, A, senses, b, lb, ub, y):
    """Lagrangian dual value of ``y`` for the bounded LP; -inf if y is not dual feasible."""
    for yi, s in zip(y, senses):
        if (s == "<=" and yi > 1e-7) or (s == ">=" and yi < -1e-7):
            return -math.inf
    d = c - np.asarray(A.T @ y).ravel()
    total = float(b @ y)
    scale = 1.0 + float(np.max(np.abs(c), initial=0.0))
    for dj, lo, hi in zip(d, lb, ub):
        if abs(dj) <= 1e-9 * scale:
            continue
        bound = lo if dj > 0 else hi
        if not math.isfinite(bound):
            return -math.inf
        total += dj * bound
    return total


def simplex(c, A, senses, b, lb=None, ub=None, max_iter=200000) -> LpSolution:
    """Minimize ``c @ x`` subject to ``A x (senses) b`` and ``lb <= x <= ub``."""
    c = np.asarray(c, dtype=float)
    n = len(c)
    A = np.asarray(A, dtype=float).reshape(-1, n)
    b = np.asarray(b, dtype=float)
    m = A.shape[0]
    lb = np.zeros(n) if lb is None else np.asarray(lb, dtype=float)
    ub = np.full(n, math.inf) if ub is None else np.asarray(ub, dtype=float)
    if np.any(lb > ub):
        return LpSolution("infeasible", math.nan, np.full(n, math.nan), np.zeros(m))

    cw, Aw, sw, bw, cols, shift, const = _standardize(c, A, senses, b, lb, ub)
    M, nw = Aw.shape

    flip = np.where(bw < 0, -1.0, 1.0)
    Aw = Aw * flip[:, None]
    bw = bw * flip
    sw = [
        s if f > 0 else {"<=": ">=", ">=": "<=", "=": "="}[s]
        for s, f in zip(sw, flip)
    ]

    n_slack = sum(1 for s in sw if s != "=")
    n_art = sum(1 for s in sw if s != "<=")
    ntot = nw + n_slack + n_art
    T = np.zeros((M + 1, ntot + 1))
    T[:M, :nw] = Aw
    T[:M, -1] = bw
    basis = [0] * M
    k_s = nw
    k_a = nw + n_slack
    art_rows = []
    for i, s in enumerate(sw):
        if s == "<=":
            T[i, k_s] = 1.0
            basis[i] = k_s
            k_s += 1
        elif s == ">=":
            T[i, k_s] = -1.0
            k_s += 1
            T[i, k_a] = 1.0
            basis[i] = k_a
            art_rows.append(i)
            k_a += 1
        else:
            T[i, k_a] = 1.0
            basis[i] = k_a
            art_rows.append(i)
            k_a += 1
    art_start = nw + n_slack
    # copy of the standardized matrix (with slacks) for dual recovery
    A_std = T[:M, : nw + n_slack].copy()
    tab = _Tableau(T, basis, art_start)

    rows_alive = np.arange(M)
    if art_rows:
        T[M, :] = 0.0
        T[M, art_start:ntot] = 1.0
        for i in art_rows:
            T[M] -= T[i]
        allowed = np.ones(ntot, dtype=bool)
        tab.run(allowed, max_iter)
        infeas = -T[M, -1]
        if infeas > FEAS_TOL * max(1.0, float(np.max(np.abs(bw), initial=0.0))):
            return LpSolution("infeasible", math.nan, np.full(n, math.nan), np.zeros(m),
                              tab.iterations)
        # drive remaining artificials out of the basis
        keep = []
        for i in range(M):
            if tab.basis[i] >= art_start:
                row = T[i, :art_start]
                cand = np.nonzero(np.abs(row) > FEAS_TOL)[0]
                if len(cand):
                    tab.pivot(i, int(cand[0]))
                    keep.append(i)
            else:
                keep.append(i)
        if len(keep) < M:
            keep_arr = np.array(keep, dtype=int)
            T = np.vstack([T[keep_arr], T[M:M + 1]])
            tab.T = T
            tab.basis = [tab.basis[i] for i in keep]
            rows_alive = keep_arr
            M = len(keep)
        T = np.hstack([T[:, :art_start], T[:, -1:]])
        tab.T = T
    else:
        T = np.hstack([T[:, :art_start], T[:, -1:]])
        tab.T = T

    ncols = art_start
    cfull = np.zeros(ncols)
    cfull[:nw] = cw
    cB = cfull[tab.basis]
    T[M, :ncols] = cfull - cB @ T[:M, :ncols]
    T[M, -1] = -cB @ T[:M, -1]
    status = tab.run(np.ones(ncols, dtype=bool), max_iter)
    if status == "unbounded":
        return LpSolution("unbounded", -math.inf, np.full(n, math.nan), np.zeros(m),
                          tab.iterations)

    xw = np.zeros(ncols)
    for i, j in enumerate(tab.basis):
        xw[j] = T[i, -1]
    x = shift.copy()
    for k, (j, s) in enumerate(cols):
        x[j] += s * xw[k]

    # duals: solve B^T y = c_B on surviving rows
    y_std = np.zeros(A_std.shape[0])
    if M:
        B = A_std[np.ix_(rows_alive, tab.basis)]
        try:
            y_std[rows_alive] = np.linalg.solve(B.T, cfull[tab.basis])
        except np.linalg.LinAlgError:
            y_std[rows_alive] = np.linalg.lstsq(B.T, cfull[tab.basis], rcond=None)[0]
    y = (y_std * flip)[:m]

    obj = float(c @ x)
    return LpSolution(
        "optimal",
        obj,
        x,
        y,
        tab.iterations,
        _dual_objective(c, A, senses, b, lb, ub, y),
    )
