"""LP entry point over LinearModel, with the built-in simplex or HiGHS."""
from __future__ import annotations

import math

import numpy as np

from ..linear import LinearModel
from .simplex import LpSolution, simplex, _dual_objective


def solve_lp(model: LinearModel, backend: str = "builtin", lb=None, ub=None) -> LpSolution:
    """Solve the LP relaxation of ``model`` (integrality ignored).

    ``lb``/``ub`` override the catalog bounds without copying the model,
    which is how branch-and-bound passes node bounds.
    """
    c = model.objective
    lb = model.lb if lb is None else lb
    ub = model.ub if ub is None else ub
    b = model.rhs
    senses = model.senses
    if backend == "highs":
        sol = _solve_highs(model, c, lb, ub)
    elif backend == "builtin":
        A = model.matrix().toarray()
        sol = simplex(c, A, senses, b, lb, ub)
    else:
        raise ValueError(f"unknown LP backend {backend!r}")
    if sol.status == "optimal":
        sol.objective += model.constant
        sol.dual_objective += model.constant
    return sol


def _solve_highs(model, c, lb, ub) -> LpSolution:
    from scipy.optimize import linprog

    A = model.matrix()
    senses = np.array(model.senses)
    b = model.rhs
    le = senses == "<="
    ge = senses == ">="
    eq = senses == "="
    A_ub = None
    b_ub = None
    if le.any() or ge.any():
        sign = np.where(ge, -1.0, 1.0)[le | ge]
        A_ub = A[le | ge].multiply(sign[:, None]).tocsr()
        b_ub = b[le | ge] * sign
    A_eq = A[eq] if eq.any() else None
    b_eq = b[eq] if eq.any() else None
    bounds = np.column_stack([
        np.where(np.isfinite(lb), lb, -np.inf),
        np.where(np.isfinite(ub), ub, np.inf),
    ])
    res = linprog(c, A_ub=A_ub, b_ub=b_ub, A_eq=A_eq, b_eq=b_eq, bounds=bounds,
                  method="highs")
    n, m = len(c), len(b)
    if res.status == 2:
        return LpSolution("infeasible", math.nan, np.full(n, math.nan), np.zeros(m))
    if res.status == 3:
        return LpSolution("unbounded", -math.inf, np.full(n, math.nan), np.zeros(m))
    if res.status != 0:
        raise RuntimeError(f"HiGHS LP failed: {res.message}")
    y = np.zeros(m)
    if A_ub is not None:
        y[le | ge] = res.ineqlin.marginals * np.where(ge, -1.0, 1.0)[le | ge]
    if A_eq is not None:
        y[eq] = res.eqlin.marginals
    dual = _dual_objective(c, A, list(senses), b, lb, ub, y)
    return LpSolution("optimal", float(res.fun), np.asarray(res.x), y, int(res.nit), dual)
