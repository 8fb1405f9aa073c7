"""Best-bound branch-and-bound over LP relaxations."""
from __future__ import annotations

import heapq
import math
from dataclasses import dataclass, field

import numpy as np

from ..linear import LinearModel
from .lp import solve_lp

INT_TOL = 1e-6
EXACT_GAP = 1e-9

# models up to this many variables and rows go to the dense simplex under "auto"
BUILTIN_MAX_SIZE = 400


@dataclass
class MipSolution:
    status: str
    objective: float
    best_bound: float
    values: np.ndarray
    node_count: int = 0
    trace: list = field(default_factory=list)
    engine: str = "builtin"

    @property
    def gap(self) -> float:
        if not math.isfinite(self.objective) or not math.isfinite(self.best_bound):
            return math.inf
        return relative_gap(self.objective, self.best_bound)

    @property
    def has_solution(self) -> bool:
        return self.status in ("optimal", "gap_limit") or (
            self.status == "node_limit" and math.isfinite(self.objective)
        )


def relative_gap(incumbent: float, bound: float) -> float:
    return max(0.0, incumbent - bound) / max(abs(incumbent), 1e-10)


def _most_fractional(x, int_idx):
    xi = x[int_idx]
    dist = np.abs(xi - np.round(xi))
    k = int(np.argmax(dist))
    if dist[k] <= INT_TOL:
        return None
    return int(int_idx[k])


def branch_and_bound(model: LinearModel, gap_tol: float = 1e-6, node_limit: int = 100000,
                     lp_backend: str = "builtin") -> MipSolution:
    """Solve ``model`` to a relative gap of ``gap_tol``.

    Nodes are expanded lowest-bound first (ties by creation order). The
    branching variable is the most fractional integer variable, ties broken
    by catalog order, and the down branch is created before the up branch.
    """
    int_idx = np.nonzero(model.integrality)[0]
    lb0, ub0 = model.lb, model.ub
    if len(int_idx) and not (np.all(np.isfinite(lb0[int_idx])) and np.all(np.isfinite(ub0[int_idx]))):
        raise ValueError("integer variables need finite bounds")

    incumbent = math.inf
    best_x = np.full(model.n_vars, math.nan)
    trace = []
    nodes = 0
    seq = 0
    heap: list = []

    def evaluate(lb, ub):
        nonlocal nodes, incumbent, best_x, seq
        nodes += 1
        sol = solve_lp(model, backend=lp_backend, lb=lb, ub=ub)
        if sol.status == "unbounded":
            return "unbounded"
        if sol.status != "optimal":
            return "infeasible"
        j = _most_fractional(sol.values, int_idx) if len(int_idx) else None
        if j is None:
            x = sol.values.copy()
            x[int_idx] = np.round(x[int_idx])
            obj = model.evaluate(x)
            if obj < incumbent:
                incumbent, best_x = obj, x
            return "integral"
        if sol.objective < incumbent:
            heapq.heappush(heap, (sol.objective, seq, lb, ub, sol.values, j))
            seq += 1
        return "open"

    root = evaluate(lb0.copy(), ub0.copy())
    if root == "unbounded":
        return MipSolution("unbounded", -math.inf, -math.inf, best_x, nodes)

    status = None
    bound = incumbent
    while heap:
        bound = heap[0][0]
        trace.append((nodes, incumbent, min(bound, incumbent)))
        if math.isfinite(incumbent) and relative_gap(incumbent, bound) <= gap_tol:
            status = "optimal" if relative_gap(incumbent, bound) <= EXACT_GAP else "gap_limit"
            break
        if nodes >= node_limit:
            status = "node_limit"
            break
        node_bound, _, lb, ub, x, j = heapq.heappop(heap)
        if node_bound >= incumbent:
            continue
        down_ub = ub.copy()
        down_ub[j] = math.floor(x[j])
        evaluate(lb, down_ub)
        up_lb = lb.copy()
        up_lb[j] = math.ceil(x[j])
        evaluate(up_lb, ub)
    else:
        bound = incumbent
        status = "optimal" if math.isfinite(incumbent) else "infeasible"

    if status == "node_limit" and heap:
        bound = min(heap[0][0], incumbent)
    bound = min(bound, incumbent)
    trace.append((nodes, incumbent, bound))
    return MipSolution(status, incumbent, bound, best_x, nodes, trace, "builtin")


def _milp_highs(model: LinearModel, gap_tol: float, node_limit: int, time_limit=None) -> MipSolution:
    from scipy.optimize import Bounds, LinearConstraint, milp

    A = model.matrix()
    senses = np.array(model.senses)
    b = model.rhs
    lo = np.where(senses == "<=", -np.inf, b)
    hi = np.where(senses == ">=", np.inf, b)
    constraints = [LinearConstraint(A, lo, hi)] if model.n_rows else []
    options = {"mip_rel_gap": gap_tol, "node_limit": int(node_limit), "presolve": True}
    if time_limit:
        options["time_limit"] = float(time_limit)
    res = milp(
        model.objective,
        integrality=model.integrality.astype(int),
        bounds=Bounds(model.lb, model.ub),
        constraints=constraints,
        options=options,
    )
    n = model.n_vars
    nodes = int(getattr(res, "mip_node_count", 0) or 0)
    if res.status == 2:
        return MipSolution("infeasible", math.inf, math.inf, np.full(n, math.nan), nodes, engine="highs")
    if res.status == 3:
        return MipSolution("unbounded", -math.inf, -math.inf, np.full(n, math.nan), nodes, engine="highs")
    if res.x is None:
        return MipSolution("node_limit", math.inf, -math.inf, np.full(n, math.nan), nodes, engine="highs")
    x = np.asarray(res.x, dtype=float).copy()
    ints = model.integrality
    x[ints] = np.round(x[ints])
    obj = model.evaluate(x)
    bound = getattr(res, "mip_dual_bound", None)
    bound = obj if bound is None or not math.isfinite(bound) else float(bound) + model.constant
    bound = min(bound, obj)
    gap = relative_gap(obj, bound)
    if res.status == 0:
        status = "optimal" if gap <= EXACT_GAP else "gap_limit"
    else:
        status = "node_limit"
    return MipSolution(status, obj, bound, x, nodes, [(nodes, obj, bound)], "highs")


def choose_engine(model: LinearModel, engine: str = "auto") -> str:
    if engine == "auto":
        small = model.n_vars <= BUILTIN_MAX_SIZE and model.n_rows <= BUILTIN_MAX_SIZE
        return "builtin" if small else "highs"
    if engine not in ("builtin", "highs"):
        raise ValueError(f"unknown engine {engine!r}")
    return engine


def solve_mip(model: LinearModel, gap_tol: float = 1e-6, node_limit: int = 100000,
              engine: str = "builtin", time_limit=None) -> MipSolution:
    """Solve a mixed-integer model.

    ``engine="builtin"`` runs the dense-simplex branch-and-bound;
    ``"highs"`` hands the model to HiGHS through scipy; ``"auto"`` picks the
    built-in engine for small models.
    """
    model.check()
    engine = choose_engine(model, engine)
    if engine == "highs":
        return _milp_highs(model, gap_tol, node_limit, time_limit)
    return branch_and_bound(model, gap_tol, node_limit)
