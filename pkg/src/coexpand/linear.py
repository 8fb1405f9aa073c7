"""Solver-agnostic mixed-integer linear model."""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp

SENSES = ("<=", "=", ">=")


@dataclass
class Constraint:
    name: str
    cols: np.ndarray
    vals: np.ndarray
    sense: str
    rhs: float
    family: str = ""


class VariableCatalog:
    """Ordered variable records with bounds and integrality."""

    def __init__(self):
        self.names: list = []
        self.kinds: list = []
        self.keys: list = []
        self.lb: list = []
        self.ub: list = []
        self.integer: list = []
        self._index: dict = {}

    def add(self, name, lb=0.0, ub=math.inf, integer=False, kind="var", key=None) -> int:
        if name in self._index:
            raise ValueError(f"duplicate variable name {name!r}")
        idx = len(self.names)
        self._index[name] = idx
        self.names.append(name)
        self.kinds.append(kind)
        self.keys.append(key)
        self.lb.append(float(lb))
        self.ub.append(float(ub))
        self.integer.append(bool(integer))
        return idx

    def index(self, name: str) -> int:
        return self._index[name]

    def __contains__(self, name):
        return name in self._index

    def __len__(self):
        return len(self.names)

    def of_kind(self, kind: str) -> list:
        return [i for i, k in enumerate(self.kinds) if k == kind]

    def copy(self) -> "VariableCatalog":
        new = VariableCatalog()
        new.names = list(self.names)
        new.kinds = list(self.kinds)
        new.keys = list(self.keys)
        new.lb = list(self.lb)
        new.ub = list(self.ub)
        new.integer = list(self.integer)
        new._index = dict(self._index)
        return new


class LinearModel:
    """Minimize ``c @ x + constant`` subject to sparse rows and variable bounds."""

    def __init__(self, name: str = "model"):
        self.name = name
        self.catalog = VariableCatalog()
        self._obj: dict = {}
        self.constant = 0.0
        self.constraints: list = []
        self._row_names: set = set()

    # -- construction ---------------------------------------------------
    def add_var(self, name, lb=0.0, ub=math.inf, integer=False, kind="var", key=None) -> int:
        return self.catalog.add(name, lb, ub, integer, kind, key)

    def add_objective(self, idx: int, coef: float):
        if coef != 0.0:
            self._obj[idx] = self._obj.get(idx, 0.0) + float(coef)

    def add_constraint(self, name, coefs: dict, sense: str, rhs: float, family: str = ""):
        if sense not in SENSES:
            raise ValueError(f"bad sense {sense!r}")
        if name in self._row_names:
            raise ValueError(f"duplicate constraint name {name!r}")
        self._row_names.add(name)
        items = sorted((i, v) for i, v in coefs.items() if v != 0.0)
        cols = np.array([i for i, _ in items], dtype=int)
        vals = np.array([v for _, v in items], dtype=float)
        self.constraints.append(Constraint(name, cols, vals, sense, float(rhs), family))

    # -- views ----------------------------------------------------------
    @property
    def n_vars(self) -> int:
        return len(self.catalog)

    @property
    def n_rows(self) -> int:
        return len(self.constraints)

    @property
    def objective(self) -> np.ndarray:
        c = np.zeros(self.n_vars)
        for i, v in self._obj.items():
            c[i] = v
        return c

    def set_objective(self, c, constant=None):
        self._obj = {int(i): float(v) for i, v in enumerate(c) if v != 0.0}
        if constant is not None:
            self.constant = float(constant)

    @property
    def lb(self) -> np.ndarray:
        return np.array(self.catalog.lb, dtype=float)

    @property
    def ub(self) -> np.ndarray:
        return np.array(self.catalog.ub, dtype=float)

    @property
    def integrality(self) -> np.ndarray:
        return np.array(self.catalog.integer, dtype=bool)

    def matrix(self) -> sp.csr_matrix:
        rows, cols, vals = [], [], []
        for r, con in enumerate(self.constraints):
            rows.append(np.full(len(con.cols), r))
            cols.append(con.cols)
            vals.append(con.vals)
        if rows:
            rows = np.concatenate(rows)
            cols = np.concatenate(cols)
            vals = np.concatenate(vals)
        return sp.csr_matrix((vals, (rows, cols)), shape=(self.n_rows, self.n_vars))

    @property
    def senses(self) -> list:
        return [c.sense for c in self.constraints]

    @property
    def rhs(self) -> np.ndarray:
        return np.array([c.rhs for c in self.constraints], dtype=float)

    # -- evaluation -----------------------------------------------------
    def evaluate(self, x) -> float:
        return float(self.objective @ np.asarray(x, dtype=float) + self.constant)

    def max_violation(self, x) -> float:
        """Largest absolute violation over rows, bounds and integrality."""
        x = np.asarray(x, dtype=float)
        worst = 0.0
        if self.n_rows:
            act = self.matrix() @ x
            for a, con in zip(act, self.constraints):
                if con.sense == "<=":
                    worst = max(worst, a - con.rhs)
                elif con.sense == ">=":
                    worst = max(worst, con.rhs - a)
                else:
                    worst = max(worst, abs(a - con.rhs))
        worst = max(worst, float(np.max(self.lb - x, initial=0.0)))
        worst = max(worst, float(np.max(x - self.ub, initial=0.0)))
        ints = self.integrality
        if ints.any():
            xi = x[ints]
            worst = max(worst, float(np.max(np.abs(xi - np.round(xi)), initial=0.0)))
        return worst

    # -- derived models -------------------------------------------------
    def copy(self) -> "LinearModel":
        new = LinearModel(self.name)
        new.catalog = self.catalog.copy()
        new._obj = dict(self._obj)
        new.constant = self.constant
        new.constraints = list(self.constraints)
        new._row_names = set(self._row_names)
        return new

    def relaxed(self) -> "LinearModel":
        new = self.copy()
        new.catalog.integer = [False] * self.n_vars
        return new

    def with_bounds(self, changes: dict) -> "LinearModel":
        """Copy with bounds replaced; ``changes`` maps index -> (lb, ub)."""
        new = self.copy()
        for i, (lo, hi) in changes.items():
            new.catalog.lb[i] = float(lo)
            new.catalog.ub[i] = float(hi)
        return new

    def summary(self) -> dict:
        by_kind: dict = {}
        for k in self.catalog.kinds:
            by_kind[k] = by_kind.get(k, 0) + 1
        by_family: dict = {}
        for con in self.constraints:
            by_family[con.family] = by_family.get(con.family, 0) + 1
        return {
            "name": self.name,
            "n_variables": self.n_vars,
            "n_integer": int(self.integrality.sum()),
            "n_constraints": self.n_rows,
            "n_nonzeros": int(sum(len(c.cols) for c in self.constraints)),
            "variables_by_kind": dict(sorted(by_kind.items())),
            "constraints_by_family": dict(sorted(by_family.items())),
        }

    def check(self):
        """Raise if any coefficient is non-finite or references a missing variable."""
        n = self.n_vars
        for i, v in self._obj.items():
            if not math.isfinite(v) or not 0 <= i < n:
                raise ValueError(f"bad objective entry {i}: {v}")
        if not math.isfinite(self.constant):
            raise ValueError("non-finite objective constant")
        for con in self.constraints:
            if len(con.cols) and (con.cols.min() < 0 or con.cols.max() >= n):
                raise ValueError(f"row {con.name} references unknown variable")
            if not (np.all(np.isfinite(con.vals)) and math.isfinite(con.rhs)):
                raise ValueError(f"row {con.name} has non-finite data")
        for i, (lo, hi) in enumerate(zip(self.catalog.lb, self.catalog.ub)):
            if math.isnan(lo) or math.isnan(hi) or lo > hi:
                raise ValueError(f"variable {self.catalog.names[i]} has bad bounds [{lo}, {hi}]")
        return self


def from_arrays(c, A, senses, b, lb=None, ub=None, integer=None, constant=0.0, name="model"):
    """Build a LinearModel from dense arrays (variables x0.., rows r0..)."""
    A = np.atleast_2d(np.asarray(A, dtype=float)) if len(b) else np.zeros((0, len(c)))
    n = len(c)
    lb = np.zeros(n) if lb is None else lb
    ub = np.full(n, math.inf) if ub is None else ub
    integer = [False] * n if integer is None else integer
    m = LinearModel(name)
    for j in range(n):
        m.add_var(f"x{j}", lb[j], ub[j], integer[j])
        m.add_objective(j, float(c[j]))
    m.constant = float(constant)
    for i in range(len(b)):
        m.add_constraint(f"r{i}", {j: A[i, j] for j in range(n)}, senses[i], b[i])
    return m
