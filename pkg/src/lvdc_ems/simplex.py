"""Dense two-phase primal simplex.

Day-ahead scheduling LPs have a few hundred variables, so a dense tableau
with equilibration scaling is adequate. Pivoting is deterministic: Dantzig
pricing, switching to Bland's rule while pivots are degenerate; ratio-test
ties go to the lowest basic variable index.
"""

from __future__ import annotations

import io
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

OPTIMAL = "optimal"
INFEASIBLE = "infeasible"
UNBOUNDED = "unbounded"

SENSES = ("<=", "==", ">=")


class IterationLimitError(RuntimeError):
    """Simplex did not terminate within the iteration budget."""


@dataclass
class LpProblem:
    """min objective @ x  s.t.  A x (sense) rhs,  lower <= x <= upper."""

    objective: np.ndarray
    A: np.ndarray
    senses: tuple[str, ...]
    rhs: np.ndarray
    lower: np.ndarray
    upper: np.ndarray
    var_names: tuple[str, ...] = ()
    row_names: tuple[str, ...] = ()

    def __post_init__(self) -> None:
        self.objective = np.asarray(self.objective, dtype=float).reshape(-1)
        n = self.objective.size
        self.A = np.asarray(self.A, dtype=float).reshape(-1, n)
        m = self.A.shape[0]
        self.rhs = np.asarray(self.rhs, dtype=float).reshape(-1)
        self.lower = np.asarray(self.lower, dtype=float).reshape(-1)
        self.upper = np.asarray(self.upper, dtype=float).reshape(-1)
        self.senses = tuple(self.senses)
        if self.rhs.size != m or len(self.senses) != m:
            raise ValueError("rhs/senses length must match the number of rows")
        if self.lower.size != n or self.upper.size != n:
            raise ValueError("bounds length must match the number of variables")
        if any(s not in SENSES for s in self.senses):
            raise ValueError(f"senses must be one of {SENSES}")
        if not (np.all(np.isfinite(self.objective)) and np.all(np.isfinite(self.A))
                and np.all(np.isfinite(self.rhs))):
            raise ValueError("coefficients must be finite")
        if not np.all(np.isfinite(self.lower)):
            raise ValueError("lower bounds must be finite")
        if np.any(self.lower > self.upper):
            raise ValueError("lower bound exceeds upper bound")
        if not self.var_names:
            self.var_names = tuple(f"x{j}" for j in range(n))
        if not self.row_names:
            self.row_names = tuple(f"r{i}" for i in range(m))

    @property
    def n_vars(self) -> int:
        return self.objective.size

    @property
    def n_rows(self) -> int:
        return self.A.shape[0]


@dataclass
class LpSolution:
    status: str
    x: Optional[np.ndarray]
    objective_value: float
    iterations: int
    infeasible_rows: tuple[str, ...] = field(default=())


@dataclass(frozen=True)
class Violation:
    kind: str  # "row", "lower" or "upper"
    index: int
    name: str
    amount: float


def check_feasible(problem: LpProblem, x, tol: float = 1e-9) -> list[Violation]:
    """Every row or bound violated by more than ``tol``; empty iff feasible."""
    x = np.asarray(x, dtype=float).reshape(-1)
    if x.size != problem.n_vars:
        raise ValueError("x has the wrong dimension")
    out = []
    lhs = problem.A @ x
    for i, (v, s, b) in enumerate(zip(lhs, problem.senses, problem.rhs)):
        if s == "<=":
            amount = v - b
        elif s == ">=":
            amount = b - v
        else:
            amount = abs(v - b)
        if amount > tol:
            out.append(Violation("row", i, problem.row_names[i], float(amount)))
    for j in range(problem.n_vars):
        if problem.lower[j] - x[j] > tol:
            out.append(Violation("lower", j, problem.var_names[j], float(problem.lower[j] - x[j])))
        if x[j] - problem.upper[j] > tol:
            out.append(Violation("upper", j, problem.var_names[j], float(x[j] - problem.upper[j])))
    return out


class _Tableau:
    """Working state of one solve: tableau rows, basis and column roles."""

    def __init__(self, A, senses, b, row_labels, pivot_tol):
        m, n = A.shape
        self.pivot_tol = pivot_tol
        self.n_struct = n
        A = A.copy()
        b = b.copy()
        senses = list(senses)
        for i in range(m):
            if b[i] < 0:
                A[i] = -A[i]
                b[i] = -b[i]
                senses[i] = {"<=": ">=", ">=": "<=", "==": "=="}[senses[i]]

        n_slack = sum(s != "==" for s in senses)
        n_art = sum(s != "<=" for s in senses)
        ncols = n + n_slack + n_art
        T = np.zeros((m + 1, ncols + 1))
        T[:m, :n] = A
        T[:m, -1] = b
        basis = np.empty(m, dtype=int)
        artificial = np.zeros(ncols, dtype=bool)
        k_slack, k_art = n, n + n_slack
        for i, s in enumerate(senses):
            if s == "<=":
                T[i, k_slack] = 1.0
                basis[i] = k_slack
                k_slack += 1
            else:
                if s == ">=":
                    T[i, k_slack] = -1.0
                    k_slack += 1
                T[i, k_art] = 1.0
                basis[i] = k_art
                artificial[k_art] = True
                k_art += 1
        self.T = T
        self.T0 = T[:m].copy()
        self.basis = basis
        self.artificial = artificial
        self.allowed = np.ones(ncols, dtype=bool)
        self.row_labels = list(row_labels)
        self.iterations = 0

    @property
    def m(self) -> int:
        return self.T.shape[0] - 1

    def pivot(self, r: int, c: int) -> None:
        T = self.T
        T[r] /= T[r, c]
        col = T[:, c].copy()
        col[r] = 0.0
        T -= np.outer(col, T[r])
        T[:, c] = 0.0
        T[r, c] = 1.0
        self.basis[r] = c
        self.iterations += 1

    def set_objective(self, cost: np.ndarray) -> None:
        """Install reduced costs for ``cost`` given the current basis."""
        m = self.m
        row = np.zeros(self.T.shape[1])
        row[: cost.size] = cost
        cb = row[self.basis].copy()
        self.T[m] = row - cb @ self.T[:m]

    def run(self, tol: float, max_iter: int) -> str:
        T, m = self.T, self.m
        bland = False
        while True:
            d = np.where(self.allowed, T[m, :-1], 0.0)
            if bland:
                cand = np.flatnonzero(d < -tol)
                if cand.size == 0:
                    return OPTIMAL
                enter = int(cand[0])
            else:
                enter = int(np.argmin(d))
                if d[enter] >= -tol:
                    return OPTIMAL
            col = T[:m, enter]
            rows = np.flatnonzero(col > self.pivot_tol)
            if rows.size == 0:
                return UNBOUNDED
            ratios = np.maximum(T[rows, -1], 0.0) / col[rows]
            best = ratios.min()
            ties = rows[ratios <= best + 1e-12 * max(1.0, best)]
            leave = int(ties[np.argmin(self.basis[ties])])
            if self.iterations >= max_iter:
                raise IterationLimitError(f"simplex exceeded {max_iter} iterations")
            bland = best <= tol
            self.pivot(leave, enter)

    def drive_out_artificials(self) -> None:
        r = 0
        while r < self.m:
            if self.artificial[self.basis[r]]:
                row = np.abs(self.T[r, :-1])
                row[self.artificial] = 0.0
                j = int(np.argmax(row))
                if row[j] > self.pivot_tol:
                    self.pivot(r, j)
                else:
                    # redundant equality: every structural coefficient vanished
                    self.T = np.delete(self.T, r, axis=0)
                    self.T0 = np.delete(self.T0, r, axis=0)
                    self.basis = np.delete(self.basis, r)
                    del self.row_labels[r]
                    continue
            r += 1

    def basic_values(self) -> np.ndarray:
        """Basic solution recomputed from the original rows (limits drift)."""
        m = self.m
        y = np.zeros(self.T.shape[1] - 1)
        if m == 0:
            return y
        B = self.T0[:, self.basis]
        try:
            yb = np.linalg.solve(B, self.T0[:, -1])
        except np.linalg.LinAlgError:
            yb = self.T[:m, -1]
        y[self.basis] = yb
        return y


def _equilibrate(A: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Row then column max-norm scale factors."""
    absA = np.abs(A)
    rmax = absA.max(axis=1) if A.shape[1] else np.ones(A.shape[0])
    r = np.where(rmax > 0, 1.0 / np.where(rmax > 0, rmax, 1.0), 1.0)
    absA = absA * r[:, None]
    cmax = absA.max(axis=0) if A.shape[0] else np.ones(A.shape[1])
    s = np.where(cmax > 0, 1.0 / np.where(cmax > 0, cmax, 1.0), 1.0)
    return r, s


def solve(problem: LpProblem, max_iter: Optional[int] = None, tol: float = 1e-9,
          pivot_tol: float = 1e-10, scale: bool = True) -> LpSolution:
    """Solve ``problem``; raises IterationLimitError if the budget runs out."""
    n = problem.n_vars
    if max_iter is None:
        max_iter = 10_000 * max(n, 1)
    lo, up = problem.lower, problem.upper

    # shift x = lo + x', then append finite upper bounds as rows
    b = problem.rhs - problem.A @ lo
    A = problem.A
    finite_up = np.flatnonzero(np.isfinite(up))
    UB = np.zeros((finite_up.size, n))
    UB[np.arange(finite_up.size), finite_up] = 1.0
    A_all = np.vstack([A, UB])
    b_all = np.concatenate([b, up[finite_up] - lo[finite_up]])
    senses = list(problem.senses) + ["<="] * finite_up.size
    labels = list(problem.row_names) + [f"upper:{problem.var_names[j]}" for j in finite_up]

    if scale and A_all.size:
        r, s = _equilibrate(A_all)
    else:
        r, s = np.ones(A_all.shape[0]), np.ones(n)
    A_s = A_all * r[:, None] * s[None, :]
    b_s = b_all * r
    c_s = problem.objective * s
    cmax = np.abs(c_s).max() if n else 0.0
    if cmax > 0:
        c_s = c_s / cmax

    tab = _Tableau(A_s, senses, b_s, labels, pivot_tol)
    m = tab.m

    if tab.artificial.any():
        tab.set_objective(tab.artificial.astype(float))
        tab.run(tol, max_iter)
        feas_tol = tol * max(1.0, float(np.abs(b_s).max()) if b_s.size else 1.0)
        phase1 = -tab.T[m, -1]
        if phase1 > feas_tol:
            bad = tuple(tab.row_labels[i] for i in range(tab.m)
                        if tab.artificial[tab.basis[i]] and tab.T[i, -1] > feas_tol)
            return LpSolution(INFEASIBLE, None, float("nan"), tab.iterations, bad)
        tab.drive_out_artificials()
        tab.allowed &= ~tab.artificial

    full_cost = np.zeros(tab.T.shape[1] - 1)
    full_cost[:n] = c_s
    tab.set_objective(full_cost)
    status = tab.run(tol, max_iter)
    if status == UNBOUNDED:
        return LpSolution(UNBOUNDED, None, float("-inf"), tab.iterations)

    y = tab.basic_values()[:n]
    x = lo + s * y
    x = np.minimum(np.maximum(x, lo), up)
    return LpSolution(OPTIMAL, x, float(problem.objective @ x), tab.iterations)


def dump_lp(problem: LpProblem) -> str:
    """Plain-text listing: objective, then one constraint or bound per line."""

    def expr(coefs):
        terms = [f"{c:+.17g} {problem.var_names[j]}" for j, c in enumerate(coefs) if c != 0.0]
        return " ".join(terms) if terms else "0"

    out = io.StringIO()
    out.write(f"# lp vars={problem.n_vars} rows={problem.n_rows}\n")
    out.write(f"minimize: {expr(problem.objective)}\n")
    for i in range(problem.n_rows):
        out.write(f"{problem.row_names[i]}: {expr(problem.A[i])} "
                  f"{problem.senses[i]} {problem.rhs[i]:.17g}\n")
    for j in range(problem.n_vars):
        out.write(f"bound {problem.var_names[j]}: {problem.lower[j]:.17g} <= x <= "
                  f"{problem.upper[j]:.17g}\n")
    return out.getvalue()
