"""Dense LP solver used for the restricted master problems.

Bounded-variable primal simplex, two phases, with the basis refactorized
every iteration (the masters solved here have m + 1 rows, so robustness
matters far more than factor updates).  Pricing is Dantzig's rule until
a run of degenerate pivots trips Bland's rule, which is then kept for the
rest of the solve to guarantee termination.

Dual sign convention: the reported row duals y satisfy, for a minimization
problem, y >= 0 on ">=" rows and y <= 0 on "<=" rows at optimality; the
reduced cost of a structural column j is c_j - y @ A[:, j].  Under this
convention the duals of the master's coverage rows are exactly the
attacker's marginal probabilities.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import SolverFailureError, ValidationError
from .game import InspectionInstance

PIVOT_TOL = 1e-10
FEAS_TOL = 1e-7
OPT_TOL = 1e-9

_LOWER, _UPPER, _FREE, _BASIC = 0, 1, 2, 3


@dataclass
class DenseLP:
    """min c @ x  s.t.  A x (<=, =, >=) b,  lb <= x <= ub."""

    c: np.ndarray
    A: np.ndarray
    senses: tuple
    b: np.ndarray
    lb: np.ndarray | None = None
    ub: np.ndarray | None = None

    def __post_init__(self):
        self.c = np.asarray(self.c, dtype=float)
        self.A = np.atleast_2d(np.asarray(self.A, dtype=float))
        self.b = np.asarray(self.b, dtype=float)
        self.senses = tuple(self.senses)
        rows, cols = self.A.shape
        if self.c.shape != (cols,) or self.b.shape != (rows,):
            raise ValidationError("LP dimensions are inconsistent")
        if len(self.senses) != rows:
            raise ValidationError("one sense is required per row")
        if any(s not in ("<=", "=", ">=") for s in self.senses):
            raise ValidationError("row senses must be '<=', '=' or '>='")
        self.lb = np.zeros(cols) if self.lb is None else np.asarray(self.lb, float)
        self.ub = np.full(cols, np.inf) if self.ub is None else np.asarray(self.ub, float)
        if self.lb.shape != (cols,) or self.ub.shape != (cols,):
            raise ValidationError("bound vectors must match the column count")
        for arr in (self.c, self.A, self.b, self.lb, self.ub):
            if np.any(np.isnan(arr)):
                raise ValidationError("LP data contains NaN")
        if np.any(self.lb > self.ub):
            raise ValidationError("some lower bound exceeds its upper bound")

    @property
    def num_rows(self) -> int:
        return self.A.shape[0]

    @property
    def num_cols(self) -> int:
        return self.A.shape[1]


@dataclass
class LPSolution:
    status: str  # optimal | infeasible | unbounded
    x: np.ndarray | None = None
    duals: np.ndarray | None = None
    objective: float | None = None
    iterations: int = 0
    diagnostics: dict = field(default_factory=dict)


class _Simplex:
    """One solve over the standard form [A | I] with bounded variables."""

    def __init__(self, lp: DenseLP):
        rows, cols = lp.num_rows, lp.num_cols
        self.rows = rows
        self.n_struct = cols
        self.n_total = cols + rows
        self.A = np.hstack([lp.A, np.eye(rows)])
        self.b = lp.b.copy()
        self.lb = np.concatenate([lp.lb, np.zeros(rows)])
        self.ub = np.concatenate([lp.ub, np.zeros(rows)])
        for i, sense in enumerate(lp.senses):
            if sense == "<=":
                self.lb[cols + i], self.ub[cols + i] = 0.0, np.inf
            elif sense == ">=":
                self.lb[cols + i], self.ub[cols + i] = -np.inf, 0.0
            else:
                self.lb[cols + i], self.ub[cols + i] = 0.0, 0.0
        self.cost = np.concatenate([lp.c, np.zeros(rows)])
        self.art_cols: list[int] = []
        self.iterations = 0
        self.bland = False
        self.degenerate_run = 0
        self.bland_threshold = 5 * (rows + self.n_total)
        self.max_pivots = 20_000 + 200 * (rows + self.n_total)

    # -- state helpers ---------------------------------------------------

    def _default_status(self) -> np.ndarray:
        status = np.empty(self.A.shape[1], dtype=np.int8)
        for j in range(self.A.shape[1]):
            if np.isfinite(self.lb[j]):
                status[j] = _LOWER
            elif np.isfinite(self.ub[j]):
                status[j] = _UPPER
            else:
                status[j] = _FREE
        return status

    def _nonbasic_values(self) -> np.ndarray:
        vals = np.where(self.status == _LOWER, self.lb, 0.0)
        vals = np.where(self.status == _UPPER, self.ub, vals)
        return np.where(self.status == _BASIC, 0.0, vals)

    def _compute_basics(self) -> np.ndarray:
        residual = self.b - self.A @ self._nonbasic_values()
        try:
            return np.linalg.solve(self.A[:, self.basis], residual)
        except np.linalg.LinAlgError as exc:
            raise SolverFailureError(f"singular basis matrix: {exc}") from exc

    def _set_basis(self, basis: list[int]) -> None:
        self.basis = list(basis)
        self.status = self._default_status()
        for j in self.basis:
            self.status[j] = _BASIC

    # -- phase 1 ---------------------------------------------------------

    def _install_start(self, initial_basis) -> bool:
        """Try the caller's basis; fall back to logicals plus artificials.

        Returns True when a feasible starting basis is in place and no
        phase-1 work is needed.
        """
        if initial_basis is not None and len(set(initial_basis)) == self.rows:
            self._set_basis(list(initial_basis))
            try:
                x_b = self._compute_basics()
            except SolverFailureError:
                x_b = None
            if x_b is not None:
                lo = self.lb[self.basis] - FEAS_TOL
                hi = self.ub[self.basis] + FEAS_TOL
                if np.all(x_b >= lo) and np.all(x_b <= hi):
                    return True

        logicals = [self.n_struct + i for i in range(self.rows)]
        self._set_basis(logicals)
        x_b = self._compute_basics()
        lo, hi = self.lb[self.basis], self.ub[self.basis]
        if np.all(x_b >= lo - FEAS_TOL) and np.all(x_b <= hi + FEAS_TOL):
            return True

        # slack basis violates some logical bound: park those logicals at
        # their nearest bound and cover the residual with artificials
        art_of_row = {}
        for i in range(self.rows):
            if lo[i] - FEAS_TOL <= x_b[i] <= hi[i] + FEAS_TOL:
                continue
            logical = self.n_struct + i
            bound = hi[i] if x_b[i] > hi[i] else lo[i]
            residual = x_b[i] - bound
            col = np.zeros(self.rows)
            col[i] = 1.0 if residual > 0 else -1.0
            self.A = np.hstack([self.A, col[:, None]])
            self.lb = np.append(self.lb, 0.0)
            self.ub = np.append(self.ub, np.inf)
            self.cost = np.append(self.cost, 0.0)
            j = self.A.shape[1] - 1
            self.art_cols.append(j)
            art_of_row[i] = j
            self.status = np.append(self.status, _LOWER)
            self.status[logical] = _UPPER if x_b[i] > hi[i] else _LOWER
            self.basis[i] = j
            self.status[j] = _BASIC
        return False

    def _phase1(self) -> bool:
        phase_cost = np.zeros_like(self.cost)
        phase_cost[self.art_cols] = 1.0
        if self._iterate(phase_cost) == "unbounded":
            raise SolverFailureError("phase-1 objective reported unbounded")
        x_b = self._compute_basics()
        infeasibility = sum(
            x_b[i] for i in range(self.rows) if self.basis[i] in self.art_cols
        )
        if infeasibility > 10 * FEAS_TOL:
            return False
        self._evict_artificials()
        # freeze every artificial at zero for phase 2
        for j in self.art_cols:
            self.lb[j] = self.ub[j] = 0.0
            if self.status[j] == _FREE or self.status[j] == _UPPER:
                self.status[j] = _LOWER
        return True

    def _evict_artificials(self) -> None:
        basic_arts = [i for i in range(self.rows) if self.basis[i] in self.art_cols]
        if not basic_arts:
            return
        B = self.A[:, self.basis]
        try:
            binv = np.linalg.inv(B)
        except np.linalg.LinAlgError as exc:
            raise SolverFailureError(f"singular basis after phase 1: {exc}") from exc
        for i in basic_arts:
            row = binv[i]
            for j in range(self.n_total):
                if self.status[j] == _BASIC or j in self.art_cols:
                    continue
                if abs(row @ self.A[:, j]) > PIVOT_TOL:
                    old = self.basis[i]
                    prev = self.status[j]
                    self.basis[i] = j
                    self.status[j] = _BASIC
                    self.status[old] = _LOWER
                    try:
                        binv = np.linalg.inv(self.A[:, self.basis])
                    except np.linalg.LinAlgError:
                        # undo and leave the artificial pinned in the basis
                        self.basis[i] = old
                        self.status[j] = prev
                        self.status[old] = _BASIC
                        binv = np.linalg.inv(self.A[:, self.basis])
                        continue
                    break

    # -- simplex core ----------------------------------------------------

    def _iterate(self, cost: np.ndarray) -> str:
        while True:
            if self.iterations > self.max_pivots:
                raise SolverFailureError(
                    f"pivot cap {self.max_pivots} exceeded "
                    f"(rows={self.rows}, cols={self.n_total}, bland={self.bland})"
                )
            self.iterations += 1
            B = self.A[:, self.basis]
            try:
                y = np.linalg.solve(B.T, cost[self.basis])
            except np.linalg.LinAlgError as exc:
                raise SolverFailureError(f"singular basis matrix: {exc}") from exc
            reduced = cost - y @ self.A
            entering, direction = self._price(reduced)
            if entering is None:
                return "optimal"
            x_b = self._compute_basics()
            w = np.linalg.solve(B, self.A[:, entering])
            step, leave_row, hit_upper = self._ratio_test(entering, direction, x_b, w)
            if step is None:
                return "unbounded"
            if step <= PIVOT_TOL:
                self.degenerate_run += 1
                if self.degenerate_run >= self.bland_threshold:
                    self.bland = True
            else:
                self.degenerate_run = 0
            if leave_row is None:  # bound flip, basis unchanged
                self.status[entering] = _UPPER if self.status[entering] == _LOWER else _LOWER
                continue
            leaving = self.basis[leave_row]
            self.basis[leave_row] = entering
            self.status[entering] = _BASIC
            self.status[leaving] = _UPPER if hit_upper else _LOWER

    def _price(self, reduced: np.ndarray):
        movable = self.lb < self.ub
        at_lower = (self.status == _LOWER) & movable & (reduced < -OPT_TOL)
        at_upper = (self.status == _UPPER) & movable & (reduced > OPT_TOL)
        free = (self.status == _FREE) & (np.abs(reduced) > OPT_TOL)
        score = np.zeros_like(reduced)
        score[at_lower] = -reduced[at_lower]
        score[at_upper] = reduced[at_upper]
        score[free] = np.abs(reduced[free])
        eligible = np.flatnonzero(score > 0)
        if eligible.size == 0:
            return None, 0
        if self.bland:
            j = int(eligible[0])
        else:
            j = int(eligible[np.argmax(score[eligible])])
        if self.status[j] == _UPPER or (self.status[j] == _FREE and reduced[j] > 0):
            return j, -1
        return j, +1

    def _ratio_test(self, entering: int, direction: int, x_b: np.ndarray, w: np.ndarray):
        """Returns (step, leaving_row or None for a bound flip, hit_upper)."""
        best = np.inf
        span = self.ub[entering] - self.lb[entering]
        if np.isfinite(span):
            best = span
        leave_row = None
        hit_upper = False
        basis_idx = np.asarray(self.basis)
        delta = -direction * w
        for i in range(self.rows):
            d = delta[i]
            var = basis_idx[i]
            if d < -PIVOT_TOL and np.isfinite(self.lb[var]):
                t = (x_b[i] - self.lb[var]) / (-d)
                hits_up = False
            elif d > PIVOT_TOL and np.isfinite(self.ub[var]):
                t = (self.ub[var] - x_b[i]) / d
                hits_up = True
            else:
                continue
            t = max(t, 0.0)
            better = t < best - PIVOT_TOL
            tie = abs(t - best) <= PIVOT_TOL
            if better or (tie and leave_row is not None and self._break_tie(i, leave_row, w)):
                best = t
                leave_row = i
                hit_upper = hits_up
        if not np.isfinite(best):
            return None, None, False
        return best, leave_row, hit_upper

    def _break_tie(self, i: int, current: int, w: np.ndarray) -> bool:
        if self.bland:
            return self.basis[i] < self.basis[current]
        return abs(w[i]) > abs(w[current])

    # -- public ----------------------------------------------------------

    def solve(self, initial_basis=None) -> LPSolution:
        feasible_start = self._install_start(initial_basis)
        if not feasible_start and not self._phase1():
            return LPSolution(status="infeasible", iterations=self.iterations)
        status = self._iterate(self.cost)
        if status == "unbounded":
            return LPSolution(status="unbounded", iterations=self.iterations)
        return self._extract()

    def _extract(self) -> LPSolution:
        x_full = self._nonbasic_values()
        x_b = self._compute_basics()
        x_full[self.basis] = x_b
        B = self.A[:, self.basis]
        y = np.linalg.solve(B.T, self.cost[self.basis])
        x = x_full[: self.n_struct]
        objective = float(self.cost[: self.n_total] @ x_full[: self.n_total])
        self._consistency_checks(x_full, y)
        return LPSolution(
            status="optimal",
            x=x,
            duals=y,
            objective=objective,
            iterations=self.iterations,
            diagnostics={"bland": self.bland},
        )

    def _consistency_checks(self, x_full: np.ndarray, y: np.ndarray) -> None:
        scale = 1.0 + float(np.abs(self.b).max(initial=0.0))
        residual = self.A @ x_full - self.b
        if np.any(np.abs(residual) > FEAS_TOL * scale):
            raise SolverFailureError(
                f"primal residual {np.abs(residual).max():.3e} exceeds tolerance"
            )
        below = self.lb - x_full
        above = x_full - self.ub
        if max(below.max(initial=0.0), above.max(initial=0.0)) > FEAS_TOL * scale:
            raise SolverFailureError("optimal point violates variable bounds")
        reduced = self.cost - y @ self.A
        bad = 0.0
        for j in range(self.A.shape[1]):
            if self.status[j] == _LOWER and self.lb[j] < self.ub[j]:
                bad = max(bad, -reduced[j])
            elif self.status[j] == _UPPER and self.lb[j] < self.ub[j]:
                bad = max(bad, reduced[j])
            elif self.status[j] == _FREE:
                bad = max(bad, abs(reduced[j]))
        if bad > FEAS_TOL * (1.0 + float(np.abs(self.cost).max(initial=0.0))):
            raise SolverFailureError(f"dual infeasibility {bad:.3e} at optimum")
        nonbasic = self.status != _BASIC
        dual_obj = float(y @ self.b) + float(reduced[nonbasic] @ x_full[nonbasic])
        primal_obj = float(self.cost @ x_full)
        if abs(dual_obj - primal_obj) > 1e-6 * (1.0 + abs(primal_obj)):
            raise SolverFailureError(
                f"strong duality gap {abs(dual_obj - primal_obj):.3e} at optimum"
            )


def solve_lp(lp: DenseLP, initial_basis=None) -> LPSolution:
    """Solve a dense LP to a basic optimal solution with row duals.

    `initial_basis` may list one variable index per row (structural
    columns first, then the per-row logicals); an infeasible or singular
    suggestion silently falls back to the standard phase-1 start.
    """
    return _Simplex(lp).solve(initial_basis=initial_basis)


def build_rmp(instance: InspectionInstance, columns) -> DenseLP:
    """Master LP over a set of defender columns.

    Variables are the column weights, one shortfall variable per
    component, and the budget price; every variable is nonnegative.  Row
    e reads  price + shortfall_e - sum_S weight_S u(S, e) >= 0  and the
    final row pins the weights to a probability distribution.  The duals
    of the coverage rows form the attacker's marginal best response and
    the dual of the distribution row is the master's value.
    """
    cols = list(columns)
    if not cols:
        raise ValidationError("at least one defender column is required")
    m = instance.m
    k = len(cols)
    A = np.zeros((m + 1, k + m + 1))
    for idx, S in enumerate(cols):
        A[:m, idx] = -instance.undetection_row(S)
    A[:m, k : k + m] = np.eye(m)
    A[:m, k + m] = 1.0
    A[m, :k] = 1.0
    b = np.zeros(m + 1)
    b[m] = 1.0
    c = np.zeros(k + m + 1)
    c[k : k + m] = 1.0
    c[k + m] = float(instance.r_A)
    senses = tuple([">="] * m + ["="])
    return DenseLP(c=c, A=A, senses=senses, b=b)


def rmp_crash_basis(num_columns: int, m: int) -> list[int]:
    """Feasible starting basis for the master: the shortfall variable of
    each coverage row plus the first column weight on the distribution row."""
    return [num_columns + e for e in range(m)] + [0]
