"""Bounded-variable primal simplex with dual extraction.

Problems are always minimizations::

    min  c @ x
    s.t. A[i] @ x  (=, <=, >=)  b[i]
         lower <= x <= upper        (bounds may be infinite)

Box constraints are handled natively by the simplex (a nonbasic variable sits
at one of its bounds), so only the general rows enter the basis.  Duals follow
the sensitivity convention ``duals[i] = d(optimal objective) / d(b[i])``.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field
from typing import Iterable, Mapping, Sequence

import numpy as np

EQ, LE, GE = "=", "<=", ">="
_RELATIONS = (EQ, LE, GE)


class Status(str, enum.Enum):
    OPTIMAL = "optimal"
    INFEASIBLE = "infeasible"
    UNBOUNDED = "unbounded"
    ITERATION_LIMIT = "iteration_limit"


@dataclass(frozen=True)
class Variable:
    lower: float = 0.0
    upper: float = math.inf
    cost: float = 0.0
    name: str = ""


@dataclass(frozen=True)
class Constraint:
    coefs: Mapping[int, float]
    relation: str
    rhs: float
    name: str = ""


def _readonly(a, dtype=float) -> np.ndarray:
    arr = np.array(a, dtype=dtype)
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True, eq=False)
class LpProblem:
    """Dense LP in minimization form.

    Use :meth:`from_rows` to build one from :class:`Variable` and
    :class:`Constraint` records.
    """

    cost: np.ndarray
    matrix: np.ndarray
    relations: tuple[str, ...]
    rhs: np.ndarray
    lower: np.ndarray
    upper: np.ndarray
    var_names: tuple[str, ...] = ()
    row_names: tuple[str, ...] = ()

    def __post_init__(self):
        cost = _readonly(self.cost)
        n = cost.shape[0]
        matrix = _readonly(self.matrix).reshape(-1, n)
        m = matrix.shape[0]
        rhs = _readonly(self.rhs)
        lower = _readonly(self.lower)
        upper = _readonly(self.upper)
        relations = tuple(self.relations)
        if rhs.shape != (m,) or len(relations) != m:
            raise ValueError("rhs and relations must have one entry per row")
        if lower.shape != (n,) or upper.shape != (n,):
            raise ValueError("bounds must have one entry per variable")
        if any(r not in _RELATIONS for r in relations):
            raise ValueError(f"relations must be one of {_RELATIONS}")
        if not (np.all(np.isfinite(cost)) and np.all(np.isfinite(matrix)) and np.all(np.isfinite(rhs))):
            raise ValueError("costs, coefficients and rhs must be finite")
        if np.any(np.isnan(lower)) or np.any(np.isnan(upper)) or np.any(lower > upper):
            raise ValueError("every variable needs lower <= upper")
        var_names = tuple(self.var_names) or tuple(f"x{j}" for j in range(n))
        row_names = tuple(self.row_names) or tuple(f"r{i}" for i in range(m))
        if len(var_names) != n or len(row_names) != m:
            raise ValueError("name lists must match problem dimensions")
        for key, value in dict(
            cost=cost, matrix=matrix, rhs=rhs, lower=lower, upper=upper,
            relations=relations, var_names=var_names, row_names=row_names,
        ).items():
            object.__setattr__(self, key, value)

    @classmethod
    def from_rows(cls, variables: Sequence[Variable], constraints: Iterable[Constraint]) -> "LpProblem":
        constraints = list(constraints)
        n = len(variables)
        matrix = np.zeros((len(constraints), n))
        for i, con in enumerate(constraints):
            for j, a in con.coefs.items():
                matrix[i, j] += a
        return cls(
            cost=[v.cost for v in variables],
            matrix=matrix,
            relations=tuple(c.relation for c in constraints),
            rhs=[c.rhs for c in constraints],
            lower=[v.lower for v in variables],
            upper=[v.upper for v in variables],
            var_names=tuple(v.name or f"x{j}" for j, v in enumerate(variables)),
            row_names=tuple(c.name or f"r{i}" for i, c in enumerate(constraints)),
        )

    @property
    def n_vars(self) -> int:
        return self.cost.shape[0]

    @property
    def n_rows(self) -> int:
        return self.rhs.shape[0]

    def to_dict(self) -> dict:
        def bound(v):
            return None if math.isinf(v) else float(v)

        return {
            "cost": self.cost.tolist(),
            "matrix": self.matrix.tolist(),
            "relations": list(self.relations),
            "rhs": self.rhs.tolist(),
            "lower": [bound(v) for v in self.lower],
            "upper": [bound(v) for v in self.upper],
            "var_names": list(self.var_names),
            "row_names": list(self.row_names),
        }

    @classmethod
    def from_dict(cls, data: Mapping) -> "LpProblem":
        return cls(
            cost=data["cost"],
            matrix=np.array(data["matrix"], dtype=float).reshape(-1, len(data["cost"])),
            relations=tuple(data["relations"]),
            rhs=data["rhs"],
            lower=[-math.inf if v is None else v for v in data["lower"]],
            upper=[math.inf if v is None else v for v in data["upper"]],
            var_names=tuple(data.get("var_names", ())),
            row_names=tuple(data.get("row_names", ())),
        )


@dataclass(frozen=True)
class SolverOptions:
    tol_feas: float = 1e-9
    tol_opt: float = 1e-9
    max_iterations: int = 10_000
    bland_after: int = 50
    refactor_every: int = 64
    pivot_tol: float = 1e-9
    debug_path: str | None = None

    def __post_init__(self):
        if self.tol_feas <= 0 or self.tol_opt <= 0:
            raise ValueError("tolerances must be positive")
        if self.max_iterations < 1:
            raise ValueError("max_iterations must be at least 1")


@dataclass(frozen=True, eq=False)
class LpSolution:
    """Outcome of :func:`solve`.

    For ``INFEASIBLE`` results, ``duals`` and ``reduced_costs`` hold the
    phase-1 multipliers and ``infeasibility`` the phase-1 optimum; they form
    the certificate used for diagnostics.  ``ray`` is set for ``UNBOUNDED``.
    """

    status: Status
    primal: np.ndarray
    objective: float
    duals: np.ndarray
    reduced_costs: np.ndarray
    iterations: int
    infeasibility: float = 0.0
    ray: np.ndarray | None = None
    basis: tuple[int, ...] = field(default=())

    @property
    def optimal(self) -> bool:
        return self.status is Status.OPTIMAL


# Nonbasic position codes.
_AT_LOWER, _AT_UPPER, _FREE, _BASIC = 0, 1, 2, 3


class _BoundedSimplex:
    def __init__(self, problem: LpProblem, options: SolverOptions):
        self.problem = problem
        self.opt = options
        n, m = problem.n_vars, problem.n_rows
        self.n = n
        self.m = m

        lower0 = problem.lower
        upper0 = problem.upper
        x0 = np.where(np.isfinite(lower0), lower0, np.where(np.isfinite(upper0), upper0, 0.0))
        residual = problem.rhs - problem.matrix @ x0

        # Slack per inequality row, artificial per row whose slack cannot
        # absorb the initial residual.
        cols = [problem.matrix]
        lower = [lower0]
        upper = [upper0]
        xs = [x0]
        basis = np.empty(m, dtype=int)
        n_slack = sum(r != EQ for r in problem.relations)
        slack_block = np.zeros((m, n_slack))
        slack_x = np.zeros(n_slack)
        art_rows = []
        k = 0
        for i, rel in enumerate(problem.relations):
            if rel != EQ:
                sign = 1.0 if rel == LE else -1.0
                slack_block[i, k] = sign
                value = residual[i] * sign
                if value >= 0:
                    basis[i] = n + k
                    slack_x[k] = value
                else:
                    art_rows.append(i)
                k += 1
            else:
                art_rows.append(i)
        cols.append(slack_block)
        lower.append(np.zeros(n_slack))
        upper.append(np.full(n_slack, math.inf))
        xs.append(slack_x)

        n_art = len(art_rows)
        art_block = np.zeros((m, n_art))
        art_x = np.zeros(n_art)
        for a, i in enumerate(art_rows):
            sign = 1.0 if residual[i] >= 0 else -1.0
            art_block[i, a] = sign
            art_x[a] = abs(residual[i])
            basis[i] = n + n_slack + a
        cols.append(art_block)
        lower.append(np.zeros(n_art))
        upper.append(np.full(n_art, math.inf))
        xs.append(art_x)

        self.A = np.hstack(cols)
        self.b = problem.rhs.astype(float)
        self.lower = np.concatenate(lower)
        self.upper = np.concatenate(upper)
        self.x = np.concatenate(xs)
        self.n_total = self.A.shape[1]
        self.art_start = n + n_slack
        self.basis = basis

        self.state = np.where(
            np.isfinite(self.lower), _AT_LOWER, np.where(np.isfinite(self.upper), _AT_UPPER, _FREE)
        )
        self.state[basis] = _BASIC
        self.iterations = 0
        self.pivots_since_refactor = 0
        self.degenerate_streak = 0
        self._log = open(options.debug_path, "a") if options.debug_path else None
        # Initial basis is a signed identity.
        self.binv = np.linalg.inv(self.A[:, basis])

    # basis maintenance

    def _refactor(self):
        self.binv = np.linalg.inv(self.A[:, self.basis])
        nonbasic = self.state != _BASIC
        self.x[self.basis] = 0.0
        rhs = self.b - self.A[:, nonbasic] @ self.x[nonbasic]
        self.x[self.basis] = self.binv @ rhs
        self.pivots_since_refactor = 0

    def _pivot(self, row: int, entering: int, alpha: np.ndarray):
        piv_row = self.binv[row] / alpha[row]
        self.binv -= np.outer(alpha, piv_row)
        self.binv[row] = piv_row
        self.basis[row] = entering
        self.state[entering] = _BASIC
        self.pivots_since_refactor += 1
        if self.pivots_since_refactor >= self.opt.refactor_every:
            self._refactor()

    def _duals(self, cost: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        y = cost[self.basis] @ self.binv
        d = cost - y @ self.A
        d[self.basis] = 0.0
        return y, d

    # iteration

    def _choose_entering(self, d: np.ndarray, tol: float, bland: bool) -> tuple[int, float]:
        state = self.state
        fixed = self.lower == self.upper
        can_up = (state == _AT_LOWER) | (state == _FREE)
        can_down = (state == _AT_UPPER) | (state == _FREE)
        up = can_up & (d < -tol) & ~fixed
        down = can_down & (d > tol) & ~fixed
        candidates = np.flatnonzero(up | down)
        if candidates.size == 0:
            return -1, 0.0
        if bland:
            j = int(candidates[0])
        else:
            j = int(candidates[np.argmax(np.abs(d[candidates]))])
        return j, (1.0 if d[j] < 0 else -1.0)

    def _ratio_test(self, j: int, direction: float, alpha: np.ndarray, bland: bool):
        """Return (step, leaving row or -1 for bound flip / unbounded, leaving state)."""
        ptol = self.opt.pivot_tol
        rate = -direction * alpha  # d x_B / d step
        xb = self.x[self.basis]
        lb = self.lower[self.basis]
        ub = self.upper[self.basis]

        step = math.inf
        row = -1
        leave_state = _AT_LOWER
        best_alpha = 0.0
        flip = self.upper[j] - self.lower[j]
        for i in range(self.m):
            r = rate[i]
            if r < -ptol and math.isfinite(lb[i]):
                t, st = max(xb[i] - lb[i], 0.0) / -r, _AT_LOWER
            elif r > ptol and math.isfinite(ub[i]):
                t, st = max(ub[i] - xb[i], 0.0) / r, _AT_UPPER
            else:
                continue
            if row < 0 or t < step - 1e-12 * max(1.0, abs(step)):
                better = True
            elif t <= step + 1e-12 * max(1.0, abs(step)):
                if bland:
                    better = self.basis[i] < self.basis[row]
                else:
                    better = abs(r) > best_alpha
            else:
                better = False
            if better:
                step, row, leave_state, best_alpha = t, i, st, abs(r)
        if flip <= step:
            return flip, -1, None
        return step, row, leave_state

    def _run(self, cost: np.ndarray, dtol: float) -> Status:
        while True:
            y, d = self._duals(cost)
            bland = self.degenerate_streak >= self.opt.bland_after
            j, direction = self._choose_entering(d, dtol, bland)
            if j < 0:
                return Status.OPTIMAL
            if self.iterations >= self.opt.max_iterations:
                return Status.ITERATION_LIMIT
            self.iterations += 1
            alpha = self.binv @ self.A[:, j]
            step, row, leave_state = self._ratio_test(j, direction, alpha, bland)
            if math.isinf(step):
                self._ray = (j, direction, alpha)
                return Status.UNBOUNDED

            self.x[self.basis] -= step * direction * alpha
            self.x[j] += step * direction
            if step <= 1e-12:
                self.degenerate_streak += 1
            else:
                self.degenerate_streak = 0

            if row < 0:
                self.state[j] = _AT_UPPER if direction > 0 else _AT_LOWER
                self.x[j] = self.upper[j] if direction > 0 else self.lower[j]
            else:
                leaving = self.basis[row]
                self.state[leaving] = leave_state
                self.x[leaving] = self.lower[leaving] if leave_state == _AT_LOWER else self.upper[leaving]
                self._pivot(row, j, alpha)
            if self._log:
                self._log.write(
                    f"it={self.iterations} enter={j} dir={direction:+.0f} row={row} "
                    f"step={step:.6g} obj={cost @ self.x:.10g} bland={int(bland)}\n"
                )

    def _drive_out_artificials(self):
        for row in range(self.m):
            var = self.basis[row]
            if var < self.art_start:
                continue
            binv_row = self.binv[row]
            candidates = np.flatnonzero(
                (self.state[: self.art_start] != _BASIC) & (self.lower[: self.art_start] < self.upper[: self.art_start])
            )
            if candidates.size == 0:
                continue
            entries = binv_row @ self.A[:, candidates]
            k = int(np.argmax(np.abs(entries)))
            if abs(entries[k]) <= 1e-7:
                continue  # redundant row; artificial stays basic at zero
            j = int(candidates[k])
            alpha = self.binv @ self.A[:, j]
            self.state[var] = _AT_LOWER
            self.x[var] = 0.0
            self._pivot(row, j, alpha)
        self._refactor()

    def solve(self) -> LpSolution:
        try:
            return self._solve()
        finally:
            if self._log:
                self._log.close()

    def _solve(self) -> LpSolution:
        n, opt = self.n, self.opt
        n_art = self.n_total - self.art_start

        if n_art:
            phase1 = np.zeros(self.n_total)
            phase1[self.art_start:] = 1.0
            status = self._run(phase1, opt.tol_opt)
            self._refactor()
            infeasibility = float(self.x[self.art_start:].sum())
            scale = 1.0 + float(np.max(np.abs(self.b), initial=0.0))
            if status is Status.ITERATION_LIMIT:
                return self._result(Status.ITERATION_LIMIT, np.zeros(self.n_total))
            if infeasibility > opt.tol_feas * scale:
                y, d = self._duals(phase1)
                return LpSolution(
                    status=Status.INFEASIBLE,
                    primal=self.x[:n].copy(),
                    objective=math.nan,
                    duals=y,
                    reduced_costs=d[:n],
                    iterations=self.iterations,
                    infeasibility=infeasibility,
                    basis=tuple(int(b) for b in self.basis),
                )
            self._drive_out_artificials()
            self.upper[self.art_start:] = 0.0
            self.x[self.art_start:] = np.clip(self.x[self.art_start:], 0.0, 0.0)

        cost = np.zeros(self.n_total)
        cost[:n] = self.problem.cost
        dtol = opt.tol_opt * (1.0 + float(np.max(np.abs(cost), initial=0.0)))
        self.degenerate_streak = 0
        status = self._run(cost, dtol)
        if status is Status.UNBOUNDED:
            j, direction, alpha = self._ray
            ray = np.zeros(self.n_total)
            ray[j] = direction
            ray[self.basis] = -direction * alpha
            return self._result(status, cost, ray=ray[:n])
        if status is Status.OPTIMAL:
            self._refactor()
        return self._result(status, cost)

    def _result(self, status: Status, cost: np.ndarray, ray=None) -> LpSolution:
        y, d = self._duals(cost)
        primal = self.x[: self.n].copy()
        return LpSolution(
            status=status,
            primal=primal,
            objective=float(self.problem.cost @ primal) if status is Status.OPTIMAL else math.nan,
            duals=y,
            reduced_costs=d[: self.n],
            iterations=self.iterations,
            ray=ray,
            basis=tuple(int(b) for b in self.basis),
        )


def solve(problem: LpProblem, options: SolverOptions | None = None) -> LpSolution:
    """Solve ``problem`` with the two-phase bounded-variable primal simplex.

    Pivoting is deterministic: largest reduced cost, switching to Bland's rule
    after a streak of degenerate pivots and back after a non-degenerate one.
    A problem with no rows is handled by bound selection alone.
    """
    options = options or SolverOptions()
    if problem.n_rows == 0:
        return _solve_box_only(problem)
    return _BoundedSimplex(problem, options).solve()


def _solve_box_only(problem: LpProblem) -> LpSolution:
    c = problem.cost
    x = np.zeros(problem.n_vars)
    for j, cj in enumerate(c):
        lo, hi = problem.lower[j], problem.upper[j]
        target = lo if cj > 0 else hi if cj < 0 else (lo if math.isfinite(lo) else hi if math.isfinite(hi) else 0.0)
        if math.isinf(target):
            ray = np.zeros(problem.n_vars)
            ray[j] = -np.sign(cj)
            return LpSolution(Status.UNBOUNDED, x, math.nan, np.zeros(0), c.copy(), 0, ray=ray)
        x[j] = target
    return LpSolution(Status.OPTIMAL, x, float(c @ x), np.zeros(0), c.copy(), 0)


@dataclass(frozen=True)
class KktReport:
    primal_violation: float
    dual_violation: float
    complementarity: float
    duality_gap: float

    def passed(self, tol: float, objective_scale: float = 1.0) -> bool:
        return (
            self.primal_violation <= tol
            and self.dual_violation <= tol
            and self.complementarity <= tol
            and self.duality_gap <= tol * objective_scale
        )


def check_kkt(problem: LpProblem, solution: LpSolution) -> KktReport:
    """Recompute optimality conditions for a primal/dual pair from scratch.

    Only ``solution.primal`` and ``solution.duals`` are used; reduced costs
    are rebuilt from the problem data.
    """
    x = np.asarray(solution.primal, dtype=float)
    y = np.asarray(solution.duals, dtype=float)
    A, b, c = problem.matrix, problem.rhs, problem.cost
    lo, hi = problem.lower, problem.upper
    rel = np.array(problem.relations)

    activity = A @ x
    slack = b - activity
    row_viol = np.where(rel == EQ, np.abs(slack), np.where(rel == LE, np.maximum(-slack, 0), np.maximum(slack, 0)))
    bound_viol = np.maximum(np.maximum(lo - x, x - hi), 0.0)
    primal = float(max(np.max(row_viol, initial=0.0), np.max(bound_viol, initial=0.0)))

    d = c - A.T @ y
    d_pos = np.maximum(d, 0.0)
    d_neg = np.maximum(-d, 0.0)
    sign_viol = np.where(rel == LE, np.maximum(y, 0), np.where(rel == GE, np.maximum(-y, 0), 0.0))
    bound_dual_viol = np.where(np.isinf(lo), d_pos, 0.0) + np.where(np.isinf(hi), d_neg, 0.0)
    dual = float(max(np.max(sign_viol, initial=0.0), np.max(bound_dual_viol, initial=0.0)))

    row_cs = np.where(rel == EQ, 0.0, np.abs(y * slack))
    with np.errstate(invalid="ignore"):
        var_cs = np.where(np.isfinite(lo), d_pos * np.abs(x - lo), 0.0) + np.where(
            np.isfinite(hi), d_neg * np.abs(hi - x), 0.0
        )
    comp = float(max(np.max(row_cs, initial=0.0), np.max(var_cs, initial=0.0)))

    dual_obj = float(b @ y)
    dual_obj += float(np.sum(np.where(np.isfinite(lo), d_pos * np.where(np.isfinite(lo), lo, 0.0), 0.0)))
    dual_obj -= float(np.sum(np.where(np.isfinite(hi), d_neg * np.where(np.isfinite(hi), hi, 0.0), 0.0)))
    gap = abs(float(c @ x) - dual_obj)
    return KktReport(primal, dual, comp, gap)
