"""Hourly welfare-maximizing clearing of the distribution market.

Each hour is an independent LP (nothing couples hours), solved as the
minimization

    min  -sum(b * DX) + scale * lambda_t * PM + mu * (Ppos + Pneg)

subject to one balance row per bus, the assigned-power deviation row
``PM - Ppos + Pneg = PD_t`` and box limits on segments and line flows.  The
bus load ``D = sum(DX) + D_fixed`` is substituted into the balance rows, so
the dual of bus ``m``'s row is directly its price.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field, replace

import numpy as np

from .lp import EQ, KktReport, LpProblem, LpSolution, SolverOptions, Status, check_kkt, solve
from .model import (
    AssignedPowerSeries,
    CustomerBid,
    FixedLoadSeries,
    Network,
    TlmpSeries,
    ValidationError,
    incidence,
    validate_network,
)

DEFAULT_LARGE_MU = 1e6


class ClearingError(RuntimeError):
    def __init__(self, hour: int, message: str, details: tuple[str, ...] = ()):
        self.hour = hour
        self.details = details
        text = f"hour {hour}: {message}"
        if details:
            text += "; binding candidates: " + ", ".join(details)
        super().__init__(text)


class InfeasibleHourError(ClearingError):
    pass


class UnboundedHourError(ClearingError):
    pass


class SolverFailure(ClearingError):
    pass


class ScheduleUnreachableWarning(UserWarning):
    pass


@dataclass(frozen=True)
class ClearingInput:
    network: Network
    bids: tuple[CustomerBid, ...]
    fixed: FixedLoadSeries
    tlmp: TlmpSeries
    assigned: AssignedPowerSeries
    mu: float = 0.0
    tlmp_scale: float = 1.0
    lambda_enabled: bool = True

    def __post_init__(self):
        object.__setattr__(self, "bids", tuple(self.bids))
        if not (self.mu >= 0 and math.isfinite(self.mu)):
            raise ValidationError(f"mu must be finite and >= 0, got {self.mu}")
        if not (self.tlmp_scale >= 0 and math.isfinite(self.tlmp_scale)):
            raise ValidationError(f"tlmp_scale must be finite and >= 0, got {self.tlmp_scale}")
        horizons = {self.fixed.horizon, self.tlmp.horizon, self.assigned.horizon}
        if len(horizons) != 1:
            raise ValidationError(f"time series horizons disagree: {sorted(horizons)}")

    @property
    def horizon(self) -> int:
        return self.tlmp.horizon

    def import_price(self, hour: int) -> float:
        """Coefficient of the grid import in the minimized objective."""
        return self.tlmp_scale * self.tlmp.prices[hour] if self.lambda_enabled else 0.0

    def effective_tlmp(self, hour: int) -> float:
        """T-LMP used for settlement: the scaled input price."""
        return self.tlmp_scale * self.tlmp.prices[hour]

    def validate(self) -> None:
        report = validate_network(self.network)
        if not report.ok:
            raise ValidationError("; ".join(report.errors))
        buses = set(self.network.buses)
        for bid in self.bids:
            if bid.bus not in buses:
                raise ValidationError(f"bid at undeclared bus {bid.bus}")
        for bus in self.fixed.loads:
            if bus not in buses:
                raise ValidationError(f"fixed load at undeclared bus {bus}")


@dataclass(frozen=True)
class LpLayout:
    """Column and row positions of the hourly LP."""

    dx: tuple[np.ndarray, ...]  # column indices per bid
    flow: np.ndarray
    p_main: int
    p_pos: int
    p_neg: int
    balance: np.ndarray  # row index per bus (network.buses order)
    deviation: int

    @classmethod
    def of(cls, inp: ClearingInput) -> "LpLayout":
        col = 0
        dx = []
        for bid in inp.bids:
            k = len(bid.segments)
            dx.append(np.arange(col, col + k))
            col += k
        n_lines = len(inp.network.lines)
        flow = np.arange(col, col + n_lines)
        col += n_lines
        n_bus = len(inp.network.buses)
        return cls(tuple(dx), flow, col, col + 1, col + 2, np.arange(n_bus), n_bus)

    @property
    def n_vars(self) -> int:
        return self.p_neg + 1


def build_hourly_lp(inp: ClearingInput, hour: int) -> LpProblem:
    net = inp.network
    lay = LpLayout.of(inp)
    index = net.bus_index()
    n_bus = len(net.buses)
    n = lay.n_vars

    cost = np.zeros(n)
    lower = np.zeros(n)
    upper = np.zeros(n)
    names = [""] * n
    A = np.zeros((n_bus + 1, n))
    rhs = np.zeros(n_bus + 1)

    for bid, cols in zip(inp.bids, lay.dx):
        row = index[bid.bus]
        for g, (j, seg) in enumerate(zip(cols, bid.segments)):
            cost[j] = -seg.benefit
            upper[j] = seg.capacity
            A[row, j] = -1.0
            names[j] = f"DX[bus {bid.bus}, seg {g}]"

    A[:n_bus, lay.flow] = incidence(net)
    for j, ln in zip(lay.flow, net.lines):
        lower[j], upper[j] = -ln.capacity, ln.capacity
        names[j] = f"PL[line {ln.id} ({ln.from_bus}->{ln.to_bus}), cap {ln.capacity:g}]"

    A[index[net.interface_bus], lay.p_main] = 1.0
    A[lay.deviation, [lay.p_main, lay.p_pos, lay.p_neg]] = [1.0, -1.0, 1.0]
    cost[lay.p_main] = inp.import_price(hour)
    cost[lay.p_pos] = cost[lay.p_neg] = inp.mu
    lower[lay.p_main], upper[lay.p_main] = -math.inf, math.inf
    upper[lay.p_pos] = upper[lay.p_neg] = math.inf
    names[lay.p_main], names[lay.p_pos], names[lay.p_neg] = "PM", "Ppos", "Pneg"

    for bus in net.buses:
        rhs[index[bus]] = inp.fixed.at(bus, hour)
    rhs[lay.deviation] = inp.assigned.power[hour]

    return LpProblem(
        cost=cost,
        matrix=A,
        relations=(EQ,) * (n_bus + 1),
        rhs=rhs,
        lower=lower,
        upper=upper,
        var_names=tuple(names),
        row_names=tuple(f"balance[bus {b}]" for b in net.buses) + ("deviation",),
    )


def extract_dlmp(solution: LpSolution, layout: LpLayout) -> np.ndarray:
    """Per-bus price: marginal cost of one more MW of fixed load at the bus.

    The balance row's rhs is the fixed load, so under the solver's
    ``d objective / d rhs`` convention the dual is the price as is.
    """
    return np.asarray(solution.duals[layout.balance], dtype=float).copy()


@dataclass(frozen=True, eq=False)
class HourlyClearing:
    hour: int
    p_main: float
    deviation: float
    p_pos: float
    p_neg: float
    dx: tuple[np.ndarray, ...]
    load: np.ndarray
    flow: np.ndarray
    dlmp: np.ndarray
    objective: float
    iterations: int
    kkt: KktReport
    solution: LpSolution | None = None

    @property
    def interface_dlmp(self) -> float:
        return float(self.dlmp[0])


@dataclass(frozen=True, eq=False)
class ClearingResult:
    input: ClearingInput
    hours: tuple[HourlyClearing, ...]
    objective: float
    unreachable_hours: tuple[int, ...] = field(default=())

    @property
    def buses(self) -> tuple[int, ...]:
        return self.input.network.buses

    def dlmp_matrix(self) -> np.ndarray:
        """Prices as an ``(hours, buses)`` array."""
        return np.array([h.dlmp for h in self.hours])

    def load_matrix(self) -> np.ndarray:
        return np.array([h.load for h in self.hours])

    @property
    def p_main(self) -> np.ndarray:
        return np.array([h.p_main for h in self.hours])

    @property
    def deviation(self) -> np.ndarray:
        return np.array([h.deviation for h in self.hours])


def _binding_candidates(problem: LpProblem, solution: LpSolution, tol: float = 1e-9) -> tuple[str, ...]:
    """Bounded columns pinned at a limit with nonzero phase-1 reduced cost."""
    x, d = solution.primal, solution.reduced_costs
    out = []
    for j, name in enumerate(problem.var_names):
        if abs(d[j]) <= tol or not name.startswith(("PL", "DX")):
            continue
        at_lo = math.isfinite(problem.lower[j]) and abs(x[j] - problem.lower[j]) <= 1e-7
        at_hi = math.isfinite(problem.upper[j]) and abs(x[j] - problem.upper[j]) <= 1e-7
        if at_lo and name.startswith("PL"):
            out.append(f"{name} at lower limit")
        elif at_hi:
            out.append(f"{name} at upper limit")
    return tuple(out)


def clear_hour(inp: ClearingInput, hour: int, options: SolverOptions | None = None) -> HourlyClearing:
    lay = LpLayout.of(inp)
    problem = build_hourly_lp(inp, hour)
    sol = solve(problem, options)
    if sol.status is Status.INFEASIBLE:
        raise InfeasibleHourError(
            hour, f"no feasible dispatch (phase-1 residual {sol.infeasibility:.6g} MW)",
            _binding_candidates(problem, sol),
        )
    if sol.status is Status.UNBOUNDED:
        raise UnboundedHourError(hour, "welfare is unbounded; check for malformed capacities or prices")
    if sol.status is not Status.OPTIMAL:
        raise SolverFailure(hour, f"solver stopped with status {sol.status.value} after {sol.iterations} iterations")

    x = sol.primal
    dx = tuple(x[cols].copy() for cols in lay.dx)
    net = inp.network
    index = net.bus_index()
    load = np.array([inp.fixed.at(b, hour) for b in net.buses])
    for bid, fill in zip(inp.bids, dx):
        load[index[bid.bus]] += fill.sum()
    p_main = float(x[lay.p_main])
    return HourlyClearing(
        hour=hour,
        p_main=p_main,
        deviation=p_main - inp.assigned.power[hour],
        p_pos=float(x[lay.p_pos]),
        p_neg=float(x[lay.p_neg]),
        dx=dx,
        load=load,
        flow=x[lay.flow].copy(),
        dlmp=extract_dlmp(sol, lay),
        objective=-sol.objective,
        iterations=sol.iterations,
        kkt=check_kkt(problem, sol),
        solution=sol,
    )


def clear(inp: ClearingInput, options: SolverOptions | None = None) -> ClearingResult:
    """Solve every hour of the horizon and collect dispatch and prices.

    The reported objective is social welfare (benefit minus import cost minus
    deviation penalty), i.e. the maximization sign.
    """
    inp.validate()
    hours = tuple(clear_hour(inp, t, options) for t in range(inp.horizon))
    return ClearingResult(inp, hours, float(sum(h.objective for h in hours)))


def grid_following(inp: ClearingInput, options: SolverOptions | None = None) -> ClearingResult:
    return clear(replace(inp, mu=0.0), options)


def grid_independent(
    inp: ClearingInput,
    large_mu: float = DEFAULT_LARGE_MU,
    tol: float = 1e-6,
    options: SolverOptions | None = None,
) -> ClearingResult:
    """Clear with a deviation penalty large enough to pin the import schedule.

    ``large_mu`` has to dominate every bid benefit and import price, otherwise
    deviating can still pay off.  Hours where the assigned power cannot be met
    are listed in ``unreachable_hours`` and reported with a
    :class:`ScheduleUnreachableWarning`.
    """
    benefits = [abs(s.benefit) for bid in inp.bids for s in bid.segments]
    top_price = max(benefits, default=0.0) + inp.tlmp_scale * max((abs(p) for p in inp.tlmp.prices), default=0.0)
    if large_mu <= top_price:
        warnings.warn(
            f"mu={large_mu:g} does not dominate bid benefits and import prices (max {top_price:g}); "
            "the schedule may not bind",
            ScheduleUnreachableWarning,
            stacklevel=2,
        )
    result = clear(replace(inp, mu=large_mu), options)
    bad = tuple(h.hour for h in result.hours if abs(h.deviation) > tol)
    if bad:
        worst = max(result.hours, key=lambda h: abs(h.deviation))
        warnings.warn(
            f"schedule unreachable in hours {list(bad)} "
            f"(largest deviation {worst.deviation:.6g} MW at hour {worst.hour})",
            ScheduleUnreachableWarning,
            stacklevel=2,
        )
        result = replace(result, unreachable_hours=bad)
    return result
