"""Instance generators and brute-force oracles shared by the test modules."""

from __future__ import annotations

import itertools
import math

import numpy as np

from distmarket.clearing import ClearingInput
from distmarket.lp import EQ, GE, LE, LpProblem
from distmarket.model import (
    AssignedPowerSeries,
    CustomerBid,
    FixedLoadSeries,
    Line,
    Network,
    TlmpSeries,
)


def two_bus(cap=100.0, lam=35.0, mu=0.0, pd=0.0, fixed=5.0, segments=((50, 10), (40, 10), (30, 10), (20, 10))):
    net = Network((0, 1), (Line(0, 0, 1, cap),))
    bids = (CustomerBid(1, segments),) if segments else ()
    return ClearingInput(
        net, bids, FixedLoadSeries({1: (fixed,)}, 1), TlmpSeries((lam,)),
        AssignedPowerSeries((pd,), allow_negative=True), mu=mu,
    )


# LP vertex enumeration


def enumerate_vertices(problem: LpProblem):
    """Minimum of a bounded LP over its basic feasible solutions.

    Every vertex makes ``n`` linearly independent constraints active; equality
    rows are always active, the rest are drawn from inequality rows and
    finite bounds.  Returns ``None`` when no vertex is feasible.
    """
    A, b, c = problem.matrix, problem.rhs, problem.cost
    n = problem.n_vars
    rel = problem.relations
    eq_rows = [(A[i], b[i]) for i in range(len(b)) if rel[i] == EQ]
    cand = [(A[i], b[i]) for i in range(len(b)) if rel[i] != EQ]
    for j in range(n):
        e = np.zeros(n)
        e[j] = 1.0
        for bound in (problem.lower[j], problem.upper[j]):
            if math.isfinite(bound):
                cand.append((e, bound))
    k = n - len(eq_rows)
    if k < 0:
        return None
    best = None
    combos = list(itertools.combinations(range(len(cand)), k))
    if not combos:
        return None
    M = np.empty((len(combos), n, n))
    r = np.empty((len(combos), n))
    for idx, combo in enumerate(combos):
        rows = eq_rows + [cand[t] for t in combo]
        M[idx] = np.array([row for row, _ in rows]).reshape(n, n)
        r[idx] = [rhs for _, rhs in rows]
    ok = np.abs(np.linalg.det(M)) > 1e-9
    if not ok.any():
        return None
    xs = np.linalg.solve(M[ok], r[ok][..., None])[..., 0]
    act = xs @ A.T
    feas = np.all(xs >= problem.lower - 1e-7, axis=1) & np.all(xs <= problem.upper + 1e-7, axis=1)
    for i, relation in enumerate(rel):
        if relation == EQ:
            feas &= np.abs(act[:, i] - b[i]) <= 1e-7
        elif relation == LE:
            feas &= act[:, i] <= b[i] + 1e-7
        else:
            feas &= act[:, i] >= b[i] - 1e-7
    if not feas.any():
        return None
    vals = xs[feas] @ c
    best = int(np.argmin(vals))
    return float(vals[best]), xs[feas][best]


def random_lp(rng: np.random.Generator) -> LpProblem:
    n = int(rng.integers(1, 7))
    m = int(rng.integers(0, 7))
    A = rng.integers(-5, 6, size=(m, n)).astype(float)
    rel = tuple(rng.choice([LE, GE, EQ], p=[0.45, 0.35, 0.2]) for _ in range(m))
    lower = rng.integers(-5, 1, size=n).astype(float)
    upper = lower + rng.integers(1, 8, size=n)
    # rhs around a point inside the box keeps most instances feasible
    x0 = lower + rng.random(n) * (upper - lower)
    b = np.round(A @ x0 + rng.normal(0, 2, size=m), 1)
    c = rng.integers(-9, 10, size=n).astype(float)
    return LpProblem(c, A, rel, b, lower, upper)


# random clearing instances


def random_tree(rng, n_bus, cap_range=(1, 7)):
    lines = []
    for k in range(1, n_bus):
        parent = int(rng.integers(0, k))
        cap = float(rng.integers(*cap_range))
        if rng.random() < 0.5:
            lines.append(Line(k - 1, parent, k, cap))
        else:
            lines.append(Line(k - 1, k, parent, cap))
    return Network(tuple(range(n_bus)), tuple(lines))


def random_bids(rng, buses, max_segments=3, cap_choices=(1.0, 2.0), benefit=(5.0, 80.0)):
    bids = []
    for bus in buses:
        if rng.random() < 0.25:
            continue
        k = int(rng.integers(1, max_segments + 1))
        b = np.sort(rng.uniform(*benefit, size=k))[::-1]
        caps = rng.choice(cap_choices, size=k)
        bids.append(CustomerBid(int(bus), tuple((float(x), float(q)) for x, q in zip(b, caps))))
    return tuple(bids)


def random_small_instance(rng, max_levels=60_000):
    """Tiny single-hour instance on a random tree with half-MW grid data."""
    while True:
        n_bus = int(rng.integers(2, 5))
        net = random_tree(rng, n_bus)
        bids = random_bids(rng, net.buses)
        levels = [int(2 * s.capacity) + 1 for bid in bids for s in bid.segments]
        if math.prod(levels) <= max_levels:
            break
    fixed = {bus: (float(rng.integers(0, 3)) * 0.5,) for bus in net.buses if rng.random() < 0.6}
    lam = float(rng.uniform(5, 60))
    mu = float(rng.choice([0.0, rng.uniform(0.5, 40), 1e3]))
    pd = float(rng.integers(0, 16)) * 0.5
    return ClearingInput(
        net, bids, FixedLoadSeries(fixed, 1), TlmpSeries((lam,)), AssignedPowerSeries((pd,)),
        mu=mu, tlmp_scale=float(rng.choice([0.5, 1.0, 1.5])), lambda_enabled=bool(rng.random() < 0.85),
    )


def grid_search_welfare(inp: ClearingInput, hour: int = 0, step: float = 0.5):
    """Best welfare over every segment fill level on a ``step`` grid.

    Only valid on radial networks, where loads fix the line flows.  Returns
    ``(welfare, bound)``; ``bound`` caps the amount by which the true optimum
    can exceed the grid optimum, since rounding every fill down to the grid
    stays feasible and loses at most ``step * (|b| + price + mu)`` per segment.
    ``welfare`` is ``None`` if no grid point is feasible.
    """
    net = inp.network
    index = net.bus_index()
    segs = [(index[bid.bus], s) for bid in inp.bids for s in bid.segments]
    axes = [np.arange(0.0, s.capacity + 1e-9, step) for _, s in segs]
    fixed = np.array([inp.fixed.at(b, hour) for b in net.buses])
    if segs:
        grid = np.stack(np.meshgrid(*axes, indexing="ij"), axis=-1).reshape(-1, len(segs))
    else:
        grid = np.zeros((1, 0))
    to_bus = np.zeros((len(segs), len(net.buses)))
    for k, (bi, _) in enumerate(segs):
        to_bus[k, bi] = 1.0
    load = fixed + grid @ to_bus
    p_main = load.sum(axis=1)

    feasible = np.ones(len(grid), dtype=bool)
    for ln in net.lines:
        below = net.downstream(ln)
        child = ln.to_bus if ln.to_bus in below else ln.from_bus
        sub = load[:, [index[b] for b in below]].sum(axis=1)
        flow = sub if child == ln.to_bus else -sub
        feasible &= np.abs(flow) <= ln.capacity + 1e-9

    benefit = np.array([s.benefit for _, s in segs])
    price = inp.import_price(hour)
    welfare = grid @ benefit - price * p_main - inp.mu * np.abs(p_main - inp.assigned.power[hour])
    bound = step * sum(abs(s.benefit) + abs(price) + inp.mu for _, s in segs)
    if not feasible.any():
        return None, bound
    return float(welfare[feasible].max()), bound


def random_feasible_day(rng, mu=0.0, n_bus=None, horizon=24):
    """Random multi-hour instance whose fixed loads always fit the lines."""
    n_bus = n_bus or int(rng.integers(2, 9))
    net = random_tree(rng, n_bus, cap_range=(8, 40))
    if n_bus > 3 and rng.random() < 0.3:
        a, b = (int(v) for v in rng.choice(n_bus, size=2, replace=False))
        net = Network(net.buses, net.lines + (Line(len(net.lines), a, b, float(rng.integers(5, 30))),))
    bids = random_bids(rng, net.buses, max_segments=4, cap_choices=(1.0, 2.5, 4.0), benefit=(10, 90))
    fixed = {
        bus: tuple(float(v) for v in rng.uniform(0, 1.0, size=horizon))
        for bus in net.buses if bus != 0 and rng.random() < 0.7
    }
    return ClearingInput(
        net, bids, FixedLoadSeries(fixed, horizon),
        TlmpSeries(tuple(float(v) for v in rng.uniform(15, 70, size=horizon))),
        AssignedPowerSeries(tuple(float(v) for v in rng.uniform(0, 15, size=horizon))),
        mu=mu, tlmp_scale=float(rng.uniform(0.2, 2.0)),
    )
