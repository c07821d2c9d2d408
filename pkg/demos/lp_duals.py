"""
Shadow prices from the simplex solver
=====================================

A two-bus feeder with one customer bid, solved first as a raw LP and then
through the clearing layer.  The nodal prices are the duals of the balance
rows, so nudging a fixed load by a small amount moves the objective by
exactly that price.
"""

import numpy as np

from distmarket.clearing import ClearingInput, build_hourly_lp, clear
from distmarket.lp import check_kkt, solve
from distmarket.model import AssignedPowerSeries, CustomerBid, FixedLoadSeries, Line, Network, TlmpSeries

# a 12 MW line into bus 1, a four-step bid and 5 MW of fixed load
net = Network((0, 1), (Line(0, 0, 1, 12.0),))
bid = CustomerBid(1, ((50, 10), (40, 10), (30, 10), (20, 10)))


def market(fixed_mw):
    return ClearingInput(net, (bid,), FixedLoadSeries({1: (fixed_mw,)}, 1),
                         TlmpSeries((35.0,)), AssignedPowerSeries((0.0,)))


lp = build_hourly_lp(market(5.0), 0)
print("variables:", ", ".join(lp.var_names))
print("rows:     ", ", ".join(lp.row_names))

sol = solve(lp)
print("status", sol.status.name, "after", sol.iterations, "pivots")
print("objective (minimised)", sol.objective)

# the line is full, so bus 1 is priced by the 50 $/MWh step it displaces
print("duals", np.round(sol.duals, 6))

kkt = check_kkt(lp, sol)
print("KKT residuals", kkt)

# the same numbers through the clearing layer
hour = clear(market(5.0)).hours[0]
print("D-LMP by bus", hour.dlmp, "flow", hour.flow)

# one more kW of fixed load at bus 1
eps = 1e-3
bumped = solve(build_hourly_lp(market(5.0 + eps), 0)).objective
print("finite-difference price at bus 1", (bumped - sol.objective) / eps)
