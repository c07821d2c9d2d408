"""
Who pays for the difference
===========================

Customers pay their nodal prices, the operator pays the transmission price
for the imported energy.  The gap between the two can have either sign; here
it is traced as the import price scale moves with a small penalty of 1 $/MWh.
"""

from distmarket import scenarios
from distmarket.settlement import settle, surplus_by_price_gap

inp = scenarios.ieee13_fixture()
sweep = scenarios.case3_sweep(inp)

print(f"{'scale':>5} {'C_c':>10} {'C_u':>10} {'C_c - C_u':>10}")
for row in sweep.rows:
    print(f"{row.value:5.1f} {row.customer_total:10.1f} {row.utility_payment:10.1f} {row.surplus:10.1f}")

# the surplus also equals sum over buses and hours of (price gap) x load
row = sweep.rows[4]
report = settle(row.result)
print("\nscale", row.value)
print("  two-sided totals ", report.surplus)
print("  price-gap form   ", surplus_by_price_gap(row.result))
print("  worst hourly balance residual", report.conservation_residuals.max())
