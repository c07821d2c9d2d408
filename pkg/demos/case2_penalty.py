"""
Following an assigned import schedule
=====================================

The transmission operator assigns an hourly import.  Raising the deviation
penalty mu pulls the feeder onto that schedule; past a point the prices stop
moving because the schedule is met exactly.
"""

from distmarket import scenarios

inp = scenarios.ieee13_fixture()
sweep = scenarios.case2_sweep(inp)

print(f"{'mu':>9} {'sum |dP| MWh':>13} {'avg price':>10} {'C_c':>10} {'C_u':>10}")
for row in sweep.rows:
    print(f"{row.value:9.3g} {row.total_abs_deviation:13.3f} {row.avg_dlmp.mean():10.3f} "
          f"{row.customer_total:10.1f} {row.utility_payment:10.1f}")
