"""
Congestion behind line 3-8
==========================

Sweep the import price scale with no schedule penalty on the 13-bus feeder.
At cheap import prices the microgrids want more power than line 3-8 can
carry, so buses 6-12 clear at a shared price set by their own bids.  As the
scale rises, bids drop out, the line unloads and the prices converge.
"""

import numpy as np

from distmarket import scenarios

inp = scenarios.ieee13_fixture()
sweep = scenarios.case1_sweep(inp)
avg = sweep.avg_dlmp()

labels = [scenarios.to_label(b) for b in sweep.buses]
print("scale " + " ".join(f"{lab:>7d}" for lab in labels) + "   spread  import MWh")
for row, prices in zip(sweep.rows, avg):
    print(f"{row.value:5.1f} " + " ".join(f"{p:7.2f}" for p in prices)
          + f"  {row.price_spread:7.3f}  {row.total_import:9.2f}")

# where the spread first disappears
spread = np.array([r.price_spread for r in sweep.rows])
flat = sweep.values[spread <= 1e-6]
print("prices equal across the feeder from scale", flat.min() if flat.size else "never")
