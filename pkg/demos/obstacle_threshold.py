"""Obstacle filling threshold on the half-plane instance.

A disk of radius r is free; everything below its equator is forced into the
set and everything above is forced out.  As the volume reward lambda grows,
the minimizer snaps from the flat chord to the filled upper half-disk.  For
a disk the crossover sits at lambda = 2 (d - 1) / r, and the experiment
brackets it from both sides.
"""

import numpy as np

from cmclab import threshold_experiment

R = 16.0
RESOLUTION = 48
THRESHOLD = 2.0 * (2 - 1) / R

lams = [0.0, 0.25 * THRESHOLD, 0.5 * THRESHOLD, 0.9 * THRESHOLD,
        THRESHOLD, 1.5 * THRESHOLD, 2.0 * THRESHOLD]

rows = threshold_experiment(R, RESOLUTION, lams)

print(f"disk radius {R:g} cells, grid {RESOLUTION} x {RESOLUTION}, "
      f"expected crossover lambda = {THRESHOLD:g}\n")
print(f"{'lambda':>10}  {'filled':>6}  {'contact excess':>14}")
for row in rows:
    print(f"{row.lam:10.5f}  {str(row.filled):>6}  {row.contact_excess:14.4f}")

circ = rows[0].obstacle_circumference
print(f"\ndiscrete circumference of the obstacle: {circ:.2f} "
      f"(2 pi r = {2 * np.pi * R:.2f})")
print("well below the crossover the chord detaches cleanly and the excess "
      "vanishes; approaching it the minimizer starts to climb the rim "
      "before snapping to the filled half-disk.  Once filled, the reported "
      "excess just measures the equator band and is no longer a detachment "
      "diagnostic.")
