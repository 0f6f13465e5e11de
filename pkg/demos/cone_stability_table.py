"""Stability census of the minimal cones over sphere products.

For each multiplicity pair (p, q) the link of the cone is a scaled product
of round spheres.  The first eigenvalue of its Jacobi operator is always
-(p + q); what changes with dimension is the Hardy barrier it must clear.
The verdict flips exactly when p + q reaches 6, and on the stable side the
indicial exponents gamma_- and gamma_+ become real and control every decay
rate in the radial theory.
"""

from cmclab import gamma_pm, link_spectrum, make_cone, stability

print(f"{'(p,q)':>6} {'dim':>4} {'lambda1':>8} {'stable':>7} "
      f"{'gamma-':>8} {'gamma+':>8}")

for p in range(1, 5):
    for q in range(p, 5):
        cone = make_cone(p, q)
        lam1 = link_spectrum(cone, 1).eigenvalues[0]
        if stability(cone):
            gm, gp = gamma_pm(cone)
            gtxt = f"{gm:8.4f} {gp:8.4f}"
        else:
            gtxt = f"{'-':>8} {'-':>8}"
        print(f"({p},{q})".rjust(6)
              + f" {cone.n:4d} {lam1:8.1f} {str(stability(cone)):>7} {gtxt}")

print()
cone = make_cone(3, 3)
gm, gp = gamma_pm(cone)
print(f"the balanced (3,3) cone lives in dimension {cone.n + 1} and is the "
      f"lowest stable one; its exponents ({gm:g}, {gp:g}) satisfy")
print(f"  gamma- + gamma+ = {gm + gp:g} = n - 2")
print(f"  gamma- * gamma+ = {gm * gp:g} = -lambda1")
