"""
Geometric convergence (R o phi)^n -> psi
========================================

The operator distance in the B-weighted L^2 norm is bounded by delta^n.
Past n ~ 15 the literal difference T^n - psi sits at the rounding floor,
so distances are evaluated as (T - psi)^n.
"""

from petzlab import channels as ch
from petzlab.algebra import random_reference, random_state, weighted_p_norm
from petzlab.petz import fixed_point_analysis, interpolation_bound, iterate, iteration_distance

phi = ch.random_channel(2, rank=2, seed=11)
b = random_reference(2, seed=12)
a = random_state(2, seed=3)

an = fixed_point_analysis(phi, b)
tr = iterate(phi, b, a, 30, p_list=[1.5], analysis=an)

print(f"delta = {an.delta:.4f}")
print(" n   ||T^n-psi||   direct        delta^n      state B2     state B,1.5  bound B,1.5")
norm_a = weighted_p_norm(a, b, 1.5)
for n in (1, 2, 5, 10, 15, 20, 30):
    op = iteration_distance(an, n)
    direct = iteration_distance(an, n, "direct")
    bound = interpolation_bound(1.5, op) * norm_a
    print(f"{n:2d}  {op:.3e}     {direct:.3e}     {an.delta ** n:.3e}    "
          f"{tr.dist_B2[n]:.3e}    {tr.dist_Bp[1.5][n]:.3e}    {bound:.3e}")

# the same trace as CSV, ready for plotting elsewhere
print(tr.to_csv().splitlines()[0])
