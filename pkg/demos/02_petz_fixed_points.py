"""
The Petz recovery map and the limit projection psi
=================================================

R reverses phi relative to B. Iterating R o phi converges to a projection
psi onto the recoverable states, at rate delta (the spectral gap).
"""

import numpy as np

from petzlab import channels as ch
from petzlab.algebra import random_reference, random_state
from petzlab.petz import decompose, fixed_point_analysis, petz_map

np.set_printoptions(precision=4, suppress=True)

phi = ch.random_channel(3, rank=2, seed=11)
b = random_reference(3, seed=12)

r = petz_map(phi, b)
print("R(phi(B)) == B:", np.allclose(r(phi(b.matrix)), b.matrix))

an = fixed_point_analysis(phi, b)
print("delta =", an.delta, " fixed_dim =", an.fixed_dim)
print("spectrum of R o phi:", an.spectrum)

# a generic channel only recovers B itself
a = random_state(3, seed=13)
print("psi(A) =\n", an.psi(a))

# pinching with B = I recovers every block-diagonal state: psi = pinching
p = ch.pinching((2, 2))
an_p = fixed_point_analysis(p, np.eye(4))
print("pinching: fixed_dim =", an_p.fixed_dim, " psi == pinching:", np.allclose(an_p.psi.matrix, p.matrix))

# A = A0 + C, A0 recoverable, C killed by psi
d = decompose(phi, b, a, an)
print("checks:", d.checks)
print("steps until delta^n < 1e-8:", d.vanishing_steps())
