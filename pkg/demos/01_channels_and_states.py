"""
States, references and channels on a tracial matrix algebra
===========================================================

The trace is normalized, tau = Tr/n, so a state density A has tau(A) = 1
and equals n times the usual density matrix.
"""

import numpy as np

from petzlab import channels as ch
from petzlab.algebra import random_reference, random_state, schatten_p_norm, tau, to_density_matrix

np.set_printoptions(precision=4, suppress=True)

# a state on M_3 and its ordinary density matrix
a = random_state(3, seed=0)
print("tau(A) =", tau(a).real)
print("Tr(rho) =", np.trace(to_density_matrix(a)).real)

# a reference density with a capped condition number
b = random_reference(3, seed=1, cond_cap=20)
print("cond(B) =", b.condition_number)

# channels are m^2 x n^2 matrices in the basis {sqrt(n) E_ij}
phi = ch.random_channel(3, rank=2, seed=2)
print("CP, TP, strict:", phi.is_cp, phi.is_tp, phi.is_strict)

# the dual of a tau-preserving channel is unital
print("phi*(I) =\n", ch.adjoint(phi)(np.eye(3)))

# the transpose map is positive and trace preserving but not CP
print("transpose CP?", ch.is_cp(ch.transpose_map(3)))

# pinching onto 1 + 2 blocks
p = ch.pinching((1, 2))
x = np.arange(9.0).reshape(3, 3)
print("pinched:\n", p(x))

# trace norm never grows under a channel
for seed in range(3):
    x = np.random.default_rng(seed).standard_normal((3, 3))
    print(schatten_p_norm(phi(x), 1), "<=", schatten_p_norm(x, 1))
