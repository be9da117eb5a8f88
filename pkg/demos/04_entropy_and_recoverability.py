"""
Sandwiched entropies, data processing and the recoverability bound
==================================================================

S_p(A|B) = tau[(B^{-1/2q} A B^{-1/2q})^p] never increases under a strict
channel, and the S_2 gap controls how well the Petz map recovers A:

    4 (1 - F)^2 <= ||A - R phi A||_1^2 <= S_2(A|B) - S_2(phi A|phi B)
"""

import math

import numpy as np

from petzlab import channels as ch
from petzlab.algebra import random_reference, random_state
from petzlab.entropy import dpi_gap, fidelity, recoverability_bound, sandwiched_entropy
from petzlab.petz import fixed_point_analysis

phi = ch.random_channel(3, rank=2, seed=5)
b = random_reference(3, seed=6)
a = random_state(3, seed=7)

for p in (1, 1.5, 2, 3, math.inf):
    print(f"p={p}: S_p(A|B)={sandwiched_entropy(a, b, p):.5f}  gap={dpi_gap(phi, a, b, p):.5f}")

rep = recoverability_bound(phi, b, a)
print(f"4(1-F)^2 = {rep.lhs:.4e} <= ||A-RphiA||_1^2 = {rep.mid:.4e} <= S_2 gap = {rep.rhs:.4e}")

# diagonal states: fidelity is the Bhattacharyya coefficient
p_, q_ = np.array([0.5, 0.3, 0.2]), np.array([0.2, 0.2, 0.6])
print("F =", fidelity(np.diag(3 * p_), np.diag(3 * q_)), " sum sqrt(pq) =", np.sum(np.sqrt(p_ * q_)))

# a recoverable state makes all three quantities vanish
pin = ch.pinching((1, 2))
bd = np.diag([0.6, 1.1, 1.3])
an = fixed_point_analysis(pin, bd)
a_rec = an.psi(random_state(3, seed=8))
print(recoverability_bound(pin, bd, 0.5 * (a_rec + a_rec.conj().T)).to_json())
