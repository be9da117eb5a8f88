"""
Probing ||(R o phi)^n - psi|| on L^1
====================================

Whether the convergence holds in operator norm on L^1 is open. The probe
gives lower bounds by local search over rank-one inputs; it is evidence,
not a proof.
"""

from petzlab import channels as ch
from petzlab.algebra import random_reference, random_state
from petzlab.petz import fixed_point_analysis, l1_norm_probe_sequence

phi = ch.random_channel(3, rank=2, seed=21)
b = random_reference(3, seed=22)
an = fixed_point_analysis(phi, b)
ns = [0, 1, 2, 4, 8, 16]
seq = l1_norm_probe_sequence(phi, b, ns, restarts=6, seed=0, analysis=an, states=[random_state(3, seed=1)])
for n, v in zip(ns, seq):
    print(f"n={n:2d}  lower bound {v:.3e}  delta^n {an.delta ** n:.3e}")
