"""Unfolded channel orbits near the corner of the standard stadium and their 1/n behaviour."""

from stadium_spectrum import std_stadium, unfolded_period_four, unfolded_period_two
from stadium_spectrum.rigidity import channel_quotient, weighted_intercept

table = std_stadium(1.0, 2.0)
Q = channel_quotient(table)
ns = list(range(20, 201, 10))
two = [unfolded_period_two(table, n) for n in ns]
four = [unfolded_period_four(table, n, 2.0) for n in ns]

for n, a, b in list(zip(ns, two, four))[::6]:
    print(f"n={n:3d}  n*s={n * a.s_bar:.6f}  n*t={n * a.t_bar:.6f}  n*phi={n * b.phi_bar:.6f}")

K = two[-1].foot_A.curvature_at_gluing
print(f"n*s_bar   -> {weighted_intercept(ns, [a.s_bar for a in two])[0]:.6f}   (Q/K = {Q / K:.6f})")
print(f"n*phi_bar -> {weighted_intercept(ns, [b.phi_bar for b in four])[0]:.6f}   (Q/4 = {Q / 4:.6f})")
