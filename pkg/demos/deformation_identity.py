"""Length derivative along a bump deformation, and the Lagrange cancellation of palindromic sums."""

import math

from stadium_spectrum import BumpProfile, DeformationFamily, isospectral_derivative_check, std_stadium
from stadium_spectrum.rigidity import cancellation_decay, cancellation_noise

table = std_stadium(1.0, 0.5)
mid = math.pi / 2
family = DeformationFamily(table, {1: BumpProfile(mid + 0.25, 1.2), 2: BumpProfile(mid - 0.3, 1.1, 0.6)})

print("code            half dL/dmu           sum G              rel err")
for code in ["12", "2 12", "2(12)^2", "323 12 1", "323 (12)^2 1"]:
    r = isospectral_derivative_check(family, code)
    print(f"{code:14s}  {r.lhs:.15f}  {r.rhs:.15f}  {r.rel_err:.1e}")

# profiles flat to fourth order at the apex
flat = {1: BumpProfile(mid, 1.2, 1.0, power=4), 2: BumpProfile(mid, 1.3, 0.7, power=4)}
m = 3
exponent, lam, res = cancellation_decay(table, flat, range(1, 6), m)
for r in res:
    print(f"ell={r.ell}  combination {r.combo:+.3e}  (rounding floor {cancellation_noise(r):.1e})")
print(f"fitted exponent {exponent:.4g} against m log lambda = {m * math.log(lam):.4g}")
