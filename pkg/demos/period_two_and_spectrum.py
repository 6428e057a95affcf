"""Period-two orbit, multiplier and the excess-length limit on the weak stadium.

Prints the period-two data, then the marked length maxima for a run of
rotation numbers and the geometric fit of their excess over q * tau*.
"""

from stadium_spectrum import analyze_period_two, extract_spectral_invariants, marked_length_max, weak_stadium

table = weak_stadium()
d = analyze_period_two(table)
print(f"tau* = {d.tau_star:.15g}  lambda = {d.lam:.15g}  a_z = {d.a_z:.6g}  a_w = {d.a_w:.6g}")

for q in (3, 5, 7, 9):
    e = marked_length_max(table, q)
    print(f"q={q:2d}  ML={e.max_length:.15f}  excess={e.max_length - q * d.tau_star:+.3e}  argmax={', '.join(e.argmax_codes)}")

est = extract_spectral_invariants(table, [3, 7, 11, 15, 19, 23])
print(f"B = {est.B:.12g}   long-orbit excess = {est.L_infinity:.12g}")
print(f"per-n rate {est.rate:.6g} vs lambda^-2 {d.lam ** -2:.6g}")
