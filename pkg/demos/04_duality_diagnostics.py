#!/usr/bin/env python3
"""The primal/dual view: how much surplus must be left, and why.

The primal LP minimizes a level c that bounds both each type's own rent
and every misreport's gain; p* <= 0 means virtual extraction holds.
Its dual searches over measures (lambda, nu) on types and type pairs
whose belief marginals match.  When p* > 0 the optimal nu is a concrete
witness of dependence: disintegrating it along its type marginal writes
some belief as a convex combination of the others while the paired
value difference keeps the objective positive.
"""


from surplex import analyze, counterexample_model, full_extraction_lp, sample
from surplex.models import identical_beliefs_pair, random_tabular

print(__doc__)

# --- extraction succeeds: p* = d* = 0, dual mass sits on the diagonal ----
tab = random_tabular(seed=6, n_types=6, n_states=8)
rep = analyze(tab)
print(f"convex-independent instance: p*={rep.p_star:.2e}, "
      f"d*={rep.d_star:.2e}, gap={rep.gap:.1e}")
print(f"  diagonal nu mass {rep.diagnostics['diagonal_mass']:.6f}, "
      f"min own-type disintegration mass "
      f"{rep.disintegration.min_own_mass():.6f}")

# --- extraction fails: the dual finds the dependence ----------------------
pair = identical_beliefs_pair(v1=2.0, v2=1.0)
rep = analyze(pair)
print(f"\nidentical-beliefs pair (values 2 and 1): p* = {rep.p_star:.6f} "
      "(the hand reduction gives (v1 - v2)/2 = 0.5)")
row = rep.disintegration.rows[1]
print(f"  disintegration row for T1 puts mass {row[0]:.3f} on T0: "
      "its belief is (trivially) a combination of the other type's")
print(f"  nu . d = {rep.diagnostics['nu_dot_d']:.3f} > 0 drives the dual "
      "value above zero")

# --- the curve: virtual holds at every grid, full degrades ---------------
model = counterexample_model()
print("\ncurve model across grid refinements:")
print(f"  {'n':>4} {'p*':>12} {'gap':>10} {'full-LP norm / n':>18}")
for n in (9, 17, 33):
    tab = sample(model, n)
    rep = analyze(tab)
    sol, _ = full_extraction_lp(tab)
    print(f"  {n:4d} {rep.p_star:12.2e} {rep.gap:10.1e} "
          f"{sol.objective_value / n:18.3f}")
print("p* stays at zero (virtual extraction always holds on the grid) "
      "while the cheapest full-extraction menu blows up: the norm growth "
      "is the finite shadow of the endpoints' undetectability.")
