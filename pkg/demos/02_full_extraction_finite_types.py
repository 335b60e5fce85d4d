#!/usr/bin/env python3
"""Full surplus extraction on finite type tables, and how it fails.

With finitely many types whose beliefs are convexly independent, every
belief admits a separating functional z(t) that is zero under type t
and strictly positive under everyone else.  Scaling z(t) hard enough
and adding it to the flat payment v(t) yields a contract that costs
type t exactly v(t) while overcharging every other type: the seller
keeps all surplus.  Planting one belief inside the others' convex hull
breaks the construction, and the LP route certifies the failure.
"""

import numpy as np

from surplex import classify_type, full_extraction_lp, full_extraction_menu, verify_menu
from surplex.extraction import NotAllDetectable
from surplex.models import planted_combination_instance, random_tabular

print(__doc__)

# --- a healthy instance ---------------------------------------------------
tab = random_tabular(seed=4, n_types=7, n_states=9)
menu = full_extraction_menu(tab)
report = verify_menu(tab, menu, None, ("full",))
print(f"random 7-type instance: verdict={report.verdict}")
print(f"  own surpluses |.| <= {report.max_abs_own:.2e} (all ~ zero)")
print(f"  best cross surplus   {report.max_cross:+.3f} (strictly negative)")

label, contract = menu.entries[0]
alpha, z = contract.provenance.terms[0]
print(f"  contract for {label}: flat part {contract.provenance.base_value:+.3f}, "
      f"separator scaled by alpha={alpha:.2f}")

sol, lp_menu = full_extraction_lp(tab)
print(f"  LP route agrees: status={sol.status}, "
      f"minimal sup-norm objective {sol.objective_value:.3f}")

# --- a planted dependence --------------------------------------------------
tab, idx, mu = planted_combination_instance(seed=11, n_types=6, n_states=8)
print(f"\nplanted instance: type {tab.labels[idx]} is a convex combination "
      f"of {np.count_nonzero(mu)} others, with value "
      f"{tab.values[idx]:+.3f} vs combination value {mu @ tab.values[:idx]:+.3f}")

sol, nothing = full_extraction_lp(tab)
print(f"  full-extraction LP: {sol.status} (menu: {nothing})")

c = classify_type(tab, idx)
residual = np.abs(tab.beliefs[idx] - c.witness @ tab.beliefs).max()
print(f"  classification: {c.label}, witness residual {residual:.1e}")

try:
    full_extraction_menu(tab)
except NotAllDetectable as err:
    print(f"  constructive route refuses: {err}")
