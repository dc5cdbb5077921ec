"""
Curved versus straight interface
================================

A quarter-disk inclusion with permeability 0.01 sits in the unit square.
Cutting the background grid with the exact arc keeps the optimal rate k+1;
replacing every arc by its chord caps the rate near 2.
"""

import sys

from curvedvem import convergence_study, get_problem

# The polynomial benchmark is reproduced exactly for k >= 2, so rates are
# measured on a smooth manufactured solution with the same geometry
problem = get_problem("smooth-interface")
family = (8, 16, 32) if "--quick" not in sys.argv else (4, 8, 16)

#|
# Rates on both geometries, last pair of levels
for k in (1, 2, 3):
    for geometry in ("curved", "straight"):
        table = convergence_study(problem, k, family, geometry)
        rp, rq = table.rates("e_p")[-1], table.rates("e_q")[-1]
        print(f"k={k} {geometry:8s} e_p={table.reports[-1].e_p:.2e} rate_p={rp:.2f} rate_q={rq:.2f}")

#|
# The original polynomial benchmark: exact on curved cells, saturated on chords
bench = get_problem("interface")
for geometry in ("curved", "straight"):
    table = convergence_study(bench, 2, family, geometry, csv_path=f"interface_{geometry}_k2.csv")
    print(f"interface k=2 {geometry:8s} finest e_p={table.reports[-1].e_p:.2e}")
