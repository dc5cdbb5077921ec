"""
Listric fault
=============

Six layers cut by a curved fault. The two low-permeability seals are offset
across the fault. Pressure 1 at the bottom and 0 at the top drives the flow;
the lateral sides are no-flow.
"""

import numpy as np

from curvedvem import average_onto, boundary_fluxes, export_vtk, get_problem, solve_problem

problem = get_problem("fault")

#|
# Coarse and fine cut meshes (background grids 32x16 and 64x32), k = 2
sols = {}
for n in (16, 32):
    mesh = problem.build_mesh(n)
    sol = solve_problem(mesh, 2, problem)
    flux = boundary_fluxes(sol)
    print(f"n={n}: {mesh.n_elements} elements, inflow {-flux['bottom']:.6f}, outflow {flux['top']:.6f}")
    export_vtk(mesh, f"fault_n{n}.vtk", sol)
    sols[n] = sol

#|
# Fine element means averaged onto the coarse cells
coarse, fine = sols[16], sols[32]
pc = coarse.pressure_means()
pf = average_onto(coarse.mesh, fine.mesh, fine.pressure_means())
area = np.array([el.area for el in coarse.mesh.elements])
print(f"relative L2 difference of element means: {np.sqrt(area @ (pc - pf) ** 2 / (area @ pc**2)):.2e}")
