"""Mixed virtual element method for Darcy flow on meshes with curved edges."""

from .convergence import ConvergenceTable, ErrorReport, average_onto, compute_errors, convergence_study
from .curves import CurveDef, CurveKind
from .cut import cut_by_curves
from .local import ElementDofLayout, LocalMatrices, dof_count, local_matrices
from .mesh import ESSENTIAL, INTERNAL, NATURAL, Mesh, build_quad_grid, load_mesh, save_mesh
from .problems import (
    ProblemSpec,
    get_problem,
    problem_internal_interface,
    problem_listric_fault,
    problem_patch_test,
    problem_smooth_interface,
)
from .solver import (
    GlobalDofMap,
    SaddleSystem,
    Solution,
    apply_essential_bc,
    assemble,
    boundary_fluxes,
    local_mass_conservation,
    number_dofs,
    solve,
    solve_problem,
)
from .vtk import export_vtk

__version__ = "0.1.0"
