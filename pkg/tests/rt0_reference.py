"""Hand-assembled lowest-order Raviart-Thomas solver on rectangular grids.

Used as an independent oracle for the k = 0 virtual element solver. Face
unknowns are the normal velocity in the +x (vertical faces) or +y
(horizontal faces) direction; pressures are element constants.
"""

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla


def rt0_solve(nx, ny, bbox, pbar, kappa=1.0, mu=1.0):
    """Solve ``q = -(kappa/mu) grad p``, ``div q = 0`` with ``p = pbar`` on the boundary.

    Returns ``(faces, q, p)`` where ``faces`` lists ``(midpoint, direction)``
    for each face unknown.
    """
    xmin, xmax, ymin, ymax = bbox
    hx, hy = (xmax - xmin) / nx, (ymax - ymin) / ny
    faces = []
    vid, hid = {}, {}
    for j in range(ny):
        for i in range(nx + 1):
            vid[i, j] = len(faces)
            faces.append((np.array([xmin + i * hx, ymin + (j + 0.5) * hy]), np.array([1.0, 0.0])))
    for j in range(ny + 1):
        for i in range(nx):
            hid[i, j] = len(faces)
            faces.append((np.array([xmin + (i + 0.5) * hx, ymin + j * hy]), np.array([0.0, 1.0])))
    nf, ne = len(faces), nx * ny
    M = sp.lil_matrix((nf + ne, nf + ne))
    rhs = np.zeros(nf + ne)
    loc = (mu / kappa) * hx * hy / 6.0 * np.array([[2.0, 1.0], [1.0, 2.0]])
    for j in range(ny):
        for i in range(nx):
            e = nf + j * nx + i
            for pair, area_b in (((vid[i, j], vid[i + 1, j]), hy), ((hid[i, j], hid[i, j + 1]), hx)):
                for a in range(2):
                    for b in range(2):
                        M[pair[a], pair[b]] += loc[a, b]
                # -int div(phi): left/bottom face +, right/top face -
                for f, s in zip(pair, (1.0, -1.0)):
                    M[e, f] += s * area_b
                    M[f, e] += s * area_b
    # natural load -int pbar phi.n_out on boundary faces (two-point Gauss)
    g = 0.5 + np.array([-1.0, 1.0]) / (2.0 * np.sqrt(3.0))
    for f, (mid, d) in enumerate(faces):
        x, y = mid
        if d[0] and x in (xmin, xmax):
            sgn = -1.0 if x == xmin else 1.0
            pts = np.column_stack([np.full(2, x), ymin + (np.round((y - ymin) / hy - 0.5) + g) * hy])
            rhs[f] -= sgn * hy * 0.5 * np.sum(pbar(pts))
        elif d[1] and y in (ymin, ymax):
            sgn = -1.0 if y == ymin else 1.0
            pts = np.column_stack([xmin + (np.round((x - xmin) / hx - 0.5) + g) * hx, np.full(2, y)])
            rhs[f] -= sgn * hx * 0.5 * np.sum(pbar(pts))
    sol = spla.spsolve(M.tocsc(), rhs)
    return faces, sol[:nf], sol[nf:]
