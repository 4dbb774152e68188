"""Pure-Python twin of the compiled relaxation kernel.

Must stay arithmetically identical to _cykernels.pyx: same sweep order
(row-major over masked pixels), same neighbor order (up, down, left,
right), same update expression. Any change here must be mirrored there.
"""

import numpy as np


def sor_relax(values, mask, omega, tol, max_sweeps):
    """Gauss-Seidel SOR sweeps of the 4-neighbor Laplace stencil.

    ``values`` (float64 HxW) is updated in place at pixels where ``mask``
    (uint8 HxW) is nonzero; zero pixels are Dirichlet boundary. Neighbors
    outside the image are skipped (zero-flux image border). Returns
    (sweeps_run, last_max_update); iteration stops once the largest applied
    update in a sweep drops below ``tol``.
    """
    h, w = values.shape
    ii, jj = np.nonzero(mask)
    coords = list(zip(ii.tolist(), jj.tolist()))
    max_update = 0.0
    sweeps = 0
    for sweeps in range(1, max_sweeps + 1):
        max_update = 0.0
        for i, j in coords:
            acc = 0.0
            n = 0
            if i > 0:
                acc += values[i - 1, j]
                n += 1
            if i < h - 1:
                acc += values[i + 1, j]
                n += 1
            if j > 0:
                acc += values[i, j - 1]
                n += 1
            if j < w - 1:
                acc += values[i, j + 1]
                n += 1
            delta = omega * (acc / n - values[i, j])
            values[i, j] += delta
            if delta < 0.0:
                delta = -delta
            if delta > max_update:
                max_update = delta
        if max_update < tol:
            break
    return sweeps, max_update
