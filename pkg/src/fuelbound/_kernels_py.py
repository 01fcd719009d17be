"""Pure-numpy simplex kernels (fallback when the compiled extension is absent).

Same signatures as the Cython module ``fuelbound._kernels``; the solver picks
whichever imports at package load.
"""

import numpy as np


def price_dantzig(obj, ncols, tol):
    """Column with the most negative reduced cost among [0, ncols), else -1."""
    seg = obj[:ncols]
    j = int(np.argmin(seg))
    return j if seg[j] < -tol else -1


def price_bland(obj, ncols, tol):
    """First column with reduced cost below -tol (Bland's entering rule)."""
    idx = np.nonzero(obj[:ncols] < -tol)[0]
    return int(idx[0]) if idx.size else -1


def ratio_test(tab, m, col, rhs_col, basis, pivtol):
    """Leaving row by minimum ratio; ties resolved by smallest basis index."""
    a = tab[:m, col]
    b = tab[:m, rhs_col]
    mask = a > pivtol
    if not mask.any():
        return -1
    ratios = np.full(m, np.inf)
    ratios[mask] = b[mask] / a[mask]
    best = ratios.min()
    cand = np.nonzero(ratios <= best + 1e-9 * max(1.0, abs(best)))[0]
    return int(cand[np.argmin(basis[cand])])


def pivot(tab, prow, pcol):
    """Row-reduce the tableau so column pcol becomes the prow unit vector."""
    tab[prow, :] /= tab[prow, pcol]
    col = tab[:, pcol].copy()
    col[prow] = 0.0
    tab -= np.outer(col, tab[prow, :])
    tab[:, pcol] = 0.0
    tab[prow, pcol] = 1.0
