"""Pure-Python (numpy) twin of the compiled simplex pivot kernel.

The tableau layout is shared with the Cython extension: ``tab`` has shape
(m+1, n+1) where rows 0..m-1 hold B^-1 [A | b] and row m holds the reduced
costs with ``tab[m, n] = -objective``.  ``basis[i]`` is the column basic in
row i.  Only columns < ``n_enterable`` may enter the basis (artificials are
placed after that cutoff).

Pivot rule: most-negative reduced cost with lowest-index tie-break; after
``bland_after`` consecutive degenerate pivots the rule switches to Bland's
rule permanently, which guarantees termination.
"""

import numpy as np

OPTIMAL = 0
UNBOUNDED = 1
ITERATION_LIMIT = 2


def run_simplex(tab, basis, n_enterable, tol, bland_after, maxiter):
    m = tab.shape[0] - 1
    n = tab.shape[1] - 1
    degenerate_streak = 0
    bland = False

    for _ in range(maxiter):
        rc = tab[m, :n_enterable]
        if bland:
            entering = -1
            for j in range(n_enterable):
                if rc[j] < -tol:
                    entering = j
                    break
        else:
            entering = int(np.argmin(rc))
            if rc[entering] >= -tol:
                entering = -1
        if entering < 0:
            return OPTIMAL

        col = tab[:m, entering]
        rhs = tab[:m, n]
        eligible = col > tol
        if not eligible.any():
            return UNBOUNDED
        ratios = np.full(m, np.inf)
        ratios[eligible] = rhs[eligible] / col[eligible]
        best = ratios.min()
        ties = np.flatnonzero(ratios <= best + tol)
        if bland and len(ties) > 1:
            leaving = ties[int(np.argmin(basis[ties]))]
        else:
            leaving = ties[0]

        if best <= tol:
            degenerate_streak += 1
            if degenerate_streak >= bland_after:
                bland = True
        else:
            degenerate_streak = 0

        piv = tab[leaving, entering]
        tab[leaving, :] /= piv
        colvals = tab[:, entering].copy()
        colvals[leaving] = 0.0
        tab -= np.outer(colvals, tab[leaving, :])
        tab[:, entering] = 0.0
        tab[leaving, entering] = 1.0
        basis[leaving] = entering

    return ITERATION_LIMIT
