# cython: boundscheck=False, wraparound=False, cdivision=True
"""Compiled simplex pivot kernel; see _simplex_py for the tableau layout."""

import numpy as np
cimport numpy as cnp

OPTIMAL = 0
UNBOUNDED = 1
ITERATION_LIMIT = 2


def run_simplex(double[:, ::1] tab, long[::1] basis, int n_enterable,
                double tol, long bland_after, long maxiter):
    cdef int m = tab.shape[0] - 1
    cdef int n = tab.shape[1] - 1
    cdef long degenerate_streak = 0
    cdef bint bland = False
    cdef long it
    cdef int i, j, entering, leaving
    cdef double best_rc, ratio, best_ratio, piv, factor

    for it in range(maxiter):
        entering = -1
        if bland:
            for j in range(n_enterable):
                if tab[m, j] < -tol:
                    entering = j
                    break
        else:
            best_rc = -tol
            for j in range(n_enterable):
                if tab[m, j] < best_rc:
                    best_rc = tab[m, j]
                    entering = j
        if entering < 0:
            return OPTIMAL

        leaving = -1
        best_ratio = 0.0
        for i in range(m):
            if tab[i, entering] > tol:
                ratio = tab[i, n] / tab[i, entering]
                if leaving < 0 or ratio < best_ratio - tol:
                    leaving = i
                    best_ratio = ratio
                elif ratio <= best_ratio + tol and bland and basis[i] < basis[leaving]:
                    leaving = i
        if leaving < 0:
            return UNBOUNDED

        if best_ratio <= tol:
            degenerate_streak += 1
            if degenerate_streak >= bland_after:
                bland = True
        else:
            degenerate_streak = 0

        piv = tab[leaving, entering]
        for j in range(n + 1):
            tab[leaving, j] /= piv
        for i in range(m + 1):
            if i == leaving:
                continue
            factor = tab[i, entering]
            if factor != 0.0:
                for j in range(n + 1):
                    tab[i, j] -= factor * tab[leaving, j]
                tab[i, entering] = 0.0
        tab[leaving, entering] = 1.0
        basis[leaving] = entering

    return ITERATION_LIMIT
