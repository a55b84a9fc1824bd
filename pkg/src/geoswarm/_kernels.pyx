# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled kernels: sphere pair geometry and exact transport solvers.

Semantics match ``geoswarm._pykernels`` exactly; see that module for the
algorithm descriptions.
"""

import numpy as np
cimport numpy as cnp
from libc.math cimport sqrt, asin, sin, INFINITY

cnp.import_array()

cdef double SERIES_CUTOFF = 1e-4
cdef double LEX_ATOL = 1e-14


cdef inline double _f(double t) nogil:
    cdef double t2
    if t < SERIES_CUTOFF:
        t2 = t * t
        return 1.0 + t2 / 6.0 + 7.0 * t2 * t2 / 360.0
    return t / sin(t)


def sphere_pairwise_angles(X, Y):
    cdef const double[:, ::1] x = np.ascontiguousarray(X, dtype=np.float64)
    cdef const double[:, ::1] y = np.ascontiguousarray(Y, dtype=np.float64)
    cdef Py_ssize_t k = x.shape[0], n = y.shape[0], d = x.shape[1]
    out = np.empty((k, n), dtype=np.float64)
    cdef double[:, ::1] th = out
    cdef Py_ssize_t i, j, a
    cdef double s, diff, half
    with nogil:
        for i in range(k):
            for j in range(n):
                s = 0.0
                for a in range(d):
                    diff = y[j, a] - x[i, a]
                    s = s + diff * diff
                half = sqrt(s) * 0.5
                if half > 1.0:
                    half = 1.0
                th[i, j] = 2.0 * asin(half)
    return out


def sphere_log_weighted_sum(X, Y, theta, coef):
    cdef const double[:, ::1] x = np.ascontiguousarray(X, dtype=np.float64)
    cdef const double[:, ::1] y = np.ascontiguousarray(Y, dtype=np.float64)
    cdef const double[:, ::1] th = np.ascontiguousarray(theta, dtype=np.float64)
    cdef const double[:, ::1] cf = np.ascontiguousarray(coef, dtype=np.float64)
    cdef Py_ssize_t k = x.shape[0], n = y.shape[0], d = x.shape[1]
    out = np.zeros((k, d), dtype=np.float64)
    cdef double[:, ::1] v = out
    cdef Py_ssize_t i, j, a
    cdef double along, scale
    with nogil:
        for i in range(k):
            for j in range(n):
                scale = cf[i, j]
                if scale == 0.0:
                    continue
                scale = scale * _f(th[i, j])
                along = 0.0
                for a in range(d):
                    along = along + (y[j, a] - x[i, a]) * x[i, a]
                for a in range(d):
                    v[i, a] = v[i, a] + scale * ((y[j, a] - x[i, a]) - along * x[i, a])
    return out


cdef inline bint _lex_le(double a1, double b1, double a2, double b2) nogil:
    if a1 < a2 - LEX_ATOL:
        return True
    if a1 > a2 + LEX_ATOL:
        return False
    return b1 <= b2


def network_simplex(a, b, C, double tol=1e-12, max_iter=None):
    cdef const double[:, ::1] c = np.ascontiguousarray(C, dtype=np.float64)
    cdef Py_ssize_t m = c.shape[0], n = c.shape[1]
    cdef Py_ssize_t nn = m + n, need = m + n - 1
    cdef double[::1] supply = np.array(a, dtype=np.float64)
    cdef double[::1] supply_d = np.ones(m, dtype=np.float64)
    cdef double[::1] demand = np.array(b, dtype=np.float64)
    cdef double[::1] demand_d = np.zeros(n, dtype=np.float64)
    demand_d[n - 1] = <double>m
    cdef cnp.npy_bool[::1] row_done = np.zeros(m, dtype=np.bool_)
    cdef cnp.npy_bool[::1] col_done = np.zeros(n, dtype=np.bool_)

    rows_a = np.zeros(need, dtype=np.intp)
    cols_a = np.zeros(need, dtype=np.intp)
    alpha_a = np.zeros(need, dtype=np.float64)
    cdef Py_ssize_t[::1] rows = rows_a
    cdef Py_ssize_t[::1] cols = cols_a
    cdef double[::1] alpha = alpha_a
    cdef double[::1] beta = np.zeros(need, dtype=np.float64)

    cdef Py_ssize_t[::1] order = np.argsort(np.asarray(c), axis=None, kind="stable").astype(np.intp)
    cdef Py_ssize_t cnt = 0, idx, i, j, e, t
    cdef double fa, fb
    for t in range(m * n):
        idx = order[t]
        i = idx // n
        j = idx % n
        if row_done[i] or col_done[j]:
            continue
        if _lex_le(supply[i], supply_d[i], demand[j], demand_d[j]):
            fa = supply[i]
            fb = supply_d[i]
            row_done[i] = True
        else:
            fa = demand[j]
            fb = demand_d[j]
            col_done[j] = True
        supply[i] -= fa
        supply_d[i] -= fb
        demand[j] -= fa
        demand_d[j] -= fb
        rows[cnt] = i
        cols[cnt] = j
        alpha[cnt] = fa
        beta[cnt] = fb
        cnt += 1
        if cnt == need:
            break

    cdef long long limit
    if max_iter is None:
        limit = 50 * (m + n) * (m if m > n else n) + 1000
    else:
        limit = max_iter
    cdef Py_ssize_t block_rows = <Py_ssize_t>(int(np.sqrt(<double>(m * n))) // n)
    if block_rows < 1:
        block_rows = 1

    # tree storage (CSR adjacency rebuilt per pivot)
    cdef Py_ssize_t[::1] deg = np.zeros(nn + 1, dtype=np.intp)
    cdef Py_ssize_t[::1] adj = np.zeros(2 * need, dtype=np.intp)
    cdef Py_ssize_t[::1] fill = np.zeros(nn, dtype=np.intp)
    cdef Py_ssize_t[::1] parent = np.zeros(nn, dtype=np.intp)
    cdef Py_ssize_t[::1] pedge = np.zeros(nn, dtype=np.intp)
    cdef Py_ssize_t[::1] depth = np.zeros(nn, dtype=np.intp)
    cdef double[::1] pot = np.zeros(nn, dtype=np.float64)
    cdef cnp.npy_bool[::1] seen = np.zeros(nn, dtype=np.bool_)
    cdef Py_ssize_t[::1] queue = np.zeros(nn, dtype=np.intp)
    cdef Py_ssize_t[::1] minus = np.zeros(nn, dtype=np.intp)
    cdef Py_ssize_t[::1] plus = np.zeros(nn, dtype=np.intp)

    cdef Py_ssize_t cursor = 0, scanned, r0, r1, r, best_i, best_j, head, tail, node, other
    cdef Py_ssize_t p, q, nminus, nplus, leave, s
    cdef long long it = 0
    cdef double best, rc, ta, tb
    cdef bint found

    with nogil:
        while True:
            # rebuild adjacency
            for s in range(nn + 1):
                deg[s] = 0
            for e in range(need):
                deg[rows[e] + 1] += 1
                deg[m + cols[e] + 1] += 1
            for s in range(nn):
                deg[s + 1] += deg[s]
                fill[s] = deg[s]
            for e in range(need):
                adj[fill[rows[e]]] = e
                fill[rows[e]] += 1
                adj[fill[m + cols[e]]] = e
                fill[m + cols[e]] += 1
            for s in range(nn):
                seen[s] = False
            seen[0] = True
            parent[0] = -1
            pedge[0] = -1
            depth[0] = 0
            pot[0] = 0.0
            queue[0] = 0
            head = 0
            tail = 1
            while head < tail:
                node = queue[head]
                head += 1
                for s in range(deg[node], deg[node + 1]):
                    e = adj[s]
                    if node < m:
                        other = m + cols[e]
                    else:
                        other = rows[e]
                    if seen[other]:
                        continue
                    seen[other] = True
                    parent[other] = node
                    pedge[other] = e
                    depth[other] = depth[node] + 1
                    pot[other] = c[rows[e], cols[e]] - pot[node]
                    queue[tail] = other
                    tail += 1

            # block pricing
            found = False
            scanned = 0
            while scanned < m:
                r0 = cursor
                r1 = r0 + block_rows
                if r1 > m:
                    r1 = m
                best = INFINITY
                best_i = -1
                best_j = -1
                for r in range(r0, r1):
                    for j in range(n):
                        rc = c[r, j] - pot[r] - pot[m + j]
                        if rc < best:
                            best = rc
                            best_i = r
                            best_j = j
                if r1 < m:
                    cursor = r1
                else:
                    cursor = 0
                scanned += r1 - r0
                if best < -tol:
                    found = True
                    break
            if not found:
                break
            it += 1
            if it > limit:
                break

            # cycle through the tree
            p = best_i
            q = m + best_j
            nminus = 0
            nplus = 0
            while p != q:
                if depth[p] >= depth[q]:
                    e = pedge[p]
                    if p < m:
                        minus[nminus] = e
                        nminus += 1
                    else:
                        plus[nplus] = e
                        nplus += 1
                    p = parent[p]
                else:
                    e = pedge[q]
                    if q >= m:
                        minus[nminus] = e
                        nminus += 1
                    else:
                        plus[nplus] = e
                        nplus += 1
                    q = parent[q]
            leave = minus[0]
            for s in range(1, nminus):
                e = minus[s]
                if _lex_le(alpha[e], beta[e], alpha[leave], beta[leave]) and not _lex_le(
                    alpha[leave], beta[leave], alpha[e], beta[e]
                ):
                    leave = e
            ta = alpha[leave]
            tb = beta[leave]
            for s in range(nplus):
                e = plus[s]
                alpha[e] += ta
                beta[e] += tb
            for s in range(nminus):
                e = minus[s]
                alpha[e] -= ta
                beta[e] -= tb
            rows[leave] = best_i
            cols[leave] = best_j
            alpha[leave] = ta
            beta[leave] = tb

    if it > limit:
        raise RuntimeError("network simplex did not converge")
    return rows_a, cols_a, np.maximum(alpha_a, 0.0), int(it)


def linear_assignment(C):
    cdef const double[:, ::1] c = np.ascontiguousarray(C, dtype=np.float64)
    cdef Py_ssize_t n = c.shape[0]
    if c.shape[1] != n:
        raise ValueError("cost matrix must be square")
    cdef double[::1] u = np.zeros(n + 1)
    cdef double[::1] v = np.zeros(n + 1)
    cdef Py_ssize_t[::1] p = np.zeros(n + 1, dtype=np.intp)
    cdef Py_ssize_t[::1] way = np.zeros(n + 1, dtype=np.intp)
    cdef double[::1] minv = np.zeros(n + 1)
    cdef cnp.npy_bool[::1] used = np.zeros(n + 1, dtype=np.bool_)
    cdef Py_ssize_t i, j, j0, j1, i0
    cdef double delta, cur
    with nogil:
        for i in range(1, n + 1):
            p[0] = i
            j0 = 0
            for j in range(n + 1):
                minv[j] = INFINITY
                used[j] = False
            while True:
                used[j0] = True
                i0 = p[j0]
                delta = INFINITY
                j1 = 0
                for j in range(1, n + 1):
                    if not used[j]:
                        cur = c[i0 - 1, j - 1] - u[i0] - v[j]
                        if cur < minv[j]:
                            minv[j] = cur
                            way[j] = j0
                        if minv[j] < delta:
                            delta = minv[j]
                            j1 = j
                for j in range(n + 1):
                    if used[j]:
                        u[p[j]] += delta
                        v[j] -= delta
                    else:
                        minv[j] -= delta
                j0 = j1
                if p[j0] == 0:
                    break
            while True:
                j1 = way[j0]
                p[j0] = p[j1]
                j0 = j1
                if j0 == 0:
                    break
    assignment = np.empty(n, dtype=np.intp)
    cdef Py_ssize_t[::1] out = assignment
    for j in range(1, n + 1):
        out[p[j] - 1] = j - 1
    return assignment
