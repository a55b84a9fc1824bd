"""Pure-Python/numpy versions of the hot kernels.

These mirror ``_kernels.pyx`` operation for operation so that both backends
return the same basis, plan and permutation on the same input. They are used
when the compiled extension is unavailable or ``GEOSWARM_PURE_PYTHON=1``.
"""

import math

import numpy as np

SERIES_CUTOFF = 1e-4
LEX_ATOL = 1e-14


def theta_over_sin(theta):
    """f(t) = t / sin(t), with its Taylor series near zero."""
    theta = np.asarray(theta, dtype=float)
    t2 = theta * theta
    small = theta < SERIES_CUTOFF
    safe = np.where(small, 1.0, theta)
    out = np.where(small, 1.0 + t2 / 6.0 + 7.0 * t2 * t2 / 360.0, safe / np.sin(safe))
    return out


def sphere_pairwise_angles(X, Y):
    """Geodesic angles between rows of X (k, d) and rows of Y (n, d)."""
    X = np.ascontiguousarray(X, dtype=float)
    Y = np.ascontiguousarray(Y, dtype=float)
    diff = Y[None, :, :] - X[:, None, :]
    chord = np.sqrt(np.einsum("knd,knd->kn", diff, diff))
    return 2.0 * np.arcsin(np.minimum(chord * 0.5, 1.0))


def sphere_log_weighted_sum(X, Y, theta, coef):
    """Sum_j coef[i, j] * log_{x_i}(y_j) on the unit sphere."""
    X = np.ascontiguousarray(X, dtype=float)
    Y = np.ascontiguousarray(Y, dtype=float)
    diff = Y[None, :, :] - X[:, None, :]
    along = np.einsum("knd,kd->kn", diff, X)
    w = diff - along[:, :, None] * X[:, None, :]
    scale = np.asarray(coef, dtype=float) * theta_over_sin(theta)
    return np.einsum("kn,knd->kd", scale, w)


# -- transportation simplex -------------------------------------------------


def _lex_le(a1, b1, a2, b2):
    if a1 < a2 - LEX_ATOL:
        return True
    if a1 > a2 + LEX_ATOL:
        return False
    return b1 <= b2


def _initial_basis(a, b, C):
    m, n = C.shape
    supply = [float(x) for x in a]
    supply_d = [1.0] * m
    demand = [float(x) for x in b]
    demand_d = [0.0] * n
    demand_d[n - 1] = float(m)
    row_done = [False] * m
    col_done = [False] * n
    rows, cols, alpha, beta = [], [], [], []
    need = m + n - 1
    for idx in np.argsort(C, axis=None, kind="stable"):
        i, j = divmod(int(idx), n)
        if row_done[i] or col_done[j]:
            continue
        if _lex_le(supply[i], supply_d[i], demand[j], demand_d[j]):
            fa, fb = supply[i], supply_d[i]
            row_done[i] = True
        else:
            fa, fb = demand[j], demand_d[j]
            col_done[j] = True
        supply[i] -= fa
        supply_d[i] -= fb
        demand[j] -= fa
        demand_d[j] -= fb
        rows.append(i)
        cols.append(j)
        alpha.append(fa)
        beta.append(fb)
        if len(rows) == need:
            break
    return rows, cols, alpha, beta


def _tree(m, n, rows, cols, C):
    """BFS over the basis tree rooted at row 0; nodes are rows 0..m-1, cols m..m+n-1."""
    nn = m + n
    adj = [[] for _ in range(nn)]
    for e, (i, j) in enumerate(zip(rows, cols)):
        adj[i].append(e)
        adj[m + j].append(e)
    parent = [-1] * nn
    pedge = [-1] * nn
    depth = [0] * nn
    pot = [0.0] * nn
    seen = [False] * nn
    seen[0] = True
    queue = [0]
    head = 0
    while head < len(queue):
        node = queue[head]
        head += 1
        for e in adj[node]:
            other = m + cols[e] if node < m else rows[e]
            if seen[other]:
                continue
            seen[other] = True
            parent[other] = node
            pedge[other] = e
            depth[other] = depth[node] + 1
            pot[other] = C[rows[e], cols[e]] - pot[node]
            queue.append(other)
    return parent, pedge, depth, pot


def network_simplex(a, b, C, tol=1e-12, max_iter=None):
    """Exact transportation simplex on the bipartite network.

    Degeneracy is removed by a symbolic perturbation (row supplies get +delta,
    the last demand gets +m*delta, delta infinitesimal), carried as a second
    flow component and compared lexicographically.

    Returns ``(rows, cols, flows, iterations)`` for the basic cells of the
    optimal basis.
    """
    C = np.ascontiguousarray(C, dtype=float)
    m, n = C.shape
    rows, cols, alpha, beta = _initial_basis(a, b, C)
    if max_iter is None:
        max_iter = 50 * (m + n) * max(m, n) + 1000
    block_rows = max(1, int(math.isqrt(m * n)) // n)
    cursor = 0
    it = 0
    while True:
        parent, pedge, depth, pot = _tree(m, n, rows, cols, C)
        u = np.asarray(pot[:m])
        v = np.asarray(pot[m:])
        entering = None
        scanned = 0
        while scanned < m:
            r0 = cursor
            r1 = min(m, r0 + block_rows)
            rc = C[r0:r1] - u[r0:r1, None] - v[None, :]
            k = int(np.argmin(rc))
            cursor = r1 if r1 < m else 0
            scanned += r1 - r0
            if rc.flat[k] < -tol:
                entering = (r0 + k // n, k % n)
                break
        if entering is None:
            break
        it += 1
        if it > max_iter:
            raise RuntimeError("network simplex did not converge")
        i, j = entering
        p, q = i, m + j
        minus = []
        plus = []
        while p != q:
            if depth[p] >= depth[q]:
                e = pedge[p]
                (minus if p < m else plus).append(e)
                p = parent[p]
            else:
                e = pedge[q]
                (minus if q >= m else plus).append(e)
                q = parent[q]
        leave = minus[0]
        for e in minus[1:]:
            if _lex_le(alpha[e], beta[e], alpha[leave], beta[leave]) and not _lex_le(
                alpha[leave], beta[leave], alpha[e], beta[e]
            ):
                leave = e
        ta, tb = alpha[leave], beta[leave]
        for e in plus:
            alpha[e] += ta
            beta[e] += tb
        for e in minus:
            alpha[e] -= ta
            beta[e] -= tb
        rows[leave] = i
        cols[leave] = j
        alpha[leave] = ta
        beta[leave] = tb
    flows = np.maximum(np.asarray(alpha, dtype=float), 0.0)
    return np.asarray(rows, dtype=np.intp), np.asarray(cols, dtype=np.intp), flows, it


def linear_assignment(C):
    """Minimum-cost perfect matching of a square cost matrix (Hungarian, O(n^3))."""
    C = np.ascontiguousarray(C, dtype=float)
    n = C.shape[0]
    if C.shape != (n, n):
        raise ValueError("cost matrix must be square")
    u = np.zeros(n + 1)
    v = np.zeros(n + 1)
    p = np.zeros(n + 1, dtype=np.intp)
    way = np.zeros(n + 1, dtype=np.intp)
    for i in range(1, n + 1):
        p[0] = i
        j0 = 0
        minv = np.full(n + 1, np.inf)
        used = np.zeros(n + 1, dtype=bool)
        while True:
            used[j0] = True
            i0 = p[j0]
            cur = C[i0 - 1] - u[i0] - v[1:]
            free = ~used[1:]
            better = free & (cur < minv[1:])
            minv[1:][better] = cur[better]
            way[1:][better] = j0
            masked = np.where(free, minv[1:], np.inf)
            j1 = int(np.argmin(masked)) + 1
            delta = masked[j1 - 1]
            u[p[used]] += delta
            v[used] -= delta
            minv[~used] -= delta
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
    assignment[p[1:] - 1] = np.arange(n)
    return assignment
