# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled twin of mincost_py.solve_min_cost_flow.

Mirrors the pure-Python reference operation for operation (same reduced-cost
clamping, same scan-order Dijkstra, same epsilon) so both backends yield
identical flows. See mincost_py for the algorithm notes.
"""

from libc.stdlib cimport free, malloc

import numpy as np

BACKEND = "compiled"

cdef double _INF = float("inf")


def solve_min_cost_flow(int n, tails, heads, caps, costs, int source, int sink):
    cdef int[::1] tails_v = np.ascontiguousarray(tails, dtype=np.int32)
    cdef int[::1] heads_v = np.ascontiguousarray(heads, dtype=np.int32)
    cdef double[::1] caps_v = np.ascontiguousarray(caps, dtype=np.float64)
    cdef double[::1] costs_v = np.ascontiguousarray(costs, dtype=np.float64)
    cdef int m = tails_v.shape[0]
    cdef int n_edges = 2 * m

    flows_arr = np.empty(m, dtype=np.float64)
    cdef double[::1] flows = flows_arr

    cdef double max_cap = 0.0
    cdef int i, v, u, k, e
    for i in range(m):
        if caps_v[i] > max_cap:
            max_cap = caps_v[i]
    cdef double eps = 1e-12 * (max_cap if max_cap > 1.0 else 1.0)

    cdef int *eto = <int *> malloc(n_edges * sizeof(int))
    cdef double *ecost = <double *> malloc(n_edges * sizeof(double))
    cdef double *res = <double *> malloc(n_edges * sizeof(double))
    cdef int *deg = <int *> malloc((n + 1) * sizeof(int))
    cdef int *start = <int *> malloc((n + 1) * sizeof(int))
    cdef int *fill = <int *> malloc((n + 1) * sizeof(int))
    cdef int *adj = <int *> malloc(n_edges * sizeof(int))
    cdef double *pi = <double *> malloc(n * sizeof(double))
    cdef double *dist = <double *> malloc(n * sizeof(double))
    cdef char *done = <char *> malloc(n * sizeof(char))
    cdef int *prev_edge = <int *> malloc(n * sizeof(int))
    if (eto == NULL or ecost == NULL or res == NULL or deg == NULL or
            start == NULL or fill == NULL or adj == NULL or pi == NULL or
            dist == NULL or done == NULL or prev_edge == NULL):
        free(eto); free(ecost); free(res); free(deg); free(start); free(fill)
        free(adj); free(pi); free(dist); free(done); free(prev_edge)
        raise MemoryError()

    cdef double best, du, piu, rc, nd, bottleneck
    cdef int rounds, max_rounds
    try:
        for i in range(m):
            eto[2 * i] = heads_v[i]
            eto[2 * i + 1] = tails_v[i]
            ecost[2 * i] = costs_v[i]
            ecost[2 * i + 1] = -costs_v[i]
            res[2 * i] = caps_v[i]
            res[2 * i + 1] = 0.0

        for v in range(n + 1):
            deg[v] = 0
        for i in range(m):
            deg[tails_v[i] + 1] += 1
            deg[heads_v[i] + 1] += 1
        start[0] = 0
        for v in range(n):
            start[v + 1] = start[v] + deg[v + 1]
        for v in range(n + 1):
            fill[v] = start[v]
        for i in range(m):
            u = tails_v[i]
            adj[fill[u]] = 2 * i
            fill[u] += 1
            v = heads_v[i]
            adj[fill[v]] = 2 * i + 1
            fill[v] += 1

        for v in range(n):
            pi[v] = 0.0

        max_rounds = 8 * m + 8 * n + 64
        for rounds in range(max_rounds):
            for v in range(n):
                dist[v] = _INF
                done[v] = 0
                prev_edge[v] = -1
            dist[source] = 0.0
            while True:
                u = -1
                best = _INF
                for v in range(n):
                    if not done[v] and dist[v] < best:
                        best = dist[v]
                        u = v
                if u < 0:
                    break
                done[u] = 1
                du = dist[u]
                piu = pi[u]
                for k in range(start[u], start[u + 1]):
                    e = adj[k]
                    if res[e] > eps:
                        v = eto[e]
                        rc = ecost[e] + piu - pi[v]
                        if rc < 0.0:
                            rc = 0.0
                        nd = du + rc
                        if nd < dist[v]:
                            dist[v] = nd
                            prev_edge[v] = e
            if dist[sink] == _INF:
                break
            for v in range(n):
                if dist[v] < _INF:
                    pi[v] += dist[v]
            bottleneck = _INF
            v = sink
            while v != source:
                e = prev_edge[v]
                if res[e] < bottleneck:
                    bottleneck = res[e]
                v = eto[e ^ 1]
            if bottleneck <= eps:
                break
            v = sink
            while v != source:
                e = prev_edge[v]
                res[e] -= bottleneck
                res[e ^ 1] += bottleneck
                v = eto[e ^ 1]
        else:
            raise RuntimeError("min-cost flow failed to converge (degenerate input)")

        for i in range(m):
            flows[i] = res[2 * i + 1]
    finally:
        free(eto); free(ecost); free(res); free(deg); free(start); free(fill)
        free(adj); free(pi); free(dist); free(done); free(prev_edge)

    return flows_arr
