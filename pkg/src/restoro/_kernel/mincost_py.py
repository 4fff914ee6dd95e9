"""Min-cost flow by successive shortest augmenting paths with node potentials.

Pure-Python reference for the compiled kernel in ``_mincost.pyx``; the two
are written to perform the same floating-point operations in the same order
so they produce identical flows.

The graph is given as parallel arc arrays. All arc costs must be >= 0 (true
for flow costs and imbalance penalties), which lets every shortest-path pass
run Dijkstra on reduced costs with zero initial potentials. Potentials are
updated only for nodes settled by the last Dijkstra pass; nodes unreachable
in the residual graph can never become reachable again, so dual feasibility
is preserved.
"""

from __future__ import annotations

import numpy as np

BACKEND = "python"

_INF = float("inf")


def solve_min_cost_flow(n, tails, heads, caps, costs, source, sink):
    """Returns the per-arc flow vector of a min-cost max-flow from source to sink.

    n: node count; tails/heads: int arrays (length m); caps/costs: float
    arrays. Capacities of zero disable an arc. Residuals smaller than
    1e-12 * max(1, max capacity) are treated as exhausted, so inputs with
    near-integral capacities stay exact.
    """
    m = len(tails)
    tails = [int(v) for v in tails]
    heads = [int(v) for v in heads]
    caps = [float(v) for v in caps]
    costs = [float(v) for v in costs]

    max_cap = 0.0
    for c in caps:
        if c > max_cap:
            max_cap = c
    eps = 1e-12 * (max_cap if max_cap > 1.0 else 1.0)

    # Directed residual edges: 2i forward, 2i+1 backward.
    n_edges = 2 * m
    eto = [0] * n_edges
    ecost = [0.0] * n_edges
    res = [0.0] * n_edges
    for i in range(m):
        eto[2 * i] = heads[i]
        eto[2 * i + 1] = tails[i]
        ecost[2 * i] = costs[i]
        ecost[2 * i + 1] = -costs[i]
        res[2 * i] = caps[i]

    # CSR adjacency over directed edges by counting sort on the edge tail.
    deg = [0] * (n + 1)
    for i in range(m):
        deg[tails[i] + 1] += 1
        deg[heads[i] + 1] += 1
    start = [0] * (n + 1)
    for v in range(n):
        start[v + 1] = start[v] + deg[v + 1]
    fill = list(start)
    adj = [0] * n_edges
    for i in range(m):
        u = tails[i]
        adj[fill[u]] = 2 * i
        fill[u] += 1
        v = heads[i]
        adj[fill[v]] = 2 * i + 1
        fill[v] += 1

    pi = [0.0] * n
    dist = [0.0] * n
    done = [False] * n
    prev_edge = [0] * n
    max_rounds = 8 * m + 8 * n + 64

    for _round in range(max_rounds):
        for v in range(n):
            dist[v] = _INF
            done[v] = False
            prev_edge[v] = -1
        dist[source] = 0.0
        # O(n^2) Dijkstra; graphs here are small and dense-ish.
        while True:
            u = -1
            best = _INF
            for v in range(n):
                if not done[v] and dist[v] < best:
                    best = dist[v]
                    u = v
            if u < 0:
                break
            done[u] = True
            du = dist[u]
            piu = pi[u]
            for k in range(start[u], start[u + 1]):
                e = adj[k]
                if res[e] > eps:
                    v = eto[e]
                    rc = ecost[e] + piu - pi[v]
                    if rc < 0.0:  # float dust only; exact arithmetic keeps rc >= 0
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

    flows = np.empty(m, dtype=np.float64)
    for i in range(m):
        flows[i] = res[2 * i + 1]
    return flows
