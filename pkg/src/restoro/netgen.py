"""Synthetic interdependent network generator.

Replaces GIS-derived data with a seeded generator whose outputs satisfy all
NetworkSpec invariants: per-layer connected flow networks with balanced
supply/demand, a geographical space grid, and cross-layer dependency links.
Penalty ranges deliberately dominate repair costs so that restoring service
is always worthwhile, which matches the cost regimes used throughout the
package's experiments.
"""

from __future__ import annotations

import numpy as np

from .network import (ArcSpec, InterdependencyLink, NetworkSpec, NodeRef,
                      NodeSpec, SpaceSpec, validate)

SHELBY_LIKE_LAYERS = ("water", "gas", "power")
SHELBY_LIKE_SIZES = (49, 16, 60)
# (parent layer, child layer, fraction of child nodes with a parent)
SHELBY_LIKE_DEPENDENCIES = (("power", "water", 0.30), ("gas", "power", 0.20))


def synthetic_network(layer_names, sizes, seed=0, *, supply_frac=0.2,
                      demand_frac=0.8, extra_arc_frac=0.6, space_grid=3,
                      dependency_pattern=None, link_frac=0.2,
                      demand_completion_frac=0.0):
    """Build a seeded random NetworkSpec.

    Each layer gets a bidirected random spanning tree plus extra arcs, integer
    balances with total supply equal to total demand, and ample tree
    capacities so the undamaged network routes all demand. Every node is a
    supply or a demand by default (all nodes serve load), so restoring any
    node reduces imbalance penalties and full recovery is cost-optimal under
    the generated penalty ranges. Spaces form a space_grid x space_grid cell
    partition of the unit square. dependency_pattern is a list of
    (parent_layer, child_layer, fraction) triples; by default consecutive
    layers are chained at link_frac.
    """
    layer_names = list(layer_names)
    sizes = [int(s) for s in sizes]
    if len(layer_names) != len(sizes):
        raise ValueError("layer_names and sizes must have equal length")
    if any(s < 1 for s in sizes):
        raise ValueError("every layer needs at least one node")
    rng = np.random.default_rng(seed)
    g = max(1, int(space_grid))

    spaces = [SpaceSpec(id=f"s{r}_{c}", prep_cost=float(rng.integers(20, 61)))
              for r in range(g) for c in range(g)]

    def cell_of(x, y):
        r = min(g - 1, int(y * g))
        c = min(g - 1, int(x * g))
        return f"s{r}_{c}"

    nodes, arcs = [], []
    for layer, n in zip(layer_names, sizes):
        pos = rng.random((n, 2))
        n_sup = max(1, round(supply_frac * n)) if n >= 2 else 0
        n_dem = max(1, round(demand_frac * n)) if n >= 2 else 0
        while n_sup + n_dem > n:  # tiny layers: shrink demand first
            if n_dem > 1:
                n_dem -= 1
            else:
                n_sup -= 1
        roles = rng.permutation(n)
        sup_idx = set(roles[:n_sup].tolist())
        dem_idx = set(roles[n_sup:n_sup + n_dem].tolist())
        demands = {v: int(rng.integers(1, 4)) for v in sorted(dem_idx)}
        total_d = sum(demands.values())
        supplies = {}
        if n_sup:
            base, rem = divmod(total_d, n_sup)
            for i, v in enumerate(sorted(sup_idx)):
                supplies[v] = base + (1 if i < rem else 0)
        dc_draw = rng.random(n)
        for v in range(n):
            b = float(supplies.get(v, 0) - demands.get(v, 0))
            nodes.append(NodeSpec(
                ref=NodeRef(layer, v),
                balance=b,
                repair_cost=float(rng.integers(50, 151)),
                surplus_penalty=float(rng.integers(50, 101)),
                deficit_penalty=float(rng.integers(500, 1001)),
                space=cell_of(pos[v, 0], pos[v, 1]),
                demand_completion=bool(b < 0 and dc_draw[v] < demand_completion_frac),
                position=(float(pos[v, 0]), float(pos[v, 1])),
            ))
        ample = float(max(total_d, 1))
        seen = set()

        def add_arc(u, v, cap):
            if u == v or (u, v) in seen:
                return
            seen.add((u, v))
            mid = (pos[u] + pos[v]) / 2.0
            arcs.append(ArcSpec(
                tail=NodeRef(layer, u), head=NodeRef(layer, v),
                capacity=cap, flow_cost=float(rng.integers(1, 7)),
                repair_cost=float(rng.integers(30, 81)),
                space=cell_of(mid[0], mid[1]),
            ))

        for v in range(1, n):
            u = int(rng.integers(0, v))
            add_arc(u, v, ample)
            add_arc(v, u, ample)
        for _ in range(round(extra_arc_frac * n)):
            u = int(rng.integers(0, n))
            v = int(rng.integers(0, n))
            add_arc(u, v, float(rng.integers(1, max(2, total_d + 1))))

    if dependency_pattern is None:
        dependency_pattern = [
            (layer_names[i], layer_names[i + 1], link_frac)
            for i in range(len(layer_names) - 1)
        ]
    size_of = dict(zip(layer_names, sizes))
    links = []
    seen_links = set()
    for parent_layer, child_layer, frac in dependency_pattern:
        np_, nc = size_of[parent_layer], size_of[child_layer]
        draw = rng.random(nc)
        parents = rng.integers(0, np_, size=nc)
        for v in range(nc):
            if draw[v] < frac:
                key = (parent_layer, int(parents[v]), child_layer, v)
                if key in seen_links:
                    continue
                seen_links.add(key)
                links.append(InterdependencyLink(
                    parent=NodeRef(parent_layer, int(parents[v])),
                    child=NodeRef(child_layer, v),
                ))

    spec = NetworkSpec(layers=layer_names, nodes=nodes, arcs=arcs,
                       links=links, spaces=spaces)
    problems = validate(spec)
    if problems:  # generator bug, not user input
        raise AssertionError(f"generator produced invalid network: {problems[:3]}")
    return spec


def shelby_like(seed=0, **kwargs):
    """125-node testbed shaped like the Shelby County system: 49 water,
    16 gas, and 60 power nodes, water depending on power and power on gas."""
    kwargs.setdefault("dependency_pattern", SHELBY_LIKE_DEPENDENCIES)
    kwargs.setdefault("space_grid", 4)
    return synthetic_network(SHELBY_LIKE_LAYERS, SHELBY_LIKE_SIZES, seed, **kwargs)
