import numpy as np
import pytest

from restoro.network import (ArcSpec, InterdependencyLink, NetworkSpec,
                             NodeRef, NodeSpec, SpaceSpec)


def mk_node(layer, idx, b=0.0, q=100.0, mp=10.0, mm=10.0, space="s0",
            dc=False, pos=(0.0, 0.0)):
    return NodeSpec(ref=NodeRef(layer, idx), balance=b, repair_cost=q,
                    surplus_penalty=mp, deficit_penalty=mm, space=space,
                    demand_completion=dc, position=pos)


def mk_arc(layer, u, v, cap=10.0, c=1.0, f=50.0, space="s0"):
    return ArcSpec(tail=NodeRef(layer, u), head=NodeRef(layer, v),
                   capacity=cap, flow_cost=c, repair_cost=f, space=space)


def mk_link(pl, pi, cl, ci):
    return InterdependencyLink(parent=NodeRef(pl, pi), child=NodeRef(cl, ci))


@pytest.fixture
def supply_demand_spec():
    """One layer, supply 5 -> demand 5 over a single arc (cap 10, cost 1)."""
    return NetworkSpec(
        layers=["w"],
        nodes=[mk_node("w", 0, b=5.0, mp=10.0, mm=10.0),
               mk_node("w", 1, b=-5.0, mp=10.0, mm=10.0)],
        arcs=[mk_arc("w", 0, 1, cap=10.0, c=1.0)],
        links=[],
        spaces=[SpaceSpec("s0", 25.0)],
    )


@pytest.fixture
def three_layer_spec():
    """Small well-formed 3-layer network with a dependency chain."""
    nodes = [
        mk_node("water", 0, b=3.0), mk_node("water", 1, b=-3.0),
        mk_node("gas", 0, b=2.0), mk_node("gas", 1, b=-2.0),
        mk_node("power", 0, b=4.0), mk_node("power", 1, b=-4.0),
    ]
    arcs = [
        mk_arc("water", 0, 1, cap=5.0), mk_arc("gas", 0, 1, cap=5.0),
        mk_arc("power", 0, 1, cap=5.0),
    ]
    links = [mk_link("power", 0, "water", 0), mk_link("gas", 1, "power", 1)]
    return NetworkSpec(
        layers=["water", "gas", "power"], nodes=nodes, arcs=arcs, links=links,
        spaces=[SpaceSpec("s0", 25.0)],
    )


def random_small_spec(seed, n_layers=2, max_nodes=6):
    """Random small instance for oracle sweeps: integer balances and caps."""
    rng = np.random.default_rng(seed)
    layers = [f"L{k}" for k in range(n_layers)]
    spaces = [SpaceSpec(f"s{i}", float(rng.integers(10, 40)))
              for i in range(3)]
    nodes, arcs, links = [], [], []
    sizes = {}
    for layer in layers:
        n = int(rng.integers(2, max_nodes + 1))
        sizes[layer] = n
        balances = rng.integers(-3, 4, size=n)
        balances[-1] = -int(balances[:-1].sum())  # net zero per layer
        if abs(balances[-1]) > 6:
            balances[:] = 0
        for v in range(n):
            nodes.append(mk_node(
                layer, v, b=float(balances[v]),
                q=float(rng.integers(20, 200)),
                mp=float(rng.integers(5, 60)),
                mm=float(rng.integers(20, 300)),
                space=f"s{rng.integers(0, 3)}",
            ))
        seen = set()
        for v in range(1, n):
            u = int(rng.integers(0, v))
            for (a, b) in ((u, v), (v, u)):
                if (a, b) not in seen:
                    seen.add((a, b))
                    arcs.append(mk_arc(layer, a, b,
                                       cap=float(rng.integers(1, 4)),
                                       c=float(rng.integers(1, 8)),
                                       f=float(rng.integers(10, 90)),
                                       space=f"s{rng.integers(0, 3)}"))
        for _ in range(int(rng.integers(0, n))):
            a, b = int(rng.integers(0, n)), int(rng.integers(0, n))
            if a != b and (a, b) not in seen:
                seen.add((a, b))
                arcs.append(mk_arc(layer, a, b,
                                   cap=float(rng.integers(1, 4)),
                                   c=float(rng.integers(1, 8)),
                                   f=float(rng.integers(10, 90)),
                                   space=f"s{rng.integers(0, 3)}"))
    # a few cross-layer links
    for _ in range(int(rng.integers(0, 3)) if len(layers) > 1 else 0):
        kp, kc = rng.choice(len(layers), size=2, replace=False)
        lp, lc = layers[kp], layers[kc]
        pi = int(rng.integers(0, sizes[lp]))
        ci = int(rng.integers(0, sizes[lc]))
        link = mk_link(lp, pi, lc, ci)
        if link not in links:
            links.append(link)
    return NetworkSpec(layers=layers, nodes=nodes, arcs=arcs, links=links,
                       spaces=spaces)
