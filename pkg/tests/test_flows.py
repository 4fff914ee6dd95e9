import numpy as np
import pytest

from restoro import flows
from restoro.flows import (FlowContext, FunctionalityState, effective_state,
                           full_state, operating_cost, solve_layer_flow,
                           state_with_damage)
from restoro.network import NetworkSpec, SpaceSpec

from conftest import mk_arc, mk_link, mk_node, random_small_spec
from oracles import brute_force_layer_cost


def test_single_arc_routing(supply_demand_spec):
    sol = solve_layer_flow(supply_demand_spec, "w",
                           full_state(supply_demand_spec))
    assert sol.arc_flow.tolist() == [5.0]
    assert sol.flow_cost == 5.0
    assert sol.imbalance_cost == 0.0
    assert sol.surplus.tolist() == [0.0, 0.0]
    assert sol.deficit.tolist() == [0.0, 0.0]


def test_single_arc_down(supply_demand_spec):
    st = state_with_damage(supply_demand_spec, damaged_arcs=[0])
    sol = solve_layer_flow(supply_demand_spec, "w", st)
    assert sol.arc_flow.tolist() == [0.0]
    assert sol.surplus[0] == 5.0
    assert sol.deficit[1] == 5.0
    # 5 * (M+ + M-) with both penalties 10
    assert sol.imbalance_cost == 5.0 * (10.0 + 10.0)


def test_parallel_paths_pick_cheaper():
    spec = NetworkSpec(
        layers=["w"],
        nodes=[mk_node("w", 0, b=4.0, mm=100.0), mk_node("w", 1),
               mk_node("w", 2), mk_node("w", 3, b=-4.0, mm=100.0)],
        arcs=[mk_arc("w", 0, 1, cap=4.0, c=1.0), mk_arc("w", 1, 3, cap=4.0, c=1.0),
              mk_arc("w", 0, 2, cap=4.0, c=5.0), mk_arc("w", 2, 3, cap=4.0, c=5.0)],
        links=[],
        spaces=[SpaceSpec("s0", 1.0)],
    )
    sol = solve_layer_flow(spec, "w", full_state(spec))
    assert sol.arc_flow.tolist() == [4.0, 4.0, 0.0, 0.0]
    assert sol.flow_cost == 8.0
    oracle = brute_force_layer_cost(spec, "w", full_state(spec))
    assert sol.flow_cost + sol.imbalance_cost == pytest.approx(oracle, rel=1e-12)


def test_effective_state_identity_without_links(supply_demand_spec):
    st = full_state(supply_demand_spec)
    eff = effective_state(supply_demand_spec, st)
    assert np.array_equal(eff.node_up, st.node_up)
    assert np.array_equal(eff.arc_up, st.arc_up)


def test_parent_down_takes_child_down(three_layer_spec):
    spec = three_layer_spec
    # power:0 is parent of water:0
    st = state_with_damage(spec, damaged_nodes=[4])  # power:0 canonical idx 4
    eff = effective_state(spec, st)
    assert eff.node_up[4] == 0
    assert eff.node_up[0] == 0  # water:0 deactivated through the link
    # arcs with a dead endpoint are down
    assert eff.arc_up[0] == 0   # water arc 0->1
    assert eff.arc_up[2] == 0   # power arc 0->1


def test_dependency_chain_propagates():
    spec = NetworkSpec(
        layers=["a", "b", "c"],
        nodes=[mk_node("a", 0), mk_node("b", 0), mk_node("c", 0)],
        arcs=[],
        links=[mk_link("a", 0, "b", 0), mk_link("b", 0, "c", 0)],
        spaces=[SpaceSpec("s0", 1.0)],
    )
    st = state_with_damage(spec, damaged_nodes=[0])
    eff = effective_state(spec, st)
    assert eff.node_up.tolist() == [0, 0, 0]


def test_effective_state_idempotent():
    for seed in range(10):
        spec = random_small_spec(seed)
        ctx = FlowContext(spec)
        rng = np.random.default_rng(seed + 100)
        st = FunctionalityState(
            (rng.random(ctx.n_nodes) > 0.3).astype(np.uint8),
            (rng.random(ctx.n_arcs) > 0.2).astype(np.uint8))
        once = ctx.effective_state(st)
        twice = ctx.effective_state(once)
        assert np.array_equal(once.node_up, twice.node_up)
        assert np.array_equal(once.arc_up, twice.arc_up)


def test_demand_completion_deactivates_unserved_node():
    # demand node flagged: without the arc it cannot be served, so it goes down
    spec = NetworkSpec(
        layers=["w"],
        nodes=[mk_node("w", 0, b=2.0), mk_node("w", 1, b=-2.0, dc=True)],
        arcs=[mk_arc("w", 0, 1, cap=5.0)],
        links=[],
        spaces=[SpaceSpec("s0", 1.0)],
    )
    healthy = effective_state(spec, full_state(spec))
    assert healthy.node_up.tolist() == [1, 1]  # fully served -> stays up
    st = state_with_damage(spec, damaged_arcs=[0])
    eff = effective_state(spec, st)
    assert eff.node_up.tolist() == [1, 0]


def test_demand_completion_cascades_through_links():
    # w:1 unserved -> down -> its dependent p:0 goes down too
    spec = NetworkSpec(
        layers=["w", "p"],
        nodes=[mk_node("w", 0, b=2.0), mk_node("w", 1, b=-2.0, dc=True),
               mk_node("p", 0, b=0.0)],
        arcs=[mk_arc("w", 0, 1, cap=5.0)],
        links=[mk_link("w", 1, "p", 0)],
        spaces=[SpaceSpec("s0", 1.0)],
    )
    st = state_with_damage(spec, damaged_arcs=[0])
    eff = effective_state(spec, st)
    assert eff.node_up.tolist() == [1, 0, 0]


def test_operating_cost_fully_damaged():
    for seed in range(5):
        spec = random_small_spec(seed)
        n = len(spec.nodes)
        st = FunctionalityState(np.zeros(n, dtype=np.uint8),
                                np.zeros(len(spec.arcs), dtype=np.uint8))
        cf, cu, _ = operating_cost(spec, st)
        assert cf == 0.0
        expect = sum(
            nd.surplus_penalty * max(nd.balance, 0.0)
            + nd.deficit_penalty * max(-nd.balance, 0.0)
            for nd in spec.nodes)
        assert cu == pytest.approx(expect, rel=1e-12)


def test_matches_brute_force_on_random_layers():
    checked = 0
    for seed in range(12):
        spec = random_small_spec(seed, n_layers=1, max_nodes=5)
        ctx = FlowContext(spec)
        rng = np.random.default_rng(seed + 1000)
        st = FunctionalityState(
            (rng.random(ctx.n_nodes) > 0.25).astype(np.uint8),
            (rng.random(ctx.n_arcs) > 0.2).astype(np.uint8))
        eff = ctx.effective_state(st)
        for layer in spec.layers:
            sol = ctx.solve_layer_pos(list(spec.layers).index(layer), eff)
            oracle = brute_force_layer_cost(spec, layer, eff)
            got = sol.flow_cost + sol.imbalance_cost
            assert got == pytest.approx(oracle, rel=1e-9, abs=1e-9)
            checked += 1
    assert checked >= 12


def test_conservation_residuals():
    for seed in range(8):
        spec = random_small_spec(seed)
        ctx = FlowContext(spec)
        rng = np.random.default_rng(seed + 500)
        st = FunctionalityState(
            (rng.random(ctx.n_nodes) > 0.3).astype(np.uint8),
            (rng.random(ctx.n_arcs) > 0.2).astype(np.uint8))
        eff = ctx.effective_state(st)
        _, _, sols = ctx.operating_cost(eff)
        res = flows.conservation_residuals(ctx, eff, sols)
        scale = np.maximum(1.0, np.abs(ctx.balance))
        assert (res <= 1e-9 * scale).all()


def test_monotone_in_functionality():
    for seed in range(8):
        spec = random_small_spec(seed)
        ctx = FlowContext(spec)
        rng = np.random.default_rng(seed + 2000)
        low_nodes = (rng.random(ctx.n_nodes) > 0.4).astype(np.uint8)
        low_arcs = (rng.random(ctx.n_arcs) > 0.3).astype(np.uint8)
        # raise some elements: high >= low elementwise
        high_nodes = low_nodes | (rng.random(ctx.n_nodes) > 0.5)
        high_arcs = low_arcs | (rng.random(ctx.n_arcs) > 0.5)
        lo = ctx.operating_total(FunctionalityState(low_nodes, low_arcs))
        hi = ctx.operating_total(
            FunctionalityState(high_nodes.astype(np.uint8),
                               high_arcs.astype(np.uint8)))
        assert hi <= lo + 1e-9 * max(1.0, abs(lo))


def test_zero_capacity_arc_equals_down_arc():
    spec = NetworkSpec(
        layers=["w"],
        nodes=[mk_node("w", 0, b=3.0), mk_node("w", 1, b=-3.0)],
        arcs=[mk_arc("w", 0, 1, cap=0.0), mk_arc("w", 0, 1, cap=0.0)][:1],
        links=[],
        spaces=[SpaceSpec("s0", 1.0)],
    )
    up = solve_layer_flow(spec, "w", full_state(spec))
    down = solve_layer_flow(spec, "w",
                            state_with_damage(spec, damaged_arcs=[0]))
    assert up.arc_flow.tolist() == down.arc_flow.tolist() == [0.0]
    assert up.imbalance_cost == down.imbalance_cost


def test_unknown_layer_raises(supply_demand_spec):
    with pytest.raises(KeyError):
        solve_layer_flow(supply_demand_spec, "nope",
                         full_state(supply_demand_spec))


def test_state_dimension_mismatch(supply_demand_spec):
    bad = FunctionalityState(np.ones(5, dtype=np.uint8),
                             np.ones(1, dtype=np.uint8))
    with pytest.raises(ValueError):
        effective_state(supply_demand_spec, bad)
