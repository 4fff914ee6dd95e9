import numpy as np
import pytest

from restoro import netgen
from restoro.network import (ArcSpec, NetworkFormatError, NetworkSpec,
                             NetworkValidationError, NodeRef, SpaceSpec,
                             canonical_arcs, canonical_index, canonical_nodes,
                             element_count, load_network, save_network,
                             validate)

from conftest import mk_arc, mk_link, mk_node


def test_validate_well_formed(three_layer_spec):
    assert validate(three_layer_spec) == []


def test_validate_cross_layer_arc(three_layer_spec):
    bad = NetworkSpec(
        layers=three_layer_spec.layers,
        nodes=three_layer_spec.nodes,
        arcs=list(three_layer_spec.arcs) + [ArcSpec(
            tail=NodeRef("water", 0), head=NodeRef("power", 0),
            capacity=1.0)],
        links=three_layer_spec.links,
        spaces=three_layer_spec.spaces,
    )
    problems = validate(bad)
    assert len(problems) == 1
    assert "cross-layer arc" in problems[0]


def test_validate_intra_layer_link(three_layer_spec):
    bad = NetworkSpec(
        layers=three_layer_spec.layers,
        nodes=three_layer_spec.nodes,
        arcs=three_layer_spec.arcs,
        links=list(three_layer_spec.links) + [mk_link("water", 0, "water", 1)],
        spaces=three_layer_spec.spaces,
    )
    problems = validate(bad)
    assert len(problems) == 1
    assert "intra-layer interdependency" in problems[0]


def test_validate_negative_costs_and_bad_refs():
    spec = NetworkSpec(
        layers=["a"],
        nodes=[mk_node("a", 0, q=-1.0, space="nowhere")],
        arcs=[mk_arc("a", 0, 7)],
        links=[],
        spaces=[SpaceSpec("s0", -2.0)],
    )
    problems = validate(spec)
    assert any("negative repair_cost" in p for p in problems)
    assert any("undeclared space" in p for p in problems)
    assert any("unknown head node" in p for p in problems)
    assert any("negative prep_cost" in p for p in problems)


def test_validate_duplicates():
    spec = NetworkSpec(
        layers=["a", "b"],
        nodes=[mk_node("a", 0), mk_node("a", 0), mk_node("b", 0)],
        arcs=[],
        links=[mk_link("a", 0, "b", 0), mk_link("a", 0, "b", 0)],
        spaces=[SpaceSpec("s0", 1.0)],
    )
    problems = validate(spec)
    assert any("duplicate node id" in p for p in problems)
    assert any("duplicate link" in p for p in problems)


def test_round_trip_identity(three_layer_spec, tmp_path):
    path = tmp_path / "net.txt"
    save_network(three_layer_spec, path)
    assert load_network(path) == three_layer_spec


def test_round_trip_identity_shelby(tmp_path):
    spec = netgen.shelby_like(seed=3)
    path = tmp_path / "net.txt"
    save_network(spec, path)
    loaded = load_network(path)
    assert loaded == spec
    # byte-stable on re-save
    path2 = tmp_path / "net2.txt"
    save_network(loaded, path2)
    assert path.read_bytes() == path2.read_bytes()


def test_duplicate_node_id_is_parse_error(tmp_path):
    path = tmp_path / "net.txt"
    path.write_text(
        "[layers]\nw\n[nodes]\n"
        "w,0,0.0,1.0,1.0,1.0,s0,0,0.0,0.0\n"
        "w,0,0.0,1.0,1.0,1.0,s0,0,0.0,0.0\n"
        "[arcs]\n[links]\n[spaces]\ns0,1.0\n")
    with pytest.raises(NetworkFormatError) as err:
        load_network(path)
    assert "duplicate node id w:0" in str(err.value)
    assert "line 5" in str(err.value)


def test_malformed_records(tmp_path):
    path = tmp_path / "net.txt"
    path.write_text("[layers]\nw\n[nodes]\nw,0,oops\n")
    with pytest.raises(NetworkFormatError):
        load_network(path)
    path.write_text("stray-record\n")
    with pytest.raises(NetworkFormatError):
        load_network(path)
    path.write_text("[bogus]\n")
    with pytest.raises(NetworkFormatError):
        load_network(path)


def test_load_rejects_invalid_network(tmp_path):
    path = tmp_path / "net.txt"
    path.write_text(
        "[layers]\nw\np\n[nodes]\n"
        "w,0,0.0,1.0,1.0,1.0,s0,0,0.0,0.0\n"
        "p,0,0.0,1.0,1.0,1.0,s0,0,0.0,0.0\n"
        "[arcs]\n"
        "w,0,p,0,1.0,1.0,1.0,s0\n"
        "[links]\n[spaces]\ns0,1.0\n")
    with pytest.raises(NetworkValidationError):
        load_network(path)


def test_canonical_index_layout(three_layer_spec):
    spec = three_layer_spec
    assert canonical_index(spec, NodeRef("water", 0)) == 0
    assert canonical_index(spec, NodeRef("gas", 0)) == 2
    assert canonical_index(spec, NodeRef("power", 1)) == 5
    # arcs follow all nodes
    assert canonical_index(spec, spec.arcs[0]) == 6
    with pytest.raises(KeyError):
        canonical_index(spec, NodeRef("water", 99))


def test_canonical_index_bijection(three_layer_spec):
    spec = three_layer_spec
    idx = [canonical_index(spec, nd.ref) for nd in spec.nodes]
    idx += [canonical_index(spec, a) for a in spec.arcs]
    assert sorted(idx) == list(range(element_count(spec)))


def test_shelby_like_layout():
    spec = netgen.shelby_like(seed=0)
    assert len(spec.nodes) == 125
    nodes = canonical_nodes(spec)
    # 49 water, then 16 gas, then 60 power
    assert canonical_index(spec, nodes[0].ref) == 0
    assert nodes[0].ref.layer == "water"
    first_gas = next(nd for nd in nodes if nd.ref.layer == "gas")
    assert canonical_index(spec, first_gas.ref) == 49
    last_power = [nd for nd in nodes if nd.ref.layer == "power"][-1]
    assert canonical_index(spec, last_power.ref) == 124


def test_generator_deterministic():
    a = netgen.synthetic_network(["x", "y"], [5, 4], seed=11)
    b = netgen.synthetic_network(["x", "y"], [5, 4], seed=11)
    assert a == b
    c = netgen.synthetic_network(["x", "y"], [5, 4], seed=12)
    assert a != c


def test_generator_balances_sum_zero_per_layer():
    spec = netgen.synthetic_network(["x", "y", "z"], [7, 5, 9], seed=2)
    for layer in spec.layers:
        total = sum(nd.balance for nd in spec.nodes if nd.ref.layer == layer)
        assert total == 0.0
