"""Operating-cost evaluation of a (partially damaged) network.

Given a functionality state, each layer's commodity routing is a min-cost
flow with per-node surplus/deficit slack variables: minimize
sum(flow_cost * flow) + sum(M+ * surplus + M- * deficit) subject to flow
conservation (outflow - inflow = balance - surplus + deficit), capacities on
functional arcs, and zero flow on non-functional arcs. Slacks make every
instance feasible; a dead supply node strands its full balance as surplus
and a dead demand node's demand shows up as deficit.

Interdependency and demand-completion effects are resolved first by
``effective_state``: the greatest fixed point reached by repeatedly
deactivating nodes whose parents are down (and arcs with a dead endpoint),
then deactivating demand-completion nodes whose deficit is positive in the
resulting flows, until stable.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import _kernel
from .network import canonical_arcs, canonical_nodes

CONSERVATION_TOL = 1e-9


@dataclass
class FunctionalityState:
    """Binary functionality vectors in canonical element order (1 = up)."""

    node_up: np.ndarray
    arc_up: np.ndarray

    def copy(self):
        return FunctionalityState(self.node_up.copy(), self.arc_up.copy())

    def key(self):
        return self.node_up.tobytes() + self.arc_up.tobytes()


def full_state(spec):
    return FunctionalityState(
        np.ones(len(spec.nodes), dtype=np.uint8),
        np.ones(len(spec.arcs), dtype=np.uint8),
    )


def state_with_damage(spec, damaged_nodes=(), damaged_arcs=()):
    """State with the given canonical node indices / arc offsets down."""
    st = full_state(spec)
    for i in damaged_nodes:
        st.node_up[i] = 0
    for j in damaged_arcs:
        st.arc_up[j] = 0
    return st


@dataclass
class FlowSolution:
    """Optimal routing of one layer: flows per arc plus per-node deviations."""

    layer: str
    arc_flow: np.ndarray
    surplus: np.ndarray
    deficit: np.ndarray
    flow_cost: float
    imbalance_cost: float


class _LayerGraph:
    """Static kernel arrays for one layer.

    Graph nodes are the layer's nodes (local ids), a virtual balance node
    absorbing/serving slack, then super-source and super-sink. Arc rows:
    real arcs, surplus slacks (node->virtual), deficit slacks
    (virtual->node), then source/sink arcs realizing node balances.
    """

    def __init__(self, layer, node_ids, arcs, arc_ids, balance, m_plus,
                 m_minus, node_offset):
        nk = len(node_ids)
        mk = len(arcs)
        self.layer = layer
        self.nk = nk
        self.mk = mk
        self.node_offset = node_offset  # canonical index of first layer node
        self.arc_ids = np.asarray(arc_ids, dtype=np.intp)  # canonical arc offsets
        virt, src, snk = nk, nk + 1, nk + 2
        self.n_graph = nk + 3
        self.source = src
        self.sink = snk

        tails = [a[0] for a in arcs]
        heads = [a[1] for a in arcs]
        self.real_u = np.array([a[2] for a in arcs], dtype=np.float64)
        self.real_cost = np.array([a[3] for a in arcs], dtype=np.float64)
        self.arc_tail_local = np.array(tails, dtype=np.intp)
        self.arc_head_local = np.array(heads, dtype=np.intp)

        total_b = float(np.sum(balance))
        big = float(np.sum(np.abs(balance)) + abs(total_b) + 1.0)

        t_list = list(tails) + list(range(nk)) + [virt] * nk
        h_list = list(heads) + [virt] * nk + list(range(nk))
        cost_list = list(self.real_cost) + list(m_plus) + list(m_minus)
        cap_list = list(self.real_u) + [big] * (2 * nk)
        for v in range(nk):
            b = float(balance[v])
            if b > 0:
                t_list.append(src)
                h_list.append(v)
                cap_list.append(b)
                cost_list.append(0.0)
            elif b < 0:
                t_list.append(v)
                h_list.append(snk)
                cap_list.append(-b)
                cost_list.append(0.0)
        if total_b > 0:
            t_list.append(virt)
            h_list.append(snk)
            cap_list.append(total_b)
            cost_list.append(0.0)
        elif total_b < 0:
            t_list.append(src)
            h_list.append(virt)
            cap_list.append(-total_b)
            cost_list.append(0.0)

        self.tails = np.array(t_list, dtype=np.int32)
        self.heads = np.array(h_list, dtype=np.int32)
        self.costs = np.array(cost_list, dtype=np.float64)
        self.caps_template = np.array(cap_list, dtype=np.float64)
        self.m_plus = np.asarray(m_plus, dtype=np.float64)
        self.m_minus = np.asarray(m_minus, dtype=np.float64)
        self.balance = np.asarray(balance, dtype=np.float64)

    def solve(self, node_up_local, arc_up_local):
        caps = self.caps_template.copy()
        caps[:self.mk] = (self.real_u * arc_up_local
                          * node_up_local[self.arc_tail_local]
                          * node_up_local[self.arc_head_local])
        flows = _kernel.solve_min_cost_flow(
            self.n_graph, self.tails, self.heads, caps, self.costs,
            self.source, self.sink)
        mk, nk = self.mk, self.nk
        arc_flow = flows[:mk]
        surplus = flows[mk:mk + nk]
        deficit = flows[mk + nk:mk + 2 * nk]
        flow_cost = float(np.dot(arc_flow, self.real_cost))
        imbalance = float(np.dot(surplus, self.m_plus)
                          + np.dot(deficit, self.m_minus))
        return FlowSolution(self.layer, arc_flow, surplus, deficit,
                            flow_cost, imbalance)


class FlowContext:
    """Precomputed graphs plus a solution cache for one NetworkSpec.

    The spec must be validated and is treated as immutable. Per-layer
    solutions are cached by the layer-local functionality bytes, which makes
    repeated operating-cost queries during planning cheap.
    """

    def __init__(self, spec, cache_limit=1 << 18):
        self.spec = spec
        self.cache_limit = cache_limit
        nodes = canonical_nodes(spec)
        arcs = canonical_arcs(spec)
        self.n_nodes = len(nodes)
        self.n_arcs = len(arcs)
        self.node_pos = {nd.ref: i for i, nd in enumerate(nodes)}
        self.arc_pos = {a.key: j for j, a in enumerate(arcs)}
        self.nodes = nodes
        self.arcs = arcs
        self.balance = np.array([nd.balance for nd in nodes], dtype=np.float64)

        self.link_parent = np.array(
            [self.node_pos[lk.parent] for lk in spec.links], dtype=np.intp)
        self.link_child = np.array(
            [self.node_pos[lk.child] for lk in spec.links], dtype=np.intp)
        self.dc_nodes = np.array(
            [i for i, nd in enumerate(nodes) if nd.demand_completion],
            dtype=np.intp)
        self.arc_tail = np.array([self.node_pos[a.tail] for a in arcs],
                                 dtype=np.intp)
        self.arc_head = np.array([self.node_pos[a.head] for a in arcs],
                                 dtype=np.intp)

        self.layer_node_slice = {}
        self.layer_arc_slice = {}
        self.graphs = []
        node_cursor = 0
        arc_cursor = 0
        for layer in spec.layers:
            layer_nodes = [i for i in range(node_cursor, self.n_nodes)
                           if nodes[i].ref.layer == layer]
            n_start, n_stop = node_cursor, node_cursor + len(layer_nodes)
            layer_arcs = [j for j in range(arc_cursor, self.n_arcs)
                          if arcs[j].tail.layer == layer]
            a_start, a_stop = arc_cursor, arc_cursor + len(layer_arcs)
            node_cursor, arc_cursor = n_stop, a_stop
            self.layer_node_slice[layer] = (n_start, n_stop)
            self.layer_arc_slice[layer] = (a_start, a_stop)
            local_arcs = [
                (self.node_pos[arcs[j].tail] - n_start,
                 self.node_pos[arcs[j].head] - n_start,
                 arcs[j].capacity, arcs[j].flow_cost)
                for j in range(a_start, a_stop)
            ]
            self.graphs.append(_LayerGraph(
                layer,
                list(range(n_start, n_stop)),
                local_arcs,
                list(range(a_start, a_stop)),
                self.balance[n_start:n_stop],
                [nodes[i].surplus_penalty for i in range(n_start, n_stop)],
                [nodes[i].deficit_penalty for i in range(n_start, n_stop)],
                n_start,
            ))
        self._cache = {}

    # -- state resolution ---------------------------------------------------

    def _check_dims(self, state):
        if (len(state.node_up) != self.n_nodes
                or len(state.arc_up) != self.n_arcs):
            raise ValueError("state dimensions do not match the network")

    def propagate(self, state):
        """Interdependency closure plus endpoint gating of arcs (no flows)."""
        self._check_dims(state)
        node_up = np.ascontiguousarray(state.node_up, dtype=np.uint8).copy()
        if self.link_parent.size:
            while True:
                before = node_up[self.link_child].copy()
                np.minimum.at(node_up, self.link_child,
                              node_up[self.link_parent])
                if np.array_equal(before, node_up[self.link_child]):
                    break
        arc_up = (np.ascontiguousarray(state.arc_up, dtype=np.uint8)
                  & node_up[self.arc_tail] & node_up[self.arc_head])
        return FunctionalityState(node_up, arc_up)

    def effective_state(self, state):
        """Greatest fixed point of interdependency, arc-endpoint, and
        demand-completion deactivation."""
        eff = self.propagate(state)
        if not self.dc_nodes.size:
            return eff
        forced_down = np.ones(self.n_nodes, dtype=np.uint8)
        while True:
            sols = [self.solve_layer_pos(k, eff) for k in range(len(self.graphs))]
            deficit = np.zeros(self.n_nodes)
            for g, sol in zip(self.graphs, sols):
                deficit[g.node_offset:g.node_offset + g.nk] = sol.deficit
            tol = CONSERVATION_TOL * np.maximum(1.0, np.abs(self.balance))
            kill = [i for i in self.dc_nodes
                    if eff.node_up[i] and deficit[i] > tol[i]]
            if not kill:
                return eff
            for i in kill:
                forced_down[i] = 0
            masked = FunctionalityState(state.node_up & forced_down,
                                        state.arc_up)
            eff = self.propagate(masked)

    # -- costs ----------------------------------------------------------------

    def solve_layer_pos(self, k, state):
        g = self.graphs[k]
        n0, n1 = g.node_offset, g.node_offset + g.nk
        a0 = self.layer_arc_slice[g.layer][0]
        node_loc = state.node_up[n0:n1]
        arc_loc = state.arc_up[a0:a0 + g.mk]
        key = (k, node_loc.tobytes(), arc_loc.tobytes())
        sol = self._cache.get(key)
        if sol is None:
            sol = g.solve(node_loc.astype(np.float64),
                          arc_loc.astype(np.float64))
            if len(self._cache) >= self.cache_limit:
                self._cache.clear()
            self._cache[key] = sol
        return sol

    def operating_cost(self, state):
        """(flow cost, imbalance cost, per-layer solutions) for a raw state."""
        eff = self.effective_state(state)
        sols = [self.solve_layer_pos(k, eff) for k in range(len(self.graphs))]
        cf = 0.0
        cu = 0.0
        for sol in sols:
            cf += sol.flow_cost
            cu += sol.imbalance_cost
        return cf, cu, sols

    def operating_total(self, state):
        cf, cu, _ = self.operating_cost(state)
        return cf + cu


# -- spec-level convenience wrappers -----------------------------------------

def effective_state(spec, state):
    return FlowContext(spec).effective_state(state)


def solve_layer_flow(spec, layer, state):
    """Min-cost routing of one layer under an (effective) state."""
    ctx = FlowContext(spec)
    try:
        k = list(spec.layers).index(layer)
    except ValueError:
        raise KeyError(f"unknown layer {layer!r}") from None
    return ctx.solve_layer_pos(k, state)


def operating_cost(spec, state):
    return FlowContext(spec).operating_cost(state)


def conservation_residuals(ctx, state, sols):
    """Per-node |inflow - outflow + b - surplus + deficit|; diagnostics/tests."""
    res = np.zeros(ctx.n_nodes)
    for g, sol in zip(ctx.graphs, sols):
        out = np.zeros(g.nk)
        np.add.at(out, g.arc_tail_local, sol.arc_flow)
        inn = np.zeros(g.nk)
        np.add.at(inn, g.arc_head_local, sol.arc_flow)
        n0 = g.node_offset
        res[n0:n0 + g.nk] = np.abs(
            out - inn - (g.balance - sol.surplus + sol.deficit))
    return res
