"""Independent oracles used by the unit and acceptance tests.

Each oracle deliberately avoids the code path it checks: the flow oracle
enumerates integer flow vectors directly, the planning oracle enumerates
every feasible schedule with its own accounting loop, gradients come from
central finite differences, and the operator oracle multiplies weights with
explicit Python loops.
"""

import itertools

import numpy as np

from restoro import flows, surrogate
from restoro.network import canonical_arcs, canonical_nodes
from restoro.solver import NEVER

MAX_FLOW_COMBOS = 2_000_000


def brute_force_layer_cost(spec, layer, state):
    """Minimum of flow cost + imbalance penalty by enumerating all integer
    flow vectors on functional arcs (valid because the flow polytope with
    integer data has an integral optimal vertex)."""
    nodes = [nd for nd in canonical_nodes(spec) if nd.ref.layer == layer]
    arcs_all = [a for a in canonical_arcs(spec) if a.tail.layer == layer]
    node_pos = {nd.ref: i for i, nd in enumerate(nodes)}
    ctx = flows.FlowContext(spec)
    a0, a1 = ctx.layer_arc_slice[layer]
    n0, _ = ctx.layer_node_slice[layer]
    node_up = state.node_up[n0:n0 + len(nodes)]
    arc_up = state.arc_up[a0:a1]

    live = []
    for j, arc in enumerate(arcs_all):
        u, v = node_pos[arc.tail], node_pos[arc.head]
        if arc_up[j] and node_up[u] and node_up[v] and arc.capacity > 0:
            live.append((u, v, int(round(arc.capacity)), arc.flow_cost))
    b = np.array([nd.balance for nd in nodes])
    mp = np.array([nd.surplus_penalty for nd in nodes])
    mm = np.array([nd.deficit_penalty for nd in nodes])

    if not live:
        d = b
        return float(np.sum(mp * np.clip(d, 0, None)
                            + mm * np.clip(-d, 0, None)))

    combos = 1
    for (_, _, cap, _) in live:
        combos *= cap + 1
    if combos > MAX_FLOW_COMBOS:
        raise AssertionError(f"oracle instance too large: {combos} combos")
    grids = np.meshgrid(*[np.arange(cap + 1) for (_, _, cap, _) in live],
                        indexing="ij")
    X = np.stack([g.ravel() for g in grids]).astype(np.float64)  # (m, combos)
    inc = np.zeros((len(nodes), len(live)))
    cvec = np.zeros(len(live))
    for e, (u, v, _, c) in enumerate(live):
        inc[u, e] += 1.0
        inc[v, e] -= 1.0
        cvec[e] = c
    d = b[:, None] - inc @ X  # deviation delta+ - delta- per node
    pen = (mp[:, None] * np.clip(d, 0, None)
           + mm[:, None] * np.clip(-d, 0, None)).sum(axis=0)
    total = cvec @ X + pen
    return float(total.min())


def enumerate_assignments(damaged, resource_cap, horizon):
    """Every map damaged -> {1..horizon, NEVER} obeying the per-step cap."""
    choices = [NEVER] + list(range(1, horizon + 1))
    for combo in itertools.product(choices, repeat=len(damaged)):
        counts = {}
        ok = True
        for c in combo:
            if c == NEVER:
                continue
            counts[c] = counts.get(c, 0) + 1
            if counts[c] > resource_cap:
                ok = False
                break
        if ok:
            yield dict(zip(damaged, combo))


def assignment_key(assignment, damaged_sorted, horizon):
    return tuple(horizon + 1 if assignment[e] == NEVER else assignment[e]
                 for e in damaged_sorted)


class ScheduleOracle:
    """Exhaustive minimum-cost schedule search with its own accounting.

    Accumulates, for each step in order, flow + repair + imbalance +
    preparation (the documented total convention) using operating costs
    from a FlowContext, memoized by the repaired subset.
    """

    def __init__(self, spec, scenario, horizon):
        self.ctx = flows.FlowContext(spec)
        self.spec = spec
        self.scenario = scenario
        self.horizon = horizon
        n_nodes = self.ctx.n_nodes
        self.damaged = sorted(
            [int(i) for i in np.flatnonzero(scenario.initial.node_up == 0)]
            + [n_nodes + int(j)
               for j in np.flatnonzero(scenario.initial.arc_up == 0)])
        self._op_memo = {}
        self.q = {}
        self.space_of = {}
        for i, nd in enumerate(self.ctx.nodes):
            self.q[i] = nd.repair_cost
            self.space_of[i] = nd.space
        for j, arc in enumerate(self.ctx.arcs):
            self.q[n_nodes + j] = arc.repair_cost
            self.space_of[n_nodes + j] = arc.space
        self.prep = {sp.id: sp.prep_cost for sp in spec.spaces}
        self.space_rank = {sp.id: r for r, sp in enumerate(spec.spaces)}

    def _op(self, repaired):
        val = self._op_memo.get(repaired)
        if val is None:
            node_up = self.scenario.initial.node_up.copy()
            arc_up = self.scenario.initial.arc_up.copy()
            for e in repaired:
                if e < self.ctx.n_nodes:
                    node_up[e] = 1
                else:
                    arc_up[e - self.ctx.n_nodes] = 1
            cf, cu, _ = self.ctx.operating_cost(
                flows.FunctionalityState(node_up, arc_up))
            val = (cf, cu)
            self._op_memo[repaired] = val
        return val

    def total(self, assignment):
        by_t = {}
        for e, step in assignment.items():
            if step != NEVER:
                by_t.setdefault(step, []).append(e)
        repaired = frozenset()
        prepared = set()
        total = 0.0
        cf, cu = self._op(repaired)
        total += cf + 0.0 + cu + 0.0
        for t in range(1, self.horizon + 1):
            elems = sorted(by_t.get(t, ()))
            cr = 0.0
            new_spaces = []
            for e in elems:
                cr += self.q[e]
                sp = self.space_of[e]
                if sp not in prepared:
                    prepared.add(sp)
                    new_spaces.append(sp)
            cg = 0.0
            for sp in sorted(new_spaces, key=self.space_rank.get):
                cg += self.prep[sp]
            repaired = repaired | frozenset(elems)
            cf, cu = self._op(repaired)
            total += cf + cr + cu + cg
        return total

    def best(self, resource_cap):
        """(total, key, assignment) minimizing cost, ties by the repair-step
        vector in canonical element order."""
        best = None
        for assignment in enumerate_assignments(self.damaged, resource_cap,
                                                self.horizon):
            total = self.total(assignment)
            key = assignment_key(assignment, self.damaged, self.horizon)
            if best is None or (total, key) < (best[0], best[1]):
                best = (total, key, dict(assignment))
        return best


def fd_loss_gradients(model, X, Y, mask=None, h=1e-4):
    """Central finite differences of the MSE wrt every parameter."""
    X = np.atleast_2d(np.asarray(X, dtype=np.float64))
    Y = np.atleast_2d(np.asarray(Y, dtype=np.float64))

    def loss():
        err = surrogate.forward(model, X) - Y
        if mask is None:
            return float(np.mean(err * err))
        return float(np.sum(err * err * mask) / np.sum(mask))

    grads = []
    for w, b in zip(model.weights, model.biases):
        gw = np.zeros_like(w)
        it = np.nditer(w, flags=["multi_index"])
        while not it.finished:
            ij = it.multi_index
            orig = w[ij]
            w[ij] = orig + h
            lp = loss()
            w[ij] = orig - h
            lm = loss()
            w[ij] = orig
            gw[ij] = (lp - lm) / (2 * h)
            it.iternext()
        gb = np.zeros_like(b)
        for i in range(b.size):
            orig = b[i]
            b[i] = orig + h
            lp = loss()
            b[i] = orig - h
            lm = loss()
            b[i] = orig
            gb[i] = (lp - lm) / (2 * h)
        grads.append((gw, gb))
    return grads


def operator_by_loops(model):
    """Weight-matrix product written as explicit loops."""
    mats = [np.array(w, dtype=np.float64) for w in model.weights]
    op = mats[0]
    for w in mats[1:]:
        out = np.zeros((w.shape[0], op.shape[1]))
        for k in range(w.shape[0]):
            for i in range(op.shape[1]):
                acc = 0.0
                for j in range(w.shape[1]):
                    acc += w[k, j] * op[j, i]
                out[k, i] = acc
        op = out
    return op
