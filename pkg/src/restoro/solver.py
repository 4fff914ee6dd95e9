"""Restoration planning: exact branch-and-bound and rolling-horizon heuristic.

A plan assigns each damaged element a repair step in {1..horizon} or NEVER,
with at most ``resource_cap`` repairs per step. Total cost over the horizon
sums, for every step t (including the pre-restoration step t=0), the flow
cost, repair cost, imbalance penalty, and one-time space preparation cost
charged at the step of the first repair inside each space.

The exact solver is depth-first branch-and-bound over per-step repair
subsets. Because repairing strictly earlier never increases cost (operating
cost is monotone in functionality) and strictly improves the tie-break key,
schedules with an idle step before further repairs are dominated, so each
search node either repairs a nonempty subset now or stops for good. The
lower bound combines the remaining steps at fully-repaired operating cost
with, per unrepaired element, the cheaper of its repair cost and an
equal-share portion of its standalone operating-cost burden; both parts
remain valid when leaving elements unrepaired is optimal.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field

import numpy as np

from .flows import FlowContext, FunctionalityState

NEVER = -1


class PlanError(ValueError):
    pass


class ExactModeError(RuntimeError):
    """Instance exceeds the configured exact-mode limits."""


@dataclass
class DamageScenario:
    """Initial functionality at t=0 plus provenance tags."""

    initial: FunctionalityState
    magnitude_tag: float = None
    metadata: dict = field(default_factory=dict)


@dataclass
class CostBreakdown:
    """Per-step cost components, index 0..horizon."""

    flow: np.ndarray
    repair: np.ndarray
    imbalance: np.ndarray
    preparation: np.ndarray
    total: float


@dataclass
class RestorationPlan:
    repair_time: dict  # canonical element index -> step or NEVER
    states: list  # reconstruction state per t = 0..horizon
    costs: CostBreakdown
    resource_cap: int
    horizon: int


def damaged_elements(ctx, scenario):
    """Canonical indices of damaged elements, ascending (nodes then arcs)."""
    nodes = np.flatnonzero(scenario.initial.node_up == 0)
    arcs = np.flatnonzero(scenario.initial.arc_up == 0) + ctx.n_nodes
    return [int(i) for i in nodes] + [int(j) for j in arcs]


def _element_tables(ctx):
    q = {}
    space_of = {}
    for i, nd in enumerate(ctx.nodes):
        q[i] = nd.repair_cost
        space_of[i] = nd.space
    for j, arc in enumerate(ctx.arcs):
        q[ctx.n_nodes + j] = arc.repair_cost
        space_of[ctx.n_nodes + j] = arc.space
    prep_g = {sp.id: sp.prep_cost for sp in ctx.spec.spaces}
    space_rank = {sp.id: r for r, sp in enumerate(ctx.spec.spaces)}
    return q, space_of, prep_g, space_rank


def _op_pair(ctx, node_up, arc_up, memo):
    key = node_up.tobytes() + arc_up.tobytes()
    val = memo.get(key)
    if val is None:
        cf, cu, _ = ctx.operating_cost(FunctionalityState(node_up, arc_up))
        val = (cf, cu)
        memo[key] = val
    return val


def _breakdown(ctx, scenario, repairs_by_t, horizon, op_memo, q, space_of,
               prep_g, space_rank):
    """Cost accounting shared by plan_cost and both solvers.

    Total accumulates per step as flow + repair + imbalance + preparation,
    ascending in t; every code path that reports a total goes through here
    so equal plans always price identically.
    """
    n_nodes = ctx.n_nodes
    node_up = scenario.initial.node_up.astype(np.uint8).copy()
    arc_up = scenario.initial.arc_up.astype(np.uint8).copy()
    cf = np.zeros(horizon + 1)
    cr = np.zeros(horizon + 1)
    cu = np.zeros(horizon + 1)
    cg = np.zeros(horizon + 1)
    cf[0], cu[0] = _op_pair(ctx, node_up, arc_up, op_memo)
    prepared = set()
    for t in range(1, horizon + 1):
        repairs = repairs_by_t.get(t, ())
        new_spaces = []
        for e in repairs:
            if e < n_nodes:
                node_up[e] = 1
            else:
                arc_up[e - n_nodes] = 1
            cr[t] += q[e]
            sp = space_of[e]
            if sp not in prepared:
                prepared.add(sp)
                new_spaces.append(sp)
        for sp in sorted(new_spaces, key=space_rank.get):
            cg[t] += prep_g[sp]
        cf[t], cu[t] = _op_pair(ctx, node_up, arc_up, op_memo)
    total = 0.0
    for t in range(horizon + 1):
        total += cf[t] + cr[t] + cu[t] + cg[t]
    return CostBreakdown(cf, cr, cu, cg, total)


def plan_cost(spec, scenario, assignment, resource_cap, horizon, ctx=None,
              op_memo=None):
    """Price a repair-time assignment; validates feasibility first.

    assignment maps canonical element indices to steps in [1, horizon] or
    NEVER. Raises PlanError on a cap violation, an out-of-range step, or a
    repair of an element that is not damaged at t=0.
    """
    ctx = ctx if ctx is not None else FlowContext(spec)
    op_memo = op_memo if op_memo is not None else {}
    q, space_of, prep_g, space_rank = _element_tables(ctx)
    damaged = set(damaged_elements(ctx, scenario))
    repairs_by_t = {}
    for e in sorted(assignment):
        step = assignment[e]
        if e not in damaged:
            raise PlanError(f"repair of undamaged element {e}")
        if step == NEVER:
            continue
        if not 1 <= step <= horizon:
            raise PlanError(f"repair step {step} outside horizon for element {e}")
        repairs_by_t.setdefault(step, []).append(e)
    for t, elems in repairs_by_t.items():
        if len(elems) > resource_cap:
            raise PlanError(f"resource cap exceeded at t={t}: {len(elems)}")
    return _breakdown(ctx, scenario, repairs_by_t, horizon, op_memo, q,
                      space_of, prep_g, space_rank)


def _states_for(scenario, assignment, horizon, n_nodes):
    states = [scenario.initial.copy()]
    by_t = {}
    for e, step in assignment.items():
        if step != NEVER:
            by_t.setdefault(step, []).append(e)
    for t in range(1, horizon + 1):
        st = states[-1].copy()
        for e in by_t.get(t, ()):
            if e < n_nodes:
                st.node_up[e] = 1
            else:
                st.arc_up[e - n_nodes] = 1
        states.append(st)
    return states


def _plan_key(assignment, damaged_sorted, horizon):
    """Tie-break key: repair steps by canonical element order, NEVER last."""
    return tuple(
        assignment.get(e, NEVER) if assignment.get(e, NEVER) != NEVER
        else horizon + 1
        for e in damaged_sorted
    )


def _make_op_of(ctx, scenario):
    base_nodes = scenario.initial.node_up.astype(np.uint8)
    base_arcs = scenario.initial.arc_up.astype(np.uint8)
    n_nodes = ctx.n_nodes
    memo = {}

    def op_of(repaired):
        val = memo.get(repaired)
        if val is None:
            node_up = base_nodes.copy()
            arc_up = base_arcs.copy()
            for e in repaired:
                if e < n_nodes:
                    node_up[e] = 1
                else:
                    arc_up[e - n_nodes] = 1
            val = ctx.operating_total(FunctionalityState(node_up, arc_up))
            memo[repaired] = val
        return val

    return op_of


def _finalize(ctx, scenario, assignment, resource_cap, horizon, op_memo):
    breakdown = plan_cost(ctx.spec, scenario, assignment, resource_cap,
                          horizon, ctx=ctx, op_memo=op_memo)
    states = _states_for(scenario, assignment, horizon, ctx.n_nodes)
    return RestorationPlan(dict(sorted(assignment.items())), states,
                           breakdown, resource_cap, horizon)


def solve_exact(spec, scenario, resource_cap, horizon, *, max_damaged=12,
                max_horizon=6, ctx=None):
    """Globally cost-minimal plan by branch-and-bound; ties broken by the
    lexicographically smallest repair-step vector in canonical element order.

    Worst-case exponential; guarded by max_damaged / max_horizon
    (ExactModeError beyond them).
    """
    ctx = ctx if ctx is not None else FlowContext(spec)
    damaged = damaged_elements(ctx, scenario)
    if len(damaged) > max_damaged:
        raise ExactModeError(
            f"{len(damaged)} damaged elements exceed exact-mode limit {max_damaged}")
    if horizon > max_horizon:
        raise ExactModeError(
            f"horizon {horizon} exceeds exact-mode limit {max_horizon}")
    q, space_of, prep_g, space_rank = _element_tables(ctx)
    op_of = _make_op_of(ctx, scenario)
    op_memo = {}
    all_set = frozenset(damaged)
    healthy = op_of(all_set)
    delta = {e: max(0.0, op_of(all_set - {e}) - healthy) for e in damaged}

    def leaf_total(assignment):
        repairs_by_t = {}
        for e, step in assignment.items():
            if step != NEVER:
                repairs_by_t.setdefault(step, []).append(e)
        for t in repairs_by_t:
            repairs_by_t[t].sort()
        bd = _breakdown(ctx, scenario, repairs_by_t, horizon, op_memo, q,
                        space_of, prep_g, space_rank)
        return bd.total

    # Seed the incumbent with the heuristic so pruning bites immediately.
    seed = solve_iterative(spec, scenario, resource_cap, horizon, ctx=ctx)
    best_assign = dict(seed.repair_time)
    best_total = leaf_total(best_assign)
    best_key = _plan_key(best_assign, damaged, horizon)

    def consider(assignment):
        nonlocal best_assign, best_total, best_key
        total = leaf_total(assignment)
        key = _plan_key(assignment, damaged, horizon)
        if total < best_total or (total == best_total and key < best_key):
            best_assign = dict(assignment)
            best_total = total
            best_key = key

    def dfs(t, remaining, prepared, acc, assignment):
        # Stopping here leaves the rest unrepaired.
        stop_assign = dict(assignment)
        for e in remaining:
            stop_assign[e] = NEVER
        consider(stop_assign)
        if t > horizon or not remaining:
            return
        rem_list = sorted(remaining)
        steps_after = horizon - t
        for size in range(1, min(resource_cap, len(rem_list)) + 1):
            for subset in itertools.combinations(rem_list, size):
                assignment2 = dict(assignment)
                for e in subset:
                    assignment2[e] = t
                repaired_set = frozenset(
                    e for e, s in assignment2.items() if s != NEVER)
                step_cr = sum(q[e] for e in subset)
                prepared2 = set(prepared)
                step_cg = 0.0
                for e in subset:
                    sp = space_of[e]
                    if sp not in prepared2:
                        prepared2.add(sp)
                        step_cg += prep_g[sp]
                acc2 = acc + step_cr + step_cg + op_of(repaired_set)
                remaining2 = remaining - set(subset)
                if not remaining2:
                    consider(assignment2)
                    continue
                margin = 1e-9 * (1.0 + abs(best_total))
                share = steps_after / len(remaining2) if remaining2 else 0.0
                lb = acc2 + steps_after * healthy + sum(
                    min(q[e], share * delta[e]) for e in remaining2)
                if lb <= best_total + margin:
                    dfs(t + 1, remaining2, prepared2, acc2, assignment2)

    op0 = op_of(frozenset())
    dfs(1, set(damaged), set(), op0, {})
    return _finalize(ctx, scenario, best_assign, resource_cap, horizon, op_memo)


def _step_cost(subset, repaired, prepared, op_of, q, space_of, prep_g):
    cr = 0.0
    cg = 0.0
    seen = set()
    for e in subset:
        cr += q[e]
        sp = space_of[e]
        if sp not in prepared and sp not in seen:
            seen.add(sp)
            cg += prep_g[sp]
    return cr + cg + op_of(repaired | frozenset(subset))


def _select_step(remaining, repaired, prepared, resource_cap, op_of, q,
                 space_of, prep_g, enum_limit):
    rem_list = sorted(remaining)
    cap = min(resource_cap, len(rem_list))

    def cost(subset):
        return _step_cost(subset, repaired, prepared, op_of, q, space_of,
                          prep_g)

    if len(rem_list) <= enum_limit:
        best = ((cost(()), 0, ()), ())
        for size in range(1, cap + 1):
            for subset in itertools.combinations(rem_list, size):
                cand = ((cost(subset), -size, subset), subset)
                if cand[0] < best[0]:
                    best = cand
        return list(best[1])

    # Greedy marginal-gain fill, then pairwise-swap local search.
    chosen = []
    current = cost(())
    pool = list(rem_list)
    while len(chosen) < cap:
        best_e, best_c = None, None
        for e in pool:
            c = cost(tuple(chosen) + (e,))
            if best_c is None or c < best_c:
                best_e, best_c = e, c
        if best_c is None or best_c >= current - 1e-9 * (1.0 + abs(current)):
            break
        chosen.append(best_e)
        pool.remove(best_e)
        current = best_c
    for _ in range(200):
        best_swap, best_c = None, current
        for s in list(chosen):
            for d in pool:
                cand = tuple(x for x in chosen if x != s) + (d,)
                c = cost(cand)
                if c < best_c - 1e-9 * (1.0 + abs(best_c)):
                    best_swap, best_c = (s, d), c
        if best_swap is None:
            break
        s, d = best_swap
        chosen[chosen.index(s)] = d
        pool.remove(d)
        pool.append(s)
        pool.sort()
        current = best_c
    return sorted(chosen)


def solve_iterative(spec, scenario, resource_cap, horizon, *, enum_limit=12,
                    ctx=None):
    """Rolling-horizon heuristic: pick the repair set minimizing the next
    step's total cost (exact subset enumeration up to enum_limit damaged
    elements, otherwise greedy plus pairwise-swap local search); repeat.
    Stops early when no repair set improves the step cost; leftovers are
    marked NEVER."""
    ctx = ctx if ctx is not None else FlowContext(spec)
    damaged = damaged_elements(ctx, scenario)
    q, space_of, prep_g, space_rank = _element_tables(ctx)
    op_of = _make_op_of(ctx, scenario)
    assignment = {}
    remaining = set(damaged)
    repaired = frozenset()
    prepared = set()
    for t in range(1, horizon + 1):
        if not remaining:
            break
        subset = _select_step(remaining, repaired, prepared, resource_cap,
                              op_of, q, space_of, prep_g, enum_limit)
        if not subset:
            break
        for e in subset:
            assignment[e] = t
            prepared.add(space_of[e])
        repaired = repaired | frozenset(subset)
        remaining -= set(subset)
    for e in remaining:
        assignment[e] = NEVER
    op_memo = {}
    return _finalize(ctx, scenario, assignment, resource_cap, horizon, op_memo)


def recovery_time(plan):
    """Last repair step of a complete plan; 0 when nothing was damaged and
    the NEVER sentinel when some element is never repaired."""
    if not plan.repair_time:
        return 0
    steps = list(plan.repair_time.values())
    if any(s == NEVER for s in steps):
        return NEVER
    return max(steps)


# -- CSV formats --------------------------------------------------------------

def save_plan_csv(spec, plan, path):
    from .network import element_label

    lines = ["element_id,layer,repair_step"]
    for e in sorted(plan.repair_time):
        step = plan.repair_time[e]
        _, layer, ident = element_label(spec, e)
        lines.append(
            f"{ident},{layer},{'never' if step == NEVER else step}")
    with open(path, "w") as fh:
        fh.write("\n".join(lines) + "\n")


def save_costs_csv(plan, path):
    bd = plan.costs
    lines = ["t,Cf,Cr,Cu,Cg"]
    for t in range(plan.horizon + 1):
        lines.append(f"{t},{float(bd.flow[t])!r},{float(bd.repair[t])!r},"
                     f"{float(bd.imbalance[t])!r},{float(bd.preparation[t])!r}")
    with open(path, "w") as fh:
        fh.write("\n".join(lines) + "\n")
