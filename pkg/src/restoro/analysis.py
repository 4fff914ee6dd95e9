"""Resource trade-off curves and weight-based interpretability.

The trade-off compares, per resource cap, the solver's recovery time and
cost against the surrogate's predicted recovery time. Interpretability
reduces a trained network to (a) per-category aggregated weight masses
around each hidden neuron and (b) the linear recovery operator: the ordered
product of the weight matrices, ignoring biases and activations. For an
identity-activation zero-bias model the operator reproduces the forward map
exactly; otherwise its fidelity is reported as an R^2 diagnostic.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import solver, surrogate
from .flows import FlowContext
from .network import canonical_nodes


@dataclass
class TradeoffPoint:
    rc: int
    solver_time: int
    nn_time: int
    solver_cost: float


@dataclass
class TradeoffCurve:
    points: list
    scenario_label: str = ""


@dataclass
class BlockAggregate:
    categories: list
    input_mass: np.ndarray  # (n_hidden, n_categories)
    output_mass: np.ndarray


@dataclass
class RecoveryOperator:
    matrix: np.ndarray
    source: str = ""


def layer_partition(spec):
    """Ordered (layer, canonical node indices) categories."""
    nodes = canonical_nodes(spec)
    out = []
    for layer in spec.layers:
        idx = np.array([i for i, nd in enumerate(nodes)
                        if nd.ref.layer == layer], dtype=np.intp)
        out.append((layer, idx))
    return out


def tradeoff(spec, scenario, rc_values, models, solver_mode="iterative",
             horizon=20, ctx=None, scenario_label=""):
    """Per resource cap: solver recovery time and total cost vs the
    surrogate's predicted recovery time (max predicted step over damaged
    nodes). A plan that leaves elements unrepaired reports horizon + 1."""
    ctx = ctx if ctx is not None else FlowContext(spec)
    rc_values = sorted(set(int(r) for r in rc_values))
    for rc in rc_values:
        if rc not in models:
            raise KeyError(f"no trained model for R_c={rc}")
    points = []
    for rc in rc_values:
        if solver_mode == "exact":
            plan = solver.solve_exact(spec, scenario, rc, horizon, ctx=ctx)
        else:
            plan = solver.solve_iterative(spec, scenario, rc, horizon,
                                          ctx=ctx)
        st = solver.recovery_time(plan)
        if st == solver.NEVER:
            st = horizon + 1
        pred = surrogate.predict_plan(models[rc], scenario)
        nn_time = max(pred.values()) if pred else 0
        points.append(TradeoffPoint(rc, int(st), int(nn_time),
                                    float(plan.costs.total)))
    return TradeoffCurve(points, scenario_label)


def save_curve_csv(curve, path):
    lines = ["Rc,solver_time,nn_time,solver_cost"]
    for p in curve.points:
        lines.append(f"{p.rc},{p.solver_time},{p.nn_time},{p.solver_cost!r}")
    with open(path, "w") as fh:
        fh.write("\n".join(lines) + "\n")


def block_aggregate(model, partition, signed=False):
    """Per hidden neuron, the aggregated input-side and output-side weight
    mass of each node category (absolute by default). Only defined for the
    single-hidden-layer interpretability configuration."""
    if len(model.weights) != 2:
        raise ValueError("block aggregation needs exactly one hidden layer")
    w_in, w_out = model.weights  # (n_h, n_i), (n_o, n_h)
    agg = (lambda a, axis: a.sum(axis)) if signed else (
        lambda a, axis: np.abs(a).sum(axis))
    categories = [name for name, _ in partition]
    n_h = w_in.shape[0]
    input_mass = np.zeros((n_h, len(partition)))
    output_mass = np.zeros((n_h, len(partition)))
    for c, (_, idx) in enumerate(partition):
        input_mass[:, c] = agg(w_in[:, idx], 1)
        output_mass[:, c] = agg(w_out[idx, :], 0)
    return BlockAggregate(categories, input_mass, output_mass)


def save_aggregate_csv(agg, path):
    lines = ["neuron,side,category,mass"]
    n_h = agg.input_mass.shape[0]
    for j in range(n_h):
        for side, mass in (("input", agg.input_mass),
                           ("output", agg.output_mass)):
            for c, name in enumerate(agg.categories):
                lines.append(f"{j},{side},{name},{float(mass[j, c])!r}")
    with open(path, "w") as fh:
        fh.write("\n".join(lines) + "\n")


def recovery_operator(model):
    """Ordered product of all weight matrices; biases and activations are
    deliberately dropped, mirroring the construction it reproduces."""
    op = model.weights[0]
    for w in model.weights[1:]:
        op = w @ op
    source = f"dims={model.dims} rc={model.rc_tag}"
    return RecoveryOperator(np.array(op, dtype=np.float64), source)


def operator_fit_r2(model, operator, inputs):
    """R^2 of operator @ x against the full forward pass over sample inputs."""
    X = np.atleast_2d(np.asarray(inputs, dtype=np.float64))
    y_full = surrogate.forward(model, X)
    y_lin = X @ operator.matrix.T
    ss_res = float(np.sum((y_full - y_lin) ** 2))
    ss_tot = float(np.sum((y_full - y_full.mean(axis=0)) ** 2))
    if ss_tot == 0.0:
        return 1.0 if ss_res == 0.0 else 0.0
    return 1.0 - ss_res / ss_tot


def operator_heatmap_export(operator, partition, path):
    """Matrix CSV in canonical node order with category boundaries noted in
    header comments; rows are outputs, columns inputs."""
    mat = operator.matrix
    lines = ["# recovery operator heatmap"]
    cursor = 0
    for name, idx in partition:
        lines.append(
            f"# category {name}: columns {cursor}..{cursor + len(idx) - 1}")
        cursor += len(idx)
    for row in mat:
        lines.append(",".join(f"{float(v):.17g}" for v in row))
    with open(path, "w") as fh:
        fh.write("\n".join(lines) + "\n")
