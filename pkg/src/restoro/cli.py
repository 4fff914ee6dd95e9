"""Command-line entry point wiring the whole pipeline.

Subcommands: gen-network, gen-scenarios, solve, build-dataset, train,
evaluate, tradeoff, operator. Options may come from a ``key = value``
config file (--config); explicit flags win. All randomness flows from one
root seed (--seed, config ``seed``, or the RESTORO_SEED environment
variable), split per subsystem so reruns are byte-identical.

Exit codes: 0 success, 1 I/O error, 2 validation/config error,
3 capability (e.g. exact-mode limits exceeded).
"""

from __future__ import annotations

import argparse
import os
import sys

import numpy as np

from . import __version__, analysis, netgen, network, scenarios, solver, surrogate
from ._kernel import BACKEND
from .flows import FunctionalityState

FORMAT_VERSIONS = (network.FORMAT_VERSION, scenarios.SCENARIO_FORMAT,
                   scenarios.DATASET_FORMAT, surrogate.MODEL_FORMAT)

# Subsystem offsets applied to the root seed.
_SEED_SPLIT = {"network": 0, "scenarios": 1, "dataset": 2, "train": 3}


class CliError(Exception):
    def __init__(self, message, code):
        super().__init__(message)
        self.code = code


def _read_config(path):
    cfg = {}
    try:
        with open(path) as fh:
            for line_no, raw in enumerate(fh, start=1):
                line = raw.split("#", 1)[0].strip()
                if not line:
                    continue
                if "=" not in line:
                    raise CliError(f"{path}:{line_no}: expected key = value", 2)
                key, _, val = line.partition("=")
                cfg[key.strip().replace("-", "_")] = val.strip()
        return cfg
    except OSError as exc:
        raise CliError(f"cannot read config: {exc}", 1) from exc


def _root_seed(args, cfg):
    if getattr(args, "seed", None) is not None:
        return args.seed
    if "seed" in cfg:
        return int(cfg["seed"])
    env = os.environ.get("RESTORO_SEED")
    if env is not None:
        return int(env)
    return 0


def _sub_seed(root, subsystem):
    return int(root) * 8 + _SEED_SPLIT[subsystem]


def _opt(args, cfg, name, default=None, cast=str):
    val = getattr(args, name, None)
    if val is not None:
        return val
    if name in cfg:
        return cast(cfg[name])
    return default


def _parse_int_list(text):
    out = []
    for part in str(text).split(","):
        part = part.strip()
        if ".." in part:
            lo, hi = part.split("..")
            out.extend(range(int(lo), int(hi) + 1))
        elif part:
            out.append(int(part))
    return out


def _load_network(path):
    try:
        return network.load_network(path)
    except network.NetworkValidationError as exc:
        raise CliError(str(exc), 2) from exc
    except network.NetworkFormatError as exc:
        raise CliError(str(exc), 2) from exc
    except OSError as exc:
        raise CliError(f"cannot read network: {exc}", 1) from exc


def _pick_scenario(path, spec, index):
    scen = scenarios.load_scenarios(path, spec)
    if not 0 <= index < len(scen):
        raise CliError(f"scenario index {index} out of range (file has "
                       f"{len(scen)})", 2)
    return scen[index]


def cmd_gen_network(args, cfg):
    seed = _sub_seed(_root_seed(args, cfg), "network")
    preset = _opt(args, cfg, "preset")
    if preset == "shelby-like":
        spec = netgen.shelby_like(seed)
    elif preset:
        raise CliError(f"unknown preset {preset!r}", 2)
    else:
        layers_opt = _opt(args, cfg, "layers")
        sizes_opt = _opt(args, cfg, "sizes")
        if not layers_opt or not sizes_opt:
            raise CliError("need --preset or both --layers and --sizes", 2)
        sizes = [int(s) for s in str(sizes_opt).split(",")]
        layers = [p.strip() for p in str(layers_opt).split(",") if p.strip()]
        if len(layers) == 1 and layers[0].isdigit():
            count = int(layers[0])
            layers = [f"layer{i}" for i in range(count)]
        if len(layers) != len(sizes):
            raise CliError("--layers and --sizes disagree on layer count", 2)
        spec = netgen.synthetic_network(
            layers, sizes, seed,
            space_grid=int(_opt(args, cfg, "space_grid", 3)),
            link_frac=float(_opt(args, cfg, "link_frac", 0.2)),
            demand_completion_frac=float(
                _opt(args, cfg, "demand_completion_frac", 0.0)),
        )
    problems = network.validate(spec)
    if problems:
        raise CliError("generated network failed validation: "
                       + problems[0], 2)
    network.save_network(spec, args.out)
    print(f"wrote {args.out}: {len(spec.nodes)} nodes, {len(spec.arcs)} arcs, "
          f"{len(spec.links)} links")
    return 0


def cmd_gen_scenarios(args, cfg):
    spec = _load_network(_opt(args, cfg, "network"))
    root = _root_seed(args, cfg)
    seed0 = _sub_seed(root, "scenarios")
    m = int(_opt(args, cfg, "m", 6))
    count = int(_opt(args, cfg, "count", 100))
    n_aug = int(_opt(args, cfg, "augment", 0))
    flip = str(_opt(args, cfg, "flip_range", "1,5")).split(",")
    flip_range = (int(flip[0]), int(flip[-1]))
    model = scenarios.default_damage_model()
    if getattr(args, "spatial", False):
        model.spatial_kernel = scenarios.SpatialKernel()
    out = []
    for i in range(count):
        out.append(scenarios.generate_scenario(spec, model, m, seed0 + i))
    aug_seed = seed0 + count
    for i in range(count):
        for j in range(n_aug):
            out.append(scenarios.augment(out[i], flip_range,
                                         aug_seed + i * n_aug + j))
    scenarios.save_scenarios(out, args.out, seed=root)
    print(f"wrote {args.out}: {count} original + {count * n_aug} augmented "
          f"scenarios (m={m})")
    return 0


def cmd_solve(args, cfg):
    spec = _load_network(_opt(args, cfg, "network"))
    scenario = _pick_scenario(_opt(args, cfg, "scenario"), spec,
                              int(_opt(args, cfg, "index", 0)))
    rc = int(_opt(args, cfg, "rc", 5))
    horizon = int(_opt(args, cfg, "tmax", 20))
    mode = _opt(args, cfg, "mode", "iterative")
    try:
        if mode == "exact":
            plan = solver.solve_exact(spec, scenario, rc, horizon)
        elif mode == "iterative":
            plan = solver.solve_iterative(spec, scenario, rc, horizon)
        else:
            raise CliError(f"unknown mode {mode!r}", 2)
    except solver.ExactModeError as exc:
        raise CliError(str(exc), 3) from exc
    solver.save_plan_csv(spec, plan, args.out)
    costs_out = _opt(args, cfg, "costs_out")
    if costs_out:
        solver.save_costs_csv(plan, costs_out)
    rt = solver.recovery_time(plan)
    print(f"plan: {len(plan.repair_time)} repairs, recovery time "
          f"{'never' if rt == solver.NEVER else rt}, "
          f"total cost {plan.costs.total:.6g}")
    return 0


def cmd_build_dataset(args, cfg):
    spec = _load_network(_opt(args, cfg, "network"))
    scen = scenarios.load_scenarios(_opt(args, cfg, "scenarios"), spec)
    rc = int(_opt(args, cfg, "rc", 5))
    horizon = int(_opt(args, cfg, "tmax", 20))
    mode = _opt(args, cfg, "mode", "iterative")
    jobs = int(_opt(args, cfg, "jobs", 1))
    encoding = _opt(args, cfg, "encoding", "damaged_is_1")
    try:
        ds = scenarios.build_dataset(spec, scen, rc, mode, horizon=horizon,
                                     encoding=encoding, jobs=jobs)
    except solver.ExactModeError as exc:
        raise CliError(str(exc), 3) from exc
    scenarios.save_dataset(ds, args.out)
    print(f"wrote {args.out}: {len(ds)} records (rc={rc}, mode={mode})")
    return 0


def cmd_train(args, cfg):
    rcs = _parse_int_list(_opt(args, cfg, "rc", "5"))
    if not rcs:
        raise CliError("empty R_c set", 2)
    dataset_tpl = _opt(args, cfg, "dataset")
    out_tpl = _opt(args, cfg, "out")
    hidden = [int(h) for h in str(_opt(args, cfg, "hidden", "400,400,400")
                                  ).split(",") if h.strip()]
    seed = _sub_seed(_root_seed(args, cfg), "train")
    config = surrogate.TrainConfig(
        epochs=int(_opt(args, cfg, "epochs", 200)),
        batch_size=int(_opt(args, cfg, "batch", 32)),
        learning_rate=float(_opt(args, cfg, "lr", 0.01)),
        seed=seed,
        val_split=float(_opt(args, cfg, "val_split", 0.1)),
        patience=int(_opt(args, cfg, "patience", 10)),
        masked_loss=bool(getattr(args, "masked", False)),
    )
    activation = _opt(args, cfg, "activation", "relu")
    horizon = int(_opt(args, cfg, "tmax", 20))
    for rc in rcs:
        ds_path = dataset_tpl.format(rc=rc)
        out_path = out_tpl.format(rc=rc)
        try:
            ds = scenarios.load_dataset(ds_path)
        except OSError as exc:
            raise CliError(f"cannot read dataset: {exc}", 1) from exc
        n = ds.inputs.shape[1]
        model = surrogate.init_model([n] + hidden + [n], activation,
                                     seed=seed + rc, encoding=ds.encoding,
                                     rc_tag=rc, t_max=horizon)
        model, history = surrogate.train(model, ds, config)
        surrogate.save_model(model, out_path)
        last = history[-1] if history else (0, float("nan"), float("nan"))
        print(f"wrote {out_path}: epochs={last[0]} train_mse={last[1]:.6g} "
              f"val_mse={last[2]:.6g}")
    return 0


def cmd_evaluate(args, cfg):
    model = surrogate.load_model(_opt(args, cfg, "model"))
    ds = scenarios.load_dataset(_opt(args, cfg, "dataset"))
    margins = _parse_int_list(_opt(args, cfg, "ar", "0,1,2,3"))
    try:
        table = surrogate.evaluate_dataset(model, ds, margins)
    except ValueError as exc:
        raise CliError(str(exc), 2) from exc
    lines = ["ar,accuracy"]
    for r in margins:
        print(f"AR={r}: accuracy {table[r]:.4f}")
        lines.append(f"{r},{table[r]!r}")
    out = _opt(args, cfg, "out")
    if out:
        with open(out, "w") as fh:
            fh.write("\n".join(lines) + "\n")
    return 0


def cmd_tradeoff(args, cfg):
    spec = _load_network(_opt(args, cfg, "network"))
    scenario = _pick_scenario(_opt(args, cfg, "scenario"), spec,
                              int(_opt(args, cfg, "index", 0)))
    rcs = _parse_int_list(_opt(args, cfg, "rc_set", "2..8"))
    models_tpl = _opt(args, cfg, "models")
    models = {}
    for rc in rcs:
        path = models_tpl.format(rc=rc)
        try:
            models[rc] = surrogate.load_model(path)
        except OSError as exc:
            raise CliError(f"missing model for R_c={rc}: {exc}", 1) from exc
    mode = _opt(args, cfg, "mode", "iterative")
    horizon = int(_opt(args, cfg, "tmax", 20))
    jobs = int(_opt(args, cfg, "jobs", 1))
    curve = _tradeoff_parallel(spec, scenario, rcs, models, mode, horizon,
                               jobs)
    analysis.save_curve_csv(curve, args.out)
    for p in curve.points:
        print(f"Rc={p.rc}: solver_time={p.solver_time} nn_time={p.nn_time} "
              f"cost={p.solver_cost:.6g}")
    return 0


def _tradeoff_point(payload):
    spec, node_up, arc_up, rc, mode, horizon = payload
    scenario = solver.DamageScenario(
        initial=FunctionalityState(np.asarray(node_up, dtype=np.uint8),
                                   np.asarray(arc_up, dtype=np.uint8)))
    if mode == "exact":
        plan = solver.solve_exact(spec, scenario, rc, horizon)
    else:
        plan = solver.solve_iterative(spec, scenario, rc, horizon)
    rt = solver.recovery_time(plan)
    if rt == solver.NEVER:
        rt = horizon + 1
    return rc, int(rt), float(plan.costs.total)


def _tradeoff_parallel(spec, scenario, rcs, models, mode, horizon, jobs):
    rcs = sorted(set(rcs))
    if jobs > 1:
        import multiprocessing as mp

        payloads = [(spec, scenario.initial.node_up, scenario.initial.arc_up,
                     rc, mode, horizon) for rc in rcs]
        with mp.Pool(jobs) as pool:
            solved = pool.map(_tradeoff_point, payloads)
    else:
        solved = [_tradeoff_point((spec, scenario.initial.node_up,
                                   scenario.initial.arc_up, rc, mode,
                                   horizon)) for rc in rcs]
    points = []
    for rc, rt, cost in solved:
        pred = surrogate.predict_plan(models[rc], scenario)
        nn_time = max(pred.values()) if pred else 0
        points.append(analysis.TradeoffPoint(rc, rt, int(nn_time), cost))
    return analysis.TradeoffCurve(points)


def cmd_operator(args, cfg):
    model = surrogate.load_model(_opt(args, cfg, "model"))
    spec = _load_network(_opt(args, cfg, "network"))
    partition = analysis.layer_partition(spec)
    op = analysis.recovery_operator(model)
    analysis.operator_heatmap_export(op, partition, args.out)
    rng = np.random.default_rng(0)
    probe = (rng.random((64, model.dims[0])) < 0.2).astype(np.float64)
    r2 = analysis.operator_fit_r2(model, op, probe)
    print(f"wrote {args.out}: operator {op.matrix.shape}, linear-fit R^2 "
          f"{r2:.4f}")
    agg_out = _opt(args, cfg, "aggregate_out")
    if agg_out:
        if len(model.weights) != 2:
            raise CliError("block aggregation needs a one-hidden-layer model", 2)
        agg = analysis.block_aggregate(model, partition)
        analysis.save_aggregate_csv(agg, agg_out)
        print(f"wrote {agg_out}")
    return 0


def build_parser():
    parser = argparse.ArgumentParser(
        prog="restoro",
        description="Restoration planning and surrogate models for "
                    "interdependent infrastructure networks.")
    parser.add_argument("--version", action="version",
                        version=f"restoro {__version__} "
                                f"({', '.join(FORMAT_VERSIONS)}; "
                                f"kernel {BACKEND})")
    sub = parser.add_subparsers(dest="command", required=True)

    def add(name, fn, **opts):
        p = sub.add_parser(name)
        p.set_defaults(fn=fn)
        p.add_argument("--config")
        p.add_argument("--seed", type=int)
        for opt, kw in opts.items():
            p.add_argument(f"--{opt.replace('_', '-')}", dest=opt, **kw)
        return p

    add("gen-network", cmd_gen_network,
        out={"required": True}, preset={}, layers={}, sizes={},
        space_grid={}, link_frac={}, demand_completion_frac={})
    p = add("gen-scenarios", cmd_gen_scenarios,
            network={"required": True}, out={"required": True}, m={},
            count={}, augment={}, flip_range={})
    p.add_argument("--spatial", action="store_true")
    add("solve", cmd_solve,
        network={"required": True}, scenario={"required": True},
        out={"required": True}, index={}, rc={}, tmax={}, mode={},
        costs_out={})
    add("build-dataset", cmd_build_dataset,
        network={"required": True}, scenarios={"required": True},
        out={"required": True}, rc={}, tmax={}, mode={}, jobs={},
        encoding={})
    p = add("train", cmd_train,
            dataset={"required": True}, out={"required": True}, rc={},
            hidden={}, activation={}, epochs={}, batch={}, lr={},
            val_split={}, patience={}, tmax={})
    p.add_argument("--masked", action="store_true")
    add("evaluate", cmd_evaluate,
        model={"required": True}, dataset={"required": True}, ar={}, out={})
    add("tradeoff", cmd_tradeoff,
        network={"required": True}, scenario={"required": True},
        models={"required": True}, out={"required": True}, index={},
        rc_set={}, mode={}, tmax={}, jobs={})
    add("operator", cmd_operator,
        model={"required": True}, network={"required": True},
        out={"required": True}, aggregate_out={})
    return parser


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    cfg = _read_config(args.config) if getattr(args, "config", None) else {}
    try:
        return args.fn(args, cfg)
    except CliError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return exc.code
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
