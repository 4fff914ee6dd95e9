"""Seismic damage scenario generation, augmentation, and solver-labeled datasets.

Scenarios are Bernoulli node damage with per-magnitude rates pinned so the
mean damaged-node count on a 125-node network matches the reference
statistics (11 nodes at magnitude 6 up to 57 at magnitude 9); rates for
magnitudes 7 and 8 are log-linear interpolations. An optional spatial kernel
concentrates damage around a sampled epicenter while preserving the mean
rate. Augmentation flips a uniformly drawn number of node bits in either
direction.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace

import numpy as np

from . import solver
from .flows import FlowContext, FunctionalityState
from .solver import NEVER, DamageScenario

_RATE_M6 = 11.0 / 125.0
_RATE_M9 = 57.0 / 125.0


def _interp_rates():
    ratio = _RATE_M9 / _RATE_M6
    return {
        6: _RATE_M6,
        7: _RATE_M6 * ratio ** (1.0 / 3.0),
        8: _RATE_M6 * ratio ** (2.0 / 3.0),
        9: _RATE_M9,
    }


@dataclass
class SpatialKernel:
    """Exponential damage concentration around a random epicenter."""

    correlation_length: float = 0.3


@dataclass
class DamageModel:
    rate_per_magnitude: dict = field(default_factory=_interp_rates)
    spatial_kernel: SpatialKernel = None
    damage_arcs: bool = False


def default_damage_model():
    return DamageModel()


def generate_scenario(spec, model, m, seed):
    """Draw one damage scenario for magnitude m; reproducible from seed."""
    m = int(m)
    if m not in model.rate_per_magnitude:
        raise KeyError(f"unknown magnitude {m}")
    rate = float(model.rate_per_magnitude[m])
    if not 0.0 <= rate <= 1.0:
        raise ValueError(f"damage rate {rate} outside [0, 1]")
    rng = np.random.default_rng(seed)
    n_nodes = len(spec.nodes)
    n_arcs = len(spec.arcs)
    if model.spatial_kernel is not None:
        from .network import canonical_nodes

        pos = np.array([nd.position for nd in canonical_nodes(spec)])
        lo, hi = pos.min(axis=0), pos.max(axis=0)
        epicenter = lo + rng.random(2) * np.maximum(hi - lo, 1e-12)
        dist = np.hypot(pos[:, 0] - epicenter[0], pos[:, 1] - epicenter[1])
        w = np.exp(-dist / max(model.spatial_kernel.correlation_length, 1e-9))
        p = np.clip(rate * w / w.mean(), 0.0, 1.0)
    else:
        p = np.full(n_nodes, rate)
    node_damaged = rng.random(n_nodes) < p
    node_up = (~node_damaged).astype(np.uint8)
    if model.damage_arcs:
        arc_up = (rng.random(n_arcs) >= rate).astype(np.uint8)
    else:
        arc_up = np.ones(n_arcs, dtype=np.uint8)
    return DamageScenario(
        initial=FunctionalityState(node_up, arc_up),
        magnitude_tag=float(m),
        metadata={"seed": str(seed), "provenance": "original"},
    )


def augment(scenario, flip_count_range, seed):
    """Flip f node bits, f uniform over flip_count_range (inclusive).

    Flips are symmetric: they can damage functional nodes or clear damaged
    ones. Applying the same seed twice restores the original scenario.
    """
    lo, hi = int(flip_count_range[0]), int(flip_count_range[1])
    n = len(scenario.initial.node_up)
    if not 1 <= lo <= hi <= n:
        raise ValueError(f"flip range [{lo}, {hi}] outside [1, {n}]")
    rng = np.random.default_rng(seed)
    f = int(rng.integers(lo, hi + 1))
    idx = rng.choice(n, size=f, replace=False)
    node_up = scenario.initial.node_up.copy()
    node_up[idx] ^= 1
    meta = dict(scenario.metadata)
    meta["provenance"] = "augmented"
    meta["augment_seed"] = str(seed)
    return DamageScenario(
        initial=FunctionalityState(node_up, scenario.initial.arc_up.copy()),
        magnitude_tag=scenario.magnitude_tag,
        metadata=meta,
    )


@dataclass
class Dataset:
    """Solver-labeled training records.

    inputs[i]: encoded functionality vector; targets[i]: repair step per node
    (0 for undamaged nodes, repair steps otherwise; never-repaired nodes are
    clamped to the horizon). encoding is damaged_is_1 (input 1 marks damage)
    or damaged_is_0.
    """

    inputs: np.ndarray
    targets: np.ndarray
    rc: np.ndarray
    m: np.ndarray
    provenance: list
    encoding: str = "damaged_is_1"

    def __len__(self):
        return len(self.inputs)


def encode_functionality(node_up, encoding):
    if encoding == "damaged_is_1":
        return 1.0 - np.asarray(node_up, dtype=np.float64)
    if encoding == "damaged_is_0":
        return np.asarray(node_up, dtype=np.float64)
    raise ValueError(f"unknown encoding {encoding!r}")


def damaged_mask(inputs, encoding):
    inputs = np.asarray(inputs)
    if encoding == "damaged_is_1":
        return inputs > 0.5
    if encoding == "damaged_is_0":
        return inputs < 0.5
    raise ValueError(f"unknown encoding {encoding!r}")


def label_scenario(ctx, scenario, resource_cap, solver_mode, horizon):
    if solver_mode == "exact":
        plan = solver.solve_exact(ctx.spec, scenario, resource_cap, horizon,
                                  ctx=ctx)
    elif solver_mode == "iterative":
        plan = solver.solve_iterative(ctx.spec, scenario, resource_cap,
                                      horizon, ctx=ctx)
    else:
        raise ValueError(f"unknown solver mode {solver_mode!r}")
    target = np.zeros(ctx.n_nodes)
    for e, step in plan.repair_time.items():
        if e < ctx.n_nodes:
            target[e] = float(horizon if step == NEVER else step)
    return target


_WORKER = {}


def _worker_init(spec, resource_cap, solver_mode, horizon, encoding):
    _WORKER["ctx"] = FlowContext(spec)
    _WORKER["args"] = (resource_cap, solver_mode, horizon, encoding)


def _worker_label(payload):
    node_up, arc_up, m_tag, provenance = payload
    ctx = _WORKER["ctx"]
    resource_cap, solver_mode, horizon, encoding = _WORKER["args"]
    scenario = DamageScenario(
        initial=FunctionalityState(np.asarray(node_up, dtype=np.uint8),
                                   np.asarray(arc_up, dtype=np.uint8)),
        magnitude_tag=m_tag,
    )
    target = label_scenario(ctx, scenario, resource_cap, solver_mode, horizon)
    x = encode_functionality(scenario.initial.node_up, encoding)
    return x, target


def build_dataset(spec, scenarios, resource_cap, solver_mode="iterative", *,
                  horizon=20, encoding="damaged_is_1", jobs=1):
    """Label scenarios with the solver and assemble a dataset.

    Record order follows the input scenario order regardless of the worker
    count, so parallel runs are byte-reproducible.
    """
    scenarios = list(scenarios)
    if not scenarios:
        raise ValueError("no scenarios to label")
    m_tags = np.array(
        [s.magnitude_tag if s.magnitude_tag is not None else 0.0
         for s in scenarios])
    provenance = [s.metadata.get("provenance", "original") for s in scenarios]
    if jobs > 1:
        import multiprocessing as mp

        payloads = [(s.initial.node_up, s.initial.arc_up, s.magnitude_tag,
                     p) for s, p in zip(scenarios, provenance)]
        with mp.Pool(jobs, initializer=_worker_init,
                     initargs=(spec, resource_cap, solver_mode, horizon,
                               encoding)) as pool:
            results = pool.map(_worker_label, payloads, chunksize=8)
        inputs = np.stack([r[0] for r in results])
        targets = np.stack([r[1] for r in results])
    else:
        ctx = FlowContext(spec)
        rows_x, rows_t = [], []
        for s in scenarios:
            rows_t.append(label_scenario(ctx, s, resource_cap, solver_mode,
                                         horizon))
            rows_x.append(encode_functionality(s.initial.node_up, encoding))
        inputs = np.stack(rows_x)
        targets = np.stack(rows_t)
    rc = np.full(len(scenarios), int(resource_cap), dtype=np.int64)
    return Dataset(inputs, targets, rc, m_tags, provenance, encoding)


# -- file formats -------------------------------------------------------------

SCENARIO_FORMAT = "scenarios-v1"
DATASET_FORMAT = "dataset-v1"


def save_scenarios(scenarios, path, seed=None):
    """One scenario per line: node functionality bits (1 = functional)."""
    scenarios = list(scenarios)
    n_orig = sum(1 for s in scenarios
                 if s.metadata.get("provenance", "original") == "original")
    lines = [f"# restoro {SCENARIO_FORMAT}",
             "# encoding = functionality (1 = functional, 0 = damaged)"]
    if seed is not None:
        lines.append(f"# seed = {seed}")
    if scenarios and scenarios[0].magnitude_tag is not None:
        lines.append(f"# m = {int(scenarios[0].magnitude_tag)}")
    lines.append(f"# originals = {n_orig}")
    for s in scenarios:
        lines.append(",".join(str(int(b)) for b in s.initial.node_up))
    with open(path, "w") as fh:
        fh.write("\n".join(lines) + "\n")


def load_scenarios(path, spec):
    """Read scenarios back; arc functionality defaults to all-up."""
    n_nodes = len(spec.nodes)
    n_arcs = len(spec.arcs)
    m_tag = None
    n_orig = None
    out = []
    with open(path) as fh:
        for line_no, raw in enumerate(fh, start=1):
            line = raw.strip()
            if not line:
                continue
            if line.startswith("#"):
                body = line[1:].strip()
                if "=" in body:
                    key, _, val = body.partition("=")
                    key = key.strip()
                    if key == "m":
                        m_tag = float(val.strip())
                    elif key == "originals":
                        n_orig = int(val.strip())
                continue
            bits = line.split(",")
            if len(bits) != n_nodes:
                raise ValueError(
                    f"{path}:{line_no}: expected {n_nodes} bits, got {len(bits)}")
            node_up = np.array([int(b) for b in bits], dtype=np.uint8)
            if not np.isin(node_up, (0, 1)).all():
                raise ValueError(f"{path}:{line_no}: bits must be 0 or 1")
            provenance = ("original" if n_orig is None or len(out) < n_orig
                          else "augmented")
            out.append(DamageScenario(
                initial=FunctionalityState(
                    node_up, np.ones(n_arcs, dtype=np.uint8)),
                magnitude_tag=m_tag,
                metadata={"provenance": provenance},
            ))
    return out


def save_dataset(dataset, path):
    n = dataset.inputs.shape[1]
    header = ([f"input_{i}" for i in range(n)]
              + [f"target_{i}" for i in range(n)] + ["Rc", "m", "provenance"])
    lines = [f"# restoro {DATASET_FORMAT}",
             f"# encoding = {dataset.encoding}",
             ",".join(header)]
    for i in range(len(dataset)):
        row = ([str(int(v)) for v in dataset.inputs[i]]
               + [str(int(v)) for v in dataset.targets[i]]
               + [str(int(dataset.rc[i])), repr(float(dataset.m[i])),
                  dataset.provenance[i]])
        lines.append(",".join(row))
    with open(path, "w") as fh:
        fh.write("\n".join(lines) + "\n")


def load_dataset(path):
    encoding = "damaged_is_1"
    rows = []
    header = None
    with open(path) as fh:
        for raw in fh:
            line = raw.strip()
            if not line:
                continue
            if line.startswith("#"):
                body = line[1:].strip()
                if body.startswith("encoding"):
                    encoding = body.partition("=")[2].strip()
                continue
            if header is None:
                header = line.split(",")
                continue
            rows.append(line.split(","))
    if header is None:
        raise ValueError(f"{path}: empty dataset file")
    n = sum(1 for h in header if h.startswith("input_"))
    inputs = np.array([[float(v) for v in r[:n]] for r in rows])
    targets = np.array([[float(v) for v in r[n:2 * n]] for r in rows])
    rc = np.array([int(r[2 * n]) for r in rows], dtype=np.int64)
    m = np.array([float(r[2 * n + 1]) for r in rows])
    provenance = [r[2 * n + 2] for r in rows]
    return Dataset(inputs, targets, rc, m, provenance, encoding)
