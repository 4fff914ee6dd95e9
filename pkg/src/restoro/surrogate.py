"""From-scratch feedforward network mapping damage vectors to repair steps.

Dense layers with ReLU (or identity) hidden activations and an identity
output, trained on mean squared error with ADAM. Weight matrices are stored
as (fan_out, fan_in) so the interpretability code can read W[j, i] as the
connection from input i to neuron j. Everything is numpy float64 and fully
deterministic under a seed.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .scenarios import damaged_mask, encode_functionality

MODEL_FORMAT = "surrogate-v1"


@dataclass
class SurrogateModel:
    dims: list  # [n_in, hidden..., n_out]
    weights: list  # per layer, shape (fan_out, fan_in)
    biases: list
    activations: list  # per hidden layer: "relu" | "identity"
    encoding: str = "damaged_is_1"
    rc_tag: int = 0
    t_max: int = 20

    def copy_params(self):
        return ([w.copy() for w in self.weights],
                [b.copy() for b in self.biases])

    def set_params(self, weights, biases):
        self.weights = [w.copy() for w in weights]
        self.biases = [b.copy() for b in biases]


@dataclass
class AdamState:
    step: int
    m_w: list
    v_w: list
    m_b: list
    v_b: list
    learning_rate: float = 0.01
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8


def init_model(dims, activation="relu", seed=0, *, encoding="damaged_is_1",
               rc_tag=0, t_max=20):
    """Glorot-uniform weights (+-sqrt(6/(fan_in+fan_out))), zero biases."""
    dims = [int(d) for d in dims]
    if len(dims) < 2 or any(d < 1 for d in dims):
        raise ValueError(f"invalid dims {dims}")
    n_hidden = len(dims) - 2
    if isinstance(activation, str):
        activations = [activation] * n_hidden
    else:
        activations = list(activation)
    if len(activations) != n_hidden:
        raise ValueError("need one activation tag per hidden layer")
    if any(a not in ("relu", "identity") for a in activations):
        raise ValueError(f"unknown activation in {activations}")
    rng = np.random.default_rng(seed)
    weights, biases = [], []
    for fan_in, fan_out in zip(dims[:-1], dims[1:]):
        limit = np.sqrt(6.0 / (fan_in + fan_out))
        weights.append(rng.uniform(-limit, limit, size=(fan_out, fan_in)))
        biases.append(np.zeros(fan_out))
    return SurrogateModel(dims, weights, biases, activations,
                          encoding=encoding, rc_tag=int(rc_tag),
                          t_max=int(t_max))


def parameter_count(model):
    return sum(w.size for w in model.weights) + sum(b.size for b in model.biases)


def _act(z, kind):
    if kind == "relu":
        return np.maximum(z, 0.0)
    return z


def _act_grad(z, kind):
    if kind == "relu":
        return (z > 0.0).astype(np.float64)
    return np.ones_like(z)


def _forward_cached(model, x):
    a = np.atleast_2d(np.asarray(x, dtype=np.float64))
    if a.shape[1] != model.dims[0]:
        raise ValueError(
            f"input width {a.shape[1]} != model input {model.dims[0]}")
    pre, post = [], [a]
    n_layers = len(model.weights)
    for l, (w, b) in enumerate(zip(model.weights, model.biases)):
        z = post[-1] @ w.T + b
        pre.append(z)
        if l < n_layers - 1:
            post.append(_act(z, model.activations[l]))
        else:
            post.append(z)  # identity output layer
    return pre, post


def forward(model, x):
    x = np.asarray(x, dtype=np.float64)
    _, post = _forward_cached(model, x)
    y = post[-1]
    return y[0] if x.ndim == 1 else y


def loss_and_gradients(model, inputs, targets, mask=None):
    """MSE over the batch and gradients via reverse-mode accumulation.

    mask, when given, restricts the loss to masked coordinates:
    sum(err^2 * mask) / sum(mask). Returns (mse, [(dW, db) per layer]).
    """
    X = np.atleast_2d(np.asarray(inputs, dtype=np.float64))
    Y = np.atleast_2d(np.asarray(targets, dtype=np.float64))
    if X.shape[0] == 0:
        raise ValueError("empty batch")
    pre, post = _forward_cached(model, X)
    err = post[-1] - Y
    if mask is None:
        denom = float(err.size)
        mse = float(np.sum(err * err) / denom)
        d_z = (2.0 / denom) * err
    else:
        M = np.atleast_2d(np.asarray(mask, dtype=np.float64))
        denom = float(np.sum(M))
        if denom == 0.0:
            raise ValueError("mask selects no coordinates")
        mse = float(np.sum(err * err * M) / denom)
        d_z = (2.0 / denom) * err * M
    grads = [None] * len(model.weights)
    for l in range(len(model.weights) - 1, -1, -1):
        dw = d_z.T @ post[l]
        db = d_z.sum(axis=0)
        grads[l] = (dw, db)
        if l > 0:
            d_a = d_z @ model.weights[l]
            d_z = d_a * _act_grad(pre[l - 1], model.activations[l - 1])
    return mse, grads


def init_adam(model, learning_rate=0.01, beta1=0.9, beta2=0.999, eps=1e-8):
    return AdamState(
        step=0,
        m_w=[np.zeros_like(w) for w in model.weights],
        v_w=[np.zeros_like(w) for w in model.weights],
        m_b=[np.zeros_like(b) for b in model.biases],
        v_b=[np.zeros_like(b) for b in model.biases],
        learning_rate=learning_rate, beta1=beta1, beta2=beta2, eps=eps,
    )


def adam_step(model, state, grads):
    """One bias-corrected ADAM update in place; returns (model, state)."""
    state.step += 1
    t = state.step
    b1, b2 = state.beta1, state.beta2
    lr, eps = state.learning_rate, state.eps
    c1 = 1.0 - b1 ** t
    c2 = 1.0 - b2 ** t
    for l, (dw, db) in enumerate(grads):
        state.m_w[l] = b1 * state.m_w[l] + (1.0 - b1) * dw
        state.v_w[l] = b2 * state.v_w[l] + (1.0 - b2) * dw * dw
        state.m_b[l] = b1 * state.m_b[l] + (1.0 - b1) * db
        state.v_b[l] = b2 * state.v_b[l] + (1.0 - b2) * db * db
        model.weights[l] -= lr * (state.m_w[l] / c1) / (
            np.sqrt(state.v_w[l] / c2) + eps)
        model.biases[l] -= lr * (state.m_b[l] / c1) / (
            np.sqrt(state.v_b[l] / c2) + eps)
    return model, state


@dataclass
class TrainConfig:
    epochs: int = 200
    batch_size: int = 32
    learning_rate: float = 0.01
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8
    seed: int = 0
    val_split: float = 0.1
    patience: int = 10
    masked_loss: bool = False


def _mse_only(model, X, Y, mask):
    _, post = _forward_cached(model, X)
    err = post[-1] - Y
    if mask is None:
        return float(np.mean(err * err)), None
    denom = float(np.sum(mask))
    if denom == 0.0:
        return float("nan"), None
    return float(np.sum(err * err * mask) / denom), None


def train(model, dataset, config=None):
    """Mini-batch ADAM on MSE with a validation split and early stopping.

    Shuffling, splitting, and batching all flow from config.seed. Early
    stopping restores the parameters of the best validation epoch; with no
    validation records (tiny datasets) it is disabled. Returns
    (model, history) where history rows are (epoch, train_mse, val_mse).
    """
    config = config or TrainConfig()
    if len(dataset) == 0:
        raise ValueError("empty dataset")
    if dataset.encoding != model.encoding:
        raise ValueError(
            f"dataset encoding {dataset.encoding!r} != model {model.encoding!r}")
    X = np.asarray(dataset.inputs, dtype=np.float64)
    Y = np.asarray(dataset.targets, dtype=np.float64)
    mask_all = (damaged_mask(X, dataset.encoding).astype(np.float64)
                if config.masked_loss else None)
    rng = np.random.default_rng(config.seed)
    perm = rng.permutation(len(X))
    n_val = int(round(config.val_split * len(X)))
    n_val = min(n_val, len(X) - 1)
    val_idx, train_idx = perm[:n_val], perm[n_val:]
    Xtr, Ytr = X[train_idx], Y[train_idx]
    Xva, Yva = X[val_idx], Y[val_idx]
    Mtr = mask_all[train_idx] if mask_all is not None else None
    Mva = mask_all[val_idx] if mask_all is not None else None

    state = init_adam(model, config.learning_rate, config.beta1, config.beta2,
                      config.eps)
    history = []
    best_val = float("inf")
    best_params = None
    stale = 0
    for epoch in range(1, config.epochs + 1):
        order = rng.permutation(len(Xtr))
        for lo in range(0, len(order), config.batch_size):
            sel = order[lo:lo + config.batch_size]
            mb = Mtr[sel] if Mtr is not None else None
            if mb is not None and mb.sum() == 0.0:
                continue  # batch of fully functional scenarios
            _, grads = loss_and_gradients(model, Xtr[sel], Ytr[sel], mb)
            adam_step(model, state, grads)
        train_mse, _ = _mse_only(model, Xtr, Ytr, Mtr)
        val_mse = (_mse_only(model, Xva, Yva, Mva)[0] if len(Xva)
                   else float("nan"))
        history.append((epoch, train_mse, val_mse))
        if len(Xva):
            if val_mse < best_val - 1e-12:
                best_val = val_mse
                best_params = model.copy_params()
                stale = 0
            else:
                stale += 1
                if stale > config.patience:
                    break
    if best_params is not None:
        model.set_params(*best_params)
    return model, history


def predict_plan(model, scenario_or_state):
    """Predicted repair step per damaged node: round the regression output
    and clamp to [1, t_max]. Undamaged nodes never receive a step; no
    resource-cap feasibility is enforced."""
    node_up = scenario_or_state
    if hasattr(node_up, "initial"):
        node_up = node_up.initial
    if hasattr(node_up, "node_up"):
        node_up = node_up.node_up
    node_up = np.asarray(node_up)
    x = encode_functionality(node_up, model.encoding)
    y = forward(model, x)
    steps = np.clip(np.rint(y), 1, model.t_max).astype(int)
    return {int(i): int(steps[i]) for i in np.flatnonzero(node_up == 0)}


def ar_accuracy(predictions, truths, r):
    """Pooled per-node accuracy at margin r over damaged nodes."""
    p = np.asarray(predictions, dtype=np.float64)
    t = np.asarray(truths, dtype=np.float64)
    if p.shape != t.shape:
        raise ValueError("prediction/truth shapes differ")
    if p.size == 0:
        raise ValueError("no damaged nodes in the evaluation set")
    return float(np.mean(np.abs(p - t) <= r + 1e-9))


def evaluate_dataset(model, dataset, margins):
    """AR accuracy table {r: accuracy} with predictions pooled per node
    across all records."""
    preds, truths = [], []
    dmg = damaged_mask(dataset.inputs, dataset.encoding)
    for i in range(len(dataset)):
        idx = np.flatnonzero(dmg[i])
        if idx.size == 0:
            continue
        node_up = (1.0 - dataset.inputs[i]
                   if dataset.encoding == "damaged_is_1" else dataset.inputs[i])
        plan = predict_plan(model, node_up.astype(np.uint8))
        preds.extend(plan[int(j)] for j in idx)
        truths.extend(dataset.targets[i][idx])
    return {r: ar_accuracy(preds, truths, r) for r in margins}


# -- model file ---------------------------------------------------------------

def save_model(model, path):
    lines = [MODEL_FORMAT,
             "dims " + " ".join(str(d) for d in model.dims),
             "activation " + " ".join(model.activations),
             f"encoding {model.encoding}",
             f"rc {model.rc_tag}",
             f"tmax {model.t_max}"]
    out = []
    for w, b in zip(model.weights, model.biases):
        out.append(w.ravel())
        out.append(b.ravel())
    values = np.concatenate(out)
    with open(path, "w") as fh:
        fh.write("\n".join(lines) + "\n")
        fh.write("\n".join(f"{v:.17g}" for v in values))
        fh.write("\n")


def load_model(path):
    with open(path) as fh:
        lines = fh.read().splitlines()
    if not lines or lines[0].strip() != MODEL_FORMAT:
        raise ValueError(f"{path}: not a {MODEL_FORMAT} file")
    if len(lines) < 6:
        raise ValueError(f"{path}: truncated header")
    meta = {}
    for i in range(1, 6):
        key, _, rest = lines[i].partition(" ")
        meta[key] = rest.strip()
    for key in ("dims", "activation", "encoding", "rc", "tmax"):
        if key not in meta:
            raise ValueError(f"{path}: missing header field {key!r}")
    cursor = 6
    dims = [int(d) for d in meta["dims"].split()]
    activations = meta["activation"].split() if meta["activation"] else []
    values = np.array([float(v) for v in lines[cursor:] if v.strip()])
    weights, biases = [], []
    pos = 0
    for fan_in, fan_out in zip(dims[:-1], dims[1:]):
        w = values[pos:pos + fan_in * fan_out].reshape(fan_out, fan_in)
        pos += fan_in * fan_out
        b = values[pos:pos + fan_out]
        pos += fan_out
        weights.append(w.copy())
        biases.append(b.copy())
    if pos != values.size:
        raise ValueError(f"{path}: parameter count mismatch")
    return SurrogateModel(dims, weights, biases, activations,
                          encoding=meta["encoding"], rc_tag=int(meta["rc"]),
                          t_max=int(meta["tmax"]))
