"""Single-layer recurrent classifier over fixed-length windows.

Forward pass, cross-entropy loss, backpropagation through time, and plain
stochastic gradient descent, all in float64 numpy. The recurrence is the
standard LSTM cell with input/forget/output/candidate gates acting on the
concatenation ``[x_t, h_{t-1}]``; the class distribution is a softmax over a
linear head applied to the final hidden state.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Sequence

import numpy as np

from .errors import DivergenceError, LabelError, ShapeError
from .trajectory import write_atomic
from .windows import Window

CHECKPOINT_FORMAT = "sbt-model-v1"

# Gate order everywhere: input, forget, output, candidate.
GATE_NAMES = ("i", "f", "o", "g")
PARAM_NAMES = ("w_i", "b_i", "w_f", "b_f", "w_o", "b_o", "w_g", "b_g", "w_out", "b_out")

DEFAULT_HIDDEN_DIM = 32


@dataclass(frozen=True)
class ModelConfig:
    """Shape and seed of a temporal model.

    ``classes`` optionally records the label vocabulary, index-aligned with
    the softmax head; checkpoints carry it so reports can name classes.
    """

    input_dim: int
    hidden_dim: int
    num_classes: int
    seed: int
    classes: tuple[str, ...] | None = None

    def __post_init__(self):
        if self.input_dim < 1 or self.hidden_dim < 1:
            raise ValueError("input_dim and hidden_dim must be >= 1")
        if self.num_classes < 2:
            raise ValueError(f"need at least 2 classes, got {self.num_classes}")
        if self.classes is not None:
            classes = tuple(str(c) for c in self.classes)
            if len(classes) != self.num_classes:
                raise ValueError(
                    f"{len(classes)} class names for {self.num_classes} classes"
                )
            object.__setattr__(self, "classes", classes)


@dataclass
class TemporalModel:
    """Gate and head parameters plus the config they must stay consistent with.

    ``params`` maps each name in :data:`PARAM_NAMES` to its array: gate
    weights are ``(hidden_dim, input_dim + hidden_dim)``, gate biases
    ``(hidden_dim,)``, the head is ``(num_classes, hidden_dim)`` with a
    ``(num_classes,)`` bias.
    """

    config: ModelConfig
    params: dict[str, np.ndarray]

    def param_shapes(self) -> dict[str, tuple[int, ...]]:
        return expected_shapes(self.config)

    def copy(self) -> "TemporalModel":
        return TemporalModel(self.config, {k: v.copy() for k, v in self.params.items()})


@dataclass(frozen=True)
class ClassDistribution:
    """Softmax output: probabilities over the class vocabulary."""

    probs: np.ndarray

    def __post_init__(self):
        p = np.asarray(self.probs, dtype=np.float64)
        if p.ndim != 1:
            raise ShapeError(f"class distribution must be 1-D, got shape {p.shape}")
        if (p < 0).any() or (p > 1).any() or abs(float(p.sum()) - 1.0) > 1e-9:
            raise ShapeError("probabilities must lie in [0, 1] and sum to 1")
        object.__setattr__(self, "probs", p)

    def argmax(self) -> int:
        # np.argmax returns the first maximal entry, i.e. the smallest class
        # index on exact ties.
        return int(np.argmax(self.probs))


def expected_shapes(config: ModelConfig) -> dict[str, tuple[int, ...]]:
    z = config.input_dim + config.hidden_dim
    shapes: dict[str, tuple[int, ...]] = {}
    for gate in GATE_NAMES:
        shapes[f"w_{gate}"] = (config.hidden_dim, z)
        shapes[f"b_{gate}"] = (config.hidden_dim,)
    shapes["w_out"] = (config.num_classes, config.hidden_dim)
    shapes["b_out"] = (config.num_classes,)
    return shapes


def init_model(config: ModelConfig) -> TemporalModel:
    """Seeded initialization: weights ~ U(-1/sqrt(fan_in), +1/sqrt(fan_in)),
    biases zero except the forget gate, which starts at 1 so early training
    keeps cell state flowing. Identical configs yield bit-identical models.
    """
    rng = np.random.default_rng(config.seed)
    z = config.input_dim + config.hidden_dim
    gate_scale = 1.0 / np.sqrt(z)
    head_scale = 1.0 / np.sqrt(config.hidden_dim)
    params: dict[str, np.ndarray] = {}
    for gate in GATE_NAMES:
        params[f"w_{gate}"] = rng.uniform(-gate_scale, gate_scale, (config.hidden_dim, z))
        params[f"b_{gate}"] = np.zeros(config.hidden_dim)
    params["b_f"] = np.ones(config.hidden_dim)
    params["w_out"] = rng.uniform(-head_scale, head_scale, (config.num_classes, config.hidden_dim))
    params["b_out"] = np.zeros(config.num_classes)
    return TemporalModel(config=config, params=params)


def _sigmoid(x: np.ndarray) -> np.ndarray:
    out = np.empty_like(x)
    pos = x >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-x[pos]))
    ex = np.exp(x[~pos])
    out[~pos] = ex / (1.0 + ex)
    return out


def _softmax(logits: np.ndarray) -> np.ndarray:
    shifted = logits - logits.max(axis=-1, keepdims=True)
    e = np.exp(shifted)
    return e / e.sum(axis=-1, keepdims=True)


def _stacked_gate_params(model: TemporalModel) -> tuple[np.ndarray, np.ndarray]:
    w = np.concatenate([model.params[f"w_{g}"] for g in GATE_NAMES], axis=0)
    b = np.concatenate([model.params[f"b_{g}"] for g in GATE_NAMES])
    return w, b


def _run_recurrence(model: TemporalModel, inputs: np.ndarray, keep_cache: bool):
    """Run the cell over ``inputs`` of shape (batch, steps, input_dim).

    Returns the final hidden state and, when requested, the per-step cache
    needed by backpropagation through time.
    """
    batch, steps, _ = inputs.shape
    h_dim = model.config.hidden_dim
    w_all, b_all = _stacked_gate_params(model)
    h = np.zeros((batch, h_dim))
    c = np.zeros((batch, h_dim))
    cache = [] if keep_cache else None
    for t in range(steps):
        z = np.concatenate([inputs[:, t, :], h], axis=1)
        pre = z @ w_all.T + b_all
        i = _sigmoid(pre[:, 0 * h_dim:1 * h_dim])
        f = _sigmoid(pre[:, 1 * h_dim:2 * h_dim])
        o = _sigmoid(pre[:, 2 * h_dim:3 * h_dim])
        g = np.tanh(pre[:, 3 * h_dim:4 * h_dim])
        c_prev = c
        c = f * c_prev + i * g
        tc = np.tanh(c)
        h = o * tc
        if keep_cache:
            cache.append((z, i, f, o, g, c_prev, tc))
    return h, w_all, cache


def _head_logits(model: TemporalModel, h: np.ndarray) -> np.ndarray:
    return h @ model.params["w_out"].T + model.params["b_out"]


def _check_input_dim(model: TemporalModel, feature_dim: int) -> None:
    if feature_dim != model.config.input_dim:
        raise ShapeError(
            f"window features have dimension {feature_dim} but the model "
            f"expects {model.config.input_dim}"
        )


def forward(model: TemporalModel, window: Window) -> ClassDistribution:
    """Classify one window: LSTM recurrence from zero state, softmax head."""
    feats = np.asarray(window.frames, dtype=np.float64)
    if feats.ndim != 2:
        raise ShapeError(f"window frames must be 2-D, got shape {feats.shape}")
    _check_input_dim(model, feats.shape[1])
    probs = forward_batch(model, feats[None, :, :])[0]
    return ClassDistribution(probs)


def forward_batch(model: TemporalModel, inputs: np.ndarray) -> np.ndarray:
    """Classify a stack of equal-length windows, shape (batch, steps, dim).

    Returns a (batch, num_classes) array of probabilities.
    """
    inputs = np.asarray(inputs, dtype=np.float64)
    if inputs.ndim != 3:
        raise ShapeError(f"expected (batch, steps, dim) inputs, got shape {inputs.shape}")
    _check_input_dim(model, inputs.shape[2])
    h, _, _ = _run_recurrence(model, inputs, keep_cache=False)
    return _softmax(_head_logits(model, h))


def _stack_batch(model: TemporalModel, batch: Sequence[tuple[Window, int]]):
    if not batch:
        raise ValueError("batch must not be empty")
    lengths = {w.frames.shape[0] for w, _ in batch}
    if len(lengths) != 1:
        raise ShapeError(
            f"windows in one batch must share a length, saw {sorted(lengths)}"
        )
    labels = np.array([label for _, label in batch], dtype=np.int64)
    if (labels < 0).any() or (labels >= model.config.num_classes).any():
        bad = labels[(labels < 0) | (labels >= model.config.num_classes)][0]
        raise LabelError(
            f"label {bad} out of range for {model.config.num_classes} classes"
        )
    inputs = np.stack([np.asarray(w.frames, dtype=np.float64) for w, _ in batch])
    _check_input_dim(model, inputs.shape[2])
    return inputs, labels


def loss_and_gradients(model: TemporalModel, batch: Sequence[tuple[Window, int]]):
    """Mean cross-entropy over the batch and its gradients via BPTT.

    Returns ``(loss, grads)`` where ``grads`` mirrors ``model.params``.
    """
    inputs, labels = _stack_batch(model, batch)
    batch_size, steps, in_dim = inputs.shape
    h_dim = model.config.hidden_dim

    h, w_all, cache = _run_recurrence(model, inputs, keep_cache=True)
    logits = _head_logits(model, h)

    # log-softmax form keeps the loss finite for extreme logits
    shifted = logits - logits.max(axis=1, keepdims=True)
    log_norm = np.log(np.exp(shifted).sum(axis=1))
    log_probs = shifted - log_norm[:, None]
    loss = float(-log_probs[np.arange(batch_size), labels].mean())

    probs = np.exp(log_probs)
    dlogits = probs.copy()
    dlogits[np.arange(batch_size), labels] -= 1.0
    dlogits /= batch_size

    grads = {name: np.zeros_like(arr) for name, arr in model.params.items()}
    grads["w_out"] = dlogits.T @ h
    grads["b_out"] = dlogits.sum(axis=0)

    gw_all = np.zeros_like(w_all)
    gb_all = np.zeros(4 * h_dim)
    dh = dlogits @ model.params["w_out"]
    dc = np.zeros((batch_size, h_dim))
    for t in reversed(range(steps)):
        z, i, f, o, g, c_prev, tc = cache[t]
        do = dh * tc
        dc = dc + dh * o * (1.0 - tc ** 2)
        di = dc * g
        dg = dc * i
        df = dc * c_prev
        dc_prev = dc * f
        da = np.concatenate(
            [di * i * (1.0 - i), df * f * (1.0 - f), do * o * (1.0 - o), dg * (1.0 - g ** 2)],
            axis=1,
        )
        gw_all += da.T @ z
        gb_all += da.sum(axis=0)
        dz = da @ w_all
        dh = dz[:, in_dim:]
        dc = dc_prev

    for k, gate in enumerate(GATE_NAMES):
        grads[f"w_{gate}"] = gw_all[k * h_dim:(k + 1) * h_dim]
        grads[f"b_{gate}"] = gb_all[k * h_dim:(k + 1) * h_dim]
    return loss, grads


@dataclass(frozen=True)
class TrainOptions:
    # sized so the stock synthetic benchmark trains in well under a minute
    # on one laptop core while converging with margin
    epochs: int = 12
    learning_rate: float = 0.1
    batch_size: int = 32
    seed: int = 0
    clip_norm: float = 5.0


def _global_norm(grads: dict[str, np.ndarray]) -> float:
    return float(np.sqrt(sum(float((g ** 2).sum()) for g in grads.values())))


def train(
    model: TemporalModel,
    dataset: Sequence[tuple[Window, int]],
    opts: TrainOptions = TrainOptions(),
) -> tuple[TemporalModel, list[float]]:
    """Plain SGD with global gradient-norm clipping.

    Mutates ``model`` in place (single writer) and returns it with one
    mean-loss entry per epoch. Shuffling is driven by ``opts.seed`` alone, so
    a fixed seed reproduces training bit for bit. Windows of different
    lengths are bucketed so every batch stays rectangular.

    Raises :class:`DivergenceError` with the epoch index if the loss or any
    parameter stops being finite.
    """
    if not dataset:
        raise ValueError("training dataset must not be empty")
    rng = np.random.default_rng(opts.seed)
    n = len(dataset)
    history: list[float] = []
    for epoch in range(opts.epochs):
        perm = rng.permutation(n)
        buckets: dict[int, list[int]] = {}
        for idx in perm:
            buckets.setdefault(dataset[idx][0].frames.shape[0], []).append(int(idx))
        batches: list[list[int]] = []
        for length in sorted(buckets):
            members = buckets[length]
            for s in range(0, len(members), opts.batch_size):
                batches.append(members[s:s + opts.batch_size])
        order = rng.permutation(len(batches))
        epoch_loss = 0.0
        for b in order:
            batch = [dataset[i] for i in batches[b]]
            loss, grads = loss_and_gradients(model, batch)
            if not np.isfinite(loss):
                raise DivergenceError(f"non-finite loss at epoch {epoch}", epoch=epoch)
            norm = _global_norm(grads)
            scale = opts.learning_rate
            if opts.clip_norm > 0 and norm > opts.clip_norm:
                scale *= opts.clip_norm / norm
            for name, grad in grads.items():
                model.params[name] -= scale * grad
            epoch_loss += loss * len(batch)
        for arr in model.params.values():
            if not np.isfinite(arr).all():
                raise DivergenceError(f"non-finite parameter at epoch {epoch}", epoch=epoch)
        history.append(epoch_loss / n)
    return model, history


# ---------------------------------------------------------------------------
# Checkpoint codec: versioned JSON with named flat parameter arrays.
# ---------------------------------------------------------------------------


def model_to_record(model: TemporalModel, pipeline: dict | None = None) -> dict:
    config = {
        "input_dim": model.config.input_dim,
        "hidden_dim": model.config.hidden_dim,
        "num_classes": model.config.num_classes,
        "seed": model.config.seed,
    }
    if model.config.classes is not None:
        config["classes"] = list(model.config.classes)
    if pipeline:
        config["pipeline"] = pipeline
    return {
        "format": CHECKPOINT_FORMAT,
        "config": config,
        "params": {name: model.params[name].ravel().tolist() for name in PARAM_NAMES},
    }


def save_model(model: TemporalModel, path: str | Path, pipeline: dict | None = None) -> None:
    record = model_to_record(model, pipeline)
    write_atomic(path, json.dumps(record, separators=(",", ":"), allow_nan=False) + "\n")


def model_from_record(record: dict) -> TemporalModel:
    if record.get("format") != CHECKPOINT_FORMAT:
        raise ShapeError(
            f"unsupported checkpoint format {record.get('format')!r}, "
            f"expected {CHECKPOINT_FORMAT!r}"
        )
    cfg = record["config"]
    classes = cfg.get("classes")
    config = ModelConfig(
        input_dim=int(cfg["input_dim"]),
        hidden_dim=int(cfg["hidden_dim"]),
        num_classes=int(cfg["num_classes"]),
        seed=int(cfg["seed"]),
        classes=tuple(classes) if classes is not None else None,
    )
    shapes = expected_shapes(config)
    params: dict[str, np.ndarray] = {}
    for name, shape in shapes.items():
        if name not in record["params"]:
            raise ShapeError(f"checkpoint is missing parameter {name!r}")
        flat = np.asarray(record["params"][name], dtype=np.float64)
        want = int(np.prod(shape))
        if flat.size != want:
            raise ShapeError(
                f"parameter {name!r} has {flat.size} values but config "
                f"{shape} needs {want}"
            )
        if not np.isfinite(flat).all():
            raise ShapeError(f"parameter {name!r} contains non-finite values")
        params[name] = flat.reshape(shape)
    return TemporalModel(config=config, params=params)


def load_model(path: str | Path) -> tuple[TemporalModel, dict]:
    """Load a checkpoint; returns the model and any pipeline provenance."""
    with open(path, encoding="utf-8") as fh:
        record = json.load(fh)
    model = model_from_record(record)
    pipeline = record["config"].get("pipeline") or {}
    return model, pipeline
