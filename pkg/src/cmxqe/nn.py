"""Hand-rolled dense classifier: forward, backprop, Adam, training loop.

The architecture is fixed: 3072 -> 1536 -> 768 -> 10, rectified-linear after
each hidden layer, logistic sigmoid on the 10 output units. Training
minimizes per-class binary cross-entropy against one-hot targets, averaged
over batch and classes, with probabilities clamped to [1e-7, 1 - 1e-7].

All gradients are exact analytic derivatives of that clamped loss, which is
what makes the finite-difference checks in the test suite meaningful: where
the clamp is active the gradient is exactly zero, matching what perturbation
of the parameters would observe.

Parameters are float32; every function also operates on float64 copies
(``MLPModel.astype``) so numerical checks can run at higher precision. The
training loop is single-threaded over batches and fully deterministic for a
fixed seed.
"""

from __future__ import annotations

import struct
from dataclasses import dataclass
from pathlib import Path
from typing import Sequence

import numpy as np

from .errors import (
    ArchitectureMismatchError,
    BadMagicError,
    DimMismatchError,
    EmptyDatasetError,
    FormatError,
    NonFiniteInputError,
    NonFiniteLossError,
    ShapeMismatchError,
    StaleCacheError,
    TruncatedFileError,
    VersionMismatchError,
)
from .fusion import FeatureMatrix
from .tasks import NUM_CLASSES, Task

ARCHITECTURE = (3072, 1536, 768, 10)
PROB_CLAMP = 1e-7

CHECKPOINT_MAGIC = b"MLPC"
CHECKPOINT_VERSION = 1


@dataclass
class DenseLayer:
    """Affine map with ``weights`` shaped (out_dim, in_dim)."""

    weights: np.ndarray
    bias: np.ndarray

    @property
    def out_dim(self) -> int:
        return self.weights.shape[0]

    @property
    def in_dim(self) -> int:
        return self.weights.shape[1]


@dataclass
class MLPModel:
    layers: list[DenseLayer]

    @property
    def dtype(self) -> np.dtype:
        return self.layers[0].weights.dtype

    @property
    def dims(self) -> tuple[int, ...]:
        return (self.layers[0].in_dim,) + tuple(l.out_dim for l in self.layers)

    def astype(self, dtype) -> "MLPModel":
        return MLPModel(
            layers=[
                DenseLayer(l.weights.astype(dtype), l.bias.astype(dtype))
                for l in self.layers
            ]
        )

    def copy(self) -> "MLPModel":
        return self.astype(self.dtype)

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, MLPModel):
            return NotImplemented
        return len(self.layers) == len(other.layers) and all(
            np.array_equal(a.weights, b.weights) and np.array_equal(a.bias, b.bias)
            for a, b in zip(self.layers, other.layers)
        )


@dataclass
class AdamState:
    """First/second moment estimates, one pair per parameter tensor."""

    m: list[np.ndarray]
    v: list[np.ndarray]
    t: int = 0
    beta1: float = 0.9
    beta2: float = 0.999
    epsilon: float = 1e-8
    learning_rate: float = 5e-6

    @classmethod
    def init_like(cls, model: MLPModel, learning_rate: float = 5e-6) -> "AdamState":
        m = [np.zeros_like(p) for p in _parameters(model)]
        v = [np.zeros_like(p) for p in _parameters(model)]
        return cls(m=m, v=v, learning_rate=learning_rate)


@dataclass
class TrainConfig:
    task: Task
    epochs: int | None = None  # None -> per-task default (3 rating, 10 disagreement)
    batch_size: int = 32
    seed: int = 42
    learning_rate: float = 5e-6

    def __post_init__(self) -> None:
        if self.batch_size < 1:
            raise ValueError("batch_size must be >= 1")
        if self.epochs is not None and self.epochs < 0:
            raise ValueError("epochs must be non-negative")

    @property
    def resolved_epochs(self) -> int:
        return self.task.default_epochs if self.epochs is None else self.epochs


@dataclass
class ForwardCache:
    """Intermediate activations for one forward call."""

    model: MLPModel
    x: np.ndarray
    z1: np.ndarray
    a1: np.ndarray
    z2: np.ndarray
    a2: np.ndarray
    probs: np.ndarray  # raw sigmoid outputs, before loss clamping


@dataclass
class Checkpoint:
    model: MLPModel
    config: TrainConfig
    trace: list[float]
    version: int = CHECKPOINT_VERSION


def _parameters(model: MLPModel) -> list[np.ndarray]:
    out = []
    for layer in model.layers:
        out.append(layer.weights)
        out.append(layer.bias)
    return out


def init_model(seed: int, dims: Sequence[int] = ARCHITECTURE) -> MLPModel:
    """Uniform fan-in initialization, biases zero, reproducible per seed.

    Weights are drawn from U(-sqrt(6/fan_in), +sqrt(6/fan_in)).
    """
    rng = np.random.default_rng(seed)
    layers = []
    for fan_in, fan_out in zip(dims[:-1], dims[1:]):
        bound = np.sqrt(6.0 / fan_in)
        weights = rng.uniform(-bound, bound, size=(fan_out, fan_in)).astype(np.float32)
        bias = np.zeros(fan_out, dtype=np.float32)
        layers.append(DenseLayer(weights=weights, bias=bias))
    return MLPModel(layers=layers)


def _sigmoid(z: np.ndarray) -> np.ndarray:
    # Split by sign to stay overflow-free in float32.
    out = np.empty_like(z)
    positive = z >= 0
    out[positive] = 1.0 / (1.0 + np.exp(-z[positive]))
    ez = np.exp(z[~positive])
    out[~positive] = ez / (1.0 + ez)
    return out


def forward(model: MLPModel, x: np.ndarray) -> tuple[np.ndarray, ForwardCache]:
    """Per-class probabilities in (0, 1) plus the cache backprop needs.

    Accepts a single 3072-vector or an (N, 3072) batch; the output mirrors
    the input's leading shape.
    """
    arr = np.asarray(x, dtype=model.dtype)
    single = arr.ndim == 1
    if single:
        arr = arr[np.newaxis, :]
    if arr.ndim != 2 or arr.shape[1] != model.layers[0].in_dim:
        raise DimMismatchError(
            model.layers[0].in_dim,
            int(arr.shape[-1]) if arr.ndim else -1,
            where="forward input",
        )
    if not np.all(np.isfinite(arr)):
        raise NonFiniteInputError("forward input contains NaN or Inf")

    l1, l2, l3 = model.layers
    z1 = arr @ l1.weights.T + l1.bias
    a1 = np.maximum(z1, 0)
    z2 = a1 @ l2.weights.T + l2.bias
    a2 = np.maximum(z2, 0)
    z3 = a2 @ l3.weights.T + l3.bias
    probs = _sigmoid(z3)
    cache = ForwardCache(model=model, x=arr, z1=z1, a1=a1, z2=z2, a2=a2, probs=probs)
    return (probs[0] if single else probs), cache


def bce_loss(probs: np.ndarray, targets: np.ndarray) -> float:
    """Mean over batch and classes of -[y ln p + (1-y) ln(1-p)].

    Probabilities are clamped to [1e-7, 1 - 1e-7] before the logs; the
    scalar is accumulated in float64.
    """
    p = np.asarray(probs, dtype=np.float64)
    y = np.asarray(targets, dtype=np.float64)
    if p.ndim == 1:
        p = p[np.newaxis, :]
    if y.ndim == 1:
        y = y[np.newaxis, :]
    if p.shape != y.shape:
        raise ShapeMismatchError(f"probs {p.shape} vs targets {y.shape}")
    p = np.clip(p, PROB_CLAMP, 1.0 - PROB_CLAMP)
    return float(np.mean(-(y * np.log(p) + (1.0 - y) * np.log1p(-p))))


def backward(
    model: MLPModel, cache: ForwardCache, targets: np.ndarray
) -> list[np.ndarray]:
    """Analytic gradients of the clamped BCE mean, shaped like parameters.

    Returns [dW1, db1, dW2, db2, dW3, db3]. The cache must come from a
    forward call on this same model instance.
    """
    if cache.model is not model:
        raise StaleCacheError("cache was produced by a different model")
    y = np.asarray(targets, dtype=model.dtype)
    if y.ndim == 1:
        y = y[np.newaxis, :]
    if y.shape != cache.probs.shape:
        raise ShapeMismatchError(f"targets {y.shape} vs probs {cache.probs.shape}")

    n, k = cache.probs.shape
    p = cache.probs
    clamped = np.clip(p, PROB_CLAMP, 1.0 - PROB_CLAMP)
    inside = (p > PROB_CLAMP) & (p < 1.0 - PROB_CLAMP)
    # d(loss)/dz3 simplifies to (p - y)/(n*k) where the clamp is inactive
    # and is exactly zero where it clamps (the loss is flat in z there).
    g_z3 = np.where(inside, clamped - y, 0.0).astype(model.dtype) / np.asarray(
        n * k, dtype=model.dtype
    )

    l1, l2, l3 = model.layers
    g_w3 = g_z3.T @ cache.a2
    g_b3 = g_z3.sum(axis=0)
    g_a2 = g_z3 @ l3.weights
    g_z2 = g_a2 * (cache.z2 > 0)
    g_w2 = g_z2.T @ cache.a1
    g_b2 = g_z2.sum(axis=0)
    g_a1 = g_z2 @ l2.weights
    g_z1 = g_a1 * (cache.z1 > 0)
    g_w1 = g_z1.T @ cache.x
    g_b1 = g_z1.sum(axis=0)
    return [g_w1, g_b1, g_w2, g_b2, g_w3, g_b3]


def adam_step(
    model: MLPModel, grads: Sequence[np.ndarray], state: AdamState
) -> tuple[MLPModel, AdamState]:
    """Bias-corrected Adam update, applied in place; returns both for chaining."""
    params = _parameters(model)
    if len(grads) != len(params):
        raise ShapeMismatchError(
            f"{len(grads)} gradient tensors for {len(params)} parameters"
        )
    state.t += 1
    b1 = np.asarray(state.beta1, dtype=model.dtype)
    b2 = np.asarray(state.beta2, dtype=model.dtype)
    one = np.asarray(1.0, dtype=model.dtype)
    lr = np.asarray(state.learning_rate, dtype=model.dtype)
    eps = np.asarray(state.epsilon, dtype=model.dtype)
    bc1 = one - b1 ** state.t
    bc2 = one - b2 ** state.t
    for param, grad, m, v in zip(params, grads, state.m, state.v):
        if grad.shape != param.shape:
            raise ShapeMismatchError(f"gradient {grad.shape} vs param {param.shape}")
        g = grad.astype(model.dtype, copy=False)
        m *= b1
        m += (one - b1) * g
        v *= b2
        v += (one - b2) * np.square(g)
        m_hat = m / bc1
        v_hat = v / bc2
        param -= lr * m_hat / (np.sqrt(v_hat) + eps)
    return model, state


def one_hot(labels: np.ndarray, num_classes: int = NUM_CLASSES) -> np.ndarray:
    labels = np.asarray(labels, dtype=np.int64)
    out = np.zeros((labels.shape[0], num_classes), dtype=np.float32)
    out[np.arange(labels.shape[0]), labels] = 1.0
    return out


def train(
    config: TrainConfig, features: FeatureMatrix
) -> tuple[MLPModel, list[float]]:
    """Mini-batch training with a seeded shuffle; one mean loss per epoch.

    The same (config, features) always produces the same model and trace.
    """
    if features.task is not config.task:
        raise ValueError(
            f"matrix is labeled for {features.task.value!r}, "
            f"config wants {config.task.value!r}"
        )
    n = len(features)
    if n == 0:
        raise EmptyDatasetError("no rows to train on")
    x_all = features.features
    y_all = one_hot(features.labels)

    model = init_model(config.seed)
    state = AdamState.init_like(model, learning_rate=config.learning_rate)
    rng = np.random.default_rng(config.seed)
    trace: list[float] = []
    for epoch in range(config.resolved_epochs):
        order = rng.permutation(n)
        total = 0.0
        for start in range(0, n, config.batch_size):
            batch = order[start:start + config.batch_size]
            probs, cache = forward(model, x_all[batch])
            loss = bce_loss(probs, y_all[batch])
            if not np.isfinite(loss):
                raise NonFiniteLossError(
                    f"non-finite loss at epoch {epoch + 1}, "
                    f"batch starting at {start} (lr={config.learning_rate})"
                )
            total += loss * len(batch)
            grads = backward(model, cache, y_all[batch])
            adam_step(model, grads, state)
        trace.append(total / n)
    return model, trace


def predict_classes(model: MLPModel, x: np.ndarray) -> np.ndarray:
    """Argmax class indices; ties resolve to the lowest index."""
    probs, _ = forward(model, x)
    if probs.ndim == 1:
        probs = probs[np.newaxis, :]
    return np.argmax(probs, axis=1)


def predict(model: MLPModel, features: FeatureMatrix) -> list[int]:
    """Predicted labels on the task's natural scale, one per row."""
    classes = predict_classes(model, features.features)
    return [features.task.to_label(int(c)) for c in classes]


# Checkpoint container, little-endian:
#   magic 'MLPC' | u32 version | u32 layer count | per layer: u32 out, u32 in
#   | per layer: weights f32 row-major, bias f32
#   | u8 task | i64 epochs | u32 batch_size | i64 seed | f64 learning rate
#   | u64 trace length | f64 per entry

_TASK_CODES = {Task.RATING: 0, Task.DISAGREEMENT: 1}
_TASK_FROM_CODE = {code: task for task, code in _TASK_CODES.items()}


def save_checkpoint(
    model: MLPModel,
    config: TrainConfig,
    trace: Sequence[float],
    path: str | Path,
) -> None:
    path = Path(path)
    with path.open("wb") as handle:
        handle.write(CHECKPOINT_MAGIC)
        handle.write(struct.pack("<II", CHECKPOINT_VERSION, len(model.layers)))
        for layer in model.layers:
            handle.write(struct.pack("<II", layer.out_dim, layer.in_dim))
        for layer in model.layers:
            handle.write(layer.weights.astype("<f4", copy=False).tobytes(order="C"))
            handle.write(layer.bias.astype("<f4", copy=False).tobytes())
        handle.write(
            struct.pack(
                "<BqIqd",
                _TASK_CODES[config.task],
                config.resolved_epochs,
                config.batch_size,
                config.seed,
                config.learning_rate,
            )
        )
        handle.write(struct.pack("<Q", len(trace)))
        handle.write(np.asarray(trace, dtype="<f8").tobytes())


def _read_exact(handle, size: int, what: str) -> bytes:
    data = handle.read(size)
    if len(data) < size:
        raise TruncatedFileError(f"checkpoint truncated while reading {what}")
    return data


def load_checkpoint(
    path: str | Path,
    expect_architecture: Sequence[int] | None = ARCHITECTURE,
) -> Checkpoint:
    """Read a checkpoint back; save -> load is a bitwise identity.

    By default the stored layer dimensions must equal the fixed
    architecture; pass ``expect_architecture=None`` to accept any.
    """
    path = Path(path)
    with path.open("rb") as handle:
        magic = _read_exact(handle, 4, "magic")
        if magic != CHECKPOINT_MAGIC:
            raise BadMagicError(f"{path}: bad magic {magic!r}")
        version, n_layers = struct.unpack("<II", _read_exact(handle, 8, "header"))
        if version != CHECKPOINT_VERSION:
            raise VersionMismatchError(f"{path}: unsupported version {version}")
        shapes = [
            struct.unpack("<II", _read_exact(handle, 8, f"layer {i} dims"))
            for i in range(n_layers)
        ]
        dims = (shapes[0][1],) + tuple(out for out, _ in shapes)
        if expect_architecture is not None and dims != tuple(expect_architecture):
            raise ArchitectureMismatchError(
                f"{path}: dims {dims} do not match {tuple(expect_architecture)}"
            )
        for (out_dim, in_dim), (prev_out, _) in zip(shapes[1:], shapes[:-1]):
            if in_dim != prev_out:
                raise FormatError(
                    f"{path}: layer input {in_dim} does not chain from {prev_out}"
                )
        layers = []
        for out_dim, in_dim in shapes:
            w_raw = _read_exact(handle, out_dim * in_dim * 4, "weights")
            b_raw = _read_exact(handle, out_dim * 4, "bias")
            weights = np.frombuffer(w_raw, dtype="<f4").reshape(out_dim, in_dim)
            bias = np.frombuffer(b_raw, dtype="<f4")
            layers.append(
                DenseLayer(weights.astype(np.float32), bias.astype(np.float32))
            )
        task_code, epochs, batch_size, seed, lr = struct.unpack(
            "<BqIqd", _read_exact(handle, 29, "config")
        )
        if task_code not in _TASK_FROM_CODE:
            raise FormatError(f"{path}: unknown task code {task_code}")
        (trace_len,) = struct.unpack("<Q", _read_exact(handle, 8, "trace length"))
        trace_raw = _read_exact(handle, trace_len * 8, "trace")
        trace = [float(v) for v in np.frombuffer(trace_raw, dtype="<f8")]
        if handle.read(1):
            raise FormatError(f"{path}: trailing bytes after trace")
    config = TrainConfig(
        task=_TASK_FROM_CODE[task_code],
        epochs=int(epochs),
        batch_size=int(batch_size),
        seed=int(seed),
        learning_rate=float(lr),
    )
    return Checkpoint(
        model=MLPModel(layers=layers), config=config, trace=trace, version=version
    )
