"""From-scratch dense feed-forward network with manual backpropagation.

Hidden layers are affine + ReLU. The output layer is affine followed by a
task-specific head:

* ``unit_norm``      -- rescale the output to a fixed Euclidean norm, used
                        when reconstructing pure states (norm 1, sqrt(3),
                        sqrt(7) for 1, 2, 3 qubits);
* ``purity_rescale`` -- rescale to the norm implied by a target purity,
                        used for mixed states. Mode ``exact_norm`` uses
                        sqrt(2^n * purity - 1) (the norm a state of that
                        purity actually has); mode ``sqrt_purity`` uses the simpler
                        sqrt(purity);
* ``softmax``        -- probability vector for classification;
* ``linear``         -- no head.

Losses: batch-mean squared error, batch-mean infidelity in Bloch form
(pure or mixed variant), and categorical cross-entropy (summed over the
batch). Gradients are exact reverse-mode derivatives, including the
normalization-head Jacobian c*(I/||y|| - y y^T/||y||^3). Training uses
Adam with bias correction.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .qstate import num_qubits_from_bloch_len

MSE = "mse"
INFIDELITY_PURE = "infidelity_pure"
INFIDELITY_MIXED = "infidelity_mixed"
CCE = "cce"

LOSS_KINDS = (MSE, INFIDELITY_PURE, INFIDELITY_MIXED, CCE)

_NORM_EPS = 1e-12


@dataclass
class Head:
    kind: str  # "unit_norm" | "purity_rescale" | "softmax" | "linear"
    target_norm: float = 1.0
    target_purity: float = 1.0
    mode: str = "exact_norm"  # purity_rescale only: "exact_norm" | "sqrt_purity"

    def __post_init__(self):
        if self.kind not in ("unit_norm", "purity_rescale", "softmax", "linear"):
            raise ValueError(f"unknown head kind {self.kind!r}")
        if self.kind == "unit_norm" and self.target_norm <= 0:
            raise ValueError("target_norm must be positive")
        if self.kind == "purity_rescale" and self.mode not in ("exact_norm", "sqrt_purity"):
            raise ValueError(f"unknown purity_rescale mode {self.mode!r}")


@dataclass
class MlpModel:
    layer_dims: list
    weights: list  # W[k] of shape (fan_in, fan_out)
    biases: list
    head: Head
    meta: dict = field(default_factory=dict)

    @property
    def input_dim(self):
        return self.layer_dims[0]

    @property
    def output_dim(self):
        return self.layer_dims[-1]

    def num_params(self):
        return sum(w.size for w in self.weights) + sum(b.size for b in self.biases)


def init_model(layer_dims, head, rng):
    """Glorot-uniform weights, zero biases."""
    if any(d <= 0 for d in layer_dims):
        raise ValueError("layer dimensions must be positive")
    weights, biases = [], []
    for fan_in, fan_out in zip(layer_dims[:-1], layer_dims[1:]):
        bound = np.sqrt(6.0 / (fan_in + fan_out))
        weights.append(rng.uniform(-bound, bound, size=(fan_in, fan_out)))
        biases.append(np.zeros(fan_out))
    return MlpModel(list(layer_dims), weights, biases, head)


def _head_scale(model, batch_size, purities):
    """Per-sample target norm c for the normalization heads."""
    head = model.head
    if head.kind == "unit_norm":
        return np.full(batch_size, head.target_norm)
    n = num_qubits_from_bloch_len(model.output_dim)
    p = np.full(batch_size, head.target_purity) if purities is None else np.asarray(purities, dtype=float)
    if head.mode == "exact_norm":
        return np.sqrt(np.clip(2**n * p - 1.0, 0.0, None))
    return np.sqrt(p)


def _forward_cached(model, x, purities=None):
    x = np.atleast_2d(np.asarray(x, dtype=float))
    if x.shape[1] != model.input_dim:
        raise ValueError(
            f"input width {x.shape[1]} does not match model input {model.input_dim}"
        )
    a = x
    acts = [x]  # layer inputs
    preacts = []
    for w, b in zip(model.weights[:-1], model.biases[:-1]):
        z = a @ w + b
        preacts.append(z)
        a = np.maximum(z, 0.0)
        acts.append(a)
    y_lin = a @ model.weights[-1] + model.biases[-1]

    head = model.head
    cache = {"acts": acts, "preacts": preacts, "y_lin": y_lin}
    if head.kind == "linear":
        y = y_lin
    elif head.kind == "softmax":
        shifted = y_lin - y_lin.max(axis=1, keepdims=True)
        exps = np.exp(shifted)
        y = exps / exps.sum(axis=1, keepdims=True)
    else:
        norms = np.linalg.norm(y_lin, axis=1)
        if np.any(norms < _NORM_EPS):
            raise FloatingPointError("degenerate pre-normalization output")
        scale = _head_scale(model, x.shape[0], purities)
        y = y_lin * (scale / norms)[:, None]
        cache["norms"] = norms
        cache["scale"] = scale
    cache["y"] = y
    return cache


def forward(model, x, purities=None):
    """Network output for a single input vector or a (B, d) batch."""
    single = np.asarray(x).ndim == 1
    y = _forward_cached(model, x, purities)["y"]
    return y[0] if single else y


def predict_class(model, x):
    """Argmax class index; ties break toward the lowest index."""
    if model.head.kind != "softmax":
        raise ValueError("predict_class requires a softmax head")
    probs = forward(model, x)
    return int(np.argmax(probs)) if probs.ndim == 1 else np.argmax(probs, axis=1)


def loss_mse(pred, target):
    """Mean over the batch of squared Euclidean distances."""
    pred = np.atleast_2d(pred)
    target = np.atleast_2d(target)
    diff = pred - target
    return float(np.mean(np.sum(diff * diff, axis=1)))


def loss_infidelity(pred, target, kind):
    """Batch-mean infidelity 1 - F, with F in closed Bloch form.

    kind "infidelity_pure":  F = (1 + r.s) / 2^n
    kind "infidelity_mixed": F = |1 + r.s| / sqrt((1+||r||^2)(1+||s||^2))
    """
    pred = np.atleast_2d(np.asarray(pred, dtype=float))
    target = np.atleast_2d(np.asarray(target, dtype=float))
    dots = np.sum(pred * target, axis=1)
    if kind == INFIDELITY_PURE:
        n = num_qubits_from_bloch_len(pred.shape[1])
        fid = (1.0 + dots) / 2**n
    elif kind == INFIDELITY_MIXED:
        fid = np.abs(1.0 + dots) / np.sqrt(
            (1.0 + np.sum(target * target, axis=1)) * (1.0 + np.sum(pred * pred, axis=1))
        )
    else:
        raise ValueError(f"not an infidelity loss: {kind!r}")
    return float(np.mean(1.0 - fid))


def loss_cce(probs, labels, num_classes=None):
    """Categorical cross-entropy, summed over the batch.

    `labels` may be integer class indices or one-hot rows. Probabilities
    are clipped to [1e-12, 1] before the log.
    """
    probs = np.atleast_2d(np.asarray(probs, dtype=float))
    onehot = _as_onehot(labels, num_classes or probs.shape[1])
    clipped = np.clip(probs, 1e-12, 1.0)
    return float(-np.sum(onehot * np.log(clipped)))


def _as_onehot(labels, num_classes):
    labels = np.asarray(labels)
    if labels.ndim == 2:
        return labels.astype(float)
    onehot = np.zeros((labels.shape[0], num_classes))
    onehot[np.arange(labels.shape[0]), labels.astype(int)] = 1.0
    return onehot


def loss_value(model, x, target, loss_kind, purities=None):
    """Loss of the model on a batch, without gradients."""
    y = forward(model, np.atleast_2d(x), purities)
    if loss_kind == MSE:
        return loss_mse(y, target)
    if loss_kind in (INFIDELITY_PURE, INFIDELITY_MIXED):
        return loss_infidelity(y, target, loss_kind)
    if loss_kind == CCE:
        return loss_cce(y, target, model.output_dim)
    raise ValueError(f"unknown loss kind {loss_kind!r}")


def backward(model, x, target, loss_kind, purities=None):
    """Loss and exact gradients d loss / d (weights, biases) on a batch.

    Returns (loss, grads_w, grads_b) with grads shaped like the model
    parameters. ReLU subgradient at 0 is taken as 0.
    """
    if loss_kind not in LOSS_KINDS:
        raise ValueError(f"unknown loss kind {loss_kind!r}")
    head = model.head
    if loss_kind == CCE and head.kind != "softmax":
        raise ValueError("cross-entropy requires a softmax head")
    if loss_kind != CCE and head.kind == "softmax":
        raise ValueError("softmax head requires the cross-entropy loss")

    cache = _forward_cached(model, x, purities)
    y = cache["y"]
    y_lin = cache["y_lin"]
    batch = y.shape[0]

    if loss_kind == CCE:
        onehot = _as_onehot(target, model.output_dim)
        loss = loss_cce(y, onehot)
        # Fused softmax + cross-entropy gradient w.r.t. the logits.
        g_lin = y - onehot
    else:
        target = np.atleast_2d(np.asarray(target, dtype=float))
        if loss_kind == MSE:
            loss = loss_mse(y, target)
            g = 2.0 * (y - target) / batch
        elif loss_kind == INFIDELITY_PURE:
            loss = loss_infidelity(y, target, loss_kind)
            n = num_qubits_from_bloch_len(model.output_dim)
            g = -target / (batch * 2**n)
        else:  # INFIDELITY_MIXED
            loss = loss_infidelity(y, target, loss_kind)
            u = 1.0 + np.sum(y * target, axis=1)
            a = np.sqrt(1.0 + np.sum(target * target, axis=1))
            b = np.sqrt(1.0 + np.sum(y * y, axis=1))
            # dF/dy = sign(u) t / (a b) - |u| y / (a b^3)
            g = -(
                (np.sign(u) / (a * b))[:, None] * target
                - (np.abs(u) / (a * b**3))[:, None] * y
            ) / batch
        if head.kind == "linear":
            g_lin = g
        else:
            norms = cache["norms"]
            scale = cache["scale"]
            dots = np.sum(y_lin * g, axis=1)
            g_lin = (scale / norms)[:, None] * g - (scale * dots / norms**3)[:, None] * y_lin

    grads_w = [None] * len(model.weights)
    grads_b = [None] * len(model.biases)
    acts = cache["acts"]
    preacts = cache["preacts"]
    g_back = g_lin
    for k in range(len(model.weights) - 1, -1, -1):
        grads_w[k] = acts[k].T @ g_back
        grads_b[k] = g_back.sum(axis=0)
        if k > 0:
            g_back = (g_back @ model.weights[k].T) * (preacts[k - 1] > 0)
    return loss, grads_w, grads_b


@dataclass
class AdamState:
    m_w: list
    v_w: list
    m_b: list
    v_b: list
    t: int = 0
    lr: float = 1e-3
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8


def adam_init(model, lr=1e-3, beta1=0.9, beta2=0.999, eps=1e-8):
    return AdamState(
        m_w=[np.zeros_like(w) for w in model.weights],
        v_w=[np.zeros_like(w) for w in model.weights],
        m_b=[np.zeros_like(b) for b in model.biases],
        v_b=[np.zeros_like(b) for b in model.biases],
        lr=lr,
        beta1=beta1,
        beta2=beta2,
        eps=eps,
    )


def adam_step(state, model, grads_w, grads_b):
    """One Adam update with bias correction; mutates model and state."""
    state.t += 1
    b1, b2 = state.beta1, state.beta2
    corr1 = 1.0 - b1**state.t
    corr2 = 1.0 - b2**state.t
    for params, grads, ms, vs in (
        (model.weights, grads_w, state.m_w, state.v_w),
        (model.biases, grads_b, state.m_b, state.v_b),
    ):
        for k, g in enumerate(grads):
            ms[k] *= b1
            ms[k] += (1.0 - b1) * g
            vs[k] *= b2
            vs[k] += (1.0 - b2) * g * g
            params[k] -= state.lr * (ms[k] / corr1) / (np.sqrt(vs[k] / corr2) + state.eps)


def _fmt(x):
    return format(float(x), ".17g")


def save_model(model, path):
    """Versioned JSON model file, floats at 17 significant digits."""
    import json

    payload = {
        "version": 1,
        "layer_dims": list(model.layer_dims),
        "head": {
            "kind": model.head.kind,
            "target_norm": _fmt(model.head.target_norm),
            "target_purity": _fmt(model.head.target_purity),
            "mode": model.head.mode,
        },
        "meta": model.meta,
        "weights": [[[_fmt(v) for v in row] for row in w] for w in model.weights],
        "biases": [[_fmt(v) for v in b] for b in model.biases],
    }
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(payload, fh, sort_keys=True, separators=(",", ":"))
        fh.write("\n")


def load_model(path):
    import json

    with open(path, encoding="utf-8") as fh:
        payload = json.load(fh)
    if payload.get("version") != 1:
        raise ValueError(f"unsupported model file version {payload.get('version')}")
    head = Head(
        kind=payload["head"]["kind"],
        target_norm=float(payload["head"]["target_norm"]),
        target_purity=float(payload["head"]["target_purity"]),
        mode=payload["head"]["mode"],
    )
    weights = [np.array([[float(v) for v in row] for row in w]) for w in payload["weights"]]
    biases = [np.array([float(v) for v in b]) for b in payload["biases"]]
    return MlpModel(list(payload["layer_dims"]), weights, biases, head, dict(payload["meta"]))
