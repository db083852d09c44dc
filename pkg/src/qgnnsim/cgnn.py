"""Classical interaction network.

Encoders (MLP 8->8->9 for nodes, 4->4->5 for edges), then per processor one
edge network phi_R (23->5) and one node network phi_O (14->9), then a linear
decoder 9->2 applied per node. All hidden layers are affine -> layer norm ->
ReLU. Gradients are computed by hand in :func:`loss_and_grad`.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .exceptions import ShapeError

LN_EPS = 1e-5
NODE_LATENT = 9
EDGE_LATENT = 5

# (prefix, fan_in, fan_out, normalise+relu)
ENCODER_LAYERS = (
    ("node_encoder.0", 8, 8, True),
    ("node_encoder.1", 8, NODE_LATENT, True),
    ("edge_encoder.0", 4, 4, True),
    ("edge_encoder.1", 4, EDGE_LATENT, True),
)


def _processor_layers(k):
    return (
        (f"processor.{k}.phi_R", 2 * NODE_LATENT + EDGE_LATENT, EDGE_LATENT, True),
        (f"processor.{k}.phi_O", NODE_LATENT + EDGE_LATENT, NODE_LATENT, True),
    )


DECODER_LAYER = ("decoder", NODE_LATENT, 2, False)


def layer_table(processors):
    if processors not in (1, 2):
        raise ValueError("processors must be 1 or 2")
    table = list(ENCODER_LAYERS)
    for k in range(processors):
        table += _processor_layers(k)
    return table + [DECODER_LAYER]


def param_spec(processors=1):
    spec = []
    for prefix, fan_in, fan_out, norm in layer_table(processors):
        spec += [(f"{prefix}.W", (fan_out, fan_in)), (f"{prefix}.b", (fan_out,))]
        if norm:
            spec += [(f"{prefix}.gain", (fan_out,)), (f"{prefix}.shift", (fan_out,))]
    return spec


def init_params(processors=1, rng=None):
    rng = np.random.default_rng(rng)
    params = {}
    for prefix, fan_in, fan_out, norm in layer_table(processors):
        bound = np.sqrt(1.0 / fan_in)
        params[f"{prefix}.W"] = rng.uniform(-bound, bound, size=(fan_out, fan_in))
        params[f"{prefix}.b"] = np.zeros(fan_out)
        if norm:
            params[f"{prefix}.gain"] = np.ones(fan_out)
            params[f"{prefix}.shift"] = np.zeros(fan_out)
    return params


@dataclass
class DenseLayer:
    weights: np.ndarray
    bias: np.ndarray
    has_layer_norm: bool = False
    gain: np.ndarray | None = None
    shift: np.ndarray | None = None
    has_relu: bool = False

    def __post_init__(self):
        out, _ = self.weights.shape
        if self.bias.shape != (out,):
            raise ShapeError("bias length must match layer output")
        if self.has_layer_norm:
            if self.gain is None:
                self.gain = np.ones(out)
            if self.shift is None:
                self.shift = np.zeros(out)
            if self.gain.shape != (out,) or self.shift.shape != (out,):
                raise ShapeError("layer-norm gain/shift must match layer output")

    @property
    def fan_in(self):
        return self.weights.shape[1]

    @classmethod
    def from_params(cls, params, prefix, norm):
        return cls(
            params[f"{prefix}.W"],
            params[f"{prefix}.b"],
            norm,
            params.get(f"{prefix}.gain"),
            params.get(f"{prefix}.shift"),
            norm,
        )


def layer_norm(Z, eps=LN_EPS):
    """Normalise each column over the feature axis; returns (normalised, 1/std)."""
    mu = Z.mean(axis=0, keepdims=True)
    var = Z.var(axis=0, keepdims=True)
    inv = 1.0 / np.sqrt(var + eps)
    return (Z - mu) * inv, inv


def _dense_forward(layer: DenseLayer, X):
    if X.shape[0] != layer.fan_in:
        raise ShapeError(f"layer expects {layer.fan_in} inputs, got {X.shape[0]}")
    Z = layer.weights @ X + layer.bias[:, None]
    cache = {"X": X}
    Y = Z
    if layer.has_layer_norm:
        Xh, inv = layer_norm(Z)
        cache.update(Xh=Xh, inv=inv)
        Y = layer.gain[:, None] * Xh + layer.shift[:, None]
    if layer.has_relu:
        cache["mask"] = Y > 0
        Y = np.where(cache["mask"], Y, 0.0)
    return Y, cache


def _dense_backward(layer: DenseLayer, cache, dY):
    grads = {}
    if layer.has_relu:
        dY = dY * cache["mask"]
    dZ = dY
    if layer.has_layer_norm:
        Xh, inv = cache["Xh"], cache["inv"]
        grads["gain"] = (dY * Xh).sum(axis=1)
        grads["shift"] = dY.sum(axis=1)
        dXh = dY * layer.gain[:, None]
        F = Xh.shape[0]
        dZ = inv / F * (F * dXh - dXh.sum(axis=0, keepdims=True) - Xh * (dXh * Xh).sum(axis=0, keepdims=True))
    grads["W"] = dZ @ cache["X"].T
    grads["b"] = dZ.sum(axis=1)
    return layer.weights.T @ dZ, grads


def mlp_forward(layers, x):
    """Apply ``layers`` in order to a vector (or to each column of a matrix)."""
    x = np.asarray(x, dtype=float)
    X = x[:, None] if x.ndim == 1 else x
    for layer in layers:
        X, _ = _dense_forward(layer, X)
    return X[:, 0] if x.ndim == 1 else X


def _check(name, M, shape):
    if M.shape != shape:
        raise ShapeError(f"{name} has shape {M.shape}, expected {shape}")


def marshall_m(O, Er, Es, Ra):
    """Stack receiver-gathered nodes, sender-gathered nodes and edge states."""
    n_nodes = O.shape[1]
    ne = Er.shape[1]
    _check("Er", Er, (n_nodes, ne))
    _check("Es", Es, (n_nodes, ne))
    if Ra.shape[1] != ne:
        raise ShapeError("edge states and relation matrices disagree on edge count")
    return np.vstack([O @ Er, O @ Es, Ra])


def edge_update(B, phi_R: DenseLayer):
    return mlp_forward([phi_R], B)


def aggregate(E, Er):
    """Sum edge effects into their receiver nodes."""
    if E.shape[1] != Er.shape[1]:
        raise ShapeError("edge effects and receiver matrix disagree on edge count")
    return E @ Er.T


def node_update(O, Ebar, phi_O: DenseLayer):
    if O.shape[1] != Ebar.shape[1]:
        raise ShapeError("node states and aggregated effects disagree on node count")
    return mlp_forward([phi_O], np.vstack([O, Ebar]))


def _layers(params, processors):
    return {prefix: DenseLayer.from_params(params, prefix, norm) for prefix, _, _, norm in layer_table(processors)}


def _forward(sample, params, processors):
    layers = _layers(params, processors)
    tape = []

    def run(prefix, X):
        Y, cache = _dense_forward(layers[prefix], X)
        tape.append((prefix, cache))
        return Y

    O = run("node_encoder.1", run("node_encoder.0", sample.N))
    R = run("edge_encoder.1", run("edge_encoder.0", sample.Ea_padded))
    for k in range(processors):
        B = marshall_m(O, sample.Er, sample.Es, R)
        E = run(f"processor.{k}.phi_R", B)
        Ebar = aggregate(E, sample.Er)
        O = run(f"processor.{k}.phi_O", np.vstack([O, Ebar]))
        R = E
    return run("decoder", O), layers, tape


def cgnn_forward(sample, params, processors=1):
    """2 x n predicted (normalised) accelerations."""
    return _forward(sample, params, processors)[0]


forward = cgnn_forward


def forward_batch(samples, params, processors=1):
    return np.stack([cgnn_forward(s, params, processors) for s in samples])


def _backward(sample, layers, tape, dout, processors):
    grads = {}
    caches = dict(tape)

    def back(prefix, dY):
        dX, g = _dense_backward(layers[prefix], caches[prefix], dY)
        for key, value in g.items():
            name = f"{prefix}.{key}"
            grads[name] = grads.get(name, 0.0) + value
        return dX

    Er, Es = sample.Er, sample.Es
    dO = back("decoder", dout)
    dR = None
    for k in reversed(range(processors)):
        dC = back(f"processor.{k}.phi_O", dO)
        dO = dC[:NODE_LATENT]
        dE = dC[NODE_LATENT:] @ Er
        if dR is not None:
            dE = dE + dR
        dB = back(f"processor.{k}.phi_R", dE)
        dO = dO + dB[:NODE_LATENT] @ Er.T + dB[NODE_LATENT:2 * NODE_LATENT] @ Es.T
        dR = dB[2 * NODE_LATENT:]
    back("node_encoder.0", back("node_encoder.1", dO))
    back("edge_encoder.0", back("edge_encoder.1", dR))
    return grads


def loss_and_grad(samples, params, processors=1):
    """Mean per-sample MSE over ``samples`` and its gradient (dict like ``params``)."""
    total = 0.0
    grads = {name: np.zeros_like(value) for name, value in params.items()}
    for sample in samples:
        pred, layers, tape = _forward(sample, params, processors)
        diff = pred - sample.target
        total += float(np.mean(diff ** 2))
        g = _backward(sample, layers, tape, 2.0 * diff / diff.size, processors)
        for name, value in g.items():
            grads[name] += value
    n = len(samples)
    return total / n, {name: value / n for name, value in grads.items()}
