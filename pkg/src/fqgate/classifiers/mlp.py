"""Small fully connected network: tanh hidden layers, sigmoid output, cross-entropy loss."""

from __future__ import annotations

import numpy as np

from .base import log1pexp, sigmoid


def init_params(sizes: list[int], rng: np.random.Generator, init_scale: float = 0.5):
    """Weights and biases drawn uniformly from ``[-init_scale, init_scale]``."""
    weights, biases = [], []
    for fan_in, fan_out in zip(sizes[:-1], sizes[1:]):
        weights.append(rng.uniform(-init_scale, init_scale, size=(fan_in, fan_out)))
        biases.append(rng.uniform(-init_scale, init_scale, size=fan_out))
    return weights, biases


def forward(weights, biases, X):
    """Return the activations of every layer; the last entry is the output logit."""
    acts = [X]
    h = X
    for W, b in zip(weights[:-1], biases[:-1]):
        h = np.tanh(h @ W + b)
        acts.append(h)
    acts.append(h @ weights[-1] + biases[-1])
    return acts


def loss_and_grads(weights, biases, X, y):
    """Mean binary cross-entropy and its gradients by backpropagation.

    Returns:
        ``(loss, grad_weights, grad_biases)`` with gradients shaped like the
        parameters.
    """
    n = len(y)
    acts = forward(weights, biases, X)
    logit = acts[-1][:, 0]
    loss = float(np.mean(log1pexp(logit) - y * logit))

    delta = ((sigmoid(logit) - y) / n)[:, None]
    grad_w = [None] * len(weights)
    grad_b = [None] * len(biases)
    for layer in range(len(weights) - 1, -1, -1):
        grad_w[layer] = acts[layer].T @ delta
        grad_b[layer] = delta.sum(axis=0)
        if layer > 0:
            delta = (delta @ weights[layer].T) * (1.0 - acts[layer] ** 2)
    return loss, grad_w, grad_b


def fit(X, y, params, rng, seed=0):
    sizes = [X.shape[1], *params["hidden"], 1]
    weights, biases = init_params(sizes, rng, params["init_scale"])
    y = y.astype(np.float64)
    lr = params["learning_rate"]
    best = None
    converged = True
    loss = float("nan")
    for epoch in range(params["epochs"]):
        loss, gw, gb = loss_and_grads(weights, biases, X, y)
        if not np.isfinite(loss):
            converged = False
            break
        if best is None or loss < best[0]:
            best = (loss, [w.copy() for w in weights], [b.copy() for b in biases])
        weights = [w - lr * g for w, g in zip(weights, gw)]
        biases = [b - lr * g for b, g in zip(biases, gb)]
    else:
        final_loss = loss_and_grads(weights, biases, X, y)[0]
        if np.isfinite(final_loss):
            loss = final_loss
        else:
            converged = False
    if not converged and best is not None:
        loss, weights, biases = best
    state = {f"W{i}": w for i, w in enumerate(weights)}
    state.update({f"b{i}": b for i, b in enumerate(biases)})
    return state, {"converged": converged, "final_loss": float(loss), "n_iter": int(params["epochs"])}


def unpack(state):
    n_layers = sum(1 for k in state if k.startswith("W"))
    return [state[f"W{i}"] for i in range(n_layers)], [state[f"b{i}"] for i in range(n_layers)]


def predict_proba(state, params, X):
    weights, biases = unpack(state)
    return sigmoid(forward(weights, biases, X)[-1][:, 0])


def check_state(state) -> None:
    weights, biases = unpack(state)
    if not weights:
        raise ValueError("mlp has no layers")
    width = weights[0].shape[0]
    for W, b in zip(weights, biases):
        if W.ndim != 2 or W.shape[0] != width or b.shape != (W.shape[1],):
            raise ValueError("mlp layer shapes are inconsistent")
        if not (np.all(np.isfinite(W)) and np.all(np.isfinite(b))):
            raise ValueError("mlp parameters must be finite")
        width = W.shape[1]
    if width != 1:
        raise ValueError("mlp output layer must have one unit")
