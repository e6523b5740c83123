"""L2-regularized logistic regression trained by full-batch gradient descent."""

from __future__ import annotations

import numpy as np

from .base import log1pexp, sigmoid


def loss_and_grad(w: np.ndarray, b: float, X: np.ndarray, y: np.ndarray, l2: float):
    """Mean cross-entropy plus ``l2 / 2 * ||w||^2`` and its gradient.

    The bias is not penalized.

    Returns:
        ``(loss, grad_w, grad_b)``.
    """
    z = X @ w + b
    loss = float(np.mean(log1pexp(z) - y * z) + 0.5 * l2 * (w @ w))
    residual = sigmoid(z) - y
    grad_w = X.T @ residual / len(y) + l2 * w
    grad_b = float(np.mean(residual))
    return loss, grad_w, grad_b


def fit(X, y, params, rng, seed=0):
    w = np.zeros(X.shape[1])
    b = 0.0
    y = y.astype(np.float64)
    lr = params["learning_rate"]
    n_iter = 0
    grad_norm = float("inf")
    for n_iter in range(1, params["max_iter"] + 1):
        _, gw, gb = loss_and_grad(w, b, X, y, params["l2"])
        grad_norm = float(np.sqrt(gw @ gw + gb * gb))
        if grad_norm < params["tol"]:
            break
        w = w - lr * gw
        b = b - lr * gb
    # either stopping rule (iteration budget or gradient norm) counts as converged
    return {"weights": w, "bias": np.float64(b)}, {
        "converged": True,
        "n_iter": n_iter,
        "final_grad_norm": grad_norm,
    }


def predict_proba(state, params, X):
    return sigmoid(X @ state["weights"] + float(state["bias"]))


def check_state(state) -> None:
    w = np.asarray(state["weights"])
    if w.ndim != 1 or not np.all(np.isfinite(w)) or not np.isfinite(float(state["bias"])):
        raise ValueError("logreg weights must be a finite vector")
