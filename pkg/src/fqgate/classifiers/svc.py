"""RBF support vector classifier trained by SMO, with Platt score calibration."""

from __future__ import annotations

import math

import numpy as np

from .base import sigmoid

TAU = 1e-12


def rbf_kernel(A: np.ndarray, B: np.ndarray, gamma: float) -> np.ndarray:
    sq = (A * A).sum(axis=1)[:, None] + (B * B).sum(axis=1)[None, :] - 2.0 * (A @ B.T)
    return np.exp(-gamma * np.maximum(sq, 0.0))


def smo(K: np.ndarray, y: np.ndarray, C: float, tol: float, max_iter: int):
    """Solve the soft-margin dual with sequential minimal optimization.

    Minimizes ``0.5 a'Qa - sum(a)`` with ``Q = yy' * K`` subject to
    ``0 <= a <= C`` and ``y'a = 0``. Each step optimizes the pair chosen by
    maximal violation (first index) and second-order gain (second index).
    Stops when the KKT gap ``m(a) - M(a)`` drops below ``tol``.

    Args:
        K: ``(n, n)`` kernel matrix.
        y: labels in {-1, +1}.

    Returns:
        ``(alpha, bias, n_iter, converged)``; the decision function is
        ``sum_j alpha_j y_j K(x_j, x) + bias``.
    """
    n = len(y)
    y = y.astype(np.float64)
    alpha = np.zeros(n)
    grad = -np.ones(n)
    diag = np.diag(K).copy()
    converged = False
    it = 0
    while it < max_iter:
        neg_yg = -y * grad
        up = ((y > 0) & (alpha < C)) | ((y < 0) & (alpha > 0))
        low = ((y > 0) & (alpha > 0)) | ((y < 0) & (alpha < C))
        if not up.any() or not low.any():
            converged = True
            break
        i = int(np.flatnonzero(up)[np.argmax(neg_yg[up])])
        g_max = neg_yg[i]
        g_min = neg_yg[low].min()
        if g_max - g_min < tol:
            converged = True
            break

        k_i = K[i]
        cand = low & (neg_yg < g_max)
        b = g_max - neg_yg
        a = diag[i] + diag - 2.0 * k_i
        a = np.where(a > 0, a, TAU)
        gain = np.where(cand, -(b * b) / a, np.inf)
        j = int(np.argmin(gain))

        it += 1
        old_i, old_j = alpha[i], alpha[j]
        k_ij = k_i[j]
        if y[i] != y[j]:
            quad = max(diag[i] + diag[j] + 2.0 * k_ij * y[i] * y[j], TAU)
            delta = (-grad[i] - grad[j]) / quad
            diff = alpha[i] - alpha[j]
            alpha[i] += delta
            alpha[j] += delta
            if diff > 0:
                if alpha[j] < 0:
                    alpha[j] = 0.0
                    alpha[i] = diff
            elif alpha[i] < 0:
                alpha[i] = 0.0
                alpha[j] = -diff
            if diff > 0:
                if alpha[i] > C:
                    alpha[i] = C
                    alpha[j] = C - diff
            elif alpha[j] > C:
                alpha[j] = C
                alpha[i] = C + diff
        else:
            quad = max(diag[i] + diag[j] - 2.0 * k_ij * y[i] * y[j], TAU)
            delta = (grad[i] - grad[j]) / quad
            total = alpha[i] + alpha[j]
            alpha[i] -= delta
            alpha[j] += delta
            if total > C:
                if alpha[i] > C:
                    alpha[i] = C
                    alpha[j] = total - C
            elif alpha[j] < 0:
                alpha[j] = 0.0
                alpha[i] = total
            if total > C:
                if alpha[j] > C:
                    alpha[j] = C
                    alpha[i] = total - C
            elif alpha[i] < 0:
                alpha[i] = 0.0
                alpha[j] = total
        d_i = alpha[i] - old_i
        d_j = alpha[j] - old_j
        grad += y * (y[i] * d_i * k_i + y[j] * d_j * K[j])

    bias = _bias(grad, alpha, y, C)
    return alpha, bias, it, converged


def _bias(grad, alpha, y, C):
    yg = y * grad
    free = (alpha > 0) & (alpha < C)
    if free.any():
        rho = yg[free].mean()
    else:
        # midpoint of the feasible interval for rho
        at_ub = alpha >= C
        at_lb = alpha <= 0
        upper_set = ((y > 0) & at_lb) | ((y < 0) & at_ub)
        lower_set = ((y > 0) & at_ub) | ((y < 0) & at_lb)
        ub = yg[upper_set].min() if upper_set.any() else np.inf
        lb = yg[lower_set].max() if lower_set.any() else -np.inf
        rho = (ub + lb) / 2.0
    return float(-rho)


def platt_fit(decision: np.ndarray, y01: np.ndarray, max_iter: int = 100):
    """Fit ``P(High | f) = 1 / (1 + exp(A f + B))`` by regularized Newton steps.

    Uses smoothed targets ``(N+ + 1) / (N+ + 2)`` and ``1 / (N- + 2)``.
    """
    prior1 = float(y01.sum())
    prior0 = float(len(y01) - prior1)
    hi = (prior1 + 1.0) / (prior1 + 2.0)
    lo = 1.0 / (prior0 + 2.0)
    t = np.where(y01 > 0, hi, lo)
    A, B = 0.0, math.log((prior0 + 1.0) / (prior1 + 1.0))
    min_step, sigma, eps = 1e-10, 1e-12, 1e-5

    def objective(A, B):
        z = decision * A + B
        return float(np.sum(np.where(z >= 0, t * z + np.log1p(np.exp(-np.abs(z))),
                                     (t - 1.0) * z + np.log1p(np.exp(-np.abs(z))))))

    fval = objective(A, B)
    for _ in range(max_iter):
        z = decision * A + B
        p = np.where(z >= 0, np.exp(-np.abs(z)) / (1.0 + np.exp(-np.abs(z))), 1.0 / (1.0 + np.exp(-np.abs(z))))
        q = 1.0 - p
        d2 = p * q
        h11 = sigma + float(np.sum(decision * decision * d2))
        h22 = sigma + float(np.sum(d2))
        h21 = float(np.sum(decision * d2))
        d1 = t - p
        g1 = float(np.sum(decision * d1))
        g2 = float(np.sum(d1))
        if abs(g1) < eps and abs(g2) < eps:
            break
        det = h11 * h22 - h21 * h21
        dA = -(h22 * g1 - h21 * g2) / det
        dB = -(-h21 * g1 + h11 * g2) / det
        gd = g1 * dA + g2 * dB
        step = 1.0
        while step >= min_step:
            newA, newB = A + step * dA, B + step * dB
            newf = objective(newA, newB)
            if newf < fval + 0.0001 * step * gd:
                A, B, fval = newA, newB, newf
                break
            step /= 2.0
        else:
            break
    return A, B


def fit(X, y, params, rng, seed=0):
    n, n_features = X.shape
    gamma = params["gamma"] if params["gamma"] is not None else 1.0 / n_features
    if params["standardize"]:
        mean = X.mean(axis=0)
        scale = X.std(axis=0)
        scale = np.where(scale > 0, scale, 1.0)
    else:
        mean = np.zeros(n_features)
        scale = np.ones(n_features)
    Z = (X - mean) / scale
    ypm = np.where(y > 0, 1.0, -1.0)
    max_iter = params["max_iter"] if params["max_iter"] is not None else 10 * n * n
    K = rbf_kernel(Z, Z, gamma)
    alpha, bias, n_iter, converged = smo(K, ypm, params["C"], params["tol"], max_iter)
    decision = K @ (alpha * ypm) + bias
    A, B = platt_fit(decision, y)
    sv = alpha > 0
    state = {
        "support_vectors": Z[sv],
        "dual_coef": (alpha * ypm)[sv],
        "bias": np.float64(bias),
        "gamma": np.float64(gamma),
        "mean": mean,
        "scale": scale,
        "platt_a": np.float64(A),
        "platt_b": np.float64(B),
    }
    info = {
        "converged": bool(converged),
        "n_iter": int(n_iter),
        "n_support": int(sv.sum()),
        "n_support_high": int((sv & (y > 0)).sum()),
        "n_support_low": int((sv & (y == 0)).sum()),
    }
    return state, info


def decision_function(state, X: np.ndarray) -> np.ndarray:
    Z = (X - state["mean"]) / state["scale"]
    K = rbf_kernel(Z, state["support_vectors"], float(state["gamma"]))
    return K @ state["dual_coef"] + float(state["bias"])


def predict_proba(state, params, X):
    f = decision_function(state, X)
    return sigmoid(-(f * float(state["platt_a"]) + float(state["platt_b"])))


def check_state(state) -> None:
    sv = np.asarray(state["support_vectors"])
    coef = np.asarray(state["dual_coef"])
    if sv.ndim != 2 or len(sv) != len(coef):
        raise ValueError("support vectors and dual coefficients disagree")
    if not ((coef > 0).any() and (coef < 0).any()):
        raise ValueError("svc needs at least one support vector per class")
