"""Independent reference implementations used as test oracles.

Nothing here shares code with the package solvers: the lasso reference is
accelerated proximal gradient, the decomposition reference is a dense grid
search, and the small helpers are naive loops.
"""

from __future__ import annotations

import itertools

import numpy as np


def prox_lasso(X, y, lam, tol=1e-11, max_iter=200_000):
    """FISTA with restarts for the lasso objective; tolerance on the KKT gap."""
    X = np.asarray(X, dtype=float)
    y = np.asarray(y, dtype=float)
    n, p = X.shape
    G = X.T @ X / n
    g = X.T @ y / n
    step = 1.0 / max(np.linalg.eigvalsh(G).max(), 1e-12)
    beta = np.zeros(p)
    momentum = beta.copy()
    t_prev = 1.0
    obj_prev = np.inf
    for it in range(max_iter):
        grad = G @ momentum - g
        z = momentum - step * grad
        beta_new = np.sign(z) * np.maximum(np.abs(z) - step * lam, 0.0)
        obj = 0.5 * beta_new @ G @ beta_new - g @ beta_new + lam * np.abs(beta_new).sum()
        if obj > obj_prev:  # restart momentum
            momentum = beta.copy()
            t_prev = 1.0
            obj_prev = np.inf
            continue
        t = 0.5 * (1.0 + np.sqrt(1.0 + 4.0 * t_prev**2))
        momentum = beta_new + ((t_prev - 1.0) / t) * (beta_new - beta)
        beta, t_prev, obj_prev = beta_new, t, obj
        if it % 50 == 0 and kkt_gap(G, g, beta, lam) < tol:
            break
    return beta


def kkt_gap(G, g, beta, lam):
    grad = g - G @ beta
    active = beta != 0.0
    viol = np.maximum(np.abs(grad) - lam, 0.0)
    viol[active] = np.abs(grad[active] - lam * np.sign(beta[active]))
    return viol.max() if viol.size else 0.0


def naive_gram(X, y):
    """Triple-loop normal-equation blocks."""
    n, p = X.shape
    G = np.zeros((p, p))
    v = np.zeros(p)
    for j in range(p):
        for k in range(p):
            acc = 0.0
            for i in range(n):
                acc += X[i, j] * X[i, k]
            G[j, k] = acc / n
        acc = 0.0
        for i in range(n):
            acc += X[i, j] * y[i]
        v[j] = acc / n
    return G, v


def naive_matmul(A, B):
    out = np.zeros((A.shape[0], B.shape[1]))
    for i in range(A.shape[0]):
        for j in range(B.shape[1]):
            acc = 0.0
            for k in range(A.shape[1]):
                acc += A[i, k] * B[k, j]
            out[i, j] = acc
    return out


def naive_mse(a, b):
    acc = 0.0
    for x, z in zip(a, b):
        acc += (x - z) ** 2
    return acc / len(a)


def grid_decompose_weights(coef, B, Sigma, lo=-3.0, hi=3.0, step=0.05):
    """Dense grid minimizer of ||Sigma^{1/2} (coef - B w)||^2 over w."""
    root = np.linalg.cholesky(Sigma).T
    target = root @ coef
    cols = root @ B
    axes = [np.arange(lo, hi + step / 2, step) for _ in range(B.shape[1])]
    best, best_val = None, np.inf
    for w in itertools.product(*axes):
        w = np.asarray(w)
        r = target - cols @ w
        val = r @ r
        if val < best_val:
            best, best_val = w, val
    return best


def two_pass_r2(y_true, y_pred):
    """Hand-rolled out-of-sample R² with explicit accumulation passes."""
    mean = 0.0
    for v in y_true:
        mean += v
    mean /= len(y_true)
    sse = 0.0
    sst = 0.0
    for t, q in zip(y_true, y_pred):
        sse += (q - t) ** 2
        sst += (t - mean) ** 2
    return 1.0 - sse / sst
