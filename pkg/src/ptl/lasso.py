"""L1-penalized least squares via cyclic coordinate descent on the Gram system.

The solver works on the normal-equation blocks ``G = X'X/n`` and
``g = X'y/n`` and maintains ``c = G @ beta`` incrementally, so a coordinate
update costs O(p) only when the coefficient actually moves. Regularization
paths reuse warm starts, and cross-validation shares precomputed Gram blocks
across folds.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from numba import njit

from .data import DataSet, gram_products, make_folds


@dataclass(frozen=True)
class LassoOptions:
    """Solver controls shared by every penalized fit.

    ``lambda_min_ratio=None`` resolves to 0.01 in the underdetermined and
    near-square regime (n < 2p), where deeper paths are both overfit and
    brutally ill-conditioned, and to 1e-4 for clearly overdetermined designs.
    ``check_descent`` recomputes the objective after every sweep and raises if
    it ever increases; useful in tests, too slow for production fits.
    """

    tol: float = 1e-7
    max_sweeps: int = 10_000
    n_lambdas: int = 100
    lambda_min_ratio: float | None = None
    check_descent: bool = False

    def __post_init__(self) -> None:
        if self.tol <= 0:
            raise ValueError("tol must be positive")
        if self.max_sweeps < 1:
            raise ValueError("max_sweeps must be at least 1")
        if self.n_lambdas < 1:
            raise ValueError("n_lambdas must be at least 1")
        if self.lambda_min_ratio is not None and not (0 < self.lambda_min_ratio < 1):
            raise ValueError("lambda_min_ratio must lie in (0, 1)")

    def min_ratio(self, n: int, p: int) -> float:
        if self.lambda_min_ratio is not None:
            return self.lambda_min_ratio
        return 0.01 if n < 2 * p else 1e-4


@dataclass(frozen=True)
class LassoFit:
    """A solved fit: coefficients plus convergence diagnostics."""

    coef: np.ndarray
    lam: float
    sweeps: int
    kkt: float
    converged: bool


def _soft_threshold(x: float, t: float) -> float:
    if x > t:
        return x - t
    if x < -t:
        return x + t
    return 0.0


def _kkt_from_state(g: np.ndarray, c: np.ndarray, beta: np.ndarray, lam: float) -> float:
    """Max stationarity residual given the gradient state c = G @ beta."""
    grad = g - c
    active = beta != 0.0
    viol = np.maximum(np.abs(grad) - lam, 0.0)
    if active.any():
        viol[active] = np.abs(grad[active] - lam * np.sign(beta[active]))
    return float(viol.max()) if viol.size else 0.0


def _sweep(G, g, diag, lam, beta, c, idx) -> float:
    """One pass of coordinate minimization over ``idx``; returns max |change|."""
    max_delta = 0.0
    for j in idx:
        dj = diag[j]
        if dj <= 0.0:
            continue
        bj = beta[j]
        rho = g[j] - c[j] + dj * bj
        bj_new = _soft_threshold(rho, lam) / dj
        d = bj_new - bj
        if d != 0.0:
            beta[j] = bj_new
            c += G[j] * d
            ad = abs(d)
            if ad > max_delta:
                max_delta = ad
    return max_delta


@njit(cache=True)
def _descend_kernel(G, g, diag, lam, beta, c, tol, max_sweeps):
    """Alternate full sweeps with active-set sweeps until the KKT residual
    clears 10*tol; mutates ``beta`` and the gradient state ``c`` in place."""
    p = g.shape[0]
    kkt_cap = 10.0 * tol
    sweeps = 0
    kkt = np.inf
    while sweeps < max_sweeps:
        max_delta = 0.0
        for j in range(p):
            dj = diag[j]
            if dj <= 0.0:
                continue
            bj = beta[j]
            rho = g[j] - c[j] + dj * bj
            if rho > lam:
                bn = (rho - lam) / dj
            elif rho < -lam:
                bn = (rho + lam) / dj
            else:
                bn = 0.0
            d = bn - bj
            if d != 0.0:
                beta[j] = bn
                row = G[j]
                for i in range(p):
                    c[i] += row[i] * d
                ad = abs(d)
                if ad > max_delta:
                    max_delta = ad
        sweeps += 1
        kkt = 0.0
        for j in range(p):
            grad = g[j] - c[j]
            if beta[j] > 0.0:
                v = abs(grad - lam)
            elif beta[j] < 0.0:
                v = abs(grad + lam)
            else:
                v = abs(grad) - lam
                if v < 0.0:
                    v = 0.0
            if v > kkt:
                kkt = v
        if kkt <= kkt_cap and max_delta <= tol:
            return sweeps, kkt, True
        while sweeps < max_sweeps:
            max_delta = 0.0
            for j in range(p):
                bj = beta[j]
                if bj == 0.0:
                    continue
                dj = diag[j]
                rho = g[j] - c[j] + dj * bj
                if rho > lam:
                    bn = (rho - lam) / dj
                elif rho < -lam:
                    bn = (rho + lam) / dj
                else:
                    bn = 0.0
                d = bn - bj
                if d != 0.0:
                    beta[j] = bn
                    row = G[j]
                    for i in range(p):
                        c[i] += row[i] * d
                    ad = abs(d)
                    if ad > max_delta:
                        max_delta = ad
            sweeps += 1
            if max_delta <= tol:
                break
    return sweeps, kkt, False


def _descend(G, g, lam, beta, opts: LassoOptions, y_ss: float) -> tuple[int, float, bool]:
    """Run coordinate descent in place on ``beta``; returns (sweeps, kkt, converged)."""
    p = g.shape[0]
    diag = np.ascontiguousarray(np.diagonal(G))
    beta[diag <= 0.0] = 0.0
    c = G @ beta if beta.any() else np.zeros(p)
    if not opts.check_descent:
        sweeps, kkt, converged = _descend_kernel(
            np.ascontiguousarray(G), g, diag, lam, beta, c, opts.tol, opts.max_sweeps
        )
        return int(sweeps), float(kkt), bool(converged)
    return _descend_python(G, g, diag, lam, beta, c, opts, y_ss)


def _descend_python(G, g, diag, lam, beta, c, opts: LassoOptions, y_ss: float):
    """Pure-python twin of the kernel that also asserts objective descent."""
    kkt_cap = 10.0 * opts.tol
    all_idx = np.arange(g.shape[0])
    sweeps = 0
    kkt = np.inf
    prev_obj = np.inf
    while sweeps < opts.max_sweeps:
        delta = _sweep(G, g, diag, lam, beta, c, all_idx)
        sweeps += 1
        prev_obj = _check_descent(prev_obj, g, c, beta, lam, y_ss)
        kkt = _kkt_from_state(g, c, beta, lam)
        if kkt <= kkt_cap and delta <= opts.tol:
            return sweeps, kkt, True
        while sweeps < opts.max_sweeps:
            active = np.flatnonzero(beta)
            if not active.size:
                break
            delta = _sweep(G, g, diag, lam, beta, c, active)
            sweeps += 1
            prev_obj = _check_descent(prev_obj, g, c, beta, lam, y_ss)
            if delta <= opts.tol:
                break
    return sweeps, kkt, False


def _check_descent(prev_obj, g, c, beta, lam, y_ss) -> float:
    obj = y_ss - g @ beta + 0.5 * beta @ c + lam * np.abs(beta).sum()
    if obj > prev_obj + 1e-10 * max(1.0, abs(prev_obj)):
        raise AssertionError(f"objective increased: {prev_obj} -> {obj}")
    return obj


def solve_lasso(
    X: np.ndarray,
    y: np.ndarray,
    lam: float,
    opts: LassoOptions = LassoOptions(),
    warm_start: np.ndarray | None = None,
) -> LassoFit:
    """Minimize ``(2n)^-1 ||y - X b||^2 + lam * ||b||_1``.

    Non-convergence within ``max_sweeps`` is reported through the
    ``converged`` flag, not an exception.
    """
    if lam < 0:
        raise ValueError("penalty must be nonnegative")
    G, g = gram_products(X, y)
    p = g.shape[0]
    if warm_start is not None:
        beta = np.array(warm_start, dtype=float)
        if beta.shape != (p,):
            raise ValueError("warm_start has the wrong length")
    else:
        beta = np.zeros(p)
    y_ss = float(y @ y) / (2 * len(y))
    sweeps, kkt, converged = _descend(G, g, lam, beta, opts, y_ss)
    return LassoFit(coef=beta, lam=float(lam), sweeps=sweeps, kkt=kkt, converged=converged)


def lambda_path(X: np.ndarray, y: np.ndarray, opts: LassoOptions = LassoOptions()) -> np.ndarray:
    """Geometric penalty grid from ``lam_max = ||X'y||_inf / n`` downwards.

    ``lam_max`` annihilates every coefficient; the grid descends to
    ``lam_max * min_ratio``. A zero gradient (e.g. y = 0) gives the single
    entry 0.
    """
    _, g = gram_products(X, y)
    n, p = X.shape
    return _path_from_gradient(g, opts, opts.min_ratio(n, p))


def _path_from_gradient(g: np.ndarray, opts: LassoOptions, ratio: float) -> np.ndarray:
    lam_max = float(np.abs(g).max()) if g.size else 0.0
    if lam_max == 0.0:
        return np.zeros(1)
    if opts.n_lambdas == 1:
        return np.array([lam_max])
    return np.geomspace(lam_max, lam_max * ratio, opts.n_lambdas)


def _path_fit(G, g, lams, opts: LassoOptions, y_ss: float):
    """Warm-started fits along a descending penalty grid.

    Returns (betas, metas) where betas has one row per penalty and metas is a
    list of (sweeps, kkt, converged) triples.
    """
    p = g.shape[0]
    betas = np.zeros((len(lams), p))
    metas = []
    beta = np.zeros(p)
    for i, lam in enumerate(lams):
        metas.append(_descend(G, g, float(lam), beta, opts, y_ss))
        betas[i] = beta
    return betas, metas


def cv_lasso(
    data: DataSet,
    n_folds: int = 5,
    opts: LassoOptions = LassoOptions(),
    seed=0,
) -> tuple[float, LassoFit]:
    """K-fold cross-validation over the penalty path.

    The grid is built on the full data; each fold refits the whole path with
    warm starts and the held-out squared prediction error is pooled across
    folds. Ties are broken toward the larger penalty. The returned fit is on
    the full data at the selected penalty, warm-started along the path.
    """
    X, y = data.X, data.y
    n, p = X.shape
    if not 2 <= n_folds <= n:
        raise ValueError(f"need 2 <= n_folds <= n, got n_folds={n_folds}, n={n}")
    XtX = X.T @ X
    Xty = X.T @ y
    lams = _path_from_gradient(Xty / n, opts, opts.min_ratio(n, p))
    folds = make_folds(n, n_folds, seed)
    press = np.zeros(len(lams))
    for f in range(n_folds):
        held = folds.held_out(f)
        Xh, yh = X[held], y[held]
        n_tr = n - held.size
        G = (XtX - Xh.T @ Xh) / n_tr
        g = (Xty - Xh.T @ yh) / n_tr
        y_tr_ss = (float(y @ y) - float(yh @ yh)) / (2 * n_tr)
        betas, _ = _path_fit(G, g, lams, opts, y_tr_ss)
        press += (((Xh @ betas.T) - yh[:, None]) ** 2).sum(axis=0)
    best = 0
    for i in range(1, len(lams)):
        if press[i] < press[best]:
            best = i
    y_ss = float(y @ y) / (2 * n)
    betas, metas = _path_fit(XtX / n, Xty / n, lams[: best + 1], opts, y_ss)
    sweeps, kkt, converged = metas[best]
    fit = LassoFit(
        coef=betas[best],
        lam=float(lams[best]),
        sweeps=sweeps,
        kkt=kkt,
        converged=converged,
    )
    return float(lams[best]), fit


def kkt_violation(X: np.ndarray, y: np.ndarray, beta: np.ndarray, lam: float) -> float:
    """Max subgradient stationarity residual of ``beta`` at penalty ``lam``."""
    X = np.asarray(X, dtype=float)
    y = np.asarray(y, dtype=float)
    beta = np.asarray(beta, dtype=float)
    if X.shape[0] != y.shape[0] or X.shape[1] != beta.shape[0]:
        raise ValueError("X, y and beta do not conform")
    grad = X.T @ (y - X @ beta) / X.shape[0]
    active = beta != 0.0
    viol = np.maximum(np.abs(grad) - lam, 0.0)
    if active.any():
        viol[active] = np.abs(grad[active] - lam * np.sign(beta[active]))
    return float(viol.max()) if viol.size else 0.0
