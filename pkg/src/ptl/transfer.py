"""The profiled transfer estimator.

Pipeline: fit one coefficient vector per source, project the target
covariates onto those directions to get transferred features, regress the
response on the features by least squares, then fit a sparse contrast to the
profiled residuals. The final coefficient vector is assembled from the two
stages, never refit.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
import scipy.linalg

from .data import DataSet, gram_products
from .errors import ConfigurationError, SingularDesignError
from .lasso import LassoOptions, cv_lasso

CONDITION_LIMIT = 1e12
RIDGE_FALLBACK_SCALE = 1e-8
ORTHOGONALITY_TOL = 1e-8


@dataclass(frozen=True)
class SourceBasis:
    """Estimated source coefficient vectors, one column per source."""

    coefs: np.ndarray  # p x K
    kinds: tuple[str, ...]
    lambdas: tuple  # chosen penalty per lasso-cv source, None otherwise
    ridge_fallback: tuple  # True where a singular OLS system fell back to ridge

    def __post_init__(self) -> None:
        coefs = np.asarray(self.coefs, dtype=float)
        if coefs.ndim != 2 or coefs.shape[1] < 1:
            raise ValueError("coefs must be a p x K matrix with K >= 1")
        if not np.isfinite(coefs).all():
            raise ValueError("source coefficient estimates must be finite")
        if len(self.kinds) != coefs.shape[1]:
            raise ValueError("one estimator kind per source required")
        object.__setattr__(self, "coefs", coefs)

    @property
    def p(self) -> int:
        return self.coefs.shape[0]

    @property
    def n_sources(self) -> int:
        return self.coefs.shape[1]


@dataclass(frozen=True)
class PtlConfig:
    """Settings for an end-to-end profiled transfer fit."""

    n_folds: int = 5
    seed: int = 0
    source_kinds: object = None  # None/"auto", a kind string, or one per source
    lasso: LassoOptions = field(default_factory=LassoOptions)


@dataclass(frozen=True)
class PtlFit:
    """Fitted weights, contrast, and the assembled coefficient vector."""

    weights: np.ndarray  # K
    contrast: np.ndarray  # p
    coef: np.ndarray  # p, equals basis.coefs @ weights + contrast
    lambda_contrast: float
    basis: SourceBasis
    diagnostics: dict


def resolve_source_kind(kind: str | None, n_k: int, p: int) -> tuple[str, float | None]:
    """Map a requested estimator name to a concrete (method, ridge penalty).

    ``None`` and ``"auto"`` choose lasso-cv for n_k <= 2p and ols otherwise;
    ridge must carry its penalty, e.g. ``"ridge:0.1"``.
    """
    if kind is None or kind == "auto":
        return ("lasso-cv", None) if n_k <= 2 * p else ("ols", None)
    if kind == "lasso-cv":
        return "lasso-cv", None
    if kind == "ols":
        return "ols", None
    if isinstance(kind, str) and kind.startswith("ridge:"):
        lam = float(kind.split(":", 1)[1])
        if lam <= 0:
            raise ConfigurationError("ridge penalty must be positive")
        return "ridge", lam
    if kind == "ridge":
        raise ConfigurationError("ridge needs an explicit penalty, e.g. 'ridge:0.1'")
    raise ConfigurationError(f"unknown source estimator {kind!r}")


def _solve_spd(A: np.ndarray, b: np.ndarray) -> np.ndarray:
    return scipy.linalg.cho_solve(scipy.linalg.cho_factor(A), b)


def _ols_coefs(G: np.ndarray, g: np.ndarray) -> tuple[np.ndarray, bool]:
    """Solve the normal equations, falling back to a tiny ridge when the Gram
    matrix is singular or numerically rank deficient (flagged)."""
    p = g.shape[0]
    try:
        factor = scipy.linalg.cho_factor(G)
        pivots = np.abs(np.diagonal(factor[0]))
        if pivots.min() ** 2 > pivots.max() ** 2 / CONDITION_LIMIT:
            return scipy.linalg.cho_solve(factor, g), False
    except (np.linalg.LinAlgError, scipy.linalg.LinAlgError):
        pass
    ridge = RIDGE_FALLBACK_SCALE * np.trace(G) / p
    return _solve_spd(G + ridge * np.eye(p), g), True


def fit_sources(
    sources: list[DataSet],
    kinds=None,
    n_folds: int = 5,
    opts: LassoOptions = LassoOptions(),
    seed=0,
) -> SourceBasis:
    """Estimate one coefficient vector per source dataset.

    ``kinds`` may be a single estimator name applied to all sources or a
    sequence with one entry per source. OLS requires n_k > p and falls back
    to a tiny ridge (flagged) when its normal matrix is singular.
    """
    if not sources:
        raise ConfigurationError("at least one source dataset is required")
    p = sources[0].p
    if any(s.p != p for s in sources):
        raise ValueError("all sources must share the same number of covariates")
    K = len(sources)
    if kinds is None or isinstance(kinds, str):
        kinds = [kinds] * K
    if len(kinds) != K:
        raise ConfigurationError(f"got {len(kinds)} estimator kinds for {K} sources")
    coefs = np.zeros((p, K))
    resolved = []
    lambdas = []
    fallback = []
    for k, src in enumerate(sources):
        method, ridge_lam = resolve_source_kind(kinds[k], src.n, p)
        lam_k = None
        fell_back = False
        if method == "lasso-cv":
            src_seed = int(np.random.SeedSequence((seed, 0, k)).generate_state(1)[0])
            lam_k, fit = cv_lasso(src, n_folds, opts, src_seed)
            coefs[:, k] = fit.coef
        elif method == "ols":
            if src.n <= p:
                raise ConfigurationError(
                    f"ols for source {k} needs n > p, got n={src.n}, p={p}"
                )
            G, g = gram_products(src.X, src.y)
            coefs[:, k], fell_back = _ols_coefs(G, g)
        else:  # ridge
            G, g = gram_products(src.X, src.y)
            coefs[:, k] = _solve_spd(G + ridge_lam * np.eye(p), g)
            lam_k = ridge_lam
        resolved.append(method)
        lambdas.append(lam_k)
        fallback.append(fell_back)
    return SourceBasis(
        coefs=coefs,
        kinds=tuple(resolved),
        lambdas=tuple(lambdas),
        ridge_fallback=tuple(fallback),
    )


def transfer_features(basis: SourceBasis, X: np.ndarray) -> np.ndarray:
    """Project covariate rows onto the estimated source directions."""
    X = np.asarray(X, dtype=float)
    if X.ndim != 2 or X.shape[1] != basis.p:
        raise ValueError(
            f"X has {X.shape[-1]} columns but the basis expects {basis.p}"
        )
    return X @ basis.coefs


def fit_weights(Z: np.ndarray, y: np.ndarray) -> tuple[np.ndarray, float]:
    """Least squares of the response on the transferred features.

    Returns (weights, condition number of the normal matrix). Raises
    :class:`SingularDesignError` when the features are numerically collinear,
    which signals linearly dependent source coefficient estimates.
    """
    Z = np.asarray(Z, dtype=float)
    y = np.asarray(y, dtype=float)
    n, K = Z.shape
    if n <= K:
        raise ValueError(f"need more target observations than sources: n={n}, K={K}")
    A = Z.T @ Z
    cond = float(np.linalg.cond(A))
    if not np.isfinite(cond) or cond > CONDITION_LIMIT:
        raise SingularDesignError(_collinearity_message(Z, cond))
    b = Z.T @ y
    w = _solve_spd(A, b)
    # one refinement pass keeps Z'(y - Z w) at rounding level even for
    # moderately ill-conditioned normal matrices
    w += _solve_spd(A, Z.T @ (y - Z @ w))
    return w, cond


def _collinearity_message(Z: np.ndarray, cond: float) -> str:
    norms = np.linalg.norm(Z, axis=0)
    dead = np.flatnonzero(norms == 0.0)
    if dead.size:
        return (
            f"transferred feature {dead[0]} is identically zero "
            "(the matching source coefficient estimate vanished)"
        )
    U = Z / norms
    corr = np.abs(U.T @ U)
    np.fill_diagonal(corr, 0.0)
    i, j = np.unravel_index(int(np.argmax(corr)), corr.shape)
    return (
        f"transferred features are nearly collinear (condition {cond:.3e}; "
        f"worst pair ({i}, {j}) with |corr| = {corr[i, j]:.6f}); source "
        "coefficient estimates are not linearly independent"
    )


def profile_responses(y: np.ndarray, Z: np.ndarray, weights: np.ndarray) -> np.ndarray:
    """Residuals of the response after the transferred-feature regression."""
    y = np.asarray(y, dtype=float)
    return y - np.asarray(Z, dtype=float) @ np.asarray(weights, dtype=float)


def fit_contrast(
    X: np.ndarray,
    profiled: np.ndarray,
    n_folds: int = 5,
    opts: LassoOptions = LassoOptions(),
    seed=0,
) -> tuple[np.ndarray, float]:
    """Cross-validated sparse regression of profiled responses on covariates."""
    lam, fit = cv_lasso(DataSet(X, profiled), n_folds, opts, seed)
    return fit.coef, lam


def fit_ptl(sources: list[DataSet], target: DataSet, config: PtlConfig = PtlConfig()) -> PtlFit:
    """Run the full profiled transfer pipeline on one target and K sources."""
    if any(s.p != target.p for s in sources):
        raise ValueError("sources and target must share the same covariates")
    basis = fit_sources(
        sources, config.source_kinds, config.n_folds, config.lasso, config.seed
    )
    if basis.n_sources >= target.n:
        raise ValueError(
            f"need more target observations than sources: n={target.n}, "
            f"K={basis.n_sources}"
        )
    Z = transfer_features(basis, target.X)
    weights, cond = fit_weights(Z, target.y)
    profiled = profile_responses(target.y, Z, weights)
    orth = float(np.abs(Z.T @ profiled).max())
    orth_cap = ORTHOGONALITY_TOL * (1.0 + float(np.linalg.norm(target.y)))
    if orth > orth_cap:
        raise ArithmeticError(
            f"profiling lost orthogonality: |Z'e|_inf = {orth:.3e} > {orth_cap:.3e}"
        )
    contrast_seed = int(np.random.SeedSequence((config.seed, 1)).generate_state(1)[0])
    contrast, lam = fit_contrast(
        target.X, profiled, config.n_folds, config.lasso, contrast_seed
    )
    coef = basis.coefs @ weights + contrast
    diagnostics = {
        "normal_condition": cond,
        "orthogonality": orth / (1.0 + float(np.linalg.norm(target.y))),
        "profiled_norm": float(np.linalg.norm(profiled)),
        "contrast_residual_norm": float(np.linalg.norm(profiled - target.X @ contrast)),
    }
    return PtlFit(
        weights=weights,
        contrast=contrast,
        coef=coef,
        lambda_contrast=lam,
        basis=basis,
        diagnostics=diagnostics,
    )
