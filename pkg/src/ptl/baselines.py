"""Comparator estimators: target-only lasso and two-step pooled trans-lasso."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .data import DataSet
from .lasso import LassoOptions, cv_lasso


@dataclass(frozen=True)
class BaselineFit:
    coef: np.ndarray
    method: str  # "lasso" | "translasso"
    penalties: tuple[float, ...]


def fit_lasso_target(
    target: DataSet,
    n_folds: int = 5,
    opts: LassoOptions = LassoOptions(),
    seed=0,
) -> BaselineFit:
    """Cross-validated lasso on the target data alone."""
    lam, fit = cv_lasso(target, n_folds, opts, seed)
    return BaselineFit(coef=fit.coef, method="lasso", penalties=(lam,))


def fit_translasso(
    sources: list[DataSet],
    target: DataSet,
    n_folds: int = 5,
    opts: LassoOptions = LassoOptions(),
    seed=0,
) -> BaselineFit:
    """Two-step transfer baseline: pooled pilot fit, then a target correction.

    Step one runs a cross-validated lasso on the stacked target-plus-sources
    sample; step two fits target residuals and the two coefficient vectors are
    added. All sources are treated as informative. With no sources the result
    coincides with :func:`fit_lasso_target` for the same seed.
    """
    if not sources:
        base = fit_lasso_target(target, n_folds, opts, seed)
        return BaselineFit(coef=base.coef, method="translasso", penalties=base.penalties)
    if any(s.p != target.p for s in sources):
        raise ValueError("sources and target must share the same covariates")
    pooled = DataSet(
        np.vstack([target.X] + [s.X for s in sources]),
        np.concatenate([target.y] + [s.y for s in sources]),
    )
    pilot_seed = int(np.random.SeedSequence((seed, 0)).generate_state(1)[0])
    lam_pilot, pilot = cv_lasso(pooled, n_folds, opts, pilot_seed)
    residual = target.y - target.X @ pilot.coef
    corr_seed = int(np.random.SeedSequence((seed, 1)).generate_state(1)[0])
    lam_corr, correction = cv_lasso(DataSet(target.X, residual), n_folds, opts, corr_seed)
    return BaselineFit(
        coef=pilot.coef + correction.coef,
        method="translasso",
        penalties=(lam_pilot, lam_corr),
    )
