"""Population-level decomposition of a coefficient vector onto source directions.

Given the true source coefficient matrix and the covariate covariance, any
target vector splits uniquely into a weighted combination of the source
vectors plus a contrast that is uncorrelated with every transferred feature.
This module computes that canonical split and checks the orthogonality that
makes it unique; it doubles as the ground-truth oracle for the simulations.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.linalg

from .errors import SingularDesignError

CONDITION_LIMIT = 1e12


@dataclass(frozen=True)
class PopulationModel:
    """Ground truth: ``coef = source_coefs @ weights + contrast``.

    The contrast satisfies ``source_coefs.T @ covariance @ contrast = 0`` up
    to rounding, so the (weights, contrast) pair is the canonical one.
    """

    source_coefs: np.ndarray  # p x K
    covariance: np.ndarray  # p x p, symmetric positive definite
    weights: np.ndarray  # K
    contrast: np.ndarray  # p
    coef: np.ndarray  # p

    def __post_init__(self) -> None:
        B = np.asarray(self.source_coefs, dtype=float)
        S = np.asarray(self.covariance, dtype=float)
        w = np.asarray(self.weights, dtype=float)
        d = np.asarray(self.contrast, dtype=float)
        b = np.asarray(self.coef, dtype=float)
        p, K = B.shape
        if S.shape != (p, p) or w.shape != (K,) or d.shape != (p,) or b.shape != (p,):
            raise ValueError("model fields do not conform")
        if not np.allclose(S, S.T, atol=1e-10):
            raise ValueError("covariance must be symmetric")
        try:
            np.linalg.cholesky(S)
        except np.linalg.LinAlgError:
            raise ValueError("covariance must be positive definite") from None
        if np.abs(b - B @ w - d).max() > 1e-10:
            raise ValueError("coef does not reassemble from weights and contrast")
        contrast_scale = max(np.linalg.norm(d), 1e-8 * np.linalg.norm(b), 1e-300)
        scale = np.linalg.norm(B) * np.linalg.norm(S) * contrast_scale
        _, viol = check_identification(B, S, d)
        if viol > 1e-8 * scale:
            raise ValueError(
                f"contrast violates the identification orthogonality: {viol:.3e}"
            )
        object.__setattr__(self, "source_coefs", B)
        object.__setattr__(self, "covariance", S)
        object.__setattr__(self, "weights", w)
        object.__setattr__(self, "contrast", d)
        object.__setattr__(self, "coef", b)

    @property
    def p(self) -> int:
        return self.source_coefs.shape[0]

    @property
    def n_sources(self) -> int:
        return self.source_coefs.shape[1]


def decompose(
    coef: np.ndarray, source_coefs: np.ndarray, covariance: np.ndarray
) -> tuple[np.ndarray, np.ndarray]:
    """Split ``coef`` into the canonical (weights, contrast) pair.

    The weights solve the K x K system ``(B' S B) w = B' S coef`` and the
    contrast is the remainder ``coef - B w``; by construction it is
    orthogonal to the source directions in the S inner product.
    """
    B = np.asarray(source_coefs, dtype=float)
    S = np.asarray(covariance, dtype=float)
    b = np.asarray(coef, dtype=float)
    SB = S @ B
    A = B.T @ SB
    cond = np.linalg.cond(A)
    if not np.isfinite(cond) or cond > CONDITION_LIMIT:
        raise SingularDesignError(
            "source coefficient directions are rank deficient under the "
            f"covariance inner product (condition {cond:.3e})"
        )
    w = scipy.linalg.cho_solve(scipy.linalg.cho_factor(A), SB.T @ b)
    return w, b - B @ w


def check_identification(
    source_coefs: np.ndarray,
    covariance: np.ndarray,
    contrast: np.ndarray,
    tol: float = 1e-8,
) -> tuple[bool, float]:
    """Whether the contrast is orthogonal to every source direction.

    Returns ``(ok, max_violation)`` where the violation is
    ``||B' S contrast||_inf``.
    """
    B = np.asarray(source_coefs, dtype=float)
    S = np.asarray(covariance, dtype=float)
    d = np.asarray(contrast, dtype=float)
    v = B.T @ (S @ d)
    viol = float(np.abs(v).max()) if v.size else 0.0
    return viol <= tol, viol
