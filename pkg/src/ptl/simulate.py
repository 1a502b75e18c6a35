"""Synthetic problem generators: four covariance/support designs plus sampling.

Each generator builds a ground-truth :class:`~ptl.population.PopulationModel`
together with per-source covariances and noise variances. The ground truth is
generated once per experiment; replications only resample data, reusing the
covariance factorizations computed here.

Design summary (all with weights fixed to ``DEFAULT_WEIGHTS``):

1. shared support, identity covariances, equal unit noise;
2. mostly disjoint source supports, contrast built in the null space of the
   source directions, identity covariances;
3. like design 1 but banded Toeplitz source covariances and noise variance
   growing with the source index;
4. like design 3 but an AR(1) target covariance and a contrast drawn over the
   full index range, so the generating pair violates the identification
   orthogonality (the canonical pair is recovered by decomposition).
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
import scipy.linalg

from .data import DataSet
from .errors import ConfigurationError
from .population import PopulationModel, decompose

DEFAULT_WEIGHTS = (1.5, 0.75, 0.0, 0.0, -1.25)


@dataclass(frozen=True)
class SimConfig:
    """Settings for one synthetic experiment design.

    ``support`` is the size of the shared coefficient support; the leading
    ``support // 3`` rows of the source matrix hold the orthonormal block and
    the contrast has ``support // 5`` nonzero coordinates. ``common_support``
    (design 2 only) defaults to ``support // 2``. ``noise_var`` and
    ``source_noise_var`` override the per-design noise levels when set.
    """

    example: int
    n: int
    source_n: int
    p: int = 500
    n_sources: int = 5
    support: int = 40
    contrast_scale: float = 6.0
    seed: int = 0
    common_support: int | None = None
    noise_var: float | None = None
    source_noise_var: float | None = None
    weights: tuple[float, ...] | None = None

    def __post_init__(self) -> None:
        if self.example not in (1, 2, 3, 4):
            raise ConfigurationError(f"example must be 1-4, got {self.example}")
        if self.n < 1 or self.source_n < 1:
            raise ConfigurationError("sample sizes must be positive")
        if not 1 <= self.support < self.p:
            raise ConfigurationError("need 1 <= support < p")
        if self.n_sources < 1:
            raise ConfigurationError("need at least one source")
        if self.contrast_scale < 0:
            raise ConfigurationError("contrast_scale must be nonnegative")
        if self.weights is not None and len(self.weights) != self.n_sources:
            raise ConfigurationError("weights must have one entry per source")
        if self.weights is None and self.n_sources != len(DEFAULT_WEIGHTS):
            raise ConfigurationError(
                "explicit weights are required when n_sources != "
                f"{len(DEFAULT_WEIGHTS)}"
            )
        if self.common_support is not None and not (
            0 <= self.common_support <= self.support
        ):
            raise ConfigurationError("common_support must lie in [0, support]")

    @property
    def ortho_rows(self) -> int:
        return self.support // 3

    @property
    def contrast_support(self) -> int:
        return self.support // 5

    def resolved_weights(self) -> np.ndarray:
        if self.weights is not None:
            return np.asarray(self.weights, dtype=float)
        return np.asarray(DEFAULT_WEIGHTS, dtype=float)

    def resolved_common_support(self) -> int:
        return self.support // 2 if self.common_support is None else self.common_support


@dataclass
class GeneratedProblem:
    """A fully specified ground truth plus cached sampling factorizations."""

    model: PopulationModel
    source_covs: list
    noise_var: float
    source_noise_vars: list
    raw_weights: np.ndarray | None = None  # design 4: generating pair before
    raw_contrast: np.ndarray | None = None  # re-decomposition
    _chol_target: np.ndarray = field(init=False, repr=False)
    _chol_sources: list = field(init=False, repr=False)
    _identity_target: bool = field(init=False, repr=False)
    _identity_sources: list = field(init=False, repr=False)

    def __post_init__(self) -> None:
        self._chol_target, self._identity_target = _factor(self.model.covariance, "target")
        self._chol_sources = []
        self._identity_sources = []
        for k, cov in enumerate(self.source_covs):
            L, ident = _factor(cov, f"source {k}")
            self._chol_sources.append(L)
            self._identity_sources.append(ident)


def _factor(cov: np.ndarray, label: str) -> tuple[np.ndarray, bool]:
    try:
        L = np.linalg.cholesky(cov)
    except np.linalg.LinAlgError:
        raise ConfigurationError(
            f"covariance for {label} is not positive definite"
        ) from None
    identity = bool(
        np.count_nonzero(cov) == cov.shape[0]
        and np.array_equal(np.diagonal(cov), np.ones(cov.shape[0]))
    )
    return L, identity


def _orthonormal_cols(rng: np.random.Generator, rows: int, cols: int) -> np.ndarray:
    """Left singular vectors of a Gaussian matrix with a fixed sign convention.

    The largest-magnitude entry of each column is made positive so the output
    does not depend on the linear algebra backend's sign choices.
    """
    omega = rng.standard_normal((rows, cols))
    u = np.linalg.svd(omega, full_matrices=False)[0][:, :cols]
    anchor = np.argmax(np.abs(u), axis=0)
    signs = np.sign(u[anchor, np.arange(cols)])
    signs[signs == 0] = 1.0
    return u * signs


def _shared_coef_block(cfg: SimConfig, rng: np.random.Generator) -> np.ndarray:
    """Source matrix used by designs 1, 3 and 4: orthonormal block over
    the leading rows, a constant 0.3 block up to ``support``, zeros below."""
    r0, K, s, p = cfg.ortho_rows, cfg.n_sources, cfg.support, cfg.p
    if r0 < K:
        raise ConfigurationError(
            f"support // 3 = {r0} must be at least n_sources = {K}"
        )
    u = _orthonormal_cols(rng, r0, K)
    return np.vstack([2.0 * u, 0.3 * np.ones((s - r0, K)), np.zeros((p - s, K))])


def _sparse_contrast(
    cfg: SimConfig, rng: np.random.Generator, candidates: np.ndarray
) -> np.ndarray:
    """Gaussian contrast on a random subset of ``candidates``; total second
    moment equals ``contrast_scale`` regardless of the support size."""
    contrast = np.zeros(cfg.p)
    m = cfg.contrast_support
    if m > candidates.size:
        raise ConfigurationError(
            f"contrast support {m} exceeds the {candidates.size} available indices"
        )
    if m > 0:
        idx = rng.choice(candidates, size=m, replace=False)
        contrast[idx] = rng.normal(0.0, np.sqrt(cfg.contrast_scale / m), size=m)
    return contrast


def gen_example1(cfg: SimConfig, rng: np.random.Generator) -> GeneratedProblem:
    """Shared-support design with identity covariances and unit noise."""
    B = _shared_coef_block(cfg, rng)
    contrast = _sparse_contrast(cfg, rng, np.arange(cfg.support, cfg.p))
    w = cfg.resolved_weights()
    eye = np.eye(cfg.p)
    model = PopulationModel(B, eye, w, contrast, B @ w + contrast)
    return GeneratedProblem(
        model=model,
        source_covs=[eye] * cfg.n_sources,
        noise_var=1.0 if cfg.noise_var is None else cfg.noise_var,
        source_noise_vars=_source_vars(cfg, [1.0] * cfg.n_sources),
    )


def gen_example2(cfg: SimConfig, rng: np.random.Generator) -> GeneratedProblem:
    """Mostly disjoint source supports; the contrast lives in the null space
    of the source directions so the orthogonality holds by construction."""
    s, K, p = cfg.support, cfg.n_sources, cfg.p
    m = cfg.contrast_support
    if m <= K:
        raise ConfigurationError(
            f"support // 5 = {m} must exceed n_sources = {K} so the contrast "
            "can be drawn from the null space of the source directions"
        )
    s_c = cfg.resolved_common_support()
    u = _orthonormal_cols(rng, s, K)
    B = np.zeros((p, K))
    B[:s_c] = 2.0 * u[:s_c]
    for k in range(K):
        extra = rng.choice(np.arange(s_c, p), size=s - s_c, replace=False)
        B[extra, k] = 2.0 * u[s_c:, k]
    supp = rng.choice(p, size=m, replace=False)
    sub = B[supp]
    null_vec = np.linalg.eigh(sub @ sub.T)[1][:, 0]
    anchor = int(np.argmax(np.abs(null_vec)))
    if null_vec[anchor] < 0:
        null_vec = -null_vec
    contrast = np.zeros(p)
    contrast[supp] = cfg.contrast_scale * null_vec / np.linalg.norm(null_vec)
    w = cfg.resolved_weights()
    eye = np.eye(p)
    model = PopulationModel(B, eye, w, contrast, B @ w + contrast)
    return GeneratedProblem(
        model=model,
        source_covs=[eye] * K,
        noise_var=1.0 if cfg.noise_var is None else cfg.noise_var,
        source_noise_vars=_source_vars(cfg, [1.0] * K),
    )


def banded_toeplitz(k: int, p: int) -> np.ndarray:
    """Symmetric Toeplitz matrix with first row ``(1, 1/(k+1) repeated 2k-1
    times, zeros)`` for the 1-based source index ``k``."""
    if 2 * k > p:
        raise ConfigurationError(f"banded Toeplitz needs 2k <= p, got k={k}, p={p}")
    row = np.zeros(p)
    row[0] = 1.0
    row[1 : 2 * k] = 1.0 / (k + 1)
    return scipy.linalg.toeplitz(row)


def gen_example3(cfg: SimConfig, rng: np.random.Generator) -> GeneratedProblem:
    """Design 1 coefficients with banded Toeplitz source covariances and
    source noise variance equal to the 1-based source index."""
    if 2 * cfg.n_sources > cfg.p:
        raise ConfigurationError("need 2 * n_sources <= p for the Toeplitz bands")
    B = _shared_coef_block(cfg, rng)
    contrast = _sparse_contrast(cfg, rng, np.arange(cfg.support, cfg.p))
    w = cfg.resolved_weights()
    eye = np.eye(cfg.p)
    model = PopulationModel(B, eye, w, contrast, B @ w + contrast)
    return GeneratedProblem(
        model=model,
        source_covs=[banded_toeplitz(k + 1, cfg.p) for k in range(cfg.n_sources)],
        noise_var=1.0 if cfg.noise_var is None else cfg.noise_var,
        source_noise_vars=_source_vars(cfg, [float(k + 1) for k in range(cfg.n_sources)]),
    )


def ar1_covariance(p: int, rho: float = 0.5) -> np.ndarray:
    """Covariance with entries ``rho ** |i - j|``."""
    return scipy.linalg.toeplitz(rho ** np.arange(p))


def gen_example4(cfg: SimConfig, rng: np.random.Generator) -> GeneratedProblem:
    """Identification-violating design: contrast support anywhere in 1..p and
    an AR(1) target covariance. The generating (weights, contrast) pair is
    kept alongside the canonical re-decomposition."""
    if 2 * cfg.n_sources > cfg.p:
        raise ConfigurationError("need 2 * n_sources <= p for the Toeplitz bands")
    B = _shared_coef_block(cfg, rng)
    raw_contrast = _sparse_contrast(cfg, rng, np.arange(cfg.p))
    raw_w = cfg.resolved_weights()
    coef = B @ raw_w + raw_contrast
    cov = ar1_covariance(cfg.p)
    w, contrast = decompose(coef, B, cov)
    model = PopulationModel(B, cov, w, contrast, coef)
    return GeneratedProblem(
        model=model,
        source_covs=[banded_toeplitz(k + 1, cfg.p) for k in range(cfg.n_sources)],
        noise_var=1.0 if cfg.noise_var is None else cfg.noise_var,
        source_noise_vars=_source_vars(
            cfg, [1.25 ** (k + 1 - 3) for k in range(cfg.n_sources)]
        ),
        raw_weights=raw_w,
        raw_contrast=raw_contrast,
    )


def _source_vars(cfg: SimConfig, defaults: list) -> list:
    if cfg.source_noise_var is None:
        return defaults
    return [cfg.source_noise_var] * cfg.n_sources


_GENERATORS = {1: gen_example1, 2: gen_example2, 3: gen_example3, 4: gen_example4}


def generate_problem(cfg: SimConfig, rng: np.random.Generator | None = None) -> GeneratedProblem:
    """Build the ground truth for ``cfg``; the default stream is derived from
    ``cfg.seed`` and independent of the replication streams."""
    if rng is None:
        rng = np.random.default_rng(np.random.SeedSequence((cfg.seed, 0)))
    return _GENERATORS[cfg.example](cfg, rng)


def sample_dataset(
    problem: GeneratedProblem, size: int, role, rng: np.random.Generator
) -> DataSet:
    """Draw an i.i.d. Gaussian dataset for ``role`` ("target" or a 0-based
    source index) using the problem's cached covariance factors."""
    if role == "target":
        coef = problem.model.coef
        L = problem._chol_target
        identity = problem._identity_target
        var = problem.noise_var
    else:
        k = int(role)
        if not 0 <= k < problem.model.n_sources:
            raise ValueError(f"source index {k} out of range")
        coef = problem.model.source_coefs[:, k]
        L = problem._chol_sources[k]
        identity = problem._identity_sources[k]
        var = problem.source_noise_vars[k]
    Z = rng.standard_normal((size, problem.model.p))
    X = Z if identity else Z @ L.T
    y = X @ coef + np.sqrt(var) * rng.standard_normal(size)
    return DataSet(X, y)
