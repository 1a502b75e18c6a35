import numpy as np
import pytest

from ptl import (
    ConfigurationError,
    SimConfig,
    ar1_covariance,
    banded_toeplitz,
    check_identification,
    gen_example2,
    generate_problem,
    sample_dataset,
)


def cfg_for(example, **kw):
    base = dict(example=example, n=50, source_n=100, p=120, support=30, seed=0)
    base.update(kw)
    return SimConfig(**base)


def fresh_rng(seed=0):
    return np.random.default_rng(np.random.SeedSequence((seed, 0)))


class TestSimConfig:
    def test_floor_formulas(self):
        cfg = cfg_for(1, support=40, p=200)
        assert cfg.ortho_rows == 13
        assert cfg.contrast_support == 8

    def test_default_weights_require_five_sources(self):
        with pytest.raises(ConfigurationError, match="weights"):
            cfg_for(1, n_sources=3)
        cfg = cfg_for(1, n_sources=3, weights=(1.0, 0.5, -0.5))
        assert cfg.resolved_weights() == pytest.approx([1.0, 0.5, -0.5])

    def test_bad_example_rejected(self):
        with pytest.raises(ConfigurationError):
            cfg_for(5)

    def test_support_bounds(self):
        with pytest.raises(ConfigurationError):
            cfg_for(1, support=120)


class TestExample1:
    def test_rows_beyond_support_are_zero(self):
        problem = generate_problem(cfg_for(1))
        B = problem.model.source_coefs
        assert not B[30:].any()
        assert B[:10].any()

    def test_contrast_disjoint_from_source_support(self):
        problem = generate_problem(cfg_for(1))
        support = np.flatnonzero(problem.model.contrast)
        assert support.size == 6  # 30 // 5
        assert (support >= 30).all()
        # exact orthogonality by disjoint supports
        assert not (problem.model.source_coefs.T @ problem.model.contrast).any()

    def test_unit_singular_vectors(self):
        problem = generate_problem(cfg_for(1))
        u = problem.model.source_coefs[:10] / 2.0
        assert np.allclose(np.linalg.norm(u, axis=0), 1.0)

    def test_identity_covariances_unit_noise(self):
        problem = generate_problem(cfg_for(1))
        assert np.array_equal(problem.model.covariance, np.eye(120))
        assert problem.noise_var == 1.0
        assert problem.source_noise_vars == [1.0] * 5

    def test_ortho_rows_precondition(self):
        with pytest.raises(ConfigurationError, match="n_sources"):
            generate_problem(cfg_for(1, support=12))  # 12 // 3 = 4 < 5

    def test_contrast_second_moment_tracks_scale(self):
        # mean squared norm over many seeds approximates the scale parameter
        norms = []
        for seed in range(100):
            problem = generate_problem(cfg_for(1, seed=seed))
            norms.append(np.sum(problem.model.contrast ** 2))
        assert abs(np.mean(norms) - 6.0) <= 0.3 * 6.0

    def test_bit_identical_regeneration(self):
        a = generate_problem(cfg_for(1))
        b = generate_problem(cfg_for(1))
        assert np.array_equal(a.model.coef, b.model.coef)
        assert np.array_equal(a.model.source_coefs, b.model.source_coefs)


class TestExample2:
    def test_identification_holds(self):
        problem = generate_problem(cfg_for(2))
        ok, viol = check_identification(
            problem.model.source_coefs, problem.model.covariance, problem.model.contrast
        )
        assert ok and viol <= 1e-8

    def test_contrast_norm_equals_scale(self):
        problem = generate_problem(cfg_for(2))
        assert np.linalg.norm(problem.model.contrast) == pytest.approx(6.0)

    def test_common_support_shared_by_all_sources(self):
        cfg = cfg_for(2)
        problem = generate_problem(cfg)
        B = problem.model.source_coefs
        s_c = cfg.resolved_common_support()
        for k in range(5):
            support = set(np.flatnonzero(B[:, k]))
            assert set(range(s_c)) <= support
            assert len(support) == cfg.support

    def test_contrast_support_must_exceed_sources(self):
        with pytest.raises(ConfigurationError, match="null space"):
            gen_example2(cfg_for(2, support=25), fresh_rng())  # 25 // 5 = 5 == K

    def test_common_support_override(self):
        problem = generate_problem(cfg_for(2, common_support=10))
        B = problem.model.source_coefs
        shared = np.flatnonzero((B != 0).all(axis=1))
        assert set(range(10)) <= set(shared)


class TestExample3:
    def test_first_rows_of_banded_toeplitz(self):
        assert banded_toeplitz(1, 5)[0] == pytest.approx([1.0, 0.5, 0.0, 0.0, 0.0])
        assert banded_toeplitz(2, 6)[0] == pytest.approx(
            [1.0, 1 / 3, 1 / 3, 1 / 3, 0.0, 0.0]
        )

    def test_source_covariances_positive_definite_at_full_scale(self):
        for k in range(1, 6):
            cov = banded_toeplitz(k, 500)
            assert np.linalg.eigvalsh(cov).min() > 0

    def test_noise_variances_grow_with_index(self):
        problem = generate_problem(cfg_for(3))
        assert problem.source_noise_vars == [1.0, 2.0, 3.0, 4.0, 5.0]
        assert problem.noise_var == 1.0

    def test_target_covariance_identity(self):
        problem = generate_problem(cfg_for(3))
        assert np.array_equal(problem.model.covariance, np.eye(120))


class TestExample4:
    def test_raw_pair_violates_identification(self):
        # nonzero violation is a probability-1 event; its magnitude clears the
        # working tolerance unless the contrast support happens to land far
        # from the source support, where the AR(1) coupling decays below
        # machine precision
        violations = []
        for seed in range(20):
            problem = generate_problem(cfg_for(4, seed=seed))
            _, viol = check_identification(
                problem.model.source_coefs, problem.model.covariance, problem.raw_contrast
            )
            violations.append(viol)
        assert min(violations) > 0.0
        assert sum(v > 1e-8 for v in violations) >= 18

    def test_canonical_pair_satisfies_identification(self):
        problem = generate_problem(cfg_for(4))
        ok, viol = check_identification(
            problem.model.source_coefs, problem.model.covariance, problem.model.contrast
        )
        assert ok, viol

    def test_raw_and_canonical_assemble_same_coef(self):
        problem = generate_problem(cfg_for(4))
        raw = problem.model.source_coefs @ problem.raw_weights + problem.raw_contrast
        assert np.allclose(raw, problem.model.coef, atol=1e-12)

    def test_ar1_entries(self):
        cov = ar1_covariance(5)
        assert cov[0, 2] == pytest.approx(0.25)
        problem = generate_problem(cfg_for(4))
        assert problem.model.covariance[0, 2] == pytest.approx(0.25)

    def test_source_noise_geometric(self):
        problem = generate_problem(cfg_for(4))
        assert problem.source_noise_vars == pytest.approx(
            [1.25 ** (k - 2) for k in range(5)]
        )


class TestSampleDataset:
    def test_sample_covariance_close_to_identity(self):
        problem = generate_problem(cfg_for(1, p=20, support=15))
        rng = np.random.default_rng(0)
        ds = sample_dataset(problem, 10_000, "target", rng)
        emp = ds.X.T @ ds.X / 10_000
        assert np.abs(emp - np.eye(20)).max() <= 0.1

    def test_zero_noise_exact_linear_response(self):
        problem = generate_problem(cfg_for(1, noise_var=0.0))
        rng = np.random.default_rng(1)
        ds = sample_dataset(problem, 50, "target", rng)
        assert np.array_equal(ds.y, ds.X @ problem.model.coef)

    def test_fixed_seed_reproducible(self):
        problem = generate_problem(cfg_for(3))
        a = sample_dataset(problem, 30, 2, np.random.default_rng(7))
        b = sample_dataset(problem, 30, 2, np.random.default_rng(7))
        assert np.array_equal(a.X, b.X) and np.array_equal(a.y, b.y)

    def test_correlated_roles_use_their_covariance(self):
        problem = generate_problem(cfg_for(4, p=40, support=20))
        rng = np.random.default_rng(2)
        ds = sample_dataset(problem, 20_000, "target", rng)
        emp = ds.X.T @ ds.X / 20_000
        assert abs(emp[0, 1] - 0.5) <= 0.05

    def test_bad_role_rejected(self):
        problem = generate_problem(cfg_for(1))
        with pytest.raises(ValueError):
            sample_dataset(problem, 10, 9, np.random.default_rng(0))
