import numpy as np
import pytest

from ptl import PopulationModel, SingularDesignError, check_identification, decompose

from reference import grid_decompose_weights


def random_spd(rng, p, floor=0.5):
    A = rng.standard_normal((p, p)) / np.sqrt(p)
    return A @ A.T + floor * np.eye(p)


class TestDecompose:
    def test_orthonormal_projection(self):
        B = np.array([[1.0], [0.0]])
        w, d = decompose(np.array([2.0, 3.0]), B, np.eye(2))
        assert w == pytest.approx([2.0])
        assert d == pytest.approx([0.0, 3.0])

    def test_in_span_gives_zero_contrast(self):
        rng = np.random.default_rng(0)
        B = rng.standard_normal((10, 3))
        w0 = np.array([1.0, -2.0, 0.5])
        w, d = decompose(B @ w0, B, random_spd(rng, 10))
        assert w == pytest.approx(w0, abs=1e-10)
        assert np.abs(d).max() < 1e-10

    def test_random_instance_orthogonal_and_reassembles(self):
        rng = np.random.default_rng(1)
        B = rng.standard_normal((10, 3))
        S = random_spd(rng, 10)
        beta = rng.standard_normal(10)
        w, d = decompose(beta, B, S)
        assert np.abs(B.T @ S @ d).max() <= 1e-10
        assert np.abs(beta - B @ w - d).max() <= 1e-12

    def test_idempotent_on_canonical_pairs(self):
        rng = np.random.default_rng(2)
        B = rng.standard_normal((12, 3))
        S = random_spd(rng, 12)
        w0 = rng.standard_normal(3)
        # build a contrast orthogonal to the sources under S
        v = rng.standard_normal(12)
        _, d0 = decompose(v, B, S)
        w, d = decompose(B @ w0 + d0, B, S)
        assert w == pytest.approx(w0, abs=1e-8)
        assert d == pytest.approx(d0, abs=1e-8)

    def test_shifted_rewrites_collapse_to_same_pair(self):
        # the same coef written with weights w - c and contrast d + B c
        # decomposes to the identical canonical pair
        rng = np.random.default_rng(3)
        B = rng.standard_normal((8, 2))
        S = random_spd(rng, 8)
        w0 = np.array([0.5, -1.0])
        _, d0 = decompose(rng.standard_normal(8), B, S)
        c = np.array([2.0, 3.0])
        coef_a = B @ w0 + d0
        coef_b = B @ (w0 - c) + (d0 + B @ c)
        wa, da = decompose(coef_a, B, S)
        wb, db = decompose(coef_b, B, S)
        assert wa == pytest.approx(wb, abs=1e-9)
        assert da == pytest.approx(db, abs=1e-9)

    def test_matches_grid_search(self):
        rng = np.random.default_rng(4)
        for K in (2, 3):
            B = rng.standard_normal((6, K))
            S = random_spd(rng, 6)
            beta = rng.standard_normal(6)
            w, _ = decompose(beta, B, S)
            if np.abs(w).max() > 2.5:
                continue
            step = 0.05 if K == 2 else 0.1
            w_grid = grid_decompose_weights(beta, B, S, step=step)
            assert np.abs(w - w_grid).max() <= step

    def test_rank_deficient_rejected(self):
        B = np.ones((5, 2))  # duplicate columns
        with pytest.raises(SingularDesignError):
            decompose(np.ones(5), B, np.eye(5))


class TestCheckIdentification:
    def test_decompose_output_passes(self):
        rng = np.random.default_rng(5)
        B = rng.standard_normal((10, 3))
        S = random_spd(rng, 10)
        _, d = decompose(rng.standard_normal(10), B, S)
        ok, viol = check_identification(B, S, d)
        assert ok and viol <= 1e-8

    def test_zero_contrast_passes(self):
        ok, viol = check_identification(np.ones((4, 2)), np.eye(4), np.zeros(4))
        assert ok and viol == 0.0

    def test_generic_contrast_fails(self):
        rng = np.random.default_rng(6)
        B = rng.standard_normal((10, 3))
        ok, viol = check_identification(B, np.eye(10), rng.standard_normal(10))
        assert not ok and viol > 1e-3


class TestPopulationModel:
    def test_valid_model_accepted(self):
        rng = np.random.default_rng(7)
        B = rng.standard_normal((9, 2))
        S = random_spd(rng, 9)
        w, d = decompose(rng.standard_normal(9), B, S)
        model = PopulationModel(B, S, w, d, B @ w + d)
        assert model.p == 9 and model.n_sources == 2

    def test_bad_assembly_rejected(self):
        B = np.eye(3)[:, :2]
        with pytest.raises(ValueError, match="reassemble"):
            PopulationModel(B, np.eye(3), np.zeros(2), np.zeros(3), np.ones(3))

    def test_identification_violation_rejected(self):
        B = np.array([[1.0], [0.0]])
        beta = np.array([1.0, 0.0])
        with pytest.raises(ValueError, match="orthogonality"):
            PopulationModel(B, np.eye(2), np.zeros(1), beta, beta)

    def test_asymmetric_covariance_rejected(self):
        B = np.array([[1.0], [0.0]])
        S = np.array([[1.0, 0.5], [0.0, 1.0]])
        with pytest.raises(ValueError, match="symmetric"):
            PopulationModel(B, S, np.ones(1), np.zeros(2), B @ np.ones(1))

    def test_indefinite_covariance_rejected(self):
        B = np.array([[1.0], [0.0]])
        S = np.diag([1.0, -1.0])
        with pytest.raises(ValueError, match="positive definite"):
            PopulationModel(B, S, np.ones(1), np.zeros(2), B @ np.ones(1))
