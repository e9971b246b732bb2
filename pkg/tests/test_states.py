import json
import math

import numpy as np
import pytest

import macrobell as mb
from macrobell.states import X0A, X0B, XP2A, XP2B


class TestPairCoherent:
    def test_coefficient_ratio(self, pair_state):
        c = pair_state.coeffs
        assert c[1] / c[0] == pytest.approx(1.21, rel=1e-12)

    def test_leading_coefficient(self, pair_state):
        expected = 1.0 / math.sqrt(mb.bessel_i0(2.42))
        assert pair_state.coeffs[0] == pytest.approx(expected, abs=1e-9)
        assert pair_state.coeffs[0] == pytest.approx(0.568, abs=5e-4)

    @pytest.mark.parametrize("r0", [0.5, 1.1, 1.7])
    def test_normalized(self, r0):
        state = mb.pair_coherent(r0)
        assert abs(np.sum(np.abs(state.coeffs) ** 2) - 1.0) <= 1e-9

    def test_strictly_positive_coefficients(self, pair_state):
        assert np.all(pair_state.coeffs.real > 0.0)

    def test_truncation_guard(self):
        with pytest.raises(mb.TruncationError):
            mb.pair_coherent(2.5, n_max=8)

    def test_rejects_nonpositive_r0(self):
        with pytest.raises(ValueError):
            mb.pair_coherent(0.0)


class TestTwoModeSqueezed:
    def test_zero_squeezing_is_vacuum(self):
        state = mb.two_mode_squeezed(0.0, 10)
        assert state.coeffs[0] == 1.0
        assert np.all(state.coeffs[1:] == 0.0)

    def test_hyperbolic_ratio(self):
        state = mb.two_mode_squeezed(1.0, 80)
        assert state.coeffs[1] / state.coeffs[0] == pytest.approx(
            math.tanh(1.0), rel=1e-12)

    def test_geometric_ratio_constant(self):
        state = mb.two_mode_squeezed(0.7, 60)
        ratios = state.coeffs[1:] / state.coeffs[:-1]
        assert np.allclose(ratios, math.tanh(0.7), rtol=1e-12)

    def test_tail_guard(self):
        with pytest.raises(mb.TruncationError):
            mb.two_mode_squeezed(1.2, n_max=20)

    def test_recorded_tail_mass(self):
        state = mb.two_mode_squeezed(0.8, 40)
        expected = math.tanh(0.8) ** 82
        assert state.tail_mass == pytest.approx(expected, rel=1e-6)

    def test_rejects_negative_r(self):
        with pytest.raises(ValueError):
            mb.two_mode_squeezed(-0.1)


class TestTmsvCovariance:
    def test_vacuum_is_identity(self):
        assert np.array_equal(mb.tmsv_covariance(0.0).matrix, np.eye(4))

    def test_hyperbolic_entries(self):
        m = mb.tmsv_covariance(1.0).matrix
        assert m[X0A, X0A] == pytest.approx(math.cosh(2.0), rel=1e-14)
        assert m[X0A, X0B] == pytest.approx(math.sinh(2.0), rel=1e-14)
        assert m[XP2A, XP2B] == pytest.approx(-math.sinh(2.0), rel=1e-14)
        assert m[X0A, XP2A] == 0.0

    @pytest.mark.parametrize("r", [0.0, 0.5, 1.0, 2.0])
    def test_difference_quadrature_squeezed(self, r):
        cov = mb.tmsv_covariance(r)
        var_diff = cov.variance_of([1.0, 0.0, -1.0, 0.0])
        assert var_diff == pytest.approx(2.0 * math.exp(-2.0 * r), rel=1e-12)

    @pytest.mark.parametrize("r", [0.0, 0.7, 1.5])
    def test_heisenberg_product(self, r):
        m = mb.tmsv_covariance(r).matrix
        assert m[X0A, X0A] * m[XP2A, XP2A] >= 1.0

    def test_rejects_negative_r(self):
        with pytest.raises(ValueError):
            mb.tmsv_covariance(-0.2)


class TestGaussianCovarianceValidation:
    def test_rejects_asymmetric(self):
        m = np.eye(4)
        m[0, 1] = 0.5
        with pytest.raises(ValueError):
            mb.GaussianCovariance(matrix=m)

    def test_rejects_subvacuum_diagonal(self):
        with pytest.raises(ValueError):
            mb.GaussianCovariance(matrix=0.5 * np.eye(4))


class TestCrosscheck:
    def test_vacuum_moments(self):
        rep = mb.fock_vs_covariance_crosscheck(0.0, 10)
        assert rep.var_x0_fock == pytest.approx(1.0, abs=1e-8)
        assert rep.cov_x0_fock == pytest.approx(0.0, abs=1e-10)
        assert rep.consistent

    def test_moderate_squeezing_agrees(self):
        rep = mb.fock_vs_covariance_crosscheck(0.8, 40)
        assert rep.max_abs_diff <= 1e-6
        assert rep.var_x0_gaussian == pytest.approx(math.cosh(1.6), rel=1e-14)

    def test_undersized_cutoff_raises(self):
        with pytest.raises(mb.TruncationError):
            mb.fock_vs_covariance_crosscheck(1.2, 30)


class TestStateValidationAndJson:
    def test_rejects_unnormalized(self):
        with pytest.raises(ValueError):
            mb.SchmidtDiagonalState(coeffs=np.array([1.0, 0.5]), label="bad")

    def test_round_trip_dict(self, pair_state):
        data = pair_state.to_json_dict()
        assert set(data) == {"label", "n_max", "coeffs", "tail_mass"}
        back = mb.SchmidtDiagonalState.from_json_dict(data)
        assert back.label == pair_state.label
        assert np.allclose(back.coeffs, pair_state.coeffs, atol=1e-15)

    def test_round_trip_file(self, tmp_path, pair_state):
        path = tmp_path / "state.json"
        pair_state.to_json(path)
        loaded = json.loads(path.read_text())
        assert loaded["n_max"] == pair_state.n_max
        back = mb.SchmidtDiagonalState.from_json(path)
        assert np.allclose(back.coeffs, pair_state.coeffs, atol=1e-15)

    def test_complex_coefficients_survive(self):
        c = np.array([1.0, 1.0j]) / math.sqrt(2.0)
        state = mb.SchmidtDiagonalState(coeffs=c, label="phase")
        back = mb.SchmidtDiagonalState.from_json_dict(state.to_json_dict())
        assert np.allclose(back.coeffs, c, atol=1e-15)

    def test_inconsistent_n_max_rejected(self, pair_state):
        data = pair_state.to_json_dict()
        data["n_max"] += 1
        with pytest.raises(ValueError):
            mb.SchmidtDiagonalState.from_json_dict(data)
