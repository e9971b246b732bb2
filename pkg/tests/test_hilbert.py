import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.special import eval_hermite, i0
from scipy.stats import skellam

import macrobell as mb
from macrobell.hilbert import _mixer_mode_matrix


# ------------------------------------------------------------------ grids

class TestQuadratureGrid:
    def test_point_count_and_endpoints(self):
        g = mb.QuadratureGrid(-8.0, 8.0, 0.01)
        xs = g.points()
        assert g.n_points == 1601
        assert xs[0] == -8.0
        assert abs(xs[-1] - 8.0) < 1e-12

    def test_zero_node_is_exact(self):
        xs = mb.QuadratureGrid(-8.0, 8.0, 0.01).points()
        assert np.count_nonzero(xs == 0.0) == 1

    def test_weights_integrate_constant(self):
        g = mb.QuadratureGrid(-3.0, 5.0, 0.1)
        assert abs(g.trapezoid_weights().sum() - 8.0) < 1e-12

    def test_symmetry_flag(self):
        assert mb.QuadratureGrid(-2.0, 2.0, 0.5).is_symmetric
        assert not mb.QuadratureGrid(-2.0, 2.5, 0.5).is_symmetric

    @pytest.mark.parametrize("lo,hi,step", [(1.0, 0.0, 0.1), (0.0, 1.0, -0.1),
                                            (0.0, 1.0, 0.0)])
    def test_rejects_bad_bounds(self, lo, hi, step):
        with pytest.raises(ValueError):
            mb.QuadratureGrid(lo, hi, step)

    def test_halved_keeps_endpoints(self):
        g = mb.QuadratureGrid(-4.0, 4.0, 0.02).halved()
        assert g.step == 0.01 and g.n_points == 801


# -------------------------------------------------- oscillator wavefunctions

def direct_hermite_phi(n, x):
    # independent route: physicists' Hermite polynomial with explicit
    # normalization, phi_n(x) = (2pi)^(-1/4) (2^n n!)^(-1/2) H_n(x/sqrt2) e^(-x^2/4)
    norm = (2.0 * np.pi) ** -0.25 / math.sqrt(2.0 ** n * math.factorial(n))
    return norm * eval_hermite(n, x / math.sqrt(2.0)) * math.exp(-x * x / 4.0)


class TestHermiteWavefunctions:
    def test_vacuum_value_at_origin(self):
        row = mb.hermite_wavefunction_row(0, 0.0)
        assert row[0] == pytest.approx((2.0 * np.pi) ** -0.25, abs=1e-15)
        assert row[0] == pytest.approx(0.63161878, abs=1e-7)

    def test_odd_function_vanishes_at_origin(self):
        row = mb.hermite_wavefunction_row(2, 0.0)
        assert row[1] == 0.0

    @pytest.mark.parametrize("x", [-2.7, -0.3, 0.9, 3.4])
    def test_matches_direct_formula(self, x):
        row = mb.hermite_wavefunction_row(25, x)
        for n in range(26):
            assert row[n] == pytest.approx(direct_hermite_phi(n, x),
                                           rel=1e-10, abs=1e-13)

    def test_normalization_oracle_n40(self):
        g = mb.recommended_grid(40)
        phi = mb.hermite_wavefunction_matrix(40, g.points())
        norms = (phi * phi) @ g.trapezoid_weights()
        assert np.max(np.abs(norms - 1.0)) < 1e-8

    def test_normalization_to_n60(self):
        # the n = 60 wavefunction turns over near x = 15.6, so its grid
        # must reach well beyond the default [-8, 8]
        g = mb.QuadratureGrid(-18.0, 18.0, 0.01)
        phi = mb.hermite_wavefunction_matrix(60, g.points())
        norms = (phi * phi) @ g.trapezoid_weights()
        assert np.max(np.abs(norms - 1.0)) < 1e-6

    def test_parity_exact_on_grid(self):
        xs = mb.QuadratureGrid(-6.0, 6.0, 0.05).points()
        phi = mb.hermite_wavefunction_matrix(30, xs)
        signs = (-1.0) ** np.arange(31)
        assert np.array_equal(phi[:, ::-1], signs[:, None] * phi)

    def test_stable_past_n150(self):
        row = mb.hermite_wavefunction_row(200, 1.3)
        assert np.all(np.isfinite(row))

    @given(st.integers(0, 40), st.floats(-6, 6))
    @settings(max_examples=30, deadline=None)
    def test_parity_property(self, n, x):
        left = mb.hermite_wavefunction_row(n, -x)[n]
        right = mb.hermite_wavefunction_row(n, x)[n]
        assert left == pytest.approx((-1.0) ** n * right, rel=1e-12, abs=1e-300)

    def test_rejects_negative_n_max(self):
        with pytest.raises(ValueError):
            mb.hermite_wavefunction_row(-1, 0.0)


# ----------------------------------------------------------------- gaussian

class TestGaussianCdf:
    def test_symmetry_point(self):
        assert mb.gaussian_cdf(0.0) == 0.5

    def test_saturation(self):
        assert mb.gaussian_cdf(40.0) == 1.0
        assert mb.gaussian_cdf(-40.0) == 0.0

    def test_value_at_one_vs_erf_series(self):
        # oracle: Taylor series of erf(1/sqrt2), Phi(1) = (1 + erf(1/sqrt2))/2
        z = 1.0 / math.sqrt(2.0)
        term, total, n = z, z, 0
        while abs(term) > 1e-18:
            n += 1
            term = (-1) ** n * z ** (2 * n + 1) / (math.factorial(n) * (2 * n + 1))
            total += term
        expected = 0.5 * (1.0 + 2.0 / math.sqrt(math.pi) * total)
        assert expected == pytest.approx(0.8413447460685429, abs=1e-15)
        assert mb.gaussian_cdf(1.0) == pytest.approx(expected, abs=1e-12)

    def test_array_input(self):
        out = mb.gaussian_cdf(np.array([0.0, 1.0]))
        assert out.shape == (2,) and out[0] == 0.5

    @given(st.floats(-10, 10))
    @settings(max_examples=50, deadline=None)
    def test_reflection_identity(self, x):
        assert mb.gaussian_cdf(x) + mb.gaussian_cdf(-x) == pytest.approx(1.0, abs=1e-12)


# ------------------------------------------------------------------- bessel

class TestBesselI0:
    def test_series_leading_term(self):
        assert mb.bessel_i0(0.0) == 1.0

    def test_pair_coherent_normalization_argument(self):
        # 2 * 1.1^2 = 2.42 is the argument the benchmark state needs
        assert mb.bessel_i0(2.42) == pytest.approx(3.0957, abs=2e-4)
        assert mb.bessel_i0(2.42) == pytest.approx(i0(2.42), rel=1e-14)

    def test_monotone(self):
        assert mb.bessel_i0(3.0) > mb.bessel_i0(2.0)

    def test_rejects_negative(self):
        with pytest.raises(ValueError):
            mb.bessel_i0(-0.1)

    @given(st.floats(0, 30))
    @settings(max_examples=40, deadline=None)
    def test_matches_scipy(self, x):
        assert mb.bessel_i0(x) == pytest.approx(float(i0(x)), rel=1e-12)


# ----------------------------------------------------------------- coherent

class TestCoherentAmplitudes:
    def test_vacuum(self):
        c = mb.coherent_amplitudes(0.0, 5)
        assert np.array_equal(c, np.eye(6, dtype=complex)[0])

    def test_total_mass(self):
        c = mb.coherent_amplitudes(2.0, 40)
        assert abs(np.sum(np.abs(c) ** 2) - 1.0) < 1e-12

    def test_poisson_weight(self):
        c = mb.coherent_amplitudes(2.0, 40)
        expected = 4.0 ** 4 * math.exp(-4.0) / math.factorial(4)
        assert abs(c[4]) ** 2 == pytest.approx(expected, rel=1e-12)
        assert expected == pytest.approx(0.19537, abs=1e-5)

    def test_truncation_guard(self):
        with pytest.raises(mb.TruncationError):
            mb.coherent_amplitudes(2.0, 4)

    def test_phase_moves_only_phases(self):
        mag_real = np.abs(mb.coherent_amplitudes(1.5, 25))
        mag_rot = np.abs(mb.coherent_amplitudes(1.5 * np.exp(0.7j), 25))
        assert np.allclose(mag_real, mag_rot, atol=1e-15)

    @given(st.floats(0.1, 5.0))
    @settings(max_examples=25, deadline=None)
    def test_mass_property(self, amp):
        n_max = int(amp * amp + 10 * amp + 20)
        c = mb.coherent_amplitudes(amp, n_max)
        assert abs(np.sum(np.abs(c) ** 2) - 1.0) < 1e-9


# -------------------------------------------------------------- beamsplitter

class TestBeamsplitterUnitary:
    @pytest.mark.parametrize("phase", [0.0, 0.7, -2.1])
    def test_complete_blocks_unitary(self, phase):
        u = mb.beamsplitter_unitary(25, phase)
        for total_n in range(26):
            block = u.block(total_n)
            defect = np.linalg.norm(block.conj().T @ block - np.eye(total_n + 1), 2)
            assert defect <= 1e-10

    def test_single_photon_block(self):
        theta = 0.9
        u = mb.beamsplitter_unitary(3, theta)
        block = u.block(1)
        # |1,0> splits evenly with + sign; |0,1> carries the shifter phase
        assert np.allclose(np.abs(block) ** 2, 0.5 * np.ones((2, 2)), atol=1e-12)
        assert np.allclose(block, _mixer_mode_matrix(theta), atol=1e-12)

    def test_block_basis_bookkeeping(self):
        u = mb.beamsplitter_unitary(2, 0.0)
        assert u.block_basis(2) == [(2, 0), (1, 1), (0, 2)]
        assert u.block_basis(3) == [(2, 1), (1, 2)]
        assert u.block(3).shape == (2, 2)

    def test_photon_number_conserved_under_apply(self):
        u = mb.beamsplitter_unitary(4, 0.3)
        psi = np.zeros((5, 5), dtype=complex)
        psi[1, 1] = 1.0  # total N = 2
        out = u.apply(psi)
        mass_by_total = {}
        for a in range(5):
            for b in range(5):
                mass_by_total.setdefault(a + b, 0.0)
                mass_by_total[a + b] += abs(out[a, b]) ** 2
        assert mass_by_total[2] == pytest.approx(1.0, abs=1e-12)
        assert all(v < 1e-24 for k, v in mass_by_total.items() if k != 2)

    def test_coherent_vacuum_gives_skellam(self):
        # |alpha> (x) |0> in, so both outputs are independent coherent beams
        # and the count difference is Skellam(|alpha|^2/2, |alpha|^2/2)
        alpha, n_max = 2.0, 30
        u = mb.beamsplitter_unitary(n_max, 0.0)
        psi = np.zeros((n_max + 1, n_max + 1), dtype=complex)
        psi[:, 0] = mb.coherent_amplitudes(alpha, n_max)
        out = np.abs(u.apply(psi)) ** 2
        law = np.zeros(2 * n_max + 1)
        for a in range(n_max + 1):
            for b in range(n_max + 1):
                law[a - b + n_max] += out[a, b]
        diffs = np.arange(-n_max, n_max + 1)
        ref = skellam.pmf(diffs, alpha ** 2 / 2.0, alpha ** 2 / 2.0)
        assert 0.5 * np.abs(law - ref).sum() <= 1e-8

    def test_apply_rejects_wrong_shape(self):
        u = mb.beamsplitter_unitary(2, 0.0)
        with pytest.raises(ValueError):
            u.apply(np.zeros((2, 2), dtype=complex))

    def test_rejects_negative_cutoff(self):
        with pytest.raises(ValueError):
            mb.beamsplitter_unitary(-1, 0.0)
