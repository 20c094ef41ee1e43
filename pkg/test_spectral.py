"""
Tests for the instantaneous eigenanalysis.
"""

import numpy as np
import pytest

from ghz_chain.chain import build_subspace_basis, static_hamiltonian
from ghz_chain.errors import GapClosedError, UndefinedLocalizationError
from ghz_chain.models import ChainSpec, HamiltonianMatrix, Scheme
from ghz_chain.spectral import (
    adiabaticity_margin,
    analytic_edge_state,
    energy_gap,
    instantaneous_spectrum,
    ratio_spectrum,
    spectral_flow,
    winding_number,
    zero_mode_distribution,
    zero_mode_weights,
)


class TestZeroMode:
    """Test zero-mode selection and the closed-form edge state."""

    @pytest.mark.parametrize("j1,j2", [(0.3, 1.0), (1.0, 0.3), (0.7, 0.7)])
    def test_two_qutrit_zero_mode(self, j1, j2):
        spec = ChainSpec(N=2)
        result = instantaneous_spectrum(static_hamiltonian(spec, j1, j2), build_subspace_basis(spec))
        assert abs(result.zero_mode_energy) < 1e-12
        expected = np.array([j2, 0.0, -j1]) / np.hypot(j1, j2)
        assert abs(np.dot(expected, result.zero_mode_vector)) == pytest.approx(1.0)

    @pytest.mark.parametrize("j1,j2", [(0.3, 1.0), (1.0, 0.4), (0.9, 1.0)])
    def test_analytic_state_matches_numerics(self, j1, j2):
        spec = ChainSpec(N=5)
        basis = build_subspace_basis(spec)
        result = instantaneous_spectrum(static_hamiltonian(spec, j1, j2), basis)
        analytic = analytic_edge_state(j1, j2, 5)
        overlap = np.dot(analytic.embed(basis), result.zero_mode_vector)
        assert abs(overlap) == pytest.approx(1.0, abs=1e-10)
        assert analytic.left_localized is (j1 < j2)
        assert analytic.gamma_amplitude == 1.0 and analytic.eta_amplitude == 0.0

    def test_random_chains_match_closed_form(self):
        rng = np.random.default_rng(7)
        for _ in range(100):
            n = int(rng.integers(2, 31))
            j1, j2 = rng.uniform(0.1, 1.0, size=2)
            spec = ChainSpec(N=n)
            basis = build_subspace_basis(spec)
            result = instantaneous_spectrum(static_hamiltonian(spec, j1, j2), basis)
            expected = analytic_edge_state(j1, j2, n).embed(basis)
            vector = np.real(result.zero_mode_vector)
            vector = vector * np.sign(np.dot(vector, expected))
            assert np.max(np.abs(vector - expected)) < 1e-9

    def test_analytic_state_signs(self):
        state = analytic_edge_state(0.5, 1.0, 3)
        assert state.lam == -0.5
        assert np.sign(state.amplitudes).tolist() == [-1.0, 1.0, -1.0]
        assert np.linalg.norm(state.amplitudes) == pytest.approx(1.0)

    def test_analytic_state_large_chain_is_finite(self):
        state = analytic_edge_state(1.0, 1e-3, 150)
        assert np.all(np.isfinite(state.amplitudes))
        assert abs(state.amplitudes[-1]) == pytest.approx(1.0, abs=1e-5)

    def test_analytic_state_zero_j1(self):
        state = analytic_edge_state(0.0, 1.0, 4)
        assert state.amplitudes.tolist() == [1.0, 0.0, 0.0, 0.0]

    def test_undefined_when_j2_vanishes(self):
        with pytest.raises(UndefinedLocalizationError):
            analytic_edge_state(1.0, 0.0, 4)

    def test_lossy_spectrum_is_complex(self):
        H = HamiltonianMatrix(diagonal=np.array([-0.05j, -0.05j, -0.05j]), offdiagonal=np.array([0.3, 1.0]))
        result = instantaneous_spectrum(H)
        assert result.eigenvalues.dtype.kind == "c"
        assert result.zero_mode_energy.imag == pytest.approx(-0.05)
        assert np.all(np.diff(result.eigenvalues.real) >= 0)


class TestSpectralFlow:
    """Test spectra along the pulse sequence."""

    def test_edge_to_edge_transfer_scheme_a(self):
        spec = ChainSpec(N=4, T=700.0)
        weights = zero_mode_distribution(spec, [0.0, 700.0])
        assert weights[0, 0] > 0.999
        assert weights[1, -1] > 0.999
        assert np.allclose(weights.sum(axis=1), 1.0)

    def test_scheme_c_starts_on_p(self):
        spec = ChainSpec(N=3, scheme="C", T=700.0)
        weights = zero_mode_distribution(spec, [0.0, 700.0])
        assert weights[0, 0] > 0.999
        assert weights[1, -1] > 0.999

    def test_scheme_b_dressed_p(self):
        spec = ChainSpec(N=3, scheme="B", T=700.0)
        flow = spectral_flow(spec, [0.0])
        assert abs(flow[0].zero_mode_energy) < 1e-9
        weights = zero_mode_weights(flow[0])
        assert weights[0] == pytest.approx(400.0 / 401.0, abs=1e-4)

    def test_scheme_b_uncompensated_edge_is_shifted(self):
        spec = ChainSpec(N=3, scheme="B", T=700.0, stark_compensation=False)
        result = spectral_flow(spec, [0.0])[0]
        p_weights = np.abs(result.eigenvectors[0, :]) ** 2
        dressed = int(np.argmax(p_weights))
        shift = -(np.sqrt(400.0 ** 2 + 4 * 20.0 ** 2) - 400.0) / 2
        assert p_weights[dressed] == pytest.approx(400.0 / 401.0, abs=1e-4)
        assert result.eigenvalues[dressed] == pytest.approx(shift, abs=1e-4)
        assert zero_mode_weights(result)[0] < 0.01

    def test_long_chain_keeps_exact_zero_mode(self):
        spec = ChainSpec(N=25, T=3600.0)
        flow = spectral_flow(spec, np.linspace(0.0, 3600.0, 37))
        assert max(abs(result.zero_mode_energy) for result in flow) < 1e-10
        assert zero_mode_weights(flow[0])[0] > 0.99
        assert zero_mode_weights(flow[-1])[-1] > 0.99

    def test_chiral_symmetry(self):
        spec = ChainSpec(N=4, T=700.0)
        values = spectral_flow(spec, [300.0])[0].eigenvalues
        assert np.allclose(values, -values[::-1])

    def test_ratio_spectrum(self):
        flow = ratio_spectrum(3, Scheme.A, [0.0, 0.5, 1.0, 2.0])
        assert len(flow) == 4
        for result in flow:
            assert len(result.eigenvalues) == 5
            assert abs(result.zero_mode_energy) < 1e-12

    def test_energy_gap(self):
        spec = ChainSpec(N=2)
        gap = energy_gap(static_hamiltonian(spec, 0.6, 0.8))
        assert gap == pytest.approx(1.0)


class TestTopology:
    def test_winding_number(self):
        assert winding_number(0.5, 1.0) == 1
        assert winding_number(1.0, 0.5) == 0

    def test_gap_closed(self):
        with pytest.raises(GapClosedError):
            winding_number(1.0, 1.0)

    def test_adiabaticity_margin_decreases_with_time(self):
        fast = adiabaticity_margin(ChainSpec(N=3, T=70.0), [35.0])
        slow = adiabaticity_margin(ChainSpec(N=3, T=700.0), [350.0])
        assert fast[0] > 0
        assert slow[0] == pytest.approx(fast[0] / 10.0, rel=1e-3)
