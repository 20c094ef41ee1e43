"""
Tests for the subspace time evolution and its observables.
"""

import math

import numpy as np
import pytest
from scipy import linalg

from ghz_chain.chain import apply_disorder, build_subspace_basis
from ghz_chain.dynamics import (
    EvolutionSettings,
    edge_state,
    evolve,
    fidelity,
    final_fidelity,
    ghz_initial_state,
    ghz_sign,
    ideal_ghz_state,
    named_state,
    populations,
    propagate,
)
from ghz_chain.errors import DimensionMismatchError, StepSizeConvergenceError, UnknownProjectorError
from ghz_chain.models import ChainSpec, HamiltonianMatrix

SIGMA_X = np.array([[0.0, 1.0], [1.0, 0.0]], dtype=complex)


class TestPropagate:
    """Test the commutator-free Magnus integrator."""

    def test_static_hamiltonian_is_exact(self):
        H = HamiltonianMatrix(diagonal=np.array([0.2, -0.1, 0.3], dtype=complex), offdiagonal=np.array([1.0, 0.5]))
        psi0 = np.array([1.0, 0.0, 0.0], dtype=complex)
        settings = EvolutionSettings(verify_step=False)
        states, _ = propagate(lambda t: H, psi0, [0.0, 1.0, 5.0], 0.7, settings)
        for t, state in zip([0.0, 1.0, 5.0], states):
            expected = linalg.expm(-1j * t * H.to_dense()) @ psi0
            assert np.allclose(state, expected, atol=1e-12)

    def test_fourth_order_convergence(self):
        psi0 = np.array([1.0, 0.0], dtype=complex)
        settings = EvolutionSettings(verify_step=False)
        # H(t) = cos(t) sigma_x commutes with itself, so psi(t) = exp(-i sin(t) sigma_x) psi0
        exact = linalg.expm(-1j * math.sin(3.0) * SIGMA_X) @ psi0

        def error(step):
            states, _ = propagate(lambda t: math.cos(t) * SIGMA_X, psi0, [3.0], step, settings)
            return np.linalg.norm(states[-1] - exact)

        ratio = error(0.3) / error(0.15)
        assert 12.0 < ratio < 20.0

    def test_verification_halves_step(self):
        psi0 = np.array([1.0, 0.0], dtype=complex)
        states, step = propagate(lambda t: math.cos(t) * SIGMA_X, psi0, [3.0], 0.5, EvolutionSettings())
        assert step < 0.5
        exact = linalg.expm(-1j * math.sin(3.0) * SIGMA_X) @ psi0
        assert np.linalg.norm(states[-1] - exact) < 1e-7

    def test_step_search_can_fail(self):
        psi0 = np.array([1.0, 0.0], dtype=complex)
        settings = EvolutionSettings(tolerance=0.0, max_halvings=1)
        with pytest.raises(StepSizeConvergenceError):
            propagate(lambda t: math.cos(t) * SIGMA_X, psi0, [3.0], 0.5, settings)

    @pytest.mark.parametrize("grid", [[], [1.0, 0.5], [-1.0, 1.0], [0.0, 0.0]])
    def test_rejects_bad_grid(self, grid):
        with pytest.raises(ValueError):
            propagate(lambda t: SIGMA_X, np.array([1.0, 0.0], dtype=complex), grid, 0.1)

    def test_base_step(self):
        settings = EvolutionSettings()
        assert settings.base_step(100.0) == 0.5
        assert settings.base_step(10.0) == pytest.approx(0.2)


class TestEvolve:
    """Test evolution on the chain subspace."""

    def test_lossless_norm(self):
        spec = ChainSpec(N=3, T=200.0)
        trace = evolve(spec, None, edge_state(spec), np.linspace(0.0, 200.0, 21), lossy=False)
        assert np.allclose(trace.norms, 1.0, atol=1e-10)
        assert trace.times.shape == (21,)
        assert trace.states.shape == (21, 5)

    def test_default_grid(self):
        spec = ChainSpec(N=2, T=20.0)
        trace = evolve(spec, None, edge_state(spec))
        assert len(trace.times) == 4001
        assert trace.times[-1] == 20.0

    def test_uniform_loss_scales_norm(self):
        spec = ChainSpec(N=3, T=200.0, gamma=0.01, kappa=0.01)
        trace = evolve(spec, None, edge_state(spec), [0.0, 100.0, 200.0])
        assert trace.norms == pytest.approx(np.exp(-0.005 * np.array([0.0, 100.0, 200.0])), rel=1e-9)

    def test_nonuniform_loss_decays(self):
        spec = ChainSpec(N=3, T=200.0, gamma=0.0, kappa=0.02)
        trace = evolve(spec, None, edge_state(spec), np.linspace(0.0, 200.0, 11))
        assert np.all(np.diff(trace.norms) <= 1e-12)
        assert trace.norms[-1] < 1.0

    def test_lossy_flag_disables_decay(self):
        spec = ChainSpec(N=3, T=200.0, kappa=0.02)
        trace = evolve(spec, None, edge_state(spec), [0.0, 200.0], lossy=False)
        assert trace.norms[-1] == pytest.approx(1.0, abs=1e-10)

    def test_decoupled_amplitude_is_constant(self):
        spec = ChainSpec(N=3, T=100.0, gamma=0.05)
        trace = evolve(spec, None, ghz_initial_state(spec), [0.0, 50.0, 100.0])
        assert trace.decoupled == pytest.approx(1 / math.sqrt(2))
        assert trace.final.decoupled == trace.decoupled

    def test_dimension_mismatch(self):
        with pytest.raises(DimensionMismatchError):
            evolve(ChainSpec(N=4), None, edge_state(ChainSpec(N=3)))

    def test_explicit_phase_frame_matches_static_frame(self):
        spec = ChainSpec(N=3, scheme="B", T=1.0)
        settings = EvolutionSettings(max_step=1.5e-4, verify_step=False)
        grid = np.linspace(0.0, 1.0, 6)
        static = evolve(spec, None, ghz_initial_state(spec), grid, settings=settings)
        explicit = evolve(spec, None, ghz_initial_state(spec), grid, settings=settings, explicit_phase=True)
        assert explicit.step <= 2 * math.pi / (40 * 400.0)
        assert np.max(np.abs(np.abs(static.states) ** 2 - np.abs(explicit.states) ** 2)) < 1e-6
        assert np.max(np.abs(np.abs(static.states[-1]) ** 2 - np.abs(static.states[0]) ** 2)) > 1e-3

    def test_explicit_phase_ignored_outside_scheme_b(self):
        spec = ChainSpec(N=3, T=30.0)
        grid = [0.0, 30.0]
        plain = evolve(spec, None, edge_state(spec), grid)
        flagged = evolve(spec, None, edge_state(spec), grid, explicit_phase=True)
        assert np.allclose(plain.states, flagged.states, atol=1e-14)

    def test_omitted_realization_draws_spec_disorder(self):
        spec = ChainSpec(N=3, T=40.0, disorder_delta=0.5, seed=1)
        implicit = final_fidelity(spec)
        assert implicit == pytest.approx(final_fidelity(spec, apply_disorder(spec, 0)), abs=1e-12)
        assert abs(implicit - final_fidelity(spec.with_updates(disorder_delta=0.0))) > 1e-4

    def test_step_halving_drift(self):
        spec = ChainSpec(N=3, T=100.0)
        coarse = final_fidelity(spec, settings=EvolutionSettings(tolerance=1e-9))
        fine = final_fidelity(spec, settings=EvolutionSettings(max_step=0.1, tolerance=1e-9))
        assert abs(coarse - fine) < 1e-7


class TestGHZ:
    """Test GHZ states and protocol fidelity."""

    def test_initial_and_ideal_states(self):
        spec = ChainSpec(N=3, scheme="B")
        initial = ghz_initial_state(spec)
        ideal = ideal_ghz_state(spec)
        assert initial.norm() == pytest.approx(1.0)
        assert initial.amplitudes[0] == pytest.approx(1 / math.sqrt(2))
        assert ideal.amplitudes[-1] == pytest.approx(ghz_sign(spec) / math.sqrt(2))

    @pytest.mark.parametrize("n,scheme,sign", [(2, "A", -1), (3, "A", 1), (2, "B", -1), (3, "B", 1),
                                                (2, "C", 1), (3, "C", -1)])
    def test_sign(self, n, scheme, sign):
        assert ghz_sign(ChainSpec(N=n, scheme=scheme)) == sign

    @pytest.mark.parametrize("n", [2, 3, 4, 5])
    @pytest.mark.parametrize("scheme", ["A", "C"])
    def test_final_sign_follows_parity(self, n, scheme):
        spec = ChainSpec(N=n, scheme=scheme, T=400.0)
        trace = evolve(spec, None, ghz_initial_state(spec), [0.0, 400.0])
        right = trace.final.amplitudes[-1] / trace.decoupled
        assert abs(right) == pytest.approx(1.0, abs=0.05)
        assert np.sign(right.real) == ghz_sign(spec)

    @pytest.mark.parametrize("scheme", ["A", "C"])
    def test_adiabatic_fidelity(self, scheme):
        spec = ChainSpec(N=3, scheme=scheme, T=400.0)
        assert final_fidelity(spec) > 0.99

    def test_short_protocol_loses_fidelity(self):
        fast = final_fidelity(ChainSpec(N=3, T=10.0))
        slow = final_fidelity(ChainSpec(N=3, T=400.0))
        assert fast < slow

    def test_loss_lowers_fidelity(self):
        clean = final_fidelity(ChainSpec(N=3, T=400.0))
        lossy = final_fidelity(ChainSpec(N=3, T=400.0, gamma=1e-3, kappa=1e-3))
        assert lossy < clean
        assert final_fidelity(ChainSpec(N=3, T=400.0, gamma=1e-3), lossy=False) == pytest.approx(clean)

    def test_populations(self):
        spec = ChainSpec(N=3, T=400.0)
        trace = evolve(spec, None, ghz_initial_state(spec), [0.0, 400.0])
        curves = populations(trace, ["ghz_initial", "ghz_ideal", "decoupled", "e@A2", 0], spec)
        assert curves["ghz_initial"][0] == pytest.approx(1.0)
        assert curves["decoupled"] == pytest.approx([0.5, 0.5])
        assert curves["ghz_ideal"][-1] > 0.99
        assert curves["0"][0] == pytest.approx(0.5)
        assert set(trace.overlaps) == {"ghz_initial", "ghz_ideal", "decoupled", "e@A2", "0"}
        assert fidelity(trace, ideal_ghz_state(spec))[-1] == pytest.approx(curves["ghz_ideal"][-1])


class TestNamedState:
    def test_known_names(self):
        basis = build_subspace_basis(ChainSpec(N=3))
        assert named_state(basis, "right_edge").amplitudes[-1] == 1.0
        assert named_state(basis, "ph@B2").amplitudes[3] == 1.0
        assert named_state(basis, "decoupled").decoupled == 1.0

    @pytest.mark.parametrize("name", ["nowhere", "ph@B9", 17])
    def test_unknown_names(self, name):
        basis = build_subspace_basis(ChainSpec(N=3))
        with pytest.raises(UnknownProjectorError):
            named_state(basis, name)

    def test_edge_state_side(self):
        with pytest.raises(UnknownProjectorError):
            edge_state(ChainSpec(N=3), "middle")
