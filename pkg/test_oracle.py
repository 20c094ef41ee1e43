"""
Tests for the full product-space reference evolution.

The full Hamiltonian is assembled from qutrit level operators and resonator
ladder operators, so agreement with the subspace evolution checks the
single-excitation bookkeeping (basis mapping, bond orientation, edge frames).
"""

import math

import numpy as np
import pytest

from ghz_chain.chain import apply_disorder, build_subspace_basis
from ghz_chain.dynamics import EvolutionSettings, ghz_initial_state
from ghz_chain.errors import BasisMappingError, OracleSizeError, PhotonCutoffError
from ghz_chain.models import ChainSpec, SiteKind, SiteLabel
from ghz_chain.oracle import (
    FullSpace,
    compare_subspace_oracle,
    excitation_number_operator,
    full_hilbert_evolve,
)

FAST = EvolutionSettings(verify_step=False)


class TestFullSpace:
    """Test product-space indexing."""

    def test_dimensions(self):
        assert FullSpace.for_spec(ChainSpec(N=3)).dimension == 27 * 4
        assert FullSpace.for_spec(ChainSpec(N=2, scheme="B")).dimension == 16 * 2
        assert FullSpace.for_spec(ChainSpec(N=4, scheme="C")).dimension == 256 * 8

    def test_size_limit(self):
        with pytest.raises(OracleSizeError):
            FullSpace.for_spec(ChainSpec(N=5))

    def test_labels_map_to_distinct_states(self):
        spec = ChainSpec(N=3, scheme="C")
        space = FullSpace.for_spec(spec)
        indices = [space.label_index(label) for label in build_subspace_basis(spec).labels]
        indices.append(space.decoupled_index())
        assert len(set(indices)) == len(indices)

    def test_index_of_first_factor_most_significant(self):
        space = FullSpace.for_spec(ChainSpec(N=2))
        assert space.index_of(("L", "L"), (0,)) == 0
        assert space.index_of(("L", "L"), (1,)) == 1
        assert space.index_of(("R", "L"), (0,)) == 6

    def test_unknown_level(self):
        space = FullSpace.for_spec(ChainSpec(N=3))
        with pytest.raises(BasisMappingError):
            space.index_of(("X", "L", "R"), (0, 0))
        with pytest.raises(BasisMappingError):
            space.index_of(("L", "L"), (0, 0))
        with pytest.raises(BasisMappingError):
            space.label_index(SiteLabel(SiteKind.AUX_GROUND_P, 1))

    def test_excitation_number(self):
        spec = ChainSpec(N=3, scheme="B")
        space = FullSpace.for_spec(spec)
        counts = excitation_number_operator(space, spec.scheme).diagonal().real
        for label in build_subspace_basis(spec).labels:
            assert counts[space.label_index(label)] == 1
        assert counts[space.decoupled_index()] == 0


class TestOracleAgreement:
    """Test that subspace and full-space evolutions coincide."""

    @pytest.mark.parametrize("n", [2, 3])
    def test_scheme_a(self, n):
        spec = ChainSpec(N=n, T=30.0)
        deviation = compare_subspace_oracle(spec, np.linspace(0.0, 30.0, 7), settings=FAST)
        assert deviation < 1e-9

    def test_scheme_a_nonuniform_loss(self):
        spec = ChainSpec(N=3, T=30.0, gamma=(0.0, 0.02, 0.0), kappa=0.01)
        deviation = compare_subspace_oracle(spec, np.linspace(0.0, 30.0, 7), settings=FAST)
        assert deviation < 1e-9

    def test_scheme_c(self):
        spec = ChainSpec(N=2, scheme="C", T=30.0)
        deviation = compare_subspace_oracle(spec, np.linspace(0.0, 30.0, 7), settings=FAST)
        assert deviation < 1e-9

    @pytest.mark.parametrize("n", [2, 3])
    def test_scheme_b_default_detuning(self, n):
        spec = ChainSpec(N=n, scheme="B", T=5.0)
        deviation = compare_subspace_oracle(spec, np.linspace(0.0, 5.0, 6))
        assert deviation < 1e-8

    def test_scheme_b_explicit_phase_frame(self):
        spec = ChainSpec(N=2, scheme="B", T=1.0)
        settings = EvolutionSettings(max_step=1.5e-4, verify_step=False)
        deviation = compare_subspace_oracle(spec, np.linspace(0.0, 1.0, 5), settings=settings, explicit_phase=True)
        assert deviation < 1e-6

    def test_disordered_chain_uses_spec_realization(self):
        spec = ChainSpec(N=3, T=30.0, disorder_delta=0.3, seed=11)
        deviation = compare_subspace_oracle(spec, np.linspace(0.0, 30.0, 7))
        assert deviation < 1e-9
        explicit = compare_subspace_oracle(spec, np.linspace(0.0, 30.0, 7), realization=apply_disorder(spec, 0))
        assert explicit < 1e-9


class TestFullHilbertEvolve:
    def test_stays_in_single_excitation_sector(self):
        spec = ChainSpec(N=3, T=30.0)
        trace = full_hilbert_evolve(spec, ghz_initial_state(spec), np.linspace(0.0, 30.0, 4), settings=FAST)
        assert np.max(trace.leakage) < 1e-12
        assert np.max(trace.multi_excitation) < 1e-12
        assert trace.excitation_number == pytest.approx([0.5] * 4)
        assert np.linalg.norm(trace.states, axis=1) == pytest.approx([1.0] * 4)

    def test_product_terms(self):
        spec = ChainSpec(N=2, T=30.0)
        amplitude = 1 / math.sqrt(2)
        terms = [(amplitude, ("e", "L"), (0,)), (amplitude, ("R", "L"), (0,))]
        trace = full_hilbert_evolve(spec, terms, [0.0, 30.0], settings=FAST)
        assert trace.excitation_number[0] == pytest.approx(0.5)

    def test_multi_excitation_is_rejected(self):
        spec = ChainSpec(N=3, T=30.0)
        terms = [(1.0, ("e", "e", "R"), (0, 0))]
        with pytest.raises(PhotonCutoffError):
            full_hilbert_evolve(spec, terms, [0.0, 1.0], settings=FAST)
