import math

import numpy as np
import pytest
from scipy import special

from scss_sim.core.channels import (
    BeamSplitterSpec,
    HeraldSpec,
    apply_loss,
    apply_unitary,
    beam_splitter_unitary,
    contract_pure,
    herald_project,
    herald_window_operator,
    pockels_unitary,
    retardance_to_reflectivity,
)
from scss_sim.core.exceptions import DegenerateStateError, DimensionMismatchError
from scss_sim.core.fock import DensityMatrix, FockVector, fidelity, fock_state, number_operator

N = 6


def two_mode(n1: int, n2: int, N: int = N) -> np.ndarray:
    return np.kron(fock_state(n1, N).amplitudes, fock_state(n2, N).amplitudes)


class TestBeamSplitter:
    def test_hong_ou_mandel(self):
        out = beam_splitter_unitary(BeamSplitterSpec(0.5), N) @ two_mode(1, 1)
        assert abs(out[1 * (N + 1) + 1]) < 1e-12
        assert abs(out[2 * (N + 1)]) ** 2 == pytest.approx(0.5, abs=1e-10)

    def test_full_swap(self):
        out = beam_splitter_unitary(BeamSplitterSpec(1.0), N) @ two_mode(1, 0)
        assert abs(abs(out[1]) - 1.0) < 1e-10

    def test_identity_at_zero(self):
        assert np.allclose(beam_splitter_unitary(BeamSplitterSpec(0.0), N), np.eye((N + 1) ** 2))

    def test_conserves_photon_number(self):
        U = beam_splitter_unitary(BeamSplitterSpec(0.37), N)
        n = number_operator(N)
        total = np.kron(n, np.eye(N + 1)) + np.kron(np.eye(N + 1), n)
        assert np.linalg.norm(U @ total - total @ U) < 1e-10

    def test_single_photon_split(self):
        R = 0.3
        out = beam_splitter_unitary(BeamSplitterSpec(R), N) @ two_mode(1, 0)
        assert abs(out[1 * (N + 1)]) ** 2 == pytest.approx(1 - R, abs=1e-12)
        assert abs(out[1]) ** 2 == pytest.approx(R, abs=1e-12)

    def test_invalid_reflectivity(self):
        with pytest.raises(ValueError):
            BeamSplitterSpec(1.2)

    def test_shape_mismatch(self):
        rho = fock_state(0, 4).to_density()
        with pytest.raises(DimensionMismatchError):
            apply_unitary(rho.tensor(rho), beam_splitter_unitary(BeamSplitterSpec(0.5), 5))


class TestPockels:
    def test_retardance_mapping(self):
        assert retardance_to_reflectivity(2.03) == pytest.approx(0.721, abs=1e-3)

    def test_half_wave_swaps_modes(self):
        out = pockels_unitary(math.pi, N) @ two_mode(1, 0)
        assert abs(out[1]) ** 2 == pytest.approx(1.0, abs=1e-10)

    @pytest.mark.parametrize("delta", [0.4, 1.3, 2.03])
    def test_same_number_statistics_as_beam_splitter(self, delta):
        pair = two_mode(1, 2)
        pockels = np.abs(pockels_unitary(delta, N) @ pair) ** 2
        splitter = np.abs(beam_splitter_unitary(BeamSplitterSpec(retardance_to_reflectivity(delta)), N) @ pair) ** 2
        assert np.allclose(pockels, splitter, atol=1e-10)


class TestLoss:
    def test_single_photon(self):
        out = apply_loss(fock_state(1, N).to_density(), 0.3)
        expected = np.zeros((N + 1, N + 1))
        expected[0, 0], expected[1, 1] = 0.3, 0.7
        assert np.allclose(out.elements, expected, atol=1e-10)

    def test_binomial_populations(self):
        out = apply_loss(fock_state(3, N).to_density(), 0.4)
        expected = [math.comb(3, k) * 0.6 ** k * 0.4 ** (3 - k) for k in range(4)]
        assert np.allclose(out.populations()[:4], expected, atol=1e-10)

    def test_composition(self, random_state):
        rho = random_state(N)
        twice = apply_loss(apply_loss(rho, 0.2), 0.35)
        once = apply_loss(rho, 1 - 0.8 * 0.65)
        assert np.allclose(twice.elements, once.elements, atol=1e-9)

    def test_total_loss_gives_vacuum(self, random_state):
        out = apply_loss(random_state(N), 1.0)
        assert out.populations()[0] == pytest.approx(1.0, abs=1e-10)

    def test_trace_preserving(self, random_state):
        assert apply_loss(random_state(N), 0.24).trace() == pytest.approx(1.0, abs=1e-12)

    @pytest.mark.parametrize("mode", [1, 2])
    def test_acts_on_one_mode_only(self, random_state, mode):
        a, b = random_state(4, seed=11), random_state(4, seed=12)
        out = apply_loss(a.tensor(b), 0.3, mode=mode)
        expected = apply_loss(a, 0.3).tensor(b) if mode == 1 else a.tensor(apply_loss(b, 0.3))
        assert np.allclose(out.elements, expected.elements, atol=1e-12)

    def test_two_mode_needs_mode(self, random_state):
        rho = random_state(3)
        with pytest.raises(DimensionMismatchError):
            apply_loss(rho.tensor(rho), 0.1)

    def test_invalid_loss(self, vacuum):
        with pytest.raises(ValueError):
            apply_loss(vacuum, -0.1)


class TestHerald:
    def test_lossless_odd_closed_form(self):
        for R in (0.1, 0.5, 0.72):
            mixed = beam_splitter_unitary(BeamSplitterSpec(R), N) @ two_mode(1, 2)
            rho12 = DensityMatrix.from_vector(mixed, modes=2)
            outcome = herald_project(rho12, HeraldSpec())
            expected = np.zeros(N + 1, dtype=complex)
            expected[1], expected[3] = 1 - 3 * R, -math.sqrt(6) * R
            expected /= np.linalg.norm(expected)
            assert fidelity(FockVector(expected), outcome.state) > 1 - 1e-10
            assert outcome.is_density

    def test_third_of_reflectivity_gives_three_photons(self):
        mixed = beam_splitter_unitary(BeamSplitterSpec(1 / 3), N) @ two_mode(1, 2)
        outcome = herald_project(DensityMatrix.from_vector(mixed, modes=2), HeraldSpec())
        assert outcome.state.populations()[3] == pytest.approx(1.0, abs=1e-10)

    def test_matches_direct_contraction(self):
        rng = np.random.default_rng(3)
        pure = rng.normal(size=(N + 1) ** 2) + 1j * rng.normal(size=(N + 1) ** 2)
        pure /= np.linalg.norm(pure)
        for mode in (1, 2):
            kept = contract_pure(pure, N, mode=mode)
            outcome = herald_project(DensityMatrix.from_vector(pure, modes=2), HeraldSpec(mode=mode))
            direct = np.outer(kept, kept.conj())
            assert np.allclose(outcome.state.elements, direct / np.trace(direct), atol=1e-10)
            assert outcome.acceptance == pytest.approx(np.linalg.norm(kept) ** 2, abs=1e-10)

    @pytest.mark.parametrize("R", [0.1, 0.5, 0.72, 0.9])
    def test_even_branch_amplitude_ratio(self, R):
        mixed = beam_splitter_unitary(BeamSplitterSpec(R), N) @ two_mode(1, 1)
        kept = contract_pure(mixed, N)
        assert np.allclose(kept[[1, 3, 4, 5, 6]], 0.0, atol=1e-12)
        assert abs(kept[2] / kept[0]) == pytest.approx(math.sqrt(2), abs=1e-9)

    def test_vacuum_window_acceptance(self, vacuum):
        outcome = herald_project(vacuum.tensor(vacuum), HeraldSpec(window_halfwidth=0.2))
        assert outcome.acceptance == pytest.approx(special.erf(0.2), abs=1e-10)
        assert outcome.state.populations()[0] == pytest.approx(1.0, abs=1e-12)
        assert not outcome.is_density

    def test_window_operator_limits(self):
        narrow = herald_window_operator(N, 1e-6)
        point = herald_window_operator(N, 0.0)
        assert np.allclose(narrow / 2e-6, point, atol=1e-6)
        wide = herald_window_operator(N, 12.0, nodes=121)
        assert np.allclose(wide, np.eye(N + 1), atol=1e-6)

    def test_degenerate_outcome(self, vacuum, single_photon):
        with pytest.raises(DegenerateStateError):
            herald_project(vacuum.tensor(single_photon), HeraldSpec())

    def test_too_few_nodes(self):
        with pytest.raises(ValueError):
            HeraldSpec(window_halfwidth=0.2, nodes=10)

    def test_single_mode_rejected(self, vacuum):
        with pytest.raises(DimensionMismatchError):
            herald_project(vacuum, HeraldSpec())
