import math

import numpy as np
import pytest
from scipy import integrate

from scss_sim.core.exceptions import DegenerateStateError, DimensionMismatchError, TruncationError
from scss_sim.core.fock import (
    DensityMatrix,
    FockVector,
    ScssParams,
    WignerGrid,
    annihilation,
    cat_state,
    coherent_amplitudes,
    coherent_state,
    db_to_squeezing,
    fidelity,
    fock_state,
    fock_wavefunction,
    fock_wavefunctions,
    parity_operator,
    quadrature_operator,
    quadrature_pdf,
    quadrature_vectors,
    squeeze_operator,
    squeezing_to_db,
    variance,
    wigner,
    wigner_at_origin,
)


class TestStates:
    def test_fock_state_basis_vector(self):
        assert np.allclose(fock_state(0, 20).amplitudes, np.eye(21)[0])
        nonzero = np.flatnonzero(fock_state(3, 20).amplitudes)
        assert nonzero.tolist() == [3]

    def test_fock_state_out_of_range(self):
        with pytest.raises(TruncationError):
            fock_state(21, 20)

    def test_vector_is_immutable(self):
        state = fock_state(1, 5)
        with pytest.raises(ValueError):
            state.amplitudes[0] = 1.0

    def test_cross_truncation_overlap_rejected(self):
        with pytest.raises(DimensionMismatchError):
            fock_state(0, 5).overlap(fock_state(0, 6))

    def test_coherent_vacuum(self):
        assert np.allclose(coherent_state(0, 20).amplitudes, fock_state(0, 20).amplitudes)

    def test_coherent_overlap(self):
        overlap = coherent_state(1.0, 20).overlap(coherent_state(-1.0, 20))
        assert abs(overlap) == pytest.approx(math.exp(-2.0), abs=1e-6)

    def test_coherent_tail_within_truncation(self):
        raw = FockVector(coherent_amplitudes(2.47, 20))
        assert raw.norm() >= 0.9999

    def test_coherent_guard(self):
        with pytest.raises(TruncationError):
            coherent_state(3.0, 20)

    def test_normalization(self):
        state = coherent_state(1.5, 20)
        assert state.norm() == pytest.approx(1.0, abs=1e-12)


class TestSqueezing:
    def test_zero_is_identity(self):
        assert np.allclose(squeeze_operator(0.0, 20), np.eye(21))

    def test_unitary(self):
        S = squeeze_operator(0.56, 20)
        assert np.allclose(S @ S.conj().T, np.eye(21), atol=1e-8)

    def test_squeezed_vacuum_variance(self):
        state = DensityMatrix.from_vector(squeeze_operator(0.56, 20)[:, 0])
        assert variance(state, quadrature_operator(20)) == pytest.approx(math.exp(-1.12) / 2, abs=1e-3)

    def test_guard(self):
        with pytest.raises(TruncationError):
            squeeze_operator(1.6, 20)

    def test_db_round_trip(self):
        assert db_to_squeezing(squeezing_to_db(0.56)) == pytest.approx(0.56, abs=1e-15)
        assert ScssParams.from_db(2.47, 4.82).z == pytest.approx(0.555, abs=1e-3)


class TestCatState:
    def test_odd_has_no_even_components(self):
        state = cat_state(ScssParams(alpha=1.5, z=0.0, parity="odd"), 20)
        assert np.allclose(state.amplitudes[::2], 0.0, atol=1e-14)

    def test_small_alpha_limits(self):
        odd = cat_state(ScssParams(alpha=0.01, z=0.0, parity="odd"), 20)
        even = cat_state(ScssParams(alpha=0.01, z=0.0, parity="even"), 20)
        assert fidelity(odd, fock_state(1, 20)) > 0.9999
        assert fidelity(even, fock_state(0, 20)) > 0.9999

    def test_degenerate_odd_cat(self):
        with pytest.raises(DegenerateStateError):
            cat_state(ScssParams(alpha=0.0, z=0.0, parity="odd"), 20)

    def test_negative_alpha_rejected(self):
        with pytest.raises(ValueError):
            ScssParams(alpha=-1.0, z=0.0)

    def test_large_alpha_uses_working_basis(self):
        state = cat_state(ScssParams(alpha=3.5, z=0.5), 20)
        assert state.norm() == pytest.approx(1.0, abs=1e-12)


class TestFidelity:
    def test_self_fidelity(self, random_state):
        rho = random_state(8)
        assert fidelity(rho, rho) == pytest.approx(1.0, abs=1e-6)

    def test_pure_states(self):
        a = coherent_state(0.8, 15)
        b = coherent_state(0.3 + 0.4j, 15)
        expected = abs(a.overlap(b)) ** 2
        assert fidelity(a.to_density(), b.to_density()) == pytest.approx(expected, abs=1e-6)

    def test_orthogonal(self):
        assert fidelity(fock_state(0, 20).to_density(), fock_state(1, 20).to_density()) == pytest.approx(0.0, abs=1e-12)

    def test_symmetric(self, random_state):
        a, b = random_state(6, seed=1), random_state(6, seed=2)
        assert fidelity(a, b) == pytest.approx(fidelity(b, a), abs=1e-6)
        assert 0.0 <= fidelity(a, b) <= 1.0

    def test_dimension_mismatch(self):
        with pytest.raises(DimensionMismatchError):
            fidelity(fock_state(0, 5).to_density(), fock_state(0, 6).to_density())


class TestDensityMatrix:
    def test_validate(self, random_state):
        random_state(5).validate()
        with pytest.raises(ValueError):
            DensityMatrix(np.diag([1.2, -0.2])).validate()

    def test_partial_trace_of_product(self, random_state):
        a, b = random_state(4, seed=3), random_state(4, seed=4)
        joint = a.tensor(b)
        assert np.allclose(joint.partial_trace(1).elements, a.elements)
        assert np.allclose(joint.partial_trace(2).elements, b.elements)

    def test_json_round_trip(self, random_state):
        rho = random_state(3)
        restored = DensityMatrix.from_dict(rho.to_dict())
        assert restored.truncation == 3
        assert np.allclose(restored.elements, rho.elements)

    def test_bad_dimension(self):
        with pytest.raises(DimensionMismatchError):
            DensityMatrix(np.eye(5), modes=2)


class TestWavefunctions:
    def test_values_at_origin(self):
        assert fock_wavefunction(1, 0.0) == pytest.approx(0.0, abs=1e-15)
        assert fock_wavefunction(0, 0.0) == pytest.approx(math.pi ** -0.25, abs=1e-9)
        assert fock_wavefunction(2, 0.0) == pytest.approx(-(math.pi ** -0.25) / math.sqrt(2), abs=1e-9)

    def test_orthonormal_to_high_order(self):
        x = np.linspace(-15, 15, 6001)
        psi = fock_wavefunctions(40, x)
        gram = integrate.trapezoid(psi[:, None, :] * psi[None, :, :], x, axis=2)
        assert np.allclose(gram, np.eye(41), atol=1e-8)


class TestWigner:
    def test_vacuum_and_single_photon_at_origin(self, vacuum, single_photon):
        axis = np.array([0.0])
        assert wigner(vacuum, axis, axis).values[0, 0] == pytest.approx(1 / math.pi, abs=1e-6)
        assert wigner(single_photon, axis, axis).values[0, 0] == pytest.approx(-1 / math.pi, abs=1e-6)

    def test_normalization(self, small_cat, random_state):
        axis = np.linspace(-6, 6, 241)
        assert wigner(small_cat, axis, axis).integral() == pytest.approx(1.0, abs=0.03)
        assert wigner(random_state(6), axis, axis).integral() == pytest.approx(1.0, abs=0.03)

    def test_parity_formula_at_origin(self, small_cat, random_state):
        axis = np.array([0.0])
        for rho in (small_cat, random_state(10)):
            assert wigner(rho, axis, axis).values[0, 0] == pytest.approx(wigner_at_origin(rho), abs=1e-6)

    def test_marginal_matches_quadrature_pdf(self, small_cat):
        axis = np.linspace(-7, 7, 561)
        grid = wigner(small_cat, axis, axis)
        marginal = integrate.trapezoid(grid.values, axis, axis=1)
        pdf = quadrature_pdf(small_cat, 0.0)(axis)
        assert np.max(np.abs(marginal - pdf)) < 1e-4

    def test_rotated_marginal(self, small_cat):
        # Wigner of the rotated state gives the theta marginal along x
        theta = 0.7
        rotation = np.diag(np.exp(-1j * theta * np.arange(13)))
        rotated = DensityMatrix(rotation @ small_cat.elements @ rotation.conj().T)
        axis = np.linspace(-7, 7, 561)
        marginal = integrate.trapezoid(wigner(rotated, axis, axis).values, axis, axis=1)
        assert np.max(np.abs(marginal - quadrature_pdf(small_cat, theta)(axis))) < 1e-4

    def test_two_mode_rejected(self, vacuum):
        with pytest.raises(DimensionMismatchError):
            wigner(vacuum.tensor(vacuum))

    def test_frame_round_trip(self, vacuum):
        grid = wigner(vacuum, np.linspace(-1, 1, 5), np.linspace(-2, 2, 7))
        restored = WignerGrid.from_frame(grid.to_frame())
        assert np.allclose(restored.values, grid.values)


class TestQuadraturePdf:
    def test_vacuum_is_gaussian(self, vacuum):
        x = np.linspace(-4, 4, 81)
        expected = np.exp(-x ** 2) / math.sqrt(math.pi)
        for theta in (0.0, 1.1, 2.5):
            assert np.allclose(quadrature_pdf(vacuum, theta)(x), expected, atol=1e-6)

    def test_single_photon_vanishes_at_origin(self, single_photon):
        assert quadrature_pdf(single_photon, 0.4)(0.0) == pytest.approx(0.0, abs=1e-15)

    def test_normalized_and_nonnegative(self, small_cat):
        x = np.linspace(-9, 9, 3601)
        values = quadrature_pdf(small_cat, 0.9)(x)
        assert values.min() > -1e-9
        assert integrate.trapezoid(values, x) == pytest.approx(1.0, abs=1e-4)

    def test_diagonal_state_is_even(self, random_state):
        diag = DensityMatrix(np.diag(np.real(np.diag(random_state(8).elements))).astype(complex))
        x = np.linspace(-3, 3, 61)
        pdf = quadrature_pdf(diag, 0.3)
        assert np.allclose(pdf(x), pdf(-x), atol=1e-12)

    def test_matches_direct_sum(self, small_cat):
        # one grid longer than the basis, one of the same length
        theta = 0.7
        for points in (50, small_cat.truncation + 1):
            x = np.linspace(-3, 3, points)
            psi = fock_wavefunctions(small_cat.truncation, x)
            n = np.arange(small_cat.truncation + 1)
            kets = psi * np.exp(1j * n * theta)[:, None]
            expected = np.real(np.einsum("mx,mn,nx->x", kets.conj(), small_cat.elements, kets))
            assert np.allclose(quadrature_pdf(small_cat, theta)(x), expected, atol=1e-12)

    def test_vectors_scalar_and_per_point_phases_agree(self):
        x = np.linspace(-2, 2, 7)
        scalar = quadrature_vectors(6, x, 0.4)
        assert scalar.shape == (7, 7)
        assert np.allclose(scalar, quadrature_vectors(6, x, np.full(7, 0.4)))


def test_parity_operator_and_ladder_consistency():
    a = annihilation(6)
    number = a.conj().T @ a
    assert np.allclose(np.diag(number), np.arange(7))
    assert np.allclose(np.diag(parity_operator(6)), [1, -1, 1, -1, 1, -1, 1])
