import math

import numpy as np
import pytest
from scipy import stats

from scss_sim.core.channels import apply_loss
from scss_sim.core.exceptions import ConvergenceWarning, DataFormatError, TruncationError
from scss_sim.core.fock import DensityMatrix, cat_state, coherent_state, fidelity, fock_state
from scss_sim.core.loader import loader
from scss_sim.phases.protocol import HEADLINE_TARGET
from scss_sim.phases.tomography import (
    QuadratureRecord,
    TomographyJob,
    clip_to_density,
    correction_efficiency,
    degrade,
    fold_phases,
    ingest_density_matrix,
    load_table_i,
    loss_correct,
    maxlik_reconstruct,
    sample_quadrature_arrays,
    sample_quadratures,
)

pytestmark = pytest.mark.filterwarnings("ignore::scss_sim.core.exceptions.ConvergenceWarning")


class TestPhaseFolding:
    def test_upper_half_flips_sign(self):
        x, theta = fold_phases(np.array([1.0, 1.0]), np.array([0.5, 0.5 + math.pi]))
        assert x.tolist() == pytest.approx([1.0, -1.0])
        assert theta.tolist() == pytest.approx([0.5, 0.5])

    def test_range(self):
        raw = np.linspace(-10, 10, 1001)
        _, theta = fold_phases(np.ones_like(raw), raw)
        assert theta.min() >= 0.0
        assert theta.max() < math.pi

    def test_record_folds_on_construction(self):
        record = QuadratureRecord(0.7, 4.0)
        assert record.x == pytest.approx(-0.7)
        assert record.theta == pytest.approx(4.0 - math.pi)


class TestSampling:
    def test_vacuum_variance(self, vacuum):
        x, _ = sample_quadrature_arrays(vacuum, 100_000, seed=1)
        assert np.var(x) == pytest.approx(0.5, abs=0.01)

    def test_single_photon_avoids_origin(self, single_photon):
        x, _ = sample_quadrature_arrays(single_photon, 100_000, seed=2)
        assert np.mean(np.abs(x) < 0.05) < 0.002

    def test_deterministic_for_seed(self, small_cat):
        a = sample_quadratures(small_cat, 500, seed=42)
        b = sample_quadratures(small_cat, 500, seed=42)
        assert a == b
        assert sample_quadratures(small_cat, 500, seed=43) != a

    def test_fixed_phase(self, small_cat):
        _, theta = sample_quadrature_arrays(small_cat, 100, seed=0, phase=0.3)
        assert np.allclose(theta, 0.3)

    def test_uniform_phases(self, vacuum):
        _, theta = sample_quadrature_arrays(vacuum, 20_000, seed=5)
        assert np.mean(theta) == pytest.approx(math.pi / 2, abs=0.03)

    def test_displaced_mean(self):
        # coherent amplitude 1 along x: <X> = sqrt(2) at theta = 0
        rho = coherent_state(1.0, 12).to_density()
        x, _ = sample_quadrature_arrays(rho, 50_000, seed=9, phase=0.0)
        assert np.mean(x) == pytest.approx(math.sqrt(2), abs=0.01)


class TestJob:
    def test_efficiency_guard(self):
        with pytest.raises(ValueError):
            TomographyJob(np.zeros(3), np.zeros(3), efficiency_correction=0.4)

    def test_needs_records(self):
        with pytest.raises(ValueError):
            TomographyJob(np.array([]), np.array([]))

    def test_from_records(self):
        job = TomographyJob.from_records([QuadratureRecord(0.1, 0.2), QuadratureRecord(0.3, 3.5)], truncation=4)
        assert job.size == 2
        assert job.records[1].x == pytest.approx(-0.3)


class TestMaxLik:
    def test_closed_loop(self, small_cat):
        x, theta = sample_quadrature_arrays(small_cat, 50_000, seed=11)
        result = maxlik_reconstruct(TomographyJob(x, theta, truncation=12, max_iterations=400, convergence_tol=1e-7))
        assert fidelity(small_cat, result.state) > 0.98
        assert result.state.is_valid(psd_tol=1e-9)

    def test_resampled_estimate_matches_source_distribution(self, small_cat):
        x, theta = sample_quadrature_arrays(small_cat, 50_000, seed=14)
        estimate = maxlik_reconstruct(
            TomographyJob(x, theta, truncation=12, max_iterations=400, convergence_tol=1e-7)
        ).state
        for i, phase in enumerate(np.linspace(0.0, math.pi, 4, endpoint=False)):
            source, _ = sample_quadrature_arrays(small_cat, 50_000, seed=100 + i, phase=phase)
            resampled, _ = sample_quadrature_arrays(estimate, 50_000, seed=200 + i, phase=phase)
            assert stats.ks_2samp(source, resampled).statistic <= 0.02, f"phase {phase:.3f}"

    def test_likelihood_never_decreases(self, small_cat):
        x, theta = sample_quadrature_arrays(small_cat, 5_000, seed=12)
        result = maxlik_reconstruct(TomographyJob(x, theta, truncation=12, max_iterations=60))
        assert np.all(np.diff(result.history) >= 0.0)

    def test_single_record_gives_valid_state(self):
        job = TomographyJob(np.array([0.3]), np.array([0.2]), truncation=6, max_iterations=50)
        state = maxlik_reconstruct(job).state
        assert state.trace() == pytest.approx(1.0, abs=1e-10)
        assert state.is_valid(psd_tol=1e-9)

    def test_reports_non_convergence(self, small_cat):
        x, theta = sample_quadrature_arrays(small_cat, 2_000, seed=13)
        job = TomographyJob(x, theta, truncation=10, max_iterations=2, convergence_tol=1e-14)
        with pytest.warns(ConvergenceWarning):
            result = maxlik_reconstruct(job)
        assert not result.converged
        assert result.iterations == 2

    @pytest.mark.slow
    def test_closed_loop_with_loss_inversion(self, small_cat):
        lossy = degrade(small_cat, 0.76)
        x, theta = sample_quadrature_arrays(lossy, 50_000, seed=21)
        job = TomographyJob(x, theta, truncation=12, efficiency_correction=0.76, max_iterations=1000, convergence_tol=1e-8)
        assert fidelity(small_cat, maxlik_reconstruct(job).state) > 0.95


class TestLossCorrection:
    def test_unit_transmission_is_identity(self, small_cat):
        assert loss_correct(small_cat, 1.0) is small_cat

    def test_inverts_loss(self, small_cat):
        corrected = loss_correct(degrade(small_cat, 0.76), 0.76)
        assert fidelity(small_cat, corrected) > 0.999

    def test_forward_after_correction(self, small_cat):
        lossy = apply_loss(small_cat, 0.3)
        again = apply_loss(loss_correct(lossy, 0.7), 0.3)
        assert np.allclose(again.elements, lossy.elements, atol=1e-8)

    def test_two_stage_correction(self, small_cat):
        t = correction_efficiency(0.76, 15)
        assert t == pytest.approx(0.76 * (1 - 0.1399), abs=1e-4)
        lossy = degrade(degrade(small_cat, (1 - 0.01) ** 15), 0.76)
        assert fidelity(small_cat, loss_correct(lossy, t)) > 0.999

    def test_transmission_guard(self, small_cat):
        with pytest.raises(ValueError):
            loss_correct(small_cat, 0.5)

    def test_clip_reports_adjustments(self):
        rho, adjustments = clip_to_density(np.diag([0.7, 0.35, -0.05]).astype(complex))
        assert adjustments.max() == pytest.approx(0.05)
        assert rho.is_valid()


class TestIngest:
    @pytest.mark.parametrize("label", ["a", "b", "c"])
    def test_table_i_matrices(self, label):
        result = load_table_i(label)
        assert result.raw_trace == pytest.approx(1.0, abs=0.01)
        assert result.max_adjustment < 0.02
        assert result.state.is_valid()

    def test_corrected_diagonal(self):
        raw_diagonal = np.real(np.diag(loader.read_table_i("c")))
        assert raw_diagonal.tolist() == pytest.approx([0.12, 0.21, 0.17, 0.37, 0.07, 0.06], abs=1e-12)

    def test_corrected_state_matches_target(self):
        state = load_table_i("c", truncation=20).state
        assert state.truncation == 20
        target = cat_state(HEADLINE_TARGET, 20)
        assert fidelity(target, state) == pytest.approx(0.53, abs=0.08)

    def test_valid_state_unchanged(self):
        result = ingest_density_matrix(np.eye(2) / 2)
        assert np.allclose(result.state.elements, np.eye(2) / 2)
        assert result.max_adjustment == 0.0

    def test_text_input(self):
        result = ingest_density_matrix("0.5 0.1i\n-0.1i 0.5\n")
        assert result.state.elements[0, 1] == pytest.approx(0.1j)

    def test_non_square(self):
        with pytest.raises(DataFormatError) as info:
            ingest_density_matrix("1 0\n0 1 0\n")
        assert info.value.line == 2

    def test_does_not_fit_truncation(self):
        with pytest.raises(TruncationError):
            load_table_i("a", truncation=3)

    def test_unknown_label(self):
        with pytest.raises(ValueError):
            load_table_i("d")


def test_fock_state_sampling_matches_pdf_support():
    rho = DensityMatrix.from_vector(fock_state(2, 8))
    x, _ = sample_quadrature_arrays(rho, 20_000, seed=3)
    # <X^2> of |2> is 5/2
    assert np.mean(x ** 2) == pytest.approx(2.5, abs=0.08)
