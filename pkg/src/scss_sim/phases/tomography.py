"""
Homodyne tomography: synthetic quadrature data, maximum-likelihood
reconstruction with loss-aware measurement operators, loss inversion and
ingestion of published density matrices.
"""

import math
import warnings
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Dict, List, Optional, Sequence, Tuple, Union

import numpy as np
from scipy import linalg, special

from ..core.channels import apply_loss, loss_kraus_operators
from ..core.exceptions import ConvergenceWarning, DataFormatError, TruncationError
from ..core.fock import DensityMatrix, fock_wavefunctions, quadrature_vectors
from ..core.loader import loader, parse_matrix_text
from ..utils.logger import logger

Seed = Union[None, int, np.random.SeedSequence, np.random.Generator]

DETECTOR_EFFICIENCY = 0.76
STORAGE_ROUNDTRIPS = 15
SAMPLING_STEP = 0.01
SAMPLING_CHUNK = 2000


@dataclass(frozen=True)
class QuadratureRecord:
    """One homodyne outcome; theta is folded into [0, pi) with x -> -x."""

    x: float
    theta: float

    def __post_init__(self):
        x, theta = fold_phases(np.array([self.x]), np.array([self.theta]))
        object.__setattr__(self, "x", float(x[0]))
        object.__setattr__(self, "theta", float(theta[0]))


def fold_phases(x: np.ndarray, theta: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
    """Map theta into [0, pi) using X_{theta + pi} = -X_theta."""
    x = np.asarray(x, dtype=float)
    theta = np.mod(np.asarray(theta, dtype=float), 2.0 * math.pi)
    # second pass catches values that round onto pi or 2 pi
    for _ in range(2):
        upper = theta >= math.pi
        theta = np.where(upper, theta - math.pi, theta)
        x = np.where(upper, -x, x)
    return x, theta


def correction_efficiency(
    detector_efficiency: float = DETECTOR_EFFICIENCY,
    storage_roundtrips: int = 0,
    eta_qmc: float = 0.01,
) -> float:
    """Overall transmission to invert: detector efficiency times storage transmission."""
    return detector_efficiency * (1.0 - eta_qmc) ** storage_roundtrips


@dataclass(frozen=True)
class TomographyJob:
    """Quadrature data plus reconstruction settings."""

    x: np.ndarray
    theta: np.ndarray
    truncation: int = 20
    efficiency_correction: float = 1.0
    max_iterations: int = 1000
    convergence_tol: float = 1e-8
    bin_width: float = 0.1
    x_range: float = 6.0
    phase_bins: int = 90

    def __post_init__(self):
        x, theta = fold_phases(self.x, self.theta)
        if x.ndim != 1 or x.size != theta.size:
            raise ValueError("x and theta must be 1-D arrays of equal length")
        if x.size < 1:
            raise ValueError("a tomography job needs at least one record")
        if not 0.5 < self.efficiency_correction <= 1.0:
            raise ValueError(
                f"efficiency_correction must lie in (0.5, 1], got {self.efficiency_correction}"
            )
        if self.truncation < 1:
            raise TruncationError("truncation must be >= 1")
        object.__setattr__(self, "x", x)
        object.__setattr__(self, "theta", theta)

    @classmethod
    def from_records(cls, records: Sequence[QuadratureRecord], **settings) -> "TomographyJob":
        x = np.array([r.x for r in records], dtype=float)
        theta = np.array([r.theta for r in records], dtype=float)
        return cls(x, theta, **settings)

    @property
    def records(self) -> List[QuadratureRecord]:
        return [QuadratureRecord(float(x), float(t)) for x, t in zip(self.x, self.theta)]

    @property
    def size(self) -> int:
        return int(self.x.size)


@dataclass(frozen=True)
class ReconstructionResult:
    state: DensityMatrix
    log_likelihood: float
    iterations: int
    converged: bool
    history: Tuple[float, ...] = field(repr=False)

    def to_dict(self) -> Dict[str, Any]:
        return {
            "state": self.state.to_dict(),
            "log_likelihood": self.log_likelihood,
            "iterations": self.iterations,
            "converged": self.converged,
        }


# -----------------------------------------------------------------------------
# Sampling
# -----------------------------------------------------------------------------

def _phase_harmonics(rho: DensityMatrix, grid: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
    """g_d(x) with pr(x, theta) = Re sum_d e^{i d theta} g_d(x), d = n - m."""
    N = rho.truncation
    psi = fock_wavefunctions(N, grid)
    offsets = np.arange(-N, N + 1)
    harmonics = np.zeros((offsets.size, grid.size), dtype=complex)
    for m in range(N + 1):
        for n in range(N + 1):
            harmonics[n - m + N] += rho.elements[m, n] * psi[m] * psi[n]
    return offsets, harmonics


def sample_quadrature_arrays(
    rho: DensityMatrix,
    n: int,
    seed: Seed = None,
    phase: Optional[float] = None,
) -> Tuple[np.ndarray, np.ndarray]:
    """Draw n (x, theta) pairs: theta uniform in [0, pi) or fixed, x by inverse CDF."""
    if rho.modes != 1:
        raise ValueError("sampling needs a single-mode state")
    if n < 1:
        raise ValueError(f"sample count must be >= 1, got {n}")
    rng = np.random.default_rng(seed)
    if phase is None:
        theta = rng.uniform(0.0, math.pi, size=n)
    else:
        theta = np.full(n, float(phase))
    uniforms = rng.uniform(size=n)

    half = max(8.0, math.sqrt(2.0 * rho.truncation + 1.0) + 4.0)
    grid = np.linspace(-half, half, int(round(2.0 * half / SAMPLING_STEP)) + 1)
    dx = grid[1] - grid[0]
    offsets, harmonics = _phase_harmonics(rho.normalized(), grid)

    x = np.empty(n)
    for start in range(0, n, SAMPLING_CHUNK):
        stop = min(start + SAMPLING_CHUNK, n)
        phases = np.exp(1j * np.multiply.outer(theta[start:stop], offsets))
        pdf = np.clip(np.real(phases @ harmonics), 0.0, None)
        cdf = np.zeros_like(pdf)
        cdf[:, 1:] = np.cumsum(0.5 * (pdf[:, 1:] + pdf[:, :-1]) * dx, axis=1)
        cdf /= cdf[:, -1:]
        u = uniforms[start:stop, None]
        k = np.clip((cdf < u).sum(axis=1), 1, grid.size - 1)
        rows = np.arange(stop - start)
        lo, hi = cdf[rows, k - 1], cdf[rows, k]
        frac = np.where(hi > lo, (uniforms[start:stop] - lo) / np.where(hi > lo, hi - lo, 1.0), 0.5)
        x[start:stop] = grid[k - 1] + frac * dx
    return fold_phases(x, theta)


def sample_quadratures(
    rho: DensityMatrix,
    n: int,
    seed: Seed = None,
    phase: Optional[float] = None,
) -> List[QuadratureRecord]:
    """Records drawn from quadrature_pdf(rho, theta); deterministic for a fixed seed."""
    x, theta = sample_quadrature_arrays(rho, n, seed, phase)
    return [QuadratureRecord(float(a), float(b)) for a, b in zip(x, theta)]


# -----------------------------------------------------------------------------
# Maximum likelihood
# -----------------------------------------------------------------------------

class _LossMap:
    """Pre-measurement loss Lambda and its adjoint for the measurement operators."""

    def __init__(self, efficiency: float, N: int):
        self.identity = efficiency >= 1.0
        self.kraus = None if self.identity else loss_kraus_operators(float(1.0 - efficiency), N)

    def forward(self, rho: np.ndarray) -> np.ndarray:
        if self.identity:
            return rho
        return np.einsum("kan,nm,kbm->ab", self.kraus, rho, self.kraus.conj(), optimize=True)

    def adjoint(self, operator: np.ndarray) -> np.ndarray:
        if self.identity:
            return operator
        return np.einsum("kna,nm,kmb->ab", self.kraus.conj(), operator, self.kraus, optimize=True)


def _binned_data(job: TomographyJob) -> Tuple[np.ndarray, np.ndarray, np.ndarray, float]:
    """Nonzero (x-bin, phase-bin) cells: centers, frequencies and the x bin width."""
    n_x = int(round(2.0 * job.x_range / job.bin_width))
    x_edges = np.linspace(-job.x_range, job.x_range, n_x + 1)
    theta_edges = np.linspace(0.0, math.pi, job.phase_bins + 1)

    outside = int(np.count_nonzero(np.abs(job.x) >= job.x_range))
    if outside:
        logger.warning(f"tomography: {outside} samples beyond |x| = {job.x_range} clipped to the edge bins")
    x = np.clip(job.x, -job.x_range, np.nextafter(job.x_range, 0.0))
    counts, _, _ = np.histogram2d(x, job.theta, bins=[x_edges, theta_edges])

    ix, it = np.nonzero(counts)
    x_centers = 0.5 * (x_edges[:-1] + x_edges[1:])
    theta_centers = 0.5 * (theta_edges[:-1] + theta_edges[1:])
    frequencies = counts[ix, it] / job.size
    return x_centers[ix], theta_centers[it], frequencies, float(x_edges[1] - x_edges[0])


def _log_likelihood(frequencies: np.ndarray, probabilities: np.ndarray) -> float:
    return float(np.sum(frequencies * np.log(np.clip(probabilities, 1e-300, None))))


def maxlik_reconstruct(job: TomographyJob, initial: Optional[DensityMatrix] = None) -> ReconstructionResult:
    """Diluted R rho R iteration on binned homodyne data.

    Loss is folded into the measurement: p_j = <x_j|Lambda(rho)|x_j> dx and
    R = Lambda^dagger(sum_j f_j / p_j |x_j><x_j| dx). Every accepted step
    keeps the per-sample log-likelihood from decreasing.
    """
    N = job.truncation
    dim = N + 1
    x_c, theta_c, frequencies, dx = _binned_data(job)
    vectors = quadrature_vectors(N, x_c, theta_c)  # column j is |x_j, theta_j>
    loss_map = _LossMap(job.efficiency_correction, N)

    def probabilities(rho: np.ndarray) -> np.ndarray:
        measured = loss_map.forward(rho)
        return dx * np.real(np.sum(vectors.conj() * (measured @ vectors), axis=0))

    rho = np.eye(dim, dtype=complex) / dim if initial is None else initial.normalized().elements.copy()
    p = probabilities(rho)
    likelihood = _log_likelihood(frequencies, p)
    history = [likelihood]
    identity = np.eye(dim)
    converged = False
    iterations = 0

    logger.info(
        f"maxlik: {job.size} records in {frequencies.size} cells, N={N}, "
        f"efficiency={job.efficiency_correction:.4f}"
    )
    for iterations in range(1, job.max_iterations + 1):
        weights = frequencies / np.clip(p, 1e-300, None)
        R = loss_map.adjoint((vectors * (weights * dx)) @ vectors.conj().T)

        step = None
        for epsilon in (None,) + tuple(0.5 ** k for k in range(0, 40)):
            # epsilon None is the undiluted R rho R step
            operator = R if epsilon is None else identity + epsilon * R
            candidate = operator @ rho @ operator.conj().T
            candidate = 0.5 * (candidate + candidate.conj().T)
            candidate /= np.real(np.trace(candidate))
            p_new = probabilities(candidate)
            value = _log_likelihood(frequencies, p_new)
            if value >= likelihood:
                step = (candidate, p_new, value)
                break

        if step is None:
            converged = True
            break
        gain = step[2] - likelihood
        rho, p, likelihood = step
        history.append(likelihood)
        if iterations % 100 == 0:
            logger.debug(f"maxlik: iteration {iterations}, logL/sample={likelihood:.8f}")
        if gain < job.convergence_tol:
            converged = True
            break

    if not converged:
        warnings.warn(
            f"maximum-likelihood reconstruction stopped after {iterations} iterations without converging",
            ConvergenceWarning,
        )
    logger.info(f"maxlik: {iterations} iterations, converged={converged}, logL/sample={likelihood:.6f}")
    return ReconstructionResult(DensityMatrix(rho), likelihood, iterations, converged, tuple(history))


# -----------------------------------------------------------------------------
# Loss inversion
# -----------------------------------------------------------------------------

def bernoulli_map(rho: DensityMatrix, transmission: float) -> DensityMatrix:
    """Generalized Bernoulli map B_t on a single mode; t < 1 is loss, t > 1 its inverse."""
    N = rho.truncation
    elements = rho.elements
    out = np.zeros_like(elements)
    idx = np.arange(N + 1)
    for k in range(N + 1):
        size = N + 1 - k
        m = idx[:size]
        binom = np.sqrt(special.comb(m + k, m))
        power = transmission ** ((m[:, None] + m[None, :]) / 2.0)
        coeff = np.outer(binom, binom) * power * (1.0 - transmission) ** k
        out[:size, :size] += coeff * elements[k:, k:]
    return DensityMatrix(out)


def clip_to_density(matrix: np.ndarray) -> Tuple[DensityMatrix, np.ndarray]:
    """Hermitian part, negative eigenvalues floored at 0, unit trace; returns the floor adjustments."""
    hermitian = 0.5 * (matrix + matrix.conj().T)
    values, vectors = linalg.eigh(hermitian)
    floored = np.clip(values, 0.0, None)
    if floored.sum() <= 0:
        raise ValueError("matrix has no positive spectral weight")
    rho = (vectors * floored) @ vectors.conj().T
    return DensityMatrix(rho / floored.sum()), floored - values


def loss_correct(rho: DensityMatrix, transmission: float) -> DensityMatrix:
    """Invert a loss of 1 - transmission, then project to the nearest valid state."""
    if not 0.5 < transmission <= 1.0:
        raise ValueError(f"transmission must lie in (0.5, 1], got {transmission}")
    if rho.modes != 1:
        raise ValueError("loss_correct needs a single-mode state")
    if transmission == 1.0:
        return rho
    inverted = bernoulli_map(rho, 1.0 / transmission)
    corrected, adjustments = clip_to_density(inverted.elements)
    if adjustments.max() > 0:
        logger.debug(f"loss_correct: eigenvalue floor removed {adjustments.sum():.3e} of negative weight")
    return corrected


def degrade(rho: DensityMatrix, efficiency: float) -> DensityMatrix:
    """Forward counterpart of the correction: loss 1 - efficiency."""
    return apply_loss(rho, 1.0 - efficiency)


# -----------------------------------------------------------------------------
# Ingestion
# -----------------------------------------------------------------------------

@dataclass(frozen=True)
class IngestResult:
    state: DensityMatrix
    raw_trace: float
    hermiticity_residual: float
    eigenvalue_adjustments: np.ndarray

    @property
    def max_adjustment(self) -> float:
        return float(np.max(np.abs(self.eigenvalue_adjustments)))

    def to_dict(self) -> Dict[str, Any]:
        return {
            "state": self.state.to_dict(),
            "raw_trace": self.raw_trace,
            "hermiticity_residual": self.hermiticity_residual,
            "eigenvalue_adjustments": self.eigenvalue_adjustments.tolist(),
        }


def ingest_density_matrix(
    source: Union[str, Path, np.ndarray],
    truncation: Optional[int] = None,
) -> IngestResult:
    """Symmetrize, floor negative eigenvalues and renormalize a published matrix.

    ``source`` is matrix text, a path to a matrix file, or an array. With
    ``truncation`` the result is embedded in the basis 0..N.
    """
    if isinstance(source, np.ndarray):
        matrix = np.asarray(source, dtype=complex)
        if matrix.ndim != 2 or matrix.shape[0] != matrix.shape[1]:
            raise DataFormatError(f"matrix is not square: shape {matrix.shape}")
    elif isinstance(source, Path) or (isinstance(source, str) and "\n" not in source and Path(source).exists()):
        matrix = loader.read_matrix(source)
    else:
        matrix = parse_matrix_text(str(source))

    dim = matrix.shape[0]
    if truncation is not None and dim > truncation + 1:
        raise TruncationError(f"{dim}x{dim} matrix does not fit truncation N={truncation}")

    raw_trace = float(np.real(np.trace(matrix)))
    residual = float(np.max(np.abs(matrix - matrix.conj().T)))
    state, adjustments = clip_to_density(matrix)
    if truncation is not None and truncation + 1 > dim:
        state = state.resize(truncation)
    negative = adjustments[adjustments > 0]
    logger.info(
        f"ingest: {dim}x{dim}, raw trace {raw_trace:.4f}, hermiticity residual {residual:.3e}, "
        f"{negative.size} eigenvalues floored (max {negative.max() if negative.size else 0.0:.4f})"
    )
    return IngestResult(state, raw_trace, residual, adjustments)


def load_table_i(label: str, truncation: Optional[int] = None) -> IngestResult:
    """Ingest a packaged Table I matrix: 'a' raw, 'b' detector-corrected, 'c' fully corrected."""
    return ingest_density_matrix(loader.table_i_path(label), truncation)
