"""Wigner negativity regions and parametric bootstrap intervals for reconstructed states."""

from dataclasses import dataclass, field
from functools import partial
from typing import Any, Dict, Optional, Sequence, Tuple

import numpy as np
from scipy import ndimage

from ..core.fock import DensityMatrix, FockVector, ScssParams, WignerGrid, cat_state, fidelity
from ..core.runner import runner
from ..utils.logger import logger
from .tomography import TomographyJob, degrade, maxlik_reconstruct, sample_quadrature_arrays

DEFAULT_NEGATIVITY_EPS = 0.005
DEFAULT_PERCENTILES = (16.0, 84.0)


def count_negative_regions(grid: WignerGrid, eps: float = DEFAULT_NEGATIVITY_EPS) -> int:
    """Number of 4-connected regions where W < -eps."""
    if eps <= 0:
        raise ValueError(f"eps must be > 0, got {eps}")
    # default structuring element of ndimage.label is 4-connectivity in 2-D
    _, count = ndimage.label(grid.values < -eps)
    return int(count)


@dataclass(frozen=True)
class BootstrapReport:
    point_estimate: float
    lower: float
    upper: float
    n_repetitions: int
    samples: Tuple[float, ...] = field(default=(), repr=False)

    def __post_init__(self):
        if self.n_repetitions < 2:
            raise ValueError("a bootstrap needs at least 2 repetitions")
        if not self.lower <= self.point_estimate <= self.upper:
            raise ValueError("bootstrap bounds must bracket the point estimate")

    @property
    def width(self) -> float:
        return self.upper - self.lower

    def to_dict(self) -> Dict[str, Any]:
        return {
            "point_estimate": self.point_estimate,
            "lower": self.lower,
            "upper": self.upper,
            "n_repetitions": self.n_repetitions,
            "samples": list(self.samples),
        }


def _bootstrap_repetition(
    measured: DensityMatrix,
    target: FockVector,
    n_samples: int,
    settings: Dict[str, Any],
    seed: np.random.SeedSequence,
) -> float:
    x, theta = sample_quadrature_arrays(measured, n_samples, seed)
    job = TomographyJob(x, theta, **settings)
    estimate = maxlik_reconstruct(job).state
    return fidelity(target, estimate)


def parametric_bootstrap(
    rho_hat: DensityMatrix,
    n_samples: int,
    n_rep: int,
    target: ScssParams,
    seed: Optional[int] = None,
    efficiency_correction: float = 1.0,
    percentiles: Sequence[float] = DEFAULT_PERCENTILES,
    workers: Optional[int] = None,
    working_truncation: Optional[int] = None,
    **job_settings,
) -> BootstrapReport:
    """Percentile interval of the target fidelity under resampling from ``rho_hat``.

    Each repetition draws ``n_samples`` records from rho_hat degraded by the
    same efficiency the reconstruction inverts, reconstructs, and scores the
    estimate against the target SCSS.
    """
    if n_rep < 2:
        raise ValueError(f"n_rep must be >= 2, got {n_rep}")
    N = rho_hat.truncation
    target_vector = cat_state(target, N, working_truncation)
    point = fidelity(target_vector, rho_hat)

    measured = degrade(rho_hat, efficiency_correction) if efficiency_correction < 1.0 else rho_hat
    settings = dict(job_settings, truncation=N, efficiency_correction=efficiency_correction)
    seeds = np.random.SeedSequence(seed).spawn(n_rep)
    logger.info(f"bootstrap: {n_rep} repetitions x {n_samples} samples, point estimate F={point:.4f}")

    job = partial(_bootstrap_repetition, measured, target_vector, n_samples, settings)
    values = np.array(runner.map(job, seeds, workers=workers, desc="bootstrap"))

    low_q, high_q = np.percentile(values, list(percentiles))
    lower = min(float(low_q), point)
    upper = max(float(high_q), point)
    logger.info(f"bootstrap: F = {point:.4f} (+{upper - point:.4f} / -{point - lower:.4f})")
    return BootstrapReport(point, lower, upper, n_rep, tuple(float(v) for v in values))
