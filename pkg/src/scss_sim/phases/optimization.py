"""Closest squeezed-cat search and reflectivity sweeps."""

from dataclasses import dataclass
from functools import lru_cache, partial
from typing import Optional, Sequence, Tuple, Union

import numpy as np
import pandas as pd
from scipy import optimize

from ..core.config import ExperimentConfig
from ..core.fock import (
    DEFAULT_WORKING_TRUNCATION,
    MAX_SQUEEZING,
    DensityMatrix,
    FockVector,
    ScssParams,
    as_density,
    scss_amplitudes,
    squeezing_to_db,
)
from ..core.runner import runner
from ..utils.logger import logger
from .protocol import average_over_storage, ideal_heralded_state, simulate_even, simulate_scss

ALPHA_MAX = 4.0
GRID_STEP = 0.05


def _grid(lo: float, hi: float, step: float) -> np.ndarray:
    return np.round(np.linspace(lo, hi, int(round((hi - lo) / step)) + 1), 10)


ALPHA_GRID = _grid(0.0, ALPHA_MAX, GRID_STEP)
Z_GRID = _grid(-MAX_SQUEEZING, MAX_SQUEEZING, GRID_STEP)


@lru_cache(maxsize=8)
def _target_bank(N: int, parity: str, working: int) -> np.ndarray:
    """Normalized SCSS vectors on the coarse grid, shape (len(alpha), len(z), N+1)."""
    bank = np.empty((ALPHA_GRID.size, Z_GRID.size, N + 1), dtype=complex)
    for i, alpha in enumerate(ALPHA_GRID):
        for j, z in enumerate(Z_GRID):
            bank[i, j] = scss_amplitudes(alpha, z, parity, N, working)
    bank.setflags(write=False)
    return bank


def _target_fidelity(rho: np.ndarray, alpha: float, z: float, parity: str, N: int, working: int) -> float:
    vector = scss_amplitudes(alpha, z, parity, N, working)
    return float(np.real(np.vdot(vector, rho @ vector)))


def quarter_turn(elements: np.ndarray) -> np.ndarray:
    """e^{i pi n/2} rho e^{-i pi n/2}: phase space rotated by pi/2, P onto X."""
    phases = np.exp(0.5j * np.pi * np.arange(elements.shape[0]))
    return phases[:, None] * elements * phases.conj()[None, :]


def _fit_along_x(
    elements: np.ndarray, parity: str, N: int, working_truncation: int
) -> Tuple[float, float, float]:
    bank = _target_bank(N, parity, working_truncation)
    scores = np.real(np.einsum("azn,nm,azm->az", bank.conj(), elements, bank, optimize=True))
    # argmax returns the first maximum in C order, i.e. the smallest alpha
    i, j = np.unravel_index(int(np.argmax(scores)), scores.shape)
    start = np.array([ALPHA_GRID[i], Z_GRID[j]])
    coarse = float(scores[i, j])

    def loss(params: np.ndarray) -> float:
        return -_target_fidelity(elements, params[0], params[1], parity, N, working_truncation)

    result = optimize.minimize(
        loss,
        start,
        method="Nelder-Mead",
        bounds=[(0.0, ALPHA_MAX), (-MAX_SQUEEZING, MAX_SQUEEZING)],
        options={"xatol": 1e-4, "fatol": 1e-10, "maxiter": 2000},
    )
    best = -float(result.fun)
    if best < coarse:
        return float(start[0]), float(start[1]), coarse
    return float(result.x[0]), float(result.x[1]), best


def closest_scss(
    rho: Union[DensityMatrix, FockVector],
    parity: str = "odd",
    working_truncation: int = DEFAULT_WORKING_TRUNCATION,
) -> Tuple[ScssParams, float]:
    """Best-matching S(z)(|alpha> +/- |-alpha>) and its fidelity with ``rho``.

    Coarse grid over alpha in [0, 4] and z in [-1.5, 1.5] (step 0.05), ties
    going to the smallest alpha, then bounded Nelder-Mead refinement. At
    alpha = 0 the odd target is the limit S(z)|1>.

    Cats along P are covered by fitting the quarter-turned state as well and
    keeping the better of the two; alpha and z are then those of the
    quarter-turned frame. A state like (1 - 3R)|1> - sqrt(6) R |3>, whose
    coefficients differ in sign, is such a cat.
    """
    rho = as_density(rho)
    if rho.modes != 1:
        raise ValueError("closest_scss needs a single-mode state")
    if parity not in ("odd", "even"):
        raise ValueError(f"parity must be 'odd' or 'even', got {parity!r}")
    N = rho.truncation
    elements = rho.normalized().elements

    alpha, z, best = _fit_along_x(elements, parity, N, working_truncation)
    along_p = _fit_along_x(quarter_turn(elements), parity, N, working_truncation)
    orientation = "x"
    if along_p[2] > best + 1e-12:
        alpha, z, best = along_p
        orientation = "p"
    best = min(max(best, 0.0), 1.0)
    logger.debug(f"closest {parity} SCSS along {orientation}: alpha={alpha:.4f} z={z:.4f} F={best:.6f}")
    return ScssParams(alpha=alpha, z=z, parity=parity), best

@dataclass(frozen=True)
class SweepRow:
    R: float
    fidelity: float
    alpha: float
    z: float

    @property
    def squeezing_db(self) -> float:
        return squeezing_to_db(self.z)


@dataclass(frozen=True)
class SweepResult:
    """Closest-SCSS results per reflectivity, R strictly increasing."""

    rows: Tuple[SweepRow, ...]

    def __post_init__(self):
        rows = tuple(self.rows)
        object.__setattr__(self, "rows", rows)
        reflectivities = [row.R for row in rows]
        if any(b <= a for a, b in zip(reflectivities, reflectivities[1:])):
            raise ValueError("sweep reflectivities must be strictly increasing")
        for row in rows:
            if not 0.0 <= row.fidelity <= 1.0:
                raise ValueError(f"fidelity {row.fidelity} at R={row.R} outside [0, 1]")

    @property
    def reflectivities(self) -> np.ndarray:
        return np.array([row.R for row in self.rows])

    @property
    def fidelities(self) -> np.ndarray:
        return np.array([row.fidelity for row in self.rows])

    @property
    def alphas(self) -> np.ndarray:
        return np.array([row.alpha for row in self.rows])

    def best(self) -> SweepRow:
        return self.rows[int(np.argmax(self.fidelities))]

    def to_frame(self) -> pd.DataFrame:
        return pd.DataFrame(
            [(r.R, r.fidelity, r.alpha, r.z, r.squeezing_db) for r in self.rows],
            columns=["R", "fidelity", "alpha", "z", "squeezing_db"],
        )

    @classmethod
    def from_frame(cls, frame: pd.DataFrame) -> "SweepResult":
        return cls(
            tuple(
                SweepRow(float(r.R), float(r.fidelity), float(r.alpha), float(r.z))
                for r in frame.itertuples(index=False)
            )
        )


def reflectivity_grid(r_min: float, r_max: float, steps: int) -> np.ndarray:
    if steps < 1:
        raise ValueError("steps must be >= 1")
    if steps == 1:
        return np.array([r_min])
    return np.linspace(r_min, r_max, steps)


def _sweep_state(
    config: ExperimentConfig, ideal: bool, n_stor: Optional[int], parity: str, R: float
) -> DensityMatrix:
    if ideal:
        return ideal_heralded_state(R, config.truncation, parity).to_density()
    if n_stor is None:
        return average_over_storage(config, R, parity, workers=1)
    simulate = simulate_scss if parity == "odd" else simulate_even
    return simulate(config, R, n_stor).state


def _sweep_row(config: ExperimentConfig, ideal: bool, n_stor: Optional[int], parity: str, R: float) -> SweepRow:
    state = _sweep_state(config, ideal, n_stor, parity, R)
    params, value = closest_scss(state, parity, config.target_working_truncation)
    return SweepRow(float(R), value, params.alpha, params.z)


def sweep_reflectivity(
    config: Optional[ExperimentConfig],
    r_grid: Sequence[float],
    ideal: bool = False,
    n_stor: Optional[int] = None,
    parity: str = "odd",
    workers: Optional[int] = None,
) -> SweepResult:
    """Closest-SCSS fidelity, alpha and z for every R of the grid.

    ``ideal`` bypasses every loss and uses the lossless heralded state.
    Without ``n_stor`` the realistic state is averaged over the configured
    storage range; with it a single storage time is used.
    """
    config = config or ExperimentConfig()
    r_grid = [float(R) for R in r_grid]
    if any(not 0.0 <= R < 1.0 for R in r_grid):
        raise ValueError("sweep reflectivities must lie in [0, 1)")
    mode = "ideal" if ideal else ("averaged" if n_stor is None else f"n_stor={n_stor}")
    logger.info(f"sweep: {len(r_grid)} reflectivities, {parity} parity, {mode}")
    job = partial(_sweep_row, config, ideal, n_stor, parity)
    rows = runner.map(job, r_grid, workers=workers, desc="sweep")
    result = SweepResult(tuple(rows))
    best = result.best()
    logger.info(f"sweep: max F={best.fidelity:.4f} at R={best.R:.3f} (alpha={best.alpha:.3f}, z={best.z:.3f})")
    return result
