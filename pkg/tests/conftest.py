import os

# Keep test runs from writing into the project log directory
os.environ.setdefault("SCSS_SIM_LOG_FILE", "")

import numpy as np
import pytest

from scss_sim.core.config import ExperimentConfig, load_experiment_config
from scss_sim.core.fock import DensityMatrix, ScssParams, cat_state, fock_state


@pytest.fixture
def paper_config() -> ExperimentConfig:
    return load_experiment_config("paper")


@pytest.fixture
def lossless_config() -> ExperimentConfig:
    return load_experiment_config("lossless")


@pytest.fixture
def vacuum() -> DensityMatrix:
    return fock_state(0, 12).to_density()


@pytest.fixture
def single_photon() -> DensityMatrix:
    return fock_state(1, 12).to_density()


@pytest.fixture
def small_cat() -> DensityMatrix:
    """Moderate odd SCSS that fits comfortably in N=12."""
    return cat_state(ScssParams(alpha=1.2, z=0.3), 12).to_density()


@pytest.fixture
def random_state():
    def make(N: int, rank: int = 3, seed: int = 7) -> DensityMatrix:
        rng = np.random.default_rng(seed)
        vectors = rng.normal(size=(N + 1, rank)) + 1j * rng.normal(size=(N + 1, rank))
        rho = vectors @ vectors.conj().T
        return DensityMatrix(rho / np.trace(rho))

    return make
