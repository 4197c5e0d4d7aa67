"""
Experiment model of the heralded squeezed-cat source.

Two heralded resource states are stored with losses, mixed on a tunable
beam splitter and conditioned on a homodyne outcome of the second output
port. Mode 1 is the kept mode, mode 2 the heralded one.
"""

import math
from dataclasses import dataclass
from functools import partial
from typing import Iterable, List, Optional, Sequence, Tuple

import numpy as np
from scipy import stats

from ..core.channels import (
    BeamSplitterSpec,
    HeraldOutcome,
    HeraldSpec,
    apply_loss,
    apply_unitary,
    beam_splitter_unitary,
    contract_pure,
    herald_project,
)
from ..core.config import ExperimentConfig
from ..core.exceptions import ConfigError, DegenerateStateError, TruncationError
from ..core.fock import DensityMatrix, FockVector, ScssParams, cat_state, fidelity, fock_state
from ..core.runner import runner
from ..utils.logger import logger

# Reference states of the experiment
HEADLINE_TARGET = ScssParams(alpha=2.47, z=0.56, parity="odd")
EVEN_TARGET = ScssParams.from_db(alpha=1.71, squeezing_db=3.90, parity="even")
EVEN_SIMULATED_FIDELITY = 0.61
EVEN_MEASURED_FIDELITY = 0.58


def estimate_r_squared(config: ExperimentConfig) -> float:
    """Pair-creation probability per pulse from the APD click rate: rate / (eta f_pump)."""
    if config.eta <= 0 or config.f_pump <= 0:
        raise ConfigError("estimate_r_squared needs eta > 0 and f_pump > 0")
    return config.single_click_rate / (config.eta * config.f_pump)


def _check_perturbative(r2: float, eta: float) -> None:
    if r2 < 0:
        raise ValueError(f"r^2 must be >= 0, got {r2}")
    if not 0.0 <= eta <= 1.0:
        raise ValueError(f"eta must lie in [0, 1], got {eta}")
    if r2 * (2.0 - eta) >= 1.0:
        raise ValueError(
            f"r^2 (2 - eta) = {r2 * (2.0 - eta):.3f} >= 1; the perturbative resource model does not apply"
        )


def heralded_single(r2: float, eta: float, N: int) -> DensityMatrix:
    """rho_1 proportional to |1><1| + r^2 (2 - eta) |2><2|."""
    _check_perturbative(r2, eta)
    if N < 2:
        raise TruncationError("heralded_single needs N >= 2")
    return DensityMatrix.diagonal([0.0, 1.0, r2 * (2.0 - eta)], N).normalized()


def p2_weight(eta: float) -> float:
    return eta ** 2 / 2.0


def p3_weight(eta: float) -> float:
    return 1.5 * eta ** 2 * (1.0 - eta / 2.0)


def p3_decomposition(eta_f: float, eta_apd: float) -> float:
    """p3 split into its two click scenarios.

    Either three photons pass the filter and two of them click, or only two
    pass and both are detected.
    """
    three_pass = 0.75 * eta_f ** 3 * eta_apd * (1.0 - (1.0 - eta_apd) ** 2)
    two_pass = 1.5 * eta_f ** 2 * (1.0 - eta_f) * eta_apd ** 2
    return three_pass + two_pass


def heralded_double(r2: float, eta: float, N: int) -> DensityMatrix:
    """rho_2 proportional to p2 r^4 |2><2| + p3 r^6 |3><3|."""
    _check_perturbative(r2, eta)
    if eta <= 0:
        raise ValueError("heralded_double needs eta > 0")
    if N < 3:
        raise TruncationError("heralded_double needs N >= 3")
    return DensityMatrix.diagonal([0.0, 0.0, p2_weight(eta), p3_weight(eta) * r2], N).normalized()


def exact_heralded_single(r2: float, eta: float, N: int, phi: float = 0.0) -> DensityMatrix:
    """Conditional signal state of a truncated TMSV after an on/off click on the idler.

    The TMSV is sum_n (e^{-i phi} lambda)^n |n n> with lambda^2 = r2; the
    click POVM is 1 - (1 - eta)^n. The result does not depend on ``phi``.
    """
    if not 0.0 <= r2 < 1.0:
        raise ValueError(f"r2 must lie in [0, 1), got {r2}")
    if not 0.0 < eta <= 1.0:
        raise ValueError(f"eta must lie in (0, 1], got {eta}")
    n = np.arange(N + 1)
    amplitudes = math.sqrt(1.0 - r2) * (np.exp(-1j * phi) * math.sqrt(r2)) ** n
    joint = np.diag(amplitudes)  # <n1, n2|psi> is diagonal in (n1, n2)
    click = 1.0 - (1.0 - eta) ** n
    signal = joint @ np.diag(click) @ joint.conj().T
    return DensityMatrix(signal).normalized()


def storage_loss(n_stor: int, config: ExperimentConfig) -> float:
    """R = 1 - (1 - eta_prop)(1 - eta_qmc)^n_stor."""
    if n_stor < 0:
        raise ValueError(f"n_stor must be >= 0, got {n_stor}")
    return 1.0 - (1.0 - config.eta_prop) * (1.0 - config.eta_qmc) ** n_stor


@dataclass(frozen=True)
class ResourceStates:
    """The two stored inputs of the interaction beam splitter."""

    kept: DensityMatrix
    heralded: DensityMatrix


def resource_states(config: ExperimentConfig, n_stor: int, parity: str = "odd") -> ResourceStates:
    """Lossy inputs: stored single photon on mode 1, fresh resource on mode 2.

    Odd parity uses the two-photon state on mode 2, even parity a second
    single photon.
    """
    N = config.truncation
    r2 = estimate_r_squared(config)
    kept = apply_loss(heralded_single(r2, config.eta, N), storage_loss(n_stor, config))
    if parity == "odd":
        second = heralded_double(r2, config.eta, N)
    elif parity == "even":
        second = heralded_single(r2, config.eta, N)
    else:
        raise ValueError(f"parity must be 'odd' or 'even', got {parity!r}")
    heralded = apply_loss(second, storage_loss(1, config))
    return ResourceStates(kept, heralded)


def _run_interaction(
    config: ExperimentConfig, R: float, n_stor: int, parity: str, window: float
) -> HeraldOutcome:
    if not 0.0 <= R <= 1.0:
        raise ValueError(f"reflectivity must lie in [0, 1], got {R}")
    inputs = resource_states(config, n_stor, parity)
    unitary = beam_splitter_unitary(BeamSplitterSpec(R), config.truncation)
    rho12 = apply_unitary(inputs.kept.tensor(inputs.heralded), unitary)
    rho12 = apply_loss(rho12, config.r_hd, mode=2)
    outcome = herald_project(rho12, HeraldSpec(mode=2, window_halfwidth=window))
    logger.debug(
        f"{parity} R={R:.4f} n_stor={n_stor} w={window}: acceptance={outcome.acceptance:.4e}"
    )
    return outcome


def simulate_scss(config: ExperimentConfig, R: float, n_stor: int, window: float = 0.0) -> HeraldOutcome:
    """Heralded odd-branch output state for a fixed storage time.

    ``window`` is the accepted half-width in X; 0 projects exactly on X = 0
    and reports a probability density as acceptance.
    """
    return _run_interaction(config, R, n_stor, "odd", window)


def simulate_even(config: ExperimentConfig, R: float, n_stor: int, window: float = 0.0) -> HeraldOutcome:
    """Even branch: the same pipeline with a single photon on both inputs."""
    return _run_interaction(config, R, n_stor, "even", window)


def _simulate_at(config: ExperimentConfig, R: float, parity: str, window: float, n_stor: int) -> HeraldOutcome:
    return _run_interaction(config, R, n_stor, parity, window)


def storage_outcomes(
    config: ExperimentConfig,
    R: float,
    parity: str = "odd",
    window: float = 0.0,
    workers: Optional[int] = None,
) -> List[HeraldOutcome]:
    """Herald outcomes for every n_stor in the configured range, in increasing n_stor."""
    n_values = list(config.storage_range)
    if not n_values:
        raise ConfigError("storage range is empty")
    job = partial(_simulate_at, config, R, parity, window)
    return runner.map(job, n_values, workers=1 if workers is None else workers)


def average_over_storage(
    config: ExperimentConfig,
    R: float,
    parity: str = "odd",
    window: float = 0.0,
    workers: Optional[int] = None,
) -> DensityMatrix:
    """Unweighted mean of the heralded states over n_stor_min..n_stor_max."""
    outcomes = storage_outcomes(config, R, parity, window, workers)
    mean = sum(o.state.elements for o in outcomes) / len(outcomes)
    return DensityMatrix(mean).normalized()


def generation_rate(config: ExperimentConfig, R: Optional[float] = None, workers: Optional[int] = None) -> float:
    """Order-of-magnitude SCSS rate in Hz.

    double_click_rate x P(a single photon was heralded within the storage
    window) x mean acceptance of the X window of half-width herald_halfwidth.
    """
    window = config.herald_halfwidth
    if window == 0.0:
        return 0.0
    R = config.reflectivity if R is None else R
    p1 = config.single_click_rate / config.f_pump
    slots = config.n_stor_max - config.n_stor_min + 1
    availability = 1.0 - (1.0 - p1) ** slots
    outcomes = storage_outcomes(config, R, "odd", window, workers)
    acceptance = float(np.mean([o.acceptance for o in outcomes]))
    rate = config.double_click_rate * availability * acceptance
    logger.info(
        f"rate: availability={availability:.4f} acceptance={acceptance:.4f} -> {rate:.3f} Hz"
    )
    return rate


def decay_fit(points: Iterable[Tuple[int, float]]) -> float:
    """Loss per round trip from a log-linear fit of F(n) = A (1 - l)^n."""
    points = list(points)
    if len(points) < 3:
        raise ValueError(f"decay_fit needs at least 3 points, got {len(points)}")
    n = np.array([p[0] for p in points], dtype=float)
    f = np.array([p[1] for p in points], dtype=float)
    if np.any(f <= 0):
        raise ValueError("decay_fit needs strictly positive fidelities")
    if np.ptp(n) == 0:
        raise ValueError("decay_fit needs at least two distinct round-trip counts")
    fit = stats.linregress(n, np.log(f))
    return float(1.0 - math.exp(fit.slope))


def single_photon_decay_series(
    eta_qmc: float,
    n_values: Sequence[int],
    detector_efficiency: float = 1.0,
) -> List[Tuple[int, float]]:
    """<1|rho|1> of a single photon after n round trips and the detector loss."""
    one = fock_state(1, 2).to_density()
    series = []
    for n in n_values:
        rho = apply_loss(one, 1.0 - (1.0 - eta_qmc) ** n)
        rho = apply_loss(rho, 1.0 - detector_efficiency)
        series.append((int(n), float(np.real(rho.elements[1, 1]))))
    return series


def ideal_heralded_state(R: float, N: int, parity: str = "odd") -> FockVector:
    """Lossless heralded output at X = 0.

    Odd: (1 - 3R)|1> - sqrt(6) R |3> from |1>|2>. Even: the X = 0
    contraction of the beam-split |1>|1>, which is |0> + sqrt(2)|2> for
    every 0 < R < 1.
    """
    if not 0.0 <= R <= 1.0:
        raise ValueError(f"reflectivity must lie in [0, 1], got {R}")
    if parity == "odd":
        if N < 3:
            raise TruncationError("the odd heralded state needs N >= 3")
        amps = np.zeros(N + 1, dtype=complex)
        amps[1] = 1.0 - 3.0 * R
        amps[3] = -math.sqrt(6.0) * R
        return FockVector(amps).normalized()
    if parity != "even":
        raise ValueError(f"parity must be 'odd' or 'even', got {parity!r}")
    pair = np.kron(fock_state(1, N).amplitudes, fock_state(1, N).amplitudes)
    mixed = beam_splitter_unitary(BeamSplitterSpec(R), N) @ pair
    kept = contract_pure(mixed, N, x=0.0, mode=2)
    if np.linalg.norm(kept) < 1e-12:
        raise DegenerateStateError(f"X = 0 herald of |1>|1> vanishes at R={R}")
    return FockVector(kept).normalized()


@dataclass(frozen=True)
class StorageTradeoffRow:
    n_stor_max: int
    fidelity: float
    rate: float


def storage_window_tradeoff(
    config: ExperimentConfig,
    n_stor_max_values: Sequence[int],
    target: ScssParams = HEADLINE_TARGET,
    workers: Optional[int] = None,
) -> List[StorageTradeoffRow]:
    """Fidelity with a fixed target against generation rate for longer storage windows."""
    target_vector = cat_state(target, config.truncation, config.target_working_truncation)
    rows = []
    for n_max in n_stor_max_values:
        variant = config.replace(n_stor_max=int(n_max))
        state = average_over_storage(variant, variant.reflectivity, workers=workers)
        rows.append(
            StorageTradeoffRow(int(n_max), fidelity(target_vector, state), generation_rate(variant, workers=workers))
        )
        logger.info(f"storage window [{variant.n_stor_min}, {n_max}]: F={rows[-1].fidelity:.3f} rate={rows[-1].rate:.2f} Hz")
    return rows
