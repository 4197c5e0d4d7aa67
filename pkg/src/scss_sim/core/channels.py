"""
Two-mode unitaries, photon loss, Pockels-cell mapping and quadrature heralding.

Mode ordering is fixed: mode 1 is the kept mode, mode 2 the heralded one.
Two-mode operators act on the (N+1)^2 space with row index n1*(N+1) + n2.
"""

import math
from dataclasses import dataclass
from functools import lru_cache
from typing import NamedTuple, Optional

import numpy as np
from scipy import linalg

from .exceptions import DegenerateStateError, DimensionMismatchError
from .fock import DensityMatrix, annihilation, fock_wavefunctions

MIN_HERALD_NODES = 21
DEFAULT_HERALD_NODES = 41


@dataclass(frozen=True)
class BeamSplitterSpec:
    """Intensity reflectivity R = r^2 of a lossless two-mode beam splitter."""

    reflectivity: float

    def __post_init__(self):
        if not 0.0 <= self.reflectivity <= 1.0:
            raise ValueError(f"reflectivity must lie in [0, 1], got {self.reflectivity}")

    @property
    def angle(self) -> float:
        return math.asin(math.sqrt(self.reflectivity))


@dataclass(frozen=True)
class HeraldSpec:
    """Quadrature heralding on ``mode``: accept X in [-w, w] (w = 0 projects on X = 0)."""

    mode: int = 2
    window_halfwidth: float = 0.0
    nodes: int = DEFAULT_HERALD_NODES

    def __post_init__(self):
        if self.mode not in (1, 2):
            raise ValueError(f"herald mode must be 1 or 2, got {self.mode}")
        if self.window_halfwidth < 0:
            raise ValueError(f"window half-width must be >= 0, got {self.window_halfwidth}")
        if self.nodes < MIN_HERALD_NODES:
            raise ValueError(f"at least {MIN_HERALD_NODES} quadrature nodes required, got {self.nodes}")


class HeraldOutcome(NamedTuple):
    """Conditional state of the kept mode.

    ``acceptance`` is a probability density in x when ``is_density`` is true
    (exact X = 0 projection) and a probability otherwise.
    """

    state: DensityMatrix
    acceptance: float
    is_density: bool


def _two_mode_ladders(N: int):
    a = annihilation(N)
    eye = np.eye(N + 1)
    return np.kron(a, eye), np.kron(eye, a)


@lru_cache(maxsize=256)
def _beam_splitter_matrix(reflectivity: float, N: int) -> np.ndarray:
    a1, a2 = _two_mode_ladders(N)
    theta = math.asin(math.sqrt(reflectivity))
    generator = theta * (a1.conj().T @ a2 - a1 @ a2.conj().T)
    matrix = linalg.expm(generator)
    matrix.setflags(write=False)
    return matrix


def beam_splitter_unitary(spec: BeamSplitterSpec, N: int) -> np.ndarray:
    """exp(arcsin(sqrt R) (a1^dagger a2 - a1 a2^dagger)); conserves n1 + n2."""
    return _beam_splitter_matrix(float(spec.reflectivity), int(N))


def retardance_to_reflectivity(delta: float) -> float:
    return math.sin(delta / 2.0) ** 2


@lru_cache(maxsize=64)
def _pockels_matrix(delta: float, N: int) -> np.ndarray:
    a1, a2 = _two_mode_ladders(N)
    generator = 1j * (delta / 2.0) * (a1.conj().T @ a2 + a2.conj().T @ a1)
    matrix = linalg.expm(generator)
    matrix.setflags(write=False)
    return matrix


def pockels_unitary(delta: float, N: int) -> np.ndarray:
    """Pockels cell plus polarizing splitter: exp(i delta/2 (a_H^dagger a_V + a_V^dagger a_H)).

    Equivalent to beam_splitter_unitary(sin^2(delta/2)) up to a pi/2 phase
    on one output mode.
    """
    return _pockels_matrix(float(delta), int(N))


def apply_unitary(rho: DensityMatrix, unitary: np.ndarray) -> DensityMatrix:
    if unitary.shape != rho.elements.shape:
        raise DimensionMismatchError(
            f"operator shape {unitary.shape} does not match state dimension {rho.dim}"
        )
    return DensityMatrix(unitary @ rho.elements @ unitary.conj().T, modes=rho.modes)


# -----------------------------------------------------------------------------
# Loss
# -----------------------------------------------------------------------------

@lru_cache(maxsize=256)
def loss_kraus_operators(loss: float, N: int) -> np.ndarray:
    """Kraus operators K_k = <k|_env U(R=loss) |0>_env, stacked as (N+1, N+1, N+1).

    The dilation couples the mode to a vacuum environment on a beam splitter
    of reflectivity ``loss``; number conservation keeps every block with at
    most N photons exact in the truncated space.
    """
    if not 0.0 <= loss <= 1.0:
        raise ValueError(f"loss must lie in [0, 1], got {loss}")
    d = N + 1
    unitary = _beam_splitter_matrix(float(loss), int(N)).reshape(d, d, d, d)
    # unitary[n1_out, k_env_out, n1_in, env_in]; environment starts in vacuum
    kraus = np.transpose(unitary[:, :, :, 0], (1, 0, 2)).copy()
    kraus.setflags(write=False)
    return kraus


def apply_loss(rho: DensityMatrix, loss: float, mode: Optional[int] = None) -> DensityMatrix:
    """Photon loss of fraction ``loss`` on a single-mode state or on one mode of a pair."""
    if not 0.0 <= loss <= 1.0:
        raise ValueError(f"loss must lie in [0, 1], got {loss}")
    if loss == 0.0:
        return rho
    kraus = loss_kraus_operators(float(loss), rho.truncation)

    if rho.modes == 1:
        if mode not in (None, 1):
            raise DimensionMismatchError(f"single-mode state has no mode {mode}")
        out = np.einsum("kan,nm,kbm->ab", kraus, rho.elements, kraus.conj(), optimize=True)
        return DensityMatrix(out)

    tensor = rho.as_tensor()
    if mode == 1:
        out = np.einsum("kan,nqmr,kbm->aqbr", kraus, tensor, kraus.conj(), optimize=True)
    elif mode == 2:
        out = np.einsum("kaq,nqmr,kbr->namb", kraus, tensor, kraus.conj(), optimize=True)
    else:
        raise DimensionMismatchError("two-mode loss needs mode=1 or mode=2")
    return DensityMatrix(out.reshape(rho.dim, rho.dim), modes=2)


# -----------------------------------------------------------------------------
# Heralding
# -----------------------------------------------------------------------------

def herald_window_operator(N: int, halfwidth: float, nodes: int = DEFAULT_HERALD_NODES) -> np.ndarray:
    """E_kl = integral over [-w, w] of Psi_k(x) Psi_l(x) dx; w = 0 gives Psi_k(0) Psi_l(0)."""
    if halfwidth == 0.0:
        psi = fock_wavefunctions(N, 0.0)
        return np.outer(psi, psi)
    roots, weights = np.polynomial.legendre.leggauss(nodes)
    xs = halfwidth * roots
    psi = fock_wavefunctions(N, xs)
    return (psi * (halfwidth * weights)) @ psi.T


def herald_project(rho12: DensityMatrix, spec: HeraldSpec, min_acceptance: float = 1e-14) -> HeraldOutcome:
    """Condition a two-mode state on a quadrature outcome of ``spec.mode``."""
    if rho12.modes != 2:
        raise DimensionMismatchError("herald_project needs a two-mode state")
    N = rho12.truncation
    window = herald_window_operator(N, spec.window_halfwidth, spec.nodes)
    tensor = rho12.as_tensor()
    if spec.mode == 2:
        conditional = np.einsum("lk,nkml->nm", window, tensor)
    else:
        conditional = np.einsum("lk,knlm->nm", window, tensor)

    acceptance = float(np.real(np.trace(conditional)))
    if acceptance <= min_acceptance:
        raise DegenerateStateError(
            f"herald outcome has vanishing probability ({acceptance:.3e}); "
            "the projection annihilates the state"
        )
    state = DensityMatrix(conditional / acceptance)
    return HeraldOutcome(state, acceptance, spec.window_halfwidth == 0.0)


def contract_pure(amplitudes: np.ndarray, N: int, x: float = 0.0, mode: int = 2) -> np.ndarray:
    """Unnormalized kept-mode amplitudes sum_k Psi_k(x) <k|_mode |psi>."""
    psi = fock_wavefunctions(N, float(x))
    matrix = np.asarray(amplitudes, dtype=complex).reshape(N + 1, N + 1)
    return matrix @ psi if mode == 2 else psi @ matrix
