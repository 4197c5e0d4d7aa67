"""
Truncated Fock-space numerics for one or two bosonic modes.

Quadrature convention: X = (a + a^dagger)/sqrt(2), vacuum variance 1/2.
Wigner functions are normalized so that the integral over dx dp is 1.
"""

import math
from dataclasses import dataclass, field
from functools import lru_cache
from typing import Callable, Dict, Optional, Sequence, Union

import numpy as np
import pandas as pd
from scipy import integrate, linalg

from .exceptions import DegenerateStateError, DimensionMismatchError, TruncationError

DEFAULT_TRUNCATION = 20
DEFAULT_WORKING_TRUNCATION = 80
MAX_SQUEEZING = 1.5
LN10 = math.log(10.0)

Parity = str  # "odd" | "even"
PARITIES = ("odd", "even")


@dataclass(frozen=True)
class FockVector:
    """Pure single-mode state as amplitudes over Fock levels 0..N."""

    amplitudes: np.ndarray

    def __post_init__(self):
        amps = np.array(self.amplitudes, dtype=complex).ravel()
        if amps.size < 2:
            raise TruncationError("a FockVector needs truncation N >= 1")
        amps.setflags(write=False)
        object.__setattr__(self, "amplitudes", amps)

    @property
    def truncation(self) -> int:
        return self.amplitudes.size - 1

    def norm(self) -> float:
        return float(np.linalg.norm(self.amplitudes))

    def normalized(self) -> "FockVector":
        norm = self.norm()
        if norm < 1e-300:
            raise DegenerateStateError("cannot normalize a zero vector")
        return FockVector(self.amplitudes / norm)

    def overlap(self, other: "FockVector") -> complex:
        """<self|other>."""
        _check_same_truncation(self.truncation, other.truncation)
        return complex(np.vdot(self.amplitudes, other.amplitudes))

    def populations(self) -> np.ndarray:
        return np.abs(self.amplitudes) ** 2

    def to_density(self) -> "DensityMatrix":
        return DensityMatrix.from_vector(self)


@dataclass(frozen=True)
class DensityMatrix:
    """Density operator over one or two modes, each truncated at N.

    Two-mode elements use the row index n1*(N+1) + n2 (mode 1 major).
    Instances are not required to be normalized; use ``normalized()``
    and ``validate()`` where the physical invariants matter.
    """

    elements: np.ndarray
    modes: int = 1

    def __post_init__(self):
        rho = np.array(self.elements, dtype=complex)
        if self.modes not in (1, 2):
            raise DimensionMismatchError(f"only 1 or 2 modes are supported, got {self.modes}")
        if rho.ndim != 2 or rho.shape[0] != rho.shape[1]:
            raise DimensionMismatchError(f"density matrix must be square, got shape {rho.shape}")
        local = round(rho.shape[0] ** (1.0 / self.modes))
        if local ** self.modes != rho.shape[0] or local < 2:
            raise DimensionMismatchError(
                f"dimension {rho.shape[0]} is not (N+1)^{self.modes} with N >= 1"
            )
        rho.setflags(write=False)
        object.__setattr__(self, "elements", rho)

    @classmethod
    def from_vector(cls, vector: Union[FockVector, np.ndarray], modes: int = 1) -> "DensityMatrix":
        amps = vector.amplitudes if isinstance(vector, FockVector) else np.asarray(vector, dtype=complex)
        return cls(np.outer(amps, amps.conj()), modes=modes)

    @classmethod
    def diagonal(cls, populations: Sequence[float], truncation: int) -> "DensityMatrix":
        populations = np.asarray(populations, dtype=float)
        if populations.size > truncation + 1:
            raise TruncationError(
                f"{populations.size} populations do not fit truncation N={truncation}"
            )
        diag = np.zeros(truncation + 1)
        diag[: populations.size] = populations
        return cls(np.diag(diag).astype(complex))

    @property
    def dim(self) -> int:
        return self.elements.shape[0]

    @property
    def local_dim(self) -> int:
        return round(self.dim ** (1.0 / self.modes))

    @property
    def truncation(self) -> int:
        return self.local_dim - 1

    def trace(self) -> float:
        return float(np.real(np.trace(self.elements)))

    def normalized(self) -> "DensityMatrix":
        tr = self.trace()
        if tr <= 1e-300:
            raise DegenerateStateError("cannot normalize a density matrix with zero trace")
        return DensityMatrix(self.elements / tr, modes=self.modes)

    def eigenvalues(self) -> np.ndarray:
        hermitian = 0.5 * (self.elements + self.elements.conj().T)
        return linalg.eigvalsh(hermitian)

    def purity(self) -> float:
        return float(np.real(np.trace(self.elements @ self.elements)))

    def populations(self) -> np.ndarray:
        return np.real(np.diag(self.elements)).copy()

    def hermiticity_residual(self) -> float:
        return float(np.max(np.abs(self.elements - self.elements.conj().T)))

    def validate(self, herm_tol: float = 1e-10, trace_tol: float = 1e-10, psd_tol: float = 1e-9) -> None:
        """Raise ValueError unless Hermitian, unit-trace and PSD within tolerance."""
        residual = self.hermiticity_residual()
        if residual > herm_tol:
            raise ValueError(f"not Hermitian: max |rho - rho^dagger| = {residual:.3e}")
        if abs(self.trace() - 1.0) > trace_tol:
            raise ValueError(f"trace {self.trace():.12f} differs from 1")
        lowest = float(self.eigenvalues()[0])
        if lowest < -psd_tol:
            raise ValueError(f"not positive semidefinite: lowest eigenvalue {lowest:.3e}")

    def is_valid(self, **tolerances) -> bool:
        try:
            self.validate(**tolerances)
        except ValueError:
            return False
        return True

    def tensor(self, other: "DensityMatrix") -> "DensityMatrix":
        """Two-mode product state self (mode 1) x other (mode 2)."""
        if self.modes != 1 or other.modes != 1:
            raise DimensionMismatchError("tensor product is defined for single-mode operands")
        _check_same_truncation(self.truncation, other.truncation)
        return DensityMatrix(np.kron(self.elements, other.elements), modes=2)

    def as_tensor(self) -> np.ndarray:
        """Two-mode elements reshaped to [n1, n2, m1, m2]."""
        if self.modes != 2:
            raise DimensionMismatchError("as_tensor needs a two-mode state")
        d = self.local_dim
        return self.elements.reshape(d, d, d, d)

    def partial_trace(self, keep: int) -> "DensityMatrix":
        """Reduce a two-mode state to mode ``keep`` (1 or 2)."""
        tensor = self.as_tensor()
        if keep == 1:
            reduced = np.einsum("ikjk->ij", tensor)
        elif keep == 2:
            reduced = np.einsum("kikj->ij", tensor)
        else:
            raise ValueError(f"mode index must be 1 or 2, got {keep}")
        return DensityMatrix(reduced)

    def resize(self, truncation: int) -> "DensityMatrix":
        """Embed into a larger basis or cut to a smaller one (explicit, unnormalized)."""
        if self.modes != 1:
            raise DimensionMismatchError("resize is defined for single-mode states")
        out = np.zeros((truncation + 1, truncation + 1), dtype=complex)
        k = min(truncation, self.truncation) + 1
        out[:k, :k] = self.elements[:k, :k]
        return DensityMatrix(out)

    def to_dict(self) -> Dict[str, object]:
        return {
            "truncation": self.truncation,
            "modes": self.modes,
            "re": np.real(self.elements).tolist(),
            "im": np.imag(self.elements).tolist(),
        }

    @classmethod
    def from_dict(cls, data: Dict[str, object]) -> "DensityMatrix":
        elements = np.asarray(data["re"], dtype=float) + 1j * np.asarray(data["im"], dtype=float)
        rho = cls(elements, modes=int(data.get("modes", 1)))
        if "truncation" in data and int(data["truncation"]) != rho.truncation:
            raise DimensionMismatchError(
                f"declared truncation {data['truncation']} does not match matrix size {rho.dim}"
            )
        return rho


@dataclass(frozen=True)
class ScssParams:
    """Target S(z)(|alpha> +/- |-alpha>): alpha >= 0, z real, parity odd|even."""

    alpha: float
    z: float
    parity: Parity = "odd"

    def __post_init__(self):
        if self.alpha < 0:
            raise ValueError(f"alpha must be >= 0 (sign is absorbed by convention), got {self.alpha}")
        if self.parity not in PARITIES:
            raise ValueError(f"parity must be 'odd' or 'even', got {self.parity!r}")

    @property
    def squeezing_db(self) -> float:
        return squeezing_to_db(self.z)

    @classmethod
    def from_db(cls, alpha: float, squeezing_db: float, parity: Parity = "odd") -> "ScssParams":
        return cls(alpha=alpha, z=db_to_squeezing(squeezing_db), parity=parity)


@dataclass(frozen=True)
class WignerGrid:
    """W(x, p) sampled on a rectangular grid; ``values[i, j]`` is W(x_i, p_j)."""

    x_axis: np.ndarray
    p_axis: np.ndarray
    values: np.ndarray = field(repr=False)

    def integral(self) -> float:
        inner = integrate.trapezoid(self.values, self.p_axis, axis=1)
        return float(integrate.trapezoid(inner, self.x_axis))

    def at(self, x: float, p: float) -> float:
        i = int(np.argmin(np.abs(self.x_axis - x)))
        j = int(np.argmin(np.abs(self.p_axis - p)))
        return float(self.values[i, j])

    def to_frame(self) -> pd.DataFrame:
        xx, pp = np.meshgrid(self.x_axis, self.p_axis, indexing="ij")
        return pd.DataFrame({"x": xx.ravel(), "p": pp.ravel(), "w": self.values.ravel()})

    @classmethod
    def from_frame(cls, frame: pd.DataFrame) -> "WignerGrid":
        x_axis = np.unique(frame["x"].to_numpy())
        p_axis = np.unique(frame["p"].to_numpy())
        ordered = frame.sort_values(["x", "p"])
        values = ordered["w"].to_numpy().reshape(x_axis.size, p_axis.size)
        return cls(x_axis, p_axis, values)


def squeezing_to_db(z: float) -> float:
    return 20.0 * z / LN10


def db_to_squeezing(squeezing_db: float) -> float:
    return LN10 * squeezing_db / 20.0


def _check_same_truncation(a: int, b: int) -> None:
    if a != b:
        raise DimensionMismatchError(f"truncation mismatch: N={a} vs N={b}")


def as_density(state: Union[FockVector, DensityMatrix]) -> DensityMatrix:
    return state.to_density() if isinstance(state, FockVector) else state


# -----------------------------------------------------------------------------
# Operators and states
# -----------------------------------------------------------------------------

def annihilation(N: int) -> np.ndarray:
    return np.diag(np.sqrt(np.arange(1, N + 1, dtype=float)), k=1).astype(complex)


def number_operator(N: int) -> np.ndarray:
    return np.diag(np.arange(N + 1, dtype=float)).astype(complex)


def parity_operator(N: int) -> np.ndarray:
    return np.diag((-1.0) ** np.arange(N + 1)).astype(complex)


def quadrature_operator(N: int, theta: float = 0.0) -> np.ndarray:
    """X_theta = (a e^{-i theta} + a^dagger e^{i theta}) / sqrt(2)."""
    a = annihilation(N)
    return (a * np.exp(-1j * theta) + a.conj().T * np.exp(1j * theta)) / math.sqrt(2.0)


def fock_state(n: int, N: int) -> FockVector:
    if not 0 <= n <= N:
        raise TruncationError(f"Fock level {n} outside basis 0..{N}")
    amps = np.zeros(N + 1, dtype=complex)
    amps[n] = 1.0
    return FockVector(amps)


def coherent_amplitudes(alpha: complex, N: int) -> np.ndarray:
    """Unnormalized-by-truncation coefficients e^{-|a|^2/2} a^n / sqrt(n!)."""
    amps = np.empty(N + 1, dtype=complex)
    amps[0] = math.exp(-abs(alpha) ** 2 / 2.0)
    for n in range(1, N + 1):
        amps[n] = amps[n - 1] * alpha / math.sqrt(n)
    return amps


def coherent_state(alpha: complex, N: int, renormalize: bool = True) -> FockVector:
    if abs(alpha) ** 2 > N / 3.0:
        raise TruncationError(
            f"|alpha|^2 = {abs(alpha) ** 2:.3f} exceeds N/3 = {N / 3.0:.3f}; increase the truncation"
        )
    state = FockVector(coherent_amplitudes(alpha, N))
    return state.normalized() if renormalize else state


@lru_cache(maxsize=512)
def _squeeze_matrix(z: float, N: int) -> np.ndarray:
    a = annihilation(N)
    a2 = a @ a
    generator = 0.5 * (np.conj(z) * a2 - z * a2.conj().T)
    matrix = linalg.expm(generator)
    matrix.setflags(write=False)
    return matrix


def squeeze_operator(z: float, N: int) -> np.ndarray:
    """S(z) = exp(1/2 (z* a^2 - z a^dagger^2)) on the truncated basis."""
    if abs(z) > MAX_SQUEEZING:
        raise TruncationError(f"|z| = {abs(z)} exceeds the truncation-accuracy guard {MAX_SQUEEZING}")
    return _squeeze_matrix(float(z), int(N))


def scss_amplitudes(
    alpha: float,
    z: float,
    parity: Parity,
    N: int,
    working_truncation: Optional[int] = None,
    allow_limit: bool = True,
) -> np.ndarray:
    """Normalized S(z)(|alpha> +/- |-alpha>) truncated to 0..N.

    Built in a working basis of size max(N, working_truncation), squeezed
    there, then truncated and renormalized. With ``allow_limit`` the odd
    alpha -> 0 limit S(z)|1> is used when the superposition vanishes.
    """
    working = max(N, working_truncation or DEFAULT_WORKING_TRUNCATION)
    if alpha ** 2 > working / 3.0:
        raise TruncationError(f"alpha = {alpha} too large for working basis N={working}")
    sign = -1.0 if parity == "odd" else 1.0
    superposition = coherent_amplitudes(alpha, working) + sign * coherent_amplitudes(-alpha, working)
    norm = np.linalg.norm(superposition)
    if norm < 1e-12:
        if not allow_limit:
            raise DegenerateStateError(
                f"{parity} superposition with alpha={alpha} has zero norm"
            )
        superposition = np.zeros(working + 1, dtype=complex)
        superposition[1 if parity == "odd" else 0] = 1.0
        norm = 1.0
    squeezed = squeeze_operator(z, working) @ (superposition / norm)
    truncated = squeezed[: N + 1]
    kept = np.linalg.norm(truncated)
    if kept < 1e-6:
        raise TruncationError(f"target (alpha={alpha}, z={z}) lies outside the basis 0..{N}")
    return truncated / kept


def cat_state(params: ScssParams, N: int, working_truncation: Optional[int] = None) -> FockVector:
    """Normalized S(z)(|alpha> +/- |-alpha>); odd parity uses the minus sign."""
    return FockVector(
        scss_amplitudes(params.alpha, params.z, params.parity, N, working_truncation, allow_limit=False)
    )


# -----------------------------------------------------------------------------
# Fidelity
# -----------------------------------------------------------------------------

def _psd_sqrt(matrix: np.ndarray) -> np.ndarray:
    values, vectors = linalg.eigh(0.5 * (matrix + matrix.conj().T))
    return (vectors * np.sqrt(np.clip(values, 0.0, None))) @ vectors.conj().T


def fidelity(a: Union[DensityMatrix, FockVector], b: Union[DensityMatrix, FockVector]) -> float:
    """Uhlmann fidelity [tr sqrt(sqrt(a) b sqrt(a))]^2."""
    if isinstance(a, FockVector) and isinstance(b, FockVector):
        return float(abs(a.overlap(b)) ** 2)
    if isinstance(a, FockVector) or isinstance(b, FockVector):
        vector, rho = (a, b) if isinstance(a, FockVector) else (b, a)
        _check_same_truncation(vector.truncation, rho.truncation)
        if rho.modes != 1:
            raise DimensionMismatchError("cannot compare a single-mode vector with a two-mode state")
        value = np.vdot(vector.amplitudes, rho.elements @ vector.amplitudes)
        return float(np.clip(np.real(value), 0.0, 1.0))
    if a.modes != b.modes:
        raise DimensionMismatchError(f"mode count mismatch: {a.modes} vs {b.modes}")
    _check_same_truncation(a.truncation, b.truncation)
    sqrt_a = _psd_sqrt(a.elements)
    inner = sqrt_a @ b.elements @ sqrt_a
    eigs = linalg.eigvalsh(0.5 * (inner + inner.conj().T))
    value = float(np.sum(np.sqrt(np.clip(eigs, 0.0, None))) ** 2)
    return min(max(value, 0.0), 1.0)


# -----------------------------------------------------------------------------
# Quadrature wavefunctions, Wigner function, quadrature distributions
# -----------------------------------------------------------------------------

def fock_wavefunctions(N: int, x: Union[float, np.ndarray]) -> np.ndarray:
    """Psi_n(x) for n = 0..N via the three-term Hermite recurrence; shape (N+1, *x.shape)."""
    x = np.asarray(x, dtype=float)
    psi = np.empty((N + 1,) + x.shape)
    psi[0] = math.pi ** -0.25 * np.exp(-x ** 2 / 2.0)
    if N >= 1:
        psi[1] = math.sqrt(2.0) * x * psi[0]
    for n in range(1, N):
        psi[n + 1] = math.sqrt(2.0 / (n + 1)) * x * psi[n] - math.sqrt(n / (n + 1)) * psi[n - 1]
    return psi


def fock_wavefunction(n: int, x: Union[float, np.ndarray]) -> Union[float, np.ndarray]:
    values = fock_wavefunctions(n, x)[n]
    return float(values) if np.ndim(values) == 0 else values


def quadrature_vectors(N: int, x: np.ndarray, theta: Union[float, np.ndarray]) -> np.ndarray:
    """<n|x_theta> = e^{i n theta} Psi_n(x); shape (N+1, len(x)).

    ``theta`` may be a scalar or one phase per x value.
    """
    psi = fock_wavefunctions(N, np.asarray(x, dtype=float))
    theta = np.asarray(theta, dtype=float)
    phases = np.exp(1j * np.multiply.outer(np.arange(N + 1), theta))
    if theta.ndim == 0:
        phases = phases[:, None]
    return psi * phases


def quadrature_pdf(rho: DensityMatrix, theta: float) -> Callable[[np.ndarray], np.ndarray]:
    """x -> pr(x, theta) = sum_mn rho_mn e^{i(n-m)theta} Psi_m(x) Psi_n(x)."""
    if rho.modes != 1:
        raise DimensionMismatchError("quadrature_pdf needs a single-mode state")
    N = rho.truncation
    elements = rho.elements

    def pdf(x):
        scalar = np.ndim(x) == 0
        xs = np.atleast_1d(np.asarray(x, dtype=float))
        vectors = quadrature_vectors(N, xs, theta)
        values = np.real(np.einsum("mx,mn,nx->x", vectors.conj(), elements, vectors))
        return float(values[0]) if scalar else values

    return pdf


def wigner(
    rho: DensityMatrix,
    x_axis: Optional[np.ndarray] = None,
    p_axis: Optional[np.ndarray] = None,
) -> WignerGrid:
    """Wigner function on a grid (default 201 x 201 over [-4, 4]^2).

    Uses the Laguerre-free recurrence over Fock matrix elements, which stays
    stable to high photon numbers.
    """
    if rho.modes != 1:
        raise DimensionMismatchError("wigner needs a single-mode state")
    x_axis = np.linspace(-4.0, 4.0, 201) if x_axis is None else np.asarray(x_axis, dtype=float)
    p_axis = np.linspace(-4.0, 4.0, 201) if p_axis is None else np.asarray(p_axis, dtype=float)

    xx, pp = np.meshgrid(x_axis, p_axis, indexing="ij")
    A = (xx + 1j * pp) / math.sqrt(2.0)
    cutoff = rho.local_dim
    elements = rho.elements

    previous = [None] * cutoff
    previous[0] = np.exp(-2.0 * np.abs(A) ** 2) / math.pi
    W = np.real(elements[0, 0]) * np.real(previous[0])
    for n in range(1, cutoff):
        previous[n] = 2.0 * A * previous[n - 1] / math.sqrt(n)
        W = W + 2.0 * np.real(elements[0, n] * previous[n])

    for m in range(1, cutoff):
        current = [None] * cutoff
        # |m><m| term
        current[m] = (2.0 * np.conj(A) * previous[m] - math.sqrt(m) * previous[m - 1]) / math.sqrt(m)
        W = W + np.real(elements[m, m] * current[m])
        for n in range(m + 1, cutoff):
            # |m><n| term
            current[n] = (2.0 * A * current[n - 1] - math.sqrt(m) * previous[n - 1]) / math.sqrt(n)
            W = W + 2.0 * np.real(elements[m, n] * current[n])
        previous = current

    return WignerGrid(x_axis, p_axis, np.real(W))


def wigner_at_origin(rho: DensityMatrix) -> float:
    """(1/pi) tr(rho Pi), the parity formula for W(0, 0)."""
    return float(np.real(np.trace(rho.elements @ parity_operator(rho.truncation)))) / math.pi


def expectation(rho: DensityMatrix, operator: np.ndarray) -> complex:
    return complex(np.trace(rho.elements @ operator))


def variance(rho: DensityMatrix, operator: np.ndarray) -> float:
    mean = expectation(rho, operator)
    return float(np.real(expectation(rho, operator @ operator) - mean ** 2))
