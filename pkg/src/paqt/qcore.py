"""Finite-dimensional quantum linear algebra.

Traceless Hermitian operator basis, state/coordinate conversions, the
two-outcome Born rule in coordinate form, fidelity and trace-distance
metrics, projection of indefinite matrices onto the state space, and
binomial shot sampling. Everything here is pure given its inputs.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from .errors import DegenerateInputError, InconsistentInputsError

__all__ = [
    "HermitianBasis",
    "MeasurementRecord",
    "build_basis",
    "default_basis",
    "to_theta",
    "from_theta",
    "from_theta_batch",
    "theta_min_eigenvalues",
    "pure_state_coords",
    "born_probability",
    "fidelity",
    "trace_distance",
    "project_to_physical",
    "sample_shots",
    "is_density_matrix",
]


@dataclass(frozen=True)
class HermitianBasis:
    """Orthonormal basis {B_j} of traceless Hermitian d x d operators.

    Normalized so that Tr(B_j B_k) = delta_jk.  The ordering is fixed and
    stable: the symmetric pair matrices for indices j < k in row-major
    order, then the antisymmetric pairs in the same order, then the d - 1
    diagonal matrices.  At d = 2 this is the Pauli basis scaled by
    1/sqrt(2).
    """

    dimension: int
    elements: np.ndarray  # shape (d^2 - 1, d, d), complex

    def __len__(self) -> int:
        return self.elements.shape[0]


@dataclass(frozen=True)
class MeasurementRecord:
    """One two-outcome test {P, I - P}: basis coordinates of P, shots, successes.

    ``coords`` are the coefficients p of P = I/d + sum_j p_j B_j.  For a
    simulated record ``successes`` is an integer count in [0, shots];
    noiseless oracles may supply a fractional value.
    """

    coords: np.ndarray
    shots: int
    successes: float

    def frequency(self) -> float:
        return self.successes / self.shots


def build_basis(d: int) -> HermitianBasis:
    """Generalized Gell-Mann matrices scaled by 1/sqrt(2) so Tr(B_j B_k) = delta_jk."""
    if d < 2:
        raise ValueError(f"basis dimension must be >= 2, got {d}")
    mats = []
    for j in range(d):
        for k in range(j + 1, d):
            m = np.zeros((d, d), dtype=complex)
            m[j, k] = 1.0
            m[k, j] = 1.0
            mats.append(m)
    for j in range(d):
        for k in range(j + 1, d):
            m = np.zeros((d, d), dtype=complex)
            m[j, k] = -1.0j
            m[k, j] = 1.0j
            mats.append(m)
    for level in range(1, d):
        m = np.zeros((d, d), dtype=complex)
        scale = math.sqrt(2.0 / (level * (level + 1)))
        for i in range(level):
            m[i, i] = scale
        m[level, level] = -level * scale
        mats.append(m)
    elements = np.stack(mats) / math.sqrt(2.0)
    elements.setflags(write=False)
    return HermitianBasis(dimension=d, elements=elements)


@lru_cache(maxsize=None)
def default_basis(d: int) -> HermitianBasis:
    """Shared immutable basis instance for dimension ``d``."""
    return build_basis(d)


def to_theta(rho: np.ndarray, basis: HermitianBasis) -> np.ndarray:
    """Coordinates theta_j = Tr(rho B_j) of the traceless part of ``rho``."""
    rho = np.asarray(rho)
    d = basis.dimension
    if rho.shape != (d, d):
        raise ValueError(f"matrix shape {rho.shape} does not match basis dimension {d}")
    return np.einsum("ab,nba->n", rho, basis.elements).real


def from_theta(theta: np.ndarray, basis: HermitianBasis) -> np.ndarray:
    """I/d + sum_j theta_j B_j.  Hermitian and unit trace; may be indefinite."""
    theta = np.asarray(theta, dtype=float)
    d = basis.dimension
    if theta.shape != (len(basis),):
        raise ValueError(f"theta length {theta.shape} does not match basis size {len(basis)}")
    return np.eye(d, dtype=complex) / d + np.tensordot(theta, basis.elements, axes=1)


def from_theta_batch(thetas: np.ndarray, basis: HermitianBasis) -> np.ndarray:
    """Vectorized ``from_theta`` for an (n, d^2 - 1) coordinate array."""
    thetas = np.asarray(thetas, dtype=float)
    d = basis.dimension
    return np.eye(d, dtype=complex) / d + np.tensordot(thetas, basis.elements, axes=1)


def theta_min_eigenvalues(thetas: np.ndarray, basis: HermitianBasis) -> np.ndarray:
    """Smallest eigenvalue of each reconstructed matrix in a coordinate batch."""
    rhos = from_theta_batch(np.atleast_2d(thetas), basis)
    return np.linalg.eigvalsh(rhos)[..., 0]


def pure_state_coords(phi: np.ndarray, basis: HermitianBasis) -> np.ndarray:
    """Basis coordinates of the rank-1 projector |phi><phi| for a unit vector phi."""
    phi = np.asarray(phi, dtype=complex)
    return np.einsum("a,nab,b->n", phi.conj(), basis.elements, phi).real


def born_probability(theta: np.ndarray, p: np.ndarray, d: int) -> float:
    """Outcome-1 probability 1/d + p . theta of the test encoded by ``p``.

    Values within 1e-9 of the [0, 1] boundary are clamped; anything
    further out means the inputs were not a physical state and projector
    pair, which is an error.
    """
    theta = np.asarray(theta, dtype=float)
    p = np.asarray(p, dtype=float)
    if theta.shape != p.shape:
        raise ValueError(f"coordinate lengths differ: {theta.shape} vs {p.shape}")
    value = 1.0 / d + float(p @ theta)
    if value < -1e-9 or value > 1.0 + 1e-9:
        raise InconsistentInputsError(
            f"Born probability {value} outside [0, 1]; state or projector coordinates invalid"
        )
    return min(max(value, 0.0), 1.0)


def _check_physical(rho: np.ndarray, name: str) -> None:
    if np.linalg.eigvalsh(rho)[0] < -1e-8:
        raise ValueError(f"{name} has a negative eigenvalue below -1e-8; not a physical state")


def fidelity(rho: np.ndarray, sigma: np.ndarray) -> float:
    """Uhlmann fidelity (Tr sqrt(sqrt(rho) sigma sqrt(rho)))^2 in [0, 1].

    Reduces to <phi|rho|phi> when sigma is the pure projector |phi><phi|.
    """
    rho = np.asarray(rho)
    sigma = np.asarray(sigma)
    if rho.shape != sigma.shape:
        raise ValueError(f"dimension mismatch: {rho.shape} vs {sigma.shape}")
    _check_physical(rho, "rho")
    _check_physical(sigma, "sigma")
    # Tr sqrt(sqrt(rho) sigma sqrt(rho)) equals the trace norm of
    # sqrt(sigma) sqrt(rho); the singular-value form avoids the
    # precision loss of rooting near-zero eigenvalues.
    value = float(np.linalg.svd(_matrix_sqrt(sigma) @ _matrix_sqrt(rho), compute_uv=False).sum() ** 2)
    return min(max(value, 0.0), 1.0)


def _matrix_sqrt(rho: np.ndarray) -> np.ndarray:
    w, v = np.linalg.eigh(rho)
    # eigenvalues at solver-noise level are exact zeros of the input;
    # rooting them would inject sqrt(eps)-scale rank
    w[w < w[-1] * rho.shape[0] * np.finfo(float).eps] = 0.0
    return (v * np.sqrt(w)) @ v.conj().T


def trace_distance(rho: np.ndarray, sigma: np.ndarray) -> float:
    """Half the trace norm of rho - sigma, from its singular values."""
    rho = np.asarray(rho)
    sigma = np.asarray(sigma)
    if rho.shape != sigma.shape:
        raise ValueError(f"dimension mismatch: {rho.shape} vs {sigma.shape}")
    s = np.linalg.svd(rho - sigma, compute_uv=False)
    return min(max(0.5 * float(s.sum()), 0.0), 1.0)


def project_to_physical(matrix: np.ndarray) -> np.ndarray:
    """Nearest state by eigenvalue truncation: zero negatives, renormalize trace."""
    matrix = np.asarray(matrix)
    if not np.allclose(matrix, matrix.conj().T, atol=1e-10):
        raise ValueError("input matrix is not Hermitian")
    w, v = np.linalg.eigh(matrix)
    w = np.clip(w, 0.0, None)
    total = w.sum()
    if total <= 0.0:
        raise DegenerateInputError("matrix has no positive spectral part")
    w /= total
    return (v * w) @ v.conj().T


def sample_shots(prob: float, shots: int, rng: np.random.Generator) -> int:
    """Binomial(shots, prob) draw; deterministic for a seeded generator."""
    if not 0.0 <= prob <= 1.0:
        raise ValueError(f"probability {prob} outside [0, 1]")
    if shots < 0:
        raise ValueError(f"shot count must be nonnegative, got {shots}")
    return int(rng.binomial(shots, prob))


def is_density_matrix(rho: np.ndarray, atol: float = 1e-10) -> bool:
    """Hermitian, unit trace and positive semidefinite within ``atol``."""
    rho = np.asarray(rho)
    if rho.ndim != 2 or rho.shape[0] != rho.shape[1]:
        return False
    if not np.allclose(rho, rho.conj().T, atol=atol):
        return False
    if abs(np.trace(rho).real - 1.0) > atol:
        return False
    return bool(np.linalg.eigvalsh(rho)[0] >= -atol)
