"""Seeded random state ensembles: Haar pure, Hilbert-Schmidt, and two-qubit products."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .qcore import HermitianBasis

__all__ = [
    "ENSEMBLE_KINDS",
    "EnsembleSpec",
    "sample_haar_pure",
    "sample_hilbert_schmidt",
    "sample_product",
    "sample_state",
    "hilbert_schmidt_thetas",
]

ENSEMBLE_KINDS = (
    "haar-pure",
    "hilbert-schmidt",
    "product-haar-pure",
    "product-hilbert-schmidt",
)


@dataclass(frozen=True)
class EnsembleSpec:
    """Which prior to draw true states from, and in what dimension."""

    kind: str
    dimension: int
    factors: tuple[int, int] | None = None

    def __post_init__(self) -> None:
        if self.kind not in ENSEMBLE_KINDS:
            raise ValueError(f"unknown ensemble kind {self.kind!r}")
        if self.dimension < 2:
            raise ValueError(f"dimension must be >= 2, got {self.dimension}")
        if self.is_product:
            if self.factors is None:
                raise ValueError("product ensembles need factor dimensions")
            d_a, d_b = self.factors
            if d_a < 2 or d_b < 2 or d_a * d_b != self.dimension:
                raise ValueError(
                    f"factors {self.factors} incompatible with dimension {self.dimension}"
                )

    @property
    def is_product(self) -> bool:
        return self.kind.startswith("product-")


def sample_haar_pure(d: int, rng: np.random.Generator, size: int | None = None) -> np.ndarray:
    """Haar-random unit vector(s): normalized complex standard normals."""
    if d < 2:
        raise ValueError(f"dimension must be >= 2, got {d}")
    shape = (d,) if size is None else (size, d)
    v = rng.standard_normal(shape) + 1j * rng.standard_normal(shape)
    return v / np.linalg.norm(v, axis=-1, keepdims=True)


def sample_hilbert_schmidt(d: int, rng: np.random.Generator, size: int | None = None) -> np.ndarray:
    """Hilbert-Schmidt random state(s) G G^dag / Tr(G G^dag) with G square Ginibre."""
    if d < 2:
        raise ValueError(f"dimension must be >= 2, got {d}")
    shape = (d, d) if size is None else (size, d, d)
    g = rng.standard_normal(shape) + 1j * rng.standard_normal(shape)
    rho = g @ g.conj().swapaxes(-1, -2)
    tr = np.trace(rho, axis1=-2, axis2=-1).real
    return rho / tr[..., None, None] if size is not None else rho / tr


def sample_product(
    spec: EnsembleSpec, rng: np.random.Generator
) -> tuple[np.ndarray, tuple[np.ndarray, np.ndarray]]:
    """Independent factor draws and their Kronecker product.

    Returns (rho, (factor_a, factor_b)); pure factors are kept as state
    vectors, mixed factors as density matrices.
    """
    if not spec.is_product:
        raise ValueError(f"{spec.kind!r} is not a product ensemble")
    d_a, d_b = spec.factors
    if spec.kind == "product-haar-pure":
        phi_a = sample_haar_pure(d_a, rng)
        phi_b = sample_haar_pure(d_b, rng)
        phi = np.kron(phi_a, phi_b)
        return np.outer(phi, phi.conj()), (phi_a, phi_b)
    rho_a = sample_hilbert_schmidt(d_a, rng)
    rho_b = sample_hilbert_schmidt(d_b, rng)
    return np.kron(rho_a, rho_b), (rho_a, rho_b)


def sample_state(spec: EnsembleSpec, rng: np.random.Generator) -> np.ndarray:
    """Draw one density matrix from the ensemble."""
    if spec.kind == "haar-pure":
        phi = sample_haar_pure(spec.dimension, rng)
        return np.outer(phi, phi.conj())
    if spec.kind == "hilbert-schmidt":
        return sample_hilbert_schmidt(spec.dimension, rng)
    return sample_product(spec, rng)[0]


def hilbert_schmidt_thetas(
    basis: HermitianBasis, rng: np.random.Generator, size: int
) -> np.ndarray:
    """Batch of Hilbert-Schmidt draws as basis coordinates; used as filter prior."""
    rhos = sample_hilbert_schmidt(basis.dimension, rng, size=size)
    return np.einsum("sab,nba->sn", rhos, basis.elements).real
