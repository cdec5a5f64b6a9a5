"""Self-guided measurement design by simultaneous-perturbation stochastic ascent.

The designer keeps a pure-state iterate, measures the projectors onto two
perturbed copies of it each iteration, and moves the iterate along the
random perturbation direction scaled by the observed frequency difference.
The iterate doubles as the designer's own state estimate.
"""

from __future__ import annotations

from dataclasses import dataclass, replace
from typing import Callable

import numpy as np

from .errors import DegeneratePerturbationError
from .qcore import HermitianBasis, MeasurementRecord, pure_state_coords
from .ensembles import sample_haar_pure

__all__ = [
    "SpsaSchedule",
    "GUARANTEED_SCHEDULE",
    "SgqtState",
    "initial_state",
    "initial_product_state",
    "random_direction",
    "perturbed_projectors",
    "gradient_estimate",
    "spsa_step",
    "product_spsa_step",
    "step",
]

# An outcome source maps (projector coordinates, shot count) to a success count.
OutcomeSource = Callable[[np.ndarray, int], float]

_MAX_REDRAWS = 10


@dataclass(frozen=True)
class SpsaSchedule:
    """Gain sequences eps_k = eps_scale / k^eps_exponent, alpha_k likewise."""

    eps_scale: float = 0.1
    eps_exponent: float = 0.101
    alpha_scale: float = 10.0
    alpha_exponent: float = 0.602

    def __post_init__(self) -> None:
        for name in ("eps_scale", "eps_exponent", "alpha_scale", "alpha_exponent"):
            if getattr(self, name) <= 0:
                raise ValueError(f"{name} must be positive")

    def eps(self, k: int) -> float:
        return self.eps_scale / k**self.eps_exponent

    def alpha(self, k: int) -> float:
        return self.alpha_scale / k**self.alpha_exponent


# Exponents with a formal convergence guarantee; slower in practice than the default.
GUARANTEED_SCHEDULE = SpsaSchedule(
    eps_scale=1.0, eps_exponent=1.0 / 3.0, alpha_scale=1.0, alpha_exponent=1.0
)

# Gain scale used when measurements are restricted to two-factor products.
PRODUCT_ALPHA_SCALE = 31.0


@dataclass(frozen=True)
class SgqtState:
    """Designer state: the current pure iterate, iteration counter, and gains.

    ``factors`` is None in full mode; in product mode it holds the two
    factor vectors and ``iterate`` is their Kronecker product.
    """

    iterate: np.ndarray
    k: int
    schedule: SpsaSchedule
    shots: int
    factors: tuple[np.ndarray, np.ndarray] | None = None

    @property
    def mode(self) -> str:
        return "full" if self.factors is None else "product"

    def estimate_coords(self, basis: HermitianBasis) -> np.ndarray:
        """Basis coordinates of the iterate's projector (the designer's estimate)."""
        return pure_state_coords(self.iterate, basis)

    def estimate_matrix(self) -> np.ndarray:
        """The iterate's projector as a density matrix."""
        return np.outer(self.iterate, self.iterate.conj())


def initial_state(
    d: int, schedule: SpsaSchedule, shots: int, rng: np.random.Generator
) -> SgqtState:
    """Full-space designer started from a Haar-random pure iterate."""
    return SgqtState(iterate=sample_haar_pure(d, rng), k=1, schedule=schedule, shots=shots)


def initial_product_state(
    dims: tuple[int, int], schedule: SpsaSchedule, shots: int, rng: np.random.Generator
) -> SgqtState:
    """Product-restricted designer with independent Haar-random factors."""
    phi_a = sample_haar_pure(dims[0], rng)
    phi_b = sample_haar_pure(dims[1], rng)
    return SgqtState(
        iterate=np.kron(phi_a, phi_b),
        k=1,
        schedule=schedule,
        shots=shots,
        factors=(phi_a, phi_b),
    )


def random_direction(dim_real: int, rng: np.random.Generator) -> np.ndarray:
    """Perturbation direction with independent +-1 entries."""
    return rng.integers(0, 2, size=dim_real).astype(float) * 2.0 - 1.0


def _as_complex(vec: np.ndarray) -> np.ndarray:
    """Reinterpret a length-2d real vector as d complex amplitudes."""
    half = vec.shape[0] // 2
    return vec[:half] + 1j * vec[half:]


def _normalized(v: np.ndarray) -> np.ndarray:
    norm = np.linalg.norm(v)
    if norm < 1e-14:
        raise DegeneratePerturbationError("perturbed vector has vanishing norm")
    return v / norm


def perturbed_projectors(
    phi: np.ndarray, delta: np.ndarray, eps: float, basis: HermitianBasis
) -> tuple[np.ndarray, np.ndarray]:
    """Coordinates of the projectors onto normalize(phi +- eps * delta).

    ``delta`` is real of length 2d; its halves perturb the real and
    imaginary parts of the amplitudes.
    """
    if eps < 0:
        raise ValueError(f"eps must be nonnegative, got {eps}")
    dc = _as_complex(np.asarray(delta, dtype=float))
    plus = pure_state_coords(_normalized(phi + eps * dc), basis)
    minus = pure_state_coords(_normalized(phi - eps * dc), basis)
    return plus, minus


def gradient_estimate(
    f_plus: float, f_minus: float, eps: float, delta: np.ndarray
) -> np.ndarray:
    """Simultaneous-perturbation estimate (f_plus - f_minus) / (2 eps) * delta."""
    if eps <= 0:
        raise ValueError(f"eps must be positive, got {eps}")
    return (f_plus - f_minus) / (2.0 * eps) * np.asarray(delta, dtype=float)


def spsa_step(
    state: SgqtState, outcome_source: OutcomeSource, rng: np.random.Generator
) -> tuple[SgqtState, tuple[MeasurementRecord, MeasurementRecord]]:
    """One full-space iteration: measure both perturbed projectors, move the iterate.

    One direction is shared by the + and - measurements.  The direction is
    redrawn (at most 10 times) if a perturbation collapses to zero.
    """
    phi = state.iterate
    eps = state.schedule.eps(state.k)
    alpha = state.schedule.alpha(state.k)
    basis = _basis_for(state)
    dim_real = 2 * phi.shape[0]

    for _ in range(_MAX_REDRAWS):
        delta = random_direction(dim_real, rng)
        try:
            p_plus, p_minus = perturbed_projectors(phi, delta, eps, basis)
        except DegeneratePerturbationError:
            continue
        break
    else:
        raise DegeneratePerturbationError("no usable perturbation direction in 10 draws")

    n_plus = outcome_source(p_plus, state.shots)
    n_minus = outcome_source(p_minus, state.shots)
    f_plus = n_plus / state.shots
    f_minus = n_minus / state.shots
    grad = gradient_estimate(f_plus, f_minus, eps, delta)
    new_iterate = _normalized(phi + _as_complex(alpha * grad))
    records = (
        MeasurementRecord(coords=p_plus, shots=state.shots, successes=n_plus),
        MeasurementRecord(coords=p_minus, shots=state.shots, successes=n_minus),
    )
    return replace(state, iterate=new_iterate, k=state.k + 1), records


def product_spsa_step(
    state: SgqtState, outcome_source: OutcomeSource, rng: np.random.Generator
) -> tuple[SgqtState, tuple[MeasurementRecord, MeasurementRecord]]:
    """One product-restricted iteration: a single direction spans both factors."""
    if state.factors is None:
        raise ValueError("state is not in product mode")
    phi_a, phi_b = state.factors
    d_a, d_b = phi_a.shape[0], phi_b.shape[0]
    eps = state.schedule.eps(state.k)
    alpha = state.schedule.alpha(state.k)
    basis = _basis_for(state)

    for _ in range(_MAX_REDRAWS):
        delta = random_direction(2 * d_a + 2 * d_b, rng)
        delta_a = _as_complex(delta[: 2 * d_a])
        delta_b = _as_complex(delta[2 * d_a :])
        try:
            sides = {
                sign: (
                    _normalized(phi_a + sign * eps * delta_a),
                    _normalized(phi_b + sign * eps * delta_b),
                )
                for sign in (1.0, -1.0)
            }
        except DegeneratePerturbationError:
            continue
        break
    else:
        raise DegeneratePerturbationError("no usable perturbation direction in 10 draws")

    coords = {
        sign: pure_state_coords(np.kron(va, vb), basis) for sign, (va, vb) in sides.items()
    }
    counts = {sign: outcome_source(coords[sign], state.shots) for sign in (1.0, -1.0)}
    grad = gradient_estimate(
        counts[1.0] / state.shots, counts[-1.0] / state.shots, eps, delta
    )
    step_vec = alpha * grad
    new_a = _normalized(phi_a + _as_complex(step_vec[: 2 * d_a]))
    new_b = _normalized(phi_b + _as_complex(step_vec[2 * d_a :]))
    records = (
        MeasurementRecord(coords=coords[1.0], shots=state.shots, successes=counts[1.0]),
        MeasurementRecord(coords=coords[-1.0], shots=state.shots, successes=counts[-1.0]),
    )
    new_state = replace(
        state, iterate=np.kron(new_a, new_b), k=state.k + 1, factors=(new_a, new_b)
    )
    return new_state, records


def step(
    state: SgqtState, outcome_source: OutcomeSource, rng: np.random.Generator
) -> tuple[SgqtState, tuple[MeasurementRecord, MeasurementRecord]]:
    """Dispatch on the designer mode."""
    if state.factors is None:
        return spsa_step(state, outcome_source, rng)
    return product_spsa_step(state, outcome_source, rng)


def _basis_for(state: SgqtState) -> HermitianBasis:
    from .qcore import default_basis

    return default_basis(state.iterate.shape[0])
