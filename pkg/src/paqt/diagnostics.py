"""Loss metrics, design conditioning, closest-pure distinguishability, postselection."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .qcore import (
    HermitianBasis,
    default_basis,
    fidelity,
    from_theta,
    to_theta,
    trace_distance,
)

__all__ = [
    "LossReport",
    "loss_report",
    "quadratic_loss",
    "condition_number",
    "closest_pure_distance",
    "postselect",
]


@dataclass(frozen=True)
class LossReport:
    """Losses of one estimate against the hidden truth at one checkpoint."""

    estimator: str
    iteration: int
    cumulative_shots: int
    infidelity: float
    quadratic_loss: float
    trace_distance: float


def quadratic_loss(theta_true: np.ndarray, theta_hat: np.ndarray) -> float:
    """Squared Euclidean distance between coordinate vectors."""
    theta_true = np.asarray(theta_true, dtype=float)
    theta_hat = np.asarray(theta_hat, dtype=float)
    if theta_true.shape != theta_hat.shape:
        raise ValueError(f"length mismatch: {theta_true.shape} vs {theta_hat.shape}")
    diff = theta_true - theta_hat
    return float(diff @ diff)


def loss_report(
    estimator: str,
    iteration: int,
    cumulative_shots: int,
    rho_true: np.ndarray,
    theta_true: np.ndarray,
    rho_hat: np.ndarray,
    basis: HermitianBasis,
) -> LossReport:
    """Evaluate infidelity, quadratic loss and trace distance of an estimate."""
    return LossReport(
        estimator=estimator,
        iteration=iteration,
        cumulative_shots=cumulative_shots,
        infidelity=1.0 - fidelity(rho_true, rho_hat),
        quadratic_loss=quadratic_loss(theta_true, to_theta(rho_hat, basis)),
        trace_distance=trace_distance(rho_true, rho_hat),
    )


def condition_number(matrix: np.ndarray) -> float:
    """Ratio of the largest to the smallest design singular value.

    The smallest means the last of the d^2 - 1 column-space singular
    values.  Returns inf when the smallest falls below 1e-14 of the
    largest (numerically rank deficient).
    """
    matrix = np.asarray(matrix, dtype=float)
    rows, cols = matrix.shape
    if rows < cols:
        raise ValueError(f"need at least {cols} rows, got {rows}")
    s = np.linalg.svd(matrix, compute_uv=False)
    if s[-1] < 1e-14 * s[0]:
        return math.inf
    return float(s[0] / s[-1])


def closest_pure_distance(rho: np.ndarray) -> float:
    """Smallest trace distance from a qubit state to any pure state.

    The minimizer lies along the state's own Bloch direction at unit
    radius, giving (1 - r) / 2 for Bloch radius r; for the maximally
    mixed state every pure state is equally distant.
    """
    rho = np.asarray(rho)
    if rho.shape != (2, 2):
        raise ValueError("closest-pure distance is only defined here for qubits")
    basis = default_basis(2)
    theta = to_theta(rho, basis)
    radius = float(np.linalg.norm(theta))
    if radius < 1e-15:
        return 0.5
    theta_pure = theta / (radius * math.sqrt(2.0))
    return trace_distance(rho, from_theta(theta_pure, basis))


def postselect(trials: Sequence, threshold: float) -> tuple[list, float]:
    """Trials whose lowest observed effective sample size stayed at or above a threshold.

    Returns the accepted subset and the acceptance probability.  Each
    trial must carry an ``ess_floor_seen`` attribute.
    """
    floors = []
    for trial in trials:
        floor = getattr(trial, "ess_floor_seen", None)
        if floor is None:
            raise ValueError("trial carries no effective-sample-size floor")
        floors.append(float(floor))
    accepted = [t for t, f in zip(trials, floors) if f >= threshold]
    probability = len(accepted) / len(trials) if trials else 1.0
    return accepted, probability
