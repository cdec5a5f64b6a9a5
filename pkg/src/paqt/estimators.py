"""State estimation from measurement records.

Linear least squares, variance-weighted least squares with hedged
frequencies, and a sequential Monte Carlo filter with Liu-West
resampling whose posterior mean is the Bayesian estimate.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace
from typing import Callable, Sequence

import numpy as np

from .errors import (
    FilterCollapseError,
    NotInformationallyCompleteError,
    NumericalDegeneracyError,
)
from .qcore import (
    HermitianBasis,
    MeasurementRecord,
    from_theta,
    project_to_physical,
    theta_min_eigenvalues,
    to_theta,
)

__all__ = [
    "DesignSystem",
    "ParticleCloud",
    "build_design",
    "lsf_estimate",
    "wlsf_estimate",
    "pf_init",
    "pf_update",
    "pf_ess",
    "pf_bme",
    "pf_covariance",
    "liu_west_resample",
    "systematic_resample",
]

# Per-particle outcome probabilities are clamped away from {0, 1} so a single
# contradictory record cannot zero the whole cloud.
_PROB_FLOOR = 1e-12
_LOG_UNDERFLOW = math.log(1e-300)
_PHYSICAL_TOL = -1e-10
_REJECT_ROUNDS = 1000


@dataclass(frozen=True)
class DesignSystem:
    """Stacked linear system: rows of projector coordinates, offset frequencies, shots."""

    matrix: np.ndarray  # (K, d^2 - 1)
    offsets: np.ndarray  # (K,), empirical frequency minus 1/d
    shots: np.ndarray  # (K,)

    @property
    def dimension(self) -> int:
        # column count is d^2 - 1 by construction
        return int(round(math.sqrt(self.matrix.shape[1] + 1)))


def build_design(records: Sequence[MeasurementRecord], d: int) -> DesignSystem:
    """Assemble the design system Y = X theta from measurement records."""
    if len(records) == 0:
        raise ValueError("cannot build a design system from zero records")
    shots = np.array([r.shots for r in records])
    if np.any(shots < 1):
        raise ValueError("every record needs at least one shot")
    matrix = np.stack([np.asarray(r.coords, dtype=float) for r in records])
    freqs = np.array([r.successes for r in records], dtype=float) / shots
    return DesignSystem(matrix=matrix, offsets=freqs - 1.0 / d, shots=shots)


def _solve(matrix: np.ndarray, rhs: np.ndarray) -> np.ndarray:
    # SVD-backed solver; never forms (X^T X)^{-1}.
    theta, _, rank, _ = np.linalg.lstsq(matrix, rhs, rcond=None)
    if rank < matrix.shape[1]:
        raise NotInformationallyCompleteError(
            f"design matrix rank {rank} < {matrix.shape[1]}; measurements do not span the state space"
        )
    return theta


def lsf_estimate(system: DesignSystem, basis: HermitianBasis) -> np.ndarray:
    """Unweighted least squares, projected onto the physical states."""
    theta = _solve(system.matrix, system.offsets)
    return project_to_physical(from_theta(theta, basis))


def wlsf_estimate(
    system: DesignSystem, basis: HermitianBasis, hedge_y: bool = False
) -> np.ndarray:
    """Variance-weighted least squares with hedged binomial variances.

    Row k is scaled by sqrt(N_k / (f_k (1 - f_k))) where f_k is the hedged
    frequency (n_k + 0.5) / (N_k + 1), which keeps the weight finite at
    empirical frequencies of 0 or 1.  The right-hand side keeps the raw
    frequencies unless ``hedge_y`` is set.
    """
    d = system.dimension
    freqs = system.offsets + 1.0 / d
    hedged = (freqs * system.shots + 0.5) / (system.shots + 1.0)
    weights = np.sqrt(system.shots / (hedged * (1.0 - hedged)))
    rhs = (hedged - 1.0 / d) if hedge_y else system.offsets
    theta = _solve(system.matrix * weights[:, None], rhs * weights)
    return project_to_physical(from_theta(theta, basis))


@dataclass(frozen=True)
class ParticleCloud:
    """Weighted particles over basis coordinates, approximating a posterior.

    ``ess_floor_seen`` tracks the smallest effective sample size observed
    over the cloud's whole history, before any resampling repaired it.
    """

    locations: np.ndarray  # (n_p, d^2 - 1)
    weights: np.ndarray  # (n_p,)
    resample_a: float
    resample_threshold: float
    ess_floor_seen: float

    @property
    def size(self) -> int:
        return self.locations.shape[0]


def pf_init(
    prior_sampler: Callable[[np.random.Generator, int], np.ndarray],
    n_particles: int,
    resample_a: float,
    resample_threshold: float,
    rng: np.random.Generator,
) -> ParticleCloud:
    """Uniformly weighted particles drawn i.i.d. from the prior."""
    if n_particles < 2:
        raise ValueError(f"need at least 2 particles, got {n_particles}")
    if not 0.0 <= resample_a <= 1.0:
        raise ValueError(f"resample parameter a={resample_a} outside [0, 1]")
    if not 0.0 < resample_threshold <= 1.0:
        raise ValueError(f"resample threshold {resample_threshold} outside (0, 1]")
    locations = np.asarray(prior_sampler(rng, n_particles), dtype=float)
    weights = np.full(n_particles, 1.0 / n_particles)
    return ParticleCloud(
        locations=locations,
        weights=weights,
        resample_a=resample_a,
        resample_threshold=resample_threshold,
        ess_floor_seen=float(n_particles),
    )


def pf_ess(cloud: ParticleCloud) -> float:
    """Effective sample size 1 / sum(w_i^2)."""
    return 1.0 / float(cloud.weights @ cloud.weights)


def pf_update(
    cloud: ParticleCloud,
    record: MeasurementRecord,
    d: int,
    basis: HermitianBasis,
    rng: np.random.Generator,
) -> ParticleCloud:
    """Bayes update of the weights by the binomial likelihood of one record.

    The binomial coefficient is constant across particles and omitted.
    Likelihoods are accumulated in log space, which changes nothing after
    normalization but avoids spurious underflow at high shot counts.
    Resampling is triggered when the effective sample size falls below
    the threshold fraction of the cloud size.
    """
    if record.shots == 0:
        return cloud
    probs = 1.0 / d + cloud.locations @ np.asarray(record.coords, dtype=float)
    np.clip(probs, _PROB_FLOOR, 1.0 - _PROB_FLOOR, out=probs)
    loglik = record.successes * np.log(probs)
    loglik += (record.shots - record.successes) * np.log1p(-probs)
    peak = loglik.max()
    if peak < _LOG_UNDERFLOW:
        raise FilterCollapseError("all particle likelihoods below 1e-300")
    weights = cloud.weights * np.exp(loglik - peak)
    total = weights.sum()
    if not np.isfinite(total) or total <= 0.0:
        raise FilterCollapseError("posterior weight mass vanished")
    weights = weights / total
    ess = 1.0 / float(weights @ weights)
    updated = replace(
        cloud, weights=weights, ess_floor_seen=min(cloud.ess_floor_seen, ess)
    )
    if ess < cloud.resample_threshold * cloud.size:
        return liu_west_resample(updated, basis, rng)
    return updated


def pf_bme(cloud: ParticleCloud, basis: HermitianBasis) -> np.ndarray:
    """Posterior-mean state; convex combination of physical states, so physical."""
    return from_theta(cloud.weights @ cloud.locations, basis)


def pf_covariance(cloud: ParticleCloud) -> np.ndarray:
    """Weighted posterior covariance of the particle coordinates."""
    if cloud.size < 2:
        raise ValueError("covariance needs at least 2 particles")
    mean = cloud.weights @ cloud.locations
    centered = cloud.locations - mean
    cov = centered.T @ (centered * cloud.weights[:, None])
    return 0.5 * (cov + cov.T)


def systematic_resample(weights: np.ndarray, rng: np.random.Generator) -> np.ndarray:
    """Ancestor indices from one uniform draw and an even comb over the CDF."""
    n = weights.shape[0]
    positions = (np.arange(n) + rng.random()) / n
    cumulative = np.cumsum(weights)
    cumulative[-1] = 1.0  # guard rounding in the final bin
    return np.minimum(np.searchsorted(cumulative, positions, side="right"), n - 1)


def liu_west_resample(
    cloud: ParticleCloud, basis: HermitianBasis, rng: np.random.Generator
) -> ParticleCloud:
    """Resample by shrinking toward the mean and adding matched Gaussian noise.

    New locations are a * theta_ancestor + (1 - a) * mean plus noise of
    covariance (1 - a^2) * cov, preserving the posterior mean and
    covariance in expectation.  Unphysical proposals are redrawn up to
    1000 times, then projected onto the physical set as a last resort.
    """
    mean = cloud.weights @ cloud.locations
    cov = pf_covariance(cloud)
    eigvals, eigvecs = np.linalg.eigh(cov)
    if eigvals[0] < -1e-10 * max(1.0, abs(eigvals[-1])):
        raise NumericalDegeneracyError(
            f"posterior covariance indefinite (min eigenvalue {eigvals[0]})"
        )
    ancestors = systematic_resample(cloud.weights, rng)
    a = cloud.resample_a
    if a == 1.0:
        locations = cloud.locations[ancestors].copy()
    else:
        root = eigvecs * np.sqrt(np.clip(eigvals, 0.0, None))
        noise_scale = math.sqrt(1.0 - a * a)
        centers = a * cloud.locations[ancestors] + (1.0 - a) * mean
        locations = centers + noise_scale * (
            rng.standard_normal(centers.shape) @ root.T
        )
        pending = np.flatnonzero(theta_min_eigenvalues(locations, basis) < _PHYSICAL_TOL)
        for _ in range(_REJECT_ROUNDS):
            if pending.size == 0:
                break
            redraw = centers[pending] + noise_scale * (
                rng.standard_normal((pending.size, centers.shape[1])) @ root.T
            )
            locations[pending] = redraw
            still_bad = theta_min_eigenvalues(redraw, basis) < _PHYSICAL_TOL
            pending = pending[still_bad]
        for idx in pending:
            projected = project_to_physical(from_theta(locations[idx], basis))
            locations[idx] = to_theta(projected, basis)
    weights = np.full(cloud.size, 1.0 / cloud.size)
    return replace(cloud, locations=locations, weights=weights)
