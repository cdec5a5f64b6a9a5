"""Batch experiment runner.

Wires an ensemble draw through the self-guided designer, simulated
measurement outcomes, and the configured estimators, then aggregates
losses across trials and serializes everything to CSV/JSON.  A run is
fully determined by its config and master seed: trial i uses a generator
seeded by (seed, i), so results are identical for any worker count.
"""

from __future__ import annotations

import csv
import hashlib
import json
import math
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass
from functools import partial
from pathlib import Path

import numpy as np

from . import __version__
from .diagnostics import LossReport, closest_pure_distance, condition_number, loss_report
from .ensembles import ENSEMBLE_KINDS, EnsembleSpec, hilbert_schmidt_thetas, sample_state
from .errors import ConfigError, FilterCollapseError, PaqtError
from .estimators import (
    DesignSystem,
    lsf_estimate,
    pf_bme,
    pf_ess,
    pf_init,
    pf_update,
    wlsf_estimate,
)
from .qcore import born_probability, default_basis, sample_shots, to_theta
from .sgqt import SpsaSchedule, initial_product_state, initial_state, step

__all__ = [
    "ESTIMATOR_NAMES",
    "RAW_COLUMNS",
    "AGGREGATE_COLUMNS",
    "RunConfig",
    "CheckpointRow",
    "TrialLog",
    "AggregateRow",
    "RunResult",
    "run_trial",
    "run",
    "trial_rows",
    "aggregate",
    "aggregate_from_rows",
    "emit",
    "read_raw_csv",
    "read_aggregates_csv",
    "read_sidecar",
    "postselect_table",
]

ESTIMATOR_NAMES = ("sgqt", "lsf", "wlsf", "bme")

RAW_COLUMNS = (
    "config_hash",
    "trial",
    "k",
    "shots",
    "estimator",
    "infidelity",
    "quadratic_loss",
    "trace_distance",
    "ess",
    "cond_number",
)

AGGREGATE_COLUMNS = (
    "config_hash",
    "k",
    "shots",
    "estimator",
    "metric",
    "count",
    "mean",
    "median",
    "q16",
    "q84",
)

# Per-checkpoint diagnostics that belong to the run, not to one estimator;
# they appear under this pseudo-estimator label in the aggregates table.
RUN_LEVEL_LABEL = "run"
RUN_LEVEL_METRICS = ("ess", "cond_number")
LOSS_METRICS = ("infidelity", "quadratic_loss", "trace_distance")


@dataclass(frozen=True)
class RunConfig:
    """Everything that determines one batch of simulated tomography trials."""

    dimension: int
    ensemble: str
    iterations: int
    shots_per_measurement: int
    estimators: tuple[str, ...]
    trials: int
    seed: int
    particles: int = 4000
    resample_a: float = 0.98
    resample_threshold: float = 0.5
    eps_scale: float = 0.1
    eps_exponent: float = 0.101
    alpha_scale: float = 10.0
    alpha_exponent: float = 0.602
    measurement_mode: str = "full"
    product_dims: tuple[int, int] | None = None
    checkpoint_stride: int | None = None
    checkpoints_per_decade: int = 10
    hedge_y: bool = False

    def __post_init__(self) -> None:
        if self.dimension < 2:
            raise ConfigError(f"dimension must be >= 2, got {self.dimension}")
        if self.ensemble not in ENSEMBLE_KINDS:
            raise ConfigError(f"unknown ensemble {self.ensemble!r}")
        for name in ("iterations", "shots_per_measurement", "trials"):
            if getattr(self, name) < 1:
                raise ConfigError(f"{name} must be >= 1")
        if not self.estimators:
            raise ConfigError("estimator set must be nonempty")
        unknown = set(self.estimators) - set(ESTIMATOR_NAMES)
        if unknown:
            raise ConfigError(f"unknown estimators {sorted(unknown)}")
        if self.particles < 2:
            raise ConfigError("particles must be >= 2")
        if not 0.0 <= self.resample_a <= 1.0:
            raise ConfigError("resample_a must lie in [0, 1]")
        if not 0.0 < self.resample_threshold <= 1.0:
            raise ConfigError("resample_threshold must lie in (0, 1]")
        for name in ("eps_scale", "eps_exponent", "alpha_scale", "alpha_exponent"):
            if getattr(self, name) <= 0:
                raise ConfigError(f"{name} must be positive")
        if self.measurement_mode not in ("full", "product"):
            raise ConfigError(f"unknown measurement mode {self.measurement_mode!r}")
        needs_factors = self.measurement_mode == "product" or self.ensemble.startswith(
            "product-"
        )
        if needs_factors:
            if self.product_dims is None:
                raise ConfigError("product mode requires product_dims")
            d_a, d_b = self.product_dims
            if d_a < 2 or d_b < 2 or d_a * d_b != self.dimension:
                raise ConfigError(
                    f"product_dims {self.product_dims} incompatible with dimension {self.dimension}"
                )
        if self.checkpoint_stride is not None and self.checkpoint_stride < 1:
            raise ConfigError("checkpoint_stride must be >= 1 or null")
        if self.checkpoints_per_decade < 1:
            raise ConfigError("checkpoints_per_decade must be >= 1")
        if self.seed < 0:
            raise ConfigError("seed must be nonnegative")

    @classmethod
    def from_dict(cls, data: dict) -> "RunConfig":
        known = set(cls.__dataclass_fields__)
        unknown = set(data) - known
        if unknown:
            raise ConfigError(f"unknown config keys {sorted(unknown)}")
        coerced = dict(data)
        if "estimators" in coerced:
            coerced["estimators"] = tuple(coerced["estimators"])
        if coerced.get("product_dims") is not None:
            coerced["product_dims"] = tuple(coerced["product_dims"])
        try:
            return cls(**coerced)
        except TypeError as exc:
            raise ConfigError(str(exc)) from exc

    def to_dict(self) -> dict:
        data = asdict(self)
        data["estimators"] = list(self.estimators)
        if self.product_dims is not None:
            data["product_dims"] = list(self.product_dims)
        return data

    def config_hash(self) -> str:
        payload = json.dumps(self.to_dict(), sort_keys=True)
        return hashlib.sha256(payload.encode("utf-8")).hexdigest()[:12]

    def schedule(self) -> SpsaSchedule:
        return SpsaSchedule(
            eps_scale=self.eps_scale,
            eps_exponent=self.eps_exponent,
            alpha_scale=self.alpha_scale,
            alpha_exponent=self.alpha_exponent,
        )

    def ensemble_spec(self) -> EnsembleSpec:
        factors = self.product_dims if self.ensemble.startswith("product-") else None
        return EnsembleSpec(kind=self.ensemble, dimension=self.dimension, factors=factors)

    def checkpoints(self) -> list[int]:
        """Iterations at which estimators are evaluated.

        A fixed stride gives a linear grid; otherwise the grid is
        logarithmic with ``checkpoints_per_decade`` points per decade,
        always ending at the final iteration.
        """
        if self.checkpoint_stride is not None:
            return list(range(self.checkpoint_stride, self.iterations + 1, self.checkpoint_stride))
        if self.iterations == 1:
            return [1]
        decades = math.log10(self.iterations)
        count = max(2, int(round(self.checkpoints_per_decade * decades)) + 1)
        grid = np.unique(np.rint(np.geomspace(1.0, self.iterations, count)).astype(int))
        return [int(v) for v in grid]


@dataclass
class CheckpointRow:
    iteration: int
    cumulative_shots: int
    losses: dict[str, LossReport | None]
    ess: float | None
    cond_number: float | None


@dataclass
class TrialLog:
    """Per-trial time series plus the diagnostics needed for postselection."""

    config_hash: str
    trial_index: int
    rows: list[CheckpointRow]
    ess_floor_seen: float | None
    wall_time: float
    closest_pure_distance: float | None = None


@dataclass(frozen=True)
class AggregateRow:
    config_hash: str
    iteration: int
    cumulative_shots: int
    estimator: str
    metric: str
    count: int
    mean: float | None
    median: float | None
    q16: float | None
    q84: float | None


@dataclass
class RunResult:
    config: RunConfig
    trials: list[TrialLog]
    aggregates: list[AggregateRow]


def run_trial(config: RunConfig, trial_index: int) -> TrialLog:
    """Simulate one tomography run; deterministic given (config.seed, trial_index)."""
    start = time.perf_counter()
    rng = np.random.default_rng([config.seed, trial_index])
    d = config.dimension
    basis = default_basis(d)
    n_coords = len(basis)

    rho_true = sample_state(config.ensemble_spec(), rng)
    theta_true = to_theta(rho_true, basis)

    shots_each = config.shots_per_measurement
    if config.measurement_mode == "product":
        designer = initial_product_state(config.product_dims, config.schedule(), shots_each, rng)
    else:
        designer = initial_state(d, config.schedule(), shots_each, rng)

    def outcome_source(coords: np.ndarray, shots: int) -> float:
        return sample_shots(born_probability(theta_true, coords, d), shots, rng)

    cloud = None
    ess_floor: float | None = None
    if "bme" in config.estimators:
        cloud = pf_init(
            partial(hilbert_schmidt_thetas, basis),
            config.particles,
            config.resample_a,
            config.resample_threshold,
            rng,
        )
        ess_floor = cloud.ess_floor_seen

    design_rows = np.empty((2 * config.iterations, n_coords))
    successes = np.empty(2 * config.iterations)
    checkpoint_at = set(config.checkpoints())
    rows: list[CheckpointRow] = []
    config_hash = config.config_hash()

    for k in range(1, config.iterations + 1):
        designer, (rec_plus, rec_minus) = step(designer, outcome_source, rng)
        base = 2 * (k - 1)
        design_rows[base] = rec_plus.coords
        design_rows[base + 1] = rec_minus.coords
        successes[base] = rec_plus.successes
        successes[base + 1] = rec_minus.successes
        if cloud is not None:
            try:
                cloud = pf_update(cloud, rec_plus, d, basis, rng)
                cloud = pf_update(cloud, rec_minus, d, basis, rng)
                ess_floor = cloud.ess_floor_seen
            except FilterCollapseError:
                cloud = None  # estimator reported as missing from here on

        if k in checkpoint_at:
            rows.append(
                _evaluate_checkpoint(
                    config,
                    basis,
                    rho_true,
                    theta_true,
                    designer,
                    cloud,
                    design_rows[: 2 * k],
                    successes[: 2 * k],
                    k,
                )
            )

    return TrialLog(
        config_hash=config_hash,
        trial_index=trial_index,
        rows=rows,
        ess_floor_seen=ess_floor,
        wall_time=time.perf_counter() - start,
        closest_pure_distance=closest_pure_distance(rho_true) if d == 2 else None,
    )


def _evaluate_checkpoint(
    config: RunConfig,
    basis,
    rho_true: np.ndarray,
    theta_true: np.ndarray,
    designer,
    cloud,
    design_rows: np.ndarray,
    successes: np.ndarray,
    k: int,
) -> CheckpointRow:
    d = config.dimension
    shots_cum = 2 * config.shots_per_measurement * k
    n_rows = design_rows.shape[0]
    shots_vec = np.full(n_rows, config.shots_per_measurement)
    system = DesignSystem(
        matrix=design_rows,
        offsets=successes / config.shots_per_measurement - 1.0 / d,
        shots=shots_vec,
    )

    losses: dict[str, LossReport | None] = {}
    for name in config.estimators:
        try:
            if name == "sgqt":
                estimate = designer.estimate_matrix()
            elif name == "lsf":
                estimate = lsf_estimate(system, basis)
            elif name == "wlsf":
                estimate = wlsf_estimate(system, basis, hedge_y=config.hedge_y)
            elif name == "bme":
                if cloud is None:
                    losses[name] = None
                    continue
                estimate = pf_bme(cloud, basis)
            losses[name] = loss_report(name, k, shots_cum, rho_true, theta_true, estimate, basis)
        except (PaqtError, np.linalg.LinAlgError):
            losses[name] = None

    ess = pf_ess(cloud) if cloud is not None else None
    cond = condition_number(design_rows) if n_rows >= design_rows.shape[1] else None
    return CheckpointRow(
        iteration=k, cumulative_shots=shots_cum, losses=losses, ess=ess, cond_number=cond
    )


def run(config: RunConfig, workers: int = 1) -> RunResult:
    """Execute all trials (optionally in a process pool) and aggregate."""
    indices = range(config.trials)
    if workers <= 1:
        trials = [run_trial(config, i) for i in indices]
    else:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            trials = list(pool.map(partial(run_trial, config), indices))
    trials.sort(key=lambda t: t.trial_index)
    return RunResult(config=config, trials=trials, aggregates=aggregate(trials))


def trial_rows(trial: TrialLog) -> list[dict]:
    """Flatten a trial log into raw CSV row dicts."""
    out = []
    for row in trial.rows:
        for name, report in row.losses.items():
            out.append(
                {
                    "config_hash": trial.config_hash,
                    "trial": trial.trial_index,
                    "k": row.iteration,
                    "shots": row.cumulative_shots,
                    "estimator": name,
                    "infidelity": report.infidelity if report else None,
                    "quadratic_loss": report.quadratic_loss if report else None,
                    "trace_distance": report.trace_distance if report else None,
                    "ess": row.ess,
                    "cond_number": row.cond_number,
                }
            )
    return out


def aggregate(trials: list[TrialLog]) -> list[AggregateRow]:
    """Quantile table over trials; checkpoints must align across trials."""
    if not trials:
        raise ValueError("aggregate needs at least one trial")
    return aggregate_from_rows([r for t in trials for r in trial_rows(t)])


def aggregate_from_rows(rows: list[dict]) -> list[AggregateRow]:
    """Aggregate raw CSV rows: median, 16%/84% quantiles (linear interpolation), mean.

    Values missing for a trial (``None``) are dropped; ``count`` records
    how many trials contributed.  Per-checkpoint run diagnostics (ESS,
    condition number) aggregate under the pseudo-estimator ``run``.
    """
    if not rows:
        return []
    grids: dict[int, list[tuple[int, int]]] = {}
    for row in rows:
        grids.setdefault(row["trial"], [])
    for row in rows:
        pair = (row["k"], row["shots"])
        grid = grids[row["trial"]]
        if not grid or grid[-1] != pair:
            grid.append(pair)
    reference = next(iter(grids.values()))
    for trial, grid in grids.items():
        if grid != reference:
            raise ValueError(f"trial {trial} checkpoints misaligned with other trials")

    config_hash = rows[0]["config_hash"]
    loss_values: dict[tuple, list[float]] = {}
    run_values: dict[tuple, dict[int, float]] = {}
    for row in rows:
        key_base = (row["k"], row["shots"])
        for metric in LOSS_METRICS:
            value = row[metric]
            if value is not None:
                loss_values.setdefault(key_base + (row["estimator"], metric), []).append(value)
        for metric in RUN_LEVEL_METRICS:
            value = row[metric]
            if value is not None:
                run_values.setdefault(key_base + (metric,), {})[row["trial"]] = value

    out = []
    estimators = sorted({row["estimator"] for row in rows})
    for k, shots in reference:
        for estimator in estimators:
            for metric in LOSS_METRICS:
                values = loss_values.get((k, shots, estimator, metric), [])
                out.append(_aggregate_row(config_hash, k, shots, estimator, metric, values))
        for metric in RUN_LEVEL_METRICS:
            per_trial = run_values.get((k, shots, metric), {})
            out.append(
                _aggregate_row(
                    config_hash, k, shots, RUN_LEVEL_LABEL, metric, list(per_trial.values())
                )
            )
    return out


def _aggregate_row(config_hash, k, shots, estimator, metric, values) -> AggregateRow:
    if not values:
        return AggregateRow(config_hash, k, shots, estimator, metric, 0, None, None, None, None)
    arr = np.asarray(values, dtype=float)
    q16, median, q84 = np.quantile(arr, [0.16, 0.5, 0.84])
    return AggregateRow(
        config_hash,
        k,
        shots,
        estimator,
        metric,
        len(values),
        float(arr.mean()),
        float(median),
        float(q16),
        float(q84),
    )


def _format(value) -> str:
    if value is None:
        return "NA"
    if isinstance(value, float):
        return repr(value)
    return str(value)


def _parse(text: str, kind: type) -> float | int | None:
    if text == "NA":
        return None
    return kind(text)


def emit(result: RunResult, outdir: str | Path) -> dict[str, Path]:
    """Write raw.csv, aggregates.csv and the run.json sidecar into ``outdir``.

    Output is UTF-8 with LF line endings and '.' decimal separators; raw
    rows are sorted by (trial, iteration, estimator) so the bytes do not
    depend on worker scheduling.  Floats use shortest round-trip repr.
    """
    outdir = Path(outdir)
    try:
        outdir.mkdir(parents=True, exist_ok=True)
        raw_path = outdir / "raw.csv"
        rows = [r for t in result.trials for r in trial_rows(t)]
        rows.sort(key=lambda r: (r["trial"], r["k"], r["estimator"]))
        with open(raw_path, "w", encoding="utf-8", newline="") as fh:
            writer = csv.writer(fh, lineterminator="\n")
            writer.writerow(RAW_COLUMNS)
            for row in rows:
                writer.writerow([_format(row[c]) for c in RAW_COLUMNS])

        agg_path = outdir / "aggregates.csv"
        with open(agg_path, "w", encoding="utf-8", newline="") as fh:
            writer = csv.writer(fh, lineterminator="\n")
            writer.writerow(AGGREGATE_COLUMNS)
            for agg in result.aggregates:
                writer.writerow(
                    [
                        agg.config_hash,
                        agg.iteration,
                        agg.cumulative_shots,
                        agg.estimator,
                        agg.metric,
                        agg.count,
                        _format(agg.mean),
                        _format(agg.median),
                        _format(agg.q16),
                        _format(agg.q84),
                    ]
                )

        sidecar_path = outdir / "run.json"
        sidecar = {
            "format": "paqt-run/1",
            "version": __version__,
            "config": result.config.to_dict(),
            "config_hash": result.config.config_hash(),
            "seed": result.config.seed,
            "trial_count": len(result.trials),
            "trials": [
                {
                    "trial": t.trial_index,
                    "ess_floor_seen": t.ess_floor_seen,
                    "wall_time": t.wall_time,
                    "closest_pure_distance": t.closest_pure_distance,
                }
                for t in result.trials
            ],
        }
        with open(sidecar_path, "w", encoding="utf-8", newline="") as fh:
            json.dump(sidecar, fh, indent=2)
            fh.write("\n")
    except OSError as exc:
        raise OSError(f"cannot write run outputs under {outdir}: {exc}") from exc
    return {"raw": raw_path, "aggregates": agg_path, "sidecar": sidecar_path}


_RAW_TYPES = {
    "trial": int,
    "k": int,
    "shots": int,
    "infidelity": float,
    "quadratic_loss": float,
    "trace_distance": float,
    "ess": float,
    "cond_number": float,
}


def read_raw_csv(path: str | Path) -> list[dict]:
    """Parse a raw checkpoint CSV back into typed row dicts (NA becomes None)."""
    with open(path, encoding="utf-8", newline="") as fh:
        reader = csv.DictReader(fh)
        missing = set(RAW_COLUMNS) - set(reader.fieldnames or ())
        if missing:
            raise ValueError(f"{path}: missing columns {sorted(missing)}")
        rows = []
        for record in reader:
            row = dict(record)
            for name, kind in _RAW_TYPES.items():
                row[name] = _parse(record[name], kind)
            rows.append(row)
    return rows


def read_aggregates_csv(path: str | Path) -> list[AggregateRow]:
    """Parse an aggregates CSV back into AggregateRow values."""
    with open(path, encoding="utf-8", newline="") as fh:
        reader = csv.DictReader(fh)
        missing = set(AGGREGATE_COLUMNS) - set(reader.fieldnames or ())
        if missing:
            raise ValueError(f"{path}: missing columns {sorted(missing)}")
        return [
            AggregateRow(
                config_hash=record["config_hash"],
                iteration=int(record["k"]),
                cumulative_shots=int(record["shots"]),
                estimator=record["estimator"],
                metric=record["metric"],
                count=int(record["count"]),
                mean=_parse(record["mean"], float),
                median=_parse(record["median"], float),
                q16=_parse(record["q16"], float),
                q84=_parse(record["q84"], float),
            )
            for record in reader
        ]


def read_sidecar(path: str | Path) -> dict:
    with open(path, encoding="utf-8") as fh:
        return json.load(fh)


def postselect_table(
    raw_rows: list[dict],
    floors: dict[int, float],
    thresholds: list[float],
    estimator: str = "bme",
) -> list[dict]:
    """Postselection sweep: acceptance and final-checkpoint infidelity per threshold.

    ``floors`` maps trial index to its lowest observed effective sample
    size (from the run sidecar, or min checkpoint ESS as a fallback).
    """
    final_k = max(row["k"] for row in raw_rows)
    final_loss: dict[int, float] = {}
    for row in raw_rows:
        if row["k"] == final_k and row["estimator"] == estimator:
            if row["infidelity"] is not None:
                final_loss[row["trial"]] = row["infidelity"]
    trials = sorted(floors)
    if not trials:
        raise ValueError("no trials with effective-sample-size floors")
    table = []
    for threshold in thresholds:
        accepted = [t for t in trials if floors[t] >= threshold]
        losses = [final_loss[t] for t in accepted if t in final_loss]
        table.append(
            {
                "n_th": threshold,
                "accepted": len(accepted),
                "acceptance_probability": len(accepted) / len(trials),
                "mean_infidelity": float(np.mean(losses)) if losses else None,
                "median_infidelity": float(np.median(losses)) if losses else None,
            }
        )
    return table
