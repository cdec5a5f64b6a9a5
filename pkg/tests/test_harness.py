"""Run configuration, trial execution, aggregation, serialization."""

import json
import math
from dataclasses import replace
from pathlib import Path

import numpy as np
import pytest

from paqt.errors import ConfigError
from paqt.harness import (
    AGGREGATE_COLUMNS,
    RAW_COLUMNS,
    RunConfig,
    RunResult,
    aggregate,
    aggregate_from_rows,
    emit,
    postselect_table,
    read_aggregates_csv,
    read_raw_csv,
    read_sidecar,
    run,
    run_trial,
    trial_rows,
)

SMALL = RunConfig(
    dimension=2,
    ensemble="haar-pure",
    iterations=40,
    shots_per_measurement=20,
    estimators=("sgqt", "lsf", "wlsf", "bme"),
    trials=3,
    seed=99,
    particles=128,
    checkpoints_per_decade=4,
)


@pytest.fixture(scope="module")
def small_result():
    return run(SMALL, workers=1)


class TestRunConfig:
    def test_round_trips_through_dict(self):
        again = RunConfig.from_dict(SMALL.to_dict())
        assert again == SMALL
        assert again.config_hash() == SMALL.config_hash()

    def test_rejects_unknown_keys(self):
        data = SMALL.to_dict()
        data["bogus"] = 1
        with pytest.raises(ConfigError):
            RunConfig.from_dict(data)

    def test_rejects_bad_values(self):
        with pytest.raises(ConfigError):
            replace(SMALL, estimators=())
        with pytest.raises(ConfigError):
            replace(SMALL, estimators=("sgqt", "nope"))
        with pytest.raises(ConfigError):
            replace(SMALL, resample_a=1.5)
        with pytest.raises(ConfigError):
            replace(SMALL, ensemble="bures")
        with pytest.raises(ConfigError):
            replace(SMALL, measurement_mode="product")  # needs product_dims

    def test_linear_checkpoint_stride(self):
        config = replace(SMALL, iterations=100, checkpoint_stride=10)
        assert config.checkpoints() == list(range(10, 101, 10))
        assert len(config.checkpoints()) == 10

    def test_log_checkpoints_end_at_final_iteration(self):
        config = replace(SMALL, iterations=1000, checkpoints_per_decade=10)
        points = config.checkpoints()
        assert points[0] == 1
        assert points[-1] == 1000
        assert points == sorted(set(points))


class TestRunTrial:
    def test_deterministic_given_seed_and_index(self, small_result):
        again = run_trial(SMALL, 1)
        assert trial_rows(again) == trial_rows(small_result.trials[1])
        assert again.ess_floor_seen == small_result.trials[1].ess_floor_seen

    def test_checkpoint_rows_and_shot_accounting(self, small_result):
        log = small_result.trials[0]
        iterations = [row.iteration for row in log.rows]
        assert iterations == sorted(set(iterations))
        for row in log.rows:
            assert row.cumulative_shots == 2 * SMALL.shots_per_measurement * row.iteration

    def test_qubit_trials_carry_closest_pure_distance(self, small_result):
        for log in small_result.trials:
            assert 0.0 <= log.closest_pure_distance <= 0.5

    def test_early_checkpoints_report_missing_estimates(self):
        # at k=1 only 2 rows exist, so the design is rank deficient
        config = replace(SMALL, checkpoint_stride=1, iterations=3)
        log = run_trial(config, 0)
        first = log.rows[0]
        assert first.losses["lsf"] is None
        assert first.cond_number is None
        assert first.losses["sgqt"] is not None

    def test_product_mode_runs(self):
        config = RunConfig(
            dimension=4,
            ensemble="hilbert-schmidt",
            iterations=20,
            shots_per_measurement=10,
            estimators=("sgqt", "bme"),
            trials=1,
            seed=5,
            particles=64,
            measurement_mode="product",
            product_dims=(2, 2),
            alpha_scale=31.0,
            checkpoints_per_decade=4,
        )
        log = run_trial(config, 0)
        assert log.closest_pure_distance is None
        assert log.rows[-1].losses["sgqt"].infidelity >= 0.0


class TestAggregate:
    def test_quantiles_match_sort_interpolate_oracle(self):
        rng = np.random.default_rng(0)
        values = list(rng.random(17))
        rows = [
            {
                "config_hash": "x",
                "trial": i,
                "k": 5,
                "shots": 100,
                "estimator": "sgqt",
                "infidelity": v,
                "quadratic_loss": None,
                "trace_distance": None,
                "ess": None,
                "cond_number": None,
            }
            for i, v in enumerate(values)
        ]
        table = aggregate_from_rows(rows)
        row = next(r for r in table if r.metric == "infidelity" and r.estimator == "sgqt")

        def quantile_oracle(data, q):
            data = sorted(data)
            pos = q * (len(data) - 1)
            lo = math.floor(pos)
            hi = math.ceil(pos)
            return data[lo] + (pos - lo) * (data[hi] - data[lo])

        assert row.median == pytest.approx(quantile_oracle(values, 0.5), rel=1e-12)
        assert row.q16 == pytest.approx(quantile_oracle(values, 0.16), rel=1e-12)
        assert row.q84 == pytest.approx(quantile_oracle(values, 0.84), rel=1e-12)
        assert row.mean == pytest.approx(np.mean(values), rel=1e-12)
        assert row.count == 17

    def test_simple_median(self):
        rows = [
            {
                "config_hash": "x",
                "trial": i,
                "k": 1,
                "shots": 2,
                "estimator": "sgqt",
                "infidelity": float(v),
                "quadratic_loss": None,
                "trace_distance": None,
                "ess": None,
                "cond_number": None,
            }
            for i, v in enumerate((1, 2, 3))
        ]
        table = aggregate_from_rows(rows)
        row = next(r for r in table if r.metric == "infidelity")
        assert row.median == 2.0

    def test_constant_series_collapses(self, small_result):
        rows = []
        for t in small_result.trials:
            for r in trial_rows(t):
                r = dict(r)
                r["infidelity"] = 0.25
                rows.append(r)
        table = aggregate_from_rows(rows)
        for row in table:
            if row.metric == "infidelity" and row.count:
                assert row.median == row.q16 == row.q84 == row.mean == 0.25

    def test_misaligned_checkpoints_rejected(self, small_result):
        rows = [dict(r) for r in trial_rows(small_result.trials[0])]
        other = [dict(r) for r in trial_rows(small_result.trials[1])]
        other = [r for r in other if r["k"] != other[-1]["k"]]
        with pytest.raises(ValueError):
            aggregate_from_rows(rows + other)

    def test_aggregate_requires_trials(self):
        with pytest.raises(ValueError):
            aggregate([])


class TestEmit:
    def test_files_and_round_trip(self, small_result, tmp_path):
        paths = emit(small_result, tmp_path)
        raw = read_raw_csv(paths["raw"])
        assert len(raw) == sum(len(trial_rows(t)) for t in small_result.trials)
        again = read_aggregates_csv(paths["aggregates"])
        assert again == small_result.aggregates
        sidecar = read_sidecar(paths["sidecar"])
        assert sidecar["config"] == small_result.config.to_dict()
        assert sidecar["config_hash"] == small_result.config.config_hash()
        assert len(sidecar["trials"]) == 3

    def test_column_order_and_line_endings(self, small_result, tmp_path):
        paths = emit(small_result, tmp_path)
        blob = Path(paths["raw"]).read_bytes()
        assert b"\r" not in blob
        header = blob.split(b"\n", 1)[0].decode()
        assert header == ",".join(RAW_COLUMNS)
        agg_header = Path(paths["aggregates"]).read_bytes().split(b"\n", 1)[0].decode()
        assert agg_header == ",".join(AGGREGATE_COLUMNS)

    def test_empty_trial_list_writes_headers_only(self, tmp_path):
        result = RunResult(config=SMALL, trials=[], aggregates=[])
        paths = emit(result, tmp_path)
        assert Path(paths["raw"]).read_text() == ",".join(RAW_COLUMNS) + "\n"
        sidecar = read_sidecar(paths["sidecar"])
        assert sidecar["trial_count"] == 0

    def test_rows_sorted_for_byte_stability(self, small_result, tmp_path):
        shuffled = RunResult(
            config=small_result.config,
            trials=list(reversed(small_result.trials)),
            aggregates=small_result.aggregates,
        )
        a = emit(small_result, tmp_path / "a")
        b = emit(shuffled, tmp_path / "b")
        assert Path(a["raw"]).read_bytes() == Path(b["raw"]).read_bytes()

    def test_unwritable_path_surfaces_context(self, small_result):
        with pytest.raises(OSError):
            emit(small_result, "/proc/definitely/not/writable")


class TestWorkers:
    def test_parallel_run_matches_serial_bytes(self, small_result, tmp_path):
        parallel = run(SMALL, workers=2)
        a = emit(small_result, tmp_path / "serial")
        b = emit(parallel, tmp_path / "parallel")
        assert Path(a["raw"]).read_bytes() == Path(b["raw"]).read_bytes()


class TestPostselectTable:
    def test_acceptance_probability_non_increasing(self, small_result):
        rows = [r for t in small_result.trials for r in trial_rows(t)]
        floors = {t.trial_index: t.ess_floor_seen for t in small_result.trials}
        grid = [0.0, 1.0, 50.0, 1e9]
        table = postselect_table(rows, floors, grid)
        probs = [entry["acceptance_probability"] for entry in table]
        assert probs == sorted(probs, reverse=True)
        assert table[0]["acceptance_probability"] == 1.0
        assert table[-1]["accepted"] == 0
        assert table[-1]["mean_infidelity"] is None
