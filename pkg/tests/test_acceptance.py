"""Acceptance gate: one test per criterion, each printing a PASS/FAIL line.

Run with ``pytest tests/test_acceptance.py -v -s`` to see the per-criterion
lines.  Thresholds marked "calibrated" were fixed from seeded pre-build
runs (tools/calibrate.py) and are asserted at the stated tolerances.
"""

import math
from dataclasses import replace

import numpy as np
import pytest

from paqt.cli import main
from paqt.diagnostics import condition_number
from paqt.ensembles import hilbert_schmidt_thetas, sample_hilbert_schmidt
from paqt.estimators import ParticleCloud, liu_west_resample, pf_ess, pf_init, pf_update
from paqt.harness import RunConfig, aggregate_from_rows, run_trial, trial_rows
from paqt.qcore import (
    MeasurementRecord,
    born_probability,
    build_basis,
    default_basis,
    fidelity,
    from_theta,
    project_to_physical,
    sample_shots,
    to_theta,
    trace_distance,
)


def _report(name: str, ok: bool, detail: str) -> None:
    print(f"[ACCEPTANCE] {name}: {'PASS' if ok else 'FAIL'} ({detail})")
    assert ok, f"{name}: {detail}"


def _median_curves(config: RunConfig, estimators: tuple[str, ...]) -> tuple[list[int], dict]:
    logs = [run_trial(config, i) for i in range(config.trials)]
    iterations = [row.iteration for row in logs[0].rows]
    curves = {
        est: [
            float(np.median([log.rows[j].losses[est].infidelity for log in logs]))
            for j in range(len(iterations))
        ]
        for est in estimators
    }
    return iterations, curves, logs


class TestPropertySuite:
    """Criterion: fast property suite at the stated tolerances."""

    def test_basis_orthonormality(self):
        worst = 0.0
        for d in range(2, 8):
            basis = build_basis(d)
            gram = np.einsum("nab,mba->nm", basis.elements, basis.elements)
            worst = max(worst, float(abs(gram - np.eye(len(basis))).max()))
            worst = max(worst, float(abs(np.einsum("naa->n", basis.elements)).max()))
        _report("basis-orthonormality-d2..7", worst <= 1e-12, f"worst residual {worst:.2e}")

    def test_theta_round_trips(self):
        rng = np.random.default_rng(1000)
        worst = 0.0
        for d in (2, 3, 4, 5):
            basis = default_basis(d)
            for _ in range(25):
                rho = sample_hilbert_schmidt(d, rng)
                worst = max(worst, float(abs(from_theta(to_theta(rho, basis), basis) - rho).max()))
        _report("theta-round-trip", worst <= 1e-12, f"worst residual {worst:.2e}")

    def test_born_rule_oracle_equivalence(self):
        rng = np.random.default_rng(1001)
        basis = default_basis(3)
        worst = 0.0
        for _ in range(200):
            rho = sample_hilbert_schmidt(3, rng)
            proj_state = sample_hilbert_schmidt(3, rng)
            w, v = np.linalg.eigh(proj_state)
            proj = np.outer(v[:, -1], v[:, -1].conj())
            got = born_probability(to_theta(rho, basis), to_theta(proj, basis), 3)
            expected = float(np.trace(rho @ proj).real)
            worst = max(worst, abs(got - expected))
        _report("born-rule-oracle", worst <= 1e-12, f"worst deviation {worst:.2e}")

    def test_projection_idempotence(self):
        rng = np.random.default_rng(1002)
        worst = 0.0
        for _ in range(50):
            h = rng.normal(size=(4, 4)) + 1j * rng.normal(size=(4, 4))
            h = (h + h.conj().T) / 2
            once = project_to_physical(h)
            twice = project_to_physical(once)
            worst = max(worst, float(abs(once - twice).max()))
        _report("projection-idempotent", worst <= 1e-12, f"worst residual {worst:.2e}")

    def test_fuchs_van_de_graaf(self):
        rng = np.random.default_rng(1003)
        ok = True
        for _ in range(1000):
            d = int(rng.integers(2, 5))
            rho = sample_hilbert_schmidt(d, rng)
            sigma = sample_hilbert_schmidt(d, rng)
            f = fidelity(rho, sigma)
            t = trace_distance(rho, sigma)
            ok = ok and (1 - math.sqrt(f) <= t + 1e-9) and (t <= math.sqrt(1 - f) + 1e-9)
        _report("fuchs-van-de-graaf-1000-pairs", ok, "sandwich holds at 1e-9")

    def test_ess_bounds_and_weight_normalization(self):
        rng = np.random.default_rng(1004)
        basis = default_basis(2)
        cloud = pf_init(lambda r, n: hilbert_schmidt_thetas(basis, r, n), 256, 0.98, 0.5, rng)
        truth = hilbert_schmidt_thetas(basis, rng, 1)[0]
        coords = [np.eye(3)[i] / math.sqrt(2) for i in range(3)]
        ok = True
        for i in range(120):
            p = coords[i % 3]
            n = sample_shots(born_probability(truth, p, 2), 25, rng)
            cloud = pf_update(cloud, MeasurementRecord(p, 25, n), 2, basis, rng)
            ok = ok and abs(cloud.weights.sum() - 1.0) <= 1e-10
            ok = ok and 1.0 - 1e-9 <= pf_ess(cloud) <= 256.0 + 1e-9
        _report("ess-bounds-weight-normalization", ok, "after 120 updates")

    def test_liu_west_a_one_exactness(self):
        rng = np.random.default_rng(1005)
        basis = default_basis(2)
        locations = hilbert_schmidt_thetas(basis, rng, 64)
        weights = rng.random(64)
        weights /= weights.sum()
        cloud = ParticleCloud(locations, weights, 1.0, 0.5, 64.0)
        out = liu_west_resample(cloud, basis, rng)
        pool = {tuple(row) for row in locations}
        ok = all(tuple(row) in pool for row in out.locations)
        _report("liu-west-a1-exact-copies", ok, "all locations are ancestor copies")

    def test_quantile_oracle(self):
        rng = np.random.default_rng(1006)
        values = list(rng.random(23))
        rows = [
            {
                "config_hash": "x",
                "trial": i,
                "k": 3,
                "shots": 60,
                "estimator": "sgqt",
                "infidelity": v,
                "quadratic_loss": None,
                "trace_distance": None,
                "ess": None,
                "cond_number": None,
            }
            for i, v in enumerate(values)
        ]
        row = next(
            r for r in aggregate_from_rows(rows) if r.metric == "infidelity" and r.count
        )

        def oracle(data, q):
            data = sorted(data)
            pos = q * (len(data) - 1)
            lo, hi = math.floor(pos), math.ceil(pos)
            return data[lo] + (pos - lo) * (data[hi] - data[lo])

        ok = (
            abs(row.median - oracle(values, 0.5)) <= 1e-12
            and abs(row.q16 - oracle(values, 0.16)) <= 1e-12
            and abs(row.q84 - oracle(values, 0.84)) <= 1e-12
        )
        _report("quantile-oracle", ok, "linear interpolation matches brute force")


class TestConditionNumberOracle:
    def test_duplicated_row_gives_sqrt_k(self):
        worst = 0.0
        for k in (4, 16, 100):
            x = np.vstack([np.eye(3)] + [np.eye(3)[:1]] * (k - 1))
            worst = max(worst, abs(condition_number(x) - math.sqrt(k)))
        _report("condition-number-sqrt-K", worst <= 1e-9, f"worst deviation {worst:.2e}")


class TestScaledFig2Top:
    def test_pure_qubit_sgqt_convergence(self):
        # calibrated: median final infidelity ~2.7e-4, monotone last decade
        # across 8 master seeds at 4 checkpoints/decade
        config = RunConfig(
            dimension=2,
            ensemble="haar-pure",
            iterations=1000,
            shots_per_measurement=500,
            estimators=("sgqt",),
            trials=50,
            seed=42,
            checkpoints_per_decade=4,
        )
        iterations, curves, _ = _median_curves(config, ("sgqt",))
        median = curves["sgqt"]
        final = median[-1]
        last_decade = [m for k, m in zip(iterations, median) if k > config.iterations // 10]
        monotone = all(b <= a for a, b in zip(last_decade, last_decade[1:]))
        _report(
            "fig2-top-median-infidelity",
            final < 1e-2,
            f"final median {final:.2e} < 1e-2",
        )
        _report(
            "fig2-top-monotone-last-decade",
            monotone,
            f"medians {['%.2e' % m for m in last_decade]}",
        )


class TestScaledFig2Bottom:
    def test_mixed_qubit_bme_beats_plateaued_sgqt(self):
        # calibrated: BME/SGQT final median ratio ~3e4, SGQT plateau ratio ~1.3
        config = RunConfig(
            dimension=2,
            ensemble="hilbert-schmidt",
            iterations=1000,
            shots_per_measurement=500,
            estimators=("sgqt", "bme"),
            trials=50,
            seed=13,
            particles=4000,
            resample_a=0.98,
            checkpoints_per_decade=4,
        )
        iterations, curves, _ = _median_curves(config, ("sgqt", "bme"))
        sgqt, bme = curves["sgqt"], curves["bme"]
        ratio = sgqt[-1] / bme[-1]
        first_of_decade = next(
            m for k, m in zip(iterations, sgqt) if k > config.iterations // 10
        )
        plateau = first_of_decade / sgqt[-1]
        _report(
            "fig2-bottom-bme-5x-better",
            ratio >= 5.0,
            f"sgqt/bme final median ratio {ratio:.1f}",
        )
        _report(
            "fig2-bottom-sgqt-plateau",
            plateau < 2.0,
            f"last-decade median decrease {plateau:.2f}x < 2x",
        )


class TestFig1Property:
    def test_gap_to_closest_pure_shrinks_with_shots(self):
        # calibrated median gaps: ~0.38 (5 shots), ~0.12 (50), ~0.016 (500)
        gaps = {}
        for shots in (5, 50, 500):
            config = RunConfig(
                dimension=2,
                ensemble="hilbert-schmidt",
                iterations=1000,
                shots_per_measurement=shots,
                estimators=("sgqt",),
                trials=100,
                seed=17,
                checkpoints_per_decade=4,
            )
            logs = [run_trial(config, i) for i in range(config.trials)]
            gaps[shots] = float(
                np.median(
                    [
                        log.rows[-1].losses["sgqt"].trace_distance - log.closest_pure_distance
                        for log in logs
                    ]
                )
            )
        ok = gaps[5] > gaps[50] > gaps[500]
        _report(
            "fig1-gap-strictly-decreasing",
            ok,
            f"median gaps {gaps[5]:.3f} > {gaps[50]:.3f} > {gaps[500]:.3f}",
        )


class TestFig3Property:
    def test_estimator_rankings_on_pure_qubit_data(self):
        # Ranking claims tested on the fig2/fig3 protocol at desk scale.
        # KNOWN RED (see /root/notes/decisions.md): with the design rows
        # this artifact defines (both perturbed projectors per iteration,
        # suggested gain schedule), weighted least squares extracts the
        # near-saturated low-variance rows and outperforms the SGQT
        # iterate's median infidelity at every protocol measured; the
        # particle-filter mean saturates at its approximation floor at
        # this shot count.  The assertions state the criterion as
        # specified and the failure is accepted as an honest outcome.
        config = RunConfig(
            dimension=2,
            ensemble="haar-pure",
            iterations=1000,
            shots_per_measurement=500,
            estimators=("sgqt", "lsf", "wlsf", "bme"),
            trials=200,
            seed=23,
            particles=4000,
            resample_a=0.98,
            checkpoints_per_decade=4,
        )
        logs = [run_trial(config, i) for i in range(config.trials)]
        med_inf = {}
        mean_ql = {}
        for est in config.estimators:
            final = [log.rows[-1].losses[est] for log in logs]
            med_inf[est] = float(np.median([r.infidelity for r in final if r]))
            mean_ql[est] = float(np.mean([r.quadratic_loss for r in final if r]))
        lowest_inf = min(med_inf, key=med_inf.get)
        lowest_ql = min(mean_ql, key=mean_ql.get)
        detail = (
            f"median infidelity {dict((k, '%.2e' % v) for k, v in med_inf.items())}, "
            f"mean quadratic loss {dict((k, '%.2e' % v) for k, v in mean_ql.items())}"
        )
        _report(
            "fig3-sgqt-lowest-median-infidelity-and-bme-lowest-mean-qloss",
            lowest_inf == "sgqt" and lowest_ql == "bme",
            f"lowest infidelity: {lowest_inf}, lowest quadratic loss: {lowest_ql}; {detail}",
        )


class TestScaledFig6:
    def test_postselection_sweep(self):
        # calibrated: window-5 smoothed means monotone, mean-median gap
        # shrinks to ~0.34x over the sweep
        config = RunConfig(
            dimension=3,
            ensemble="hilbert-schmidt",
            iterations=1000,
            shots_per_measurement=500,
            estimators=("bme",),
            trials=200,
            seed=606,
            particles=8000,
            resample_a=0.9,
            checkpoints_per_decade=4,
        )
        logs = [run_trial(config, i) for i in range(config.trials)]
        floors = np.array([log.ess_floor_seen for log in logs])
        losses = np.array([log.rows[-1].losses["bme"].infidelity for log in logs])
        grid = [0.0] + list(np.quantile(floors, np.linspace(0.1, 0.8, 8)))
        means, medians, acceptance = [], [], []
        for threshold in grid:
            accepted = losses[floors >= threshold]
            means.append(accepted.mean())
            medians.append(float(np.median(accepted)))
            acceptance.append(float((floors >= threshold).mean()))
        smoothed = np.convolve(means, np.ones(5) / 5, mode="valid")
        monotone = bool(np.all(np.diff(smoothed) <= 1e-12))
        gap_first = means[0] - medians[0]
        gap_last = means[-1] - medians[-1]
        accept_monotone = all(b <= a for a, b in zip(acceptance, acceptance[1:]))
        _report(
            "fig6-smoothed-mean-non-increasing",
            monotone,
            f"smoothed means {['%.2e' % v for v in smoothed]}",
        )
        _report(
            "fig6-mean-approaches-median",
            gap_last < gap_first,
            f"mean-median gap {gap_first:.2e} -> {gap_last:.2e}",
        )
        _report(
            "fig6-acceptance-probability-non-increasing",
            accept_monotone,
            f"acceptance {['%.2f' % a for a in acceptance]}",
        )


class TestScaledFig7:
    def test_condition_number_growth_slope(self):
        # calibrated: median slope ~0.43 for converging pure-truth runs
        config = RunConfig(
            dimension=2,
            ensemble="haar-pure",
            iterations=10_000,
            shots_per_measurement=25,
            estimators=("sgqt",),
            trials=20,
            seed=107,
            checkpoints_per_decade=10,
        )
        slopes = []
        for i in range(config.trials):
            log = run_trial(config, i)
            ks = np.array([r.iteration for r in log.rows if r.cond_number is not None])
            kappa = np.array(
                [float(r.cond_number) for r in log.rows if r.cond_number is not None]
            )
            window = (ks >= 1000) & (ks <= 10_000)
            slopes.append(np.polyfit(np.log(ks[window]), np.log(kappa[window]), 1)[0])
        median_slope = float(np.median(slopes))
        _report(
            "fig7-log-kappa-slope",
            0.35 <= median_slope <= 0.65,
            f"median slope {median_slope:.3f} in [0.35, 0.65]",
        )


class TestDeterminism:
    def test_smoke_preset_byte_identical(self, tmp_path, monkeypatch):
        monkeypatch.delenv("PAQT_OUT", raising=False)
        first = tmp_path / "first"
        second = tmp_path / "second"
        assert main(["run", "--preset", "smoke", "--out", str(first)]) == 0
        assert main(["run", "--preset", "smoke", "--out", str(second)]) == 0
        a = (first / "smoke" / "raw.csv").read_bytes()
        b = (second / "smoke" / "raw.csv").read_bytes()
        _report("determinism-byte-identical", a == b, f"{len(a)} bytes compared")
