#!/usr/bin/env python3
"""Regenerate the seeded calibration numbers behind the acceptance thresholds.

Each section reruns one pre-build calibration and prints the observed
values next to the threshold frozen in tests/test_acceptance.py.  Takes
roughly 15 minutes single-core.

    python3 tools/calibrate.py [section ...]

Sections: fig2top fig2bottom fig1 fig3 fig6 fig7 bme-lsf
"""

from __future__ import annotations

import sys

import numpy as np

from paqt.harness import RunConfig, run_trial


def _median_final(config, estimator):
    logs = [run_trial(config, i) for i in range(config.trials)]
    return logs, float(
        np.median([log.rows[-1].losses[estimator].infidelity for log in logs])
    )


def fig2top():
    config = RunConfig(
        dimension=2, ensemble="haar-pure", iterations=1000, shots_per_measurement=500,
        estimators=("sgqt",), trials=50, seed=42, checkpoints_per_decade=4,
    )
    logs, final = _median_final(config, "sgqt")
    ks = [r.iteration for r in logs[0].rows]
    med = [float(np.median([lg.rows[j].losses["sgqt"].infidelity for lg in logs]))
           for j in range(len(ks))]
    last = [(k, m) for k, m in zip(ks, med) if k > config.iterations // 10]
    print(f"fig2top: final median infidelity {final:.3e} (threshold 1e-2)")
    print(f"fig2top: last-decade medians {[f'{m:.3e}' for _, m in last]} (must be non-increasing)")


def fig2bottom():
    config = RunConfig(
        dimension=2, ensemble="hilbert-schmidt", iterations=1000, shots_per_measurement=500,
        estimators=("sgqt", "bme"), trials=50, seed=13, particles=4000, resample_a=0.98,
        checkpoints_per_decade=4,
    )
    logs = [run_trial(config, i) for i in range(config.trials)]
    ks = [r.iteration for r in logs[0].rows]
    sgqt = [float(np.median([lg.rows[j].losses["sgqt"].infidelity for lg in logs]))
            for j in range(len(ks))]
    bme = [float(np.median([lg.rows[j].losses["bme"].infidelity for lg in logs]))
           for j in range(len(ks))]
    first = next(m for k, m in zip(ks, sgqt) if k > config.iterations // 10)
    print(f"fig2bottom: sgqt/bme final ratio {sgqt[-1] / bme[-1]:.1f} (threshold >= 5)")
    print(f"fig2bottom: sgqt plateau ratio {first / sgqt[-1]:.2f} (threshold < 2)")


def fig1():
    for shots in (5, 50, 500):
        config = RunConfig(
            dimension=2, ensemble="hilbert-schmidt", iterations=1000,
            shots_per_measurement=shots, estimators=("sgqt",), trials=100, seed=17,
            checkpoints_per_decade=4,
        )
        logs = [run_trial(config, i) for i in range(config.trials)]
        gap = float(np.median([
            lg.rows[-1].losses["sgqt"].trace_distance - lg.closest_pure_distance
            for lg in logs
        ]))
        print(f"fig1: shots={shots} median gap {gap:.4f} (must strictly decrease in shots)")


def fig3():
    for shots in (25, 500):
        config = RunConfig(
            dimension=2, ensemble="haar-pure", iterations=1000, shots_per_measurement=shots,
            estimators=("sgqt", "lsf", "wlsf", "bme"), trials=200, seed=23,
            particles=4000, resample_a=0.98, checkpoints_per_decade=4,
        )
        logs = [run_trial(config, i) for i in range(config.trials)]
        print(f"fig3: shots={shots}")
        for est in config.estimators:
            final = [lg.rows[-1].losses[est] for lg in logs]
            med_inf = float(np.median([r.infidelity for r in final if r]))
            mean_ql = float(np.mean([r.quadratic_loss for r in final if r]))
            print(f"  {est:4s} median infidelity {med_inf:.3e}  mean quadratic loss {mean_ql:.3e}")


def fig6():
    config = RunConfig(
        dimension=3, ensemble="hilbert-schmidt", iterations=1000, shots_per_measurement=500,
        estimators=("bme",), trials=200, seed=606, particles=8000, resample_a=0.9,
        checkpoints_per_decade=4,
    )
    logs = [run_trial(config, i) for i in range(config.trials)]
    floors = np.array([lg.ess_floor_seen for lg in logs])
    losses = np.array([lg.rows[-1].losses["bme"].infidelity for lg in logs])
    grid = [0.0] + list(np.quantile(floors, np.linspace(0.1, 0.8, 8)))
    means = [losses[floors >= t].mean() for t in grid]
    medians = [float(np.median(losses[floors >= t])) for t in grid]
    smoothed = np.convolve(means, np.ones(5) / 5, mode="valid")
    print(f"fig6: smoothed means {[f'{v:.3e}' for v in smoothed]} (must be non-increasing)")
    print(f"fig6: mean-median gap {means[0] - medians[0]:.3e} -> {means[-1] - medians[-1]:.3e}")


def fig7():
    config = RunConfig(
        dimension=2, ensemble="haar-pure", iterations=10_000, shots_per_measurement=25,
        estimators=("sgqt",), trials=20, seed=107, checkpoints_per_decade=10,
    )
    slopes = []
    for i in range(config.trials):
        log = run_trial(config, i)
        ks = np.array([r.iteration for r in log.rows if r.cond_number is not None])
        kappa = np.array([float(r.cond_number) for r in log.rows if r.cond_number is not None])
        window = (ks >= 1000) & (ks <= 10_000)
        slopes.append(np.polyfit(np.log(ks[window]), np.log(kappa[window]), 1)[0])
    print(f"fig7: median log-kappa slope {float(np.median(slopes)):.3f} (window [0.35, 0.65])")


def bme_lsf():
    config = RunConfig(
        dimension=2, ensemble="hilbert-schmidt", iterations=100, shots_per_measurement=5,
        estimators=("lsf", "bme"), trials=200, seed=808, particles=2000, resample_a=0.98,
        checkpoints_per_decade=4,
    )
    logs = [run_trial(config, i) for i in range(config.trials)]
    bme = np.mean([lg.rows[-1].losses["bme"].quadratic_loss for lg in logs])
    lsf = np.mean([lg.rows[-1].losses["lsf"].quadratic_loss for lg in logs])
    print(f"bme-lsf: mean quadratic loss bme {bme:.3e} vs lsf {lsf:.3e} (bme must not exceed lsf)")


SECTIONS = {
    "fig2top": fig2top,
    "fig2bottom": fig2bottom,
    "fig1": fig1,
    "fig3": fig3,
    "fig6": fig6,
    "fig7": fig7,
    "bme-lsf": bme_lsf,
}


if __name__ == "__main__":
    names = sys.argv[1:] or list(SECTIONS)
    for name in names:
        SECTIONS[name]()
