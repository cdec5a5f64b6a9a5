"""Named experiment presets.

Each preset is a list of (variant, RunConfig) pairs covering one of the
standard protocols: the closest-pure scatter (fig1), qubit loss curves
(fig2), loss density data (fig3), qutrit curves (fig4), two-qubit
product-restricted curves (fig5), the postselection sweep (fig6), design
conditioning growth (fig7), and a tiny deterministic smoke run.  Desk
scale finishes on a laptop; ``full_scale`` restores the long protocols
(10^4 iterations, full particle counts, more trials).
"""

from __future__ import annotations

from dataclasses import replace

from .harness import RunConfig
from .sgqt import PRODUCT_ALPHA_SCALE

__all__ = ["PRESET_NAMES", "get_preset"]

ALL_ESTIMATORS = ("sgqt", "lsf", "wlsf", "bme")


def _fig1(full: bool) -> list[tuple[str, RunConfig]]:
    base = RunConfig(
        dimension=2,
        ensemble="hilbert-schmidt",
        iterations=10_000 if full else 1_000,
        shots_per_measurement=5,
        estimators=("sgqt",),
        trials=100,
        seed=101,
    )
    return [
        (f"shots{n}", replace(base, shots_per_measurement=n)) for n in (5, 50, 500)
    ]


def _qubit_curves(full: bool, trials_desk: int, trials_full: int, seed: int):
    base = RunConfig(
        dimension=2,
        ensemble="haar-pure",
        iterations=10_000 if full else 1_000,
        shots_per_measurement=500,
        estimators=ALL_ESTIMATORS,
        trials=trials_full if full else trials_desk,
        seed=seed,
        particles=4_000,
        resample_a=0.98,
    )
    return [
        ("pure", base),
        ("mixed", replace(base, ensemble="hilbert-schmidt")),
    ]


def _fig2(full: bool):
    return _qubit_curves(full, trials_desk=50, trials_full=100, seed=102)


def _fig3(full: bool):
    # density estimates need many trials for smooth curves
    return _qubit_curves(full, trials_desk=200, trials_full=1_000, seed=103)


def _fig4(full: bool) -> list[tuple[str, RunConfig]]:
    base = RunConfig(
        dimension=3,
        ensemble="haar-pure",
        iterations=10_000 if full else 1_000,
        shots_per_measurement=500,
        estimators=ALL_ESTIMATORS,
        trials=100 if full else 50,
        seed=104,
        particles=32_000 if full else 8_000,
        resample_a=0.9,
    )
    return [("pure", base), ("mixed", replace(base, ensemble="hilbert-schmidt"))]


def _fig5(full: bool) -> list[tuple[str, RunConfig]]:
    # truths live on the full two-qubit space; only the measurements are products
    base = RunConfig(
        dimension=4,
        ensemble="haar-pure",
        iterations=10_000 if full else 1_000,
        shots_per_measurement=500,
        estimators=ALL_ESTIMATORS,
        trials=100 if full else 50,
        seed=105,
        particles=32_000 if full else 8_000,
        resample_a=0.9,
        alpha_scale=PRODUCT_ALPHA_SCALE,
        measurement_mode="product",
        product_dims=(2, 2),
    )
    return [("pure", base), ("mixed", replace(base, ensemble="hilbert-schmidt"))]


def _fig6(full: bool) -> list[tuple[str, RunConfig]]:
    qutrit = RunConfig(
        dimension=3,
        ensemble="hilbert-schmidt",
        iterations=10_000 if full else 1_000,
        shots_per_measurement=500,
        estimators=("sgqt", "bme"),
        trials=1_000 if full else 200,
        seed=106,
        particles=32_000 if full else 8_000,
        resample_a=0.9,
    )
    twoqubit = replace(
        qutrit,
        dimension=4,
        measurement_mode="product",
        product_dims=(2, 2),
        alpha_scale=PRODUCT_ALPHA_SCALE,
    )
    return [("qutrit", qutrit), ("twoqubit", twoqubit)]


def _fig7(full: bool) -> list[tuple[str, RunConfig]]:
    # conditioning growth needs the full decade span regardless of scale;
    # converging (pure-truth, low-shot) runs show the clustering regime best
    base = RunConfig(
        dimension=2,
        ensemble="haar-pure",
        iterations=10_000,
        shots_per_measurement=25,
        estimators=("sgqt",),
        trials=20,
        seed=107,
    )
    return [
        ("d2", base),
        ("d3", replace(base, dimension=3)),
        (
            "d4product",
            replace(
                base,
                dimension=4,
                measurement_mode="product",
                product_dims=(2, 2),
                alpha_scale=PRODUCT_ALPHA_SCALE,
            ),
        ),
    ]


def _smoke(full: bool) -> list[tuple[str, RunConfig]]:
    config = RunConfig(
        dimension=2,
        ensemble="haar-pure",
        iterations=64,
        shots_per_measurement=25,
        estimators=ALL_ESTIMATORS,
        trials=3,
        seed=20260810,
        particles=256,
        checkpoints_per_decade=4,
    )
    return [("smoke", config)]


_PRESETS = {
    "smoke": _smoke,
    "fig1": _fig1,
    "fig2": _fig2,
    "fig3": _fig3,
    "fig4": _fig4,
    "fig5": _fig5,
    "fig6": _fig6,
    "fig7": _fig7,
}

PRESET_NAMES = tuple(_PRESETS)


def get_preset(
    name: str,
    full_scale: bool = False,
    trials: int | None = None,
    seed: int | None = None,
) -> list[tuple[str, RunConfig]]:
    """Resolve a preset, optionally overriding trial count and master seed."""
    if name not in _PRESETS:
        raise KeyError(f"unknown preset {name!r}; available: {', '.join(PRESET_NAMES)}")
    variants = _PRESETS[name](full_scale)
    if trials is not None:
        variants = [(label, replace(cfg, trials=trials)) for label, cfg in variants]
    if seed is not None:
        variants = [(label, replace(cfg, seed=seed)) for label, cfg in variants]
    return variants
