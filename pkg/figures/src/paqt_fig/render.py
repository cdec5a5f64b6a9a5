"""Figure layouts for the harness products.

Each figure id maps to exactly one layout; rendering reads CSV/JSON files
only and never recomputes losses.  Output images are deterministic for a
given input on one platform: fixed geometry, fixed fonts, and no
version-dependent PNG metadata.
"""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np
from scipy import stats

from .io import (
    EmptyDataError,
    SchemaError,
    read_aggregates,
    read_postselect,
    read_raw,
    read_sidecar,
)
from .palette import SERIES_COLORS, estimator_color

FIGURE_IDS = ("fig1", "fig2", "fig3", "fig4", "fig5", "fig6", "fig7")

plt.rcParams.update(
    {
        "figure.dpi": 100,
        "savefig.dpi": 100,
        "font.family": "DejaVu Sans",
        "font.size": 9,
        "axes.grid": True,
        "grid.alpha": 0.25,
        "legend.frameon": False,
    }
)


@dataclass(frozen=True)
class FigureSpec:
    """One render request: layout id, input directory, output image path."""

    figure: str
    input_dir: Path
    output: Path
    x_scale: str | None = None  # layout default when None
    y_scale: str | None = None

    def __post_init__(self) -> None:
        if self.figure not in FIGURE_IDS:
            raise ValueError(f"unknown figure id {self.figure!r}; expected one of {FIGURE_IDS}")


def render(spec: FigureSpec) -> Path:
    """Render the figure and write a PNG; returns the output path."""
    layout = _LAYOUTS[spec.figure]
    fig = layout(spec)
    spec.output.parent.mkdir(parents=True, exist_ok=True)
    # strip the version-carrying Software tag so bytes are reproducible
    fig.savefig(spec.output, format="png", metadata={"Software": None})
    plt.close(fig)
    return spec.output


def _variant_dirs(root: Path, preferred: tuple[str, ...]) -> list[Path]:
    found = [root / name for name in preferred if (root / name).is_dir()]
    if not found:
        found = sorted(p for p in root.iterdir() if p.is_dir())
    if not found:
        raise EmptyDataError(f"{root}: no run directories to plot")
    return found


def _set_scales(ax, spec: FigureSpec, x_default: str, y_default: str) -> None:
    ax.set_xscale(spec.x_scale or x_default)
    ax.set_yscale(spec.y_scale or y_default)


def _final_losses(raw_rows: list[dict], estimator: str, metric: str) -> dict[int, float]:
    final_k = max(row["k"] for row in raw_rows)
    return {
        row["trial"]: row[metric]
        for row in raw_rows
        if row["k"] == final_k and row["estimator"] == estimator and row[metric] is not None
    }


def _fig1(spec: FigureSpec):
    """Scatter of achieved vs best-achievable distinguishability per shot count."""
    fig, ax = plt.subplots(figsize=(4.2, 4.2))
    for color, variant in zip(SERIES_COLORS, _variant_dirs(spec.input_dir, ())):
        raw = read_raw(variant / "raw.csv")
        sidecar = read_sidecar(variant / "run.json")
        closest = {
            entry["trial"]: entry["closest_pure_distance"]
            for entry in sidecar["trials"]
            if entry.get("closest_pure_distance") is not None
        }
        if not closest:
            raise SchemaError(f"{variant / 'run.json'}: missing field 'closest_pure_distance'")
        achieved = _final_losses(raw, "sgqt", "trace_distance")
        trials = sorted(set(closest) & set(achieved))
        ax.scatter(
            [closest[t] for t in trials],
            [achieved[t] for t in trials],
            s=8,
            color=color,
            label=variant.name,
        )
    limit = max(ax.get_xlim()[1], ax.get_ylim()[1])
    ax.plot([0, limit], [0, limit], color="#888888", lw=0.8, zorder=0)
    _set_scales(ax, spec, "linear", "linear")
    ax.set_xlabel("closest pure-state trace distance")
    ax.set_ylabel("designer-estimate trace distance")
    ax.legend()
    fig.tight_layout()
    return fig


def _quantile_panels(spec: FigureSpec, preferred=("pure", "mixed")):
    """Median infidelity with 16-84% bands per estimator, one panel per run."""
    variants = _variant_dirs(spec.input_dir, preferred)
    fig, axes = plt.subplots(
        len(variants), 1, figsize=(5.0, 3.0 * len(variants)), squeeze=False
    )
    for ax, variant in zip(axes[:, 0], variants):
        table = read_aggregates(variant / "aggregates.csv")
        estimators = sorted(
            {row["estimator"] for row in table if row["estimator"] != "run"}
        )
        for name in estimators:
            rows = [
                row
                for row in table
                if row["estimator"] == name
                and row["metric"] == "infidelity"
                and row["median"] is not None
            ]
            if not rows:
                continue
            rows.sort(key=lambda r: r["shots"])
            shots = np.array([r["shots"] for r in rows])
            color = estimator_color(name)
            ax.fill_between(
                shots,
                [r["q16"] for r in rows],
                [r["q84"] for r in rows],
                color=color,
                alpha=0.2,
                linewidth=0,
            )
            ax.plot(shots, [r["median"] for r in rows], color=color, label=name)
        _set_scales(ax, spec, "log", "log")
        ax.set_xlabel("cumulative shots")
        ax.set_ylabel("infidelity")
        ax.set_title(variant.name)
        ax.legend()
    fig.tight_layout()
    return fig


def _fig3(spec: FigureSpec):
    """Kernel densities of the final losses, Scott's-rule Gaussian kernels."""
    variants = _variant_dirs(spec.input_dir, ("pure", "mixed"))
    metrics = ("infidelity", "quadratic_loss")
    fig, axes = plt.subplots(
        len(metrics),
        len(variants),
        figsize=(4.0 * len(variants), 2.8 * len(metrics)),
        squeeze=False,
    )
    for col, variant in enumerate(variants):
        raw = read_raw(variant / "raw.csv")
        estimators = sorted({row["estimator"] for row in raw})
        for row_idx, metric in enumerate(metrics):
            ax = axes[row_idx][col]
            for name in estimators:
                values = np.array(
                    [v for v in _final_losses(raw, name, metric).values() if v > 0]
                )
                if values.size == 0:
                    continue
                logs = np.log10(values)
                color = estimator_color(name)
                if logs.size < 2 or logs.std() < 1e-12:
                    ax.axvline(logs.mean(), color=color, label=name)
                    continue
                kde = stats.gaussian_kde(logs, bw_method="scott")
                grid = np.linspace(logs.min() - 0.5, logs.max() + 0.5, 400)
                ax.plot(grid, kde(grid), color=color, label=name)
            _set_scales(ax, spec, "linear", "linear")
            ax.set_xlabel(f"log10 {metric.replace('_', ' ')}")
            ax.set_ylabel("density")
            ax.set_title(variant.name)
            ax.legend()
    fig.tight_layout()
    return fig


def _fig6(spec: FigureSpec):
    """Postselection panels: loss density, mean vs median, acceptance probability."""
    variants = _variant_dirs(spec.input_dir, ("qutrit", "twoqubit"))
    fig, axes = plt.subplots(
        len(variants), 3, figsize=(10.5, 3.0 * len(variants)), squeeze=False
    )
    for row_idx, variant in enumerate(variants):
        raw = read_raw(variant / "raw.csv")
        sweep = read_postselect(variant / "postselect.csv")
        losses = np.array([v for v in _final_losses(raw, "bme", "infidelity").values() if v > 0])
        ax = axes[row_idx][0]
        if losses.size >= 2 and np.log10(losses).std() > 1e-12:
            logs = np.log10(losses)
            kde = stats.gaussian_kde(logs, bw_method="scott")
            grid = np.linspace(logs.min() - 0.5, logs.max() + 0.5, 400)
            ax.plot(grid, kde(grid), color=SERIES_COLORS[0])
        else:
            ax.axvline(np.log10(losses).mean() if losses.size else 0.0, color=SERIES_COLORS[0])
        ax.set_xlabel("log10 infidelity")
        ax.set_ylabel("density")
        ax.set_title(variant.name)

        thresholds = [entry["n_th"] for entry in sweep]
        ax = axes[row_idx][1]
        ax.plot(
            thresholds,
            [entry["mean_infidelity"] for entry in sweep],
            color=SERIES_COLORS[1],
            label="mean",
        )
        ax.plot(
            thresholds,
            [entry["median_infidelity"] for entry in sweep],
            color=SERIES_COLORS[2],
            label="median",
        )
        ax.set_yscale(spec.y_scale or "log")
        ax.set_xlabel("postselection threshold")
        ax.set_ylabel("accepted infidelity")
        ax.legend()

        ax = axes[row_idx][2]
        ax.plot(
            thresholds,
            [entry["acceptance_probability"] for entry in sweep],
            color=SERIES_COLORS[3],
        )
        ax.set_ylim(0, 1.05)
        ax.set_xlabel("postselection threshold")
        ax.set_ylabel("acceptance probability")
    fig.tight_layout()
    return fig


def _fig7(spec: FigureSpec):
    """Design-matrix condition number growth per measurement model."""
    fig, ax = plt.subplots(figsize=(4.6, 3.4))
    for color, variant in zip(SERIES_COLORS, _variant_dirs(spec.input_dir, ("d2", "d3", "d4product"))):
        table = read_aggregates(variant / "aggregates.csv")
        rows = [
            row
            for row in table
            if row["estimator"] == "run"
            and row["metric"] == "cond_number"
            and row["median"] is not None
            and np.isfinite(row["median"])
        ]
        rows.sort(key=lambda r: r["k"])
        if not rows:
            continue
        ax.plot(
            [2 * r["k"] for r in rows],
            [r["median"] for r in rows],
            color=color,
            label=variant.name,
        )
    _set_scales(ax, spec, "log", "log")
    ax.set_xlabel("measurement rows")
    ax.set_ylabel("condition number (median)")
    ax.legend()
    fig.tight_layout()
    return fig


_LAYOUTS = {
    "fig1": _fig1,
    "fig2": _quantile_panels,
    "fig3": _fig3,
    "fig4": _quantile_panels,
    "fig5": _quantile_panels,
    "fig6": _fig6,
    "fig7": _fig7,
}
