"""Readers for the harness CSV/JSON products, with named-column validation."""

from __future__ import annotations

import csv
import json
from pathlib import Path

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

POSTSELECT_COLUMNS = (
    "n_th",
    "accepted",
    "acceptance_probability",
    "mean_infidelity",
    "median_infidelity",
)


class SchemaError(ValueError):
    """A required column or field is missing from an input product."""


class EmptyDataError(ValueError):
    """An input product parsed cleanly but contains no data rows."""


def _read_csv(path: Path, required: tuple[str, ...]) -> list[dict]:
    with open(path, encoding="utf-8", newline="") as fh:
        reader = csv.DictReader(fh)
        fields = reader.fieldnames or ()
        missing = [name for name in required if name not in fields]
        if missing:
            raise SchemaError(f"{path}: missing column '{missing[0]}'")
        rows = list(reader)
    if not rows:
        raise EmptyDataError(f"{path}: no data rows to plot")
    return rows


def _number(text: str) -> float | None:
    return None if text == "NA" else float(text)


def read_raw(path: str | Path) -> list[dict]:
    rows = _read_csv(Path(path), RAW_COLUMNS)
    out = []
    for row in rows:
        out.append(
            {
                "trial": int(row["trial"]),
                "k": int(row["k"]),
                "shots": int(row["shots"]),
                "estimator": row["estimator"],
                "infidelity": _number(row["infidelity"]),
                "quadratic_loss": _number(row["quadratic_loss"]),
                "trace_distance": _number(row["trace_distance"]),
                "ess": _number(row["ess"]),
                "cond_number": _number(row["cond_number"]),
            }
        )
    return out


def read_aggregates(path: str | Path) -> list[dict]:
    rows = _read_csv(Path(path), AGGREGATE_COLUMNS)
    out = []
    for row in rows:
        out.append(
            {
                "k": int(row["k"]),
                "shots": int(row["shots"]),
                "estimator": row["estimator"],
                "metric": row["metric"],
                "count": int(row["count"]),
                "mean": _number(row["mean"]),
                "median": _number(row["median"]),
                "q16": _number(row["q16"]),
                "q84": _number(row["q84"]),
            }
        )
    return out


def read_postselect(path: str | Path) -> list[dict]:
    rows = _read_csv(Path(path), POSTSELECT_COLUMNS)
    return [
        {
            "n_th": float(row["n_th"]),
            "accepted": int(row["accepted"]),
            "acceptance_probability": float(row["acceptance_probability"]),
            "mean_infidelity": _number(row["mean_infidelity"]),
            "median_infidelity": _number(row["median_infidelity"]),
        }
        for row in rows
    ]


def read_sidecar(path: str | Path) -> dict:
    path = Path(path)
    with open(path, encoding="utf-8") as fh:
        sidecar = json.load(fh)
    if "trials" not in sidecar:
        raise SchemaError(f"{path}: missing field 'trials'")
    return sidecar
