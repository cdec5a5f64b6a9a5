"""Static figures from paqt harness outputs (CSV/JSON only, no recomputation)."""

__version__ = "0.1.0"
