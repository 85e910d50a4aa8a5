"""Number formatting shared by the CSV and JSON writers."""

from __future__ import annotations


def fmt_float(x: float) -> str:
    """Shortest round-trip text for ``x`` after rounding to 12 significant digits."""
    return repr(float(f"{float(x):.12g}"))


def round12(x: float) -> float:
    return float(f"{float(x):.12g}")
