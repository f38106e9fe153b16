"""Deterministic number formatting shared by the CSV writers."""

from __future__ import annotations

import math
from pathlib import Path


def fmt(value) -> str:
    """Nine significant digits, ``.`` decimal separator, no locale."""
    value = float(value)
    if math.isnan(value):
        return "nan"
    if math.isinf(value):
        return "inf" if value > 0 else "-inf"
    if value == 0.0:
        return "0"  # folds -0.0
    return format(value, ".9g")


def write_text(path, text: str) -> Path:
    path = Path(path)
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(text)
    return path
