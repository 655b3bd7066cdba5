"""Deterministic CSV output shared by all modules."""

from __future__ import annotations

import os
from collections.abc import Iterable, Sequence


def format_value(x, precision: int = 12) -> str:
    if isinstance(x, str):
        return x
    if isinstance(x, (int,)) and not isinstance(x, bool):
        return str(x)
    return f"{float(x):.{precision}g}"


def write_csv(path, header: Sequence[str], rows: Iterable[Sequence], precision: int = 12) -> None:
    """Write rows with fixed significant-digit formatting (byte-reproducible)."""
    path = os.fspath(path)
    parent = os.path.dirname(path)
    if parent:
        os.makedirs(parent, exist_ok=True)
    with open(path, "w", newline="\n") as fh:
        fh.write(",".join(header) + "\n")
        for row in rows:
            fh.write(",".join(format_value(x, precision) for x in row) + "\n")
