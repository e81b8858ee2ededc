"""CSV readers and writers.  Numbers are written with 17 significant digits."""

from __future__ import annotations

import csv
from collections.abc import Iterable, Mapping, Sequence

import numpy as np

from .errors import InputError
from .model import Path

FLOAT_FMT = "%.17g"


def _fmt(x) -> str:
    if isinstance(x, (float, np.floating)):
        return FLOAT_FMT % x
    return str(x)


def write_rows(file, header: Sequence[str], rows: Iterable[Sequence]) -> None:
    with open(file, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(header)
        for row in rows:
            w.writerow([_fmt(x) for x in row])


def write_records(file, records: Sequence[Mapping]) -> None:
    """Write dicts sharing the keys of the first record."""
    if not records:
        raise InputError("nothing to write")
    header = list(records[0])
    write_rows(file, header, ([r[h] for h in header] for r in records))


def write_path(file, path: Path) -> None:
    """``t,q,p`` (or ``t,q`` if the rough component is absent)."""
    cols = [path.t, path.Q] + ([path.P] if path.P is not None else [])
    header = ["t", "q", "p"][: len(cols)]
    write_rows(file, header, zip(*cols))


def read_table(file) -> dict[str, np.ndarray]:
    """Read a headed numeric CSV into column arrays."""
    with open(file, newline="") as fh:
        rows = list(csv.reader(fh))
    rows = [r for r in rows if r and not r[0].startswith("#")]
    if len(rows) < 2:
        raise InputError(f"{file}: expected a header row and data")
    header = [h.strip() for h in rows[0]]
    try:
        data = np.array([[float(x) for x in r] for r in rows[1:]], dtype=float)
    except ValueError as exc:
        raise InputError(f"{file}: non-numeric entry ({exc})") from exc
    if data.ndim != 2 or data.shape[1] != len(header):
        raise InputError(f"{file}: ragged rows")
    return {h: data[:, i] for i, h in enumerate(header)}
