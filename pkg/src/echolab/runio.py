"""CSV and manifest serialization.

Floats are written with 17 significant digits so values round-trip exactly
and repeated runs of the same configuration produce byte-identical files.
"""

from __future__ import annotations

import math
from pathlib import Path

import numpy as np

SERIES_COLUMNS = ["t", "F", "F2", "FR", "FR2", "I", "F2_pred", "FR2_pred", "I_pred"]
LEDGER_COLUMNS = ["t", "C", "CmD", "CmDmE", "C_over_2t", "CmD_over_2t", "CmDmE_over_2t"]


def fmt(x) -> str:
    if x is None:
        return "nan"
    x = float(x)
    if math.isnan(x):
        return "nan"
    return format(x, ".17g")


def write_series_csv(path, series, predicted=None) -> None:
    """One row per kick: measured F, F^2, FR, FR^2, I plus predicted curves."""
    n = len(series.t)
    if predicted is None:
        nan = np.full(n, np.nan)
        p_f2, p_fr2, p_i = nan, nan, nan
    else:
        if len(predicted.t) < n:
            raise ValueError("predicted series is shorter than the measured one")
        p_f2, p_fr2, p_i = predicted.F2[:n], predicted.FR2[:n], predicted.I[:n]
    f2, fr2 = series.F2, series.FR2
    lines = [",".join(SERIES_COLUMNS)]
    for k in range(n):
        lines.append(
            ",".join(
                [
                    str(int(series.t[k])),
                    fmt(series.F[k]),
                    fmt(f2[k]),
                    fmt(series.FR[k]),
                    fmt(fr2[k]),
                    fmt(series.I[k]),
                    fmt(p_f2[k]),
                    fmt(p_fr2[k]),
                    fmt(p_i[k]),
                ]
            )
        )
    Path(path).write_text("\n".join(lines) + "\n")


def read_series_csv(path) -> dict[str, np.ndarray]:
    text = Path(path).read_text().strip().splitlines()
    header = text[0].split(",")
    if header != SERIES_COLUMNS:
        raise ValueError(f"unexpected series header {header!r}")
    rows = [line.split(",") for line in text[1:]]
    data = np.array(rows, dtype=float)
    return {name: data[:, k] for k, name in enumerate(SERIES_COLUMNS)}


def write_ledger_csv(path, ledger) -> None:
    """Assembled sums and their per-step slopes; the t = 0 slopes are nan."""
    C, D, E = ledger.C, ledger.D, ledger.E
    lines = [",".join(LEDGER_COLUMNS)]
    for t in range(len(C)):
        cmd = C[t] - D[t]
        cmdme = cmd - E[t]
        if t == 0:
            slopes = [float("nan")] * 3
        else:
            slopes = [C[t] / (2.0 * t), cmd / (2.0 * t), cmdme / (2.0 * t)]
        lines.append(
            ",".join([str(t), fmt(C[t]), fmt(cmd), fmt(cmdme)] + [fmt(s) for s in slopes])
        )
    Path(path).write_text("\n".join(lines) + "\n")


def write_rows_csv(path, columns: list[str], rows: list[dict]) -> None:
    lines = [",".join(columns)]
    for row in rows:
        cells = []
        for col in columns:
            value = row.get(col)
            cells.append(str(value) if isinstance(value, (int, str)) else fmt(value))
        lines.append(",".join(cells))
    Path(path).write_text("\n".join(lines) + "\n")


def write_manifest(path, entries: dict) -> None:
    """Plain ``key = value`` lines, one per entry, in the given order."""
    lines = []
    for key, value in entries.items():
        if isinstance(value, float):
            value = fmt(value)
        lines.append(f"{key} = {value}")
    Path(path).write_text("\n".join(lines) + "\n")


def read_manifest(path) -> dict[str, str]:
    out: dict[str, str] = {}
    for line in Path(path).read_text().splitlines():
        line = line.strip()
        if not line or line.startswith("#"):
            continue
        key, _, value = line.partition("=")
        out[key.strip()] = value.strip()
    return out
