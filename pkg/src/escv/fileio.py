"""CSV and result-document reading/writing.

All floats are written with 17 significant digits so every output file
round-trips to the in-memory value exactly.
"""

from __future__ import annotations

import csv
import math
from pathlib import Path

import numpy as np

from .errors import DataError

__all__ = [
    "fmt",
    "read_design_csv",
    "write_curve_csv",
    "write_curves_csv",
    "write_result_document",
    "write_report_csv",
    "write_alignment_csv",
    "write_spread_csv",
]


def fmt(x) -> str:
    """Shortest exact decimal form of a float (17 significant digits)."""
    return format(float(x), ".17g")


def _parse_cell(raw: str, row: int, col: int) -> float:
    try:
        value = float(raw)
    except ValueError:
        raise DataError(f"row {row}, column {col}: not numeric: {raw!r}") from None
    if not math.isfinite(value):
        raise DataError(f"row {row}, column {col}: non-finite value {raw!r}")
    return value


def read_design_csv(path, y_col: str | None = None,
                    header: bool = True) -> tuple[np.ndarray, np.ndarray, list[str], str]:
    """Read a regression CSV into (x, y, feature_names, response_name).

    The response column is picked by name (requires a header), by
    integer index, or defaults to the last column. Rows must be fully
    numeric and rectangular; violations raise
    :class:`~escv.errors.DataError` naming the offending cell.
    """
    path = Path(path)
    with path.open(newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        rows = [row for row in reader if row]
    if not rows:
        raise DataError(f"{path}: empty file")
    if header:
        names = [c.strip() for c in rows[0]]
        data_rows = rows[1:]
        first_data_row = 2
    else:
        names = [f"x{j}" for j in range(len(rows[0]))]
        data_rows = rows
        first_data_row = 1
    n_cols = len(names)
    if n_cols < 2:
        raise DataError(f"{path}: need at least 2 columns (features + response)")
    if not data_rows:
        raise DataError(f"{path}: no data rows")
    matrix = np.empty((len(data_rows), n_cols))
    for i, row in enumerate(data_rows):
        if len(row) != n_cols:
            raise DataError(f"row {first_data_row + i}: expected {n_cols} "
                            f"cells, got {len(row)}")
        for j, cell in enumerate(row):
            matrix[i, j] = _parse_cell(cell.strip(), first_data_row + i, j + 1)
    y_idx = _resolve_response(y_col, names, header)
    y = matrix[:, y_idx]
    x = np.delete(matrix, y_idx, axis=1)
    feature_names = [nm for j, nm in enumerate(names) if j != y_idx]
    return x, y, feature_names, names[y_idx]


def _resolve_response(y_col: str | None, names: list[str], header: bool) -> int:
    if y_col is None:
        return len(names) - 1
    try:
        idx = int(y_col)
    except ValueError:
        if not header:
            raise DataError("response selected by name requires a header row") from None
        if y_col not in names:
            raise DataError(f"no column named {y_col!r}; columns are {names}") from None
        return names.index(y_col)
    if not 0 <= idx < len(names):
        raise DataError(f"response index {idx} out of range for {len(names)} columns")
    return idx


def write_curve_csv(path, curve) -> None:
    """One criterion curve as (index_value, criterion_value, defined_flag)."""
    with Path(path).open("w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(["index_value", "criterion_value", "defined_flag"])
        for xv, val, ok in zip(curve.grid.values, curve.values, curve.defined):
            writer.writerow([fmt(xv), fmt(val), int(ok)])


def write_curves_csv(path, grid, sample_variance, es, cv_error,
                     markers: dict[str, float]) -> None:
    """Combined stability/cv curves over the shared grid, plus one marker
    row per selected point (marker column holds the method name)."""
    with Path(path).open("w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(["tau", "sample_variance", "es", "cv_error",
                         "es_defined", "marker"])
        es_def = es.defined
        for i, tau in enumerate(grid.values):
            writer.writerow([fmt(tau), fmt(sample_variance.values[i]),
                             fmt(es.values[i]), fmt(cv_error.values[i]),
                             int(es_def[i]), ""])
        for method, tau in markers.items():
            writer.writerow([fmt(tau), "", "", "", "", method])


def write_result_document(path, *, meta: dict, sections: list[tuple[str, dict, np.ndarray, list[str]]]) -> None:
    """Key/value result document with one block per method.

    Each section is (method, fields, coefficients, feature_names); the
    coefficient list is written one feature per line.
    """
    lines = ["# escv selection results"]
    for key, value in meta.items():
        lines.append(f"{key} = {_doc_value(value)}")
    for method, fields, coefs, names in sections:
        lines.append("")
        lines.append(f"[method {method}]")
        for key, value in fields.items():
            lines.append(f"{key} = {_doc_value(value)}")
        for name, c in zip(names, coefs):
            lines.append(f"coef {name} = {fmt(c)}")
    Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")


def _doc_value(value) -> str:
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, float):
        return fmt(value)
    if isinstance(value, (list, tuple)):
        return ",".join(str(v) for v in value)
    return str(value)


_REPORT_FIELDS = ["design", "rho", "sigma", "n", "p", "method", "metric",
                  "mean", "se"]
_ALIGN_FIELDS = ["design", "rho", "sigma", "n", "p", "alignment", "metric",
                 "mean", "se"]


def _write_rows(path, fieldnames, rows) -> None:
    with Path(path).open("w", newline="", encoding="utf-8") as fh:
        writer = csv.DictWriter(fh, fieldnames=fieldnames)
        writer.writeheader()
        for row in rows:
            out = dict(row)
            for key in ("rho", "sigma", "mean", "se"):
                if key in out:
                    out[key] = fmt(out[key])
            writer.writerow(out)


def write_report_csv(path, report) -> None:
    """Aggregate experiment report, one row per scenario/method/metric."""
    _write_rows(path, _REPORT_FIELDS, report.to_rows())


def write_alignment_csv(path, report) -> None:
    """Alignment benchmark report, one row per scenario/alignment."""
    _write_rows(path, _ALIGN_FIELDS, report.to_rows())


def write_spread_csv(path, summary) -> None:
    """Bootstrap saturated-norm spread: decile summary then raw values."""
    with Path(path).open("w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(["quantile", "max_l1_norm"])
        for q, val in zip(np.linspace(0.0, 1.0, 11), summary.deciles):
            writer.writerow([fmt(q), fmt(val)])
        writer.writerow([])
        writer.writerow(["sample", "max_l1_norm"])
        for i, val in enumerate(summary.max_taus):
            writer.writerow([i, fmt(val)])
