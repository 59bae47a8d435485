"""CSV ingestion and export, and a minimal SVG line chart."""

from __future__ import annotations

import csv
import io
import math
from pathlib import Path
from typing import Optional, Sequence

import numpy as np

from heterour.core import TimeSeries

__all__ = ["CsvFormatError", "read_series", "parse_series", "write_series", "write_volatility", "volatility_svg"]


class CsvFormatError(ValueError):
    pass


def _is_number(text: str) -> bool:
    try:
        float(text)
    except ValueError:
        return False
    return True


def parse_series(text: str) -> TimeSeries:
    """Parse CSV text into a series.

    A header row is optional. With a header the ``value`` column is used
    (``date`` or ``t`` become labels); without one the last column holds the
    values and a leading column, if any, the labels.
    """
    rows = [r for r in csv.reader(io.StringIO(text)) if r and any(c.strip() for c in r)]
    if not rows:
        raise CsvFormatError("no data rows")
    header = [c.strip().lower() for c in rows[0]]
    value_col, label_col = len(header) - 1, None
    if not _is_number(rows[0][-1]):
        if "value" not in header:
            raise CsvFormatError("header has no 'value' column")
        value_col = header.index("value")
        for name in ("date", "t"):
            if name in header:
                label_col = header.index(name)
                break
        rows = rows[1:]
    elif len(header) > 1:
        label_col = 0
    values, labels = [], []
    for lineno, row in enumerate(rows, start=1):
        try:
            values.append(float(row[value_col]))
        except (IndexError, ValueError):
            raise CsvFormatError(f"row {lineno}: cannot parse a value from {row!r}") from None
        if label_col is not None:
            labels.append(row[label_col].strip())
    if not values:
        raise CsvFormatError("no data rows")
    arr = np.array(values, dtype=np.float64)
    if not np.all(np.isfinite(arr)):
        raise CsvFormatError("non-finite value in input")
    return TimeSeries(arr, tuple(labels) if label_col is not None else None)


def read_series(path: str | Path) -> TimeSeries:
    try:
        text = Path(path).read_text()
    except (OSError, UnicodeDecodeError) as exc:
        raise CsvFormatError(str(exc)) from None
    return parse_series(text)


def _fmt(x: float) -> str:
    return repr(float(x))


def write_series(path: str | Path, values: Sequence[float]) -> None:
    """Write ``t,value`` rows with round-trip float formatting."""
    lines = ["t,value"] + [f"{t},{_fmt(v)}" for t, v in enumerate(values, start=1)]
    Path(path).write_text("\n".join(lines) + "\n")


def write_volatility(path: str | Path, sigma: Sequence[float], offset: int = 1) -> None:
    """Write ``t,sigma_hat``; ``offset`` is the index of the first residual."""
    lines = ["t,sigma_hat"] + [f"{t},{_fmt(v)}" for t, v in enumerate(sigma, start=offset)]
    Path(path).write_text("\n".join(lines) + "\n")


def volatility_svg(
    sigma: Sequence[float],
    offset: int = 1,
    title: str = "Nonparametric volatility estimate",
    width: int = 640,
    height: int = 320,
) -> str:
    """Line chart of the volatility path against time as an SVG document."""
    s = np.asarray(sigma, dtype=np.float64)
    left, right, top, bottom = 60, 20, 30, 40
    pw, ph = width - left - right, height - top - bottom
    t0, t1 = offset, offset + len(s) - 1
    lo, hi = float(s.min()), float(s.max())
    if hi - lo < 1e-12 * max(1.0, abs(hi)):
        lo, hi = lo - 0.5, hi + 0.5

    def px(t: float) -> float:
        return left + (t - t0) / max(t1 - t0, 1) * pw

    def py(v: float) -> float:
        return top + (hi - v) / (hi - lo) * ph

    pts = " ".join(f"{px(t):.2f},{py(v):.2f}" for t, v in zip(range(t0, t1 + 1), s))
    ticks = []
    for v in np.linspace(lo, hi, 5):
        y = py(v)
        ticks.append(
            f'<line x1="{left - 4}" y1="{y:.2f}" x2="{left}" y2="{y:.2f}" stroke="black"/>'
            f'<text x="{left - 6}" y="{y + 4:.2f}" font-size="10" text-anchor="end">{v:.3g}</text>'
        )
    step = max(1, 10 ** int(math.log10(max(t1 - t0, 1))))
    for t in range(-(-t0 // step) * step, t1 + 1, step):
        x = px(t)
        ticks.append(
            f'<line x1="{x:.2f}" y1="{top + ph}" x2="{x:.2f}" y2="{top + ph + 4}" stroke="black"/>'
            f'<text x="{x:.2f}" y="{top + ph + 16}" font-size="10" text-anchor="middle">{t}</text>'
        )
    return (
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}" '
        f'viewBox="0 0 {width} {height}">\n'
        f'<rect width="{width}" height="{height}" fill="white"/>\n'
        f'<text x="{width / 2:.1f}" y="18" font-size="13" text-anchor="middle">{title}</text>\n'
        f'<rect x="{left}" y="{top}" width="{pw}" height="{ph}" fill="none" stroke="black"/>\n'
        + "\n".join(ticks)
        + f'\n<polyline fill="none" stroke="steelblue" stroke-width="1.5" points="{pts}"/>\n'
        f'<text x="{left + pw / 2:.1f}" y="{height - 6}" font-size="11" text-anchor="middle">t</text>\n'
        "</svg>\n"
    )
