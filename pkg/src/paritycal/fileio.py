"""CSV/JSON interchange formats.

Forecast CSV (one encoding per file, declared by the header):

    t,y,mu,sigma            Gaussian rows
    t,y,q_0.025,...,q_0.975 quantile rows, columns ordered by level
    t,y,p                   direct-probability rows

Records CSV: ``t,p_raw,p_cal,outcome``. Diagram CSV:
``bin_lo,bin_hi,pred_avg,obs_avg,count``. Floats are serialized with 17
significant digits so write-then-read round-trips bit-for-bit. All files
are UTF-8 with LF line endings.
"""

from __future__ import annotations

import csv
import json
import math
from pathlib import Path
from typing import Sequence

import numpy as np

from .decision import DEFAULT_LOSS_MATRIX, LossMatrix, PolicyResult
from .distributions import (
    DirectProbability,
    ForecastDistribution,
    Gaussian,
    ParityRecord,
    QuantileSet,
)
from .errors import ParseError, ValidationError
from .metrics import MetricsReport, ReliabilityDiagram

# Canonical seven-level grid used by epidemic-forecast quantile submissions.
SEVEN_LEVEL_GRID = (0.025, 0.1, 0.25, 0.5, 0.75, 0.9, 0.975)


def _fmt(x: float) -> str:
    return format(float(x), ".17g")


def _parse_float(text: str, line: int, column: str) -> float:
    try:
        return float(text)
    except ValueError:
        raise ParseError(f"column {column!r}: {text!r} is not a number", line=line) from None


def _parse_int(text: str, line: int, column: str) -> int:
    try:
        return int(text)
    except ValueError:
        raise ParseError(f"column {column!r}: {text!r} is not an integer", line=line) from None


# ---------------------------------------------------------------------------
# forecast files
# ---------------------------------------------------------------------------


def write_forecast_csv(
    path: str | Path, forecasts: Sequence[ForecastDistribution], outcomes: Sequence[float]
) -> None:
    """Write a homogeneous forecast stream; the encoding follows the variant."""
    if len(forecasts) != len(outcomes):
        raise ValidationError("forecasts and outcomes must have equal length")
    if len(forecasts) < 2:
        raise ValidationError("forecast files need at least two rows")
    first = forecasts[0]
    if not all(type(f) is type(first) for f in forecasts):
        raise ValidationError("forecast files hold exactly one encoding")

    with open(path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        if isinstance(first, Gaussian):
            writer.writerow(["t", "y", "mu", "sigma"])
            for t, (f, y) in enumerate(zip(forecasts, outcomes), start=1):
                writer.writerow([t, _fmt(y), _fmt(f.mu), _fmt(f.sigma)])
        elif isinstance(first, QuantileSet):
            levels = first.levels
            if not all(f.levels == levels for f in forecasts):
                raise ValidationError("all quantile rows must share one level grid")
            writer.writerow(["t", "y"] + [f"q_{lv!r}" for lv in levels])
            for t, (f, y) in enumerate(zip(forecasts, outcomes), start=1):
                writer.writerow([t, _fmt(y)] + [_fmt(v) for v in f.values])
        elif isinstance(first, DirectProbability):
            writer.writerow(["t", "y", "p"])
            for t, (f, y) in enumerate(zip(forecasts, outcomes), start=1):
                writer.writerow([t, _fmt(y), _fmt(f.p)])
        else:
            raise ValidationError(
                f"{type(first).__name__} has no CSV encoding; summarize it as a "
                "QuantileSet first"
            )


def ingest(path: str | Path) -> tuple[list[ForecastDistribution], np.ndarray]:
    """Read a forecast CSV into distributions plus the observed series."""
    path = Path(path)
    if not path.exists():
        raise ValidationError(f"input file does not exist: {path}")
    with open(path, encoding="utf-8", newline="") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise ParseError("file is empty", line=1) from None
        header = [h.strip() for h in header]
        if header[:2] != ["t", "y"]:
            raise ParseError(f"header must start with 't,y', got {header}", line=1)
        tail = header[2:]

        if tail == ["mu", "sigma"]:
            kind = "gaussian"
        elif tail == ["p"]:
            kind = "direct"
        elif tail and all(c.startswith("q_") for c in tail):
            kind = "quantiles"
            try:
                levels = tuple(float(c[2:]) for c in tail)
            except ValueError:
                raise ParseError(f"malformed quantile column in header: {tail}", line=1) from None
            if not all(a < b for a, b in zip(levels, levels[1:])):
                raise ValidationError("quantile columns must be ordered by level")
        else:
            raise ParseError(
                f"unrecognized forecast encoding {tail}; expected mu,sigma / p / q_* columns",
                line=1,
            )

        forecasts: list[ForecastDistribution] = []
        outcomes: list[float] = []
        prev_t: int | None = None
        for line, row in enumerate(reader, start=2):
            if not row:
                continue
            if len(row) != len(header):
                raise ParseError(
                    f"expected {len(header)} fields, got {len(row)}", line=line
                )
            t = _parse_int(row[0], line, "t")
            if prev_t is not None and t <= prev_t:
                raise ValidationError(f"line {line}: timestep t must be strictly increasing")
            prev_t = t
            y = _parse_float(row[1], line, "y")
            if not math.isfinite(y):
                raise ValidationError(f"line {line}: y must be finite")
            try:
                if kind == "gaussian":
                    dist: ForecastDistribution = Gaussian(
                        _parse_float(row[2], line, "mu"), _parse_float(row[3], line, "sigma")
                    )
                elif kind == "direct":
                    dist = DirectProbability(_parse_float(row[2], line, "p"))
                else:
                    values = tuple(
                        _parse_float(v, line, c) for v, c in zip(row[2:], tail)
                    )
                    dist = QuantileSet(levels, values)
            except ValidationError as exc:
                raise ValidationError(f"line {line}: {exc}") from None
            forecasts.append(dist)
            outcomes.append(y)

    if len(forecasts) < 2:
        raise ValidationError("forecast files need at least two rows")
    return forecasts, np.array(outcomes)


# ---------------------------------------------------------------------------
# record files
# ---------------------------------------------------------------------------

_RECORD_HEADER = ["t", "p_raw", "p_cal", "outcome"]


def write_records_csv(path: str | Path, records: Sequence[ParityRecord]) -> None:
    with open(path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(_RECORD_HEADER)
        for r in records:
            writer.writerow([r.t, _fmt(r.p_raw), _fmt(r.p_cal), r.outcome])


def read_records_csv(path: str | Path) -> list[ParityRecord]:
    path = Path(path)
    if not path.exists():
        raise ValidationError(f"input file does not exist: {path}")
    records = []
    with open(path, encoding="utf-8", newline="") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise ParseError("file is empty", line=1) from None
        if [h.strip() for h in header] != _RECORD_HEADER:
            raise ParseError(f"expected header {_RECORD_HEADER}, got {header}", line=1)
        for line, row in enumerate(reader, start=2):
            if not row:
                continue
            if len(row) != 4:
                raise ParseError(f"expected 4 fields, got {len(row)}", line=line)
            try:
                records.append(
                    ParityRecord(
                        t=_parse_int(row[0], line, "t"),
                        p_raw=_parse_float(row[1], line, "p_raw"),
                        p_cal=_parse_float(row[2], line, "p_cal"),
                        outcome=_parse_int(row[3], line, "outcome"),
                    )
                )
            except ValidationError as exc:
                raise ValidationError(f"line {line}: {exc}") from None
    if not records:
        raise ValidationError("records file holds no rows")
    return records


# ---------------------------------------------------------------------------
# diagrams, metrics, policies, loss matrices
# ---------------------------------------------------------------------------


def write_diagram_csv(path: str | Path, diagram: ReliabilityDiagram) -> None:
    """Interval bins write their edges; level-grid bins repeat the level."""
    interval = len(diagram.edges) == len(diagram.bins) + 1
    with open(path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["bin_lo", "bin_hi", "pred_avg", "obs_avg", "count"])
        for m, b in enumerate(diagram.bins):
            lo = diagram.edges[m]
            hi = diagram.edges[m + 1] if interval else diagram.edges[m]
            pred = "" if b.empty else _fmt(b.pred_avg)
            obs = "" if b.empty else _fmt(b.obs_avg)
            writer.writerow([_fmt(lo), _fmt(hi), pred, obs, b.count])


def write_metrics_json(path: str | Path, report: MetricsReport) -> None:
    with open(path, "w", encoding="utf-8", newline="") as fh:
        json.dump(report.to_dict(), fh, indent=2)
        fh.write("\n")


def write_policy_json(path: str | Path, result: PolicyResult) -> None:
    doc = {
        "cumulative_loss": result.cumulative_loss,
        "action_counts": {
            "tight": result.action_counts[0],
            "mild": result.action_counts[1],
            "none": result.action_counts[2],
        },
        "actions": [a.name.lower() for a in result.actions],
    }
    with open(path, "w", encoding="utf-8", newline="") as fh:
        json.dump(doc, fh, indent=2)
        fh.write("\n")


def read_loss_matrix(spec: str | Path) -> LossMatrix:
    """'paper' selects the built-in table; otherwise a 2x3 CSV or JSON file."""
    if str(spec) == "paper":
        return DEFAULT_LOSS_MATRIX
    path = Path(spec)
    if not path.exists():
        raise ValidationError(f"loss matrix file does not exist: {path}")
    if path.suffix.lower() == ".json":
        try:
            doc = json.loads(path.read_text(encoding="utf-8"))
        except json.JSONDecodeError as exc:
            raise ParseError(f"invalid JSON in {path}: {exc}", line=exc.lineno) from None
        if not (isinstance(doc, list) and len(doc) == 2):
            raise ParseError("loss JSON must be a 2-row array of 3 numbers each", line=1)
        return LossMatrix(increase=tuple(doc[0]), decrease=tuple(doc[1]))
    rows = []
    with open(path, encoding="utf-8", newline="") as fh:
        for line, row in enumerate(csv.reader(fh), start=1):
            if not row:
                continue
            if len(row) != 3:
                raise ParseError(f"expected 3 loss values, got {len(row)}", line=line)
            rows.append(tuple(_parse_float(v, line, f"col{i+1}") for i, v in enumerate(row)))
    if len(rows) != 2:
        raise ParseError(f"expected 2 loss rows, got {len(rows)}", line=1)
    return LossMatrix(increase=rows[0], decrease=rows[1])
