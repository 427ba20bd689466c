"""Reliability diagrams and the scalar scores built on them.

Parity diagnostics bin predicted probabilities into fixed-width bins
(default 30, last bin closed on the right) and compare per-bin average
prediction against empirical outcome frequency. Quantile diagnostics sweep
an inclusive equi-spaced grid of levels (default 100 on [0, 1]) and compare
each level against the empirical coverage of the corresponding predictive
quantile. Both reuse the same diagram container.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np
from scipy.stats import rankdata

from .distributions import DirectProbability, ForecastDistribution, ParityRecord, quantile_eval
from .errors import UndefinedMetricError, UnsupportedVariantError, ValidationError


@dataclass(frozen=True)
class DiagramBin:
    """Per-bin (average prediction, average outcome, count); NaN when empty."""

    pred_avg: float
    obs_avg: float
    count: int

    @property
    def empty(self) -> bool:
        return self.count == 0


@dataclass(frozen=True)
class ReliabilityDiagram:
    bins: tuple[DiagramBin, ...]
    edges: tuple[float, ...]
    total: int


@dataclass(frozen=True)
class MetricsReport:
    """The scalar scores; ``qce`` is None when no forecast cdfs were given."""

    qce: float | None
    pce: float
    sharp: float
    acc: float
    auroc: float

    def to_dict(self) -> dict[str, float]:
        out = {} if self.qce is None else {"qce": self.qce}
        out.update(pce=self.pce, sharp=self.sharp, acc=self.acc, auroc=self.auroc)
        return out


def _probs(records: Sequence[ParityRecord], use_calibrated: bool) -> np.ndarray:
    if not records:
        raise ValidationError("record set must be non-empty")
    field = "p_cal" if use_calibrated else "p_raw"
    return np.array([getattr(r, field) for r in records])


def _outcomes(records: Sequence[ParityRecord]) -> np.ndarray:
    return np.array([float(r.outcome) for r in records])


def parity_reliability(
    records: Sequence[ParityRecord], n_bins: int = 30, use_calibrated: bool = True
) -> ReliabilityDiagram:
    """Fixed-width-bin reliability diagram of the parity probabilities.

    Bins are [ (m-1)/n, m/n ) with the last bin closed; a probability on an
    edge lands in the right bin.
    """
    if n_bins < 1:
        raise ValidationError(f"n_bins must be >= 1, got {n_bins}")
    p = _probs(records, use_calibrated)
    y = _outcomes(records)
    idx = np.clip(np.floor(p * n_bins).astype(int), 0, n_bins - 1)

    bins = []
    for m in range(n_bins):
        sel = idx == m
        n = int(sel.sum())
        if n == 0:
            bins.append(DiagramBin(float("nan"), float("nan"), 0))
        else:
            bins.append(DiagramBin(float(p[sel].mean()), float(y[sel].mean()), n))
    edges = tuple(m / n_bins for m in range(n_bins + 1))
    return ReliabilityDiagram(bins=tuple(bins), edges=edges, total=len(records))


def pce(diagram: ReliabilityDiagram) -> float:
    """Count-weighted L1 gap between per-bin outcome frequency and prediction."""
    return sum(
        (b.count / diagram.total) * abs(b.obs_avg - b.pred_avg)
        for b in diagram.bins
        if not b.empty
    )


def sharpness(diagram: ReliabilityDiagram) -> float:
    """Count-weighted sum of squared per-bin outcome frequencies."""
    return sum(
        (b.count / diagram.total) * b.obs_avg**2 for b in diagram.bins if not b.empty
    )


def quantile_reliability(
    forecasts: Sequence[ForecastDistribution],
    outcomes: Sequence[float],
    n_levels: int = 100,
) -> ReliabilityDiagram:
    """Empirical coverage of the predictive quantiles on an inclusive level grid.

    Bin m holds (level, observed coverage, record count). Identical forecast
    objects share one quantile evaluation, so a constant forecaster over a
    long stream stays cheap.
    """
    if len(forecasts) != len(outcomes):
        raise ValidationError("forecasts and outcomes must have equal length")
    if len(forecasts) == 0:
        raise ValidationError("need at least one forecast")
    if n_levels < 2:
        raise ValidationError(f"n_levels must be >= 2, got {n_levels}")
    if any(isinstance(f, DirectProbability) for f in forecasts):
        raise UnsupportedVariantError("quantile diagnostics need a cdf forecast variant")

    levels = np.linspace(0.0, 1.0, n_levels)
    y = np.asarray(outcomes, dtype=float)
    total = len(forecasts)

    cache: dict[ForecastDistribution, np.ndarray] = {}
    q_rows = np.empty((total, n_levels))
    for i, dist in enumerate(forecasts):
        row = cache.get(dist)
        if row is None:
            row = np.asarray(quantile_eval(dist, levels))
            cache[dist] = row
        q_rows[i] = row
    coverage = (y[:, None] <= q_rows).mean(axis=0)

    bins = tuple(
        DiagramBin(float(lv), float(cov), total) for lv, cov in zip(levels, coverage)
    )
    return ReliabilityDiagram(bins=bins, edges=tuple(float(v) for v in levels), total=total)


def qce(diagram: ReliabilityDiagram) -> float:
    """Unweighted mean absolute gap between level and observed coverage."""
    gaps = [abs(b.obs_avg - b.pred_avg) for b in diagram.bins if not b.empty]
    if not gaps:
        raise ValidationError("diagram has no populated bins")
    return float(np.mean(gaps))


def accuracy(records: Sequence[ParityRecord], use_calibrated: bool = True) -> float:
    """Fraction of records where the p >= 0.5 class call matches the outcome."""
    p = _probs(records, use_calibrated)
    y = _outcomes(records)
    return float(((p >= 0.5) == (y == 1.0)).mean())


def auroc(records: Sequence[ParityRecord], use_calibrated: bool = True) -> float:
    """Rank probability that a positive record outscores a negative one.

    Ties count one half (midrank convention). Raises when only one class
    is present.
    """
    p = _probs(records, use_calibrated)
    y = _outcomes(records)
    n_pos = int((y == 1.0).sum())
    n_neg = len(y) - n_pos
    if n_pos == 0 or n_neg == 0:
        raise UndefinedMetricError("AUROC needs at least one positive and one negative outcome")
    ranks = rankdata(p, method="average")
    return float((ranks[y == 1.0].sum() - n_pos * (n_pos + 1) / 2.0) / (n_pos * n_neg))


def metrics_report(
    records: Sequence[ParityRecord],
    *,
    n_bins: int = 30,
    n_levels: int = 100,
    forecasts: Sequence[ForecastDistribution] | None = None,
    outcomes: Sequence[float] | None = None,
    use_calibrated: bool = True,
) -> MetricsReport:
    """All scalar scores in one go; pass forecasts + raw outcomes to get QCE."""
    diagram = parity_reliability(records, n_bins=n_bins, use_calibrated=use_calibrated)
    qce_val = None
    if forecasts is not None:
        if outcomes is None:
            raise ValidationError("forecasts were given without their outcomes")
        qce_val = qce(quantile_reliability(forecasts, outcomes, n_levels=n_levels))
    return MetricsReport(
        qce=qce_val,
        pce=pce(diagram),
        sharp=sharpness(diagram),
        acc=accuracy(records, use_calibrated=use_calibrated),
        auroc=auroc(records, use_calibrated=use_calibrated),
    )
