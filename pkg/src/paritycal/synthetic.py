"""The analytic counterexample stream: alternating half-normal outcomes.

Odd timesteps draw from the standard normal truncated to the negative
half-line, even timesteps from the positive half. The forecaster is held
constant at the equal-weight mixture of the two halves, which is quantile
calibrated for this stream yet maximally parity miscalibrated: the sign
alternation makes every decrease predictable, while the implied parity
probabilities stay spread over (0, 1).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.special import ndtri

from .distributions import (
    ForecastDistribution,
    ParityRecord,
    TruncatedGaussian,
    TruncatedGaussianMixture,
    cdf_eval,
)
from .errors import ValidationError

_INF = float("inf")

# Equal-weight mix of the standard normal's negative and positive halves.
SPLIT_STANDARD_NORMAL = TruncatedGaussianMixture(
    weights=(0.5, 0.5),
    components=(
        TruncatedGaussian(0.0, 1.0, -_INF, 0.0),
        TruncatedGaussian(0.0, 1.0, 0.0, _INF),
    ),
)


@dataclass(frozen=True, eq=False)
class SyntheticStream:
    """Outcomes Y_1..Y_T (1-indexed: odd < 0, even >= 0) plus the constant forecasts."""

    horizon: int
    seed: int
    outcomes: np.ndarray
    forecasts: tuple[ForecastDistribution, ...]


def generate(horizon: int, seed: int) -> SyntheticStream:
    """Sample the alternating stream by inverse cdf from a seeded generator.

    Inverse-cdf sampling keeps streams bit-reproducible from the seed alone.
    """
    if horizon < 2:
        raise ValidationError(f"horizon must be >= 2, got {horizon}")
    rng = np.random.default_rng(seed)
    u = np.clip(rng.random(horizon), 2.0**-53, None)  # keep u strictly positive
    y = np.empty(horizon)
    odd = np.arange(horizon) % 2 == 0  # position i holds timestep t = i + 1
    # negative half: F(y) = 2 Phi(y); positive half: F(y) = 2 Phi(y) - 1
    y[odd] = ndtri(0.5 * u[odd])
    y[~odd] = ndtri(0.5 + 0.5 * u[~odd])
    return SyntheticStream(
        horizon=horizon,
        seed=seed,
        outcomes=y,
        forecasts=(SPLIT_STANDARD_NORMAL,) * horizon,
    )


def prehoc_records(stream: SyntheticStream) -> list[ParityRecord]:
    """Implied parity probabilities and realized outcomes for t = 2..T.

    Records carry p_cal = p_raw; calibration happens downstream.
    """
    y = stream.outcomes
    p_raw = np.asarray(cdf_eval(SPLIT_STANDARD_NORMAL, y[:-1]))
    wins = y[1:] <= y[:-1]
    return [
        ParityRecord(t=i + 2, p_raw=float(p), p_cal=float(p), outcome=int(w))
        for i, (p, w) in enumerate(zip(p_raw, wins))
    ]
