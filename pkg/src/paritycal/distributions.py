"""Predictive distributions and the increase/decrease ("parity") primitives.

A forecast for a real-valued next observation is one of four variants:

- ``Gaussian(mu, sigma)``
- ``QuantileSet(levels, values)`` -- a finite set of predictive quantiles,
  densified by piecewise-Gaussian interpolation (one normal segment per
  adjacent quantile pair, extrapolating with the edge segments)
- ``TruncatedGaussianMixture(weights, components)``
- ``DirectProbability(p)`` -- the expert is a binary classifier and hands us
  the parity probability itself

``cdf_eval``/``quantile_eval`` accept a scalar or an array-like and return a
matching float or ndarray. All types are immutable (and hashable) after
construction, so evaluation is safe to share across threads.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.special import ndtr, ndtri

from .errors import UnsupportedVariantError, ValidationError

# Quantiles at p in {0, 1} are clamped to mu +/- Z_SPAN * sigma of the
# relevant Gaussian segment so that endpoint quantile levels stay finite.
Z_SPAN = 8.0

# Relative floor applied to a segment sigma when two adjacent quantile
# values coincide.
_SIGMA_FLOOR = 1e-9

_INF = float("inf")


def _require(cond: bool, message: str) -> None:
    if not cond:
        raise ValidationError(message)


def _as_float_tuple(xs) -> tuple[float, ...]:
    return tuple(float(x) for x in xs)


@dataclass(frozen=True)
class Gaussian:
    """Normal predictive cdf with mean ``mu`` and standard deviation ``sigma``."""

    mu: float
    sigma: float

    def __post_init__(self):
        _require(math.isfinite(self.mu), "Gaussian mu must be finite")
        _require(
            math.isfinite(self.sigma) and self.sigma > 0,
            f"Gaussian sigma must be positive, got {self.sigma}",
        )


@dataclass(frozen=True)
class QuantileSet:
    """Forecast given as quantile ``values`` at probability ``levels``.

    Levels must be strictly increasing inside (0, 1); values must be
    non-decreasing; both length >= 2.
    """

    levels: tuple[float, ...]
    values: tuple[float, ...]

    def __post_init__(self):
        object.__setattr__(self, "levels", _as_float_tuple(self.levels))
        object.__setattr__(self, "values", _as_float_tuple(self.values))
        lv, xs = self.levels, self.values
        _require(len(lv) == len(xs), "levels and values must have equal length")
        _require(len(lv) >= 2, "need at least two quantile levels")
        _require(all(0.0 < p < 1.0 for p in lv), "levels must lie strictly inside (0, 1)")
        _require(all(a < b for a, b in zip(lv, lv[1:])), "levels must be strictly increasing")
        _require(all(math.isfinite(x) for x in xs), "quantile values must be finite")
        _require(all(a <= b for a, b in zip(xs, xs[1:])), "values must be non-decreasing")


@dataclass(frozen=True)
class TruncatedGaussian:
    """One mixture component: N(mu, sigma^2) restricted to [lower, upper]."""

    mu: float
    sigma: float
    lower: float = -_INF
    upper: float = _INF

    def __post_init__(self):
        _require(math.isfinite(self.mu), "component mu must be finite")
        _require(
            math.isfinite(self.sigma) and self.sigma > 0,
            f"component sigma must be positive, got {self.sigma}",
        )
        _require(not math.isnan(self.lower) and not math.isnan(self.upper), "bounds must not be NaN")
        _require(self.lower < self.upper, "component lower bound must be below its upper bound")
        if self._mass() <= 0.0:
            raise ValidationError(
                "truncation interval carries no numerically representable probability mass"
            )

    def _z(self, y):
        return (np.asarray(y, dtype=float) - self.mu) / self.sigma

    def _mass(self) -> float:
        return float(ndtr(self._z(self.upper)) - ndtr(self._z(self.lower)))

    def cdf(self, y: np.ndarray) -> np.ndarray:
        lo_mass = float(ndtr(self._z(self.lower)))
        out = (ndtr(self._z(y)) - lo_mass) / self._mass()
        out = np.clip(out, 0.0, 1.0)
        out = np.where(y < self.lower, 0.0, out)
        out = np.where(y >= self.upper, 1.0, out)
        return out

    def support(self) -> tuple[float, float]:
        """Finite evaluation bracket; unbounded sides clamp at mu +/- Z_SPAN sigma."""
        lo = self.lower if math.isfinite(self.lower) else self.mu - Z_SPAN * self.sigma
        hi = self.upper if math.isfinite(self.upper) else self.mu + Z_SPAN * self.sigma
        return lo, hi


@dataclass(frozen=True)
class TruncatedGaussianMixture:
    """Weighted mixture of truncated normals; weights sum to 1 within 1e-12."""

    weights: tuple[float, ...]
    components: tuple[TruncatedGaussian, ...]

    def __post_init__(self):
        object.__setattr__(self, "weights", _as_float_tuple(self.weights))
        object.__setattr__(self, "components", tuple(self.components))
        _require(len(self.weights) == len(self.components), "one weight per component")
        _require(len(self.components) >= 1, "mixture needs at least one component")
        _require(all(w >= 0 for w in self.weights), "weights must be non-negative")
        _require(
            abs(sum(self.weights) - 1.0) <= 1e-12,
            f"weights must sum to 1 within 1e-12, got {sum(self.weights)!r}",
        )
        _require(
            all(isinstance(c, TruncatedGaussian) for c in self.components),
            "components must be TruncatedGaussian instances",
        )


@dataclass(frozen=True)
class DirectProbability:
    """The expert already supplies the parity probability itself."""

    p: float

    def __post_init__(self):
        _require(0.0 <= self.p <= 1.0, f"probability must lie in [0, 1], got {self.p}")


ForecastDistribution = Gaussian | QuantileSet | TruncatedGaussianMixture | DirectProbability


@dataclass(frozen=True)
class ParityRecord:
    """One timestep of the parity stream.

    ``p_raw`` is the probability implied by the forecast cdf at the previous
    observation, ``p_cal`` its recalibrated counterpart, ``outcome`` the
    realized indicator of "decreased or stayed equal".
    """

    t: int
    p_raw: float
    p_cal: float
    outcome: int

    def __post_init__(self):
        _require(self.t >= 2, f"timestep index must be >= 2, got {self.t}")
        _require(0.0 <= self.p_raw <= 1.0, f"p_raw out of [0, 1]: {self.p_raw}")
        _require(0.0 <= self.p_cal <= 1.0, f"p_cal out of [0, 1]: {self.p_cal}")
        _require(self.outcome in (0, 1), f"outcome must be 0 or 1, got {self.outcome}")


# ---------------------------------------------------------------------------
# piecewise-Gaussian machinery shared by QuantileSet and the standalone op
# ---------------------------------------------------------------------------


class _PiecewiseGaussian:
    """Normal segment between each adjacent quantile pair.

    Segment k spans [x_k, x_{k+1}) and carries
        sigma_k = (x_{k+1} - x_k) / (z_{k+1} - z_k),   z_k = ndtri(tau_k)
        mu_k    = x_k - sigma_k * z_k.
    Points below x_0 use segment 0; points at or above the last value use the
    last segment. The cdf is evaluated as Phi((y - x_k)/sigma_k + z_k), which
    is algebraically Phi((y - mu_k)/sigma_k) but exact at the knots.
    """

    def __init__(self, levels: np.ndarray, values: np.ndarray):
        self.levels = levels
        self.values = values
        self.z = ndtri(levels)
        dz = np.diff(self.z)
        dx = np.diff(values)
        floor = _SIGMA_FLOOR * np.maximum(1.0, np.abs(values[:-1]))
        self.sigma = np.maximum(dx / dz, floor)

    def cdf(self, y: np.ndarray) -> np.ndarray:
        k = np.clip(np.searchsorted(self.values, y, side="right") - 1, 0, len(self.sigma) - 1)
        return ndtr((y - self.values[k]) / self.sigma[k] + self.z[k])

    def quantile(self, p: np.ndarray) -> np.ndarray:
        k = np.clip(np.searchsorted(self.levels, p, side="right") - 1, 0, len(self.sigma) - 1)
        zp = np.clip(ndtri(p), -Z_SPAN, Z_SPAN)
        return self.values[k] + self.sigma[k] * (zp - self.z[k])


def _validated_piecewise(levels, values) -> _PiecewiseGaussian:
    qs = QuantileSet(tuple(levels), tuple(values))  # reuse the type's validation
    return _PiecewiseGaussian(np.asarray(qs.levels), np.asarray(qs.values))


# ---------------------------------------------------------------------------
# evaluation
# ---------------------------------------------------------------------------


def _dispatch(x, impl) -> float | np.ndarray:
    arr = np.asarray(x, dtype=float)
    out = impl(np.atleast_1d(arr))
    return float(out[0]) if arr.ndim == 0 else out


def cdf_eval(dist: ForecastDistribution, y) -> float | np.ndarray:
    """Evaluate the predictive cdf at ``y`` (scalar or array-like)."""
    if isinstance(dist, DirectProbability):
        raise UnsupportedVariantError("DirectProbability carries no cdf")
    if isinstance(dist, Gaussian):
        return _dispatch(y, lambda v: ndtr((v - dist.mu) / dist.sigma))
    if isinstance(dist, QuantileSet):
        pw = _PiecewiseGaussian(np.asarray(dist.levels), np.asarray(dist.values))
        return _dispatch(y, pw.cdf)
    if isinstance(dist, TruncatedGaussianMixture):
        def mix_cdf(v):
            acc = np.zeros_like(v)
            for w, comp in zip(dist.weights, dist.components):
                acc += w * comp.cdf(v)
            return np.clip(acc, 0.0, 1.0)

        return _dispatch(y, mix_cdf)
    raise UnsupportedVariantError(f"unknown forecast variant: {type(dist).__name__}")


def _mixture_quantile(dist: TruncatedGaussianMixture, p: np.ndarray) -> np.ndarray:
    supports = [c.support() for c in dist.components]
    lo = min(s[0] for s in supports)
    hi = max(s[1] for s in supports)

    def mix_cdf(v):
        acc = np.zeros_like(v)
        for w, comp in zip(dist.weights, dist.components):
            acc += w * comp.cdf(v)
        return acc

    cdf_lo, cdf_hi = mix_cdf(np.array([lo, hi]))
    out = np.empty_like(p)
    out[p <= cdf_lo] = lo
    out[p >= cdf_hi] = hi
    open_ = (p > cdf_lo) & (p < cdf_hi)
    if open_.any():
        target = p[open_]
        a = np.full(target.shape, lo)
        b = np.full(target.shape, hi)
        # cdf is continuous and strictly increasing on the bracket, so plain
        # bisection converges to double precision
        for _ in range(200):
            mid = 0.5 * (a + b)
            below = mix_cdf(mid) < target
            a = np.where(below, mid, a)
            b = np.where(below, b, mid)
            if np.all((b - a) <= 1e-15 * np.maximum(1.0, np.abs(b))):
                break
        out[open_] = 0.5 * (a + b)
    return out


def quantile_eval(dist: ForecastDistribution, p) -> float | np.ndarray:
    """Evaluate the predictive quantile function at probability ``p``.

    Endpoint probabilities on unbounded distributions return the finite
    clamp ``mu +/- Z_SPAN * sigma`` of the relevant segment. Inverse
    consistency with ``cdf_eval`` holds to 1e-9 on [0.001, 0.999].
    """
    if isinstance(dist, DirectProbability):
        raise UnsupportedVariantError("DirectProbability carries no quantile function")
    parr = np.asarray(p, dtype=float)
    if np.any(np.isnan(parr)) or np.any(parr < 0.0) or np.any(parr > 1.0):
        raise ValidationError("quantile level must lie in [0, 1]")
    if isinstance(dist, Gaussian):
        return _dispatch(p, lambda v: dist.mu + dist.sigma * np.clip(ndtri(v), -Z_SPAN, Z_SPAN))
    if isinstance(dist, QuantileSet):
        pw = _PiecewiseGaussian(np.asarray(dist.levels), np.asarray(dist.values))
        return _dispatch(p, pw.quantile)
    if isinstance(dist, TruncatedGaussianMixture):
        return _dispatch(p, lambda v: _mixture_quantile(dist, v))
    raise UnsupportedVariantError(f"unknown forecast variant: {type(dist).__name__}")


def parity_prob(dist: ForecastDistribution, y_prev) -> float | np.ndarray:
    """Probability the next observation is <= ``y_prev`` under the forecast.

    For cdf variants this is the cdf at the previous observation; a
    DirectProbability forecast passes through unchanged.
    """
    if isinstance(dist, DirectProbability):
        return dist.p
    return cdf_eval(dist, y_prev)


def piecewise_gaussian_parity(levels, values, y_prev) -> float | np.ndarray:
    """Parity probability from raw quantiles, without building a QuantileSet.

    Validates the inputs, fits the per-segment normals and returns the
    interpolated cdf at ``y_prev``. At a knot ``x_k`` the result is the
    knot's own level to within floating-point round-off.
    """
    pw = _validated_piecewise(levels, values)
    return _dispatch(y_prev, pw.cdf)


def parity_outcome(y_t, y_prev) -> int | np.ndarray:
    """1 if the series decreased or stayed equal (``y_t <= y_prev``), else 0."""
    a = np.asarray(y_t, dtype=float)
    b = np.asarray(y_prev, dtype=float)
    out = (a <= b).astype(int)
    return int(out) if out.ndim == 0 else out


def to_quantile_set(dist: ForecastDistribution, levels) -> QuantileSet:
    """Summarize any cdf variant as a QuantileSet at the given levels."""
    values = quantile_eval(dist, np.asarray(levels, dtype=float))
    return QuantileSet(tuple(float(p) for p in levels), tuple(float(v) for v in values))
