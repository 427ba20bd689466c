"""Recalibration of parity probabilities with the two-parameter sigmoid map.

The map is ``m(p) = sigmoid(a * logit(p) + b)``. Three ways to keep (a, b)
current along a stream:

- ``iw``  -- refit on all history every ``uf`` steps (increasing window)
- ``mw``  -- refit on the last ``ws`` points every ``uf`` steps (moving window)
- ``ops`` -- an online Newton step after every observation, with the inverse
  of the accumulated curvature matrix maintained in O(1) per step and a
  projection onto the ball ||(a, b)|| <= 100 under that matrix's metric

``run_stream`` emits, per step, the calibrated probability computed with the
parameters held *before* that step's outcome is observed.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace
from typing import Iterable

import numpy as np
from scipy.special import expit

from .distributions import ParityRecord
from .errors import NumericError, ValidationError

# Raw probabilities are pushed inside [LOGIT_EPS, 1 - LOGIT_EPS] before the
# logit so that gradients stay finite at p in {0, 1}.
LOGIT_EPS = 1e-6

# Feasible ball for (a, b); the online update projects onto it and batch
# fits are constrained to it.
PARAM_RADIUS = 100.0

# Batch fit: small ridge centred at the identity map pins directions the
# data leaves flat (e.g. every p equal to 0.5 says nothing about a).
_RIDGE = 1e-6
_FIT_CENTER = np.array([1.0, 0.0])
_MAX_NEWTON_ITER = 100
_GRAD_TOL = 1e-10

# The maintained inverse is rebuilt from scratch this often to bound drift
# of the rank-1 update identity.
_INV_REFRESH_EVERY = 1_000_000


@dataclass(frozen=True)
class PlattParams:
    """Slope ``a`` and intercept ``b`` of the recalibration map, logit scale."""

    a: float
    b: float

    def __post_init__(self):
        if not (math.isfinite(self.a) and math.isfinite(self.b)):
            raise ValidationError(f"parameters must be finite, got ({self.a}, {self.b})")

    def as_array(self) -> np.ndarray:
        return np.array([self.a, self.b])


IDENTITY_PARAMS = PlattParams(1.0, 0.0)


def clamped_logit(p) -> float | np.ndarray:
    z = np.clip(np.asarray(p, dtype=float), LOGIT_EPS, 1.0 - LOGIT_EPS)
    out = np.log(z / (1.0 - z))
    return float(out) if out.ndim == 0 else out


def platt_apply(params: PlattParams, p) -> float | np.ndarray:
    """Apply the recalibration map; accepts a scalar or array of probabilities."""
    out = expit(params.a * clamped_logit(p) + params.b)
    return float(out) if np.ndim(out) == 0 else out


def log_loss(p, y) -> float:
    """Total log-loss sum(-y log p - (1-y) log(1-p)) with clamped probabilities."""
    z = clamped_logit(p)  # clamping keeps the terms finite at p in {0, 1}
    y = np.asarray(y, dtype=float)
    # -log sigmoid(z) = softplus(-z) and -log(1 - sigmoid(z)) = softplus(z)
    return float((y * np.logaddexp(0.0, -z) + (1.0 - y) * np.logaddexp(0.0, z)).sum())


# ---------------------------------------------------------------------------
# batch fitting
# ---------------------------------------------------------------------------


def _objective(theta: np.ndarray, z: np.ndarray, y: np.ndarray, ridge: float) -> float:
    s = theta[0] * z + theta[1]
    # softplus(s) - y*s is the per-sample log-loss of sigmoid(s)
    return float(np.logaddexp(0.0, s).sum() - (y * s).sum()) + ridge * float(
        ((theta - _FIT_CENTER) ** 2).sum()
    )


def _grad_hess(theta: np.ndarray, z: np.ndarray, y: np.ndarray, ridge: float):
    s = theta[0] * z + theta[1]
    m = expit(s)
    r = m - y
    g = np.array([(r * z).sum(), r.sum()]) + 2.0 * ridge * (theta - _FIT_CENTER)
    w = m * (1.0 - m)
    wz = (w * z).sum()
    H = np.array([[(w * z * z).sum(), wz], [wz, w.sum()]]) + 2.0 * ridge * np.eye(2)
    return g, H


def _damped_newton(z, y, ridge, extra_ridge=0.0, start=None):
    """Minimize the ridged log-loss, optionally with an extra ||theta||^2 term."""
    theta = _FIT_CENTER.copy() if start is None else np.asarray(start, dtype=float).copy()

    def f(th):
        return _objective(th, z, y, ridge) + extra_ridge * float((th**2).sum())

    for _ in range(_MAX_NEWTON_ITER):
        g, H = _grad_hess(theta, z, y, ridge)
        g = g + 2.0 * extra_ridge * theta
        H = H + 2.0 * extra_ridge * np.eye(2)
        if np.linalg.norm(g) <= _GRAD_TOL:
            break
        step = np.linalg.solve(H, g)
        if np.linalg.norm(step) <= 1e-13 * (1.0 + np.linalg.norm(theta)):
            break  # at the floating-point floor even if the raw gradient is not
        f0 = f(theta)
        # allow objective changes at the accumulated-rounding level so the
        # final Newton steps are not rejected by summation noise
        slack = 1e-12 * (1.0 + abs(f0))
        t = 1.0
        while t > 1e-12 and f(theta - t * step) > f0 + slack:
            t *= 0.5
        if t <= 1e-12:
            break
        theta = theta - t * step
    return theta


def platt_fit_batch(calset: Iterable[tuple[float, int]]) -> PlattParams:
    """Log-loss-minimizing parameters on a calibration set of (p, y) pairs.

    Damped Newton on the two-parameter convex objective with a 1e-6 ridge
    centred at (1, 0). If the unconstrained minimum leaves the feasible
    ball, the fit is re-solved on the ball boundary (bisection on the
    Lagrange multiplier), so the returned objective never exceeds the
    objective at (1, 0).
    """
    pairs = list(calset)
    if not pairs:
        raise ValidationError("calibration set must be non-empty")
    p = np.array([float(q) for q, _ in pairs])
    y = np.array([float(lab) for _, lab in pairs])
    if np.any((y != 0.0) & (y != 1.0)):
        raise ValidationError("labels must be binary")
    z = clamped_logit(p)

    theta = _damped_newton(z, y, _RIDGE)
    if np.linalg.norm(theta) > PARAM_RADIUS:
        # KKT: the ball-constrained minimizer solves grad f + 2*mu*theta = 0
        # with ||theta|| = radius for some mu >= 0; ||theta(mu)|| decreases
        # in mu, so bisect on mu (warm-starting each inner solve).
        lo, hi = 0.0, 1e-6
        warm = theta
        while True:
            warm = _damped_newton(z, y, _RIDGE, extra_ridge=hi, start=warm)
            if np.linalg.norm(warm) <= PARAM_RADIUS:
                break
            hi *= 4.0
            if hi > 1e12:
                raise NumericError("ball-constrained fit failed to bracket the multiplier")
        for _ in range(200):
            mid = 0.5 * (lo + hi)
            warm = _damped_newton(z, y, _RIDGE, extra_ridge=mid, start=warm)
            norm_mid = np.linalg.norm(warm)
            if norm_mid > PARAM_RADIUS:
                lo = mid
            else:
                hi = mid
                if norm_mid >= PARAM_RADIUS * (1.0 - 1e-10):
                    break  # feasible and on the boundary to 1e-10
            if hi - lo <= 1e-14 * max(1.0, hi):
                break
        theta = _damped_newton(z, y, _RIDGE, extra_ridge=hi, start=warm)
        norm = np.linalg.norm(theta)
        if norm > PARAM_RADIUS:
            theta *= PARAM_RADIUS / norm
    return PlattParams(float(theta[0]), float(theta[1]))


# ---------------------------------------------------------------------------
# online Newton step
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class OnsState:
    """State of the online update: parameters, curvature matrix, its inverse.

    ``A`` starts at (1/(gamma*cap_d))^2 * I and grows by the outer product
    of each step's gradient; ``A_inv`` is kept in sync by the rank-1
    inverse-update identity and rebuilt from ``A`` every 10^6 steps.
    """

    theta: PlattParams
    A: np.ndarray
    A_inv: np.ndarray
    gamma: float
    cap_d: float
    step_count: int = 0


def ons_init(gamma: float = 0.1, cap_d: float = 1.0) -> OnsState:
    """Fresh online state at the identity map (a, b) = (1, 0)."""
    if not (gamma > 0 and cap_d > 0):
        raise ValidationError("gamma and cap_d must be positive")
    scale = (1.0 / (gamma * cap_d)) ** 2
    return OnsState(
        theta=IDENTITY_PARAMS,
        A=scale * np.eye(2),
        A_inv=np.eye(2) / scale,
        gamma=gamma,
        cap_d=cap_d,
        step_count=0,
    )


def _project_to_ball(theta: np.ndarray, A: np.ndarray, radius: float = PARAM_RADIUS) -> np.ndarray:
    """argmin_{||x|| <= radius} (theta - x)^T A (theta - x) for SPD A.

    Solved through the eigendecomposition of A and bisection on the
    Lagrange multiplier of the norm constraint.
    """
    if np.linalg.norm(theta) <= radius:
        return theta
    lam, V = np.linalg.eigh(A)
    v = V.T @ theta

    def norm_at(mu: float) -> float:
        return float(np.linalg.norm(lam * v / (lam + mu)))

    lo, hi = 0.0, max(1.0, float(lam.max()))
    while norm_at(hi) > radius:
        hi *= 2.0
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        if norm_at(mid) > radius:
            lo = mid
        else:
            hi = mid
        if hi - lo <= 1e-16 * max(1.0, hi):
            break
    return V @ (lam * v / (lam + hi))


def ons_step(state: OnsState, p: float, y: int) -> OnsState:
    """One online Newton update on the observation (p, y).

    Returns the successor state; the input state is not modified.
    """
    if y not in (0, 1):
        raise ValidationError(f"outcome must be 0 or 1, got {y}")
    z = clamped_logit(p)
    theta = state.theta.as_array()
    m = expit(theta[0] * z + theta[1])
    g = (m - float(y)) * np.array([z, 1.0])
    if not np.all(np.isfinite(g)):
        raise NumericError(f"non-finite gradient at (p={p}, y={y})")

    A = state.A + np.outer(g, g)
    count = state.step_count + 1
    if count % _INV_REFRESH_EVERY == 0:
        A_inv = np.linalg.inv(A)
    else:
        Ag = state.A_inv @ g
        A_inv = state.A_inv - np.outer(Ag, Ag) / (1.0 + float(g @ Ag))

    theta_new = theta - (1.0 / state.gamma) * (A_inv @ g)
    theta_new = _project_to_ball(theta_new, A)
    return replace(
        state,
        theta=PlattParams(float(theta_new[0]), float(theta_new[1])),
        A=A,
        A_inv=A_inv,
        step_count=count,
    )


# ---------------------------------------------------------------------------
# streaming schedules
# ---------------------------------------------------------------------------

METHODS = ("none", "iw", "mw", "ops")


@dataclass(frozen=True)
class ScheduleConfig:
    """Which calibration schedule to run and its knobs.

    ``uf``/``ws`` drive the windowed refits; ``gamma``/``cap_d`` drive the
    online update. Unused knobs are ignored by the other methods.
    """

    method: str
    uf: int = 100
    ws: int = 100
    gamma: float = 0.1
    cap_d: float = 1.0

    def __post_init__(self):
        if self.method not in METHODS:
            raise ValidationError(f"method must be one of {METHODS}, got {self.method!r}")
        if not (isinstance(self.uf, int) and self.uf >= 1):
            raise ValidationError(f"uf must be an integer >= 1, got {self.uf!r}")
        if not (isinstance(self.ws, int) and self.ws >= 1):
            raise ValidationError(f"ws must be an integer >= 1, got {self.ws!r}")
        if not (self.gamma > 0 and self.cap_d > 0):
            raise ValidationError("gamma and cap_d must be positive")


# gamma/cap_d defaults that worked well on weekly epidemic-count streams
COVID_OPS_PRESET = ScheduleConfig(method="ops", gamma=0.001, cap_d=10.0)

PRESETS = {
    "default": ScheduleConfig(method="ops"),
    "covid": COVID_OPS_PRESET,
}


def run_stream(
    config: ScheduleConfig, stream: Iterable[tuple[float, int]]
) -> list[ParityRecord]:
    """Calibrate a time-ordered stream of (raw probability, outcome) pairs.

    Every record's calibrated probability uses only strictly prior
    observations: predictions happen before the step's refit/update.
    """
    params = IDENTITY_PARAMS
    state = ons_init(config.gamma, config.cap_d) if config.method == "ops" else None
    history_p: list[float] = []
    history_y: list[int] = []
    records: list[ParityRecord] = []

    for step, (p_raw, outcome) in enumerate(stream, start=1):
        p_raw = float(p_raw)
        outcome = int(outcome)
        if config.method == "none":
            p_cal = p_raw
        elif config.method == "ops":
            params = state.theta
            p_cal = platt_apply(params, p_raw)
        else:
            p_cal = platt_apply(params, p_raw)
        records.append(
            ParityRecord(t=step + 1, p_raw=p_raw, p_cal=float(p_cal), outcome=outcome)
        )

        if config.method == "ops":
            state = ons_step(state, p_raw, outcome)
        elif config.method in ("iw", "mw"):
            history_p.append(p_raw)
            history_y.append(outcome)
            if step % config.uf == 0:
                if config.method == "iw":
                    window = zip(history_p, history_y)
                else:
                    window = zip(history_p[-config.ws:], history_y[-config.ws:])
                params = platt_fit_batch(window)
    return records
