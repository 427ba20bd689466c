"""Bayes-optimal restriction levels driven by parity probabilities.

A policymaker picks one of three actions each step; the incurred loss
depends only on whether the series then increased or decreased. Actions are
ordered from most to least restrictive, and the loss table must satisfy the
chain l[dec][none] <= l[dec][mild] <= l[inc][tight] <= l[dec][tight]
<= l[inc][mild] <= l[inc][none], which makes the optimal action monotone in
the predicted increase probability.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass
from typing import Sequence

from .distributions import ParityRecord
from .errors import ValidationError


class Action(enum.IntEnum):
    TIGHT = 1
    MILD = 2
    NONE = 3


@dataclass(frozen=True)
class LossMatrix:
    """2x3 loss table: rows (increase, decrease), columns (tight, mild, none)."""

    increase: tuple[float, float, float]
    decrease: tuple[float, float, float]

    def __post_init__(self):
        object.__setattr__(self, "increase", tuple(float(v) for v in self.increase))
        object.__setattr__(self, "decrease", tuple(float(v) for v in self.decrease))
        if len(self.increase) != 3 or len(self.decrease) != 3:
            raise ValidationError("loss matrix must be 2x3")
        if not all(math.isfinite(v) for v in self.increase + self.decrease):
            raise ValidationError("losses must be finite")
        inc, dec = self.increase, self.decrease
        chain = (dec[2], dec[1], inc[0], dec[0], inc[1], inc[2])
        if not all(a <= b for a, b in zip(chain, chain[1:])):
            raise ValidationError(
                "loss ordering violated: need dec/none <= dec/mild <= inc/tight "
                "<= dec/tight <= inc/mild <= inc/none, got "
                f"increase={inc}, decrease={dec}"
            )

    def loss(self, increased: bool, action: Action) -> float:
        row = self.increase if increased else self.decrease
        return row[action - 1]


# The 3-level restriction table used throughout the package examples.
DEFAULT_LOSS_MATRIX = LossMatrix(increase=(0.3, 0.6, 1.0), decrease=(0.5, 0.2, 0.0))


@dataclass(frozen=True)
class PolicyResult:
    cumulative_loss: float
    action_counts: tuple[int, int, int]  # (tight, mild, none)
    actions: tuple[Action, ...]


def bayes_action(loss: LossMatrix, q_increase: float) -> Action:
    """Action minimizing expected loss at increase probability ``q_increase``.

    Ties break toward the more restrictive (lower-index) action.
    """
    if not isinstance(loss, LossMatrix):
        raise ValidationError("loss must be a LossMatrix")
    if not (0.0 <= q_increase <= 1.0):
        raise ValidationError(f"q_increase must lie in [0, 1], got {q_increase}")
    best = Action.TIGHT
    best_loss = math.inf
    for action in Action:
        expected = q_increase * loss.increase[action - 1] + (1.0 - q_increase) * loss.decrease[
            action - 1
        ]
        if expected < best_loss:
            best, best_loss = action, expected
    return best


def simulate_policy(
    records: Sequence[ParityRecord], loss: LossMatrix, use_calibrated: bool = True
) -> PolicyResult:
    """Play the Bayes action through the records and tally cumulative loss.

    The parity probability is for a decrease, so the increase probability
    fed to the action rule is its complement; an outcome of 0 means the
    series increased.
    """
    if not records:
        raise ValidationError("record set must be non-empty")
    total = 0.0
    counts = [0, 0, 0]
    actions = []
    for rec in records:
        p = rec.p_cal if use_calibrated else rec.p_raw
        action = bayes_action(loss, 1.0 - p)
        actions.append(action)
        counts[action - 1] += 1
        total += loss.loss(increased=rec.outcome == 0, action=action)
    return PolicyResult(
        cumulative_loss=total,
        action_counts=(counts[0], counts[1], counts[2]),
        actions=tuple(actions),
    )
