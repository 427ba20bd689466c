"""Loss-table validation, Bayes actions and the policy simulator."""

from __future__ import annotations

import numpy as np
import pytest

from paritycal import (
    Action,
    DEFAULT_LOSS_MATRIX,
    LossMatrix,
    ParityRecord,
    ValidationError,
    bayes_action,
    simulate_policy,
)


def expected_losses(loss: LossMatrix, q: float):
    return [
        q * loss.increase[a - 1] + (1.0 - q) * loss.decrease[a - 1] for a in Action
    ]


def brute_argmin(loss: LossMatrix, q: float) -> Action:
    vals = expected_losses(loss, q)
    best = min(range(3), key=lambda i: (vals[i], i))
    return Action(best + 1)


def random_valid_matrix(rng) -> LossMatrix:
    chain = np.sort(rng.uniform(0, 5, 6))
    return LossMatrix(
        increase=(chain[2], chain[4], chain[5]), decrease=(chain[3], chain[1], chain[0])
    )


def test_default_matrix_values():
    assert DEFAULT_LOSS_MATRIX.increase == (0.3, 0.6, 1.0)
    assert DEFAULT_LOSS_MATRIX.decrease == (0.5, 0.2, 0.0)


def test_ordering_chain_enforced():
    with pytest.raises(ValidationError):
        LossMatrix(increase=(0.3, 0.6, 1.0), decrease=(0.2, 0.5, 0.0))
    with pytest.raises(ValidationError):
        LossMatrix(increase=(1.0, 0.6, 0.3), decrease=(0.5, 0.2, 0.0))
    with pytest.raises(ValidationError):
        LossMatrix(increase=(0.3, 0.6), decrease=(0.5, 0.2, 0.0))


def test_extreme_probabilities():
    assert bayes_action(DEFAULT_LOSS_MATRIX, 0.0) is Action.NONE
    assert bayes_action(DEFAULT_LOSS_MATRIX, 1.0) is Action.TIGHT


def test_interior_thresholds():
    assert bayes_action(DEFAULT_LOSS_MATRIX, 0.4) is Action.MILD
    assert bayes_action(DEFAULT_LOSS_MATRIX, 0.3) is Action.NONE
    assert bayes_action(DEFAULT_LOSS_MATRIX, 0.6) is Action.TIGHT


def test_tie_at_one_half_breaks_restrictive():
    # expected losses of tight and mild are both exactly 0.4 here
    vals = expected_losses(DEFAULT_LOSS_MATRIX, 0.5)
    assert vals[0] == vals[1] == 0.4
    assert bayes_action(DEFAULT_LOSS_MATRIX, 0.5) is Action.TIGHT


def test_matches_brute_force_on_grid():
    qs = np.linspace(0, 1, 2001)
    for q in qs:
        assert bayes_action(DEFAULT_LOSS_MATRIX, float(q)) is brute_argmin(
            DEFAULT_LOSS_MATRIX, float(q)
        )


def test_action_monotone_in_q_for_random_matrices():
    rng = np.random.default_rng(0)
    qs = np.linspace(0, 1, 401)
    for _ in range(40):
        loss = random_valid_matrix(rng)
        actions = [bayes_action(loss, float(q)) for q in qs]
        # restrictiveness never relaxes as the increase probability rises
        assert all(b <= a for a, b in zip(actions, actions[1:]))


def test_scale_invariance():
    rng = np.random.default_rng(1)
    for _ in range(20):
        loss = random_valid_matrix(rng)
        scaled = LossMatrix(
            increase=tuple(3.7 * v for v in loss.increase),
            decrease=tuple(3.7 * v for v in loss.decrease),
        )
        for q in np.linspace(0, 1, 101):
            assert bayes_action(loss, float(q)) is bayes_action(scaled, float(q))


def test_q_out_of_range_rejected():
    with pytest.raises(ValidationError):
        bayes_action(DEFAULT_LOSS_MATRIX, -0.01)
    with pytest.raises(ValidationError):
        bayes_action(DEFAULT_LOSS_MATRIX, 1.01)


# ---------------------------------------------------------------------------
# simulate_policy
# ---------------------------------------------------------------------------


def records_from(p, y):
    return [
        ParityRecord(t=i + 2, p_raw=float(pp), p_cal=float(pp), outcome=int(yy))
        for i, (pp, yy) in enumerate(zip(p, y))
    ]


def test_oracle_records_incur_edge_losses():
    # p = outcome exactly: q is 1 on increases (tight, 0.3) and 0 on
    # decreases (none, 0.0)
    records = records_from([0.0, 1.0, 0.0, 1.0], [0, 1, 0, 1])
    result = simulate_policy(records, DEFAULT_LOSS_MATRIX)
    assert result.cumulative_loss == pytest.approx(0.6, abs=1e-12)
    assert result.actions == (Action.TIGHT, Action.NONE, Action.TIGHT, Action.NONE)
    assert result.action_counts == (2, 0, 2)


def test_constant_half_takes_tie_break_action():
    records = records_from([0.5] * 7, [0, 1, 0, 1, 0, 1, 0])
    result = simulate_policy(records, DEFAULT_LOSS_MATRIX)
    assert all(a is Action.TIGHT for a in result.actions)


def test_forced_none_region_loss():
    # decrease probability 0.9 puts both steps in the no-restriction region
    records = records_from([0.9, 0.9], [0, 1])
    result = simulate_policy(records, DEFAULT_LOSS_MATRIX)
    assert result.actions == (Action.NONE, Action.NONE)
    assert result.cumulative_loss == pytest.approx(1.0, abs=1e-12)


def test_counts_match_actions():
    rng = np.random.default_rng(2)
    records = records_from(rng.uniform(0, 1, 500), rng.integers(0, 2, 500))
    result = simulate_policy(records, DEFAULT_LOSS_MATRIX)
    assert sum(result.action_counts) == 500
    for idx, action in enumerate(Action):
        assert result.action_counts[idx] == sum(1 for a in result.actions if a is action)


def test_use_calibrated_column_choice():
    records = [ParityRecord(t=2, p_raw=0.9, p_cal=0.1, outcome=1)]
    cal = simulate_policy(records, DEFAULT_LOSS_MATRIX, use_calibrated=True)
    raw = simulate_policy(records, DEFAULT_LOSS_MATRIX, use_calibrated=False)
    assert cal.actions == (Action.TIGHT,)  # q = 0.9
    assert raw.actions == (Action.NONE,)  # q = 0.1


def test_empty_records_rejected():
    with pytest.raises(ValidationError):
        simulate_policy([], DEFAULT_LOSS_MATRIX)


def test_bayes_policy_dominates_fixed_actions():
    # with truthful probabilities the Bayes policy beats any constant action
    # in expectation; Monte Carlo with a 3-sigma margin
    rng = np.random.default_rng(3)
    n = 20_000
    p = rng.uniform(0, 1, n)
    y = (rng.random(n) < p).astype(int)
    records = records_from(p, y)
    bayes_loss = simulate_policy(records, DEFAULT_LOSS_MATRIX).cumulative_loss
    sigma_bound = 3.0 * np.sqrt(n) * 1.0  # losses bounded by 1
    for action in Action:
        fixed = sum(
            DEFAULT_LOSS_MATRIX.loss(increased=rec.outcome == 0, action=action)
            for rec in records
        )
        assert bayes_loss <= fixed + sigma_bound
