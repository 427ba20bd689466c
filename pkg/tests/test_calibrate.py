"""Recalibration map, batch fit, online update and stream schedules.

Oracles: mpmath-frozen sigmoid values, a coarse brute-force grid search for
the batch fit, and a hand-simulated two-step online update.
"""

from __future__ import annotations

import numpy as np
import pytest
from scipy.special import expit

from paritycal import (
    IDENTITY_PARAMS,
    PARAM_RADIUS,
    OnsState,
    PlattParams,
    ScheduleConfig,
    ValidationError,
    log_loss,
    ons_init,
    ons_step,
    platt_apply,
    platt_fit_batch,
    run_stream,
)
from paritycal.calibrate import _project_to_ball, clamped_logit


def sample_calset(rng, params: PlattParams, n: int, lo=0.05, hi=0.95):
    p = rng.uniform(lo, hi, n)
    m = expit(params.a * np.log(p / (1 - p)) + params.b)
    y = (rng.random(n) < m).astype(int)
    return list(zip(p, y))


# ---------------------------------------------------------------------------
# platt_apply
# ---------------------------------------------------------------------------


def test_identity_params_leave_probability_fixed():
    for p in (0.07, 0.3, 0.5, 0.912):
        assert platt_apply(IDENTITY_PARAMS, p) == pytest.approx(p, abs=1e-12)


def test_half_maps_to_sigmoid_of_intercept():
    assert platt_apply(PlattParams(3.0, -0.7), 0.5) == pytest.approx(expit(-0.7), abs=1e-15)
    # frozen mpmath value of sigmoid(1)
    assert platt_apply(PlattParams(2.0, 1.0), 0.5) == pytest.approx(
        0.7310585786300049, abs=1e-12
    )


def test_apply_clamps_endpoints():
    out0 = platt_apply(PlattParams(1.0, 0.0), 0.0)
    out1 = platt_apply(PlattParams(1.0, 0.0), 1.0)
    assert 0.0 < out0 < 1e-5
    assert 1.0 - 1e-5 < out1 < 1.0


def test_apply_strictly_increasing_for_positive_slope():
    rng = np.random.default_rng(1)
    for _ in range(20):
        params = PlattParams(rng.uniform(0.1, 8.0), rng.normal())
        grid = np.linspace(0.01, 0.99, 199)
        vals = platt_apply(params, grid)
        assert np.all(np.diff(vals) > 0)


# ---------------------------------------------------------------------------
# platt_fit_batch
# ---------------------------------------------------------------------------


def test_fit_rejects_empty_calset():
    with pytest.raises(ValidationError):
        platt_fit_batch([])


def test_fit_symmetric_labels_at_half():
    params = platt_fit_batch([(0.5, 1), (0.5, 0)])
    # b pinned by symmetry, a pinned by the ridge (the data says nothing)
    assert params.b == pytest.approx(0.0, abs=1e-6)
    assert params.a == pytest.approx(1.0, abs=1e-3)


def test_fit_degenerate_all_positive_pushes_output_to_one():
    # with every label 1 the log-loss decreases monotonically outward; the
    # tiny ridge halts the runaway at a finite point well inside the ball,
    # by which point the mapped output is already indistinguishable from 1
    params = platt_fit_batch([(0.9, 1)] * 50)
    norm = np.hypot(params.a, params.b)
    assert 1.0 < norm <= PARAM_RADIUS + 1e-9
    assert platt_apply(params, 0.9) > 0.9999


def test_fit_ball_constraint_binds_for_separable_near_half_data():
    # barely separated classes need a huge slope; here the ball does bind
    calset = [(0.5 + 1e-6, 1)] * 2000 + [(0.5 - 1e-6, 0)] * 2000
    params = platt_fit_batch(calset)
    norm = np.hypot(params.a, params.b)
    assert norm <= PARAM_RADIUS + 1e-9
    assert norm >= PARAM_RADIUS * (1.0 - 1e-5)
    assert params.a == pytest.approx(PARAM_RADIUS, rel=1e-4)
    assert abs(params.b) < 1e-4


def test_fit_objective_never_worse_than_identity():
    rng = np.random.default_rng(5)
    for _ in range(15):
        truth = PlattParams(rng.uniform(-2, 4), rng.normal())
        calset = sample_calset(rng, truth, rng.integers(3, 400))
        params = platt_fit_batch(calset)
        p = np.array([q for q, _ in calset])
        y = np.array([lab for _, lab in calset])

        def objective(th):
            ridge = 1e-6 * ((th.a - 1.0) ** 2 + th.b**2)
            return log_loss(platt_apply(th, p), y) + ridge

        assert objective(params) <= objective(IDENTITY_PARAMS) + 1e-9
        assert np.hypot(params.a, params.b) <= PARAM_RADIUS + 1e-9


def test_fit_recovers_generating_parameters():
    rng = np.random.default_rng(9)
    truth = PlattParams(3.0, -1.0)
    params = platt_fit_batch(sample_calset(rng, truth, 40_000))
    assert params.a == pytest.approx(3.0, abs=0.1)
    assert params.b == pytest.approx(-1.0, abs=0.1)


def test_fit_beats_coarse_grid_oracle():
    rng = np.random.default_rng(17)
    calset = sample_calset(rng, PlattParams(2.0, 0.5), 2000)
    p = np.array([q for q, _ in calset])
    y = np.array([lab for _, lab in calset])
    params = platt_fit_batch(calset)
    fit_loss = log_loss(platt_apply(params, p), y)
    z = clamped_logit(p)
    best = np.inf
    for a in np.arange(0.0, 6.0001, 0.05):
        s = a * z[None, :] + np.arange(-3.0, 1.0001, 0.05)[:, None]
        losses = np.logaddexp(0.0, s).sum(axis=1) - (s * y[None, :]).sum(axis=1)
        best = min(best, float(losses.min()))
    assert fit_loss <= best + 1e-6


# ---------------------------------------------------------------------------
# ons_step
# ---------------------------------------------------------------------------


def test_ons_init_matches_stated_defaults():
    state = ons_init(0.1, 1.0)
    assert state.theta == IDENTITY_PARAMS
    np.testing.assert_array_equal(state.A, 100.0 * np.eye(2))
    np.testing.assert_allclose(state.A_inv @ state.A, np.eye(2), atol=1e-12)


def test_ons_single_step_hand_values():
    state = ons_step(ons_init(0.1, 1.0), 0.5, 1)
    np.testing.assert_array_equal(state.A, np.diag([100.0, 100.25]))
    assert state.theta.a == pytest.approx(1.0, abs=1e-12)
    assert state.theta.b == pytest.approx(0.04987531172069825, abs=1e-12)
    assert state.step_count == 1


def test_ons_two_step_displacement_matches_hand_simulation():
    # frozen from a 40-digit hand simulation of the paired (y=1, y=0) update
    state = ons_step(ons_step(ons_init(0.1, 1.0), 0.5, 1), 0.5, 0)
    assert state.theta.a == pytest.approx(1.0, abs=1e-12)
    assert state.theta.b == pytest.approx(-0.0011099511669128936, abs=1e-9)


def test_ons_inverse_stays_consistent():
    rng = np.random.default_rng(2)
    state = ons_init(0.1, 1.0)
    for _ in range(300):
        state = ons_step(state, rng.uniform(0.01, 0.99), int(rng.random() < 0.5))
    np.testing.assert_allclose(state.A_inv @ state.A, np.eye(2), atol=1e-8)


def test_ons_curvature_matrix_grows_in_psd_order():
    rng = np.random.default_rng(4)
    state = ons_init(0.1, 1.0)
    prev = state.A.copy()
    for _ in range(100):
        state = ons_step(state, rng.uniform(0.01, 0.99), int(rng.random() < 0.4))
        diff_eigs = np.linalg.eigvalsh(state.A - prev)
        assert np.all(diff_eigs >= -1e-12)
        prev = state.A.copy()
    assert np.linalg.eigvalsh(state.A).min() >= 100.0 - 1e-9


def test_ons_projection_lands_on_ball_boundary():
    # a weak curvature matrix lets one confident mistake overshoot the ball
    state = OnsState(
        theta=PlattParams(99.9, 0.0),
        A=0.01 * np.eye(2),
        A_inv=100.0 * np.eye(2),
        gamma=0.1,
        cap_d=1.0,
    )
    stepped = ons_step(state, 0.50025, 1)
    norm = np.hypot(stepped.theta.a, stepped.theta.b)
    assert norm == pytest.approx(PARAM_RADIUS, abs=1e-9)


def test_projection_is_optimal_in_the_metric():
    rng = np.random.default_rng(8)
    for _ in range(25):
        B = rng.normal(size=(2, 2))
        A = B @ B.T + 0.1 * np.eye(2)
        target = rng.normal(scale=150, size=2)
        if np.linalg.norm(target) <= PARAM_RADIUS:
            continue
        proj = _project_to_ball(target, A)
        assert np.linalg.norm(proj) <= PARAM_RADIUS + 1e-7
        d_proj = (target - proj) @ A @ (target - proj)
        for _ in range(40):
            cand = rng.normal(size=2)
            cand *= rng.uniform(0, PARAM_RADIUS) / np.linalg.norm(cand)
            d_cand = (target - cand) @ A @ (target - cand)
            assert d_proj <= d_cand + 1e-7


def test_ons_step_rejects_bad_outcome():
    with pytest.raises(ValidationError):
        ons_step(ons_init(), 0.5, 2)


def test_ons_loss_improves_on_average():
    # statistical form: refitting on the same sample lowers its loss most
    # of the time; assert the mean improvement is positive
    rng = np.random.default_rng(12)
    gains = []
    for _ in range(200):
        state = ons_init(0.1, 1.0)
        for _ in range(rng.integers(0, 30)):
            state = ons_step(state, rng.uniform(0.05, 0.95), int(rng.random() < 0.5))
        p = rng.uniform(0.05, 0.95)
        y = int(rng.random() < 0.5)
        before = log_loss(platt_apply(state.theta, p), y)
        after = log_loss(platt_apply(ons_step(state, p, y).theta, p), y)
        gains.append(before - after)
    assert np.mean(gains) > 0


# ---------------------------------------------------------------------------
# run_stream
# ---------------------------------------------------------------------------


def random_stream(rng, n):
    p = rng.uniform(0.02, 0.98, n)
    y = (rng.random(n) < p).astype(int)
    return list(zip(p, y))


def test_method_none_passes_through():
    rng = np.random.default_rng(0)
    stream = random_stream(rng, 50)
    records = run_stream(ScheduleConfig(method="none"), stream)
    assert [r.p_cal for r in records] == [r.p_raw for r in records]
    assert [r.t for r in records] == list(range(2, 52))


def test_iw_refits_on_schedule():
    rng = np.random.default_rng(1)
    stream = random_stream(rng, 12)
    records = run_stream(ScheduleConfig(method="iw", uf=5), stream)
    # records 1-5 use the identity parameters
    for r in records[:5]:
        assert r.p_cal == pytest.approx(platt_apply(IDENTITY_PARAMS, r.p_raw), abs=1e-15)
    # records 6-10 use the fit on the first five points, 11-12 on the first ten
    fit5 = platt_fit_batch(stream[:5])
    for r in records[5:10]:
        assert r.p_cal == pytest.approx(platt_apply(fit5, r.p_raw), abs=1e-15)
    fit10 = platt_fit_batch(stream[:10])
    for r in records[10:]:
        assert r.p_cal == pytest.approx(platt_apply(fit10, r.p_raw), abs=1e-15)


def test_mw_equals_iw_while_window_covers_history():
    rng = np.random.default_rng(3)
    stream = random_stream(rng, 40)
    iw = run_stream(ScheduleConfig(method="iw", uf=7), stream)
    mw = run_stream(ScheduleConfig(method="mw", uf=7, ws=40), stream)
    for a, b in zip(iw, mw):
        assert a.p_cal == b.p_cal


def test_mw_uses_only_recent_window():
    rng = np.random.default_rng(6)
    stream = random_stream(rng, 30)
    records = run_stream(ScheduleConfig(method="mw", uf=10, ws=5), stream)
    fit = platt_fit_batch(stream[5:10])  # last five points at the first refit
    for r in records[10:20]:
        assert r.p_cal == pytest.approx(platt_apply(fit, r.p_raw), abs=1e-15)


def test_prediction_depends_only_on_prefix():
    rng = np.random.default_rng(7)
    stream = random_stream(rng, 60)
    for method, kwargs in (
        ("none", {}),
        ("iw", {"uf": 5}),
        ("mw", {"uf": 3, "ws": 10}),
        ("ops", {}),
    ):
        config = ScheduleConfig(method=method, **kwargs)
        full = run_stream(config, stream)
        for k in (1, 13, 37, 60):
            prefix = run_stream(config, stream[:k])
            assert [r.p_cal for r in prefix] == [r.p_cal for r in full[:k]]


def test_ops_stream_matches_manual_updates():
    rng = np.random.default_rng(9)
    stream = random_stream(rng, 25)
    records = run_stream(ScheduleConfig(method="ops", gamma=0.1, cap_d=1.0), stream)
    state = ons_init(0.1, 1.0)
    for (p, y), rec in zip(stream, records):
        assert rec.p_cal == pytest.approx(platt_apply(state.theta, p), abs=1e-15)
        state = ons_step(state, p, y)


def test_empty_stream_gives_empty_output():
    assert run_stream(ScheduleConfig(method="ops"), []) == []


def test_ops_regret_against_fixed_grid():
    # empirical regret at a short horizon: cumulative log-loss within
    # 50 * log(T) of the best fixed map on a 41x41 grid over [-10, 10]^2
    for seed in (0, 1, 2):
        rng = np.random.default_rng(seed)
        n = 1500
        p = rng.uniform(0.02, 0.98, n)
        a_true, b_true = rng.uniform(-4, 5), rng.uniform(-2, 2)
        y = (rng.random(n) < expit(a_true * np.log(p / (1 - p)) + b_true)).astype(int)
        records = run_stream(ScheduleConfig(method="ops"), list(zip(p, y)))
        ops_loss = log_loss([r.p_cal for r in records], y)
        z = clamped_logit(p)
        grid = np.linspace(-10, 10, 41)
        best = np.inf
        for a in grid:
            s = a * z[None, :] + grid[:, None]
            losses = np.logaddexp(0.0, s).sum(axis=1) - (s * y[None, :]).sum(axis=1)
            best = min(best, float(losses.min()))
        assert ops_loss <= best + 50.0 * np.log(n)


def test_schedule_config_validation():
    with pytest.raises(ValidationError):
        ScheduleConfig(method="bogus")
    with pytest.raises(ValidationError):
        ScheduleConfig(method="mw", uf=0)
    with pytest.raises(ValidationError):
        ScheduleConfig(method="mw", ws=0)
    with pytest.raises(ValidationError):
        ScheduleConfig(method="ops", gamma=0.0)
