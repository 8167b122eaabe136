import os
import subprocess
import sys

import numpy as np
import pytest
from scipy import stats

from supervised_rl import _backend, _qkernel_py
from supervised_rl.automata import AutomatonError, from_transitions, run
from supervised_rl.coverage import check_coverage
from supervised_rl.environment import GRID_ACTIONS, GridSpec, RewardSpec, grid_world
from supervised_rl.learner import (
    ConvergenceError,
    DeadlockError,
    LearnConfig,
    QTable,
    run_episode,
    select_action,
    train,
    value_iteration_oracle,
)
from supervised_rl.supervisor import realize


def manhattan_q(env, w, gamma, goal=15):
    """Closed-form Q* for step -1, goal 0 on a grid with a corner goal."""
    gr, gc = divmod(goal, w)
    q = np.zeros(env.delta.shape)
    for s in range(env.n_states):
        if s == goal:
            continue
        for a in range(4):
            r, c = divmod(int(env.delta[s, a]), w)
            d = abs(r - gr) + abs(c - gc)
            q[s, a] = -(d + 1) if gamma == 1 else -(1 - gamma ** (d + 1)) / (1 - gamma)
    return q


def test_oracle_closed_form_undiscounted(grid):
    q = value_iteration_oracle(grid, RewardSpec(-1.0, 0.0, 1.0)).values
    assert q[14, 1] == -1.0
    assert q[0, 1] == -6.0
    np.testing.assert_allclose(q, manhattan_q(grid, 4, 1.0), atol=1e-9)
    assert (q[15] == 0).all()


def test_oracle_closed_form_discounted(grid):
    q = value_iteration_oracle(grid, RewardSpec(-1.0, 0.0, 0.95)).values
    np.testing.assert_allclose(q, manhattan_q(grid, 4, 0.95), atol=1e-10)


def test_oracle_zero_discount_is_reward(grid):
    rewards = RewardSpec(-1.0, 3.0, 0.0)
    q = value_iteration_oracle(grid, rewards).values
    expected = rewards.table(grid)
    expected[15] = 0.0
    np.testing.assert_array_equal(q, expected)


def test_oracle_errors(grid):
    with pytest.raises(ValueError):
        value_iteration_oracle(grid, RewardSpec(0.0, 1.0, 1.0))
    with pytest.raises(ConvergenceError):
        value_iteration_oracle(grid, RewardSpec(), max_iter=2)
    partial = from_transitions(("a",), 2, [(1, "a", 1)], marked=[1])
    with pytest.raises(AutomatonError, match="not total"):
        value_iteration_oracle(partial, RewardSpec())


def test_select_action_singleton_and_deadlock():
    rng = np.random.default_rng(0)
    q_row = np.array([5.0, 0.0, 9.0])
    assert all(select_action(q_row, [1], 0.5, rng) == 1 for _ in range(50))
    with pytest.raises(DeadlockError):
        select_action(q_row, [], 0.5, rng)


def test_select_action_greedy_ties_lowest():
    rng = np.random.default_rng(0)
    q_row = np.array([1.0, 7.0, 7.0, 7.0])
    picks = {select_action(q_row, [3, 2, 0], 1e-12, rng) for _ in range(100)}
    assert picks == {2}


def test_select_action_epsilon_one_is_uniform():
    rng = np.random.default_rng(5)
    admissible = [0, 2, 3]
    draws = [select_action(np.array([9.0, 0.0, 0.0, 0.0]), admissible, 1.0, rng) for _ in range(10_000)]
    counts = np.array([draws.count(a) for a in admissible])
    assert stats.chisquare(counts).pvalue > 1e-3


def test_select_action_positive_on_admissible():
    rng = np.random.default_rng(1)
    seen = {select_action(np.array([0.0, 5.0, 1.0, 2.0]), [0, 1, 2, 3], 0.2, rng) for _ in range(2000)}
    assert seen == {0, 1, 2, 3}


def test_hand_computed_updates():
    # state 0: x -> goal 1, y -> stay; reward -1 per step plus 5 on entering the goal
    env = from_transitions(("x", "y"), 2, [(0, "x", 1), (0, "y", 0), (1, "x", 1), (1, "y", 1)], marked=[1])
    rewards = RewardSpec(-1.0, 5.0, 0.9)
    g_delta = env.delta.astype(np.int32)
    goal = np.array([0, 1], dtype=np.uint8)
    rho = rewards.table(env)
    q = np.zeros((2, 2))
    visits = np.zeros((2, 2), dtype=np.int64)
    states, actions, rs = np.zeros(4, np.int32), np.zeros(3, np.int32), np.zeros(3)
    for name, kernel in _backend.KERNELS.items():
        q[:] = 0.0
        visits[:] = 0
        # explore y, then explore x; visit-count alpha is 1 on first visits
        u = np.array([0.0, 0.9, 0.0, 0.1, 0.5, 0.5])
        steps, cause, _ = kernel(g_delta, goal, None, 0, 0, q, visits, rho, 0.9, 0.5, 0.0, u, 3, states, actions, rs)
        assert (steps, cause) == (2, _qkernel_py.GOAL), name
        assert q[0].tolist() == [4.0, -1.0]
        # constant alpha 0.5, explore y: target -1 + 0.9 * 4 = 2.6, new value -1 + 0.5 * 3.6
        u = np.array([0.0, 0.9, 0.9, 0.9])
        steps, cause, _ = kernel(g_delta, goal, None, 0, 0, q, visits, rho, 0.9, 0.5, 0.5, u, 1, states, actions, rs)
        assert (steps, cause) == (1, _qkernel_py.STEP_CAP)
        assert q[0, 1] == pytest.approx(0.8)
        assert visits[0].tolist() == [1, 2]


def test_visit_count_alpha_uses_prior_count():
    env = from_transitions(("y",), 2, [(0, "y", 0), (1, "y", 1)], marked=[1])
    q = np.zeros((2, 1))
    visits = np.zeros((2, 1), dtype=np.int64)
    out = np.zeros(4, np.int32), np.zeros(3, np.int32), np.zeros(3)
    _qkernel_py.run_episode(env.delta, np.array([0, 1], np.uint8), None, 0, 0, q, visits,
                            np.full((2, 1), -1.0), 0.5, 0.1, 0.0, np.full(6, 0.5), 3, *out)
    # alpha 1, 1/2, 1/3: -1 ; -1 + (-1.5 + 1) / 2 = -1.25 ; -1.25 + (-1.625 + 1.25) / 3 = -1.375
    assert q[0, 0] == pytest.approx(-1.375)
    assert visits[0, 0] == 3


def test_deadlock_truncates_without_update(grid):
    labels = GRID_ACTIONS
    # moving down is final: afterwards nothing is enabled
    spec = from_transitions(labels, 2, [(0, a, 0) for a in ("a1", "a2", "a4")] + [(0, "a3", 1)], marked=[0, 1])
    sup = realize(spec)
    q = QTable.zeros(16, 4)
    cfg = LearnConfig(episodes=1, max_steps=50, epsilon=1.0, seed=3)
    trace, _ = run_episode(grid, sup, q, cfg, RewardSpec(), np.random.default_rng(3))
    assert trace.cause == "deadlock"
    assert trace.labels(labels)[-1] == "a3"
    assert sup.current == 1 and sup.admissible().deadlocked
    assert q.visits.sum() == len(trace)
    result = train(grid, spec, LearnConfig(episodes=200, epsilon=0.5, seed=1))
    assert result.deadlocks > 0
    assert result.cause_counts()["deadlock"] == result.deadlocks


def test_unsupervised_episode_ends_by_goal_or_cap(grid):
    result = train(grid, None, LearnConfig(episodes=300, max_steps=20, epsilon=1.0, seed=9))
    assert set(result.cause_counts()) == {"goal", "deadlock", "step-cap"}
    assert result.deadlocks == 0
    assert result.cause_counts()["goal"] + result.cause_counts()["step-cap"] == 300
    assert result.lengths.max() <= 20


def test_traces_consistent_with_environment(runs, grid):
    for name, result in runs.items():
        for trace in result.traces[:500]:
            assert trace.states[0] == grid.initial
            for t, a in enumerate(trace.actions):
                assert grid.delta[trace.states[t], a] == trace.states[t + 1]


def test_two_right_never_appears(runs):
    for trace in runs["h1"].traces:
        labels = trace.labels(GRID_ACTIONS)
        assert not any(x == y == "a2" for x, y in zip(labels, labels[1:]))


def test_right_only_after_down(runs):
    for trace in runs["h2"].traces:
        labels = trace.labels(GRID_ACTIONS)
        assert all(i > 0 and labels[i - 1] == "a3" for i, l in enumerate(labels) if l == "a2")


def test_goal_rows_stay_zero(runs):
    for result in runs.values():
        assert (result.q.values[15] == 0).all()
        assert (result.q.visits[15] == 0).all()


def test_unconstrained_converges_to_oracle(runs, grid):
    q_star = value_iteration_oracle(grid, RewardSpec(-1.0, 0.0, 0.95)).values
    err = np.abs(runs["none"].q.values - q_star).max()
    assert err < 1e-3, f"max |Q - Q*| = {err:.4f}"


def test_covering_spec_keeps_optimal_greedy_policy(runs, grid):
    q_star = QTable(value_iteration_oracle(grid, RewardSpec(-1.0, 0.0, 0.95)).values, None)
    learned = runs["h1"].q
    for s in range(15):
        assert learned.greedy_set(s) & q_star.greedy_set(s), s


def test_covering_spec_visits_every_pair(runs):
    assert (runs["h1"].q.visits[:15] > 0).all()


def test_uncovered_pairs_are_never_visited(runs, grid, h2):
    uncovered = {(s, grid.action_id(l)) for s, l in check_coverage(h2, grid).uncovered}
    visits = runs["h2"].q.visits
    for s in range(15):
        for a in range(4):
            assert (visits[s, a] == 0) == ((s, a) in uncovered), (s, a)


def test_reproducible_and_seed_sensitive(grid, h1):
    cfg = LearnConfig(episodes=500, seed=123)
    a, b = train(grid, h1, cfg), train(grid, h1, cfg)
    np.testing.assert_array_equal(a.q.values, b.q.values)
    np.testing.assert_array_equal(a.q.visits, b.q.visits)
    assert a.trace_log() == b.trace_log()
    c = train(grid, h1, LearnConfig(episodes=500, seed=124))
    assert a.trace_log() != c.trace_log()


@pytest.mark.skipif("cython" not in _backend.KERNELS, reason="compiled kernel not built")
@pytest.mark.parametrize("spec_name", [None, "h1", "h2"])
@pytest.mark.parametrize("schedule", ["visit-count", "constant"])
def test_backends_bit_identical(spec_name, schedule, request, grid):
    spec = request.getfixturevalue(spec_name) if spec_name else None
    cfg = LearnConfig(episodes=300, max_steps=100, alpha_schedule=schedule, alpha=0.3, seed=7)
    py = train(grid, spec, cfg, backend="python")
    cy = train(grid, spec, cfg, backend="cython")
    assert (py.backend, cy.backend) == ("python", "cython")
    np.testing.assert_array_equal(py.q.values, cy.q.values)
    np.testing.assert_array_equal(py.q.visits, cy.q.visits)
    np.testing.assert_array_equal(py.causes, cy.causes)
    assert py.trace_log() == cy.trace_log()


def test_run_episode_leaves_supervisor_at_history_state(grid, h2):
    sup = realize(h2)
    sup.advance("a3")
    trace, _ = run_episode(grid, sup, QTable.zeros(16, 4), LearnConfig(max_steps=40), RewardSpec(),
                           np.random.default_rng(0))
    assert sup.current == run(h2, trace.labels(GRID_ACTIONS))


def test_learn_config_validation():
    with pytest.raises(ValueError):
        LearnConfig(episodes=0)
    with pytest.raises(ValueError):
        LearnConfig(epsilon=0.0)
    with pytest.raises(ValueError):
        LearnConfig(alpha_schedule="constant", alpha=0.0)
    with pytest.raises(ValueError):
        LearnConfig(alpha_schedule="harmonic")


def test_unknown_backend():
    with pytest.raises(ValueError):
        _backend.get_kernel("fortran")


def test_output_formats(grid):
    result = train(grid, None, LearnConfig(episodes=3, seed=0))
    q_lines = result.q.to_csv(grid.labels).splitlines()
    assert q_lines[:2] == ["# format: v1", "state,action,q_value,visit_count"]
    assert len(q_lines) == 2 + 64
    state, action, value, count = q_lines[2].split(",")
    assert (state, action) == ("0", "a1") and float(value) <= 0 and int(count) >= 0
    r_lines = result.returns_csv().splitlines()
    assert r_lines[1] == "episode,return,length,cause"
    assert len(r_lines) == 5
    t_lines = result.trace_log().splitlines()
    assert t_lines[0] == "# format: v1" and len(t_lines) == 4
    assert set(" ".join(t_lines[1:]).split()) <= set(GRID_ACTIONS)


def test_larger_grid_reaches_optimum_with_constant_alpha():
    env = grid_world(GridSpec(3, 2))
    result = train(env, None, LearnConfig(episodes=3000, alpha_schedule="constant", alpha=0.5, seed=2))
    q_star = value_iteration_oracle(env, RewardSpec()).values
    np.testing.assert_allclose(result.q.values, q_star, atol=1e-3)


@pytest.mark.parametrize("requested, expected", [("python", "python"), ("", None)])
def test_backend_selected_at_import(requested, expected):
    env = {**os.environ, "SUPERVISED_RL_BACKEND": requested}
    out = subprocess.run([sys.executable, "-c", "import supervised_rl; print(supervised_rl.BACKEND)"],
                         env=env, capture_output=True, text=True, check=True).stdout.strip()
    assert out == (expected or ("cython" if "cython" in _backend.KERNELS else "python"))


def test_bogus_backend_request_fails_at_import():
    env = {**os.environ, "SUPERVISED_RL_BACKEND": "fortran"}
    proc = subprocess.run([sys.executable, "-c", "import supervised_rl"], env=env, capture_output=True, text=True)
    assert proc.returncode != 0 and "SUPERVISED_RL_BACKEND" in proc.stderr
