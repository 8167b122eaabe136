"""Pure-Python episode kernel. Reference semantics for ``_qkernel.pyx``.

Both kernels consume exactly two uniforms per step (explore test, then the
exploration pick) so a given uniform buffer yields bit-identical traces and
Q-tables in either backend.
"""

GOAL, DEADLOCK, STEP_CAP = 0, 1, 2


def choose(q_row, admissible, epsilon, u_explore, u_pick):
    """Epsilon-greedy over ``admissible`` (sorted ids); ties go to the lowest id."""
    k = len(admissible)
    if u_explore < epsilon:
        i = int(u_pick * k)
        return admissible[i if i < k else k - 1]
    best = admissible[0]
    best_q = q_row[best]
    for a in admissible[1:]:
        if q_row[a] > best_q:
            best = a
            best_q = q_row[a]
    return best


def run_episode(
    g_delta,
    goal,
    h_delta,
    g_initial,
    h_initial,
    q,
    visits,
    rewards,
    gamma,
    epsilon,
    alpha,
    uniforms,
    max_steps,
    states_out,
    actions_out,
    rewards_out,
):
    """One Q-learning episode, updating ``q`` and ``visits`` in place.

    ``h_delta`` is the specification transition table or ``None`` when
    unsupervised. ``alpha <= 0`` selects the 1/(1+n(s,a)) schedule.
    Returns ``(steps, cause, final_spec_state)``.
    """
    n_actions = len(q[0])
    all_actions = list(range(n_actions))
    s = g_initial
    h = h_initial
    t = 0
    states_out[0] = s
    while True:
        if goal[s]:
            return t, GOAL, h
        if t >= max_steps:
            return t, STEP_CAP, h
        if h_delta is None:
            admissible = all_actions
        else:
            row = h_delta[h]
            admissible = [a for a in all_actions if row[a] >= 0]
            if not admissible:
                return t, DEADLOCK, h
        q_row = q[s]
        a = choose(q_row, admissible, epsilon, uniforms[2 * t], uniforms[2 * t + 1])
        s2 = int(g_delta[s, a])
        r = float(rewards[s, a])
        if goal[s2]:
            target = r
        else:
            nxt = q[s2]
            m = nxt[0]
            for b in range(1, n_actions):
                if nxt[b] > m:
                    m = nxt[b]
            target = r + gamma * float(m)
        n = int(visits[s, a])
        step_size = alpha if alpha > 0.0 else 1.0 / (1.0 + n)
        old = float(q_row[a])
        q[s, a] = old + step_size * (target - old)
        visits[s, a] = n + 1
        actions_out[t] = a
        rewards_out[t] = r
        if h_delta is not None:
            h = int(h_delta[h, a])
        s = s2
        t += 1
        states_out[t] = s
