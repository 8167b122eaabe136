# cython: boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled episode kernel; mirrors ``_qkernel_py.run_episode`` exactly."""

from libc.stdint cimport int64_t

cdef enum:
    MAX_ACTIONS = 256
    GOAL = 0
    DEADLOCK = 1
    STEP_CAP = 2


def run_episode(
    const int[:, ::1] g_delta,
    const unsigned char[::1] goal,
    const int[:, ::1] h_delta,
    int g_initial,
    int h_initial,
    double[:, ::1] q,
    int64_t[:, ::1] visits,
    const double[:, ::1] rewards,
    double gamma,
    double epsilon,
    double alpha,
    const double[::1] uniforms,
    int max_steps,
    int[::1] states_out,
    int[::1] actions_out,
    double[::1] rewards_out,
):
    cdef int n_actions = q.shape[1]
    cdef bint supervised = h_delta is not None
    cdef int admissible[MAX_ACTIONS]
    cdef int k, i, a, b, best, s2
    cdef int s = g_initial
    cdef int h = h_initial
    cdef int t = 0
    cdef double best_q, r, target, m, step_size, old
    cdef int64_t n
    if n_actions > MAX_ACTIONS:
        raise ValueError("too many actions for the compiled kernel")
    states_out[0] = s
    with nogil:
        while True:
            if goal[s]:
                break
            if t >= max_steps:
                break
            k = 0
            for a in range(n_actions):
                if not supervised or h_delta[h, a] >= 0:
                    admissible[k] = a
                    k += 1
            if k == 0:
                break
            if uniforms[2 * t] < epsilon:
                i = <int>(uniforms[2 * t + 1] * k)
                if i >= k:
                    i = k - 1
                best = admissible[i]
            else:
                best = admissible[0]
                best_q = q[s, best]
                for i in range(1, k):
                    b = admissible[i]
                    if q[s, b] > best_q:
                        best = b
                        best_q = q[s, b]
            a = best
            s2 = g_delta[s, a]
            r = rewards[s, a]
            if goal[s2]:
                target = r
            else:
                m = q[s2, 0]
                for b in range(1, n_actions):
                    if q[s2, b] > m:
                        m = q[s2, b]
                target = r + gamma * m
            n = visits[s, a]
            if alpha > 0.0:
                step_size = alpha
            else:
                step_size = 1.0 / (1.0 + <double>n)
            old = q[s, a]
            q[s, a] = old + step_size * (target - old)
            visits[s, a] = n + 1
            actions_out[t] = a
            rewards_out[t] = r
            if supervised:
                h = h_delta[h, a]
            s = s2
            t += 1
            states_out[t] = s
    if goal[s]:
        return t, GOAL, h
    if t >= max_steps:
        return t, STEP_CAP, h
    return t, DEADLOCK, h
