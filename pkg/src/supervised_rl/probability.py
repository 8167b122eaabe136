"""Probabilistic languages of the unconstrained and supervised learners.

A behavior policy maps ``(state, admissible actions)`` to a distribution that
is strictly positive on exactly the admissible actions. Under supervision the
admissible set is the intersection of what the environment and the
specification allow; the supervisor's own factor is a 0/1 indicator.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Sequence

import math

import numpy as np

from .automata import (
    DEFAULT_ENUMERATION_CAP,
    UNDEFINED,
    Automaton,
    OracleOverflowError,
    product,
)
from .coverage import enabled_union


class UniformPolicy:
    def distribution(self, state: int, admissible: Sequence[int]) -> dict[int, float]:
        admissible = sorted(admissible)
        if not admissible:
            return {}
        p = 1.0 / len(admissible)
        return {a: p for a in admissible}


@dataclass
class EpsilonGreedyPolicy:
    """Epsilon-greedy over the admissible set, matching ``learner.select_action``."""

    q: np.ndarray
    epsilon: float

    def distribution(self, state: int, admissible: Sequence[int]) -> dict[int, float]:
        admissible = sorted(admissible)
        if not admissible:
            return {}
        row = self.q[state]
        best = admissible[0]
        for a in admissible[1:]:
            if row[a] > row[best]:
                best = a
        share = self.epsilon / len(admissible)
        probs = {a: share for a in admissible}
        probs[best] += 1.0 - self.epsilon
        return probs


BehaviorPolicy = UniformPolicy | EpsilonGreedyPolicy


def _active(aut: Automaton, s: int) -> list[int]:
    return [a for a in range(aut.n_actions) if aut.delta[s, a] != UNDEFINED]


def string_prob_unconstrained(env: Automaton, policy, string: Iterable[str]) -> float:
    """Probability that ``(env, policy)`` generates ``string``; 0 outside L(env)."""
    s = env.initial
    prob = 1.0
    for label in string:
        a = env.action_id(label)
        dist = policy.distribution(s, _active(env, s))
        if a not in dist:
            return 0.0
        prob *= dist[a]
        s = int(env.delta[s, a])
    return prob


def step_factors(spec: Automaton, env: Automaton, policy, string: Iterable[str]) -> list[tuple[float, int]]:
    """Per-step ``(policy probability, supervisor indicator)`` along ``string``.

    Stops after the first step whose action is not admissible.
    """
    spec = spec.relabel(env.labels)
    g, h = env.initial, spec.initial
    factors = []
    for label in string:
        a = env.action_id(label)
        admissible = [b for b in range(env.n_actions)
                      if env.delta[g, b] != UNDEFINED and spec.delta[h, b] != UNDEFINED]
        enabled = int(a in admissible)
        p = policy.distribution(g, admissible).get(a, 0.0)
        factors.append((p, enabled))
        if not enabled or env.delta[g, a] == UNDEFINED:
            break
        g, h = int(env.delta[g, a]), int(spec.delta[h, a])
    return factors


def string_prob_supervised(spec: Automaton, env: Automaton, policy, string: Iterable[str]) -> float:
    """Probability the supervised learner generates ``string``; 0 outside L(spec || env)."""
    prob = 1.0
    for p, enabled in step_factors(spec, env, policy, string):
        prob *= p * enabled
        if prob == 0.0:
            return 0.0
    return prob


def string_logprob_supervised(spec: Automaton, env: Automaton, policy, string: Iterable[str]) -> float:
    """Natural log of :func:`string_prob_supervised`; ``-inf`` when it is 0.

    Safe on long histories where the plain product would underflow. The
    policy distribution is cached per ``(env state, spec state)`` pair, which
    assumes the policy does not change along the string.
    """
    spec = spec.relabel(env.labels)
    g_delta, h_delta = env.delta.tolist(), spec.delta.tolist()
    index = {l: i for i, l in enumerate(env.labels)}
    cache: dict[tuple[int, int], dict[int, float]] = {}
    g, h = env.initial, spec.initial
    total = 0.0
    for label in string:
        a = index[label]
        dist = cache.get((g, h))
        if dist is None:
            admissible = [b for b in range(env.n_actions) if g_delta[g][b] >= 0 and h_delta[h][b] >= 0]
            dist = cache[(g, h)] = policy.distribution(g, admissible)
        p = dist.get(a, 0.0)
        if p <= 0.0:
            return -math.inf
        total += math.log(p)
        g, h = g_delta[g][a], h_delta[h][a]
    return total


@dataclass(frozen=True)
class VisitProbability:
    value: float
    exact: bool  # True only when no admitted history can ever take the pair
    witness: tuple[str, ...] | None = None


def visit_prob(
    spec: Automaton | None,
    env: Automaton,
    policy,
    state: int,
    action: str,
    max_len: int,
    cap: int = DEFAULT_ENUMERATION_CAP,
) -> VisitProbability:
    """Best single-history probability of visiting ``(state, action)``.

    Searches admitted histories ``l`` with ``|l| <= max_len`` reaching
    ``state`` and returns ``max p(a|l) * p_sup(a|l) * L^p(l)``, a lower bound
    on how likely the pair is to be visited in an episode. When the product
    automaton shows the action is never enabled at the state, returns an
    exact 0.
    """
    a = env.action_id(action)
    if spec is not None:
        spec = spec.relabel(env.labels)
        m = product(spec, env)
        if action not in enabled_union(m, state):
            return VisitProbability(0.0, exact=True)
    best, witness = 0.0, None
    frontier = [((), env.initial, spec.initial if spec is not None else 0, 1.0)]
    seen = 0
    for depth in range(max_len + 1):
        nxt = []
        for string, g, h, prob in frontier:
            admissible = [b for b in range(env.n_actions)
                          if env.delta[g, b] != UNDEFINED and (spec is None or spec.delta[h, b] != UNDEFINED)]
            dist = policy.distribution(g, admissible)
            if g == state and a in dist and prob * dist[a] > best:
                best, witness = prob * dist[a], string
            if depth == max_len or g in env.marked:
                continue
            for b, p in dist.items():
                nxt.append((string + (env.labels[b],), int(env.delta[g, b]),
                            int(spec.delta[h, b]) if spec is not None else 0, prob * p))
            seen += len(dist)
            if seen > cap:
                raise OracleOverflowError(f"more than {cap} histories up to length {max_len}")
        frontier = nxt
    return VisitProbability(best, exact=False, witness=witness)
