"""Tabular Q-learning, optionally under a supervisor, plus an exact Q* oracle.

The update is one-step Q-learning with the bootstrap max taken over the full
action set (not just the admissible one): the target is the unconstrained
optimum. Goal states bootstrap to zero. A deadlocked episode is truncated
without any terminal update.
"""
from __future__ import annotations

import io
from dataclasses import dataclass, field
from typing import Literal

import numpy as np

from . import _backend
from ._qkernel_py import DEADLOCK, GOAL, STEP_CAP, choose
from .automata import FORMAT_HEADER, UNDEFINED, Automaton, AutomatonError
from .environment import RewardSpec, goal_mask
from .supervisor import Supervisor

CAUSES = {GOAL: "goal", DEADLOCK: "deadlock", STEP_CAP: "step-cap"}


class ConvergenceError(RuntimeError):
    pass


class DeadlockError(RuntimeError):
    """No admissible action is left to choose from."""


@dataclass
class QTable:
    values: np.ndarray
    visits: np.ndarray

    @classmethod
    def zeros(cls, n_states: int, n_actions: int) -> "QTable":
        return cls(np.zeros((n_states, n_actions)), np.zeros((n_states, n_actions), dtype=np.int64))

    def copy(self) -> "QTable":
        return QTable(self.values.copy(), self.visits.copy())

    def greedy_set(self, s: int, tol: float = 1e-9) -> frozenset[int]:
        row = self.values[s]
        return frozenset(int(a) for a in np.flatnonzero(row >= row.max() - tol))

    def to_csv(self, labels) -> str:
        out = io.StringIO()
        out.write(FORMAT_HEADER + "\nstate,action,q_value,visit_count\n")
        for s in range(self.values.shape[0]):
            for a, label in enumerate(labels):
                out.write(f"{s},{label},{float(self.values[s, a])!r},{self.visits[s, a]}\n")
        return out.getvalue()


@dataclass(frozen=True)
class LearnConfig:
    episodes: int = 20_000
    max_steps: int = 500
    epsilon: float = 0.2
    alpha_schedule: Literal["visit-count", "constant"] = "visit-count"
    alpha: float = 0.1  # only used by the constant schedule
    seed: int = 0

    def __post_init__(self):
        if self.episodes < 1 or self.max_steps < 1:
            raise ValueError("episodes and max_steps must be >= 1")
        if not 0.0 < self.epsilon <= 1.0:
            raise ValueError("epsilon must lie in (0, 1]")
        if self.alpha_schedule not in ("visit-count", "constant"):
            raise ValueError(f"unknown alpha schedule {self.alpha_schedule!r}")
        if self.alpha_schedule == "constant" and not 0.0 < self.alpha <= 1.0:
            raise ValueError("constant alpha must lie in (0, 1]")

    @property
    def kernel_alpha(self) -> float:
        return self.alpha if self.alpha_schedule == "constant" else 0.0


@dataclass(frozen=True)
class EpisodeTrace:
    index: int
    states: np.ndarray  # S_0 .. S_n (one longer than actions)
    actions: np.ndarray
    rewards: np.ndarray
    cause: str

    def __len__(self):
        return len(self.actions)

    def labels(self, alphabet) -> tuple[str, ...]:
        return tuple(alphabet[a] for a in self.actions)

    @property
    def ret(self) -> float:
        return float(self.rewards.sum())


@dataclass(repr=False)
class TrainResult:
    q: QTable
    returns: np.ndarray
    lengths: np.ndarray
    causes: np.ndarray
    traces: list[EpisodeTrace] | None
    backend: str
    labels: tuple[str, ...] = field(default=())

    def __repr__(self):
        return f"TrainResult(episodes={len(self.returns)}, backend={self.backend}, causes={self.cause_counts()})"

    @property
    def deadlocks(self) -> int:
        return int((self.causes == DEADLOCK).sum())

    def cause_counts(self) -> dict[str, int]:
        return {name: int((self.causes == code).sum()) for code, name in CAUSES.items()}

    def returns_csv(self) -> str:
        out = io.StringIO()
        out.write(FORMAT_HEADER + "\nepisode,return,length,cause\n")
        for i, (r, n, c) in enumerate(zip(self.returns, self.lengths, self.causes)):
            out.write(f"{i},{float(r)!r},{n},{CAUSES[int(c)]}\n")
        return out.getvalue()

    def trace_log(self) -> str:
        if self.traces is None:
            raise ValueError("traces were not kept")
        lines = [FORMAT_HEADER]
        lines += [" ".join(t.labels(self.labels)) for t in self.traces]
        return "\n".join(lines) + "\n"


def _require_total(env: Automaton) -> None:
    goal = goal_mask(env)
    missing = (env.delta == UNDEFINED) & ~goal[:, None]
    if missing.any():
        s, a = map(int, np.argwhere(missing)[0])
        raise AutomatonError(f"environment transition function is not total at ({s}, {env.labels[a]})")


def value_iteration_oracle(
    env: Automaton, rewards: RewardSpec, tol: float = 1e-12, max_iter: int = 100_000
) -> QTable:
    """Exact ``Q*`` of the known deterministic environment by value iteration."""
    _require_total(env)
    if rewards.gamma >= 1.0 and rewards.step_reward >= 0.0:
        raise ValueError("value iteration needs gamma < 1 or a negative step reward")
    goal = goal_mask(env)
    rho = rewards.table(env)
    target = np.where(env.delta == UNDEFINED, 0, env.delta)
    into_goal = goal[target]
    q = np.zeros_like(rho)
    for _ in range(max_iter):
        v = q.max(axis=1)
        nxt = rho + rewards.gamma * np.where(into_goal, 0.0, v[target])
        nxt[goal] = 0.0
        change = np.abs(nxt - q).max()
        q = nxt
        if change < tol:
            return QTable(q, np.zeros(q.shape, dtype=np.int64))
    raise ConvergenceError(f"value iteration did not converge within {max_iter} sweeps")


def select_action(q_row, admissible, epsilon: float, rng: np.random.Generator) -> int:
    """Epsilon-greedy choice restricted to the admissible actions.

    With probability ``epsilon`` pick uniformly among them, otherwise the
    admissible argmax of ``q_row`` with ties to the lowest id.
    """
    admissible = sorted(admissible)
    if not admissible:
        raise DeadlockError("admissible action set is empty")
    u = rng.random(2)
    return choose(q_row, admissible, epsilon, u[0], u[1])


class _EpisodeRunner:
    """Pre-validated arrays shared by all episodes of one training run."""

    def __init__(self, env: Automaton, spec: Automaton | None, rewards: RewardSpec, config: LearnConfig, backend):
        _require_total(env)
        self.env = env
        self.config = config
        self.rewards = rewards
        self.kernel = _backend.get_kernel(backend)
        self.backend = backend or _backend.BACKEND
        self.g_delta = np.ascontiguousarray(np.where(env.delta == UNDEFINED, 0, env.delta), dtype=np.int32)
        self.goal = goal_mask(env).astype(np.uint8)
        self.rho = np.ascontiguousarray(rewards.table(env), dtype=np.float64)
        if spec is not None:
            spec = spec.relabel(env.labels)
            self.h_delta = np.ascontiguousarray(spec.delta, dtype=np.int32)
        else:
            self.h_delta = None
        self.spec = spec
        n = config.max_steps
        self.states = np.zeros(n + 1, dtype=np.int32)
        self.actions = np.zeros(n, dtype=np.int32)
        self.step_rewards = np.zeros(n, dtype=np.float64)

    def run(self, q: QTable, rng: np.random.Generator, index: int):
        cfg = self.config
        uniforms = rng.random(2 * cfg.max_steps)
        h0 = self.spec.initial if self.spec is not None else 0
        steps, cause, h = self.kernel(
            self.g_delta,
            self.goal,
            self.h_delta,
            self.env.initial,
            h0,
            q.values,
            q.visits,
            self.rho,
            float(self.rewards.gamma),
            float(cfg.epsilon),
            float(cfg.kernel_alpha),
            uniforms,
            cfg.max_steps,
            self.states,
            self.actions,
            self.step_rewards,
        )
        trace = EpisodeTrace(
            index,
            self.states[: steps + 1].copy(),
            self.actions[:steps].copy(),
            self.step_rewards[:steps].copy(),
            CAUSES[cause],
        )
        return trace, cause, h


def run_episode(
    env: Automaton,
    supervisor: Supervisor | None,
    q: QTable,
    config: LearnConfig,
    rewards: RewardSpec,
    rng: np.random.Generator,
    index: int = 0,
    backend: str | None = None,
) -> tuple[EpisodeTrace, QTable]:
    """Run one episode from the environment's initial state.

    The supervisor is reset first and left at the specification state that
    the episode's history leads to. ``q`` is updated in place and returned.
    """
    spec = supervisor.spec if supervisor is not None else None
    runner = _EpisodeRunner(env, spec, rewards, config, backend)
    if supervisor is not None:
        supervisor.reset()
    trace, _, h = runner.run(q, rng, index)
    if supervisor is not None:
        supervisor.current = h
    return trace, q


def train(
    env: Automaton,
    spec: Automaton | None,
    config: LearnConfig,
    rewards: RewardSpec | None = None,
    keep_traces: bool = True,
    backend: str | None = None,
) -> TrainResult:
    """``config.episodes`` episodes of Q-learning from a zero table.

    Reproducible: the only randomness is ``numpy.random.default_rng(config.seed)``,
    consumed identically by either kernel backend.
    """
    rewards = rewards or RewardSpec()
    if spec is not None:
        Supervisor(spec.relabel(env.labels))  # validates realizability
    runner = _EpisodeRunner(env, spec, rewards, config, backend)
    rng = np.random.default_rng(config.seed)
    q = QTable.zeros(env.n_states, env.n_actions)
    n = config.episodes
    returns = np.zeros(n)
    lengths = np.zeros(n, dtype=np.int64)
    causes = np.zeros(n, dtype=np.int8)
    traces = [] if keep_traces else None
    for i in range(n):
        trace, cause, _ = runner.run(q, rng, i)
        returns[i] = trace.ret
        lengths[i] = len(trace)
        causes[i] = cause
        if traces is not None:
            traces.append(trace)
    return TrainResult(q, returns, lengths, causes, traces, runner.backend, env.labels)
