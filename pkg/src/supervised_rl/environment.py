"""Environment automata: total transition function, known initial and goal states."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .automata import UNDEFINED, Automaton, ParseError, coreachable, parse_aut, reachable

GRID_ACTIONS = ("a1", "a2", "a3", "a4")  # up, right, down, left


@dataclass(frozen=True)
class GridSpec:
    width: int
    height: int
    initial: int = 0
    goals: frozenset[int] | None = None  # default: bottom-right cell

    def __post_init__(self):
        if self.width < 1 or self.height < 1:
            raise ValueError("grid dimensions must be positive")
        n = self.width * self.height
        goals = frozenset({n - 1}) if self.goals is None else frozenset(self.goals)
        object.__setattr__(self, "goals", goals)
        if not 0 <= self.initial < n:
            raise ValueError(f"initial state {self.initial} outside grid of {n} cells")
        if any(not 0 <= g < n for g in goals):
            raise ValueError(f"goal states {sorted(goals)} outside grid of {n} cells")


@dataclass(frozen=True)
class RewardSpec:
    """Per-step reward ``step_reward``, plus ``goal_reward`` on entering a goal."""

    step_reward: float = -1.0
    goal_reward: float = 0.0
    gamma: float = 0.95

    def __post_init__(self):
        if not 0.0 <= self.gamma <= 1.0:
            raise ValueError("gamma must lie in [0, 1]")

    def table(self, env: Automaton) -> np.ndarray:
        """Dense ``rho(s, a)``; undefined transitions get the plain step reward."""
        goal = goal_mask(env)
        target = np.where(env.delta == UNDEFINED, 0, env.delta)
        return self.step_reward + self.goal_reward * goal[target].astype(float)


def goal_mask(env: Automaton) -> np.ndarray:
    mask = np.zeros(env.n_states, dtype=bool)
    mask[list(env.marked)] = True
    return mask


def grid_world(spec: GridSpec) -> Automaton:
    """Deterministic grid: row-major numbering from the top-left cell.

    Moving into a border leaves the agent in place. Goal cells self-loop on
    every action so the transition function stays total; episodes end by
    the goal check, not by a missing transition.
    """
    w, h = spec.width, spec.height
    cells = np.arange(w * h)
    row, col = divmod(cells, w)
    delta = np.stack(
        [
            np.where(row > 0, cells - w, cells),
            np.where(col < w - 1, cells + 1, cells),
            np.where(row < h - 1, cells + w, cells),
            np.where(col > 0, cells - 1, cells),
        ],
        axis=1,
    )
    for g in spec.goals:
        delta[g, :] = g
    return Automaton(GRID_ACTIONS, delta, spec.initial, spec.goals)


def load_env(text: str) -> Automaton:
    """Environment from ``.aut`` text, or from the ``grid:`` shorthand.

    Shorthand::

        grid: 4 4
        initial: 0
        goals: 15
    """
    header = [l.split("#", 1)[0].strip() for l in text.splitlines()]
    if not any(l.startswith("grid:") for l in header):
        return parse_aut(text)
    width = height = None
    initial = 0
    goals = None
    for lineno, line in enumerate(header, start=1):
        if not line:
            continue
        key, sep, value = line.partition(":")
        if not sep:
            raise ParseError(f"expected 'key: value', got {line!r}", lineno)
        if key not in ("grid", "initial", "goals", "marked"):
            raise ParseError(f"unknown key {key!r} in grid shorthand", lineno)
        fields = _ints(value, lineno, key)
        if key == "grid":
            if len(fields) != 2:
                raise ParseError("grid needs '<width> <height>'", lineno)
            width, height = fields
        elif key == "initial":
            if len(fields) != 1:
                raise ParseError("initial expects one integer", lineno)
            initial = fields[0]
        else:
            goals = frozenset(fields)
    try:
        return grid_world(GridSpec(width, height, initial, goals))
    except ValueError as exc:
        raise ParseError(str(exc)) from None


def _ints(value: str, lineno: int, key: str) -> list[int]:
    try:
        return [int(f) for f in value.split()]
    except ValueError:
        raise ParseError(f"{key}: expected integers, got {value.strip()!r}", lineno) from None


def validate_env(env: Automaton) -> list[str]:
    """Check the environment assumptions; violations are returned, not raised.

    Finite state set is given by construction. Checked: a nonempty goal set,
    a total transition function at every non-goal state, and trimness (every
    state reachable and able to reach a goal).
    """
    violations = []
    if not env.marked:
        violations.append("no goal states")
    goal = goal_mask(env)
    for s, a in zip(*np.nonzero(env.delta == UNDEFINED)):
        if not goal[s]:
            violations.append(f"transition function not total at ({int(s)}, {env.labels[a]})")
    reach = reachable(env)
    for g in sorted(env.marked - reach):
        violations.append(f"goal state {g} is unreachable")
    for s in sorted(set(range(env.n_states)) - reach - env.marked):
        violations.append(f"state {s} is unreachable")
    if env.marked:
        for s in sorted(set(range(env.n_states)) - coreachable(env)):
            violations.append(f"state {s} cannot reach a goal")
    return violations
