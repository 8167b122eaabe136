from pathlib import Path

import numpy as np
import pytest
from hypothesis import strategies as st

from supervised_rl.automata import from_transitions
from supervised_rl.environment import GRID_ACTIONS, GridSpec, RewardSpec, grid_world
from supervised_rl.learner import LearnConfig, train
from supervised_rl.specs import forbid_factors, only_immediately_after

DATA = Path(__file__).resolve().parent.parent / "data"


@pytest.fixture(scope="session")
def grid():
    return grid_world(GridSpec(4, 4))


@pytest.fixture(scope="session")
def h1():
    return forbid_factors(GRID_ACTIONS, [("a2", "a2")])


@pytest.fixture(scope="session")
def h2():
    return only_immediately_after(GRID_ACTIONS, ("a3",), "a2")


@pytest.fixture(scope="session")
def data_dir():
    return DATA


@pytest.fixture(scope="session")
def runs(grid, h1, h2):
    """Seed-42 training runs shared by the expensive tests: None, H1, H2."""
    config = LearnConfig(episodes=20_000, epsilon=0.2, seed=42)
    rewards = RewardSpec(-1.0, 0.0, 0.95)
    return {name: train(grid, spec, config, rewards) for name, spec in (("none", None), ("h1", h1), ("h2", h2))}


@st.composite
def dfas(draw, labels=("a", "b", "c"), max_states=4):
    """Random partial DFA, marked set arbitrary, possibly not trim."""
    n = draw(st.integers(1, max_states))
    transitions = []
    for s in range(n):
        for label in labels:
            t = draw(st.one_of(st.none(), st.integers(0, n - 1)))
            if t is not None:
                transitions.append((s, label, t))
    marked = draw(st.sets(st.integers(0, n - 1)))
    return from_transitions(labels, n, transitions, initial=0, marked=sorted(marked))


def random_dfa(rng: np.random.Generator, labels=("a", "b", "c"), max_states=4, density=0.7):
    n = int(rng.integers(1, max_states + 1))
    transitions = [
        (s, label, int(rng.integers(0, n)))
        for s in range(n)
        for label in labels
        if rng.random() < density
    ]
    marked = [s for s in range(n) if rng.random() < 0.5]
    return from_transitions(labels, n, transitions, initial=0, marked=marked)
