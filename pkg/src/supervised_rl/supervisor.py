"""Supervisor realized by a specification automaton.

The supervisor only ever looks at the specification automaton: it tracks the
state reached by the executed history and enables exactly the actions active
there. It never consults the environment.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable

from .automata import UNDEFINED, Automaton, AutomatonError, active_set, is_trim


class SupervisorError(AutomatonError):
    pass


@dataclass(frozen=True)
class AdmissibleSet:
    actions: frozenset[int]

    @property
    def deadlocked(self) -> bool:
        return not self.actions

    def __contains__(self, a: int) -> bool:
        return a in self.actions

    def __iter__(self):
        return iter(sorted(self.actions))

    def __len__(self):
        return len(self.actions)


class Supervisor:
    """Mutable cursor over a trim, all-marked specification automaton."""

    def __init__(self, spec: Automaton):
        if spec.marked != frozenset(range(spec.n_states)):
            raise SupervisorError("specification automaton must have every state marked")
        if not is_trim(spec):
            raise SupervisorError("specification automaton must be trim")
        self.spec = spec
        self.current = spec.initial

    @property
    def labels(self) -> tuple[str, ...]:
        return self.spec.labels

    def admissible(self) -> AdmissibleSet:
        return AdmissibleSet(active_set(self.spec, self.current))

    def admissible_labels(self) -> frozenset[str]:
        return frozenset(self.spec.labels[a] for a in self.admissible().actions)

    def advance(self, a: int | str) -> "Supervisor":
        if isinstance(a, str):
            a = self.spec.action_id(a)
        nxt = int(self.spec.delta[self.current, a])
        if nxt == UNDEFINED:
            raise SupervisorError(
                f"action {self.spec.labels[a]} is disabled at specification state {self.current}"
            )
        self.current = nxt
        return self

    def replay(self, history: Iterable[int | str]) -> "Supervisor":
        for a in history:
            self.advance(a)
        return self

    def reset(self) -> "Supervisor":
        self.current = self.spec.initial
        return self

    def __repr__(self):
        return f"Supervisor(state={self.current}, enabled={sorted(self.admissible_labels())})"


def realize(spec: Automaton) -> Supervisor:
    """Supervisor at the specification's initial state (empty history)."""
    return Supervisor(spec)
