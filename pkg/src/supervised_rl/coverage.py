"""A priori optimality-preservation check.

A specification preserves the unconstrained optimum iff it covers the
environment: every non-goal state-action pair has some admitted history that
reaches the state and may then take the action. :func:`check_coverage`
decides this on the product automaton through per-state visitability;
:func:`coverage_oracle` is a brute-force cross-check over bounded strings.
"""
from __future__ import annotations

import io
from dataclasses import dataclass, field

from .automata import (
    DEFAULT_ENUMERATION_CAP,
    FORMAT_HEADER,
    UNDEFINED,
    Automaton,
    AutomatonError,
    active_set,
    enumerate_language,
    product,
    run,
)

COVERS = "covers"
DOES_NOT_COVER = "does-not-cover"


@dataclass(frozen=True)
class CoverageReport:
    alphabet: tuple[str, ...]
    enabled: dict[int, frozenset[str]]  # non-goal env state -> union of active actions
    uncovered: tuple[tuple[int, str], ...]
    approximate: bool = False  # oracle hit its string-length bound
    max_len: int | None = None
    product_states: int | None = field(default=None, compare=False)

    @property
    def covers(self) -> bool:
        return not self.uncovered

    @property
    def verdict(self) -> str:
        return COVERS if self.covers else DOES_NOT_COVER

    def missing(self, state: int) -> tuple[str, ...]:
        return tuple(l for l in self.alphabet if l not in self.enabled[state])

    def to_csv(self) -> str:
        out = io.StringIO()
        out.write(FORMAT_HEADER + "\n")
        out.write("state,missing_actions\n")
        for s in sorted(self.enabled):
            out.write(f"{s},{' '.join(self.missing(s))}\n")
        out.write(f"# verdict: {self.verdict}\n")
        return out.getvalue()


def omega(m: Automaton, s_g: int) -> frozenset[int]:
    """Product states whose environment component is ``s_g``."""
    if m.origins is None:
        raise AutomatonError("omega needs a product automaton with origin tags")
    return frozenset(k for k, (_, g) in enumerate(m.origins) if g == s_g)


def enabled_union(m: Automaton, s_g: int) -> frozenset[str]:
    return frozenset(m.labels[a] for k in omega(m, s_g) for a in active_set(m, k))


def visitable(m: Automaton, s_g: int, alphabet=None) -> bool:
    """Union of active sets over ``omega(m, s_g)`` equals the full alphabet."""
    alphabet = frozenset(m.labels if alphabet is None else alphabet)
    return enabled_union(m, s_g) >= alphabet


def _aligned(spec: Automaton, env: Automaton) -> Automaton:
    extra = set(spec.labels) - set(env.labels)
    if extra:
        raise AutomatonError(f"specification uses actions {sorted(extra)} unknown to the environment")
    return spec.relabel(env.labels)


def check_coverage(spec: Automaton, env: Automaton) -> CoverageReport:
    """Visitability of every non-goal environment state w.r.t. ``spec || env``."""
    m = product(_aligned(spec, env), env)
    enabled = {}
    uncovered = []
    for s in range(env.n_states):
        if s in env.marked:
            continue
        enabled[s] = enabled_union(m, s)
        uncovered.extend((s, l) for l in env.labels if l not in enabled[s])
    return CoverageReport(env.labels, enabled, tuple(uncovered), product_states=m.n_states)


def coverage_oracle(
    spec: Automaton, env: Automaton, max_len: int, cap: int = DEFAULT_ENUMERATION_CAP
) -> CoverageReport:
    """Brute-force coverage: search admitted strings ``l`` with ``|l| <= max_len``.

    A pair ``(s, a)`` is witnessed when ``run(env, l) == s`` and ``l + a`` is
    still generated by the spec. Pairs without a witness are reported as
    uncovered and the report is flagged ``approximate``, since a longer
    witness might exist.
    """
    spec = _aligned(spec, env)
    language = enumerate_language(spec, max_len + 1, cap=cap).strings
    enabled: dict[int, set[str]] = {s: set() for s in range(env.n_states) if s not in env.marked}
    for string in language:
        if len(string) > max_len:
            continue
        s = run(env, string)
        if s is None or s in env.marked:
            continue
        for a, label in enumerate(env.labels):
            if env.delta[s, a] != UNDEFINED and string + (label,) in language:
                enabled[s].add(label)
    uncovered = tuple((s, l) for s in sorted(enabled) for l in env.labels if l not in enabled[s])
    return CoverageReport(
        env.labels,
        {s: frozenset(v) for s, v in enabled.items()},
        uncovered,
        approximate=bool(uncovered),
        max_len=max_len,
    )
