"""Deterministic finite automata with partial transition functions.

States and actions are dense integer indices. Action labels live in a side
table (``Automaton.labels``) so automata built over different alphabets can be
composed by label. Transitions are stored as a read-only ``int32`` matrix with
``-1`` for undefined entries.
"""
from __future__ import annotations

from collections import deque
from typing import Iterable, Mapping, NamedTuple, Sequence

import numpy as np

UNDEFINED = -1
FORMAT_HEADER = "# format: v1"
DEFAULT_ENUMERATION_CAP = 10**6

ActionString = tuple[str, ...]


class AutomatonError(ValueError):
    """Invalid automaton construction or use (bad index, bad label, ...)."""


class ParseError(AutomatonError):
    def __init__(self, message: str, line: int | None = None):
        self.line = line
        super().__init__(f"line {line}: {message}" if line is not None else message)


class EmptyLanguageError(AutomatonError):
    """Trimming removed the initial state: the marked language is empty."""


class OracleOverflowError(RuntimeError):
    """Bounded enumeration exceeded its string budget."""


class Automaton:
    """Immutable deterministic automaton ``(S, A, delta, Gamma, s0, S_marked)``.

    ``origins`` optionally tags every state with the pair of component states
    it was built from (set by :func:`product`).
    """

    __slots__ = ("labels", "delta", "initial", "marked", "origins", "_index")

    def __init__(
        self,
        labels: Sequence[str],
        delta,
        initial: int,
        marked: Iterable[int],
        origins: Sequence[tuple[int, int]] | None = None,
    ):
        labels = tuple(str(l) for l in labels)
        if len(set(labels)) != len(labels):
            raise AutomatonError(f"duplicate action labels in {labels}")
        if not labels:
            raise AutomatonError("alphabet must be nonempty")
        table = np.array(delta, dtype=np.int32, copy=True)
        if table.ndim != 2 or table.shape[1] != len(labels) or table.shape[0] < 1:
            raise AutomatonError(
                f"transition table must have shape (n_states>=1, {len(labels)}), got {table.shape}"
            )
        n = table.shape[0]
        bad = (table < UNDEFINED) | (table >= n)
        if bad.any():
            s, a = map(int, np.argwhere(bad)[0])
            raise AutomatonError(f"transition ({s}, {labels[a]}) points to invalid state {table[s, a]}")
        if not 0 <= initial < n:
            raise AutomatonError(f"initial state {initial} out of range 0..{n - 1}")
        marked = frozenset(int(m) for m in marked)
        for m in marked:
            if not 0 <= m < n:
                raise AutomatonError(f"marked state {m} out of range 0..{n - 1}")
        if origins is not None:
            origins = tuple((int(x), int(y)) for x, y in origins)
            if len(origins) != n:
                raise AutomatonError("origins must tag every state")
        table.flags.writeable = False
        object.__setattr__(self, "labels", labels)
        object.__setattr__(self, "delta", table)
        object.__setattr__(self, "initial", int(initial))
        object.__setattr__(self, "marked", marked)
        object.__setattr__(self, "origins", origins)
        object.__setattr__(self, "_index", {l: i for i, l in enumerate(labels)})

    def __setattr__(self, name, value):
        raise AttributeError("Automaton is immutable")

    @property
    def n_states(self) -> int:
        return self.delta.shape[0]

    @property
    def n_actions(self) -> int:
        return len(self.labels)

    @property
    def n_transitions(self) -> int:
        return int((self.delta != UNDEFINED).sum())

    def action_id(self, label: str) -> int:
        try:
            return self._index[label]
        except KeyError:
            raise AutomatonError(f"unknown action label {label!r}; alphabet is {' '.join(self.labels)}") from None

    def ids(self, labels: Iterable[str]) -> tuple[int, ...]:
        return tuple(self.action_id(l) for l in labels)

    def state_of(self, origin: tuple[int, int]) -> int | None:
        """Product state carrying the given origin tag, if any."""
        if self.origins is None:
            raise AutomatonError("automaton carries no origin tags")
        try:
            return self.origins.index(tuple(origin))
        except ValueError:
            return None

    def relabel(self, labels: Sequence[str]) -> "Automaton":
        """Same automaton over ``labels``: columns reordered, missing actions undefined."""
        labels = tuple(labels)
        if labels == self.labels:
            return self
        extra = set(self.labels) - set(labels)
        if extra:
            raise AutomatonError(f"actions {sorted(extra)} are not in target alphabet")
        table = np.full((self.n_states, len(labels)), UNDEFINED, dtype=np.int32)
        for j, l in enumerate(labels):
            if l in self._index:
                table[:, j] = self.delta[:, self._index[l]]
        return Automaton(labels, table, self.initial, self.marked, self.origins)

    def structurally_equal(self, other: "Automaton") -> bool:
        return (
            self.labels == other.labels
            and self.initial == other.initial
            and self.marked == other.marked
            and np.array_equal(self.delta, other.delta)
        )

    def __repr__(self):
        return (
            f"Automaton(states={self.n_states}, alphabet={' '.join(self.labels)}, "
            f"transitions={self.n_transitions}, initial={self.initial}, marked={sorted(self.marked)})"
        )


def from_transitions(
    labels: Sequence[str],
    n_states: int,
    transitions: Mapping[tuple[int, str], int] | Iterable[tuple[int, str, int]],
    initial: int = 0,
    marked: Iterable[int] = (),
) -> Automaton:
    """Build an automaton from ``(state, label, target)`` triples."""
    labels = tuple(labels)
    index = {l: i for i, l in enumerate(labels)}
    table = np.full((n_states, len(labels)), UNDEFINED, dtype=np.int32)
    items = transitions.items() if isinstance(transitions, Mapping) else (((s, a), t) for s, a, t in transitions)
    for (s, a), t in items:
        if a not in index:
            raise AutomatonError(f"unknown action label {a!r}")
        if not 0 <= s < n_states:
            raise AutomatonError(f"state {s} out of range")
        if table[s, index[a]] != UNDEFINED:
            raise AutomatonError(f"duplicate transition at ({s}, {a})")
        table[s, index[a]] = t
    return Automaton(labels, table, initial, marked)


def _check_state(aut: Automaton, s: int) -> None:
    if not 0 <= s < aut.n_states:
        raise AutomatonError(f"state {s} out of range 0..{aut.n_states - 1}")


def _check_action(aut: Automaton, a: int) -> None:
    if not 0 <= a < aut.n_actions:
        raise AutomatonError(f"action id {a} out of range 0..{aut.n_actions - 1}")


def step(aut: Automaton, s: int, a: int) -> int | None:
    """``delta(s, a)`` or ``None`` when undefined."""
    _check_state(aut, s)
    _check_action(aut, a)
    t = int(aut.delta[s, a])
    return None if t == UNDEFINED else t


def run(aut: Automaton, string: Iterable[str], start: int | None = None) -> int | None:
    """Extended transition function over a string of action labels."""
    s = aut.initial if start is None else start
    _check_state(aut, s)
    delta = aut.delta
    for label in string:
        s = int(delta[s, aut.action_id(label)])
        if s == UNDEFINED:
            return None
    return s


def active_set(aut: Automaton, s: int) -> frozenset[int]:
    _check_state(aut, s)
    return frozenset(int(a) for a in np.flatnonzero(aut.delta[s] != UNDEFINED))


def active_labels(aut: Automaton, s: int) -> frozenset[str]:
    return frozenset(aut.labels[a] for a in active_set(aut, s))


def reachable(aut: Automaton) -> frozenset[int]:
    seen = {aut.initial}
    queue = deque([aut.initial])
    while queue:
        s = queue.popleft()
        for t in aut.delta[s]:
            t = int(t)
            if t != UNDEFINED and t not in seen:
                seen.add(t)
                queue.append(t)
    return frozenset(seen)


def coreachable(aut: Automaton) -> frozenset[int]:
    preds: list[set[int]] = [set() for _ in range(aut.n_states)]
    for s, a in zip(*np.nonzero(aut.delta != UNDEFINED)):
        preds[int(aut.delta[s, a])].add(int(s))
    seen = set(aut.marked)
    queue = deque(seen)
    while queue:
        t = queue.popleft()
        for s in preds[t]:
            if s not in seen:
                seen.add(s)
                queue.append(s)
    return frozenset(seen)


def is_trim(aut: Automaton) -> bool:
    everything = frozenset(range(aut.n_states))
    return reachable(aut) == everything and coreachable(aut) == everything


def _restrict(aut: Automaton, keep: frozenset[int]) -> Automaton:
    # BFS renumbering from the initial state, alphabet order: output is canonical
    order = [aut.initial]
    new_id = {aut.initial: 0}
    i = 0
    while i < len(order):
        s = order[i]
        i += 1
        for t in aut.delta[s]:
            t = int(t)
            if t in keep and t not in new_id:
                new_id[t] = len(order)
                order.append(t)
    table = np.full((len(order), aut.n_actions), UNDEFINED, dtype=np.int32)
    for s in order:
        row = aut.delta[s]
        for a in range(aut.n_actions):
            t = int(row[a])
            if t in new_id:
                table[new_id[s], a] = new_id[t]
    origins = [aut.origins[s] for s in order] if aut.origins is not None else None
    marked = [new_id[m] for m in aut.marked if m in new_id]
    return Automaton(aut.labels, table, 0, marked, origins)


def accessible(aut: Automaton) -> Automaton:
    """Reachable part, renumbered breadth-first."""
    return _restrict(aut, reachable(aut))


def trim(aut: Automaton) -> Automaton:
    """Restrict to states that are both reachable and coreachable.

    Raises :class:`EmptyLanguageError` if the initial state cannot reach a
    marked state, since nothing of the automaton would survive.
    """
    keep = reachable(aut) & coreachable(aut)
    if aut.initial not in keep:
        raise EmptyLanguageError("initial state is not coreachable; the trimmed automaton is empty")
    return _restrict(aut, keep)


def product(x: Automaton, y: Automaton) -> Automaton:
    """Synchronous product ``x || y`` (reachable part only).

    The alphabet is ``x.labels`` followed by the labels only ``y`` has; an
    action is defined at ``(sx, sy)`` only if it is active in both
    components. Each state is tagged with its ``(sx, sy)`` origin.
    """
    labels = x.labels + tuple(l for l in y.labels if l not in x._index)
    xi = [x._index.get(l, -1) for l in labels]
    yi = [y._index.get(l, -1) for l in labels]
    shared = [a for a in range(len(labels)) if xi[a] >= 0 and yi[a] >= 0]
    start = (x.initial, y.initial)
    ids = {start: 0}
    origins = [start]
    rows: list[list[int]] = []
    i = 0
    while i < len(origins):
        sx, sy = origins[i]
        i += 1
        row = [UNDEFINED] * len(labels)
        for a in shared:
            tx = int(x.delta[sx, xi[a]])
            ty = int(y.delta[sy, yi[a]])
            if tx == UNDEFINED or ty == UNDEFINED:
                continue
            pair = (tx, ty)
            if pair not in ids:
                ids[pair] = len(origins)
                origins.append(pair)
            row[a] = ids[pair]
        rows.append(row)
    marked = [k for k, (sx, sy) in enumerate(origins) if sx in x.marked and sy in y.marked]
    return Automaton(labels, rows, 0, marked, origins)


class Language(NamedTuple):
    strings: frozenset[ActionString]
    marked: frozenset[ActionString]


def enumerate_language(aut: Automaton, max_len: int, cap: int = DEFAULT_ENUMERATION_CAP) -> Language:
    """All generated strings of length <= ``max_len`` and their marked subset.

    Exponential by nature; meant as a test oracle on small automata. Raises
    :class:`OracleOverflowError` rather than truncating once more than
    ``cap`` strings would be produced.
    """
    if max_len < 0:
        raise AutomatonError("max_len must be non-negative")
    strings: list[ActionString] = [()]
    marked: list[ActionString] = [()] if aut.initial in aut.marked else []
    frontier = [((), aut.initial)]
    for _ in range(max_len):
        nxt = []
        for string, s in frontier:
            row = aut.delta[s]
            for a, label in enumerate(aut.labels):
                t = int(row[a])
                if t == UNDEFINED:
                    continue
                ext = string + (label,)
                nxt.append((ext, t))
                strings.append(ext)
                if t in aut.marked:
                    marked.append(ext)
                if len(strings) > cap:
                    raise OracleOverflowError(f"more than {cap} strings up to length {max_len}")
        frontier = nxt
        if not frontier:
            break
    return Language(frozenset(strings), frozenset(marked))


def is_prefix_closed(strings: Iterable[ActionString]) -> bool:
    pool = set(strings)
    return all(s[:-1] in pool for s in pool if s)


# --- plain-text .aut format -------------------------------------------------

_KEYS = {"alphabet", "states", "initial", "marked", "trans"}


def parse_aut(text: str) -> Automaton:
    """Parse the line-oriented ``.aut`` format.

    Strict: unknown keys, duplicate transitions and dangling indices raise
    :class:`ParseError` carrying the offending line number.
    """
    alphabet = n_states = initial = None
    marked: set[int] = set()
    trans: list[tuple[int, str, int, int]] = []
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        key, sep, value = line.partition(":")
        key = key.strip()
        if not sep:
            raise ParseError(f"expected 'key: value', got {line!r}", lineno)
        if key not in _KEYS:
            raise ParseError(f"unknown key {key!r}", lineno)
        fields = value.split()
        if key == "alphabet":
            if alphabet is not None:
                raise ParseError("duplicate alphabet line", lineno)
            if not fields or len(set(fields)) != len(fields):
                raise ParseError("alphabet must list distinct labels", lineno)
            alphabet = tuple(fields)
        elif key == "states":
            n_states = _parse_int(fields, lineno, "states")
            if n_states < 1:
                raise ParseError("states must be >= 1", lineno)
        elif key == "initial":
            initial = _parse_int(fields, lineno, "initial")
        elif key == "marked":
            for f in fields:
                marked.add(_parse_int([f], lineno, "marked"))
        elif key == "trans":
            if len(fields) != 3:
                raise ParseError("trans needs '<state> <label> <state>'", lineno)
            s = _parse_int(fields[:1], lineno, "trans")
            t = _parse_int(fields[2:], lineno, "trans")
            trans.append((s, fields[1], t, lineno))
    if alphabet is None:
        raise ParseError("missing 'alphabet:' line")
    if n_states is None:
        raise ParseError("missing 'states:' line")
    if initial is None:
        initial = 0
    if not 0 <= initial < n_states:
        raise ParseError(f"initial state {initial} out of range 0..{n_states - 1}")
    for m in marked:
        if not 0 <= m < n_states:
            raise ParseError(f"marked state {m} out of range 0..{n_states - 1}")
    index = {l: i for i, l in enumerate(alphabet)}
    table = np.full((n_states, len(alphabet)), UNDEFINED, dtype=np.int32)
    for s, label, t, lineno in trans:
        if label not in index:
            raise ParseError(f"action {label!r} not in alphabet", lineno)
        for v in (s, t):
            if not 0 <= v < n_states:
                raise ParseError(f"state {v} out of range 0..{n_states - 1}", lineno)
        if table[s, index[label]] != UNDEFINED:
            raise ParseError(f"duplicate transition at ({s}, {label})", lineno)
        table[s, index[label]] = t
    return Automaton(alphabet, table, initial, marked)


def _parse_int(fields: list[str], lineno: int, key: str) -> int:
    if len(fields) != 1:
        raise ParseError(f"{key} expects one integer", lineno)
    try:
        v = int(fields[0])
    except ValueError:
        raise ParseError(f"{key}: {fields[0]!r} is not an integer", lineno) from None
    if v < 0:
        raise ParseError(f"{key}: negative index {v}", lineno)
    return v


def dump_aut(aut: Automaton) -> str:
    lines = [
        FORMAT_HEADER,
        f"alphabet: {' '.join(aut.labels)}",
        f"states: {aut.n_states}",
        f"initial: {aut.initial}",
        f"marked: {' '.join(str(m) for m in sorted(aut.marked))}".rstrip(),
    ]
    for s in range(aut.n_states):
        for a, label in enumerate(aut.labels):
            t = int(aut.delta[s, a])
            if t != UNDEFINED:
                lines.append(f"trans: {s} {label} {t}")
    return "\n".join(lines) + "\n"
