"""Compile behavioral requirements into specification automata.

Every compiled automaton is trim, deterministic and has all states marked, so
the language it generates is prefix-closed and equals its marked language.
Specs are defined over the whole alphabet; restriction to what the
environment can actually do happens in the product with the environment.
"""
from __future__ import annotations

import warnings
from collections import deque
from dataclasses import dataclass
from pathlib import Path
from typing import Sequence, Union

import numpy as np

from .automata import (
    UNDEFINED,
    Automaton,
    AutomatonError,
    ParseError,
    accessible,
    parse_aut,
    product,
    trim,
)


@dataclass(frozen=True)
class ForbidFactor:
    factor: tuple[str, ...]


@dataclass(frozen=True)
class OnlyImmediatelyAfter:
    trigger: tuple[str, ...]
    gated: str


@dataclass(frozen=True)
class Explicit:
    path: Path


SpecPattern = Union[ForbidFactor, OnlyImmediatelyAfter, Explicit]


def universal(alphabet: Sequence[str]) -> Automaton:
    """One marked state with a self-loop on every action: generates ``A*``."""
    return Automaton(alphabet, np.zeros((1, len(alphabet)), dtype=np.int32), 0, [0])


def _check_string(string: Sequence[str], alphabet: Sequence[str], what: str) -> tuple[str, ...]:
    string = tuple(string)
    if not string:
        raise AutomatonError(f"{what} must be a nonempty action string")
    unknown = [l for l in string if l not in alphabet]
    if unknown:
        raise AutomatonError(f"{what} uses actions {unknown} outside the alphabet")
    return string


def forbid_factors(alphabet: Sequence[str], factors: Sequence[Sequence[str]]) -> Automaton:
    """Strings over ``alphabet`` containing none of ``factors`` as a substring.

    Aho-Corasick construction: trie over the factors, failure links to the
    longest proper suffix that is also a trie node, and goto completion. Nodes
    whose output set is nonempty (a factor ends there, directly or through
    the failure chain) are dropped; everything else is kept and marked.
    """
    alphabet = tuple(alphabet)
    factors = [_check_string(f, alphabet, "forbidden factor") for f in factors]
    k = len(alphabet)
    index = {l: i for i, l in enumerate(alphabet)}

    children: list[dict[int, int]] = [{}]
    terminal = [False]
    for f in factors:
        node = 0
        for label in f:
            a = index[label]
            if a not in children[node]:
                children[node][a] = len(children)
                children.append({})
                terminal.append(False)
            node = children[node][a]
        terminal[node] = True

    n = len(children)
    goto = np.zeros((n, k), dtype=np.int32)
    fail = [0] * n
    dead = list(terminal)
    queue = deque()
    for a in range(k):
        child = children[0].get(a)
        if child is None:
            goto[0, a] = 0
        else:
            goto[0, a] = child
            queue.append(child)
    while queue:
        node = queue.popleft()
        dead[node] = dead[node] or dead[fail[node]]
        for a in range(k):
            child = children[node].get(a)
            if child is None:
                goto[node, a] = goto[fail[node], a]
            else:
                fail[child] = int(goto[fail[node], a])
                goto[node, a] = child
                queue.append(child)

    delta = np.where(np.array(dead)[goto], UNDEFINED, goto).astype(np.int32)
    delta[np.array(dead)] = UNDEFINED
    alive = [s for s in range(n) if not dead[s]]
    return accessible(Automaton(alphabet, delta, 0, alive))


def only_immediately_after(alphabet: Sequence[str], trigger: Sequence[str], gated: str) -> Automaton:
    """Strings in which every ``gated`` action directly follows the full ``trigger``.

    States track the longest suffix of the history that is a prefix of the
    trigger (KMP automaton); ``gated`` is enabled only in the full-match
    state. When ``gated`` occurs inside the trigger, acceptance is still
    decided purely by the "immediately preceded by trigger" rule.
    """
    alphabet = tuple(alphabet)
    trigger = _check_string(trigger, alphabet, "trigger")
    if gated not in alphabet:
        raise AutomatonError(f"gated action {gated!r} outside the alphabet")
    m = len(trigger)
    index = {l: i for i, l in enumerate(alphabet)}
    pattern = [index[l] for l in trigger]
    g = index[gated]

    # classic prefix function, then the matching automaton over states 0..m
    pi = [0] * m
    for i in range(1, m):
        j = pi[i - 1]
        while j and pattern[i] != pattern[j]:
            j = pi[j - 1]
        if pattern[i] == pattern[j]:
            j += 1
        pi[i] = j
    kmp = np.zeros((m + 1, len(alphabet)), dtype=np.int32)
    for j in range(m + 1):
        for a in range(len(alphabet)):
            if j < m and pattern[j] == a:
                kmp[j, a] = j + 1
            elif j == 0:
                kmp[j, a] = 0
            else:
                kmp[j, a] = kmp[pi[j - 1], a]
    delta = kmp.copy()
    delta[:m, g] = UNDEFINED
    return accessible(Automaton(alphabet, delta, 0, range(m + 1)))


def _mark_all(aut: Automaton) -> Automaton:
    return Automaton(aut.labels, aut.delta, aut.initial, range(aut.n_states), aut.origins)


# --- spec DSL ---------------------------------------------------------------


def parse_spec(text: str, alphabet: Sequence[str] | None = None, base_dir: Path | str | None = None) -> list[SpecPattern]:
    """Parse the line-oriented spec DSL.

    ``forbid-factor <labels...>``, ``only-after <trigger labels...> -> <gated>``
    and ``include <path.aut>``; ``#`` starts a comment. When ``alphabet`` is
    given, unknown labels are reported with their line number.
    """
    base = Path(base_dir) if base_dir is not None else Path(".")
    patterns: list[SpecPattern] = []
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        keyword, *fields = line.split()
        if keyword == "forbid-factor":
            if not fields:
                raise ParseError("forbid-factor needs at least one action", lineno)
            _check_labels(fields, alphabet, lineno)
            patterns.append(ForbidFactor(tuple(fields)))
        elif keyword == "only-after":
            if "->" not in fields:
                raise ParseError("only-after needs '<trigger...> -> <gated>'", lineno)
            cut = fields.index("->")
            trigger, rest = fields[:cut], fields[cut + 1:]
            if not trigger or len(rest) != 1:
                raise ParseError("only-after needs a nonempty trigger and exactly one gated action", lineno)
            _check_labels(trigger + rest, alphabet, lineno)
            patterns.append(OnlyImmediatelyAfter(tuple(trigger), rest[0]))
        elif keyword == "include":
            if len(fields) != 1:
                raise ParseError("include needs exactly one path", lineno)
            path = Path(fields[0])
            patterns.append(Explicit(path if path.is_absolute() else base / path))
        else:
            raise ParseError(f"unknown directive {keyword!r}", lineno)
    return patterns


def _check_labels(labels: Sequence[str], alphabet: Sequence[str] | None, lineno: int) -> None:
    if alphabet is None:
        return
    for label in labels:
        if label not in alphabet:
            raise ParseError(f"action {label!r} not in alphabet {' '.join(alphabet)}", lineno)


def pattern_automaton(pattern: SpecPattern, alphabet: Sequence[str]) -> Automaton:
    if isinstance(pattern, ForbidFactor):
        return forbid_factors(alphabet, [pattern.factor])
    if isinstance(pattern, OnlyImmediatelyAfter):
        return only_immediately_after(alphabet, pattern.trigger, pattern.gated)
    if isinstance(pattern, Explicit):
        aut = parse_aut(Path(pattern.path).read_text(encoding="utf-8"))
        # an included automaton generates the prefix-closure of what it marks
        return _mark_all(trim(aut)).relabel(alphabet)
    raise TypeError(f"not a spec pattern: {pattern!r}")


def compile_spec(patterns: Sequence[SpecPattern], alphabet: Sequence[str]) -> Automaton:
    """Conjunction of patterns: product of the per-pattern automata, trimmed.

    Consecutive forbid-factor patterns are merged into one factor automaton
    first, which keeps the product small.
    """
    alphabet = tuple(alphabet)
    factors = [p.factor for p in patterns if isinstance(p, ForbidFactor)]
    parts = [forbid_factors(alphabet, factors)] if factors else []
    parts += [pattern_automaton(p, alphabet) for p in patterns if not isinstance(p, ForbidFactor)]
    result = universal(alphabet)
    for part in parts:
        result = product(result, part)
    result = _mark_all(trim(result))
    result = Automaton(result.labels, result.delta, result.initial, result.marked)
    if not (result.delta[result.initial] != UNDEFINED).any():
        warnings.warn("specification enables no action at the initial state; its language is {λ}", stacklevel=2)
    return result


def load_spec(path: Path | str, alphabet: Sequence[str]) -> Automaton:
    """Compile a ``.spec`` file, or take an ``.aut`` file as an explicit spec."""
    path = Path(path)
    if path.suffix == ".aut":
        return compile_spec([Explicit(path)], alphabet)
    text = path.read_text(encoding="utf-8")
    return compile_spec(parse_spec(text, alphabet, base_dir=path.parent), alphabet)
