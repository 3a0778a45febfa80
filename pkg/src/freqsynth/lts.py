"""Deterministic labelled transition systems over powerset alphabets."""

from __future__ import annotations

from collections import deque
from typing import Callable, Iterable, Optional

from .lasso import Letter, letter_to_str


class StateCapExceeded(Exception):
    """Raised when a construction would exceed the configured state cap."""

    def __init__(self, what: str, cap: int):
        super().__init__(f"{what} exceeds the state cap of {cap} states")


def powerset_alphabet(atoms: Iterable[str]) -> tuple[Letter, ...]:
    """All subsets of the atom set, in binary counting order."""
    names = sorted(set(atoms))
    out = []
    for mask in range(1 << len(names)):
        out.append(frozenset(names[i] for i in range(len(names)) if mask >> i & 1))
    return tuple(out)


class Lts:
    """Deterministic LTS with opaque state payloads, total on non-sink states.

    ``delta[q]`` is None for states without outgoing transitions (slave
    sinks); otherwise it lists one successor index per alphabet letter.
    """

    def __init__(self, atoms, alphabet, states, index, init, delta):
        self.atoms = frozenset(atoms)
        self.alphabet = alphabet
        self.letter_index = {l: i for i, l in enumerate(alphabet)}
        self.states = states
        self.index = index
        self.init = init
        self.delta = delta

    def __len__(self):
        return len(self.states)

    def successor(self, q: int, letter: Letter) -> Optional[int]:
        row = self.delta[q]
        if row is None:
            return None
        return row[self.letter_index[frozenset(letter) & self.atoms]]

    def run_prefix(self, letters: Iterable[Letter], start: Optional[int] = None) -> int:
        q = self.init if start is None else start
        for l in letters:
            nxt = self.successor(q, l)
            if nxt is None:
                return q
            q = nxt
        return q

    def to_dot(self, label: Callable = str, annotate: Callable = None) -> str:
        lines = ["digraph lts {", "  rankdir=LR;", '  __init [shape=point, label=""];']
        for q, payload in enumerate(self.states):
            text = label(payload).replace("\\", "\\\\").replace('"', '\\"')
            extra = f"\\n{annotate(q)}" if annotate else ""
            lines.append(f'  q{q} [shape=box, style=rounded, label="{text}{extra}"];')
        lines.append(f"  __init -> q{self.init};")
        for q, row in enumerate(self.delta):
            if row is None:
                continue
            grouped: dict[int, list[str]] = {}
            for li, target in enumerate(row):
                grouped.setdefault(target, []).append(letter_to_str(self.alphabet[li]))
            for target in sorted(grouped):
                letters = ",".join(grouped[target])
                lines.append(f'  q{q} -> q{target} [label="{letters}"];')
        lines.append("}")
        return "\n".join(lines) + "\n"


def build_lts(
    init_payload,
    successor: Callable,
    atoms: Iterable[str],
    cap: int,
    is_terminal: Callable = None,
    what: str = "transition system",
) -> Lts:
    """Breadth-first construction of the reachable deterministic LTS.

    ``successor(payload, letter)`` yields the next payload; states where
    ``is_terminal`` holds get no outgoing transitions.
    """
    alphabet = powerset_alphabet(atoms)
    states = [init_payload]
    index = {init_payload: 0}
    delta: list = [None]
    queue = deque([0])
    while queue:
        q = queue.popleft()
        payload = states[q]
        if is_terminal is not None and is_terminal(payload):
            continue
        row = []
        for letter in alphabet:
            nxt = successor(payload, letter)
            target = index.get(nxt)
            if target is None:
                if len(states) >= cap:
                    raise StateCapExceeded(what, cap)
                target = len(states)
                index[nxt] = target
                states.append(nxt)
                delta.append(None)
                queue.append(target)
            row.append(target)
        delta[q] = row
    return Lts(atoms, alphabet, states, index, 0, delta)
