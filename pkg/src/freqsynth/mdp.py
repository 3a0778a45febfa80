"""Markov decision processes with exact rational transition probabilities."""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from typing import Iterable, Optional, Sequence

from .lts import Lts


class MdpError(ValueError):
    """Malformed model file or inconsistent MDP data."""


@dataclass(frozen=True)
class MdpAction:
    """An action, enabled in exactly one state, with its distribution."""

    name: str
    source: int
    dist: tuple  # of (target state index, Fraction > 0), summing to 1


@dataclass(frozen=True)
class EndComponent:
    """Closed, internally connected sub-MDP given by state and action names."""

    states: frozenset
    actions: frozenset


class Mdp:
    """Finite MDP; states and actions carry unique names for stable reporting."""

    def __init__(self, states: Sequence[str], actions: Sequence[MdpAction], init: Optional[int]):
        self.states = list(states)
        self.state_index = {s: i for i, s in enumerate(self.states)}
        if len(self.state_index) != len(self.states):
            raise MdpError("duplicate state name")
        self.actions = list(actions)
        self.action_index = {a.name: i for i, a in enumerate(self.actions)}
        if len(self.action_index) != len(self.actions):
            raise MdpError("duplicate action name")
        self.act: list[list[int]] = [[] for _ in self.states]
        for ai, a in enumerate(self.actions):
            self.act[a.source].append(ai)
        for si, enabled in enumerate(self.act):
            if not enabled:
                raise MdpError(f"state {self.states[si]!r} has no enabled action")
        for a in self.actions:
            total = sum(p for _, p in a.dist)
            if total != 1:
                raise MdpError(f"action {a.name!r} distribution sums to {total}, not 1")
            if any(p <= 0 for _, p in a.dist):
                raise MdpError(f"action {a.name!r} has a non-positive probability")
        self.init = init

    def __len__(self):
        return len(self.states)

    def action_names(self, indices: Iterable[int]) -> frozenset:
        return frozenset(self.actions[i].name for i in indices)

    def state_names(self, indices: Iterable[int]) -> frozenset:
        return frozenset(self.states[i] for i in indices)


Valuation = list  # frozenset of atoms per state index


def parse_mdp(text: str) -> tuple[Mdp, Valuation]:
    """Parse the line-oriented model format (see the README for the grammar)."""
    lines = []
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if line:
            lines.append((lineno, line))
    if not lines or lines[0][1] != "mdp":
        raise MdpError("model file must start with an 'mdp' line")

    state_names: list[str] = []
    init_name: Optional[str] = None
    labels: dict[str, frozenset] = {}
    raw_actions: list[tuple[int, str, str, str]] = []
    for lineno, line in lines[1:]:
        head, _, rest = line.partition(" ")
        rest = rest.strip()
        if head == "states":
            if state_names:
                raise MdpError(f"line {lineno}: duplicate 'states' line")
            state_names = rest.split()
            if not state_names:
                raise MdpError(f"line {lineno}: empty state list")
        elif head == "init":
            if init_name is not None:
                raise MdpError(f"line {lineno}: duplicate 'init' line")
            init_name = rest
        elif head == "label":
            parts = rest.split()
            if not parts:
                raise MdpError(f"line {lineno}: label line needs a state")
            labels[parts[0]] = frozenset(parts[1:])
        elif head == "action":
            name_part, sep, dist_part = rest.partition(":")
            if not sep:
                raise MdpError(f"line {lineno}: action line needs ':'")
            fields = name_part.split()
            if len(fields) != 2:
                raise MdpError(f"line {lineno}: expected 'action STATE NAME :'")
            raw_actions.append((lineno, fields[0], fields[1], dist_part))
        else:
            raise MdpError(f"line {lineno}: unknown directive {head!r}")

    if not state_names:
        raise MdpError("missing 'states' line")
    if init_name is None:
        raise MdpError("missing 'init' line")
    index = {s: i for i, s in enumerate(state_names)}
    if len(index) != len(state_names):
        raise MdpError("duplicate state name in 'states' line")
    if init_name not in index:
        raise MdpError(f"unknown initial state {init_name!r}")
    for s in labels:
        if s not in index:
            raise MdpError(f"label for unknown state {s!r}")

    actions: list[MdpAction] = []
    seen_names = set()
    for lineno, state, name, dist_part in raw_actions:
        if state not in index:
            raise MdpError(f"line {lineno}: unknown state {state!r}")
        if name in seen_names:
            raise MdpError(f"line {lineno}: action {name!r} redeclared")
        seen_names.add(name)
        entries = []
        seen_targets = set()
        for chunk in dist_part.split(","):
            fields = chunk.split()
            if len(fields) != 2:
                raise MdpError(f"line {lineno}: expected 'TARGET PROB' entries")
            target, prob_text = fields
            if target not in index:
                raise MdpError(f"line {lineno}: unknown state {target!r}")
            if target in seen_targets:
                raise MdpError(f"line {lineno}: duplicate target {target!r}")
            seen_targets.add(target)
            try:
                prob = Fraction(prob_text)
            except (ValueError, ZeroDivisionError):
                raise MdpError(f"line {lineno}: bad probability {prob_text!r}") from None
            entries.append((index[target], prob))
        total = sum(p for _, p in entries)
        if total != 1:
            raise MdpError(f"line {lineno}: distribution sums to {total}, not 1")
        actions.append(MdpAction(name, index[state], tuple(entries)))

    mdp = Mdp(state_names, actions, index[init_name])
    valuation = [labels.get(s, frozenset()) for s in state_names]
    return mdp, valuation


def product_mdp(mdp: Mdp, valuation: Valuation, lts: Lts):
    """Synchronous product with a deterministic LTS reading state labels.

    Returns the product MDP, the map (state idx, lts state) -> product idx,
    and the automaton component per product state.  The automaton advances on
    the label of the state being entered; the initial automaton component has
    already read the initial state's label.
    """
    for letters in valuation:
        if (frozenset(letters) & lts.atoms) not in lts.letter_index:
            raise MdpError("valuation letter outside the automaton alphabet")

    init_q = lts.successor(lts.init, valuation[mdp.init])
    start = (mdp.init, init_q)
    index: dict = {start: 0}
    order = [start]
    queue = [start]
    actions: list[MdpAction] = []
    while queue:
        s, q = queue.pop()
        for ai in mdp.act[s]:
            action = mdp.actions[ai]
            entries = []
            for target, prob in action.dist:
                tq = lts.successor(q, valuation[target])
                key = (target, tq)
                ti = index.get(key)
                if ti is None:
                    ti = len(order)
                    index[key] = ti
                    order.append(key)
                    queue.append(key)
                entries.append((ti, prob))
            actions.append(
                MdpAction(f"{action.name}@{q}", index[(s, q)], tuple(entries))
            )

    names = [f"{mdp.states[s]}@{q}" for s, q in order]
    product = Mdp(names, actions, 0)
    automaton_component = [q for _, q in order]
    return product, index, automaton_component


def _sccs(nodes: list[int], edges: dict[int, list[int]]) -> list[list[int]]:
    """Iterative Tarjan; returns components in a deterministic order."""
    index_of: dict[int, int] = {}
    low: dict[int, int] = {}
    on_stack: set[int] = set()
    stack: list[int] = []
    out: list[list[int]] = []
    counter = 0
    for root in nodes:
        if root in index_of:
            continue
        work = [(root, iter(edges.get(root, ())))]
        index_of[root] = low[root] = counter
        counter += 1
        stack.append(root)
        on_stack.add(root)
        while work:
            v, it = work[-1]
            advanced = False
            for w in it:
                if w not in index_of:
                    index_of[w] = low[w] = counter
                    counter += 1
                    stack.append(w)
                    on_stack.add(w)
                    work.append((w, iter(edges.get(w, ()))))
                    advanced = True
                    break
                if w in on_stack:
                    low[v] = min(low[v], index_of[w])
            if advanced:
                continue
            work.pop()
            if work:
                parent = work[-1][0]
                low[parent] = min(low[parent], low[v])
            if low[v] == index_of[v]:
                comp = []
                while True:
                    w = stack.pop()
                    on_stack.discard(w)
                    comp.append(w)
                    if w == v:
                        break
                out.append(comp)
    return out


def mec_decomposition(
    mdp: Mdp,
    states: Optional[Iterable[int]] = None,
    actions: Optional[Iterable[int]] = None,
) -> list[EndComponent]:
    """Maximal end components of the (sub-)MDP, by iterated SCC pruning."""
    cur_states = set(range(len(mdp))) if states is None else set(states)
    cur_actions = set(range(len(mdp.actions))) if actions is None else set(actions)
    cur_actions = {
        ai
        for ai in cur_actions
        if mdp.actions[ai].source in cur_states
        and all(t in cur_states for t, _ in mdp.actions[ai].dist)
    }
    while True:
        edges: dict[int, list[int]] = {s: [] for s in cur_states}
        for ai in cur_actions:
            a = mdp.actions[ai]
            edges[a.source].extend(t for t, _ in a.dist)
        comps = _sccs(sorted(cur_states), edges)
        comp_of = {}
        for ci, comp in enumerate(comps):
            for s in comp:
                comp_of[s] = ci
        removed_actions = {
            ai
            for ai in cur_actions
            if any(comp_of[t] != comp_of[mdp.actions[ai].source] for t, _ in mdp.actions[ai].dist)
        }
        next_actions = cur_actions - removed_actions
        has_action = {mdp.actions[ai].source for ai in next_actions}
        next_states = {s for s in cur_states if s in has_action}
        next_actions = {
            ai
            for ai in next_actions
            if all(t in next_states for t, _ in mdp.actions[ai].dist)
        }
        if next_states == cur_states and next_actions == cur_actions:
            break
        cur_states, cur_actions = next_states, next_actions
    edges = {s: [] for s in cur_states}
    for ai in cur_actions:
        a = mdp.actions[ai]
        edges[a.source].extend(t for t, _ in a.dist)
    mecs = []
    for comp in _sccs(sorted(cur_states), edges):
        comp_set = set(comp)
        internal = [
            ai for ai in cur_actions if mdp.actions[ai].source in comp_set
        ]
        if internal:
            mecs.append(
                EndComponent(mdp.state_names(comp_set), mdp.action_names(internal))
            )
    mecs.sort(key=lambda ec: min(ec.states))
    return mecs


def restrict(mdp: Mdp, removed: Iterable[str]) -> Optional[Mdp]:
    """Remove states plus every action touching them; prune until every
    surviving state has an action.  Returns None when nothing survives."""
    gone = {mdp.state_index[s] for s in removed}
    keep_states = set(range(len(mdp))) - gone
    keep_actions = {
        ai
        for ai, a in enumerate(mdp.actions)
        if a.source in keep_states and all(t in keep_states for t, _ in a.dist)
    }
    while True:
        has_action = {mdp.actions[ai].source for ai in keep_actions}
        dead = keep_states - has_action
        if not dead:
            break
        keep_states -= dead
        keep_actions = {
            ai
            for ai in keep_actions
            if all(t in keep_states for t, _ in mdp.actions[ai].dist)
        }
    if not keep_states:
        return None
    order = sorted(keep_states)
    remap = {old: new for new, old in enumerate(order)}
    actions = [
        MdpAction(
            a.name,
            remap[a.source],
            tuple((remap[t], p) for t, p in a.dist),
        )
        for a in (mdp.actions[ai] for ai in sorted(keep_actions))
    ]
    init = remap.get(mdp.init) if mdp.init is not None else None
    return Mdp([mdp.states[i] for i in order], actions, init)


def sub_mdp(mdp: Mdp, ec: EndComponent) -> Mdp:
    """The end component viewed as a standalone (strongly connected) MDP."""
    keep_states = sorted(mdp.state_index[s] for s in ec.states)
    remap = {old: new for new, old in enumerate(keep_states)}
    actions = []
    for name in sorted(ec.actions):
        a = mdp.actions[mdp.action_index[name]]
        actions.append(
            MdpAction(a.name, remap[a.source], tuple((remap[t], p) for t, p in a.dist))
        )
    return Mdp([mdp.states[i] for i in keep_states], actions, 0)
