"""Deterministic generalized Rabin mean-payoff automata for fragment formulas.

The automaton is the product of the master LTS with one token automaton per
recurrent subformula (subset-tracking for F- and G-members, token-counting
for frequency members).  Acceptance is one pair per assumption subset of the
recurrent formulas, already normalized to a single Fin set per pair.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from typing import Iterable, Optional

from .boolfn import BoolFn, bf_and_many, formula_to_boolfn, substitute_ff
from .formula import (
    ALWAYS,
    EVENTUALLY,
    FREQ,
    GEQ,
    Formula,
    FormulaError,
    atoms_of,
    in_fragment,
)
from .lasso import Lasso, letter_to_str
from .lts import Lts, StateCapExceeded, build_lts
from .master import DEFAULT_STATE_CAP, build_master
from .slave import (
    SlaveLts,
    buchi_accepting_sets,
    build_count_lts,
    build_slave_lts,
    build_token_lts,
    cobuchi_rejecting_sets,
    mp_reward,
    token_counts_str,
    token_set_str,
)


@dataclass(frozen=True)
class MpAtom:
    """Mean-payoff acceptance atom: limit average of rewards versus a bound."""

    ext: str  # "inf" or "sup"
    cmp: str  # ">=" or ">"
    bound: Fraction
    rewards: tuple  # Fraction per automaton state

    def check(self, average: Fraction) -> bool:
        return average >= self.bound if self.cmp == GEQ else average > self.bound


@dataclass(frozen=True)
class GrmpPair:
    """One disjunct of the acceptance condition.

    A run satisfies the pair iff it visits ``fin`` finitely often, every
    member of ``infs`` infinitely often, and every mean-payoff atom holds.
    ``fin`` is the union of ``fin_parts`` (the master prohibition plus one
    set per assumed G-formula); avoiding all parts equals avoiding the union.
    """

    assumptions: tuple  # the recurrent formulas assumed by this pair
    fin: frozenset
    infs: tuple  # of frozenset
    mps: tuple  # of MpAtom
    fin_parts: tuple = ()


class Dgrma:
    """Product automaton with its acceptance pairs and building blocks."""

    def __init__(self, phi, lts, master, rec, slaves, components, pairs):
        self.phi = phi
        self.lts = lts
        self.master = master
        self.rec = rec
        self.slaves = slaves
        self.components = components
        self.pairs = pairs

    def __len__(self):
        return len(self.lts)

    def state_label(self, q: int) -> str:
        payload = self.lts.states[q]
        parts = [str(self.master.states[payload[0]])]
        for i, rho in enumerate(self.rec):
            comp_state = self.components[i].states[payload[i + 1]]
            if rho.kind == FREQ:
                parts.append(token_counts_str(self.slaves[i], comp_state))
            else:
                parts.append(token_set_str(self.slaves[i], comp_state))
        return " | ".join(parts)


def rec_set(phi: Formula) -> list[Formula]:
    """F-, G- and frequency-G subformulas in the global interning order."""
    out = {
        f for f in _all_subformulas(phi) if f.kind in (EVENTUALLY, ALWAYS, FREQ)
    }
    return sorted(out, key=lambda f: f.uid)


def _all_subformulas(phi: Formula):
    stack, seen = [phi], set()
    while stack:
        f = stack.pop()
        if f.uid in seen:
            continue
        seen.add(f.uid)
        yield f
        stack.extend(f.children)


def build_dgrma(
    phi: Formula,
    ap: Optional[Iterable[str]] = None,
    cap: int = DEFAULT_STATE_CAP,
) -> Dgrma:
    """Translate a fragment formula into an equivalent DGRMA."""
    if not in_fragment(phi):
        raise FormulaError(f"{phi} has an until inside a globally operator")
    atoms = set(atoms_of(phi))
    if ap is not None:
        atoms |= set(ap)

    master = build_master(phi, atoms, cap)
    rec = rec_set(phi)
    slaves: list[SlaveLts] = []
    components: list[Lts] = []
    for rho in rec:
        slave = build_slave_lts(rho.children[0], atoms, cap)
        slaves.append(slave)
        if rho.kind == FREQ:
            components.append(build_count_lts(slave, cap))
        else:
            components.append(build_token_lts(slave, cap))

    parts = [master] + components

    def successor(payload, letter):
        li = master.letter_index[letter]
        return tuple(parts[i].delta[payload[i]][li] for i in range(len(parts)))

    lts = build_lts(
        tuple(p.init for p in parts), successor, atoms, cap, what="product automaton"
    )

    pairs = _build_pairs(lts, master, rec, slaves, components)
    return Dgrma(phi, lts, master, rec, slaves, components, pairs)


def _build_pairs(lts, master, rec, slaves, components) -> list[GrmpPair]:
    n = len(rec)
    all_states = frozenset(range(len(lts)))
    # Substituted-token conjunctions are shared across masks via this cache.
    token_conj_cache: dict = {}
    pairs = []
    for mask in range(1 << n):
        chosen = [i for i in range(n) if mask >> i & 1]
        assumed = tuple(rec[i] for i in chosen)
        dropped = [rec[i] for i in range(n) if not mask >> i & 1]
        base = bf_and_many(formula_to_boolfn(rho) for rho in assumed)
        g_members = [i for i in chosen if rec[i].kind == ALWAYS]

        def token_conj(i: int, comp_state: int) -> BoolFn:
            key = (mask, i, comp_state)
            got = token_conj_cache.get(key)
            if got is None:
                tokens = components[i].states[comp_state]
                got = bf_and_many(
                    substitute_ff(slaves[i].state(q), dropped) for q in sorted(tokens)
                )
                token_conj_cache[key] = got
            return got

        # Master part: eventually prohibit states whose master formula is not
        # provable from the assumptions plus the substituted G-slave tokens.
        fin = set()
        proved_cache: dict = {}
        for q, payload in enumerate(lts.states):
            key = (payload[0],) + tuple(payload[i + 1] for i in g_members)
            proved = proved_cache.get(key)
            if proved is None:
                conj = base
                for i in g_members:
                    conj = _bf_and2(conj, token_conj(i, payload[i + 1]))
                goal = master.states[payload[0]]
                proved = all(goal.holds_under(m) for m in conj.models)
                proved_cache[key] = proved
            if not proved:
                fin.add(q)

        fin_parts = [frozenset(fin)]
        infs = []
        mps = []
        degenerate = False
        for i in chosen:
            rho = rec[i]
            if rho.kind == EVENTUALLY:
                good = buchi_accepting_sets(slaves[i], components[i], assumed)
                lifted = frozenset(
                    q for q, payload in enumerate(lts.states) if payload[i + 1] in good
                )
                if not lifted:
                    degenerate = True
                    break
                infs.append(lifted)
            elif rho.kind == ALWAYS:
                bad = cobuchi_rejecting_sets(slaves[i], components[i], assumed)
                part = frozenset(
                    q for q, payload in enumerate(lts.states) if payload[i + 1] in bad
                )
                fin_parts.append(part)
                fin.update(part)
            else:
                rewards = mp_reward(slaves[i], components[i], assumed)
                cmp, p, ext = rho.bound
                mps.append(
                    MpAtom(
                        ext,
                        cmp,
                        p,
                        tuple(rewards[payload[i + 1]] for payload in lts.states),
                    )
                )
        if degenerate or frozenset(fin) == all_states:
            continue
        pairs.append(
            GrmpPair(
                assumed, frozenset(fin), tuple(infs), tuple(mps), tuple(fin_parts)
            )
        )
    return pairs


def _bf_and2(f: BoolFn, g: BoolFn) -> BoolFn:
    from .boolfn import bf_and

    return bf_and(f, g)


def run_cycle(lts: Lts, w: Lasso) -> tuple[list[int], list[int]]:
    """Run the LTS on the lasso; return (prefix states, repeating cycle states).

    The cycle is the exact sequence of states visited once per period in the
    limit, so Inf/Fin membership and reward averages read off it directly.
    """
    q = lts.init
    prefix = []
    for letter in w.stem:
        prefix.append(q)
        q = lts.successor(q, letter)
    seen: dict = {}
    seq: list[int] = []
    pos = 0
    while (pos, q) not in seen:
        seen[(pos, q)] = len(seq)
        seq.append(q)
        q = lts.successor(q, w.loop[pos])
        pos = (pos + 1) % len(w.loop)
    start = seen[(pos, q)]
    return prefix + seq[:start], seq[start:]


def pair_accepts_cycle(pair: GrmpPair, cycle: list[int]) -> bool:
    states = frozenset(cycle)
    if states & pair.fin:
        return False
    if any(not (states & s) for s in pair.infs):
        return False
    for mp in pair.mps:
        avg = Fraction(sum(mp.rewards[q] for q in cycle), len(cycle))
        if not mp.check(avg):
            return False
    return True


def accepts_lasso(aut: Dgrma, w: Lasso) -> bool:
    """Exact acceptance of an ultimately periodic word."""
    _, cycle = run_cycle(aut.lts, w)
    return any(pair_accepts_cycle(pair, cycle) for pair in aut.pairs)


def acceptance_dump(aut: Dgrma) -> str:
    """One line per pair: the assumption set, Fin set, Inf sets, MP atoms."""
    lines = []
    for k, pair in enumerate(aut.pairs):
        assumed = ",".join(str(a) for a in pair.assumptions) or "-"
        fin = ",".join(str(q) for q in sorted(pair.fin)) or "-"
        infs = ";".join(
            "{" + ",".join(str(q) for q in sorted(s)) + "}" for s in pair.infs
        ) or "-"
        mps = ";".join(
            f"{mp.ext} {mp.cmp} {mp.bound} ["
            + ",".join(str(r) for r in mp.rewards)
            + "]"
            for mp in pair.mps
        ) or "-"
        lines.append(f"pair {k}: R={{{assumed}}} FIN={{{fin}}} INF={infs} MP={mps}")
    return "\n".join(lines) + "\n"


def dgrma_to_dot(aut: Dgrma) -> str:
    """DOT rendering of the product LTS with per-pair acceptance annotations."""

    def annotate(q: int) -> str:
        notes = []
        for k, pair in enumerate(aut.pairs):
            marks = []
            if q in pair.fin:
                marks.append("fin")
            marks.extend(f"inf{j}" for j, s in enumerate(pair.infs) if q in s)
            if marks:
                notes.append(f"{k}:" + "+".join(marks))
        return " ".join(notes)

    return aut.lts.to_dot(label=lambda p: _payload_label(aut, p), annotate=annotate)


def _payload_label(aut: Dgrma, payload) -> str:
    return aut.state_label(aut.lts.index[payload])
