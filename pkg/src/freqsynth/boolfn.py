"""Positive Boolean functions over non-Boolean subformulas.

A function is stored as the antichain of its minimal models, each model being
a frozenset of formula uids.  Equality of ``BoolFn`` values is exactly
propositional equivalence, which makes them usable as automaton states.
"""

from __future__ import annotations

from typing import Callable, Iterable, Mapping

from .formula import (
    AND,
    AP,
    EVENTUALLY,
    FF,
    ALWAYS,
    FREQ,
    NAP,
    NEXT,
    NOT,
    OR,
    TT,
    UNTIL,
    Formula,
    FormulaError,
    next_,
)


def _minimize(models: Iterable[frozenset[int]]) -> frozenset[frozenset[int]]:
    by_size = sorted(set(models), key=len)
    kept: list[frozenset[int]] = []
    for m in by_size:
        if not any(k <= m for k in kept):
            kept.append(m)
    return frozenset(kept)


class BoolFn:
    """Monotone Boolean function represented by its minimal models."""

    __slots__ = ("models", "_hash")

    def __init__(self, models: Iterable[frozenset[int]], _canonical: bool = False):
        self.models = frozenset(models) if _canonical else _minimize(models)
        self._hash = hash(self.models)

    def __eq__(self, other):
        return isinstance(other, BoolFn) and self.models == other.models

    def __hash__(self):
        return self._hash

    def __repr__(self):
        return f"BoolFn({self})"

    def __str__(self):
        if self.is_true():
            return "tt"
        if self.is_false():
            return "ff"
        parts = []
        for m in sorted(self.models, key=lambda m: (len(m), sorted(m))):
            lits = [_var_str(uid) for uid in sorted(m)]
            parts.append(" & ".join(lits) if len(lits) == 1 else "(" + " & ".join(lits) + ")")
        return " | ".join(parts)

    def is_true(self) -> bool:
        return self.models == _TRUE_MODELS

    def is_false(self) -> bool:
        return not self.models

    def variables(self) -> frozenset[int]:
        out: set[int] = set()
        for m in self.models:
            out |= m
        return frozenset(out)

    def holds_under(self, true_uids: frozenset[int]) -> bool:
        """Evaluate under the assignment making exactly ``true_uids`` true."""
        return any(m <= true_uids for m in self.models)


def _var_str(uid: int) -> str:
    f = Formula.by_uid(uid)
    s = str(f)
    return f"({s})" if (" " in s and not s.startswith("(")) else s


_TRUE_MODELS = frozenset([frozenset()])

TRUE = BoolFn(_TRUE_MODELS, _canonical=True)
FALSE = BoolFn(frozenset(), _canonical=True)


def var(phi: Formula) -> BoolFn:
    if phi.is_boolean() or phi.is_constant():
        raise FormulaError(f"not a non-Boolean formula: {phi}")
    return BoolFn(frozenset([frozenset([phi.uid])]), _canonical=True)


def bf_and(f: BoolFn, g: BoolFn) -> BoolFn:
    if f.is_false() or g.is_false():
        return FALSE
    if f.is_true():
        return g
    if g.is_true():
        return f
    return BoolFn(m1 | m2 for m1 in f.models for m2 in g.models)


def bf_or(f: BoolFn, g: BoolFn) -> BoolFn:
    if f.is_true() or g.is_true():
        return TRUE
    if f.is_false():
        return g
    if g.is_false():
        return f
    return BoolFn(f.models | g.models)


def bf_and_many(fns: Iterable[BoolFn]) -> BoolFn:
    out = TRUE
    for f in fns:
        out = bf_and(out, f)
        if out.is_false():
            return FALSE
    return out


def bf_or_many(fns: Iterable[BoolFn]) -> BoolFn:
    out = FALSE
    for f in fns:
        out = bf_or(out, f)
        if out.is_true():
            return TRUE
    return out


def substitute(f: BoolFn, image: Callable[[int], BoolFn]) -> BoolFn:
    """Simultaneously replace every variable by its image function."""
    disjuncts = []
    for m in f.models:
        term = TRUE
        for uid in sorted(m):
            term = bf_and(term, image(uid))
            if term.is_false():
                break
        if term.is_true():
            return TRUE
        disjuncts.append(term)
    return bf_or_many(disjuncts)


def substitute_ff(f: BoolFn, killed: Iterable[Formula]) -> BoolFn:
    """Replace each listed non-Boolean formula by ff throughout the function."""
    uids = {phi.uid for phi in killed}
    return BoolFn(
        frozenset(m for m in f.models if not (m & uids)), _canonical=True
    )


def proves(assumptions: Iterable, goal) -> bool:
    """Propositional entailment over non-Boolean formulas.

    ``assumptions`` may mix Formula and BoolFn values; the conjunction of all
    of them must entail ``goal`` under every assignment, which for monotone
    functions reduces to checking the minimal models of the conjunction.
    """
    conj = bf_and_many(_as_boolfn(a) for a in assumptions)
    g = _as_boolfn(goal)
    return all(g.holds_under(m) for m in conj.models)


def _as_boolfn(x) -> BoolFn:
    return x if isinstance(x, BoolFn) else formula_to_boolfn(x)


_FORMULA_CACHE: dict[int, BoolFn] = {}
_UNFOLD_CACHE: dict[int, BoolFn] = {}
_RANK_CACHE: dict[int, int] = {}


def formula_to_boolfn(phi: Formula) -> BoolFn:
    """View a formula as a Boolean function over its non-Boolean parts."""
    cached = _FORMULA_CACHE.get(phi.uid)
    if cached is not None:
        return cached
    k = phi.kind
    if k == TT:
        out = TRUE
    elif k == FF:
        out = FALSE
    elif k == AND:
        out = bf_and_many(formula_to_boolfn(c) for c in phi.children)
    elif k == OR:
        out = bf_or_many(formula_to_boolfn(c) for c in phi.children)
    elif k == NOT:
        raise FormulaError("negation nodes must be rewritten before automaton use")
    else:
        out = var(phi)
    _FORMULA_CACHE[phi.uid] = out
    return out


def unfold_formula(phi: Formula) -> BoolFn:
    """One-step expansion of a single formula into literals and X-obligations."""
    cached = _UNFOLD_CACHE.get(phi.uid)
    if cached is not None:
        return cached
    k = phi.kind
    if k == TT:
        out = TRUE
    elif k == FF:
        out = FALSE
    elif k == AND:
        out = bf_and_many(unfold_formula(c) for c in phi.children)
    elif k == OR:
        out = bf_or_many(unfold_formula(c) for c in phi.children)
    elif k == EVENTUALLY:
        out = bf_or(unfold_formula(phi.children[0]), var(next_(phi)))
    elif k == ALWAYS:
        out = bf_and(unfold_formula(phi.children[0]), var(next_(phi)))
    elif k == UNTIL:
        left, right = phi.children
        out = bf_or(
            unfold_formula(right), bf_and(unfold_formula(left), var(next_(phi)))
        )
    elif k == FREQ:
        out = var(next_(phi))
    elif k in (AP, NAP, NEXT):
        out = var(phi)
    else:
        raise FormulaError(f"cannot unfold {phi}")
    _UNFOLD_CACHE[phi.uid] = out
    return out


def unfold(f) -> BoolFn:
    """Expand every variable of a function (or a formula) one step."""
    if isinstance(f, Formula):
        f = formula_to_boolfn(f)
    return substitute(f, lambda uid: unfold_formula(Formula.by_uid(uid)))


def step(f: BoolFn, letter: frozenset) -> BoolFn:
    """Next-step operator: resolve literals under the letter, peel one X."""

    def image(uid: int) -> BoolFn:
        v = Formula.by_uid(uid)
        if v.kind == AP:
            return TRUE if v.name in letter else FALSE
        if v.kind == NAP:
            return FALSE if v.name in letter else TRUE
        if v.kind == NEXT:
            return formula_to_boolfn(v.children[0])
        return var(v)

    return substitute(f, image)


def formula_rank(phi: Formula) -> int:
    """Steps before the formula is insensitive to letters: literals rank 1,
    X adds one, fixed operators (U, F, G, frequency-G) rank 0."""
    cached = _RANK_CACHE.get(phi.uid)
    if cached is not None:
        return cached
    k = phi.kind
    if k in (AP, NAP):
        out = 1
    elif k == NEXT:
        out = 1 + formula_rank(phi.children[0])
    elif k in (AND, OR):
        out = max(formula_rank(c) for c in phi.children)
    elif k in (TT, FF, UNTIL, EVENTUALLY, ALWAYS, FREQ):
        out = 0
    else:
        raise FormulaError(f"cannot rank {phi}")
    _RANK_CACHE[phi.uid] = out
    return out


def rank(f: BoolFn) -> int:
    vs = f.variables()
    return max((formula_rank(Formula.by_uid(u)) for u in vs), default=0)


def is_letter_fixed(f: BoolFn) -> bool:
    """True iff every letter maps the function to itself (slave sink test)."""
    return rank(f) == 0
