"""Two-phase simplex over exact rationals with Bland's anti-cycling rule.

Problem form: optimize a linear objective subject to rows ``coeffs rel rhs``
with rel in {<=, >=, ==} and all variables non-negative.  Sizes here are tiny
(dozens of variables), so a dense Fraction tableau is the simple, safe choice.
"""

from __future__ import annotations

from fractions import Fraction
from typing import Mapping, Sequence

OPTIMAL = "optimal"
INFEASIBLE = "infeasible"
UNBOUNDED = "unbounded"

LEQ = "<="
GEQ = ">="
EQ = "=="

_ZERO = Fraction(0)
_ONE = Fraction(1)


class SimplexError(Exception):
    """Internal solver failure (malformed input or a broken invariant)."""


def solve_lp(
    num_vars: int,
    rows: Sequence[tuple[Mapping[int, Fraction], str, Fraction]],
    objective: Mapping[int, Fraction],
    maximize: bool = True,
):
    """Solve the LP; returns (status, values, objective value).

    ``values`` has one Fraction per original variable when status is optimal,
    otherwise None.
    """
    sense = _ONE if maximize else -_ONE

    # Normalize to equality form with slack/surplus columns and b >= 0.
    n_slack = sum(1 for _, rel, _ in rows if rel in (LEQ, GEQ))
    total = num_vars + n_slack
    tableau: list[list[Fraction]] = []
    art_rows: list[int] = []
    slack_idx = num_vars
    for coeffs, rel, rhs in rows:
        row = [_ZERO] * (total + 1)
        for j, c in coeffs.items():
            if not 0 <= j < num_vars:
                raise SimplexError(f"variable index {j} out of range")
            row[j] = Fraction(c)
        rhs = Fraction(rhs)
        if rel == LEQ:
            row[slack_idx] = _ONE
            slack_idx += 1
        elif rel == GEQ:
            row[slack_idx] = -_ONE
            slack_idx += 1
        elif rel != EQ:
            raise SimplexError(f"unknown relation {rel!r}")
        if rhs < 0:
            row = [-v for v in row]
            rhs = -rhs
        row[total] = rhs
        tableau.append(row)

    m = len(tableau)
    basis = [-1] * m
    # A slack column with +1 and zero rhs contribution can start basic.
    for i, row in enumerate(tableau):
        for j in range(num_vars, total):
            if row[j] == _ONE and all(
                tableau[k][j] == 0 for k in range(m) if k != i
            ):
                basis[i] = j
                break

    n_art = sum(1 for b in basis if b < 0)
    width = total + n_art + 1
    art_cols = []
    next_art = total
    for i in range(m):
        row = tableau[i]
        row[total:total] = [_ZERO] * n_art
        if basis[i] < 0:
            row[next_art] = _ONE
            basis[i] = next_art
            art_cols.append(next_art)
            next_art += 1

    if art_cols:
        # Phase one: drive the artificial variables to zero.
        cost = [_ZERO] * width
        for j in art_cols:
            cost[j] = -_ONE
        _reduce_cost(cost, tableau, basis)
        _iterate(tableau, basis, cost, restrict=None)
        if cost[-1] != 0:
            return INFEASIBLE, None, None
        for i in range(m):
            if basis[i] in art_cols:
                pivot_col = next(
                    (j for j in range(total) if tableau[i][j] != 0), None
                )
                if pivot_col is None:
                    continue  # redundant row stays with a zero artificial
                _pivot(tableau, basis, i, pivot_col)

    cost = [_ZERO] * width
    for j, c in objective.items():
        cost[j] = sense * Fraction(c)
    for j in art_cols:
        cost[j] = _ZERO
    _reduce_cost(cost, tableau, basis)
    status = _iterate(tableau, basis, cost, restrict=set(art_cols))
    if status == UNBOUNDED:
        return UNBOUNDED, None, None

    values = [_ZERO] * num_vars
    for i, b in enumerate(basis):
        if b < num_vars:
            values[b] = tableau[i][-1]
    # The maintained z-row holds the negated objective of the current basis.
    return OPTIMAL, values, -sense * cost[-1]


def _reduce_cost(cost, tableau, basis):
    for i, b in enumerate(basis):
        if cost[b] != 0:
            f = cost[b]
            row = tableau[i]
            for j in range(len(cost)):
                cost[j] -= f * row[j]


def _iterate(tableau, basis, cost, restrict):
    total = len(cost) - 1
    while True:
        entering = None
        for j in range(total):
            if restrict and j in restrict:
                continue
            if cost[j] > 0:
                entering = j
                break
        if entering is None:
            return OPTIMAL
        leaving = None
        best = None
        for i, row in enumerate(tableau):
            a = row[entering]
            if a > 0:
                ratio = row[-1] / a
                if best is None or ratio < best or (
                    ratio == best and basis[i] < basis[leaving]
                ):
                    best = ratio
                    leaving = i
        if leaving is None:
            return UNBOUNDED
        _pivot(tableau, basis, leaving, entering)
        f = cost[entering]
        if f != 0:
            row = tableau[leaving]
            for j in range(len(cost)):
                cost[j] -= f * row[j]


def _pivot(tableau, basis, r, c):
    row = tableau[r]
    piv = row[c]
    if piv == 0:
        raise SimplexError("zero pivot")
    inv = _ONE / piv
    tableau[r] = row = [v * inv for v in row]
    for i, other in enumerate(tableau):
        if i != r and other[c] != 0:
            f = other[c]
            tableau[i] = [a - f * b for a, b in zip(other, row)]
    basis[r] = c
