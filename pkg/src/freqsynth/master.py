"""Master transition system: tracks the property still required to hold."""

from __future__ import annotations

from typing import Iterable, Optional

from .boolfn import BoolFn, formula_to_boolfn, step, unfold
from .formula import Formula, FormulaError, atoms_of, in_fragment
from .lts import Lts, build_lts

DEFAULT_STATE_CAP = 100_000


def master_successor(state: BoolFn, letter: frozenset) -> BoolFn:
    """One master move: expand every obligation, then take the step."""
    return step(unfold(state), letter)


def build_master(
    phi: Formula, ap: Optional[Iterable[str]] = None, cap: int = DEFAULT_STATE_CAP
) -> Lts:
    """Reachable master LTS over the powerset of the given atoms.

    States are canonical Boolean functions; tt and ff are absorbing.
    """
    if not in_fragment(phi):
        raise FormulaError(f"{phi} has an until inside a globally operator")
    atoms = set(atoms_of(phi))
    if ap is not None:
        atoms |= set(ap)
    return build_lts(
        formula_to_boolfn(phi),
        master_successor,
        atoms,
        cap,
        what="master LTS",
    )
