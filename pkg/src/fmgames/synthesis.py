"""Distinguishing-formula synthesis from Spoiler winning strategies.

The recursion mirrors the game: a Spoiler move in A becomes an existential
quantifier over the conjunction of the subformulas obtained for every
Duplicator response; a Spoiler move in B becomes a universal quantifier over
the disjunction.  At positions whose winning condition already fails, a
violated literal is emitted.  EF rounds reuse variable indices 1..k in play
order, the pebble game reuses the pebble index, and the modal game uses
diamonds and boxes (over an empty response family these degenerate to
``<R> true`` and ``[R] false``).
"""

from __future__ import annotations

import itertools

from .formulas import (Atom, Box, Dia, Eq, Formula, NegAtom, NegEq, NegProp,
                       Prop, Exists, Forall, and_, or_)
from .games import GameSpec, Verdict, modal_pair_condition, solve
from .structures import Structure


class DuplicatorWinsError(ValueError):
    """distinguish() called on a pair where Duplicator wins."""


def _violated_literal(indexed_pairs, a: Structure, b: Structure, iso: bool) -> Formula:
    """A literal refuting the condition, over (variable index, a, b) triples.

    Scan order is fixed: functionality, then (iso) injectivity, then per
    relation the preserved atoms and (iso) the reflected ones.
    """
    items = list(indexed_pairs)
    for (i, ai, bi), (j, aj, bj) in itertools.combinations(items, 2):
        if ai == aj and bi != bj:
            return Eq(i, j)
    if iso:
        for (i, ai, bi), (j, aj, bj) in itertools.combinations(items, 2):
            if ai != aj and bi == bj:
                return NegEq(i, j)
    for rel, arity in a.vocab.relations:
        for combo in itertools.product(items, repeat=arity):
            idx = tuple(i for i, _, _ in combo)
            ta = tuple(x for _, x, _ in combo)
            tb = tuple(y for _, _, y in combo)
            if ta in a.interp[rel] and tb not in b.interp[rel]:
                return Atom(rel, idx)
            if iso and ta not in a.interp[rel] and tb in b.interp[rel]:
                return NegAtom(rel, idx)
    raise AssertionError("no violated literal found at a condition-violating position")


def _modal_literal(x, y, a: Structure, b: Structure, iso: bool) -> Formula:
    for rel in a.vocab.unary:
        in_a = (x,) in a.interp[rel]
        in_b = (y,) in b.interp[rel]
        if in_a and not in_b:
            return Prop(rel)
        if iso and in_b and not in_a:
            return NegProp(rel)
    raise AssertionError("no violated proposition at a condition-violating pair")


def distinguish(spec: GameSpec, a: Structure, b: Structure,
                verdict: Verdict | None = None) -> Formula:
    """Synthesize a formula of the matching fragment separating a from b.

    Requires a Spoiler win.  The result is true in ``a`` and false in ``b``,
    stays inside the mode, and respects the resource bound (rank <= k for EF,
    variables <= k and rank <= death stage for pebble, depth <= k for modal).
    """
    if verdict is None:
        verdict = solve(spec, a, b)
    if verdict.duplicator_wins:
        raise DuplicatorWinsError("Duplicator wins; nothing to distinguish")
    iso = spec.iso_condition

    if spec.family == "modal":

        def synth(history) -> Formula:
            pa, pb = history
            x, y = pa[-1], pb[-1]
            if not modal_pair_condition(x, y, a, b, iso):
                return _modal_literal(x, y, a, b, iso)
            move = verdict.spoiler_move(history)
            assert move is not None, "dead position without a winning move"
            rel, side, _ = move
            parts = [synth(verdict._child(history, move, r))
                     for r in verdict.responses(history, move)]
            if side == "A":
                return Dia(rel, and_(parts))
            return Box(rel, or_(parts))

        return synth(verdict.initial_history())

    def indexed(history):
        if spec.family == "ef":
            pa, pb = history
            return [(i + 1, pa[i], pb[i]) for i in range(len(pa))]
        seen = {}
        for p, x, y in history:
            seen[p] = (x, y)
        return [(p, x, y) for p, (x, y) in sorted(seen.items())]

    def synth(history) -> Formula:
        if not verdict.condition_holds(history):
            return _violated_literal(indexed(history), a, b, iso)
        move = verdict.spoiler_move(history)
        assert move is not None, "dead position without a winning move"
        if spec.family == "ef":
            side, _ = move
            var = len(history[0]) + 1
        else:
            var, side, _ = move
        parts = [synth(verdict._child(history, move, r))
                 for r in verdict.responses(history, move)]
        if side == "A":
            return Exists(var, and_(parts))
        return Forall(var, or_(parts))

    return synth(verdict.initial_history())
