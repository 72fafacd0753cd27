"""Shared fixtures and independent reference implementations.

``brute_force_game`` evaluates games by plain recursion over move sequences
with the literal end-of-play winning condition, no memoization and no
maintain-formulation shortcut; it exists so solver verdicts are checked
against an implementation that shares no code path with the engine.
"""

from __future__ import annotations

import itertools

import pytest

from fmgames import Structure, Vocabulary
from fmgames.corpus import clique, edge_structure, linear_order, loop_structure

E2 = Vocabulary((("E", 2),))
MODAL = Vocabulary((("R", 2), ("P", 1)))


@pytest.fixture
def edge():
    return edge_structure()


@pytest.fixture
def loop():
    return loop_structure()


@pytest.fixture
def orders():
    return {m: linear_order(m) for m in (2, 3, 4)}


@pytest.fixture
def cliques():
    return {m: clique(m) for m in (2, 3)}


def kripke(elems, edges, props, point, name="M"):
    return Structure.make(MODAL, elems, {"R": edges, "P": [(p,) for p in props]},
                          point=point, name=name)


@pytest.fixture
def chain_ab():
    # a -> b, with P at b
    return kripke(["a", "b"], [("a", "b")], ["b"], "a", "chain")


# ---------------------------------------------------------------------------
# Independent game evaluation (reference oracle for solver verdicts)

def _partial_map_ok(pairs, a, b, iso):
    fwd = {}
    for x, y in pairs:
        if fwd.setdefault(x, y) != y:
            return False
    if iso:
        bwd = {}
        for x, y in pairs:
            if bwd.setdefault(y, x) != x:
                return False
    for rel, _ in a.vocab.relations:
        for tup in a.interp[rel]:
            if all(t in fwd for t in tup):
                if tuple(fwd[t] for t in tup) not in b.interp[rel]:
                    return False
        if iso:
            inv = {y: x for x, y in pairs}
            for tup in b.interp[rel]:
                if all(t in inv for t in tup):
                    if tuple(inv[t] for t in tup) not in a.interp[rel]:
                        return False
    return True


def brute_force_game(family, mode, k, a, b, rounds=None):
    """Duplicator-wins by full game-tree recursion, end-condition checked
    along the whole play (pebble: at every round, per the game rules)."""
    iso = mode in ("full", "existential")
    forth_only = mode in ("existential", "ep")

    if family == "ef":
        def wins(pa, pb):
            if len(pa) == k:
                return _partial_map_ok(set(zip(pa, pb)), a, b, iso)
            moves = [("A", e) for e in a.universe]
            if not forth_only:
                moves += [("B", e) for e in b.universe]
            for side, e in moves:
                resp = b.universe if side == "A" else a.universe
                ok = False
                for r in resp:
                    pa2 = pa + [e if side == "A" else r]
                    pb2 = pb + [r if side == "A" else e]
                    if wins(pa2, pb2):
                        ok = True
                        break
                if not ok:
                    return False
            return True

        return wins([], [])

    if family == "modal":
        def pcond(x, y):
            for rel in a.vocab.unary:
                ia, ib = (x,) in a.interp[rel], (y,) in b.interp[rel]
                if iso and ia != ib:
                    return False
                if not iso and ia and not ib:
                    return False
            return True

        def wins(x, y, r):
            if not pcond(x, y):
                return False
            if r == k:
                return True
            sides = ("A",) if forth_only else ("A", "B")
            for side in sides:
                src, cur, dst, other = (a, x, b, y) if side == "A" else (b, y, a, x)
                for rel in src.vocab.binary:
                    for e in src.successors(rel, cur):
                        if not any(wins(e if side == "A" else r2,
                                        r2 if side == "A" else e, r + 1)
                                   for r2 in dst.successors(rel, other)):
                            return False
            return True

        return wins(a.point, b.point, 0)

    assert family == "pebble" and rounds is not None

    def wins(placement, r):
        if not _partial_map_ok(set(placement.values()), a, b, iso):
            return False
        if r == rounds:
            return True
        for p in range(1, k + 1):
            sides = ("A",) if forth_only else ("A", "B")
            for side in sides:
                src, dst = (a, b) if side == "A" else (b, a)
                for e in src.universe:
                    ok = False
                    for resp in dst.universe:
                        new = dict(placement)
                        new[p] = (e, resp) if side == "A" else (resp, e)
                        if wins(new, r + 1):
                            ok = True
                            break
                    if not ok:
                        return False
        return True

    return wins({}, 0)


def small_structures(max_size=2, vocab=E2):
    """All structures over the vocabulary up to the size, not deduplicated."""
    out = []
    names = "xyz"
    for n in range(max_size + 1):
        elems = list(names[:n])
        cells = [(r, tup) for r, ar in vocab.relations
                 for tup in itertools.product(elems, repeat=ar)]
        for bits in range(1 << len(cells)):
            interp = {}
            for i, (r, tup) in enumerate(cells):
                if bits >> i & 1:
                    interp.setdefault(r, set()).add(tup)
            out.append(Structure.make(vocab, elems, interp, name=f"S{n}_{bits}"))
    return out


# collected by the acceptance suite; shown after the run even under capture
ACCEPTANCE_LINES: list[str] = []


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
