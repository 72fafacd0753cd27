"""Exhaustive desk-scale corpora: all small structures up to isomorphism.

Canonical representatives are chosen as the minimum encoding over all
permutations of the universe, so enumeration order is deterministic and the
corpora are stable across runs.
"""

from __future__ import annotations

import itertools

from .structures import Structure, Vocabulary

DIGRAPH_VOCAB = Vocabulary((("E", 2),))
KRIPKE_VOCAB = Vocabulary((("R", 2), ("P", 1)))

_NAMES = "abcdefgh"


def _edge_bits(n: int, perm, mask: int) -> int:
    out = 0
    for i in range(n):
        for j in range(n):
            if mask >> (i * n + j) & 1:
                out |= 1 << (perm[i] * n + perm[j])
    return out


def _digraph(n: int, mask: int, name: str) -> Structure:
    elems = list(_NAMES[:n])
    edges = [(elems[i], elems[j]) for i in range(n) for j in range(n)
             if mask >> (i * n + j) & 1]
    return Structure.make(DIGRAPH_VOCAB, elems, {"E": edges}, name=name)


def all_digraphs(max_size: int = 3, include_empty: bool = True) -> list[Structure]:
    """All structures with one binary relation, up to isomorphism."""
    out: list[Structure] = []
    if include_empty:
        out.append(Structure.make(DIGRAPH_VOCAB, [], {}, name="D0"))
    for n in range(1, max_size + 1):
        perms = list(itertools.permutations(range(n)))
        for mask in range(1 << (n * n)):
            if min(_edge_bits(n, p, mask) for p in perms) == mask:
                out.append(_digraph(n, mask, f"D{n}_{mask}"))
    return out


def all_pointed_kripke(max_size: int = 3) -> list[Structure]:
    """All pointed models with one binary plus one unary symbol, up to
    isomorphism (isomorphisms must fix the point)."""
    out: list[Structure] = []
    for n in range(1, max_size + 1):
        perms = list(itertools.permutations(range(n)))
        elems = list(_NAMES[:n])
        for mask in range(1 << (n * n)):
            for pmask in range(1 << n):
                for point in range(n):
                    best = min(
                        (_edge_bits(n, p, mask),
                         sum(1 << p[i] for i in range(n) if pmask >> i & 1),
                         p[point])
                        for p in perms)
                    if best != (mask, pmask, point):
                        continue
                    edges = [(elems[i], elems[j]) for i in range(n) for j in range(n)
                             if mask >> (i * n + j) & 1]
                    props = [(elems[i],) for i in range(n) if pmask >> i & 1]
                    out.append(Structure.make(
                        KRIPKE_VOCAB, elems, {"R": edges, "P": props},
                        point=elems[point], name=f"M{n}_{mask}_{pmask}_{point}"))
    return out


def linear_order(m: int, rel: str = "L") -> Structure:
    """Strict linear order on m elements (one binary relation)."""
    elems = [f"a{i}" for i in range(m)]
    vocab = Vocabulary(((rel, 2),))
    tuples = [(elems[i], elems[j]) for i in range(m) for j in range(m) if i < j]
    return Structure.make(vocab, elems, {rel: tuples}, name=f"L{m}")


def clique(m: int) -> Structure:
    """Loop-free complete digraph on m elements."""
    elems = [f"c{i}" for i in range(m)]
    tuples = [(x, y) for x in elems for y in elems if x != y]
    return Structure.make(DIGRAPH_VOCAB, elems, {"E": tuples}, name=f"K{m}")


def edge_structure() -> Structure:
    return Structure.make(DIGRAPH_VOCAB, ["v", "w"], {"E": [("v", "w")]}, name="edge")


def loop_structure() -> Structure:
    return Structure.make(DIGRAPH_VOCAB, ["u"], {"E": [("u", "u")]}, name="loop")
