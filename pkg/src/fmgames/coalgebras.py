"""Concrete game-comonad machinery: cofree coalgebras, counit, coextension.

A forest coalgebra is a structure whose universe carries a forest order
(given by a partial parent map) and, depending on the kind, a pebbling
function or a distinguished root.  The builders materialize the cofree
objects: all nonempty sequences for the EF comonad, labelled paths for the
modal one, and a depth-truncated slice of the pebbling comonad (the full
pebbling coalgebra is infinite; decision procedures for finite-variable
logic go through the game fixpoint, never through this object).

Equality handling: building "with I" is building over the diagonal
expansion of the base structure, which interprets I on sequences exactly as
comparability plus equal last elements.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from functools import cached_property
from typing import Mapping, Optional

from .structures import Structure, expand_i, gaifman, is_homomorphism

KINDS = ("ef", "pebble", "modal")


class CoalgebraError(ValueError):
    pass


class CoalgebraSizeError(CoalgebraError):
    """Requested cofree coalgebra beyond the configured carrier cap."""


DEFAULT_CARRIER_CAP = 100_000


@dataclass(frozen=True, eq=False)
class ForestCoalgebra:
    """A structure with a forest order; concretely a coalgebra of its kind."""

    carrier: Structure
    parent: Mapping
    k_bound: int
    kind: str = "ef"
    pebble_fn: Optional[Mapping] = None

    def __post_init__(self):
        if self.kind not in KINDS:
            raise CoalgebraError(f"unknown coalgebra kind {self.kind!r}")
        if self.kind == "pebble" and self.pebble_fn is None:
            raise CoalgebraError("pebble coalgebra needs a pebbling function")

    @property
    def universe(self) -> tuple:
        return self.carrier.universe

    @cached_property
    def children(self) -> dict:
        out: dict = {e: [] for e in self.universe}
        for c in self.universe:
            p = self.parent.get(c)
            if p is not None:
                out[p].append(c)
        return out

    @cached_property
    def roots(self) -> tuple:
        return tuple(e for e in self.universe if e not in self.parent)

    @cached_property
    def height(self) -> dict:
        out: dict = {}

        def h(x):
            if x in out:
                return out[x]
            p = self.parent.get(x)
            out[x] = 0 if p is None else h(p) + 1
            return out[x]

        for e in self.universe:
            h(e)
        return out

    def chain(self, x) -> tuple:
        """The branch from the root down to ``x`` (inclusive)."""
        out = []
        while x is not None:
            out.append(x)
            x = self.parent.get(x)
        return tuple(reversed(out))

    def comparable(self, x, y) -> bool:
        return x in self.chain(y) or y in self.chain(x)

    @property
    def root_point(self):
        return self.carrier.point if self.kind == "modal" else None


@dataclass(frozen=True)
class Violation:
    code: str
    witness: tuple
    message: str


def validate_coalgebra(x: ForestCoalgebra) -> list[Violation]:
    """Every violated coalgebra invariant, each with a witness tuple."""
    out: list[Violation] = []
    elems = set(x.universe)
    for c, p in x.parent.items():
        if c not in elems or p not in elems:
            out.append(Violation("parent-domain", (c, p), "parent map leaves the universe"))
            return out
    seen_cycle = set()
    for e in x.universe:
        trail = []
        cur = e
        while cur is not None and cur not in seen_cycle:
            if cur in trail:
                out.append(Violation("forest-cycle", tuple(trail), "parent map has a cycle"))
                return out
            trail.append(cur)
            cur = x.parent.get(cur)
        seen_cycle.update(trail)

    if x.kind in ("ef", "modal"):
        for e in x.universe:
            if x.height[e] > x.k_bound:
                out.append(Violation("height", (e,), f"height {x.height[e]} exceeds bound {x.k_bound}"))

    if x.kind in ("ef", "pebble"):
        for a, b in sorted(gaifman(x.carrier), key=lambda p: (repr(p[0]), repr(p[1]))):
            if not x.comparable(a, b):
                out.append(Violation("branch-compat", (a, b),
                                     "Gaifman-adjacent elements on different branches"))

    if x.kind == "pebble":
        pf = x.pebble_fn
        for e in x.universe:
            if e not in pf or not (1 <= pf[e] <= x.k_bound):
                out.append(Violation("pebble-range", (e,), "pebbling function out of range"))
                return out
        for a, b in sorted(gaifman(x.carrier), key=lambda p: (repr(p[0]), repr(p[1]))):
            chain_b = x.chain(b)
            if a in chain_b and a != b:
                after = chain_b[chain_b.index(a) + 1:]
                for mid in after:
                    if pf[a] == pf[mid]:
                        out.append(Violation("pebble-reuse", (a, mid, b),
                                             "pebble index reused between adjacent elements"))

    if x.kind == "modal":
        if not x.carrier.vocab.modal_flag:
            out.append(Violation("modal-vocab", (), "carrier vocabulary is not modal"))
            return out
        if x.carrier.point is None:
            out.append(Violation("modal-point", (), "modal coalgebra needs a pointed carrier"))
            return out
        if len(x.roots) != 1 or x.roots[0] != x.carrier.point:
            out.append(Violation("modal-root", tuple(x.roots), "tree root must be the point"))
        binaries = x.carrier.vocab.binary
        for c in x.universe:
            p = x.parent.get(c)
            if p is None:
                continue
            holding = [r for r in binaries if (p, c) in x.carrier.interp[r]]
            if len(holding) != 1:
                out.append(Violation("modal-cover", (p, c),
                                     f"cover must be related by exactly one relation, got {holding}"))
        for r in binaries:
            for (u, v) in x.carrier.interp[r]:
                if x.parent.get(v) != u:
                    out.append(Violation("modal-edge", (r, u, v),
                                         "binary relation off the covering relation"))
    return out


# ---------------------------------------------------------------------------
# Builders

def _ef_like_relations(base: Structure, universe: list, last, chains: dict,
                       pebble_suffix_ok=None) -> dict:
    """Interpretations induced by condition (E) (and (P) when supplied)."""
    interp: dict = {}
    for rel, arity in base.vocab.relations:
        rel_set = base.interp[rel]
        tuples = set()
        for s in universe:
            chain = chains[s]
            for combo in itertools.product(chain, repeat=arity):
                if not any(c is s or c == s for c in combo):
                    continue
                if tuple(last(t) for t in combo) not in rel_set:
                    continue
                if pebble_suffix_ok is not None and not pebble_suffix_ok(combo):
                    continue
                tuples.add(combo)
        interp[rel] = frozenset(tuples)
    return interp


def build_ef(a: Structure, k: int, with_i: bool = False,
             cap: int = DEFAULT_CARRIER_CAP) -> ForestCoalgebra:
    """The cofree EF coalgebra: nonempty sequences of length <= k.

    ``with_i`` builds over the diagonal I-expansion of ``a``.
    """
    if k < 1:
        raise CoalgebraError("k must be >= 1")
    if with_i:
        a = expand_i(a)
    n = a.size
    total = sum(n ** i for i in range(1, k + 1))
    if total > cap:
        raise CoalgebraSizeError(f"carrier would have {total} elements, cap {cap}")
    universe: list[tuple] = []
    for length in range(1, k + 1):
        universe.extend(itertools.product(a.universe, repeat=length))
    parent = {s: s[:-1] for s in universe if len(s) > 1}
    chains = {s: [s[:i] for i in range(1, len(s) + 1)] for s in universe}
    interp = _ef_like_relations(a, universe, lambda s: s[-1], chains)
    carrier = Structure(a.vocab, tuple(universe), interp, None, f"F{k}({a.name})")
    return ForestCoalgebra(carrier, parent, k, "ef")


def build_modal(a: Structure, k: int, cap: int = DEFAULT_CARRIER_CAP) -> ForestCoalgebra:
    """The k-unravelling of a pointed Kripke model, a synchronization tree."""
    if not a.vocab.modal_flag:
        raise CoalgebraError("modal coalgebra needs a modal vocabulary")
    if a.point is None:
        raise CoalgebraError("modal coalgebra needs a pointed structure")
    root = (a.point,)
    universe = [root]
    frontier = [root]
    parent: dict = {}
    for _ in range(k):
        new_frontier = []
        for s in frontier:
            cur = s[-1][1] if len(s) > 1 else s[0]
            for rel in a.vocab.binary:
                for nxt in a.successors(rel, cur):
                    t = s + ((rel, nxt),)
                    parent[t] = s
                    new_frontier.append(t)
                    if len(universe) + len(new_frontier) > cap:
                        raise CoalgebraSizeError(f"unravelling exceeds cap {cap}")
        universe.extend(new_frontier)
        frontier = new_frontier

    def last(s):
        return s[-1][1] if len(s) > 1 else s[0]

    interp: dict = {}
    for rel in a.vocab.unary:
        interp[rel] = frozenset((s,) for s in universe if (last(s),) in a.interp[rel])
    for rel in a.vocab.binary:
        interp[rel] = frozenset((parent[t], t) for t in parent if t[-1][0] == rel)
    carrier = Structure(a.vocab, tuple(universe), interp, root, f"M{k}({a.name})")
    return ForestCoalgebra(carrier, parent, k, "modal")


def build_pebble_truncated(a: Structure, k: int, n: int, with_i: bool = False,
                           cap: int = DEFAULT_CARRIER_CAP) -> ForestCoalgebra:
    """Depth-n slice of the pebbling comonad; for inspection and law tests.

    The cofree pebbling coalgebra itself is infinite, so this object is never
    used to decide finite-variable preservation.
    """
    if k < 1 or n < 1:
        raise CoalgebraError("k and n must be >= 1")
    if with_i:
        a = expand_i(a)
    moves = [(p, e) for p in range(1, k + 1) for e in a.universe]
    total = sum(len(moves) ** i for i in range(1, n + 1))
    if total > cap:
        raise CoalgebraSizeError(f"carrier would have {total} elements, cap {cap}")
    universe: list[tuple] = []
    for length in range(1, n + 1):
        universe.extend(itertools.product(moves, repeat=length))
    parent = {s: s[:-1] for s in universe if len(s) > 1}
    chains = {s: [s[:i] for i in range(1, len(s) + 1)] for s in universe}

    def suffix_ok(combo) -> bool:
        for u in combo:
            for v in combo:
                if len(u) <= len(v) and u == v[: len(u)]:
                    p_last = u[-1][0]
                    if any(v[i][0] == p_last for i in range(len(u), len(v))):
                        return False
        return True

    interp = _ef_like_relations(a, universe, lambda s: s[-1][1], chains, suffix_ok)
    carrier = Structure(a.vocab, tuple(universe), interp, None, f"P{k}@{n}({a.name})")
    pebble_fn = {s: s[-1][0] for s in universe}
    return ForestCoalgebra(carrier, parent, k, "pebble", pebble_fn)


def build_cofree(a: Structure, kind: str, k: int, n: int | None = None,
                 with_i: bool = False, cap: int = DEFAULT_CARRIER_CAP) -> ForestCoalgebra:
    if kind == "ef":
        return build_ef(a, k, with_i, cap)
    if kind == "modal":
        return build_modal(a, k, cap)
    if kind == "pebble":
        if n is None:
            raise CoalgebraError("pebble builder needs a truncation depth n")
        return build_pebble_truncated(a, k, n, with_i, cap)
    raise CoalgebraError(f"unknown kind {kind!r}")


# ---------------------------------------------------------------------------
# Counit and coextension

def _require_built(c: ForestCoalgebra, s):
    if s not in c.carrier.index:
        raise CoalgebraError(f"{s!r} is not an element of the carrier")
    if not isinstance(s, tuple):
        raise CoalgebraError("counit/coextension apply to built cofree coalgebras only")


def counit(c: ForestCoalgebra, s):
    """Last element of a sequence, or endpoint of a path."""
    _require_built(c, s)
    if c.kind == "ef":
        return s[-1]
    if c.kind == "pebble":
        return s[-1][1]
    return s[-1][1] if len(s) > 1 else s[0]


def counit_map(c: ForestCoalgebra) -> dict:
    return {s: counit(c, s) for s in c.universe}


def coextend(c: ForestCoalgebra, f: Mapping, b: Structure) -> tuple[dict, ForestCoalgebra]:
    """Coextension f*: prefixes of each element mapped pointwise through f.

    ``f`` must be a homomorphism from the carrier of ``c`` to ``b`` (checked);
    the result is a map into the cofree coalgebra of the same kind over ``b``
    together with that coalgebra, and is itself checked to be a homomorphism.
    """
    if not is_homomorphism(f, c.carrier, b):
        raise CoalgebraError("coextension needs a homomorphism from the carrier")
    if c.kind == "pebble":
        depth = max(len(s) for s in c.universe)
        target = build_pebble_truncated(b, c.k_bound, depth)
    elif c.kind == "ef":
        target = build_ef(b, c.k_bound)
    else:
        target = build_modal(b, c.k_bound)
    out: dict = {}
    for s in c.universe:
        if c.kind == "ef":
            out[s] = tuple(f[s[: i + 1]] for i in range(len(s)))
        elif c.kind == "pebble":
            out[s] = tuple((s[i][0], f[s[: i + 1]]) for i in range(len(s)))
        else:
            img = (f[s[:1]],)
            for i in range(1, len(s)):
                img = img + ((s[i][0], f[s[: i + 1]]),)
            out[s] = img
        if out[s] not in target.carrier.index:
            raise CoalgebraError(f"coextension image {out[s]!r} missing from target carrier")
    if not is_homomorphism(out, c.carrier, target.carrier):
        raise CoalgebraError("coextension failed to be a homomorphism (bug sentinel)")
    return out, target


def check_comonad_laws(c: ForestCoalgebra, base: Structure, f: Mapping, b: Structure,
                       g: Mapping, d: Structure) -> list[str]:
    """Check the three comonad laws on concrete data.

    ``c`` is a cofree coalgebra over ``base``; ``f`` a homomorphism from its
    carrier to ``b``; ``g`` one from the carrier of the cofree coalgebra over
    ``b`` to ``d``.  Returns a list of violated laws, empty when all hold.
    """
    failures = []
    eps = counit_map(c)
    eps_star, target_same = coextend(c, eps, base)
    if any(eps_star[s] != s for s in c.universe):
        failures.append("counit coextension is not the identity")
    f_star, fb = coextend(c, f, b)
    eps_b = counit_map(fb)
    if any(eps_b[f_star[s]] != f[s] for s in c.universe):
        failures.append("counit after coextension differs from the map")
    g_star, gd = coextend(fb, g, d)
    gf = {s: g[f_star[s]] for s in c.universe}
    gf_star, _ = coextend(c, gf, d)
    for s in c.universe:
        if gf_star[s] != g_star[f_star[s]]:
            failures.append("coextension does not commute with composition")
            break
    return failures


# ---------------------------------------------------------------------------
# Path trees

class _Bottom:
    __slots__ = ()

    def __repr__(self):
        return "⊥"


#: Synthetic least path, kept outside every carrier.
BOTTOM = _Bottom()


@dataclass(frozen=True, eq=False)
class PathTree:
    """The tree of paths of a forest coalgebra: a synthetic root below the forest."""

    nodes: tuple
    parent: Mapping

    @cached_property
    def children(self) -> dict:
        out: dict = {n: [] for n in self.nodes}
        for c in self.nodes:
            p = self.parent.get(c)
            if p is not None:
                out[p].append(c)
        return out

    @cached_property
    def height(self) -> dict:
        out = {}
        for n in self.nodes:
            h, cur = 0, n
            while cur in self.parent:
                cur = self.parent[cur]
                h += 1
            out[n] = h
        return out

    @property
    def root(self):
        return self.nodes[0]


def path_tree(x: ForestCoalgebra) -> PathTree:
    parent = {BOTTOM: None}
    parent.update({e: x.parent.get(e, BOTTOM) for e in x.universe})
    del parent[BOTTOM]
    return PathTree((BOTTOM,) + x.universe, parent)


def is_forest_morphism_tree(tmap: Mapping, t1: PathTree, t2: PathTree) -> bool:
    for n in t1.nodes:
        if n not in tmap or tmap[n] not in t2.children:
            return False
    if tmap[t1.root] != t2.root:
        return False
    for c in t1.nodes:
        p = t1.parent.get(c)
        if p is not None and t2.parent.get(tmap[c]) != tmap[p]:
            return False
    return True


def is_p_morphism(tmap: Mapping, t1: PathTree, t2: PathTree) -> bool:
    """Root preservation plus cover lifting, for a forest morphism of path trees."""
    if not is_forest_morphism_tree(tmap, t1, t2):
        raise CoalgebraError("map is not a forest morphism of path trees")
    for n in t1.nodes:
        image_children = {tmap[c] for c in t1.children[n]}
        for yc in t2.children[tmap[n]]:
            if yc not in image_children:
                return False
    return True


def forest_shape(nodes, children: Mapping, roots) -> tuple:
    """Canonical label-free shape of a forest; equal shapes = order isomorphic."""

    def shape(n) -> tuple:
        return tuple(sorted(shape(c) for c in children[n]))

    return tuple(sorted(shape(r) for r in roots))


# ---------------------------------------------------------------------------
# Coalgebra files: the structure grammar plus a forest section

def serialize_coalgebra(x: ForestCoalgebra) -> str:
    """Emit the coalgebra file grammar; bit-exact round trip for canonical order."""
    from .structures import element_tokens
    tok = element_tokens(x.universe)
    carrier = x.carrier
    lines = ["vocab " + " ".join(f"{r}/{a}" for r, a in carrier.vocab.relations)]
    lines.append(f"structure {carrier.name}")
    if x.universe:
        lines.append("elems " + " ".join(tok[e] for e in x.universe))
    for rel, _ in carrier.vocab.relations:
        for tup in sorted(carrier.interp[rel], key=lambda t: tuple(carrier.index[e] for e in t)):
            lines.append(f"rel {rel} " + " ".join(tok[e] for e in tup))
    if carrier.point is not None:
        lines.append(f"point {tok[carrier.point]}")
    lines.append("forest")
    for e in x.universe:
        if e not in x.parent:
            lines.append(f"root {tok[e]}")
    for e in x.universe:
        if e in x.parent:
            lines.append(f"parent {tok[e]} {tok[x.parent[e]]}")
    if x.kind == "pebble":
        for e in x.universe:
            lines.append(f"pebble {tok[e]} {x.pebble_fn[e]}")
    return "\n".join(lines) + "\n"


def parse_coalgebra(text: str) -> ForestCoalgebra:
    """Parse a coalgebra file.

    The kind is inferred: pebble lines make it a pebble coalgebra, otherwise
    a point makes it modal, otherwise it is EF-kind.  The height bound is
    the observed forest height (the pebble bound is the largest index seen).
    """
    from .structures import ParseError, parse_structure
    lines = text.splitlines()
    split = None
    for i, raw in enumerate(lines):
        stripped = raw.split("#")[0].strip()
        if stripped == "forest":
            split = i
            break
    if split is None:
        raise ParseError("missing 'forest' section")
    carrier = parse_structure("\n".join(lines[:split]), allow_reserved=True)
    roots: list = []
    parent: dict = {}
    pebble: dict = {}
    elems = set(carrier.universe)
    for lineno, raw in enumerate(lines[split + 1:], start=split + 2):
        stripped = raw.split("#")[0].strip()
        if not stripped:
            continue
        words = stripped.split()
        head, args = words[0], words[1:]
        if head == "root" and len(args) == 1 and args[0] in elems:
            roots.append(args[0])
        elif head == "parent" and len(args) == 2 and set(args) <= elems:
            if args[0] in parent:
                raise ParseError(f"duplicate parent for {args[0]!r}", lineno)
            parent[args[0]] = args[1]
        elif head == "pebble" and len(args) == 2 and args[0] in elems and args[1].isdigit():
            pebble[args[0]] = int(args[1])
        else:
            raise ParseError(f"bad forest directive {stripped!r}", lineno)
    for e in carrier.universe:
        if (e in parent) == (e in roots):
            raise ParseError(f"element {e!r} must be either a root or have a parent")
    if pebble:
        kind = "pebble"
        k_bound = max(pebble.values())
    elif carrier.point is not None:
        kind = "modal"
        k_bound = 0
    else:
        kind = "ef"
        k_bound = 0
    c = ForestCoalgebra(carrier, parent, max(k_bound, 1), kind, pebble or None)
    heights = c.height.values()
    k_bound = max(k_bound, max(heights, default=0), 1)
    return ForestCoalgebra(carrier, parent, k_bound, kind, pebble or None)
