import random

import pytest

from fmgames import (CoalgebraError, GameSpec, build_ef, build_modal,
                     build_pebble_truncated, check_open_by_squares,
                     check_open_cover_lifting, factor_xo, find_morphism,
                     path_tree, is_p_morphism, solve, validate_coalgebra,
                     verify_morphism)

from conftest import kripke, small_structures

KINDS = ("hom", "i_morphism", "pathwise_embedding", "open_pathwise_embedding")


def test_identity_qualifies_for_every_kind(edge):
    c = build_ef(edge, 2, with_i=True)
    for kind in KINDS:
        w = find_morphism(kind, c, c)
        assert w is not None
        assert all(w.mapping[e] == e for e in c.universe) or kind == "hom"


def test_hom_exists_from_coextension(edge, loop):
    fa, fb = build_ef(edge, 2), build_ef(loop, 2)
    w = find_morphism("hom", fa, fb)
    assert w is not None
    assert verify_morphism(w.mapping, fa, fb, "hom") == []


def test_pathwise_none_edge_loop(edge, loop):
    fia, fib = build_ef(edge, 2, with_i=True), build_ef(loop, 2, with_i=True)
    assert find_morphism("i_morphism", fia, fib) is not None
    assert find_morphism("pathwise_embedding", fia, fib) is None


def test_i_morphism_requires_i(edge):
    c = build_ef(edge, 1)
    with pytest.raises(CoalgebraError):
        find_morphism("i_morphism", c, c)


def test_kind_mismatch_rejected(edge):
    a = build_ef(edge, 1)
    b = build_pebble_truncated(edge, 1, 1)
    with pytest.raises(CoalgebraError):
        find_morphism("hom", a, b)


def test_morphism_kind_implications():
    pool = [s for s in small_structures(2) if s.size]
    rnd = random.Random(47)
    for _ in range(25):
        a, b = rnd.choice(pool), rnd.choice(pool)
        x, y = build_ef(a, 2, with_i=True), build_ef(b, 2, with_i=True)
        for stronger, weaker in (("open_pathwise_embedding", "pathwise_embedding"),
                                 ("pathwise_embedding", "hom")):
            w = find_morphism(stronger, x, y)
            if w is not None:
                assert verify_morphism(w.mapping, x, y, weaker) == []


def test_pathwise_search_matches_existential_game():
    pool = [s for s in small_structures(2) if s.size]
    rnd = random.Random(53)
    for _ in range(30):
        a, b = rnd.choice(pool), rnd.choice(pool)
        found = find_morphism("pathwise_embedding",
                              build_ef(a, 2, with_i=True),
                              build_ef(b, 2, with_i=True)) is not None
        game = solve(GameSpec("ef", "existential", 2), a, b).duplicator_wins
        assert found == game


def test_factor_xo_identity_when_already_pathwise(edge):
    c = build_ef(edge, 2, with_i=True)
    w = find_morphism("pathwise_embedding", c, c)
    e_map, x0, g = factor_xo(w.mapping, c, c)
    assert x0.carrier.interp == c.carrier.interp  # no tuples added
    assert g.mapping == w.mapping


def test_factor_xo_adds_relations_along_branches(loop):
    from fmgames import Structure
    chain = Structure.make(loop.vocab, ["x", "y"], {})
    x = build_ef(chain, 2)
    # x has no tuples at all; map everything into F_2(loop)
    y = build_ef(loop, 2)
    f = find_morphism("hom", x, y).mapping
    e_map, x0, g = factor_xo(f, x, y)
    assert x0.carrier.interp["E"]  # pulled back along comparable pairs
    assert validate_coalgebra(x0) == []
    assert verify_morphism(g.mapping, x0, y, "pathwise_embedding") == []
    assert all(e_map[s] == s for s in x.universe)
    assert all(g.mapping[s] == f[s] for s in x.universe)


def test_factor_xo_pebble_kind_stays_valid(edge, loop):
    x = build_pebble_truncated(edge, 2, 2)
    y = build_pebble_truncated(loop, 2, 2)
    f = find_morphism("hom", x, y)
    assert f is not None
    _, x0, g = factor_xo(f.mapping, x, y)
    assert validate_coalgebra(x0) == []


def test_open_formulations_agree_on_found_embeddings():
    pool = [s for s in small_structures(2) if s.size]
    rnd = random.Random(59)
    agree = 0
    for _ in range(120):
        a, b = rnd.choice(pool), rnd.choice(pool)
        x, y = build_ef(a, 2, with_i=True), build_ef(b, 2, with_i=True)
        w = find_morphism("pathwise_embedding", x, y)
        if w is None:
            continue
        lifting = not check_open_cover_lifting(w.mapping, x, y)
        squares = not check_open_by_squares(w.mapping, x, y)
        assert lifting == squares
        # and the path-tree p-morphism check is the same thing
        tx, ty = path_tree(x), path_tree(y)
        from fmgames import BOTTOM
        tmap = {BOTTOM: BOTTOM, **w.mapping}
        assert is_p_morphism(tmap, tx, ty) == lifting
        agree += 1
    assert agree > 5


def test_modal_morphisms_respect_points():
    a = kripke(["a", "b"], [("a", "b")], [], "a")
    b = kripke(["x", "y"], [("x", "y")], [], "x")
    w = find_morphism("hom", build_modal(a, 2), build_modal(b, 2))
    assert w is not None
    ua = build_modal(a, 2)
    assert w.mapping[ua.carrier.point] == build_modal(b, 2).carrier.point
