import random

import pytest

from fmgames import (FragmentSpec, OracleResourceError, Structure, StructureError,
                     classify, model_check, oracle_preserves)
from fmgames.oracle import fo_rank_profile

from conftest import kripke, small_structures

MODES = ("full", "existential", "positive", "ep")


def test_fragment_spec_validation():
    assert FragmentSpec("FOrank", 2, "existential-positive").family == "fo_rank"
    with pytest.raises(ValueError):
        FragmentSpec("l_vars", 0, "full")
    with pytest.raises(ValueError):
        FragmentSpec("propositional", 1, "full")


def test_edge_loop_examples(edge, loop):
    assert oracle_preserves(FragmentSpec("fo_rank", 2, "ep"), edge, loop).preserved
    res = oracle_preserves(FragmentSpec("fo_rank", 2, "existential"), edge, loop)
    assert not res.preserved
    assert model_check(res.witness, edge) and not model_check(res.witness, loop)
    c = classify(res.witness)
    assert c.rank <= 2 and c.in_mode["existential"]


def test_identity_always_preserved(edge, loop, orders):
    for a in (edge, loop, orders[3]):
        for mode in MODES:
            assert oracle_preserves(FragmentSpec("fo_rank", 2, mode), a, a).preserved
            assert oracle_preserves(FragmentSpec("l_vars", 2, mode), a, a).preserved


def test_positive_monotone_under_added_tuples(edge):
    pt = Structure.make(edge.vocab, ["p"], {}, name="pt")
    ptloop = Structure.make(edge.vocab, ["q"], {"E": [("q", "q")]}, name="ptloop")
    for k in (1, 2, 3):
        assert oracle_preserves(FragmentSpec("fo_rank", k, "positive"), pt, ptloop).preserved
    assert not oracle_preserves(FragmentSpec("fo_rank", 1, "positive"), ptloop, pt).preserved


def test_rank_profile_monotone(edge, loop):
    pool = small_structures(2)
    rnd = random.Random(17)
    for _ in range(30):
        a, b = rnd.choice(pool), rnd.choice(pool)
        for mode in MODES:
            profile = fo_rank_profile(a, b, 3, mode)
            for lo, hi in zip(profile, profile[1:]):
                assert not (hi.preserved and not lo.preserved)


def test_mode_monotonicity():
    pool = small_structures(2)
    rnd = random.Random(19)
    for _ in range(30):
        a, b = rnd.choice(pool), rnd.choice(pool)
        res = {m: oracle_preserves(FragmentSpec("fo_rank", 2, m), a, b).preserved
               for m in MODES}
        assert not res["existential"] or res["ep"]
        assert not res["positive"] or res["ep"]
        assert not res["full"] or (res["existential"] and res["positive"])


def test_transitivity_sampled():
    pool = small_structures(2)
    rnd = random.Random(29)
    for _ in range(25):
        a, b, c = (rnd.choice(pool) for _ in range(3))
        for mode in ("ep", "full"):
            frag = FragmentSpec("fo_rank", 2, mode)
            ab = oracle_preserves(frag, a, b).preserved
            bc = oracle_preserves(frag, b, c).preserved
            if ab and bc:
                assert oracle_preserves(frag, a, c).preserved


def test_witness_soundness_sweep():
    pool = small_structures(2)
    rnd = random.Random(31)
    for _ in range(40):
        a, b = rnd.choice(pool), rnd.choice(pool)
        for mode in MODES:
            for k, res in enumerate(fo_rank_profile(a, b, 2, mode)):
                if res.witness is None:
                    continue
                assert model_check(res.witness, a)
                assert not model_check(res.witness, b)
                c = classify(res.witness)
                assert c.rank <= k
                assert c.in_mode[mode]


def test_lvars_witness_uses_k_variables(cliques):
    res = oracle_preserves(FragmentSpec("l_vars", 3, "full"), cliques[2], cliques[3])
    assert not res.preserved
    c = classify(res.witness)
    assert c.var_count <= 3
    assert model_check(res.witness, cliques[2]) and not model_check(res.witness, cliques[3])


def test_lvars_clique_thresholds(cliques):
    assert oracle_preserves(FragmentSpec("l_vars", 2, "full"), cliques[2], cliques[3]).preserved
    assert not oracle_preserves(FragmentSpec("l_vars", 3, "full"), cliques[2], cliques[3]).preserved


def test_ml_depth_examples(chain_ab):
    dead = kripke(["b"], [], [], "b")
    res = oracle_preserves(FragmentSpec("ml_depth", 1, "existential"), chain_ab, dead)
    assert not res.preserved
    assert model_check(res.witness, chain_ab) and not model_check(res.witness, dead)
    assert classify(res.witness).modal_depth <= 1
    assert oracle_preserves(FragmentSpec("ml_depth", 2, "ep"), dead, chain_ab).preserved


def test_ml_requires_points_and_modal_vocab(edge, chain_ab):
    with pytest.raises(StructureError):
        oracle_preserves(FragmentSpec("ml_depth", 1, "full"), edge, edge)
    with pytest.raises(StructureError):
        oracle_preserves(FragmentSpec("ml_depth", 1, "full"),
                         chain_ab.with_point(None), chain_ab)


def test_empty_universe_conventions(edge):
    empty = Structure.make(edge.vocab, [], {})
    for mode in ("ep", "existential"):
        assert oracle_preserves(FragmentSpec("fo_rank", 2, mode), empty, edge).preserved
        assert not oracle_preserves(FragmentSpec("fo_rank", 1, mode), edge, empty).preserved
    for mode in ("positive", "full"):
        res = oracle_preserves(FragmentSpec("fo_rank", 1, mode), empty, edge)
        assert not res.preserved  # "A x1. false" holds only in the empty structure
    assert oracle_preserves(FragmentSpec("fo_rank", 3, "full"), empty, empty).preserved


def test_rank_zero_never_distinguishes(edge, loop):
    for mode in MODES:
        assert oracle_preserves(FragmentSpec("fo_rank", 0, mode), loop, edge).preserved


def test_resource_cap_is_an_error_not_a_verdict(cliques):
    with pytest.raises(OracleResourceError):
        oracle_preserves(FragmentSpec("fo_rank", 2, "full"), cliques[3], cliques[3], cap=5)


def test_signature_tables_depend_only_on_free_vars(edge, loop):
    # perturbing a non-free coordinate of an assignment never flips the bit
    from fmgames.oracle import _FoOracle
    for mode in MODES:
        eng = _FoOracle(edge, loop, 2, mode, 2 ** 20)
        eng.run_rank_layers()
        side = eng.side_a
        for packed in eng.meets.keys:
            ma, _, fv = eng._unpack(packed)
            for j in (1, 2):
                if fv >> (j - 1) & 1:
                    continue
                for group in side.groups[j]:
                    bits = ma & group
                    assert bits == 0 or bits == group, (mode, packed, j)


def test_lvars_variable_monotonicity():
    pool = [s for s in small_structures(2) if s.size]
    rnd = random.Random(37)
    for _ in range(10):
        a, b = rnd.choice(pool), rnd.choice(pool)
        for mode in MODES:
            hi = oracle_preserves(FragmentSpec("l_vars", 2, mode), a, b).preserved
            lo = oracle_preserves(FragmentSpec("l_vars", 1, mode), a, b).preserved
            assert not hi or lo
