"""Unified solvers for the twelve game variants (3 families x 4 modes).

EF and modal games are solved by backward induction over the round budget
with the maintain-condition formulation; this is sound because both winning
conditions are hereditary (every sub-relation of a partial isomorphism or
partial homomorphism is again one).  The unbounded pebble game is solved by
a greatest fixpoint over the finite placement space; the iteration at which
a placement is pruned is its death stage.

EF positions are memoized by (set of chosen pairs, remaining rounds): the
winning condition and the available moves depend on nothing else, which
collapses the sequence blowup.  Points of the structures are ignored by the
EF and pebble families; the modal family requires them.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from typing import Optional, Sequence

from .structures import Structure, StructureError, same_vocab

FAMILIES = ("ef", "pebble", "modal")
MODES = ("full", "existential", "positive", "ep")

_MODE_ALIASES = {
    "existential-positive": "ep",
    "exists": "existential",
}


def canonical_mode(mode: str) -> str:
    mode = _MODE_ALIASES.get(mode, mode)
    if mode not in MODES:
        raise ValueError(f"unknown mode {mode!r}")
    return mode


class GameResourceError(RuntimeError):
    """Search space beyond the configured cap; not a verdict."""


class IllegalMoveError(ValueError):
    def __init__(self, message: str, round_no: int):
        super().__init__(f"round {round_no}: {message}")
        self.round_no = round_no


@dataclass(frozen=True)
class GameSpec:
    """Game family x mode x resource bound.

    ``k`` counts rounds for EF/modal and pebbles for the pebble family.  The
    optional ``rounds`` selects the bounded-round pebble variant; without it
    the pebble game is the unbounded one, solved by greatest fixpoint.
    """

    family: str
    mode: str
    k: int
    rounds: Optional[int] = None

    def __post_init__(self):
        if self.family not in FAMILIES:
            raise ValueError(f"unknown family {self.family!r}")
        object.__setattr__(self, "mode", canonical_mode(self.mode))
        if self.k < 1:
            raise ValueError("k must be a positive integer")
        if self.rounds is not None:
            if self.family != "pebble":
                raise ValueError("rounds applies to the pebble family only")
            if self.rounds < 1:
                raise ValueError("rounds must be a positive integer")

    @property
    def forth_only(self) -> bool:
        return self.mode in ("existential", "ep")

    @property
    def iso_condition(self) -> bool:
        return self.mode in ("full", "existential")


def pairs_condition(pairs, a: Structure, b: Structure, iso: bool) -> bool:
    """Partial-homomorphism (or partial-isomorphism) check on a pair set."""
    fwd: dict = {}
    for x, y in pairs:
        if fwd.setdefault(x, y) != y:
            return False
    if iso:
        bwd: dict = {}
        for x, y in pairs:
            if bwd.setdefault(y, x) != x:
                return False
    for rel, _ in a.vocab.relations:
        b_rel = b.interp[rel]
        for tup in a.interp[rel]:
            if all(x in fwd for x in tup):
                if tuple(fwd[x] for x in tup) not in b_rel:
                    return False
        if iso:
            a_rel = a.interp[rel]
            for tup in b.interp[rel]:
                if all(y in bwd for y in tup):
                    if tuple(bwd[y] for y in tup) not in a_rel:
                        return False
    return True


def modal_pair_condition(x, y, a: Structure, b: Structure, iso: bool) -> bool:
    for rel in a.vocab.unary:
        in_a = (x,) in a.interp[rel]
        in_b = (y,) in b.interp[rel]
        if iso and in_a != in_b:
            return False
        if not iso and in_a and not in_b:
            return False
    return True


class Verdict:
    """Solver outcome plus positional strategies for both players.

    Histories are explicit play records: ``(played_a, played_b)`` element
    tuples for EF, world tuples including the starting points for modal, and
    tuples of ``(pebble, a, b)`` triples for pebble.  Strategy lookups reduce
    them to the memoized positional keys.
    """

    def __init__(self, spec: GameSpec, a: Structure, b: Structure):
        self.spec = spec
        self.a = a
        self.b = b
        self.duplicator_wins: bool = False
        self.stage: dict | None = None
        self._alive = None
        self._cond = None

    # -- positional keys ----------------------------------------------------

    def _key(self, history):
        spec = self.spec
        if spec.family == "ef":
            pa, pb = history
            return frozenset(zip(pa, pb)), spec.k - len(pa)
        if spec.family == "modal":
            pa, pb = history
            return pa[-1], pb[-1], spec.k - (len(pa) - 1)
        placement = {}
        for p, x, y in history:
            placement[p] = (x, y)
        key = frozenset(placement.items())
        if spec.rounds is not None:
            return key, spec.rounds - len(history)
        return key

    def condition_holds(self, history) -> bool:
        spec = self.spec
        if spec.family == "modal":
            pa, pb = history
            return all(modal_pair_condition(x, y, self.a, self.b, spec.iso_condition)
                       for x, y in zip(pa, pb))
        if spec.family == "ef":
            pa, pb = history
            pairs = frozenset(zip(pa, pb))
        else:
            placement = {}
            for p, x, y in history:
                placement[p] = (x, y)
            pairs = frozenset(placement.values())
        return pairs_condition(pairs, self.a, self.b, spec.iso_condition)

    def position_alive(self, history) -> bool:
        return self._alive(self._key(history))

    # -- moves --------------------------------------------------------------

    def legal_moves(self, history) -> list:
        spec = self.spec
        sides = ("A",) if spec.forth_only else ("A", "B")
        moves = []
        if spec.family == "ef":
            pa, _ = history
            if len(pa) >= spec.k:
                return []
            for side in sides:
                src = self.a if side == "A" else self.b
                moves += [(side, e) for e in src.universe]
        elif spec.family == "modal":
            pa, pb = history
            if len(pa) - 1 >= spec.k:
                return []
            for side in sides:
                src, cur = (self.a, pa[-1]) if side == "A" else (self.b, pb[-1])
                for rel in src.vocab.binary:
                    moves += [(rel, side, e) for e in src.successors(rel, cur)]
        else:
            if spec.rounds is not None and len(history) >= spec.rounds:
                return []
            for p in range(1, spec.k + 1):
                for side in sides:
                    src = self.a if side == "A" else self.b
                    moves += [(p, side, e) for e in src.universe]
        return moves

    def responses(self, history, move) -> list:
        spec = self.spec
        if spec.family == "ef":
            side = move[0]
            return list(self.b.universe if side == "A" else self.a.universe)
        if spec.family == "modal":
            rel, side, _ = move
            pa, pb = history
            if side == "A":
                return self.b.successors(rel, pb[-1])
            return self.a.successors(rel, pa[-1])
        _, side, _ = move
        return list(self.b.universe if side == "A" else self.a.universe)

    def _child(self, history, move, response):
        spec = self.spec
        if spec.family == "ef":
            pa, pb = history
            side, e = move
            return (pa + (e,), pb + (response,)) if side == "A" else (pa + (response,), pb + (e,))
        if spec.family == "modal":
            pa, pb = history
            _, side, e = move
            return (pa + (e,), pb + (response,)) if side == "A" else (pa + (response,), pb + (e,))
        p, side, e = move
        pair = (e, response) if side == "A" else (response, e)
        return history + ((p, pair[0], pair[1]),)

    # -- strategies ----------------------------------------------------------

    def duplicator_response(self, history, move):
        """First response (canonical order) keeping the position alive."""
        for r in self.responses(history, move):
            if self._alive(self._key(self._child(history, move, r))):
                return r
        return None

    def spoiler_move(self, history):
        """A winning Spoiler move: every response leads to a dead position.

        Pebble/unbounded ties are broken by lowest resulting death stage,
        then canonical order; the stage bound is what keeps synthesized
        distinguishing formulas within rank = death stage.
        """
        best = None
        best_stage = None
        for move in self.legal_moves(history):
            children = [self._child(history, move, r) for r in self.responses(history, move)]
            if any(self._alive(self._key(c)) for c in children):
                continue
            if self.stage is None:
                return move
            worst = max((self.stage.get(self._key(c), 0) for c in children), default=0)
            if best is None or worst < best_stage:
                best, best_stage = move, worst
        return best

    def duplicator_wins_within(self, rounds: int) -> bool:
        """Verdict for another round budget, read off the same solve tables.

        EF and modal positions are memoized by remaining rounds, so one
        backward induction answers every smaller (or larger) budget too.
        """
        if self.spec.family == "ef":
            return self._alive((frozenset(), rounds))
        if self.spec.family == "modal":
            return self._alive((self.a.point, self.b.point, rounds))
        raise ValueError("round-budget reuse applies to EF and modal verdicts")

    def initial_history(self):
        if self.spec.family == "modal":
            return ((self.a.point,), (self.b.point,))
        if self.spec.family == "ef":
            return ((), ())
        return ()

    def report(self) -> dict:
        out = {
            "family": self.spec.family,
            "mode": self.spec.mode,
            "k": self.spec.k,
            "duplicatorWins": self.duplicator_wins,
        }
        if self.spec.rounds is not None:
            out["rounds"] = self.spec.rounds
        return out


def _precheck(spec: GameSpec, a: Structure, b: Structure):
    if not same_vocab(a, b):
        raise StructureError("vocabulary mismatch between the two structures")
    if spec.family == "modal":
        if not a.vocab.modal_flag:
            raise StructureError("modal game needs a modal vocabulary")
        if a.point is None or b.point is None:
            raise StructureError("modal game needs pointed structures on both sides")


def solve(spec: GameSpec, a: Structure, b: Structure,
          *, placement_cap: int = 200_000) -> Verdict:
    """Decide the game and extract positional strategies."""
    _precheck(spec, a, b)
    verdict = Verdict(spec, a, b)
    if spec.family == "ef":
        _solve_ef(verdict)
    elif spec.family == "modal":
        _solve_modal(verdict)
    elif spec.rounds is not None:
        _solve_pebble_bounded(verdict, placement_cap)
    else:
        _solve_pebble_fixpoint(verdict, placement_cap)
    return verdict


def _solve_ef(v: Verdict):
    a, b, spec = v.a, v.b, v.spec
    iso = spec.iso_condition
    cond_memo: dict = {}

    def cond(pairs) -> bool:
        r = cond_memo.get(pairs)
        if r is None:
            r = cond_memo[pairs] = pairs_condition(pairs, a, b, iso)
        return r

    sides = ("A",) if spec.forth_only else ("A", "B")
    memo: dict = {}

    def alive(key) -> bool:
        res = memo.get(key)
        if res is not None:
            return res
        pairs, rem = key
        if not cond(pairs):
            memo[key] = False
            return False
        if rem == 0:
            memo[key] = True
            return True
        result = True
        for side in sides:
            src, dst = (a, b) if side == "A" else (b, a)
            for e in src.universe:
                ok = False
                for r in dst.universe:
                    pair = (e, r) if side == "A" else (r, e)
                    if alive((pairs | {pair}, rem - 1)):
                        ok = True
                        break
                if not ok:
                    result = False
                    break
            if not result:
                break
        memo[key] = result
        return result

    v._alive = alive
    v.duplicator_wins = alive((frozenset(), spec.k))


def _solve_modal(v: Verdict):
    a, b, spec = v.a, v.b, v.spec
    iso = spec.iso_condition
    sides = ("A",) if spec.forth_only else ("A", "B")
    memo: dict = {}

    def alive(key) -> bool:
        res = memo.get(key)
        if res is not None:
            return res
        x, y, rem = key
        if not modal_pair_condition(x, y, a, b, iso):
            memo[key] = False
            return False
        if rem == 0:
            memo[key] = True
            return True
        result = True
        for side in sides:
            src, dst, cur, other = (a, b, x, y) if side == "A" else (b, a, y, x)
            for rel in src.vocab.binary:
                for e in src.successors(rel, cur):
                    ok = False
                    for r in dst.successors(rel, other):
                        child = (e, r, rem - 1) if side == "A" else (r, e, rem - 1)
                        if alive(child):
                            ok = True
                            break
                    if not ok:
                        result = False
                        break
                if not result:
                    break
            if not result:
                break
        memo[key] = result
        return result

    v._alive = alive
    v.duplicator_wins = alive((a.point, b.point, spec.k))


def _enumerate_placements(a: Structure, b: Structure, k: int, cap: int):
    pairs = [(x, y) for x in a.universe for y in b.universe]
    total = (len(pairs) + 1) ** k
    if total > cap:
        raise GameResourceError(f"pebble placement space {total} exceeds cap {cap}")
    slots = [[None] + pairs for _ in range(k)]
    out = []
    for combo in itertools.product(*slots):
        out.append(frozenset((p + 1, pair) for p, pair in enumerate(combo) if pair is not None))
    return sorted(set(out), key=lambda s: sorted(map(repr, s)))


def _pebble_moves(spec, a, b):
    sides = ("A",) if spec.forth_only else ("A", "B")
    moves = []
    for p in range(1, spec.k + 1):
        for side in sides:
            src = a if side == "A" else b
            moves += [(p, side, e) for e in src.universe]
    return moves


def _apply_pebble(placement, move, response):
    p, side, e = move
    pair = (e, response) if side == "A" else (response, e)
    return frozenset(item for item in placement if item[0] != p) | {(p, pair)}


def _solve_pebble_fixpoint(v: Verdict, cap: int):
    a, b, spec = v.a, v.b, v.spec
    iso = spec.iso_condition
    placements = _enumerate_placements(a, b, spec.k, cap)
    cond_memo: dict = {}

    def cond(pl) -> bool:
        r = cond_memo.get(pl)
        if r is None:
            pairs = frozenset(pair for _, pair in pl)
            r = cond_memo[pl] = pairs_condition(pairs, a, b, iso)
        return r

    moves = _pebble_moves(spec, a, b)
    responses = {"A": list(b.universe), "B": list(a.universe)}
    alive = {pl: cond(pl) for pl in placements}
    stage = {pl: 0 for pl in placements if not alive[pl]}
    iteration = 0
    changed = True
    while changed:
        # synchronized sweeps: every stage-s death sees only stage-<s deaths,
        # which keeps death stages strictly decreasing along Spoiler's
        # strategy and bounds synthesized formulas by rank = death stage
        changed = False
        iteration += 1
        killed = []
        for pl in placements:
            if not alive[pl]:
                continue
            for move in moves:
                if not any(alive[_apply_pebble(pl, move, r)] for r in responses[move[1]]):
                    killed.append(pl)
                    changed = True
                    break
        for pl in killed:
            alive[pl] = False
            stage[pl] = iteration
    v._alive = lambda key: alive[key]
    v.stage = stage
    v.duplicator_wins = alive[frozenset()]


def _solve_pebble_bounded(v: Verdict, cap: int):
    a, b, spec = v.a, v.b, v.spec
    iso = spec.iso_condition
    cond_memo: dict = {}

    def cond(pl) -> bool:
        r = cond_memo.get(pl)
        if r is None:
            pairs = frozenset(pair for _, pair in pl)
            r = cond_memo[pl] = pairs_condition(pairs, a, b, iso)
        return r

    moves = _pebble_moves(spec, a, b)
    responses = {"A": list(b.universe), "B": list(a.universe)}
    memo: dict = {}

    def alive(key) -> bool:
        res = memo.get(key)
        if res is not None:
            return res
        pl, rem = key
        if not cond(pl):
            memo[key] = False
            return False
        if rem == 0:
            memo[key] = True
            return True
        result = True
        for move in moves:
            if not any(alive((_apply_pebble(pl, move, r), rem - 1)) for r in responses[move[1]]):
                result = False
                break
        memo[key] = result
        return result

    v._alive = alive
    v.duplicator_wins = alive((frozenset(), spec.rounds))


# ---------------------------------------------------------------------------
# Replay

@dataclass
class Transcript:
    spec: GameSpec
    rounds: list = field(default_factory=list)
    winner: str = "Duplicator"
    note: str = ""

    def lines(self) -> list[str]:
        out = [f"game {self.spec.family}/{self.spec.mode} k={self.spec.k}"]
        for i, r in enumerate(self.rounds, start=1):
            out.append(f"round {i}: spoiler {r['move']} -> duplicator {r['response']}"
                       f" [{'ok' if r['condition'] else 'violated'}]")
        if self.note:
            out.append(self.note)
        out.append(f"winner: {self.winner}")
        return out


def _validate_move(verdict: Verdict, history, move, round_no: int):
    spec = verdict.spec
    legal = verdict.legal_moves(history)
    if move not in legal:
        if spec.family == "ef" and not isinstance(move, tuple):
            # bare element shorthand for forth-only play
            move = ("A", move)
            if move in legal:
                return move
        raise IllegalMoveError(f"illegal move {move!r}", round_no)
    return move


def replay(spec: GameSpec, a: Structure, b: Structure, verdict: Verdict,
           moves_script: Sequence) -> Transcript:
    """Play the engine's Duplicator strategy against a Spoiler move script.

    If the solver declared Duplicator the winner, the produced transcript is
    asserted never to reach a lost position.
    """
    if verdict.spec != spec or verdict.a != a or verdict.b != b:
        raise ValueError("verdict does not match the given spec and structures")
    transcript = Transcript(spec)
    history = verdict.initial_history()
    if not verdict.condition_holds(history):
        transcript.winner = "Spoiler"
        transcript.note = "initial position violates the winning condition"
        return transcript
    for i, move in enumerate(moves_script, start=1):
        move = _validate_move(verdict, history, move, i)
        response = verdict.duplicator_response(history, move)
        doomed_note = ""
        if response is None:
            options = verdict.responses(history, move)
            if not options:
                transcript.rounds.append({"move": move, "response": None, "condition": False})
                transcript.winner = "Spoiler"
                transcript.note = f"no response available at round {i}"
                assert not verdict.duplicator_wins
                return transcript
            response = options[0]
            doomed_note = " (best effort)"
        history = verdict._child(history, move, response)
        ok = verdict.condition_holds(history)
        transcript.rounds.append({"move": move, "response": response, "condition": ok})
        if not ok:
            transcript.winner = "Spoiler"
            transcript.note = f"condition violated at round {i}{doomed_note}"
            assert not verdict.duplicator_wins
            return transcript
    transcript.winner = "Duplicator"
    if verdict.duplicator_wins:
        assert verdict.position_alive(history)
    return transcript
