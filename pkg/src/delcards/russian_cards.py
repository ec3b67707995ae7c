"""Card-deal instance generation and the goal/announcement formula builders.

Three players: a and b hold k cards each, c holds l, from a pack of 2k+l
cards numbered from 0. Worlds are deals; each player's partition groups
worlds by her own hand, since that is all she initially sees.
"""
from __future__ import annotations

import math
import os
from dataclasses import dataclass
from itertools import combinations
from typing import Iterable, Sequence

from .epistemic_core import AgentId, KripkeModel, Proposition, WorldId
from .errors import CapacityError
from .formula import And, Atom, Formula, Knows, Not, Or, conjoin, disjoin

Hand = frozenset[int]

AGENTS: tuple[AgentId, ...] = ("a", "b", "c")
DEFAULT_WORLD_CAP = 5_000_000
WORLD_CAP_ENV = "DELCARDS_WORLD_CAP"


@dataclass(frozen=True)
class Deal:
    """One distribution of the pack over the three players."""

    a: Hand
    b: Hand
    c: Hand

    def __post_init__(self):
        object.__setattr__(self, "a", frozenset(self.a))
        object.__setattr__(self, "b", frozenset(self.b))
        object.__setattr__(self, "c", frozenset(self.c))
        if self.a & self.b or self.a & self.c or self.b & self.c:
            raise ValueError("hands of a deal must be pairwise disjoint")

    def hand(self, x: AgentId) -> Hand:
        return {"a": self.a, "b": self.b, "c": self.c}[x]

    def cards(self) -> frozenset[int]:
        return self.a | self.b | self.c


@dataclass(frozen=True)
class RcpInstance:
    """Generated instance: parameters, deal universe, model, designated w*."""

    k: int
    l: int
    universe: tuple[int, ...]
    model: KripkeModel
    actual: WorldId
    deal: Deal


def binomial(n: int, r: int) -> int:
    """C(n, r) as an exact integer; 0 when r exceeds n."""
    if n < 0 or r < 0:
        raise ValueError("binomial needs nonnegative arguments")
    return math.comb(n, r)


def encode_deal(deal: Deal) -> str:
    """Canonical base id: sorted hands joined as A|B|C. Hands are digit
    strings while every card fits one digit, comma-separated otherwise."""
    if deal.cards() and max(deal.cards()) > 9:
        sep = ","
    else:
        sep = ""
    return "|".join(sep.join(str(c) for c in sorted(h)) for h in (deal.a, deal.b, deal.c))


def _parse_hand_text(seg: str) -> frozenset[int]:
    seg = seg.strip()
    if not seg:
        return frozenset()
    if "," in seg:
        return frozenset(int(part) for part in seg.split(","))
    if not seg.isdigit():
        raise ValueError(f"not a hand: {seg!r}")
    return frozenset(int(ch) for ch in seg)


def parse_deal_text(text: str) -> Deal:
    """Inverse of encode_deal; also accepts the compact digit form for
    single-digit packs (multi-digit cards require the comma form)."""
    segments = text.split("|")
    if len(segments) != 3:
        raise ValueError(f"a deal has three hands, got {len(segments)} in {text!r}")
    return Deal(*(_parse_hand_text(seg) for seg in segments))


def deal_from_json(doc) -> Deal:
    return Deal(frozenset(doc["a"]), frozenset(doc["b"]), frozenset(doc["c"]))


def deal_to_json(deal: Deal) -> dict:
    return {"a": sorted(deal.a), "b": sorted(deal.b), "c": sorted(deal.c)}


def hands_of(universe: Iterable[int], size: int) -> tuple[Hand, ...]:
    """All size-subsets of the pack in canonical order."""
    return tuple(frozenset(h) for h in combinations(sorted(universe), size))


def canonical_hands(hands: Iterable[Iterable[int]]) -> tuple[Hand, ...]:
    """Deduplicate and sort a hand collection into canonical order."""
    return tuple(sorted({frozenset(h) for h in hands}, key=lambda h: tuple(sorted(h))))


def resolve_world_cap(override: int | None = None) -> int:
    if override is not None:
        return override
    env = os.environ.get(WORLD_CAP_ENV)
    if env is not None:
        return int(env)
    return DEFAULT_WORLD_CAP


def default_deal(k: int, l: int) -> Deal:
    return Deal(
        frozenset(range(k)),
        frozenset(range(k, 2 * k)),
        frozenset(range(2 * k, 2 * k + l)),
    )


def build_rcp(
    k: int, l: int, deal: Deal | None = None, world_cap: int | None = None
) -> RcpInstance:
    """Generate the full deal model for pack size 2k+l.

    Worlds are all C(2k+l,k)*C(k+l,k) deals; the a/b/c partitions group
    worlds sharing the respective hand. The designated world defaults to
    contiguous hands a={0..k-1}, b={k..2k-1}, c={2k..2k+l-1}.
    """
    if k < 1 or l < 1:
        raise ValueError("both hand sizes must be at least 1")
    n = 2 * k + l
    universe = tuple(range(n))
    total = binomial(n, k) * binomial(k + l, k)
    cap = resolve_world_cap(world_cap)
    if total > cap:
        raise CapacityError(f"instance would have {total} worlds, above the cap of {cap}")
    if deal is None:
        deal = default_deal(k, l)
    else:
        if len(deal.a) != k or len(deal.b) != k or len(deal.c) != l:
            raise ValueError(f"deal hand sizes must be ({k},{k},{l})")
        if deal.cards() != frozenset(universe):
            raise ValueError("deal must use the pack 0..2k+l-1 exactly")

    props = {(x, i): Proposition(x, i) for x in AGENTS for i in universe}
    worlds: list[WorldId] = []
    valuation: dict[WorldId, frozenset[Proposition]] = {}
    by_a: dict[Hand, list[WorldId]] = {}
    by_b: dict[Hand, list[WorldId]] = {}
    by_c: dict[Hand, list[WorldId]] = {}
    for a_hand in combinations(universe, k):
        rest = tuple(c for c in universe if c not in a_hand)
        for b_hand in combinations(rest, k):
            c_hand = tuple(c for c in rest if c not in b_hand)
            d = Deal(frozenset(a_hand), frozenset(b_hand), frozenset(c_hand))
            w = WorldId(encode_deal(d))
            worlds.append(w)
            valuation[w] = frozenset(
                [props[("a", i)] for i in a_hand]
                + [props[("b", i)] for i in b_hand]
                + [props[("c", i)] for i in c_hand]
            )
            by_a.setdefault(d.a, []).append(w)
            by_b.setdefault(d.b, []).append(w)
            by_c.setdefault(d.c, []).append(w)
    relations = {"a": list(by_a.values()), "b": list(by_b.values()), "c": list(by_c.values())}
    model = KripkeModel(AGENTS, worlds, valuation, relations)
    return RcpInstance(k, l, universe, model, WorldId(encode_deal(deal)), deal)


def hand_announcement(x: AgentId, hands: Sequence[Iterable[int]]) -> Formula:
    """The formula "x's hand is one of these": a disjunction over the given
    hands of the conjunction of x holding each card of the hand. Because
    every world gives x exactly a hand's worth of cards, each disjunct pins
    x's hand completely."""
    normalized = canonical_hands(hands)
    if not normalized:
        raise ValueError("hand announcement needs at least one hand")
    sizes = {len(h) for h in normalized}
    if len(sizes) != 1:
        raise ValueError(f"hand announcement has mixed hand sizes {sorted(sizes)}")
    return disjoin([conjoin([Atom(Proposition(x, i)) for i in sorted(h)]) for h in normalized])


def knows_deal(x: AgentId, universe: Iterable[int], agents: Sequence[AgentId] = AGENTS) -> Formula:
    """x can attribute every card: for each card, x knows who holds it.

    This is a conjunction over cards of a disjunction of knowledge
    operators, not knowledge of a disjunction; the weaker reading would
    hold without x being able to place the card."""
    return conjoin(
        [disjoin([Knows(x, Atom(Proposition(y, i))) for y in agents]) for i in sorted(universe)]
    )


def ignorance_goal(
    universe: Iterable[int], observer: AgentId = "c", holders: Sequence[AgentId] = ("a", "b")
) -> Formula:
    """The observer cannot attribute any card beyond her own hand: for each
    card, either she holds it, or she knows neither that the first holder
    has it nor that the second does. Deal-independent."""
    first, second = holders
    parts = []
    for i in sorted(universe):
        exempt = Atom(Proposition(observer, i))
        blind = And(
            Not(Knows(observer, Atom(Proposition(first, i)))),
            Not(Knows(observer, Atom(Proposition(second, i)))),
        )
        parts.append(Or(exempt, blind))
    return conjoin(parts)
