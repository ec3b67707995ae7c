"""Protocol execution, solution checking, safety conditions, impossibility
sweeps, and the exact counting inequality behind the two-announcement bound.

All searches and samplers are seeded and tie-break canonically, so reports
for identical inputs are byte-identical.
"""
from __future__ import annotations

import random
from collections import Counter
from dataclasses import dataclass, field
from decimal import Decimal, localcontext
from itertools import combinations
from math import ceil, log

from .action_update import Announcement, product_update, public_announcement, verify_update_laws
from .epistemic_core import AgentId, KripkeModel, WorldId, component_of, partition_of
from .errors import InvalidAnnouncementError, ProtocolError, TruthfulnessError
from .formula import Formula, evaluate, render
from .russian_cards import (
    Deal,
    Hand,
    RcpInstance,
    binomial,
    canonical_hands,
    hand_announcement,
    hands_of,
    ignorance_goal,
    knows_deal,
)


@dataclass(frozen=True)
class Protocol:
    """Instance parameters plus an ordered list of announcements."""

    k: int
    l: int
    deal: Deal | None
    steps: tuple[Announcement, ...]


@dataclass(frozen=True)
class StepSummary:
    index: int
    by: AgentId
    label: str
    formula: str
    worlds: int
    blocks: dict[AgentId, int]

    def to_dict(self) -> dict:
        return {
            "index": self.index,
            "by": self.by,
            "label": self.label,
            "formula": self.formula,
            "worlds": self.worlds,
            "blocks": dict(sorted(self.blocks.items())),
        }


@dataclass(frozen=True)
class SolutionReport:
    """Outcome of checking the two knowledge goals and the ignorance goal,
    plus the structural component checks they rest on."""

    world: str
    step_worlds: tuple[int, ...]
    a_knows_deal: bool
    b_knows_deal: bool
    c_ignorant: bool
    a_component_singleton: bool
    b_component_singleton: bool
    c_component_size: int
    strong: bool = False

    @property
    def verdict(self) -> bool:
        return (
            self.a_knows_deal
            and self.b_knows_deal
            and self.c_ignorant
            and self.a_component_singleton
            and self.b_component_singleton
            and self.c_component_size > 1
        )

    def to_dict(self) -> dict:
        return {
            "world": self.world,
            "step_worlds": list(self.step_worlds),
            "a_knows_deal": self.a_knows_deal,
            "b_knows_deal": self.b_knows_deal,
            "c_ignorant": self.c_ignorant,
            "a_component_singleton": self.a_component_singleton,
            "b_component_singleton": self.b_component_singleton,
            "c_component_size": self.c_component_size,
            "strong": self.strong,
            "verdict": self.verdict,
        }


@dataclass(frozen=True)
class LeakReport:
    """Cover/intersection safety conditions for a hand-set announcement."""

    covers: bool
    empty_intersection: bool
    uncovered: tuple[int, ...]
    forced: tuple[int, ...]

    @property
    def safe(self) -> bool:
        return self.covers and self.empty_intersection

    @property
    def leaked_cards(self) -> tuple[int, ...]:
        return self.uncovered + self.forced

    def to_dict(self) -> dict:
        return {
            "covers": self.covers,
            "empty_intersection": self.empty_intersection,
            "uncovered": list(self.uncovered),
            "forced": list(self.forced),
            "leaked_cards": list(self.leaked_cards),
            "safe": self.safe,
        }


@dataclass(frozen=True)
class SweepSpec:
    """Enumeration bounds for the single-announcement sweep."""

    exhaustive_max_extra: int = 3
    samples: int = 0
    seed: int = 0


@dataclass(frozen=True)
class SweepViolation:
    hands: tuple[tuple[int, ...], ...]
    component_size: int
    announcer_knows_deal: bool

    def to_dict(self) -> dict:
        return {
            "hands": [list(h) for h in self.hands],
            "component_size": self.component_size,
            "announcer_knows_deal": self.announcer_knows_deal,
        }


@dataclass(frozen=True)
class ImpossibilityReport:
    k: int
    l: int
    actual: str
    expected_component_size: int
    spec: SweepSpec
    candidates_tested: int
    violations: tuple[SweepViolation, ...]
    component_sizes: dict[int, int]

    def to_dict(self) -> dict:
        return {
            "k": self.k,
            "l": self.l,
            "actual": self.actual,
            "expected_component_size": self.expected_component_size,
            "enumeration": {
                "exhaustive_max_extra": self.spec.exhaustive_max_extra,
                "samples": self.spec.samples,
                "seed": self.spec.seed,
            },
            "candidates_tested": self.candidates_tested,
            "violations": [v.to_dict() for v in self.violations],
            "component_sizes": {str(s): n for s, n in sorted(self.component_sizes.items())},
        }


@dataclass(frozen=True)
class PairWitness:
    """Two distinct worlds of the announced union that one player cannot
    tell apart (they share that player's hand)."""

    s1: WorldId
    s2: WorldId
    shared_hand: Hand

    def to_dict(self) -> dict:
        return {
            "s1": self.s1.full_id(),
            "s2": self.s2.full_id(),
            "shared_hand": sorted(self.shared_hand),
        }


@dataclass(frozen=True)
class InequalityWitness:
    k: int
    l: int
    lhs: int
    rhs: int

    @property
    def holds(self) -> bool:
        return self.lhs > self.rhs

    def to_dict(self) -> dict:
        return {"k": self.k, "l": self.l, "lhs": self.lhs, "rhs": self.rhs, "holds": self.holds}


@dataclass(frozen=True)
class StageStats:
    label: str
    worlds: int
    blocks: dict[AgentId, int]

    def to_dict(self) -> dict:
        return {"label": self.label, "worlds": self.worlds, "blocks": dict(sorted(self.blocks.items()))}


@dataclass(frozen=True)
class TwoAnnouncementTrace:
    """Record of one first-announcement / second-announcement experiment."""

    k: int
    l: int
    seed: int
    first_by: AgentId
    partner: AgentId
    first_hands: tuple[tuple[int, ...], ...]
    threshold: int | None
    threshold_met: bool
    pair: PairWitness | None
    second_by: AgentId
    second: str
    stages: tuple[StageStats, ...]
    pair_related_after_first: bool | None
    second_truthful_at_pair: bool | None
    pair_survived: bool | None
    pair_related_after_second: bool | None
    partner_knows_deal: bool | None
    confirmed: bool
    reason: str

    def to_dict(self) -> dict:
        return {
            "k": self.k,
            "l": self.l,
            "seed": self.seed,
            "first_by": self.first_by,
            "partner": self.partner,
            "first_hands": [list(h) for h in self.first_hands],
            "threshold": self.threshold,
            "threshold_met": self.threshold_met,
            "pair": self.pair.to_dict() if self.pair else None,
            "second_by": self.second_by,
            "second": self.second,
            "stages": [s.to_dict() for s in self.stages],
            "pair_related_after_first": self.pair_related_after_first,
            "second_truthful_at_pair": self.second_truthful_at_pair,
            "pair_survived": self.pair_survived,
            "pair_related_after_second": self.pair_related_after_second,
            "partner_knows_deal": self.partner_knows_deal,
            "confirmed": self.confirmed,
            "reason": self.reason,
        }


def _stage(m: KripkeModel, label: str) -> StageStats:
    return StageStats(
        label=label,
        worlds=len(m.worlds),
        blocks={x: len(partition_of(m, x)) for x in sorted(m.agents)},
    )


def _hand_of(m: KripkeModel, w: WorldId, x: AgentId) -> Hand:
    return frozenset(p.card for p in m.valuation[w] if p.agent == x)


def _step_formula(inst: RcpInstance, step: Announcement) -> Formula:
    if step.formula is not None:
        return step.formula
    expected = inst.k if step.by in ("a", "b") else inst.l
    for h in step.hands:
        if len(h) != expected:
            raise InvalidAnnouncementError(
                f"announcement by {step.by} lists a hand of size {len(h)}, expected {expected}"
            )
    return hand_announcement(step.by, step.hands)


def run_protocol(
    inst: RcpInstance, protocol: Protocol, verify_laws: bool = False
) -> tuple[KripkeModel, tuple[StepSummary, ...]]:
    """Fold the announcements over the instance model via product update.

    Every step must be something its announcer knows: true throughout the
    announcer's current component containing the designated world. Steps
    are tagged ann1, ann2, ... so repeated announcements stay distinct.
    """
    if protocol.k != inst.k or protocol.l != inst.l:
        raise ProtocolError(
            f"protocol is for ({protocol.k};{protocol.l}), instance is ({inst.k};{inst.l})"
        )
    if protocol.deal is not None and protocol.deal != inst.deal:
        raise ProtocolError("protocol deal differs from the instance deal")
    if not protocol.steps:
        raise ProtocolError("protocol has no steps")
    m = inst.model
    current = inst.actual
    agents = sorted(m.agents)
    summaries: list[StepSummary] = []
    for index, step in enumerate(protocol.steps, start=1):
        if step.by not in m.agents:
            raise ProtocolError(f"step {index}: unknown announcer {step.by!r}")
        f = _step_formula(inst, step)
        label = f"ann{index}"
        block = component_of(m, step.by, current)
        for w in sorted(block):
            if not evaluate(m, w, f):
                raise TruthfulnessError(
                    f"step {index} by {step.by}: {render(f)} is false at {w}, "
                    f"inside the announcer's own information set"
                )
        mu = public_announcement(f, agents, label)
        updated = product_update(m, mu)
        if verify_laws:
            problems = verify_update_laws(m, mu, updated)
            if problems:
                raise ProtocolError(f"product update law violated: {problems[0]}")
        if not updated.worlds:
            raise ProtocolError(f"step {index} by {step.by} eliminated every world")
        m = updated
        current = current.tagged(label)
        summaries.append(
            StepSummary(
                index=index,
                by=step.by,
                label=label,
                formula=render(f),
                worlds=len(m.worlds),
                blocks={x: len(partition_of(m, x)) for x in agents},
            )
        )
    return m, tuple(summaries)


def check_solution(
    final: KripkeModel,
    actual: WorldId,
    universe: tuple[int, ...],
    step_worlds: tuple[int, ...] = (),
    strong: bool = False,
) -> SolutionReport:
    """Evaluate both knowledge goals and the ignorance goal at the designated
    world, plus the structural checks: a's and b's components must have
    collapsed to the single actual deal while c's still has several.

    Component checks compare base ids, ignoring update tags. In strong mode
    the three goal formulas must hold at every surviving world, not just the
    designated one."""
    survivors = [w for w in final.worlds if w.base == actual.base]
    if not survivors:
        raise ProtocolError(f"designated world {actual.base} did not survive the protocol")
    w = max(survivors, key=lambda v: (len(v.history), v.history))
    goal_a = knows_deal("a", universe)
    goal_b = knows_deal("b", universe)
    goal_c = ignorance_goal(universe)
    if strong:
        a_knows = all(evaluate(final, v, goal_a) for v in final.worlds)
        b_knows = all(evaluate(final, v, goal_b) for v in final.worlds)
        c_blind = all(evaluate(final, v, goal_c) for v in final.worlds)
    else:
        a_knows = evaluate(final, w, goal_a)
        b_knows = evaluate(final, w, goal_b)
        c_blind = evaluate(final, w, goal_c)
    bases_a = {v.base for v in component_of(final, "a", w)}
    bases_b = {v.base for v in component_of(final, "b", w)}
    bases_c = {v.base for v in component_of(final, "c", w)}
    return SolutionReport(
        world=w.full_id(),
        step_worlds=tuple(step_worlds),
        a_knows_deal=a_knows,
        b_knows_deal=b_knows,
        c_ignorant=c_blind,
        a_component_singleton=len(bases_a) == 1,
        b_component_singleton=len(bases_b) == 1,
        c_component_size=len(bases_c),
        strong=strong,
    )


def lemma2_check(hands, universe) -> LeakReport:
    """Safety conditions on a hand-set announcement: the announced hands
    must cover the pack (else the others' absence leaks) and intersect in
    nothing (else the common cards leak)."""
    normalized = canonical_hands(hands)
    if not normalized:
        raise InvalidAnnouncementError("announcement needs at least one hand")
    sizes = {len(h) for h in normalized}
    if len(sizes) != 1:
        raise InvalidAnnouncementError(f"hands have mixed sizes {sorted(sizes)}")
    pack = frozenset(universe)
    union = frozenset().union(*normalized)
    common = normalized[0]
    for h in normalized[1:]:
        common = common & h
    return LeakReport(
        covers=union == pack,
        empty_intersection=not common,
        uncovered=tuple(sorted(pack - union)),
        forced=tuple(sorted(common)),
    )


def single_announcement_sweep(
    inst: RcpInstance, spec: SweepSpec = SweepSpec(), verify_laws: bool = False
) -> ImpossibilityReport:
    """Try hand-set announcements by a that include her true hand and check
    that none of them lets her learn the deal.

    Candidates are exhaustive over all sets with at most exhaustive_max_extra
    hands beyond the true one, plus `samples` seeded random larger sets.
    Truthful announcements by a are exactly such hand sets (her announcement
    is constant on her information set, so its extension is a union of her
    components), which is why this space is the right one to sweep. The
    expected outcome everywhere: the post-update component of the designated
    world keeps all C(k+l,k) worlds, so a has learned nothing."""
    a_star = inst.deal.a
    others = [h for h in hands_of(inst.universe, inst.k) if h != a_star]
    expected = binomial(inst.k + inst.l, inst.k)
    goal = knows_deal("a", inst.universe)
    agents = sorted(inst.model.agents)
    tagged_actual = inst.actual.tagged("ann1")
    sizes: Counter[int] = Counter()
    violations: list[SweepViolation] = []
    tested = 0

    def try_candidate(hands: tuple[Hand, ...]) -> None:
        nonlocal tested
        tested += 1
        f = hand_announcement("a", hands)
        mu = public_announcement(f, agents, "ann1")
        updated = product_update(inst.model, mu)
        if verify_laws:
            # exhaustive checks stay exact; only the pointwise survival
            # cross-check is sampled, since the sweep replays thousands
            problems = verify_update_laws(inst.model, mu, updated, sample_limit=48)
            if problems:
                raise ProtocolError(f"product update law violated: {problems[0]}")
        size = len(component_of(updated, "a", tagged_actual))
        knows = evaluate(updated, tagged_actual, goal)
        sizes[size] += 1
        if size != expected or knows:
            violations.append(
                SweepViolation(
                    hands=tuple(tuple(sorted(h)) for h in hands),
                    component_size=size,
                    announcer_knows_deal=knows,
                )
            )

    max_extra = min(spec.exhaustive_max_extra, len(others))
    for extra in range(max_extra + 1):
        for combo in combinations(others, extra):
            try_candidate(canonical_hands((a_star,) + combo))
    rng = random.Random(spec.seed)
    low = spec.exhaustive_max_extra + 1
    high = len(others)
    if low <= high:
        for _ in range(spec.samples):
            count = rng.randint(low, high)
            combo = rng.sample(others, count)
            try_candidate(canonical_hands([a_star] + combo))
    return ImpossibilityReport(
        k=inst.k,
        l=inst.l,
        actual=inst.actual.base,
        expected_component_size=expected,
        spec=spec,
        candidates_tested=tested,
        violations=tuple(violations),
        component_sizes=dict(sizes),
    )


def find_b_indistinguishable_pair(
    inst: RcpInstance, hands, by: AgentId = "a"
) -> PairWitness | None:
    """Search the union of the announced components for two worlds the other
    card player cannot tell apart (equal partner hand). Returns the first
    such pair in canonical world order, or None.

    The announcement must satisfy the cover and empty-intersection safety
    conditions; anything else is rejected."""
    if by not in ("a", "b"):
        raise InvalidAnnouncementError(f"hand announcements come from a or b, not {by!r}")
    partner = "b" if by == "a" else "a"
    normalized = canonical_hands(hands)
    report = lemma2_check(normalized, inst.universe)
    if not report.safe:
        raise InvalidAnnouncementError(
            f"announcement violates the safety conditions: covers={report.covers}, "
            f"empty_intersection={report.empty_intersection}"
        )
    announced = set(normalized)
    pool = [w for w in inst.model.worlds if _hand_of(inst.model, w, by) in announced]
    seen: dict[Hand, WorldId] = {}
    for w in pool:
        h = _hand_of(inst.model, w, partner)
        if h in seen:
            return PairWitness(seen[h], w, h)
        seen[h] = w
    return None


def threshold_l(k: int) -> int:
    """Smallest integer l with l >= 2k^2/ln k.

    The float ceiling is re-verified by comparing l*ln k against 2k^2 in
    50-digit decimal arithmetic, so boundary cases cannot be decided by
    floating-point error."""
    if k < 2:
        raise ValueError("the threshold is defined for k >= 2")
    candidate = ceil(2 * k * k / log(k))
    with localcontext() as ctx:
        ctx.prec = 50
        ln_k = Decimal(k).ln()
        target = Decimal(2 * k * k)
        while Decimal(candidate) * ln_k < target:
            candidate += 1
        while candidate > 1 and Decimal(candidate - 1) * ln_k >= target:
            candidate -= 1
    return candidate


def inequality_check(k: int, l: int | None = None) -> InequalityWitness:
    """Exact-integer comparison of ceil((2k+l)/k)*C(k+l,k) against C(2k+l,k);
    above the l threshold the left side wins, which is what forces two
    worlds onto one partner hand."""
    if k < 2:
        raise ValueError("the inequality is about k >= 2")
    if l is None:
        l = threshold_l(k)
    if l < 1:
        raise ValueError("l must be at least 1")
    lhs = -((2 * k + l) // -k) * binomial(k + l, k)
    rhs = binomial(2 * k + l, k)
    return InequalityWitness(k=k, l=l, lhs=lhs, rhs=rhs)


def sample_valid_announcement(
    inst: RcpInstance, rng: random.Random, by: AgentId = "a"
) -> tuple[Hand, ...]:
    """Seeded random hand-set announcement that is truthful (contains the
    announcer's hand) and satisfies both safety conditions by construction:
    a shuffled chunking of the pack guarantees cover, and two disjoint
    chunks guarantee an empty intersection."""
    k = inst.k
    cards = list(inst.universe)
    rng.shuffle(cards)
    chunks = [cards[i : i + k] for i in range(0, len(cards), k)]
    if len(chunks[-1]) < k:
        short = chunks.pop()
        fill = [c for c in cards if c not in short]
        chunks.append(short + fill[: k - len(short)])
    hands = {frozenset(ch) for ch in chunks}
    hands.add(inst.deal.hand(by))
    pool = [h for h in hands_of(inst.universe, k) if h not in hands]
    extras = rng.randint(0, min(len(pool), 2 * len(chunks)))
    for h in rng.sample(pool, extras):
        hands.add(h)
    return canonical_hands(hands)


def _sample_second_hands(
    inst: RcpInstance, partner: AgentId, anchor: Hand, rng: random.Random
) -> tuple[Hand, ...]:
    """Seeded hand-set announcement for the second speaker, anchored at the
    hand she actually holds at the witness pair (so it is truthful there):
    the size is uniform over all possible announcement sizes."""
    pool = [h for h in hands_of(inst.universe, inst.k) if h != anchor]
    count = rng.randint(1, len(pool) + 1)
    picked = rng.sample(pool, count - 1)
    return canonical_hands([anchor] + picked)


def two_announcement_trace(
    inst: RcpInstance,
    first,
    seed: int = 0,
    second: Announcement | None = None,
    first_by: AgentId = "a",
    verify_laws: bool = False,
) -> TwoAnnouncementTrace:
    """Run the two-announcement experiment: after the first speaker's
    hand-set announcement, locate a pair of worlds the partner cannot
    distinguish, let the partner make a deterministic truthful second
    announcement (seeded sample unless given), and check that the pair's
    descendants are still indistinguishable to her, leaving her short of
    the deal there.

    When no pair exists (possible below the l threshold), the trace reports
    the hypothesis unmet instead of confirming anything."""
    if first_by not in ("a", "b"):
        raise InvalidAnnouncementError(f"first announcer must be a or b, not {first_by!r}")
    partner = "b" if first_by == "a" else "a"
    normalized = canonical_hands(first)
    report = lemma2_check(normalized, inst.universe)
    if not report.safe:
        raise InvalidAnnouncementError(
            f"first announcement violates the safety conditions: covers={report.covers}, "
            f"empty_intersection={report.empty_intersection}"
        )
    threshold = threshold_l(inst.k) if inst.k >= 2 else None
    threshold_met = threshold is not None and inst.l >= threshold
    first_hands_out = tuple(tuple(sorted(h)) for h in normalized)
    agents = sorted(inst.model.agents)
    stages = [_stage(inst.model, "initial")]

    f1 = hand_announcement(first_by, normalized)
    mu1 = public_announcement(f1, agents, "ann1")
    m2 = product_update(inst.model, mu1)
    if verify_laws:
        problems = verify_update_laws(inst.model, mu1, m2)
        if problems:
            raise ProtocolError(f"product update law violated: {problems[0]}")
    stages.append(_stage(m2, "after_first"))

    pair = find_b_indistinguishable_pair(inst, normalized, by=first_by)
    if pair is None:
        return TwoAnnouncementTrace(
            k=inst.k,
            l=inst.l,
            seed=seed,
            first_by=first_by,
            partner=partner,
            first_hands=first_hands_out,
            threshold=threshold,
            threshold_met=threshold_met,
            pair=None,
            second_by=partner,
            second="",
            stages=tuple(stages),
            pair_related_after_first=None,
            second_truthful_at_pair=None,
            pair_survived=None,
            pair_related_after_second=None,
            partner_knows_deal=None,
            confirmed=False,
            reason=(
                f"no {partner}-indistinguishable pair exists for this announcement; "
                "the two-announcement impossibility hypothesis is not met here"
            ),
        )

    s1, s2 = pair.s1.tagged("ann1"), pair.s2.tagged("ann1")
    related_first = s2 in component_of(m2, partner, s1)

    if second is None:
        rng = random.Random(seed)
        second = Announcement(by=partner, hands=_sample_second_hands(inst, partner, pair.shared_hand, rng))
    if second.by != partner:
        raise InvalidAnnouncementError(f"second announcement must come from {partner}")
    if second.hands is not None:
        f2 = hand_announcement(partner, second.hands)
    else:
        f2 = second.formula
    truthful_at_pair = evaluate(m2, s1, f2) and evaluate(m2, s2, f2)

    mu2 = public_announcement(f2, agents, "ann2")
    m3 = product_update(m2, mu2)
    if verify_laws:
        problems = verify_update_laws(m2, mu2, m3)
        if problems:
            raise ProtocolError(f"product update law violated: {problems[0]}")
    stages.append(_stage(m3, "after_second"))

    t1, t2 = s1.tagged("ann2"), s2.tagged("ann2")
    survived = m3.has_world(t1) and m3.has_world(t2)
    related_second = survived and t2 in component_of(m3, partner, t1)
    partner_knows = (
        evaluate(m3, t1, knows_deal(partner, inst.universe)) if m3.has_world(t1) else None
    )
    confirmed = bool(related_second and partner_knows is False)
    if confirmed:
        reason = (
            f"the pair stayed {partner}-indistinguishable through both updates, "
            f"so {partner} cannot name the deal there"
        )
    elif not truthful_at_pair:
        reason = (
            "the given second announcement is false at the witness pair, so it is not "
            "a deterministic strategy's output on that information set"
        )
    else:
        reason = "the pair did not persist"
    return TwoAnnouncementTrace(
        k=inst.k,
        l=inst.l,
        seed=seed,
        first_by=first_by,
        partner=partner,
        first_hands=first_hands_out,
        threshold=threshold,
        threshold_met=threshold_met,
        pair=pair,
        second_by=partner,
        second=render(f2),
        stages=tuple(stages),
        pair_related_after_first=related_first,
        second_truthful_at_pair=truthful_at_pair,
        pair_survived=survived,
        pair_related_after_second=related_second,
        partner_knows_deal=partner_knows,
        confirmed=confirmed,
        reason=reason,
    )
