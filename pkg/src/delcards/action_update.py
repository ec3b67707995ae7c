"""Action models and the product-update operator on Kripke models.

A public announcement is the one-action special case whose occurrence is
common knowledge (every agent's action partition is the singleton block).
Updates that eliminate every world are legal and return a zero-world model;
whether that is an error is the protocol runner's decision.
"""
from __future__ import annotations

import random
from dataclasses import dataclass
from typing import Iterable, Mapping, Sequence

from .epistemic_core import AgentId, KripkeModel, WorldId, component_of
from .errors import DelcardsError, UnknownWorldError
from .formula import Formula, evaluate, extension, parse, render

ActionId = str


@dataclass(frozen=True)
class ActionModel:
    """Actions with formula preconditions plus per-agent action partitions."""

    actions: tuple[tuple[ActionId, Formula], ...]
    relations: dict[AgentId, tuple[frozenset[ActionId], ...]]

    def labels(self) -> tuple[ActionId, ...]:
        return tuple(lab for lab, _ in self.actions)

    def precondition(self, label: ActionId) -> Formula:
        for lab, pre in self.actions:
            if lab == label:
                return pre
        raise KeyError(label)


@dataclass(frozen=True)
class Announcement:
    """A protocol step: an agent announces either a formula or a hand set.

    Hand-set bodies are sugar for "my hand is one of these"; the expansion
    to a disjunction of hand descriptions happens in the protocol runner.
    """

    by: AgentId
    formula: Formula | None = None
    hands: tuple[frozenset[int], ...] | None = None

    def __post_init__(self):
        if (self.formula is None) == (self.hands is None):
            raise ValueError("announcement needs exactly one of formula or hands")
        if self.hands is not None:
            hands = tuple(frozenset(h) for h in self.hands)
            if not hands:
                raise ValueError("announcement hand set is empty")
            sizes = {len(h) for h in hands}
            if len(sizes) != 1:
                raise ValueError(f"announcement hands have mixed sizes {sorted(sizes)}")
            object.__setattr__(self, "hands", hands)


def public_announcement(
    f: Formula, agents: Iterable[AgentId] = ("a", "b", "c"), label: ActionId = "ann"
) -> ActionModel:
    """One-action model with precondition f, indistinguishable to nobody."""
    block = (frozenset({label}),)
    return ActionModel(actions=((label, f),), relations={x: block for x in agents})


def validate_action_model(mu: ActionModel) -> list[str]:
    """Invariant check mirroring validate_model; violations are data."""
    violations: list[str] = []
    if not mu.actions:
        violations.append("action set is empty")
    labels = mu.labels()
    seen: set[ActionId] = set()
    for lab in labels:
        if lab in seen:
            violations.append(f"duplicate action label {lab!r}")
        seen.add(lab)
    for lab, pre in mu.actions:
        if not isinstance(pre, Formula):
            violations.append(f"action {lab!r}: precondition is not a formula")
    label_set = frozenset(labels)
    for x in sorted(mu.relations):
        covered: set[ActionId] = set()
        for block in mu.relations[x]:
            for lab in block:
                if lab not in label_set:
                    violations.append(f"agent {x}: block member {lab!r} is not an action")
                elif lab in covered:
                    violations.append(f"agent {x}: action {lab!r} appears in more than one block")
                covered.add(lab)
        for lab in labels:
            if lab not in covered:
                violations.append(f"agent {x}: action {lab!r} not covered by any block")
    return violations


def product_update(m: KripkeModel, mu: ActionModel) -> KripkeModel:
    """Execute mu in m: surviving (world, action) pairs, product relations.

    A result world keeps its source world's base id and valuation and gets
    the action label appended to its history. Two result worlds are related
    for an agent iff both their sources and their actions were.
    """
    labels = mu.labels()
    if len(set(labels)) != len(labels):
        raise DelcardsError(f"action labels are not unique: {labels}")
    if frozenset(mu.relations) != m.agents:
        raise DelcardsError(
            f"agent mismatch: model has {sorted(m.agents)}, action model has {sorted(mu.relations)}"
        )
    exts = {lab: extension(m, pre) for lab, pre in mu.actions}
    worlds: list[WorldId] = []
    valuation: dict[WorldId, frozenset] = {}
    for lab in labels:
        for w in exts[lab]:
            nw = w.tagged(lab)
            worlds.append(nw)
            valuation[nw] = m.valuation[w]
    relations: dict[AgentId, list[frozenset[WorldId]]] = {}
    for x in m.agents:
        blocks: list[frozenset[WorldId]] = []
        for source_block in m.relations[x]:
            for action_block in mu.relations[x]:
                members: list[WorldId] = []
                for lab in action_block:
                    for w in source_block & exts[lab]:
                        members.append(w.tagged(lab))
                if members:
                    blocks.append(frozenset(members))
        relations[x] = blocks
    return KripkeModel(m.agents, worlds, valuation, relations)


def verify_update_laws(
    m: KripkeModel,
    mu: ActionModel,
    result: KripkeModel,
    sample_limit: int = 300,
) -> list[str]:
    """Cross-check a product update against the defining clauses.

    Survival is recomputed from extensions and, on the pointwise route,
    re-derived with `evaluate` (for every world when the model is small,
    else on a seeded sample of sample_limit worlds). Valuation preservation
    is checked exactly for every result world. The relation clause is
    checked exactly by regrouping result worlds on (source block, action
    block) signatures and comparing partitions, which covers all pairs at
    once since relations are equivalences. Returns violation descriptions;
    empty means the laws hold.
    """
    problems: list[str] = []
    expected: set[WorldId] = set()
    for lab, pre in mu.actions:
        for w in extension(m, pre):
            expected.add(w.tagged(lab))
    got = result.world_set()
    for w in sorted(expected - got):
        problems.append(f"world {w} should have survived but is absent")
    for w in sorted(got - expected):
        problems.append(f"world {w} survived without satisfying its precondition")

    sources = list(m.worlds)
    if len(sources) > sample_limit:
        sources = random.Random(0).sample(sources, sample_limit)
    for w in sources:
        for lab, pre in mu.actions:
            if evaluate(m, w, pre) != result.has_world(w.tagged(lab)):
                problems.append(f"pointwise survival disagrees at ({w}, {lab})")

    origins: dict[WorldId, tuple[WorldId, str]] = {}
    for nw in result.worlds:
        if not nw.history:
            problems.append(f"result world {nw} carries no action tag")
            continue
        src = WorldId(nw.base, nw.history[:-1])
        origins[nw] = (src, nw.history[-1])
        if result.valuation.get(nw) != m.valuation.get(src):
            problems.append(f"valuation not preserved at {nw}")

    for x in sorted(m.agents):
        action_block_of = {lab: blk for blk in mu.relations[x] for lab in blk}
        groups: dict[tuple[int, int], set[WorldId]] = {}
        regroup_failed = False
        for nw, (src, lab) in origins.items():
            try:
                signature = (id(component_of(m, x, src)), id(action_block_of[lab]))
            except (KeyError, UnknownWorldError):
                problems.append(f"agent {x}: no source block or action block for {nw}")
                regroup_failed = True
                continue
            groups.setdefault(signature, set()).add(nw)
        if regroup_failed:
            continue
        want = {frozenset(g) for g in groups.values()}
        have = set(result.relations.get(x, ()))
        for block in sorted(want - have, key=min):
            problems.append(f"agent {x}: expected block {sorted(block)} missing from the result")
        for block in sorted(have - want, key=min):
            problems.append(f"agent {x}: result block {sorted(block)} violates the relation clause")
    return problems


def action_model_to_json(mu: ActionModel) -> dict:
    return {
        "actions": [{"id": lab, "pre": render(pre)} for lab, pre in mu.actions],
        "relations": {
            x: [sorted(block) for block in mu.relations[x]] for x in sorted(mu.relations)
        },
    }


def action_model_from_json(doc: Mapping) -> ActionModel:
    actions = tuple((entry["id"], parse(entry["pre"])) for entry in doc["actions"])
    relations = {
        x: tuple(frozenset(block) for block in blocks)
        for x, blocks in doc["relations"].items()
    }
    return ActionModel(actions=actions, relations=relations)
