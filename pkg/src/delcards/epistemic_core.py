"""Kripke models whose accessibility relations are agent-indexed equivalence
partitions, plus component (information set) queries and JSON round-tripping.

Relations are stored as their quotient sets: one tuple of disjoint world
blocks per agent. This is lossless for equivalence relations and makes
component lookup a dict access. A pair-set importer (`model_from_pairs`) is
provided for hand-written fixtures; it insists the pairs already form an
equivalence relation.
"""
from __future__ import annotations

import re
from dataclasses import dataclass
from typing import Iterable, Mapping

from .errors import UnknownAgentError, UnknownWorldError

AgentId = str


@dataclass(frozen=True, order=True)
class Proposition:
    """Atomic fact: the given card is held by the given agent."""

    agent: AgentId
    card: int

    def __str__(self) -> str:
        return f"has({self.agent},{self.card})"


_PROP_RE = re.compile(r"has\(([A-Za-z_][A-Za-z0-9_]*),(\d+)\)\Z")


def prop_from_string(text: str) -> Proposition:
    m = _PROP_RE.match(text.replace(" ", ""))
    if m is None:
        raise ValueError(f"not a proposition: {text!r}")
    return Proposition(m.group(1), int(m.group(2)))


@dataclass(frozen=True, order=True)
class WorldId:
    """World identity: canonical base id plus the tags of all updates applied.

    Two worlds are equal iff base and full history match. Ordering is
    lexicographic on (base, history), which is the canonical order used
    everywhere determinism matters.
    """

    base: str
    history: tuple[str, ...] = ()

    def __hash__(self) -> int:
        # hot in set algebra everywhere; cache instead of rehashing the tuple
        try:
            return object.__getattribute__(self, "_hash")
        except AttributeError:
            h = hash((self.base, self.history))
            object.__setattr__(self, "_hash", h)
            return h

    def tagged(self, label: str) -> "WorldId":
        return WorldId(self.base, self.history + (label,))

    def full_id(self) -> str:
        if not self.history:
            return self.base
        return self.base + "#" + "#".join(self.history)

    def __str__(self) -> str:
        return self.full_id()


def world_from_full_id(full: str, history: Iterable[str] | None = None) -> WorldId:
    parts = full.split("#")
    base, hist = parts[0], tuple(parts[1:])
    if history is not None and tuple(history) != hist:
        raise ValueError(f"world id {full!r} disagrees with history {tuple(history)!r}")
    return WorldId(base, hist)


class KripkeModel:
    """Immutable possible-worlds model.

    `relations` maps each agent to the blocks of her indistinguishability
    partition. Construction normalizes ordering (worlds and blocks sorted
    canonically) but does not reject broken input; use `validate_model` to
    obtain violations as data.
    """

    def __init__(
        self,
        agents: Iterable[AgentId],
        worlds: Iterable[WorldId],
        valuation: Mapping[WorldId, Iterable[Proposition]],
        relations: Mapping[AgentId, Iterable[Iterable[WorldId]]],
    ):
        self.agents = frozenset(agents)
        self.worlds = tuple(sorted(worlds))
        self.valuation = {w: frozenset(ps) for w, ps in valuation.items()}
        self.relations: dict[AgentId, tuple[frozenset[WorldId], ...]] = {}
        for x, blocks in relations.items():
            normalized = [frozenset(b) for b in blocks]
            normalized = [b for b in normalized if b]
            normalized.sort(key=min)
            self.relations[x] = tuple(normalized)
        self._world_set = frozenset(self.worlds)
        self._block_of: dict[AgentId, dict[WorldId, frozenset[WorldId]]] = {}
        for x, blocks in self.relations.items():
            index: dict[WorldId, frozenset[WorldId]] = {}
            for b in blocks:
                for w in b:
                    index.setdefault(w, b)
            self._block_of[x] = index

    def has_world(self, w: WorldId) -> bool:
        return w in self._world_set

    def world_set(self) -> frozenset[WorldId]:
        return self._world_set

    def __repr__(self) -> str:
        return f"KripkeModel({len(self.agents)} agents, {len(self.worlds)} worlds)"


@dataclass(frozen=True)
class PointedModel:
    """A model paired with a designated evaluation world."""

    model: KripkeModel
    world: WorldId

    def __post_init__(self):
        if not self.model.has_world(self.world):
            raise UnknownWorldError(f"world {self.world} not in model")


def component_of(m: KripkeModel, x: AgentId, w: WorldId) -> frozenset[WorldId]:
    """The block of x's partition containing w (x's information set at w)."""
    if x not in m.agents:
        raise UnknownAgentError(f"unknown agent {x!r}")
    block = m._block_of.get(x, {}).get(w)
    if block is None:
        if not m.has_world(w):
            raise UnknownWorldError(f"unknown world {w}")
        raise UnknownWorldError(f"world {w} not covered by {x!r}'s partition")
    return block


def partition_of(m: KripkeModel, x: AgentId) -> tuple[frozenset[WorldId], ...]:
    """All blocks of x's partition, sorted by smallest member."""
    if x not in m.agents:
        raise UnknownAgentError(f"unknown agent {x!r}")
    return m.relations[x]


def validate_model(m: KripkeModel) -> list[str]:
    """Check the model invariants; an empty list means the model is well formed.

    Violations are returned as data (strings naming the offending agent or
    world) rather than raised.
    """
    violations: list[str] = []
    seen: set[WorldId] = set()
    for w in m.worlds:
        if w in seen:
            violations.append(f"duplicate world {w}")
        seen.add(w)
    for w in m.worlds:
        if w not in m.valuation:
            violations.append(f"valuation missing for world {w}")
    for w in m.valuation:
        if not m.has_world(w):
            violations.append(f"valuation given for unknown world {w}")
    for x in sorted(m.agents):
        if x not in m.relations:
            violations.append(f"agent {x}: no partition")
    for x in sorted(m.relations):
        if x not in m.agents:
            violations.append(f"partition given for unknown agent {x}")
            continue
        covered: set[WorldId] = set()
        for block in m.relations[x]:
            for w in block:
                if not m.has_world(w):
                    violations.append(f"agent {x}: block member {w} is not a model world")
                elif w in covered:
                    violations.append(f"agent {x}: world {w} appears in more than one block")
                covered.add(w)
        for w in m.worlds:
            if w not in covered:
                violations.append(f"agent {x}: world {w} not covered by any block")
    return violations


def find_world(m: KripkeModel, base: str) -> WorldId:
    """Look up a world by base id; with several histories, take the latest."""
    matches = [w for w in m.worlds if w.base == base]
    if not matches:
        raise UnknownWorldError(f"no world with base id {base!r}")
    return max(matches, key=lambda w: (len(w.history), w.history))


def model_from_pairs(
    agents: Iterable[AgentId],
    worlds: Iterable[WorldId],
    valuation: Mapping[WorldId, Iterable[Proposition]],
    pairs: Mapping[AgentId, Iterable[tuple[WorldId, WorldId]]],
) -> KripkeModel:
    """Build a model from explicit accessibility pairs.

    The pair set of every agent must already be an equivalence relation on
    the world set; anything else is rejected rather than closed over.
    """
    world_list = tuple(sorted(worlds))
    world_set = frozenset(world_list)
    relations: dict[AgentId, list[frozenset[WorldId]]] = {}
    for x, ps in pairs.items():
        rel = {(u, v) for u, v in ps}
        for u, v in rel:
            if u not in world_set or v not in world_set:
                raise ValueError(f"agent {x}: pair ({u}, {v}) mentions an unknown world")
        for w in world_list:
            if (w, w) not in rel:
                raise ValueError(f"agent {x}: relation is not reflexive at {w}")
        for u, v in rel:
            if (v, u) not in rel:
                raise ValueError(f"agent {x}: relation is not symmetric at ({u}, {v})")
        for u, v in rel:
            for v2, t in rel:
                if v2 == v and (u, t) not in rel:
                    raise ValueError(f"agent {x}: relation is not transitive at ({u}, {v}, {t})")
        blocks: list[frozenset[WorldId]] = []
        assigned: set[WorldId] = set()
        for w in world_list:
            if w in assigned:
                continue
            block = frozenset(v for v in world_list if (w, v) in rel)
            assigned |= block
            blocks.append(block)
        relations[x] = blocks
    return KripkeModel(agents, world_list, valuation, relations)


def model_to_json(m: KripkeModel) -> dict:
    """Serialize to the interchange document; `model_from_json` inverts it."""
    return {
        "agents": sorted(m.agents),
        "worlds": [
            {
                "id": w.full_id(),
                "history": list(w.history),
                "props": sorted(str(p) for p in sorted(m.valuation.get(w, frozenset()))),
            }
            for w in m.worlds
        ],
        "relations": {
            x: [sorted(w.full_id() for w in block) for block in m.relations[x]]
            for x in sorted(m.relations)
        },
    }


def model_from_json(doc: Mapping) -> KripkeModel:
    agents = list(doc["agents"])
    worlds: list[WorldId] = []
    valuation: dict[WorldId, frozenset[Proposition]] = {}
    for entry in doc["worlds"]:
        w = world_from_full_id(entry["id"], entry.get("history"))
        worlds.append(w)
        valuation[w] = frozenset(prop_from_string(p) for p in entry.get("props", []))
    by_id = {w.full_id(): w for w in worlds}
    relations: dict[AgentId, list[list[WorldId]]] = {}
    for x, blocks in doc["relations"].items():
        resolved: list[list[WorldId]] = []
        for block in blocks:
            members = []
            for wid in block:
                if wid not in by_id:
                    raise ValueError(f"relation for {x} references unknown world id {wid!r}")
                members.append(by_id[wid])
            resolved.append(members)
        relations[x] = resolved
    return KripkeModel(agents, worlds, valuation, relations)
