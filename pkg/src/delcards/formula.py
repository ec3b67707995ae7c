"""Epistemic formula language: tree, concrete grammar, and model checking.

Concrete grammar (binding strength: ~ and K tightest, then & over | over ->
over <->; -> associates to the right):

    formula := iff
    iff     := imp ("<->" imp)*
    imp     := or ("->" or)*           right-associative
    or      := and ("|" and)*
    and     := unary ("&" unary)*
    unary   := "~" unary | "K" "[" IDENT "]" unary | primary
    primary := "top" | "bot" | "has" "(" IDENT "," NAT ")" | "(" formula ")"

Two evaluation routes are exposed: `evaluate` recurses pointwise (knowledge
answers are memoized per component, since they are constant on information
sets), while `extension` computes whole truth sets with set algebra. They
agree everywhere; the property suite checks this against a third, naive
pair-set evaluator.
"""
from __future__ import annotations

import re
from dataclasses import dataclass
from typing import Iterable, Sequence
from weakref import WeakKeyDictionary

from .epistemic_core import AgentId, KripkeModel, Proposition, WorldId, component_of
from .errors import FormulaSyntaxError, UnknownAgentError, UnknownWorldError


class Formula:
    """Base of the formula tree; all node kinds are immutable."""

    __slots__ = ()

    def __str__(self) -> str:
        return render(self)


@dataclass(frozen=True)
class Atom(Formula):
    prop: Proposition


@dataclass(frozen=True)
class Top(Formula):
    pass


@dataclass(frozen=True)
class Bot(Formula):
    pass


@dataclass(frozen=True)
class Not(Formula):
    body: Formula


@dataclass(frozen=True)
class And(Formula):
    left: Formula
    right: Formula


@dataclass(frozen=True)
class Or(Formula):
    left: Formula
    right: Formula


@dataclass(frozen=True)
class Implies(Formula):
    left: Formula
    right: Formula


@dataclass(frozen=True)
class Iff(Formula):
    left: Formula
    right: Formula


@dataclass(frozen=True)
class Knows(Formula):
    agent: AgentId
    body: Formula


def atom(agent: AgentId, card: int) -> Atom:
    return Atom(Proposition(agent, card))


def conjoin(parts: Sequence[Formula]) -> Formula:
    """Left-associated conjunction of a nonempty sequence."""
    if not parts:
        raise ValueError("conjoin needs at least one conjunct")
    out = parts[0]
    for p in parts[1:]:
        out = And(out, p)
    return out


def disjoin(parts: Sequence[Formula]) -> Formula:
    """Left-associated disjunction of a nonempty sequence."""
    if not parts:
        raise ValueError("disjoin needs at least one disjunct")
    out = parts[0]
    for p in parts[1:]:
        out = Or(out, p)
    return out


def desugar(f: Formula) -> Formula:
    """Rewrite to the primitive kinds (Atom, Top, Not, And, Knows) only.

    Or(p,q) becomes ~(~p & ~q), p -> q becomes ~p | q, p <-> q becomes
    (p & q) | (~p & ~q), and bot becomes ~top; the rewrite is applied
    recursively and preserves structure otherwise.
    """
    if isinstance(f, (Atom, Top)):
        return f
    if isinstance(f, Bot):
        return Not(Top())
    if isinstance(f, Not):
        return Not(desugar(f.body))
    if isinstance(f, And):
        return And(desugar(f.left), desugar(f.right))
    if isinstance(f, Or):
        return Not(And(Not(desugar(f.left)), Not(desugar(f.right))))
    if isinstance(f, Implies):
        return desugar(Or(Not(f.left), f.right))
    if isinstance(f, Iff):
        return desugar(Or(And(f.left, f.right), And(Not(f.left), Not(f.right))))
    if isinstance(f, Knows):
        return Knows(f.agent, desugar(f.body))
    raise TypeError(f"not a formula node: {f!r}")


# --- parsing ---------------------------------------------------------------

_TOKEN_RE = re.compile(
    r"(?P<ws>\s+)"
    r"|(?P<iff><->)"
    r"|(?P<imp>->)"
    r"|(?P<punct>[&|~\[\](),])"
    r"|(?P<word>[A-Za-z_][A-Za-z0-9_]*)"
    r"|(?P<nat>\d+)"
)

_KEYWORDS = {"top", "bot", "has", "K"}


def _tokenize(text: str) -> list[tuple[str, str, int]]:
    tokens = []
    pos = 0
    while pos < len(text):
        m = _TOKEN_RE.match(text, pos)
        if m is None:
            raise FormulaSyntaxError(f"unexpected character {text[pos]!r}", pos)
        kind = m.lastgroup
        if kind != "ws":
            value = m.group()
            if kind in ("iff", "imp", "punct"):
                tokens.append((value, value, pos))
            elif kind == "word":
                tokens.append((value if value in _KEYWORDS else "IDENT", value, pos))
            else:
                tokens.append(("NAT", value, pos))
        pos = m.end()
    tokens.append(("EOF", "", len(text)))
    return tokens


_UNARY_STARTERS = frozenset({"~", "K", "top", "bot", "has", "("})


class _Parser:
    def __init__(self, text: str):
        self.tokens = _tokenize(text)
        self.i = 0

    def peek(self) -> tuple[str, str, int]:
        return self.tokens[self.i]

    def take(self) -> tuple[str, str, int]:
        tok = self.tokens[self.i]
        self.i += 1
        return tok

    def expect(self, kind: str) -> tuple[str, str, int]:
        tok = self.peek()
        if tok[0] != kind:
            raise FormulaSyntaxError(
                f"found {tok[1]!r}" if tok[0] != "EOF" else "unexpected end of input",
                tok[2],
                frozenset({kind}),
            )
        return self.take()

    def formula(self) -> Formula:
        return self.iff()

    def iff(self) -> Formula:
        out = self.imp()
        while self.peek()[0] == "<->":
            self.take()
            out = Iff(out, self.imp())
        return out

    def imp(self) -> Formula:
        parts = [self.disjunction()]
        while self.peek()[0] == "->":
            self.take()
            parts.append(self.disjunction())
        out = parts[-1]
        for p in reversed(parts[:-1]):
            out = Implies(p, out)
        return out

    def disjunction(self) -> Formula:
        out = self.conjunction()
        while self.peek()[0] == "|":
            self.take()
            out = Or(out, self.conjunction())
        return out

    def conjunction(self) -> Formula:
        out = self.unary()
        while self.peek()[0] == "&":
            self.take()
            out = And(out, self.unary())
        return out

    def unary(self) -> Formula:
        kind, value, pos = self.peek()
        if kind == "~":
            self.take()
            return Not(self.unary())
        if kind == "K":
            self.take()
            self.expect("[")
            agent = self.expect("IDENT")[1]
            self.expect("]")
            return Knows(agent, self.unary())
        return self.primary()

    def primary(self) -> Formula:
        kind, value, pos = self.peek()
        if kind == "top":
            self.take()
            return Top()
        if kind == "bot":
            self.take()
            return Bot()
        if kind == "has":
            self.take()
            self.expect("(")
            agent = self.expect("IDENT")[1]
            self.expect(",")
            card = int(self.expect("NAT")[1])
            self.expect(")")
            return Atom(Proposition(agent, card))
        if kind == "(":
            self.take()
            out = self.formula()
            self.expect(")")
            return out
        raise FormulaSyntaxError(
            f"found {value!r}" if kind != "EOF" else "unexpected end of input",
            pos,
            _UNARY_STARTERS,
        )


def parse(text: str) -> Formula:
    """Parse the concrete syntax; raises FormulaSyntaxError with position."""
    p = _Parser(text)
    out = p.formula()
    kind, value, pos = p.peek()
    if kind != "EOF":
        raise FormulaSyntaxError(f"trailing input {value!r}", pos, frozenset({"EOF"}))
    return out


def render(f: Formula) -> str:
    """Canonical text form; parse(render(f)) is structurally f."""
    if isinstance(f, Atom):
        return str(f.prop)
    if isinstance(f, Top):
        return "top"
    if isinstance(f, Bot):
        return "bot"
    if isinstance(f, Not):
        body = render(f.body)
        if isinstance(f.body, (And, Or, Implies, Iff)):
            body = f"({body})"
        return "~" + body
    if isinstance(f, Knows):
        return f"K[{f.agent}] ({render(f.body)})"
    if isinstance(f, And):
        return f"({render(f.left)} & {render(f.right)})"
    if isinstance(f, Or):
        return f"({render(f.left)} | {render(f.right)})"
    if isinstance(f, Implies):
        return f"({render(f.left)} -> {render(f.right)})"
    if isinstance(f, Iff):
        return f"({render(f.left)} <-> {render(f.right)})"
    raise TypeError(f"not a formula node: {f!r}")


# --- evaluation ------------------------------------------------------------


class _ModelCaches:
    __slots__ = ("atom_ext", "k_memo")

    def __init__(self):
        self.atom_ext: dict[Proposition, frozenset[WorldId]] | None = None
        self.k_memo: dict[tuple[Formula, frozenset[WorldId]], bool] = {}


_CACHES: WeakKeyDictionary[KripkeModel, _ModelCaches] = WeakKeyDictionary()


def _caches(m: KripkeModel) -> _ModelCaches:
    c = _CACHES.get(m)
    if c is None:
        c = _CACHES[m] = _ModelCaches()
    return c


def _atom_extensions(m: KripkeModel) -> dict[Proposition, frozenset[WorldId]]:
    c = _caches(m)
    if c.atom_ext is None:
        buckets: dict[Proposition, set[WorldId]] = {}
        for w in m.worlds:
            for p in m.valuation.get(w, frozenset()):
                buckets.setdefault(p, set()).add(w)
        c.atom_ext = {p: frozenset(ws) for p, ws in buckets.items()}
    return c.atom_ext


def evaluate(m: KripkeModel, w: WorldId, f: Formula) -> bool:
    """Truth of f at world w; knowledge holds iff the body holds throughout
    the agent's component. Atoms absent from every valuation are false."""
    if not m.has_world(w):
        raise UnknownWorldError(f"unknown world {w}")
    return _eval(m, w, f, _caches(m).k_memo)


def _eval(m, w, f, k_memo) -> bool:
    if isinstance(f, Atom):
        return f.prop in m.valuation.get(w, frozenset())
    if isinstance(f, Top):
        return True
    if isinstance(f, Bot):
        return False
    if isinstance(f, Not):
        return not _eval(m, w, f.body, k_memo)
    if isinstance(f, And):
        return _eval(m, w, f.left, k_memo) and _eval(m, w, f.right, k_memo)
    if isinstance(f, Or):
        return _eval(m, w, f.left, k_memo) or _eval(m, w, f.right, k_memo)
    if isinstance(f, Implies):
        return (not _eval(m, w, f.left, k_memo)) or _eval(m, w, f.right, k_memo)
    if isinstance(f, Iff):
        return _eval(m, w, f.left, k_memo) == _eval(m, w, f.right, k_memo)
    if isinstance(f, Knows):
        block = component_of(m, f.agent, w)
        key = (f, block)
        hit = k_memo.get(key)
        if hit is None:
            hit = all(_eval(m, v, f.body, k_memo) for v in block)
            k_memo[key] = hit
        return hit
    raise TypeError(f"not a formula node: {f!r}")


def extension(m: KripkeModel, f: Formula) -> frozenset[WorldId]:
    """All worlds of m where f holds, computed bottom-up with set algebra."""
    atom_ext = _atom_extensions(m)
    full = m.world_set()
    memo: dict[int, frozenset[WorldId]] = {}

    def go(node: Formula) -> frozenset[WorldId]:
        got = memo.get(id(node))
        if got is not None:
            return got
        if isinstance(node, Atom):
            out = atom_ext.get(node.prop, frozenset())
        elif isinstance(node, Top):
            out = full
        elif isinstance(node, Bot):
            out = frozenset()
        elif isinstance(node, Not):
            out = full - go(node.body)
        elif isinstance(node, And):
            out = go(node.left) & go(node.right)
        elif isinstance(node, Or):
            out = go(node.left) | go(node.right)
        elif isinstance(node, Implies):
            out = (full - go(node.left)) | go(node.right)
        elif isinstance(node, Iff):
            out = full - (go(node.left) ^ go(node.right))
        elif isinstance(node, Knows):
            if node.agent not in m.agents:
                raise UnknownAgentError(f"unknown agent {node.agent!r}")
            body = go(node.body)
            kept = [b for b in m.relations[node.agent] if b <= body]
            out = frozenset().union(*kept) if kept else frozenset()
        else:
            raise TypeError(f"not a formula node: {node!r}")
        memo[id(node)] = out
        return out

    return go(f)
