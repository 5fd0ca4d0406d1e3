"""Language bias: predicate declarations, signatures, bounds, metarules.

The bias says which predicate symbols may head or appear in hypothesis
clauses, carries optional type and argument-direction signatures, and fixes
the size bounds of the hypothesis space.  Invented symbols inv1, inv2, ...
are admitted implicitly when predicate invention is enabled; their types and
directions are never declared, they are inferred from how the symbols are
used inside a program.
"""

from __future__ import annotations

import itertools
import re
from dataclasses import dataclass, field
from typing import Dict, FrozenSet, NamedTuple, Optional, Sequence, Set, Tuple

from .core import (
    BACKGROUND,
    INVENTED,
    TARGET,
    Clause,
    Literal,
    Pred,
    Program,
    clause_vars,
    literal_key,
)

_INV_NAME = re.compile(r"^inv[1-9][0-9]*$")

PredSig = Tuple[str, int]


class BiasError(Exception):
    """Invalid bias declaration or task-file syntax."""


class TypingError(Exception):
    """A variable or invented predicate received two conflicting types."""

    def __init__(self, message, variable=None, predicate=None):
        super().__init__(message)
        self.variable = variable
        self.predicate = predicate


class Metarule(NamedTuple):
    """Second-order clause template, e.g. ([P,Q,R], (P,A,B), [(Q,A,C),(R,C,B)])."""

    so_vars: Tuple[str, ...]
    head: Tuple[str, Tuple[str, ...]]          # (pred var, first-order vars)
    body: Tuple[Tuple[str, Tuple[str, ...]], ...]


MetaruleSet = Tuple[Metarule, ...]


@dataclass(frozen=True)
class Bias:
    head_preds: FrozenSet[PredSig]
    body_preds: FrozenSet[PredSig]
    types: Dict[PredSig, Tuple[str, ...]] = field(default_factory=dict)
    directions: Dict[PredSig, Tuple[str, ...]] = field(default_factory=dict)
    max_vars: int = 6
    max_body: int = 5
    max_clauses: int = 3
    pi_enabled: bool = True
    recursion_enabled: bool = False
    max_invented_arity: int = 2
    metarules: Optional[MetaruleSet] = None

    @property
    def max_invented(self) -> int:
        return self.max_clauses - 1 if self.pi_enabled else 0

    @property
    def target(self) -> Pred:
        (name, arity), = self.head_preds
        return Pred(name, arity, TARGET)

    def resolve(self, name: str, arity: int) -> Pred:
        if (name, arity) in self.head_preds:
            return Pred(name, arity, TARGET)
        if _INV_NAME.match(name):
            return Pred(name, arity, INVENTED)
        return Pred(name, arity, BACKGROUND)


def make_bias(
    head_preds: Sequence[PredSig],
    body_preds: Sequence[PredSig],
    types: Optional[Dict[PredSig, Tuple[str, ...]]] = None,
    directions: Optional[Dict[PredSig, Tuple[str, ...]]] = None,
    max_vars: int = 6,
    max_body: int = 5,
    max_clauses: int = 3,
    pi_enabled: bool = True,
    recursion_enabled: bool = False,
    max_invented_arity: Optional[int] = None,
    metarules: Optional[MetaruleSet] = None,
) -> Bias:
    """Validate and assemble a Bias, filling defaults.

    Exactly one head (target) predicate is supported.  max_invented_arity
    defaults to the maximum declared arity.
    """
    heads = frozenset(head_preds)
    bodies = frozenset(body_preds)
    if not heads:
        raise BiasError("no head predicate declared")
    if len(heads) > 1:
        raise BiasError("exactly one head predicate is supported")
    for name, _ in heads | bodies:
        if _INV_NAME.match(name):
            raise BiasError(f"predicate name {name} is reserved for invention")
    declared = heads | bodies
    types = dict(types or {})
    directions = dict(directions or {})
    for label, table in (("type", types), ("direction", directions)):
        for (name, arity), tup in table.items():
            if (name, arity) not in declared:
                raise BiasError(f"{label} given for undeclared predicate {name}/{arity}")
            if len(tup) != arity:
                raise BiasError(
                    f"{label} tuple for {name}/{arity} has {len(tup)} entries"
                )
    for sig, tup in directions.items():
        bad = [d for d in tup if d not in ("in", "out")]
        if bad:
            raise BiasError(f"direction entries must be in/out, got {bad[0]}")
    if max_invented_arity is None:
        max_invented_arity = max(arity for _, arity in declared)
    if min(max_vars, max_body, max_clauses, max_invented_arity) < 1:
        raise BiasError("size bounds must be positive")
    return Bias(
        head_preds=heads,
        body_preds=bodies,
        types=types,
        directions=directions,
        max_vars=max_vars,
        max_body=max_body,
        max_clauses=max_clauses,
        pi_enabled=pi_enabled,
        recursion_enabled=recursion_enabled,
        max_invented_arity=max_invented_arity,
        metarules=metarules,
    )


def parse_bias(text: str) -> Bias:
    """Parse the bias section of a task file (see taskfile module grammar)."""
    from .taskfile import parse_task

    return parse_task(text, require_examples=False).bias


# ---------------------------------------------------------------------------
# Declaration consistency
# ---------------------------------------------------------------------------


def check_declaration_consistent(bias: Bias, c: Clause) -> bool:
    """Head must be a declared head or invented symbol; body predicates must
    be declared body predicates, invented symbols, or (with recursion on) a
    head predicate."""
    hp = c.head.pred
    if hp.kind == INVENTED:
        if not bias.pi_enabled:
            return False
    elif (hp.name, hp.arity) not in bias.head_preds:
        return False
    for lit in c.body:
        p = lit.pred
        sig = (p.name, p.arity)
        if p.kind == INVENTED:
            if not bias.pi_enabled:
                return False
        elif sig in bias.body_preds:
            continue
        elif sig in bias.head_preds and bias.recursion_enabled:
            continue
        else:
            return False
    return True


# ---------------------------------------------------------------------------
# Type inference
# ---------------------------------------------------------------------------


class TypedProgram(NamedTuple):
    program: Program
    invented_types: Dict[Pred, Tuple[Optional[str], ...]]


class _Unifier:
    """Union-find over type nodes, with optional constant type per class."""

    def __init__(self):
        self.parent: Dict[object, object] = {}
        self.const: Dict[object, str] = {}

    def find(self, x):
        parent = self.parent
        root = x
        while parent.get(root, root) is not root:
            root = parent[root]
        while parent.get(x, x) is not x:
            parent[x], x = root, parent[x]
        return root

    def assign(self, x, typename: str) -> bool:
        root = self.find(x)
        old = self.const.get(root)
        if old is None:
            self.const[root] = typename
            return True
        return old == typename

    def union(self, x, y) -> bool:
        rx, ry = self.find(x), self.find(y)
        if rx is ry or rx == ry:
            return True
        cx, cy = self.const.get(rx), self.const.get(ry)
        if cx is not None and cy is not None and cx != cy:
            return False
        self.parent[rx] = ry
        if cy is None and cx is not None:
            self.const[ry] = cx
        return True

    def const_of(self, x) -> Optional[str]:
        return self.const.get(self.find(x))


def _run_type_inference(bias: Bias, p: Program):
    """Returns (unifier, conflict) where conflict is None on success."""
    uf = _Unifier()
    for ci, c in enumerate(p):
        for lit in (c.head, *c.body):
            pred = lit.pred
            if pred.kind == INVENTED:
                for pos, v in enumerate(lit.args):
                    if not uf.union(("var", ci, v), ("pred", pred, pos)):
                        return uf, ("pred", ci, v, pred)
            else:
                sig = bias.types.get((pred.name, pred.arity))
                if sig is None:
                    continue
                for pos, v in enumerate(lit.args):
                    if not uf.assign(("var", ci, v), sig[pos]):
                        return uf, ("var", ci, v, pred)
    return uf, None


def types_consistent(bias: Bias, p: Program) -> bool:
    if not bias.types:
        return True
    return _run_type_inference(bias, p)[1] is None


def infer_types(bias: Bias, p: Program) -> TypedProgram:
    """Propagate declared types through p; invented predicates receive the
    tuples induced at their use sites.  Raises TypingError on conflict."""
    uf, conflict = _run_type_inference(bias, p)
    if conflict is not None:
        kind, ci, v, pred = conflict
        if kind == "var":
            raise TypingError(
                f"variable {v} in clause {ci} receives two types", variable=(ci, v)
            )
        raise TypingError(
            f"invented predicate {pred} receives conflicting types at clause {ci}",
            predicate=pred,
        )
    invented: Dict[Pred, Tuple[Optional[str], ...]] = {}
    for c in p:
        for lit in (c.head, *c.body):
            if lit.pred.kind == INVENTED and lit.pred not in invented:
                invented[lit.pred] = tuple(
                    uf.const_of(("pred", lit.pred, pos))
                    for pos in range(lit.pred.arity)
                )
    return TypedProgram(p, invented)


# ---------------------------------------------------------------------------
# Direction safety
# ---------------------------------------------------------------------------


def _scan_directions(c: Clause, body, dir_of) -> bool:
    head_dir = dir_of(c.head.pred)
    bound: Set[int] = {
        v for v, d in zip(c.head.args, head_dir) if d == "in"
    }
    for lit in body:
        d = dir_of(lit.pred)
        if any(v not in bound for v, mode in zip(lit.args, d) if mode == "in"):
            return False
        bound.update(lit.args)
    return all(v in bound for v, d in zip(c.head.args, head_dir) if d == "out")


def _invented_direction_choices(arity: int):
    return itertools.product(("in", "out"), repeat=arity)


def check_direction_safe(bias: Bias, c: Clause) -> bool:
    """Scan the body in its stated execution order; every in-position must
    hold an already-bound variable and head out-variables must end up bound.

    Vacuously true when some non-invented predicate of the clause lacks a
    declared direction.  Invented predicates try every direction tuple.
    """
    if not bias.directions:
        return True
    named = {lit.pred for lit in (c.head, *c.body) if lit.pred.kind != INVENTED}
    if any((p.name, p.arity) not in bias.directions for p in named):
        return True
    inv = sorted(
        {lit.pred for lit in (c.head, *c.body) if lit.pred.kind == INVENTED},
        key=lambda p: (p.name, p.arity),
    )
    for combo in itertools.product(
        *(_invented_direction_choices(p.arity) for p in inv)
    ):
        assignment = dict(zip(inv, combo))

        def dir_of(p: Pred):
            if p.kind == INVENTED:
                return assignment[p]
            return bias.directions[(p.name, p.arity)]

        if _scan_directions(c, c.body, dir_of):
            return True
    return False


def schedule_body(c: Clause, dir_of) -> Optional[Tuple[Literal, ...]]:
    """A direction-safe execution order for the body, or None.

    Greedy and deterministic: among ready literals pick non-recursive ones
    first, then lowest canonical key.  Recursive calls scheduled late keeps
    the runtime search well-founded whenever the data shrinks.
    """
    head_dir = dir_of(c.head.pred)
    bound = {v for v, d in zip(c.head.args, head_dir) if d == "in"}
    remaining = list(c.body)
    order = []
    while remaining:
        best = None
        for lit in remaining:
            d = dir_of(lit.pred)
            if any(v not in bound for v, mode in zip(lit.args, d) if mode == "in"):
                continue
            k = (lit.pred == c.head.pred, literal_key(lit))
            if best is None or k < best[0]:
                best = (k, lit)
        if best is None:
            return None
        lit = best[1]
        order.append(lit)
        remaining.remove(lit)
        bound.update(lit.args)
    if any(v not in bound for v, d in zip(c.head.args, head_dir) if d == "out"):
        return None
    return tuple(order)


# ---------------------------------------------------------------------------
# Metarules
# ---------------------------------------------------------------------------

_TOKEN = re.compile(r"\s*([\[\],()]|[A-Za-z_][A-Za-z0-9_]*|\.)")


def _tokenize(line: str):
    pos = 0
    out = []
    while pos < len(line):
        m = _TOKEN.match(line, pos)
        if m is None:
            raise BiasError(f"bad token at: {line[pos:pos + 12]!r}")
        out.append(m.group(1))
        pos = m.end()
    return out


class _Tokens:
    def __init__(self, toks):
        self.toks = toks
        self.i = 0

    def peek(self):
        return self.toks[self.i] if self.i < len(self.toks) else None

    def take(self, expected=None):
        tok = self.peek()
        if tok is None or (expected is not None and tok != expected):
            raise BiasError(f"expected {expected!r}, got {tok!r}")
        self.i += 1
        return tok


def _parse_name_list(ts: _Tokens):
    ts.take("[")
    names = [ts.take()]
    while ts.peek() == ",":
        ts.take(",")
        names.append(ts.take())
    ts.take("]")
    return tuple(names)


def _parse_pattern(names) -> Tuple[str, Tuple[str, ...]]:
    if not 2 <= len(names) <= 3:
        raise BiasError("metarule patterns must have arity 1 or 2")
    return names[0], tuple(names[1:])


def parse_metarules(text: str) -> MetaruleSet:
    """Parse metarule(...) lines; '%' starts a comment."""
    rules = []
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("%", 1)[0].strip()
        if not line:
            continue
        try:
            ts = _Tokens(_tokenize(line))
            ts.take("metarule")
            ts.take("(")
            so_vars = _parse_name_list(ts)
            ts.take(",")
            head = _parse_pattern(_parse_name_list(ts))
            ts.take(",")
            ts.take("[")
            body = [_parse_pattern(_parse_name_list(ts))]
            while ts.peek() == ",":
                ts.take(",")
                body.append(_parse_pattern(_parse_name_list(ts)))
            ts.take("]")
            ts.take(")")
            ts.take(".")
        except BiasError as exc:
            raise BiasError(f"line {lineno}: {exc}") from None
        rules.append(Metarule(so_vars, head, tuple(body)))
    return tuple(rules)


def _match_pattern(pattern, lit: Literal, so, fo, fo_used) -> bool:
    pv, fovars = pattern
    if len(fovars) != lit.pred.arity:
        return False
    if so.setdefault(pv, lit.pred) != lit.pred:
        return False
    for name, v in zip(fovars, lit.args):
        if name in fo:
            if fo[name] != v:
                return False
        else:
            if v in fo_used:
                return False
            fo[name] = v
            fo_used.add(v)
    return True


def _match_metarule(m: Metarule, c: Clause) -> bool:
    if len(m.body) != len(c.body):
        return False

    def backtrack(i, so, fo, fo_used, remaining):
        if i == len(m.body):
            return True
        for j, lit in enumerate(remaining):
            so2, fo2, used2 = dict(so), dict(fo), set(fo_used)
            if _match_pattern(m.body[i], lit, so2, fo2, used2):
                if backtrack(i + 1, so2, fo2, used2, remaining[:j] + remaining[j + 1:]):
                    return True
        return False

    so: Dict[str, Pred] = {}
    fo: Dict[str, int] = {}
    fo_used: Set[int] = set()
    if not _match_pattern(m.head, c.head, so, fo, fo_used):
        return False
    return backtrack(0, so, fo, fo_used, tuple(c.body))


def clause_matches_metarule(metarules: MetaruleSet, c: Clause) -> bool:
    """True iff some metarule instantiates to c: predicate symbols assigned
    to second-order variables (reuse allowed) and first-order variables
    mapped bijectively, body compared as a multiset."""
    return any(_match_metarule(m, c) for m in metarules)
