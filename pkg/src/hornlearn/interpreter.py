"""Entailment of ground atoms by hypothesis + background knowledge.

The engine is a plain SLD resolver: leftmost literal selection, clause order
as written, depth-first backtracking with an explicit frame stack (so deep
recursion cannot blow the Python stack).  Built-in relations are evaluated
natively and respect their argument modes; calling a built-in with an unbound
input is an internal error, never a silent failure.

Ground terms are ordinary Python values: ints, lowercase atom strings, tuples
for lists, and Pair for two-component states.  Hypothesis clauses are
function-free, and background rules may mix variables with ground terms, so a
runtime term is always either an unbound variable cell or a fully ground
value.  That keeps unification down to cell binding plus structural equality.
"""

from __future__ import annotations

import time
from dataclasses import dataclass
from enum import Enum
from typing import Callable, Dict, Iterable, List, NamedTuple, Tuple

from .core import Clause, Program

GRID_MAX = 100  # bounded world for the right/2 relation


class InterpreterError(Exception):
    """Internal evaluation error (mode violation, bad knowledge base)."""


@dataclass(frozen=True)
class Pair:
    """Two-component ground state, rendered pair(x,y)."""

    first: object
    second: object


@dataclass(frozen=True)
class TVar:
    """Named variable inside a background-knowledge clause template."""

    name: str


class Atom(NamedTuple):
    """A (possibly ground) predicate application in example/BK syntax."""

    name: str
    args: Tuple[object, ...]

    def __str__(self) -> str:
        return render_atom(self)


class BkClause(NamedTuple):
    head: Atom
    body: Tuple[Atom, ...]


class Verdict(Enum):
    TRUE = "true"
    FALSE = "false"
    TIMEOUT = "timeout"


class EvalLimits(NamedTuple):
    per_example_timeout: float = 0.1
    max_resolution_steps: int = 1_000_000


class Outcome(NamedTuple):
    """Per-program test verdict; the flags are always derived from counts."""

    pos_entailed: int
    pos_total: int
    neg_entailed: int
    neg_total: int

    @property
    def complete(self) -> bool:
        return self.pos_entailed == self.pos_total

    @property
    def consistent(self) -> bool:
        return self.neg_entailed == 0

    @property
    def totally_incomplete(self) -> bool:
        return self.pos_entailed == 0

    @property
    def is_solution(self) -> bool:
        return self.complete and self.consistent


# ---------------------------------------------------------------------------
# Terms
# ---------------------------------------------------------------------------


class Var:
    """Mutable runtime variable cell; ref is None while unbound."""

    __slots__ = ("ref",)

    def __init__(self):
        self.ref = None


def _deref(t):
    while type(t) is Var:
        if t.ref is None:
            return t
        t = t.ref
    return t


def _undo(trail: list, mark: int) -> None:
    while len(trail) > mark:
        trail.pop().ref = None


def _unify(a, b, trail: list) -> bool:
    a = _deref(a)
    b = _deref(b)
    if a is b:
        return True
    if type(a) is Var:
        a.ref = b
        trail.append(a)
        return True
    if type(b) is Var:
        b.ref = a
        trail.append(b)
        return True
    return a == b


def render_term(t) -> str:
    if isinstance(t, bool):
        raise InterpreterError("boolean is not a ground term")
    if isinstance(t, int):
        return str(t)
    if isinstance(t, str):
        return t
    if isinstance(t, Pair):
        return f"pair({render_term(t.first)},{render_term(t.second)})"
    if isinstance(t, tuple):
        return "[" + ",".join(render_term(x) for x in t) + "]"
    raise InterpreterError(f"not a ground term: {t!r}")


def render_atom(atom: Atom) -> str:
    return f"{atom.name}({','.join(render_term(a) for a in atom.args)})"


# ---------------------------------------------------------------------------
# Built-in relations
# ---------------------------------------------------------------------------


def _require_bound(name: str, args, positions) -> None:
    for i in positions:
        if type(args[i]) is Var:
            raise InterpreterError(
                f"mode violation: input argument {i + 1} of {name} is unbound"
            )


def _bi_head(args):
    _require_bound("head/2", args, (0,))
    a = args[0]
    if type(a) is tuple and a:
        yield (a, a[0])


def _bi_tail(args):
    _require_bound("tail/2", args, (0,))
    a = args[0]
    if type(a) is tuple and a:
        yield (a, a[1:])


def _bi_empty(args):
    _require_bound("empty/1", args, (0,))
    if args[0] == ():
        yield (args[0],)


def _bi_zero(args):
    _require_bound("zero/1", args, (0,))
    if type(args[0]) is int and args[0] == 0:
        yield (args[0],)


def _bi_one(args):
    _require_bound("one/1", args, (0,))
    if type(args[0]) is int and args[0] == 1:
        yield (args[0],)


def _bi_even(args):
    _require_bound("even/1", args, (0,))
    if type(args[0]) is int and args[0] % 2 == 0:
        yield (args[0],)


def _bi_odd(args):
    _require_bound("odd/1", args, (0,))
    if type(args[0]) is int and args[0] % 2 == 1:
        yield (args[0],)


def _bi_decrement(args):
    _require_bound("decrement/2", args, (0,))
    a = args[0]
    if type(a) is int:
        yield (a, a - 1)


def _bi_increment(args):
    _require_bound("increment/2", args, (0,))
    a = args[0]
    if type(a) is int:
        yield (a, a + 1)


def _bi_geq(args):
    _require_bound("geq/2", args, (0, 1))
    a, b = args
    if type(a) is int and type(b) is int and a >= b:
        yield (a, b)


def _bi_cons(args):
    a, b, c = args
    if type(a) is not Var and type(b) is not Var:
        if type(b) is tuple:
            yield (a, b, (a,) + b)
    elif type(c) is not Var:
        if type(c) is tuple and c:
            yield (c[0], c[1:], c)
    else:
        raise InterpreterError(
            "mode violation: cons/3 needs either its first two or its last "
            "argument bound"
        )


def _bi_member(args):
    _require_bound("member/2", args, (0,))
    a = args[0]
    if type(a) is tuple:
        for x in a:
            yield (a, x)


def _bi_right(args):
    _require_bound("right/2", args, (0,))
    a = args[0]
    if isinstance(a, Pair) and type(a.first) is int and a.first + 1 <= GRID_MAX:
        yield (a, Pair(a.first + 1, a.second))


def _bi_reverse(args):
    _require_bound("reverse/2", args, (0,))
    a = args[0]
    if type(a) is tuple:
        yield (a, a[::-1])


class BuiltinDef(NamedTuple):
    name: str
    arity: int
    direction: Tuple[str, ...]  # primary mode, usable in declarations
    solve: Callable


BUILTINS: Dict[str, BuiltinDef] = {
    b.name: b
    for b in [
        BuiltinDef("head", 2, ("in", "out"), _bi_head),
        BuiltinDef("tail", 2, ("in", "out"), _bi_tail),
        BuiltinDef("empty", 1, ("in",), _bi_empty),
        BuiltinDef("zero", 1, ("in",), _bi_zero),
        BuiltinDef("one", 1, ("in",), _bi_one),
        BuiltinDef("even", 1, ("in",), _bi_even),
        BuiltinDef("odd", 1, ("in",), _bi_odd),
        BuiltinDef("decrement", 2, ("in", "out"), _bi_decrement),
        BuiltinDef("increment", 2, ("in", "out"), _bi_increment),
        BuiltinDef("geq", 2, ("in", "in"), _bi_geq),
        BuiltinDef("cons", 3, ("in", "in", "out"), _bi_cons),
        BuiltinDef("member", 2, ("in", "out"), _bi_member),
        BuiltinDef("right", 2, ("in", "out"), _bi_right),
        BuiltinDef("reverse", 2, ("in", "out"), _bi_reverse),
    ]
}


# ---------------------------------------------------------------------------
# Knowledge base and clause compilation
# ---------------------------------------------------------------------------


class CVar:
    """Compiled variable slot: index into the activation record."""

    __slots__ = ("i",)

    def __init__(self, i: int):
        self.i = i


class CompiledClause(NamedTuple):
    head_args: Tuple[object, ...]
    body: Tuple[Tuple[str, int, Tuple[object, ...]], ...]
    nvars: int


def _compile_bk_clause(c: BkClause) -> CompiledClause:
    slots: Dict[str, CVar] = {}

    def conv(arg):
        if isinstance(arg, TVar):
            if arg.name not in slots:
                slots[arg.name] = CVar(len(slots))
            return slots[arg.name]
        return arg

    head_args = tuple(conv(a) for a in c.head.args)
    body = tuple(
        (atom.name, len(atom.args), tuple(conv(a) for a in atom.args))
        for atom in c.body
    )
    return CompiledClause(head_args, body, len(slots))


def compile_program(h: Program) -> Dict[Tuple[str, int], List[CompiledClause]]:
    """Compile hypothesis clauses, indexed by (name, arity), clause order kept."""
    index: Dict[Tuple[str, int], List[CompiledClause]] = {}
    for c in h:
        nvars = max((v for lit in (c.head, *c.body) for v in lit.args), default=-1) + 1
        cv = [CVar(i) for i in range(nvars)]
        head_args = tuple(cv[a] for a in c.head.args)
        body = tuple(
            (lit.pred.name, lit.pred.arity, tuple(cv[a] for a in lit.args))
            for lit in c.body
        )
        key = (c.head.pred.name, c.head.pred.arity)
        index.setdefault(key, []).append(CompiledClause(head_args, body, nvars))
    return index


class KnowledgeBase:
    """Immutable store of built-in selections, ground facts, and BK rules."""

    def __init__(self, builtins, facts, rules, fact_sets):
        self.builtins = builtins          # (name, arity) -> BuiltinDef
        self.facts = facts                # (name, arity) -> list of arg tuples
        self.rules = rules                # (name, arity) -> list of CompiledClause
        self.fact_sets = fact_sets        # (name, arity) -> set of arg tuples

    def defines(self, name: str, arity: int) -> bool:
        key = (name, arity)
        return key in self.builtins or key in self.facts or key in self.rules


def load_kb(
    builtin_names: Iterable[str],
    facts: Iterable[Atom] = (),
    rules: Iterable[BkClause] = (),
    reserved_names: Iterable[str] = (),
) -> KnowledgeBase:
    """Assemble a knowledge base.

    reserved_names (normally the target predicate) may not be defined by the
    background knowledge.  Every predicate used in a BK clause body must be a
    selected built-in or defined by BK facts/rules.
    """
    reserved = set(reserved_names)
    builtins: Dict[Tuple[str, int], BuiltinDef] = {}
    for name in builtin_names:
        if name not in BUILTINS:
            raise InterpreterError(f"unknown builtin: {name}")
        b = BUILTINS[name]
        builtins[(b.name, b.arity)] = b

    fact_index: Dict[Tuple[str, int], List[tuple]] = {}
    fact_sets: Dict[Tuple[str, int], set] = {}
    rule_index: Dict[Tuple[str, int], List[CompiledClause]] = {}

    def check_head(name: str, arity: int, what: str) -> None:
        if name in reserved:
            raise InterpreterError(f"{what} may not define the target predicate {name}")
        if (name, arity) in builtins or name in BUILTINS:
            raise InterpreterError(f"{what} may not redefine builtin {name}")

    for atom in facts:
        check_head(atom.name, len(atom.args), "BK fact")
        key = (atom.name, len(atom.args))
        fact_index.setdefault(key, []).append(atom.args)
        fact_sets.setdefault(key, set()).add(atom.args)

    bk_rules = list(rules)
    defined = set(fact_index) | {(r.head.name, len(r.head.args)) for r in bk_rules}
    for r in bk_rules:
        check_head(r.head.name, len(r.head.args), "BK clause")
        for atom in r.body:
            key = (atom.name, len(atom.args))
            if key not in builtins and key not in defined:
                raise InterpreterError(
                    f"BK clause uses undeclared predicate {atom.name}/{len(atom.args)}"
                )
        rule_index.setdefault((r.head.name, len(r.head.args)), []).append(
            _compile_bk_clause(r)
        )

    return KnowledgeBase(builtins, fact_index, rule_index, fact_sets)


# ---------------------------------------------------------------------------
# SLD resolution
# ---------------------------------------------------------------------------

_EMPTY = None  # empty goal list
_EXHAUSTED = object()


def _alternatives(kb: KnowledgeBase, hyp, goals, trail):
    """Yield successor goal lists for the leftmost goal."""
    (name, arity, args), rest = goals
    key = (name, arity)

    clauses = hyp.get(key)
    if clauses is None:
        builtin = kb.builtins.get(key)
        if builtin is not None:
            deref_args = tuple(_deref(a) for a in args)
            for out in builtin.solve(deref_args):
                mark = len(trail)
                if all(_unify(a, v, trail) for a, v in zip(args, out)):
                    yield rest
                else:
                    _undo(trail, mark)
            return

        facts = kb.facts.get(key)
        if facts is not None:
            deref_args = tuple(_deref(a) for a in args)
            if not any(type(a) is Var for a in deref_args):
                if deref_args in kb.fact_sets[key]:
                    yield rest
            else:
                for fact_args in facts:
                    mark = len(trail)
                    if all(_unify(a, v, trail) for a, v in zip(args, fact_args)):
                        yield rest
                    else:
                        _undo(trail, mark)
        clauses = kb.rules.get(key)
        if clauses is None:
            return

    for cc in clauses:
        mark = len(trail)
        slots = [Var() for _ in range(cc.nvars)]
        ok = True
        for a, pat in zip(args, cc.head_args):
            if not _unify(a, slots[pat.i] if type(pat) is CVar else pat, trail):
                ok = False
                break
        if not ok:
            _undo(trail, mark)
            continue
        new = rest
        for bname, barity, bargs in reversed(cc.body):
            call = tuple(slots[p.i] if type(p) is CVar else p for p in bargs)
            new = ((bname, barity, call), new)
        yield new


def _solve(kb: KnowledgeBase, hyp, goal: Atom, limits: EvalLimits) -> Verdict:
    deadline = time.perf_counter() + limits.per_example_timeout
    max_steps = limits.max_resolution_steps
    trail: list = []
    goals = ((goal.name, len(goal.args), goal.args), _EMPTY)
    stack = [(_alternatives(kb, hyp, goals, trail), 0)]
    steps = 0
    while stack:
        gen, mark = stack[-1]
        _undo(trail, mark)
        steps += 1
        if steps > max_steps:
            return Verdict.TIMEOUT
        if not steps & 0xFF and time.perf_counter() > deadline:
            return Verdict.TIMEOUT
        nxt = next(gen, _EXHAUSTED)
        if nxt is _EXHAUSTED:
            stack.pop()
            continue
        if nxt is _EMPTY:
            return Verdict.TRUE
        stack.append((_alternatives(kb, hyp, nxt, trail), len(trail)))
    return Verdict.FALSE


def entails(kb: KnowledgeBase, h: Program, goal: Atom,
            limits: EvalLimits = EvalLimits()) -> Verdict:
    """Decide kb + h |= goal within the given limits."""
    return _solve(kb, compile_program(h), goal, limits)


def test(kb: KnowledgeBase, h: Program, pos: Iterable[Atom], neg: Iterable[Atom],
         limits: EvalLimits = EvalLimits()) -> Outcome:
    """Test a hypothesis against examples; timeouts count as not entailed."""
    hyp = compile_program(h)
    pos = list(pos)
    neg = list(neg)
    pos_entailed = sum(
        1 for e in pos if _solve(kb, hyp, e, limits) is Verdict.TRUE
    )
    neg_entailed = sum(
        1 for e in neg if _solve(kb, hyp, e, limits) is Verdict.TRUE
    )
    return Outcome(pos_entailed, len(pos), neg_entailed, len(neg))
