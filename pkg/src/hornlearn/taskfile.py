"""Task files: a line-oriented grammar tying together bias, BK, and examples.

Grammar ('%' starts a comment, every directive ends with a period):

    head_pred(NAME,ARITY).          body_pred(NAME,ARITY).
    type(NAME,(T1,...,Tk)).         direction(NAME,(in|out,...)).
    setting(max_vars,N).            setting(max_body,N).
    setting(max_clauses,N).         setting(enable_pi,true|false).
    setting(enable_recursion,true|false).
    builtin(NAME).
    bk_fact( atom ).                bk_clause( head :- b1,...,bn ).
    pos( atom ).                    neg( atom ).

Ground terms are integers, lowercase atoms, lists [t1,...,tn], and pairs
pair(t1,t2).  Variables (leading uppercase) may appear only inside
bk_clause.
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from typing import Dict, List, Optional, Tuple

from .bias import Bias, BiasError, make_bias
from .interpreter import (
    Atom,
    BkClause,
    KnowledgeBase,
    Pair,
    TVar,
    load_kb,
    render_atom,
    render_term,
)


class ParseError(BiasError):
    pass


@dataclass(frozen=True)
class TaskInstance:
    bias: Bias
    builtins: Tuple[str, ...]
    bk_facts: Tuple[Atom, ...]
    bk_rules: Tuple[BkClause, ...]
    pos: Tuple[Atom, ...]
    neg: Tuple[Atom, ...]

    def kb(self) -> KnowledgeBase:
        reserved = {name for name, _ in self.bias.head_preds}
        return load_kb(self.builtins, self.bk_facts, self.bk_rules, reserved)


_TOKEN = re.compile(r"\s*(:-|-?[0-9]+|[A-Za-z_][A-Za-z0-9_]*|[\[\](),.])")


class _Tokens:
    def __init__(self, line: str):
        self.toks: List[str] = []
        pos = 0
        while pos < len(line):
            m = _TOKEN.match(line, pos)
            if m is None or not line[pos:].strip(" \t"):
                if not line[pos:].strip():
                    break
                raise ParseError(f"bad token at {line[pos:pos + 12]!r}")
            self.toks.append(m.group(1))
            pos = m.end()
        self.i = 0

    def peek(self) -> Optional[str]:
        return self.toks[self.i] if self.i < len(self.toks) else None

    def take(self, expected: Optional[str] = None) -> str:
        tok = self.peek()
        if tok is None:
            raise ParseError(f"unexpected end of line (wanted {expected or 'more'})")
        if expected is not None and tok != expected:
            raise ParseError(f"expected {expected!r}, got {tok!r}")
        self.i += 1
        return tok

    def done(self) -> bool:
        return self.i == len(self.toks)


_NAME = re.compile(r"^[a-z][A-Za-z0-9_]*$")
_VARNAME = re.compile(r"^[A-Z_][A-Za-z0-9_]*$")
_INT = re.compile(r"^-?[0-9]+$")


def _parse_term(ts: _Tokens, allow_vars: bool):
    tok = ts.peek()
    if tok is None:
        raise ParseError("missing term")
    if _INT.match(tok):
        ts.take()
        return int(tok)
    if tok == "[":
        ts.take("[")
        items = []
        if ts.peek() != "]":
            items.append(_parse_term(ts, allow_vars))
            while ts.peek() == ",":
                ts.take(",")
                items.append(_parse_term(ts, allow_vars))
        ts.take("]")
        return tuple(items)
    if _VARNAME.match(tok):
        if not allow_vars:
            raise ParseError(f"variable {tok} not allowed in ground term")
        ts.take()
        return TVar(tok)
    if _NAME.match(tok):
        ts.take()
        if tok == "pair" and ts.peek() == "(":
            ts.take("(")
            first = _parse_term(ts, allow_vars)
            ts.take(",")
            second = _parse_term(ts, allow_vars)
            ts.take(")")
            return Pair(first, second)
        return tok
    raise ParseError(f"bad term starting at {tok!r}")


def _parse_atom(ts: _Tokens, allow_vars: bool) -> Atom:
    name = ts.take()
    if not _NAME.match(name) or name == "pair":
        raise ParseError(f"bad predicate name {name!r}")
    ts.take("(")
    args = [_parse_term(ts, allow_vars)]
    while ts.peek() == ",":
        ts.take(",")
        args.append(_parse_term(ts, allow_vars))
    ts.take(")")
    return Atom(name, tuple(args))


def _parse_name_tuple(ts: _Tokens) -> Tuple[str, ...]:
    ts.take("(")
    names = [ts.take()]
    while ts.peek() == ",":
        ts.take(",")
        names.append(ts.take())
    ts.take(")")
    return tuple(names)


_INT_SETTINGS = ("max_vars", "max_body", "max_clauses")
_BOOL_SETTINGS = ("enable_pi", "enable_recursion")


class _TaskBuilder:
    def __init__(self):
        self.head_preds: List[Tuple[str, int]] = []
        self.body_preds: List[Tuple[str, int]] = []
        self.types: Dict[Tuple[str, int], Tuple[str, ...]] = {}
        self.directions: Dict[Tuple[str, int], Tuple[str, ...]] = {}
        self.settings: Dict[str, object] = {}
        self.builtins: List[str] = []
        self.facts: List[Atom] = []
        self.rules: List[BkClause] = []
        self.pos: List[Atom] = []
        self.neg: List[Atom] = []

    def directive(self, line: str) -> None:
        ts = _Tokens(line)
        name = ts.take()
        if name == "head_pred" or name == "body_pred":
            ts.take("(")
            pred = ts.take()
            ts.take(",")
            arity = ts.take()
            ts.take(")")
            if not _NAME.match(pred) or not arity.isdigit() or int(arity) < 1:
                raise ParseError(f"bad declaration {pred}/{arity}")
            target = self.head_preds if name == "head_pred" else self.body_preds
            target.append((pred, int(arity)))
        elif name in ("type", "direction"):
            ts.take("(")
            pred = ts.take()
            ts.take(",")
            tup = _parse_name_tuple(ts)
            ts.take(")")
            table = self.types if name == "type" else self.directions
            table[(pred, len(tup))] = tup
        elif name == "setting":
            ts.take("(")
            key = ts.take()
            ts.take(",")
            value = ts.take()
            ts.take(")")
            if key in _INT_SETTINGS:
                if not value.isdigit():
                    raise ParseError(f"setting {key} wants an integer")
                self.settings[key] = int(value)
            elif key in _BOOL_SETTINGS:
                if value not in ("true", "false"):
                    raise ParseError(f"setting {key} wants true or false")
                self.settings[key] = value == "true"
            else:
                raise ParseError(f"unknown setting {key}")
        elif name == "builtin":
            ts.take("(")
            self.builtins.append(ts.take())
            ts.take(")")
        elif name == "bk_fact":
            ts.take("(")
            self.facts.append(_parse_atom(ts, allow_vars=False))
            ts.take(")")
        elif name == "bk_clause":
            ts.take("(")
            head = _parse_atom(ts, allow_vars=True)
            ts.take(":-")
            body = [_parse_atom(ts, allow_vars=True)]
            while ts.peek() == ",":
                ts.take(",")
                body.append(_parse_atom(ts, allow_vars=True))
            ts.take(")")
            self.rules.append(BkClause(head, tuple(body)))
        elif name in ("pos", "neg"):
            ts.take("(")
            atom = _parse_atom(ts, allow_vars=False)
            ts.take(")")
            (self.pos if name == "pos" else self.neg).append(atom)
        else:
            raise ParseError(f"unknown directive {name!r}")
        ts.take(".")
        if not ts.done():
            raise ParseError(f"trailing tokens after directive: {ts.peek()!r}")


def parse_task(text: str, require_examples: bool = True) -> TaskInstance:
    """Parse a task file; errors carry the offending line number."""
    builder = _TaskBuilder()
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("%", 1)[0].strip()
        if not line:
            continue
        try:
            builder.directive(line)
        except BiasError as exc:
            raise ParseError(f"line {lineno}: {exc}") from None

    bias = make_bias(
        builder.head_preds,
        builder.body_preds,
        types=builder.types,
        directions=builder.directions,
        **builder.settings,
    )
    target_name, target_arity = next(iter(bias.head_preds))
    if require_examples:
        for atom in builder.pos + builder.neg:
            if atom.name != target_name or len(atom.args) != target_arity:
                raise ParseError(
                    f"example {render_atom(atom)} does not use the target "
                    f"predicate {target_name}/{target_arity}"
                )
    return TaskInstance(
        bias=bias,
        builtins=tuple(builder.builtins),
        bk_facts=tuple(builder.facts),
        bk_rules=tuple(builder.rules),
        pos=tuple(builder.pos),
        neg=tuple(builder.neg),
    )


# ---------------------------------------------------------------------------
# Rendering (deterministic, used by the benchmark generators)
# ---------------------------------------------------------------------------


def _render_bk_term(t) -> str:
    if isinstance(t, TVar):
        return t.name
    if isinstance(t, Pair):
        return f"pair({_render_bk_term(t.first)},{_render_bk_term(t.second)})"
    if isinstance(t, tuple):
        return "[" + ",".join(_render_bk_term(x) for x in t) + "]"
    return render_term(t)


def _render_bk_atom(atom: Atom) -> str:
    return f"{atom.name}({','.join(_render_bk_term(a) for a in atom.args)})"


def render_task(task: TaskInstance) -> str:
    """Serialize a task instance back into the task-file grammar."""
    bias = task.bias
    lines = []
    for name, arity in sorted(bias.head_preds):
        lines.append(f"head_pred({name},{arity}).")
    for name, arity in sorted(bias.body_preds):
        lines.append(f"body_pred({name},{arity}).")
    for (name, _), tup in sorted(bias.types.items()):
        lines.append(f"type({name},({','.join(tup)})).")
    for (name, _), tup in sorted(bias.directions.items()):
        lines.append(f"direction({name},({','.join(tup)})).")
    lines.append(f"setting(max_vars,{bias.max_vars}).")
    lines.append(f"setting(max_body,{bias.max_body}).")
    lines.append(f"setting(max_clauses,{bias.max_clauses}).")
    lines.append(f"setting(enable_pi,{'true' if bias.pi_enabled else 'false'}).")
    lines.append(
        f"setting(enable_recursion,{'true' if bias.recursion_enabled else 'false'})."
    )
    for name in task.builtins:
        lines.append(f"builtin({name}).")
    for fact in task.bk_facts:
        lines.append(f"bk_fact( {_render_bk_atom(fact)} ).")
    for rule in task.bk_rules:
        body = ",".join(_render_bk_atom(a) for a in rule.body)
        lines.append(f"bk_clause( {_render_bk_atom(rule.head)} :- {body} ).")
    for atom in task.pos:
        lines.append(f"pos( {render_atom(atom)} ).")
    for atom in task.neg:
        lines.append(f"neg( {render_atom(atom)} ).")
    return "\n".join(lines) + "\n"
