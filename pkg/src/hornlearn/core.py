"""Core data model and logical algebra for definite-clause hypotheses.

A hypothesis is a function-free definite program: a tuple of clauses whose
literals apply predicate symbols to variables (small ints, rendered A, B, C,
...).  Ground terms never appear here; they live in examples and background
knowledge handled by the interpreter.

Everything in this module is an immutable value and every operation is a pure
function, so shared inputs are safe to use concurrently.
"""

from __future__ import annotations

import itertools
from typing import Dict, NamedTuple, Optional, Set, Tuple

TARGET = "target"
BACKGROUND = "background"
INVENTED = "invented"

_INV_PREFIX = "inv"


class Pred(NamedTuple):
    """A predicate symbol; (name, arity) identifies it within a task."""

    name: str
    arity: int
    kind: str  # TARGET | BACKGROUND | INVENTED

    def __str__(self) -> str:
        return f"{self.name}/{self.arity}"


def invented_pred(index: int, arity: int) -> Pred:
    if index < 1:
        raise ValueError("invented predicate indices start at 1")
    return Pred(f"{_INV_PREFIX}{index}", arity, INVENTED)


def invented_index(pred: Pred) -> int:
    """Index k of an invented symbol invk."""
    if pred.kind != INVENTED:
        raise ValueError(f"{pred} is not invented")
    return int(pred.name[len(_INV_PREFIX):])


class Literal(NamedTuple):
    pred: Pred
    args: Tuple[int, ...]

    def __str__(self) -> str:
        return render_literal(self)


class Clause(NamedTuple):
    """head :- body.  The body tuple order is the execution order."""

    head: Literal
    body: Tuple[Literal, ...]

    def __str__(self) -> str:
        return render_clause(self)


# A program is an ordered tuple of clauses.
Program = Tuple[Clause, ...]

# A substitution maps variable ids of one clause to variable ids of another.
Substitution = Dict[int, int]


class PredicateStats(NamedTuple):
    num_clauses: int
    num_recursive: int


def make_literal(pred: Pred, *args: int) -> Literal:
    if len(args) != pred.arity:
        raise ValueError(f"{pred} applied to {len(args)} arguments")
    return Literal(pred, tuple(args))


def clause(head: Literal, *body: Literal) -> Clause:
    """Build a clause, enforcing the structural invariants."""
    if not body:
        raise ValueError("clause body must be non-empty")
    if any(lit == head for lit in body):
        raise ValueError("head literal may not occur in the body")
    body_vars = {v for lit in body for v in lit.args}
    if any(v not in body_vars for v in head.args):
        raise ValueError("every head variable must occur in the body")
    return Clause(head, tuple(body))


# ---------------------------------------------------------------------------
# Canonical total order
# ---------------------------------------------------------------------------

_KIND_RANK = {TARGET: 0, INVENTED: 1, BACKGROUND: 2}


def pred_key(pred: Pred):
    """Sort key: target < invented (by index) < background (by name)."""
    if pred.kind == INVENTED:
        return (1, invented_index(pred), pred.arity)
    return (_KIND_RANK[pred.kind], pred.name, pred.arity)


def literal_key(lit: Literal):
    return (pred_key(lit.pred), lit.args)


def clause_key(c: Clause):
    return (literal_key(c.head), tuple(literal_key(b) for b in c.body))


def program_key(p: Program):
    return tuple(clause_key(c) for c in p)


# ---------------------------------------------------------------------------
# Subsumption
# ---------------------------------------------------------------------------


def find_substitution(c1: Clause, c2: Clause) -> Optional[Substitution]:
    """A substitution theta with head(c1)theta = head(c2) and body(c1)theta
    contained in body(c2), or None.  Bodies compare as sets."""
    if c1.head.pred != c2.head.pred:
        return None
    theta: Substitution = {}
    for a, b in zip(c1.head.args, c2.head.args):
        if theta.setdefault(a, b) != b:
            return None

    by_pred: Dict[Pred, list] = {}
    for lit in set(c2.body):
        by_pred.setdefault(lit.pred, []).append(lit)

    lits = sorted(set(c1.body), key=literal_key)
    # match most constrained first: fewer candidate targets
    lits.sort(key=lambda l: len(by_pred.get(l.pred, ())))

    def extend(i: int, theta: Substitution) -> Optional[Substitution]:
        if i == len(lits):
            return theta
        lit = lits[i]
        for cand in by_pred.get(lit.pred, ()):
            t2 = dict(theta)
            ok = True
            for a, b in zip(lit.args, cand.args):
                if t2.setdefault(a, b) != b:
                    ok = False
                    break
            if ok:
                res = extend(i + 1, t2)
                if res is not None:
                    return res
        return None

    return extend(0, theta)


def clause_subsumes(c1: Clause, c2: Clause) -> bool:
    """True iff c1 theta-subsumes c2."""
    return find_substitution(c1, c2) is not None


def theory_subsumes(t1: Program, t2: Program) -> bool:
    """True iff every clause of t2 is subsumed by some clause of t1."""
    return all(any(clause_subsumes(c1, c2) for c1 in t1) for c2 in t2)


# ---------------------------------------------------------------------------
# Dependency graph
# ---------------------------------------------------------------------------


class DependencyGraph:
    """Directed graph over clause indices of a program.

    Edge (i, j) exists iff the head predicate of clause j occurs in the body
    of clause i.  depends(i, j) holds iff there is a path of length >= 1, so
    depends(i, i) holds only for clauses on a cycle (e.g. recursive ones).
    """

    def __init__(self, program: Program):
        self.nodes = tuple(range(len(program)))
        edges = set()
        for i, ci in enumerate(program):
            body_preds = {lit.pred for lit in ci.body}
            for j, cj in enumerate(program):
                if cj.head.pred in body_preds:
                    edges.add((i, j))
        self.edges = frozenset(edges)
        # transitive closure by DFS from each node
        succ: Dict[int, Set[int]] = {i: set() for i in self.nodes}
        for (i, j) in edges:
            succ[i].add(j)
        reach: Dict[int, Set[int]] = {}
        for i in self.nodes:
            seen: Set[int] = set()
            stack = list(succ[i])
            while stack:
                j = stack.pop()
                if j in seen:
                    continue
                seen.add(j)
                stack.extend(succ[j])
            reach[i] = seen
        self._reach = reach

    def depends(self, i: int, j: int) -> bool:
        return j in self._reach[i]


def dependency_graph(p: Program) -> DependencyGraph:
    return DependencyGraph(p)


def p_specialising_clauses(p: Program, q: Program) -> Set[int]:
    """Indices of clauses of q that P-specialise q.

    P' collects the clauses of q subsumed by some clause of p; a clause of P'
    qualifies when it neither depends on nor is depended on by any clause of
    q outside P'.
    """
    graph = dependency_graph(q)
    prime = {i for i, c in enumerate(q) if any(clause_subsumes(d, c) for d in p)}
    outside = [i for i in range(len(q)) if i not in prime]
    result = set()
    for i in prime:
        if any(graph.depends(i, j) or graph.depends(j, i) for j in outside):
            continue
        result.add(i)
    return result


def is_separable(h: Program) -> bool:
    """True iff no head predicate of h occurs in any body of h."""
    heads = {c.head.pred for c in h}
    for c in h:
        for lit in c.body:
            if lit.pred in heads:
                return False
    return True


def cost(h: Program) -> int:
    """Total literal count: sum over clauses of 1 + body length."""
    return sum(1 + len(c.body) for c in h)


def is_recursive_clause(c: Clause) -> bool:
    return any(lit.pred == c.head.pred for lit in c.body)


def predicate_stats(h: Program) -> Dict[Pred, PredicateStats]:
    """Clause and recursive-clause counts per head predicate of h."""
    stats: Dict[Pred, list] = {}
    for c in h:
        entry = stats.setdefault(c.head.pred, [0, 0])
        entry[0] += 1
        if is_recursive_clause(c):
            entry[1] += 1
    return {p: PredicateStats(n, r) for p, (n, r) in stats.items()}


# ---------------------------------------------------------------------------
# Canonicalisation
# ---------------------------------------------------------------------------


def clause_vars(c: Clause) -> Set[int]:
    vs = set(c.head.args)
    for lit in c.body:
        vs.update(lit.args)
    return vs


def _rename_literal(lit: Literal, mapping: Dict[int, int]) -> Literal:
    return Literal(lit.pred, tuple(mapping[a] for a in lit.args))


def rename_clause(c: Clause, mapping: Dict[int, int]) -> Clause:
    return Clause(_rename_literal(c.head, mapping),
                  tuple(_rename_literal(b, mapping) for b in c.body))


def canonical_clause(c: Clause) -> Clause:
    """Unique normal form of a clause up to variable renaming and body order.

    Head variables are renumbered 0.. by first occurrence in the head.  Body
    literals are deduplicated and sorted; remaining variables take the ids
    that minimise the sorted body sequence, which makes the form invariant
    under any variable permutation.
    """
    head_map: Dict[int, int] = {}
    for a in c.head.args:
        head_map.setdefault(a, len(head_map))
    nh = len(head_map)
    body_lits = set(c.body)
    extra = sorted({v for lit in body_lits for v in lit.args} - set(head_map))
    n = len(extra)
    if n <= 1:
        mapping = dict(head_map)
        for i, v in enumerate(extra):
            mapping[v] = nh + i
        body = tuple(sorted((_rename_literal(l, mapping) for l in body_lits),
                            key=literal_key))
        return Clause(_rename_literal(c.head, head_map), body)

    best = None
    for perm in itertools.permutations(range(nh, nh + n)):
        mapping = dict(head_map)
        for v, t in zip(extra, perm):
            mapping[v] = t
        body = tuple(sorted((_rename_literal(l, mapping) for l in body_lits),
                            key=literal_key))
        key = tuple(literal_key(l) for l in body)
        if best is None or key < best[0]:
            best = (key, body)
    return Clause(_rename_literal(c.head, head_map), best[1])


def canonicalise(h: Program) -> Program:
    """Normal form of a program: canonical clauses, sorted, duplicates removed."""
    cs = {canonical_clause(c) for c in h}
    return tuple(sorted(cs, key=clause_key))


# ---------------------------------------------------------------------------
# Rendering (Prolog-style text, variables A, B, C, ...)
# ---------------------------------------------------------------------------


def var_name(v: int) -> str:
    if v < 26:
        return chr(ord("A") + v)
    return f"V{v}"


def render_literal(lit: Literal) -> str:
    args = ",".join(var_name(a) for a in lit.args)
    return f"{lit.pred.name}({args})"


def render_clause(c: Clause) -> str:
    body = ",".join(render_literal(b) for b in c.body)
    return f"{render_literal(c.head)} :- {body}."


def render_program(p: Program) -> str:
    return "\n".join(render_clause(c) for c in p)


def program_preds(p: Program) -> Set[Pred]:
    preds = set()
    for c in p:
        preds.add(c.head.pred)
        preds.update(lit.pred for lit in c.body)
    return preds
