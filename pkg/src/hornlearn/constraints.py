"""Hypothesis constraints learned from failed programs.

A failed hypothesis h yields, depending on how it failed:

  * incomplete            -> Specialisation(h): prune programs subsumed by h
  * inconsistent          -> Generalisation(h): prune programs that subsume h
  * totally incomplete    -> additionally Redundancy(h, conditions): prune
    programs in which all of h's clauses reappear (each subsumed by a clause
    of the candidate) while per-predicate clause counts match exactly

The redundancy conditions carry, for every predicate of h that is not
recursively called, the exact clause counts of the other predicates h
defines plus the pivot's recursive-clause count.
"""

from __future__ import annotations

from typing import Dict, NamedTuple, Tuple, Union

from .core import (
    Pred,
    Program,
    clause_subsumes,
    dependency_graph,
    predicate_stats,
    pred_key,
    render_clause,
    theory_subsumes,
)
from .interpreter import Outcome


class Specialisation(NamedTuple):
    failed: Program


class Generalisation(NamedTuple):
    failed: Program


class RedundancyCondition(NamedTuple):
    pivot: Pred
    clause_counts: Tuple[Tuple[Pred, int], ...]  # sorted, excludes the pivot
    pivot_recursive_count: int


class Redundancy(NamedTuple):
    failed: Program
    conditions: Tuple[RedundancyCondition, ...]


HypothesisConstraint = Union[Specialisation, Generalisation, Redundancy]


def _recursively_called(h: Program) -> set:
    """Predicates with a recursive clause or on a mutual-recursion cycle."""
    graph = dependency_graph(h)
    called = set()
    for i, ci in enumerate(h):
        for j, cj in enumerate(h):
            if ci.head.pred == cj.head.pred and graph.depends(i, j):
                called.add(ci.head.pred)
    return called


def build_redundancy(h: Program) -> Redundancy:
    """Redundancy constraint for a totally incomplete program."""
    stats = predicate_stats(h)
    recursive = _recursively_called(h)
    conditions = []
    for pivot in sorted(stats, key=pred_key):
        if pivot in recursive:
            continue
        counts = tuple(
            (q, stats[q].num_clauses)
            for q in sorted(stats, key=pred_key)
            if q != pivot
        )
        conditions.append(
            RedundancyCondition(pivot, counts, stats[pivot].num_recursive)
        )
    return Redundancy(h, tuple(conditions))


def learn(h: Program, out: Outcome) -> Tuple[HypothesisConstraint, ...]:
    """Constraints justified by a test outcome; empty for a solution."""
    learned = []
    if not out.complete:
        learned.append(Specialisation(h))
    if not out.consistent:
        learned.append(Generalisation(h))
    if out.totally_incomplete:
        learned.append(build_redundancy(h))
    return tuple(learned)


def violates(c: HypothesisConstraint, q: Program) -> bool:
    """Does candidate program q violate constraint c?"""
    if isinstance(c, Specialisation):
        return theory_subsumes(c.failed, q)
    if isinstance(c, Generalisation):
        return theory_subsumes(q, c.failed)
    if isinstance(c, Redundancy):
        if not all(any(clause_subsumes(ci, d) for d in q) for ci in c.failed):
            return False
        stats = predicate_stats(q)
        for cond in c.conditions:
            if any(
                (stats[p].num_clauses if p in stats else 0) != n
                for p, n in cond.clause_counts
            ):
                continue
            pivot_rec = stats[cond.pivot].num_recursive if cond.pivot in stats else 0
            if pivot_rec == cond.pivot_recursive_count:
                return True
        return False
    raise TypeError(f"not a hypothesis constraint: {c!r}")


def render_constraint(c: HypothesisConstraint) -> str:
    """Informational text mirroring the seen/num_clauses/num_recursive form."""
    lines = []
    if isinstance(c, Specialisation):
        lines.append("% specialisation of:")
    elif isinstance(c, Generalisation):
        lines.append("% generalisation of:")
    else:
        lines.append("% redundancy of:")
    for i, cl in enumerate(c.failed, start=1):
        lines.append(f"seen(c{i}) :- {render_clause(cl)}")
    seen_all = ", ".join(f"seen(c{i})" for i in range(1, len(c.failed) + 1))
    lines.append(f"seen(h) :- {seen_all}.")
    if isinstance(c, Redundancy):
        for cond in c.conditions:
            parts = [f"num_clauses({p.name},{n})" for p, n in cond.clause_counts]
            parts.append(
                f"num_recursive({cond.pivot.name},{cond.pivot_recursive_count})"
            )
            lines.append(f":- seen(h), {', '.join(parts)}.")
    else:
        lines.append(":- seen(h).")
    return "\n".join(lines)
