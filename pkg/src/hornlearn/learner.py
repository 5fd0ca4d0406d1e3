"""The generate-test-constrain loop.

Candidates come from the generator in non-decreasing cost order, get tested
against the examples, and every failure feeds constraints back into the
generator.  The first complete and consistent program is therefore an optimal
(minimum total literal count) solution within the bounded space.
"""

from __future__ import annotations

import time
from typing import Dict, NamedTuple, Optional, Tuple

from .bias import Bias
from .constraints import (
    Generalisation,
    Redundancy,
    Specialisation,
    learn,
    render_constraint,
)
from .core import Program, cost
from .generator import Generator, GeneratorConfig, default_max_literals
from .interpreter import Atom, EvalLimits, KnowledgeBase, test

OPTIMAL_FOUND = "optimal_found"
EXHAUSTED = "exhausted"
BUDGET_EXCEEDED = "budget_exceeded"

DEFAULT_WALL_BUDGET = 120.0


class LearnerInput(NamedTuple):
    kb: KnowledgeBase
    pos: Tuple[Atom, ...]
    neg: Tuple[Atom, ...]
    bias: Bias
    limits: EvalLimits = EvalLimits()
    max_literals: Optional[int] = None
    wall_budget: float = DEFAULT_WALL_BUDGET


class LearnerResult(NamedTuple):
    solution: Optional[Program]
    status: str
    stats: Dict[str, object]

    @property
    def cost(self) -> Optional[int]:
        return cost(self.solution) if self.solution is not None else None


def _validate(inp: LearnerInput) -> None:
    if not inp.pos:
        raise ValueError("at least one positive example is required")
    target = inp.bias.target
    for atom in tuple(inp.pos) + tuple(inp.neg):
        if atom.name != target.name or len(atom.args) != target.arity:
            raise ValueError(
                f"example {atom.name}/{len(atom.args)} does not use the "
                f"target predicate {target.name}/{target.arity}"
            )
    if inp.wall_budget <= 0:
        raise ValueError("wall budget must be positive")


def learn_loop(
    inp: LearnerInput,
    learn_constraints: bool = True,
    collect_constraints: bool = False,
) -> LearnerResult:
    """Run the loop to an optimal solution, exhaustion, or budget expiry.

    learn_constraints=False disables failure-driven pruning (pure generate
    and test); it changes speed, never the returned solution cost.
    collect_constraints=True keeps rendered constraint texts in the stats.
    """
    _validate(inp)
    max_literals = inp.max_literals
    if max_literals is None:
        max_literals = default_max_literals(inp.bias)
    gen = Generator(GeneratorConfig(inp.bias, max_literals))
    start = time.perf_counter()
    deadline = start + inp.wall_budget
    tested = 0
    learned = {"specialisation": 0, "generalisation": 0, "redundancy": 0}
    rendered = []

    def stats(extra=None):
        out = {
            "programs_tested": tested,
            "constraints_learned": dict(learned),
            "wall_time": time.perf_counter() - start,
            "final_cost_level": gen.current_cost,
            "generator": gen.stats(),
        }
        if collect_constraints:
            out["constraints"] = rendered
        if extra:
            out.update(extra)
        return out

    while True:
        if time.perf_counter() > deadline:
            return LearnerResult(None, BUDGET_EXCEEDED, stats())
        prog = gen.next_program()
        if prog is None:
            return LearnerResult(None, EXHAUSTED, stats())
        outcome = test(inp.kb, prog, inp.pos, inp.neg, inp.limits)
        tested += 1
        if outcome.is_solution:
            return LearnerResult(prog, OPTIMAL_FOUND, stats())
        if learn_constraints:
            for con in learn(prog, outcome):
                if isinstance(con, Specialisation):
                    learned["specialisation"] += 1
                elif isinstance(con, Generalisation):
                    learned["generalisation"] += 1
                elif isinstance(con, Redundancy):
                    learned["redundancy"] += 1
                gen.add_constraint(con)
                if collect_constraints:
                    rendered.append(render_constraint(con))
