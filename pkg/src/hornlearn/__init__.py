"""hornlearn: learn minimal definite programs from examples, inventing
auxiliary predicates automatically when they make the program smaller."""

from .bias import (
    Bias,
    BiasError,
    Metarule,
    TypingError,
    check_declaration_consistent,
    check_direction_safe,
    clause_matches_metarule,
    infer_types,
    make_bias,
    parse_bias,
    parse_metarules,
)
from .constraints import (
    Generalisation,
    Redundancy,
    RedundancyCondition,
    Specialisation,
    build_redundancy,
    learn,
    violates,
)
from .core import (
    Clause,
    Literal,
    Pred,
    Program,
    canonicalise,
    clause_subsumes,
    cost,
    dependency_graph,
    is_separable,
    p_specialising_clauses,
    predicate_stats,
    render_program,
    theory_subsumes,
)
from .generator import (
    Generator,
    GeneratorConfig,
    add_constraint,
    is_structurally_valid,
    new_generator,
    next_program,
)
from .interpreter import (
    Atom,
    EvalLimits,
    InterpreterError,
    KnowledgeBase,
    Outcome,
    Pair,
    Verdict,
    entails,
    load_kb,
    test,
)
from .learner import LearnerInput, LearnerResult, learn_loop
from .taskfile import TaskInstance, parse_task, render_task

__version__ = "0.1.0"
