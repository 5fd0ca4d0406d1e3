"""Benchmark families, predictive-accuracy evaluation, and suite running.

Three task families, all deterministic in their seed:

  * robot k:   move right k times on a bounded 100x100 grid (builtin right);
  * kth k:     find the kth element of a 26-letter permutation (head, tail);
  * puzzles:   ten list-manipulation problems over integer lists up to
               length 50 with values 1..100, labeled by per-puzzle oracles.

Train/test splits are disjoint as labeled atoms.  Negative examples for the
monadic puzzles come from rejection sampling; the dyadic ones perturb the
output argument until the oracle rejects it.
"""

from __future__ import annotations

import csv
import dataclasses
import io
import json
import random
import time
from dataclasses import dataclass
from pathlib import Path
from typing import Callable, Dict, List, NamedTuple, Optional, Sequence, Tuple

from .bias import Bias, make_bias, parse_metarules
from .core import (
    BACKGROUND,
    TARGET,
    Clause,
    Literal,
    Pred,
    Program,
    cost,
    render_program,
)
from .interpreter import (
    BUILTINS,
    Atom,
    EvalLimits,
    KnowledgeBase,
    Pair,
    test,
)
from .learner import (
    DEFAULT_WALL_BUDGET,
    LearnerInput,
    LearnerResult,
    learn_loop,
)
from .taskfile import TaskInstance

PUZZLES = (
    "addhead", "dropk", "droplast", "evens", "finddup",
    "last", "len", "member", "sorted", "threesame",
)

PUZZLE_BUDGET = 180.0
LIST_MAX_LEN = 50
VALUE_MAX = 100


class BenchmarkSpec(NamedTuple):
    family: str            # "robot" | "kth" | "puzzle"
    param: object          # k for robot/kth, puzzle name otherwise
    seed: int


class BenchmarkData(NamedTuple):
    task: TaskInstance
    test_pos: Tuple[Atom, ...]
    test_neg: Tuple[Atom, ...]


# ---------------------------------------------------------------------------
# Robot planning
# ---------------------------------------------------------------------------


def _robot(spec: BenchmarkSpec) -> BenchmarkData:
    k = spec.param
    if not isinstance(k, int) or k < 1 or k > 99:
        raise ValueError(f"robot parameter k must be in 1..99, got {k}")
    rng = random.Random(spec.seed)

    def pos_atom():
        x = rng.randint(1, VALUE_MAX - k)
        y = rng.randint(1, VALUE_MAX)
        return Atom("f", (Pair(x, y), Pair(x + k, y)))

    train_pos: List[Atom] = []
    seen = set()
    while len(train_pos) < 10:
        a = pos_atom()
        if a not in seen:
            seen.add(a)
            train_pos.append(a)

    train_neg: List[Atom] = []
    for i in range(1, k):
        start = train_pos[(i - 1) % len(train_pos)].args[0]
        a = Atom("f", (start, Pair(start.first + i, start.second)))
        train_neg.append(a)
        seen.add(a)

    test_pos: List[Atom] = []
    while len(test_pos) < 50:
        a = pos_atom()
        if a not in seen:
            seen.add(a)
            test_pos.append(a)

    displacements = [d for d in list(range(1, k)) + list(range(k + 1, k + 5))
                     if d <= 99]
    test_neg: List[Atom] = []
    while len(test_neg) < 50:
        d = rng.choice(displacements)
        x = rng.randint(1, VALUE_MAX - d)
        y = rng.randint(1, VALUE_MAX)
        a = Atom("f", (Pair(x, y), Pair(x + d, y)))
        if a not in seen:
            seen.add(a)
            test_neg.append(a)

    bias = make_bias(
        [("f", 2)],
        [("right", 2)],
        types={("f", 2): ("pair", "pair"), ("right", 2): ("pair", "pair")},
        directions={("f", 2): ("in", "out"), ("right", 2): ("in", "out")},
    )
    task = TaskInstance(bias, ("right",), (), (), tuple(train_pos), tuple(train_neg))
    return BenchmarkData(task, tuple(test_pos), tuple(test_neg))


# ---------------------------------------------------------------------------
# kth element
# ---------------------------------------------------------------------------

_LETTERS = tuple("abcdefghijklmnopqrstuvwxyz")


def _kth(spec: BenchmarkSpec) -> BenchmarkData:
    k = spec.param
    if not isinstance(k, int) or k < 1 or k > len(_LETTERS):
        raise ValueError(f"kth parameter k must be in 1..26, got {k}")
    rng = random.Random(spec.seed)

    def perm():
        return tuple(rng.sample(_LETTERS, len(_LETTERS)))

    train_list = perm()
    train_pos = (Atom("f", (train_list, train_list[k - 1])),)
    train_neg = tuple(
        Atom("f", (train_list, c)) for c in train_list if c != train_list[k - 1]
    )
    seen = set(train_pos) | set(train_neg)

    test_pos: List[Atom] = []
    while len(test_pos) < 50:
        lst = perm()
        a = Atom("f", (lst, lst[k - 1]))
        if a not in seen:
            seen.add(a)
            test_pos.append(a)
    test_neg: List[Atom] = []
    while len(test_neg) < 50:
        lst = perm()
        c = rng.choice([x for x in lst if x != lst[k - 1]])
        a = Atom("f", (lst, c))
        if a not in seen:
            seen.add(a)
            test_neg.append(a)

    bias = make_bias(
        [("f", 2)],
        [("head", 2), ("tail", 2)],
        types={
            ("f", 2): ("list", "letter"),
            ("head", 2): ("list", "letter"),
            ("tail", 2): ("list", "list"),
        },
        directions={
            ("f", 2): ("in", "out"),
            ("head", 2): ("in", "out"),
            ("tail", 2): ("in", "out"),
        },
    )
    task = TaskInstance(bias, ("head", "tail"), (), (), train_pos, train_neg)
    return BenchmarkData(task, tuple(test_pos), tuple(test_neg))


# ---------------------------------------------------------------------------
# Programming puzzles
# ---------------------------------------------------------------------------


def _rand_list(rng, lo=0, hi=LIST_MAX_LEN):
    return tuple(rng.randint(1, VALUE_MAX) for _ in range(rng.randint(lo, hi)))


def _oracle_addhead(args):
    a, b = args
    return bool(a) and b == (a[0],) + a


def _oracle_dropk(args):
    a, k, b = args
    return type(k) is int and 1 <= k <= len(a) and b == a[k:]


def _oracle_droplast(args):
    a, b = args
    return bool(a) and b == a[:-1]


def _oracle_evens(args):
    return all(x % 2 == 0 for x in args[0])


def _oracle_finddup(args):
    a, b = args
    return a.count(b) >= 2


def _oracle_last(args):
    a, b = args
    return bool(a) and b == a[-1]


def _oracle_len(args):
    a, n = args
    return type(n) is int and n == len(a)


def _oracle_member(args):
    a, b = args
    return b in a


def _oracle_sorted(args):
    a = args[0]
    return all(a[i] <= a[i + 1] for i in range(len(a) - 1))


def _oracle_threesame(args):
    a = args[0]
    return len(a) >= 3 and a[0] == a[1] == a[2]


def _pos_addhead(rng):
    a = _rand_list(rng, 1, LIST_MAX_LEN - 1)
    return (a, (a[0],) + a)


def _pos_dropk(rng):
    a = _rand_list(rng, 1)
    k = rng.randint(1, len(a))
    return (a, k, a[k:])


def _pos_droplast(rng):
    a = _rand_list(rng, 1)
    return (a, a[:-1])


def _pos_evens(rng):
    return (tuple(2 * rng.randint(1, VALUE_MAX // 2)
                  for _ in range(rng.randint(0, LIST_MAX_LEN))),)


def _pos_finddup(rng):
    base = list(_rand_list(rng, 1, LIST_MAX_LEN - 1))
    x = rng.choice(base)
    base.insert(rng.randint(0, len(base)), x)
    return (tuple(base), x)


def _pos_last(rng):
    a = _rand_list(rng, 1)
    return (a, a[-1])


def _pos_len(rng):
    a = _rand_list(rng)
    return (a, len(a))


def _pos_member(rng):
    a = _rand_list(rng, 1)
    return (a, rng.choice(a))


def _pos_sorted(rng):
    return (tuple(sorted(_rand_list(rng, 1))),)


def _pos_threesame(rng):
    v = rng.randint(1, VALUE_MAX)
    return ((v, v, v) + _rand_list(rng, 0, LIST_MAX_LEN - 3),)


def _neg_dyadic(oracle, make_out):
    def sample(rng):
        while True:
            a = _rand_list(rng, 1)
            b = make_out(rng, a)
            if not oracle((a, b)):
                return (a, b)
    return sample


def _neg_monadic(oracle):
    def sample(rng):
        while True:
            a = _rand_list(rng, 1)
            if not oracle((a,)):
                return (a,)
    return sample


def _neg_dropk(rng):
    while True:
        a = _rand_list(rng, 1)
        k = rng.randint(1, len(a))
        b = rng.choice((a, a[k - 1:], a[min(k + 1, len(a)):], _rand_list(rng)))
        if not _oracle_dropk((a, k, b)):
            return (a, k, b)


_NEG_SAMPLERS: Dict[str, Callable] = {
    "addhead": _neg_dyadic(_oracle_addhead,
                           lambda rng, a: rng.choice((a, a + (a[0],), _rand_list(rng)))),
    "dropk": _neg_dropk,
    "droplast": _neg_dyadic(_oracle_droplast,
                            lambda rng, a: rng.choice((a, a[1:], _rand_list(rng)))),
    "evens": _neg_monadic(_oracle_evens),
    "finddup": _neg_dyadic(_oracle_finddup,
                           lambda rng, a: rng.randint(1, VALUE_MAX)),
    "last": _neg_dyadic(_oracle_last,
                        lambda rng, a: rng.choice(a + (rng.randint(1, VALUE_MAX),))),
    "len": _neg_dyadic(_oracle_len,
                       lambda rng, a: rng.randint(0, LIST_MAX_LEN)),
    "member": _neg_dyadic(_oracle_member,
                          lambda rng, a: rng.randint(1, VALUE_MAX)),
    "sorted": _neg_monadic(_oracle_sorted),
    "threesame": _neg_monadic(_oracle_threesame),
}

_POS_SAMPLERS: Dict[str, Callable] = {
    "addhead": _pos_addhead,
    "dropk": _pos_dropk,
    "droplast": _pos_droplast,
    "evens": _pos_evens,
    "finddup": _pos_finddup,
    "last": _pos_last,
    "len": _pos_len,
    "member": _pos_member,
    "sorted": _pos_sorted,
    "threesame": _pos_threesame,
}

PUZZLE_ORACLES: Dict[str, Callable] = {
    "addhead": _oracle_addhead,
    "dropk": _oracle_dropk,
    "droplast": _oracle_droplast,
    "evens": _oracle_evens,
    "finddup": _oracle_finddup,
    "last": _oracle_last,
    "len": _oracle_len,
    "member": _oracle_member,
    "sorted": _oracle_sorted,
    "threesame": _oracle_threesame,
}

_PUZZLE_SIG: Dict[str, Tuple[Tuple[str, ...], Tuple[str, ...]]] = {
    # target type tuple, target direction tuple
    "addhead": (("list", "list"), ("in", "out")),
    "dropk": (("list", "int", "list"), ("in", "in", "out")),
    "droplast": (("list", "list"), ("in", "out")),
    "evens": (("list",), ("in",)),
    "finddup": (("list", "int"), ("in", "out")),
    "last": (("list", "int"), ("in", "out")),
    "len": (("list", "int"), ("in", "out")),
    "member": (("list", "int"), ("in", "out")),
    "sorted": (("list",), ("in",)),
    "threesame": (("list",), ("in",)),
}

_BASE_BUILTINS = (
    "head", "tail", "decrement", "geq", "empty", "zero", "one", "even", "odd",
)

_EXTRA_BUILTINS: Dict[str, Tuple[str, ...]] = {
    "len": ("increment",),
    "finddup": ("member",),
    "addhead": ("cons",),
    "dropk": ("cons",),
    "droplast": ("cons",),
}

_BUILTIN_TYPES: Dict[str, Tuple[str, ...]] = {
    "head": ("list", "int"),
    "tail": ("list", "list"),
    "decrement": ("int", "int"),
    "geq": ("int", "int"),
    "empty": ("list",),
    "zero": ("int",),
    "one": ("int",),
    "even": ("int",),
    "odd": ("int",),
    "increment": ("int", "int"),
    "member": ("list", "int"),
    "cons": ("int", "list", "list"),
}


def puzzle_builtins(name: str) -> Tuple[str, ...]:
    return _BASE_BUILTINS + _EXTRA_BUILTINS.get(name, ())


def _puzzle(spec: BenchmarkSpec) -> BenchmarkData:
    name = spec.param
    if name not in PUZZLES:
        raise ValueError(f"unknown puzzle {name!r}")
    rng = random.Random(spec.seed)
    oracle = PUZZLE_ORACLES[name]
    sample_pos = _POS_SAMPLERS[name]
    sample_neg = _NEG_SAMPLERS[name]

    def draw(sampler, want_true, n, seen):
        out = []
        while len(out) < n:
            args = sampler(rng)
            assert oracle(args) == want_true
            a = Atom("f", args)
            if a not in seen:
                seen.add(a)
                out.append(a)
        return tuple(out)

    seen: set = set()
    train_pos = draw(sample_pos, True, 10, seen)
    train_neg = draw(sample_neg, False, 10, seen)
    test_pos = draw(sample_pos, True, 1000, seen)
    test_neg = draw(sample_neg, False, 1000, seen)

    builtins = puzzle_builtins(name)
    target_types, target_dirs = _PUZZLE_SIG[name]
    arity = len(target_types)
    types = {("f", arity): target_types}
    directions = {("f", arity): target_dirs}
    body_preds = []
    for b in builtins:
        bd = BUILTINS[b]
        body_preds.append((bd.name, bd.arity))
        types[(bd.name, bd.arity)] = _BUILTIN_TYPES[b]
        directions[(bd.name, bd.arity)] = bd.direction
    bias = make_bias(
        [("f", arity)],
        body_preds,
        types=types,
        directions=directions,
        max_vars=5,
        max_body=5,
        max_clauses=2,
        pi_enabled=True,
        recursion_enabled=True,
    )
    task = TaskInstance(bias, builtins, (), (), train_pos, train_neg)
    return BenchmarkData(task, test_pos, test_neg)


def generate_benchmark(spec: BenchmarkSpec) -> BenchmarkData:
    """Deterministic-in-seed train task plus held-out test example sets."""
    if spec.family == "robot":
        return _robot(spec)
    if spec.family == "kth":
        return _kth(spec)
    if spec.family == "puzzle":
        return _puzzle(spec)
    raise ValueError(f"unknown benchmark family {spec.family!r}")


# ---------------------------------------------------------------------------
# Known ground-truth programs (validate generators + interpreter together)
# ---------------------------------------------------------------------------


def _p(name, arity, kind=BACKGROUND):
    return Pred(name, arity, kind)


def _lit(pred, *args):
    return Literal(pred, tuple(args))


def ground_truth_program(name: str) -> Program:
    """A hand-written correct program for each puzzle, in executable order."""
    arity = len(_PUZZLE_SIG[name][0])
    f = _p("f", arity, TARGET)
    head = _p("head", 2)
    tail = _p("tail", 2)
    empty = _p("empty", 1)
    if name == "last":
        return (
            Clause(_lit(f, 0, 1), (_lit(tail, 0, 2), _lit(empty, 2), _lit(head, 0, 1))),
            Clause(_lit(f, 0, 1), (_lit(tail, 0, 2), _lit(f, 2, 1))),
        )
    if name == "member":
        return (
            Clause(_lit(f, 0, 1), (_lit(head, 0, 1),)),
            Clause(_lit(f, 0, 1), (_lit(tail, 0, 2), _lit(f, 2, 1))),
        )
    if name == "threesame":
        return (
            Clause(_lit(f, 0), (_lit(head, 0, 1), _lit(tail, 0, 2),
                                _lit(head, 2, 1), _lit(tail, 2, 3),
                                _lit(head, 3, 1))),
        )
    if name == "evens":
        even = _p("even", 1)
        return (
            Clause(_lit(f, 0), (_lit(empty, 0),)),
            Clause(_lit(f, 0), (_lit(head, 0, 1), _lit(even, 1),
                                _lit(tail, 0, 2), _lit(f, 2))),
        )
    if name == "sorted":
        geq = _p("geq", 2)
        return (
            Clause(_lit(f, 0), (_lit(tail, 0, 1), _lit(empty, 1))),
            Clause(_lit(f, 0), (_lit(head, 0, 1), _lit(tail, 0, 2),
                                _lit(head, 2, 3), _lit(geq, 3, 1),
                                _lit(f, 2))),
        )
    if name == "len":
        zero = _p("zero", 1)
        increment = _p("increment", 2)
        return (
            Clause(_lit(f, 0, 1), (_lit(empty, 0), _lit(zero, 1))),
            Clause(_lit(f, 0, 1), (_lit(tail, 0, 2), _lit(f, 2, 3),
                                   _lit(increment, 3, 1))),
        )
    if name == "finddup":
        member = _p("member", 2)
        return (
            Clause(_lit(f, 0, 1), (_lit(head, 0, 1), _lit(tail, 0, 2),
                                   _lit(member, 2, 1))),
            Clause(_lit(f, 0, 1), (_lit(tail, 0, 2), _lit(f, 2, 1))),
        )
    if name == "addhead":
        cons = _p("cons", 3)
        return (
            Clause(_lit(f, 0, 1), (_lit(head, 0, 2), _lit(cons, 2, 0, 1))),
        )
    if name == "droplast":
        cons = _p("cons", 3)
        return (
            Clause(_lit(f, 0, 1), (_lit(tail, 0, 1), _lit(empty, 1))),
            Clause(_lit(f, 0, 1), (_lit(head, 0, 2), _lit(tail, 0, 3),
                                   _lit(f, 3, 4), _lit(cons, 2, 4, 1))),
        )
    if name == "dropk":
        one = _p("one", 1)
        decrement = _p("decrement", 2)
        return (
            Clause(_lit(f, 0, 1, 2), (_lit(one, 1), _lit(tail, 0, 2))),
            Clause(_lit(f, 0, 1, 2), (_lit(decrement, 1, 3), _lit(tail, 0, 4),
                                      _lit(f, 4, 3, 2))),
        )
    raise ValueError(f"unknown puzzle {name!r}")


# ---------------------------------------------------------------------------
# Evaluation and suite running
# ---------------------------------------------------------------------------


def evaluate(solution: Program, kb: KnowledgeBase, test_pos, test_neg,
             limits: EvalLimits = EvalLimits()) -> float:
    """Predictive accuracy; timeouts count against the program."""
    out = test(kb, solution, test_pos, test_neg, limits)
    correct = out.pos_entailed + (out.neg_total - out.neg_entailed)
    return correct / (out.pos_total + out.neg_total)


@dataclass
class RunReport:
    task: str
    k: Optional[int]
    mode: str
    seed: int
    status: str
    cost: Optional[int]
    accuracy: float
    learning_time: float
    solution: Optional[str]
    programs_tested: int
    constraints_learned: Dict[str, int]

    CSV_COLUMNS = ("task", "k", "mode", "seed", "status", "cost", "accuracy", "time")

    def csv_row(self):
        return (
            self.task,
            "" if self.k is None else self.k,
            self.mode,
            self.seed,
            self.status,
            "" if self.cost is None else self.cost,
            f"{self.accuracy:.4f}",
            f"{self.learning_time:.3f}",
        )

    def to_json(self):
        return dataclasses.asdict(self)


def mode_string(pi: bool, recursion: bool, metarules: bool = False) -> str:
    s = f"pi={'on' if pi else 'off'},rec={'on' if recursion else 'off'}"
    return s + ",mil" if metarules else s


def run_one(
    spec: BenchmarkSpec,
    pi: bool = True,
    recursion: Optional[bool] = None,
    metarule_text: Optional[str] = None,
    budget: Optional[float] = None,
    max_literals: Optional[int] = None,
    limits: EvalLimits = EvalLimits(),
) -> RunReport:
    """Generate the task, learn, and score the result on held-out data."""
    data = generate_benchmark(spec)
    bias = data.task.bias
    if recursion is None:
        recursion = bias.recursion_enabled
    metarules = parse_metarules(metarule_text) if metarule_text else None
    bias = dataclasses.replace(
        bias, pi_enabled=pi, recursion_enabled=recursion, metarules=metarules
    )
    if budget is None:
        budget = PUZZLE_BUDGET if spec.family == "puzzle" else DEFAULT_WALL_BUDGET
    kb = data.task.kb()
    inp = LearnerInput(
        kb=kb,
        pos=data.task.pos,
        neg=data.task.neg,
        bias=bias,
        limits=limits,
        max_literals=max_literals,
        wall_budget=budget,
    )
    t0 = time.perf_counter()
    result = learn_loop(inp)
    elapsed = time.perf_counter() - t0
    if result.solution is not None:
        accuracy = evaluate(result.solution, kb, data.test_pos, data.test_neg, limits)
        solution_text = render_program(result.solution)
    else:
        # an empty classifier gets every negative right and every positive wrong
        accuracy = len(data.test_neg) / (len(data.test_pos) + len(data.test_neg))
        solution_text = None
    return RunReport(
        task=spec.family if spec.family != "puzzle" else str(spec.param),
        k=spec.param if isinstance(spec.param, int) else None,
        mode=mode_string(pi, recursion, metarules is not None),
        seed=spec.seed,
        status=result.status,
        cost=result.cost,
        accuracy=accuracy,
        learning_time=elapsed,
        solution=solution_text,
        programs_tested=result.stats["programs_tested"],
        constraints_learned=result.stats["constraints_learned"],
    )


def _as_list(value):
    return value if isinstance(value, list) else [value]


def expand_suite(config: Dict) -> List[Dict]:
    """Expand a parsed suite config into one entry per (task, mode, seed)."""
    entries = []
    for run in config.get("run", []):
        family = run["family"]
        params = _as_list(run.get("param", run.get("k")))
        seeds = _as_list(run.get("seeds", run.get("seed", [1])))
        pis = _as_list(run.get("pi", True))
        recs = _as_list(run.get("recursion", None))
        for param in params:
            for pi in pis:
                for rec in recs:
                    for seed in seeds:
                        entries.append({
                            "spec": BenchmarkSpec(family, param, seed),
                            "pi": bool(pi),
                            "recursion": rec,
                            "metarules": run.get("metarules"),
                            "budget": run.get("budget"),
                            "max_literals": run.get("max_literals"),
                            "eval_timeout": run.get("eval_timeout"),
                        })
    return entries


def run_suite(config: Dict, out_dir: Path, echo: Callable[[str], None] = print) -> bool:
    """Run every suite entry; write results.csv and results.json.

    Returns True iff every run completed (learning failures still count as
    completed; only crashes do not).
    """
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    entries = expand_suite(config)
    reports: List[RunReport] = []
    all_ok = True
    for entry in entries:
        spec = entry["spec"]
        metarule_text = None
        if entry["metarules"]:
            metarule_text = Path(entry["metarules"]).read_text()
        limits = EvalLimits()
        if entry["eval_timeout"]:
            limits = EvalLimits(per_example_timeout=float(entry["eval_timeout"]))
        try:
            report = run_one(
                spec,
                pi=entry["pi"],
                recursion=entry["recursion"],
                metarule_text=metarule_text,
                budget=entry["budget"],
                max_literals=entry["max_literals"],
                limits=limits,
            )
        except Exception as exc:  # a crashed row fails the suite
            all_ok = False
            echo(f"run {spec} failed: {exc}")
            continue
        reports.append(report)
        echo(
            f"{report.task} k={report.k} mode={report.mode} seed={report.seed}: "
            f"{report.status} cost={report.cost} acc={report.accuracy:.3f} "
            f"time={report.learning_time:.1f}s"
        )

    csv_path = out_dir / "results.csv"
    with csv_path.open("w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(RunReport.CSV_COLUMNS)
        for report in reports:
            writer.writerow(report.csv_row())
    json_path = out_dir / "results.json"
    json_path.write_text(json.dumps([r.to_json() for r in reports], indent=2))
    return all_ok
