"""Enumeration of candidate programs in non-decreasing cost order.

Programs come out canonical (no two yields share a canonical form), cost by
cost, deterministically for a fixed bias and constraint history, ordered
within one cost level by the canonical total order on programs.

A cost level is covered by one stream per program *shape*: a multiset of
(head predicate, clause cost) slots together with the set of invented
symbols the program defines.  Shapes keep every stream over exactly the
predicates its clauses may use, which is what makes the space tractable:
single-clause programs can never contain invented symbols, an inv1 clause
may only call inv2 upward, and so on.  The per-level streams are merged by
program key, so the global order is still the canonical one.

Constraints prune twice: specialisation constraints propagate into the
single-clause search (a partial clause already subsumed by a failed clause
can only grow into violating programs, so the whole subtree is skipped),
and every emitted candidate passes a cached bitmask screen over the
registry.  Registered constraints take effect immediately, including for
the remainder of the current cost level.
"""

from __future__ import annotations

import itertools
from heapq import merge as heap_merge
from typing import Dict, List, NamedTuple, Optional, Sequence, Tuple

from .bias import Bias, clause_matches_metarule, schedule_body, types_consistent
from .constraints import (
    Generalisation,
    HypothesisConstraint,
    Redundancy,
    Specialisation,
    violates,
)
from .core import (
    BACKGROUND,
    INVENTED,
    TARGET,
    Clause,
    Literal,
    Pred,
    Program,
    canonical_clause,
    canonicalise,
    clause_key,
    find_substitution,
    invented_index,
    invented_pred,
    is_recursive_clause,
    pred_key,
)


class GeneratorConfig(NamedTuple):
    bias: Bias
    max_literals: int


def default_max_literals(bias: Bias) -> int:
    return bias.max_clauses * (1 + bias.max_body)


# ---------------------------------------------------------------------------
# Predicate pools
# ---------------------------------------------------------------------------


def _body_pool(bias: Bias, head: Pred, defined: Tuple[Pred, ...]) -> List[Pred]:
    """Body predicates a clause with this head may use, given the invented
    symbols the program defines.  The symbol order target < inv1 < inv2 ...
    forbids calling strictly downward; self-calls need recursion."""
    pool = [Pred(n, a, BACKGROUND) for n, a in bias.body_preds]
    if bias.recursion_enabled:
        pool.append(head)
    lo = 1 if head.kind == TARGET else invented_index(head) + 1
    for q in defined:
        if invented_index(q) >= lo:
            pool.append(q)
    return sorted(set(pool), key=pred_key)


def _inv_sets(bias: Bias) -> List[Tuple[Pred, ...]]:
    """Definable invented-symbol sets: contiguous indices, one arity each."""
    sets: List[Tuple[Pred, ...]] = [()]
    if not bias.pi_enabled:
        return sets
    for m in range(1, bias.max_invented + 1):
        for arities in itertools.product(
            range(1, bias.max_invented_arity + 1), repeat=m
        ):
            sets.append(tuple(invented_pred(i + 1, a) for i, a in enumerate(arities)))
    return sets


# ---------------------------------------------------------------------------
# Clause enumeration
# ---------------------------------------------------------------------------


class PoolClause:
    """A canonical clause plus everything the assembler asks about it."""

    __slots__ = (
        "clause", "key", "cost", "uid", "head_pred", "inv_head", "inv_body",
        "inv_all", "is_rec", "body_pred_set", "body_by_pred", "sigs",
        "vacuous", "orders",
    )

    def __init__(self, clause: Clause, cost: int, uid: int, vacuous: bool, orders):
        self.clause = clause
        self.key = clause_key(clause)
        self.cost = cost
        self.uid = uid
        self.head_pred = clause.head.pred
        self.inv_head = clause.head.pred if clause.head.pred.kind == INVENTED else None
        self.inv_body = frozenset(
            l.pred for l in clause.body if l.pred.kind == INVENTED
        )
        inv_all = set(self.inv_body)
        if self.inv_head is not None:
            inv_all.add(self.inv_head)
        self.inv_all = tuple(sorted(inv_all, key=pred_key))
        self.is_rec = is_recursive_clause(clause)
        self.body_pred_set = frozenset(l.pred for l in clause.body)
        by_pred: Dict[Pred, list] = {}
        sigs = set()
        for l in clause.body:
            by_pred.setdefault(l.pred, []).append(l.args)
            args = l.args
            n = len(args)
            for bits in range(1 << n):
                sigs.add((l.pred, tuple(
                    None if (bits >> i) & 1 else args[i] for i in range(n)
                )))
        self.body_by_pred = by_pred
        self.sigs = sigs
        self.vacuous = vacuous
        self.orders = orders  # dict direction-combo -> body order, or None


def _clause_direction_info(bias: Bias, c: Clause):
    """(vacuous, options): options maps a direction-tuple assignment for the
    clause's invented predicates (sorted) to a safe execution order."""
    if not bias.directions:
        return True, None
    named = {l.pred for l in (c.head, *c.body) if l.pred.kind != INVENTED}
    if any((p.name, p.arity) not in bias.directions for p in named):
        return True, None
    inv_all = tuple(sorted(
        {l.pred for l in (c.head, *c.body) if l.pred.kind == INVENTED},
        key=pred_key,
    ))
    options: Dict[tuple, tuple] = {}
    for combo in itertools.product(
        *(itertools.product(("in", "out"), repeat=p.arity) for p in inv_all)
    ):
        assignment = dict(zip(inv_all, combo))

        def dir_of(p: Pred):
            if p.kind == INVENTED:
                return assignment[p]
            return bias.directions[(p.name, p.arity)]

        order = schedule_body(c, dir_of)
        if order is not None:
            options[combo] = order
    return False, options


def _arg_sequences(arity: int, used: int, max_vars: int):
    """Variable tuples in lex order; fresh ids appear contiguously."""
    out = []

    def rec(i, args, u):
        if i == arity:
            out.append((tuple(args), u))
            return
        for v in range(min(u + 1, max_vars)):
            args.append(v)
            rec(i + 1, args, u + 1 if v == u else u)
            args.pop()

    rec(0, [], used)
    return out


def _is_canonical_rep(clause: Clause, nh: int, used: int) -> bool:
    if used - nh <= 1:
        return True
    return canonical_clause(clause) == clause


def _enumerate_clauses(bias: Bias, head: Pred, cost: int,
                       body_pool: Sequence[Pred], pruner=None):
    """Yield canonical clauses with the given head and cost, ascending.

    Bodies are built literal by literal in strictly increasing literal
    order with contiguous fresh variables; a pruner hook may cut whole
    subtrees (used to propagate specialisation constraints).
    """
    body_len = cost - 1
    if body_len < 1 or body_len > bias.max_body or head.arity > bias.max_vars:
        return
    if not body_pool:
        return
    max_pool_arity = max(p.arity for p in body_pool)
    typed = bool(bias.types)
    head_args = tuple(range(head.arity))
    head_lit = Literal(head, head_args)
    nh = head.arity
    vtypes: Dict[int, str] = {}
    if typed:
        head_sig = bias.types.get((head.name, head.arity))
        if head_sig is not None:
            for pos, v in enumerate(head_args):
                vtypes[v] = head_sig[pos]
    # per-predicate argument tuple cache keyed by current used-variable count
    arg_cache: Dict[Tuple[int, int], list] = {}

    def args_for(arity: int, used: int):
        got = arg_cache.get((arity, used))
        if got is None:
            got = _arg_sequences(arity, used, bias.max_vars)
            arg_cache[(arity, used)] = got
        return got

    body: List[Literal] = []
    inv_arity: Dict[int, int] = {}
    results: List[PoolClause] = []

    def finalize(used):
        clause = Clause(head_lit, tuple(body))
        if not _is_canonical_rep(clause, nh, used):
            return None
        if bias.metarules is not None and not clause_matches_metarule(
            bias.metarules, clause
        ):
            return None
        if typed and not types_consistent(bias, (clause,)):
            return None
        vacuous, orders = _clause_direction_info(bias, clause)
        if not vacuous and not orders:
            return None
        return PoolClause(clause, cost, -1, vacuous, orders)

    def extend(slot, used, min_pred_i, min_args, missing_heads):
        slots_left = body_len - slot
        if slots_left == 0:
            if not missing_heads:
                pc = finalize(used)
                if pc is not None:
                    yield pc
            return
        if len(missing_heads) > slots_left * max_pool_arity:
            return
        for pi in range(min_pred_i, len(body_pool)):
            pred = body_pool[pi]
            inv_new = False
            if pred.kind == INVENTED:
                idx = invented_index(pred)
                prev = inv_arity.get(idx)
                if prev is not None and prev != pred.arity:
                    continue
                inv_new = prev is None
            psig = bias.types.get((pred.name, pred.arity)) if typed else None
            floor = min_args if pi == min_pred_i else None
            for args, used2 in args_for(pred.arity, used):
                if floor is not None and args <= floor:
                    continue
                lit = Literal(pred, args)
                if lit == head_lit:
                    continue
                added_types = []
                if psig is not None:
                    ok = True
                    for pos, v in enumerate(args):
                        t = psig[pos]
                        prev_t = vtypes.get(v)
                        if prev_t is None:
                            vtypes[v] = t
                            added_types.append(v)
                        elif prev_t != t:
                            ok = False
                            break
                    if not ok:
                        for v in added_types:
                            del vtypes[v]
                        continue
                body.append(lit)
                if pruner is not None and pruner(head_lit, body, lit):
                    body.pop()
                    for v in added_types:
                        del vtypes[v]
                    continue
                if inv_new:
                    inv_arity[invented_index(pred)] = pred.arity
                yield from extend(
                    slot + 1, used2, pi, args, missing_heads - set(args)
                )
                body.pop()
                if inv_new:
                    del inv_arity[invented_index(pred)]
                for v in added_types:
                    del vtypes[v]

    yield from extend(0, nh, 0, None, set(head_args))


# ---------------------------------------------------------------------------
# Structural validity (public contract, shared with the brute-force oracle)
# ---------------------------------------------------------------------------


def _ordering_ok(bias: Bias, c: Clause) -> bool:
    head = c.head.pred
    head_rank = 0 if head.kind == TARGET else invented_index(head)
    for lit in c.body:
        p = lit.pred
        if p == head:
            if not bias.recursion_enabled:
                return False
            continue
        if p.kind == TARGET:
            if head.kind != TARGET:
                return False
        elif p.kind == INVENTED:
            if head.kind == INVENTED and invented_index(p) < head_rank:
                return False
    return True


def _clause_shape_ok(bias: Bias, c: Clause) -> bool:
    if not c.body or len(c.body) > bias.max_body:
        return False
    if len(set(c.head.args)) != c.head.pred.arity:
        return False
    if any(lit == c.head for lit in c.body):
        return False
    vs = set(c.head.args)
    body_vars = set()
    for lit in c.body:
        body_vars.update(lit.args)
    if not vs.issubset(body_vars):
        return False
    if len(vs | body_vars) > bias.max_vars:
        return False
    return True


def _consistent_inv_arities(preds) -> bool:
    arity: Dict[int, int] = {}
    for p in preds:
        if p.kind != INVENTED:
            continue
        idx = invented_index(p)
        if arity.setdefault(idx, p.arity) != p.arity:
            return False
    return True


def _pi_usage_ok(p: Program) -> bool:
    inv_heads = {c.head.pred for c in p if c.head.pred.kind == INVENTED}
    inv_bodies = {
        l.pred for c in p for l in c.body if l.pred.kind == INVENTED
    }
    if inv_heads != inv_bodies:
        return False
    preds = inv_heads | inv_bodies
    if not _consistent_inv_arities(preds):
        return False
    indices = {invented_index(q) for q in preds}
    return indices == set(range(1, len(indices) + 1))


def _reachable_ok(p: Program) -> bool:
    if not p:
        return False
    targets = [i for i, c in enumerate(p) if c.head.pred.kind == TARGET]
    if not targets:
        return False
    seen = set(targets)
    frontier = list(targets)
    while frontier:
        i = frontier.pop()
        body_preds = {l.pred for l in p[i].body}
        for j, cj in enumerate(p):
            if j not in seen and cj.head.pred in body_preds:
                seen.add(j)
                frontier.append(j)
    return len(seen) == len(p)


def _directions_ok(bias: Bias, p: Program) -> bool:
    if not bias.directions:
        return True
    infos = [_clause_direction_info(bias, c) for c in p]
    active = [(c, opts) for c, (vac, opts) in zip(p, infos) if not vac]
    if not active:
        return True
    inv_union = tuple(sorted(
        {l.pred for c, _ in active for l in (c.head, *c.body)
         if l.pred.kind == INVENTED},
        key=pred_key,
    ))
    for combo in itertools.product(
        *(itertools.product(("in", "out"), repeat=q.arity) for q in inv_union)
    ):
        assign = dict(zip(inv_union, combo))
        ok = True
        for c, opts in active:
            inv_all = tuple(sorted(
                {l.pred for l in (c.head, *c.body) if l.pred.kind == INVENTED},
                key=pred_key,
            ))
            key = tuple(assign[q] for q in inv_all)
            if key not in opts:
                ok = False
                break
        if ok:
            return True
    return False


def is_structurally_valid(bias: Bias, p: Program) -> bool:
    """The full validity contract a yielded program satisfies.

    Covers declaration consistency, size bounds, clause shape invariants,
    type and direction consistency, invented-symbol usage and ordering,
    reachability from a target clause, and canonical distinctness.
    """
    from .bias import check_declaration_consistent

    if not p or len(p) > bias.max_clauses:
        return False
    canon = [canonical_clause(c) for c in p]
    if len(set(canon)) != len(p):
        return False
    for c in p:
        if not _clause_shape_ok(bias, c):
            return False
        if not check_declaration_consistent(bias, c):
            return False
        if not _ordering_ok(bias, c):
            return False
        for lit in (c.head, *c.body):
            if lit.pred.kind == INVENTED and (
                not bias.pi_enabled
                or invented_index(lit.pred) > bias.max_invented
                or lit.pred.arity > bias.max_invented_arity
            ):
                return False
    if not _pi_usage_ok(p):
        return False
    if not _reachable_ok(p):
        return False
    if bias.metarules is not None:
        if any(not clause_matches_metarule(bias.metarules, c) for c in p):
            return False
    if not types_consistent(bias, p):
        return False
    return _directions_ok(bias, p)


# ---------------------------------------------------------------------------
# Constraint registry and screening
# ---------------------------------------------------------------------------


def _prep_clause(c: Clause) -> tuple:
    """Precomputed matcher record for one constraint clause.

    The signature list holds, per body pattern, the predicate plus the
    pattern's anchored argument positions (head variables keep their value,
    free variables become None); a pattern can only map onto a literal
    carrying a matching signature.
    """
    hp = c.head.pred
    bps = frozenset(l.pred for l in c.body)
    head_arity = hp.arity
    identity = c.head.args == tuple(range(head_arity))
    nvars = max(v for lit in (c.head, *c.body) for v in lit.args) + 1
    lits = tuple((l.pred, l.args) for l in c.body)
    sig_list = tuple(
        {(pred, tuple(a if a < head_arity else None for a in args))
         for pred, args in lits}
    )
    by_pred = {}
    for l in c.body:
        by_pred.setdefault(l.pred, []).append(l.args)
    return (c, hp, bps, len(c.body), lits, nvars, head_arity, identity,
            by_pred, sig_list)


def _anchored_subsumes(lits, nvars, head_arity, by_pred) -> bool:
    """Subsumption of an identity-headed clause into a body indexed by
    predicate; the substitution is pre-anchored on the head variables."""
    theta = list(range(head_arity)) + [None] * (nvars - head_arity)

    def match(i):
        if i == len(lits):
            return True
        pred, args = lits[i]
        for cand in by_pred.get(pred, ()):
            saved = []
            ok = True
            for a, b in zip(args, cand):
                t = theta[a]
                if t is None:
                    theta[a] = b
                    saved.append(a)
                elif t != b:
                    ok = False
                    break
            if ok and match(i + 1):
                return True
            for a in saved:
                theta[a] = None
        return False

    return match(0)


def _covers(prep, pc: PoolClause) -> bool:
    """Does the prepared constraint clause subsume this pool clause?"""
    if prep[1] != pc.head_pred or not prep[2] <= pc.body_pred_set:
        return False
    sigs = pc.sigs
    for sig in prep[9]:
        if sig not in sigs:
            return False
    if prep[7]:
        return _anchored_subsumes(prep[4], prep[5], prep[6], pc.body_by_pred)
    return find_substitution(prep[0], pc.clause) is not None


def _covered_by(pc: PoolClause, prep) -> bool:
    """Does this pool clause subsume the prepared constraint clause?"""
    c, hp, bps = prep[0], prep[1], prep[2]
    if hp != pc.head_pred or not pc.body_pred_set <= bps:
        return False
    if prep[7]:
        d = pc.clause
        d_lits = tuple((l.pred, l.args) for l in d.body)
        d_nvars = max(v for lit in (d.head, *d.body) for v in lit.args) + 1
        return _anchored_subsumes(d_lits, d_nvars, d.head.pred.arity, prep[8])
    return find_substitution(pc.clause, c) is not None


class _ConstraintStore:
    """Registry plus screening caches.

    Constraints share few distinct clauses (the same failed clauses come
    back recombined), so subsumption runs once per distinct clause: each
    carries a bitmask of the specialisation constraints it belongs to and
    bit references into redundancy seen-conditions.  Per pool-clause uid
    the resulting masks are cached; a program violates a specialisation
    constraint iff the AND over its clauses' masks is non-zero, violates a
    generalisation constraint iff the union of subsumed-clause bits covers
    the constraint, and a redundancy constraint additionally needs its
    exact clause-count conditions to hold.
    """

    def __init__(self):
        self.version = 0
        self.registered = set()
        self.ordered: List[HypothesisConstraint] = []
        self.gen: List[tuple] = []           # (prepared, full_mask)
        self.red: List[tuple] = []           # (constraint, full_mask)
        self.n_spec = 0
        # distinct clause registry: clause -> [prep, spec_mask, red_refs]
        self.distinct: Dict[Clause, list] = {}
        self.by_head: Dict[Pred, List[list]] = {}
        # head pred -> one-pattern signature -> distinct records
        self.prune_index: Dict[Pred, Dict[tuple, list]] = {}
        self._screens: Dict[int, list] = {}

    def _distinct(self, c: Clause) -> list:
        rec = self.distinct.get(c)
        if rec is None:
            prep = _prep_clause(c)
            rec = [prep, 0, []]
            self.distinct[c] = rec
            self.by_head.setdefault(prep[1], []).append(rec)
            if prep[7]:
                index = self.prune_index.setdefault(prep[1], {})
                for sig in prep[9]:
                    index.setdefault(sig, []).append(rec)
        return rec

    def add(self, con: HypothesisConstraint) -> bool:
        if isinstance(con, Specialisation):
            canon = Specialisation(canonicalise(con.failed))
        elif isinstance(con, Generalisation):
            canon = Generalisation(canonicalise(con.failed))
        elif isinstance(con, Redundancy):
            canon = Redundancy(canonicalise(con.failed), con.conditions)
        else:
            raise TypeError(f"not a hypothesis constraint: {con!r}")
        if canon in self.registered:
            return False
        self.registered.add(canon)
        self.ordered.append(canon)
        if isinstance(canon, Specialisation):
            s = self.n_spec
            self.n_spec += 1
            for c in canon.failed:
                self._distinct(c)[1] |= 1 << s
        elif isinstance(canon, Generalisation):
            prepared = tuple(_prep_clause(c) for c in canon.failed)
            self.gen.append((prepared, (1 << len(canon.failed)) - 1))
        else:
            r = len(self.red)
            self.red.append((canon, (1 << len(canon.failed)) - 1))
            for i, c in enumerate(canon.failed):
                self._distinct(c)[2].append((r, 1 << i))
        self.version += 1
        return True

    # -- single-clause search pruning --------------------------------------

    def subsumed_by_failed(self, head_lit: Literal, body, new_lit: Literal) -> bool:
        """Does some specialisation-constraint clause subsume this partial
        clause?  Sound to prune: supersets stay subsumed.  Heuristic (may
        miss some cases); the completion screen is exact.

        Only clauses with a body pattern matching the new literal are
        candidates: anything else would already have fired on the parent."""
        index = self.prune_index.get(head_lit.pred)
        if not index:
            return False
        nargs = new_lit.args
        arity = len(nargs)
        np = new_lit.pred
        by_pred = None
        preds = None
        nbody = len(body)
        for maskbits in range(1 << arity):
            sig_args = tuple(
                None if (maskbits >> i) & 1 else nargs[i] for i in range(arity)
            )
            lst = index.get((np, sig_args))
            if not lst:
                continue
            for rec in lst:
                prep = rec[0]
                if not rec[1] or prep[3] > nbody:
                    continue
                if preds is None:
                    preds = frozenset(l.pred for l in body)
                    by_pred = {}
                    for l in body:
                        by_pred.setdefault(l.pred, []).append(l.args)
                if prep[2] <= preds and _anchored_subsumes(
                    prep[4], prep[5], prep[6], by_pred
                ):
                    return True
        return False

    # -- per-pool-clause screens --------------------------------------------

    def _screen_for(self, pc: PoolClause) -> list:
        # entry: [n_recs_seen, matched_recs, mask_version, spec_mask,
        #         red_pairs, n_gen_seen, gen_pairs]
        # masks derive from the matched distinct records; records gain bits
        # when later constraints reuse their clause, so masks recompute
        # whenever the registry version moved.
        entry = self._screens.get(pc.uid)
        if entry is None:
            entry = [0, [], -1, 0, [], 0, []]
            self._screens[pc.uid] = entry
        recs = self.by_head.get(pc.head_pred, ())
        if entry[0] < len(recs):
            matched = entry[1]
            for i in range(entry[0], len(recs)):
                rec = recs[i]
                if _covers(rec[0], pc):
                    matched.append(rec)
            entry[0] = len(recs)
            entry[2] = -1
        if entry[2] != self.version:
            mask = 0
            red_pairs = []
            for rec in entry[1]:
                mask |= rec[1]
                red_pairs.extend(rec[2])
            entry[2] = self.version
            entry[3] = mask
            entry[4] = red_pairs
        if entry[5] < len(self.gen):
            for g in range(entry[5], len(self.gen)):
                prepared, _ = self.gen[g]
                bits = 0
                for i, prep in enumerate(prepared):
                    if _covered_by(pc, prep):
                        bits |= 1 << i
                if bits:
                    entry[6].append((g, bits))
            entry[5] = len(self.gen)
        return entry

    def violated(self, clauses: Sequence[PoolClause]) -> bool:
        entries = [self._screen_for(pc) for pc in clauses]
        if self.n_spec:
            mask = entries[0][1]
            for e in entries[1:]:
                if not mask:
                    break
                mask &= e[1]
            if mask:
                return True
        if self.gen:
            acc: Dict[int, int] = {}
            for e in entries:
                for g, bits in e[4]:
                    acc[g] = acc.get(g, 0) | bits
            for g, bits in acc.items():
                if bits == self.gen[g][1]:
                    return True
        if self.red:
            acc = {}
            for e in entries:
                for r, bits in e[2]:
                    acc[r] = acc.get(r, 0) | bits
            hit = [r for r, bits in acc.items() if bits == self.red[r][1]]
            if hit:
                stats: Dict[Pred, List[int]] = {}
                for pc in clauses:
                    s = stats.setdefault(pc.head_pred, [0, 0])
                    s[0] += 1
                    if pc.is_rec:
                        s[1] += 1
                for r in hit:
                    for cond in self.red[r][0].conditions:
                        if any(
                            (stats[p][0] if p in stats else 0) != n
                            for p, n in cond.clause_counts
                        ):
                            continue
                        rec = stats[cond.pivot][1] if cond.pivot in stats else 0
                        if rec == cond.pivot_recursive_count:
                            return True
        return False

    def violated_program(self, prog: Program) -> bool:
        """Authoritative slow path (stale re-checks of streamed items)."""
        return any(violates(con, prog) for con in self.ordered)


# ---------------------------------------------------------------------------
# The generator
# ---------------------------------------------------------------------------


class _Shape(NamedTuple):
    slots: Tuple[Tuple[Pred, int], ...]   # (head, cost), sorted
    defined: Tuple[Pred, ...]             # invented symbols with clauses


class Generator:
    """Single-owner enumeration cursor over the bounded hypothesis space."""

    def __init__(self, config: GeneratorConfig):
        self.config = config
        self.bias = config.bias
        self._slices: Dict[tuple, List[PoolClause]] = {}
        self._uid = 0
        self._store = _ConstraintStore()
        self._cost = 2
        self._iter = None
        self._exhausted = False
        self.yielded_per_cost: Dict[int, int] = {}
        self.candidates_screened = 0

    # -- clause slices -------------------------------------------------------

    def _slice(self, head: Pred, cost: int, defined: Tuple[Pred, ...]):
        pool = tuple(_body_pool(self.bias, head, defined))
        key = (head, cost, pool)
        got = self._slices.get(key)
        if got is None:
            got = []
            for pc in _enumerate_clauses(self.bias, head, cost, pool):
                pc.uid = self._uid
                self._uid += 1
                got.append(pc)
            self._slices[key] = got
        return got

    # -- shapes ----------------------------------------------------------------

    def _level_shapes(self, level: int) -> List[_Shape]:
        bias = self.bias
        cmax = min(level, 1 + bias.max_body)
        target = bias.target
        shapes: List[_Shape] = []
        for defined in _inv_sets(bias):
            heads = (target,) + defined
            min_k = len(heads)
            for k in range(max(2, min_k), bias.max_clauses + 1):
                if 2 * k > level:
                    continue
                for extra in self._count_splits(k - min_k, len(heads)):
                    slot_heads: List[Pred] = []
                    for h, e in zip(heads, extra):
                        slot_heads.extend([h] * (1 + e))
                    for costs in self._cost_splits(slot_heads, level, cmax):
                        slots = tuple(zip(slot_heads, costs))
                        shapes.append(_Shape(slots, defined))
        return shapes

    @staticmethod
    def _count_splits(extra: int, bins: int):
        if bins == 1:
            yield (extra,)
            return
        for first in range(extra + 1):
            for rest in Generator._count_splits(extra - first, bins - 1):
                yield (first,) + rest

    @staticmethod
    def _cost_splits(slot_heads: List[Pred], total: int, cmax: int):
        n = len(slot_heads)

        def rec(i, remaining, acc):
            if i == n:
                if remaining == 0:
                    yield tuple(acc)
                return
            left = n - i - 1
            lo = 2
            if i > 0 and slot_heads[i] == slot_heads[i - 1]:
                lo = acc[-1]  # non-decreasing within equal heads
            hi = min(cmax, remaining - 2 * left)
            for c in range(lo, hi + 1):
                acc.append(c)
                yield from rec(i + 1, remaining - c, acc)
                acc.pop()

        yield from rec(0, total, [])

    # -- streams ------------------------------------------------------------

    def _emit(self, chosen: Tuple[PoolClause, ...]) -> Optional[Program]:
        bias = self.bias
        if bias.types and len(chosen) > 1:
            if not types_consistent(bias, tuple(pc.clause for pc in chosen)):
                return None
        if not bias.directions:
            return tuple(pc.clause for pc in chosen)
        active = [pc for pc in chosen if not pc.vacuous]
        if not active:
            return tuple(pc.clause for pc in chosen)
        inv_union = tuple(sorted(
            {q for pc in active for q in pc.inv_all}, key=pred_key
        ))
        for combo in itertools.product(
            *(itertools.product(("in", "out"), repeat=q.arity) for q in inv_union)
        ):
            assign = dict(zip(inv_union, combo))
            bodies = {}
            ok = True
            for pc in active:
                order = pc.orders.get(tuple(assign[q] for q in pc.inv_all))
                if order is None:
                    ok = False
                    break
                bodies[pc.uid] = order
            if ok:
                return tuple(
                    pc.clause if pc.vacuous
                    else Clause(pc.clause.head, bodies[pc.uid])
                    for pc in chosen
                )
        return None

    def _single_stream(self, level: int):
        """Single-clause programs of the given cost, with specialisation
        constraints propagated into the clause search."""
        bias = self.bias
        store = self._store
        head = bias.target
        pool = tuple(_body_pool(bias, head, ()))
        pruner = store.subsumed_by_failed
        for pc in _enumerate_clauses(bias, head, level, pool, pruner=pruner):
            self.candidates_screened += 1
            pc.uid = self._uid
            self._uid += 1
            chosen = (pc,)
            if store.violated(chosen):
                continue
            prog = self._emit(chosen)
            if prog is None:
                continue
            yield ((pc.key,), prog, chosen, store.version)

    def _group_product(self, head: Pred, costs: List[int],
                       defined: Tuple[Pred, ...]):
        """Ascending clause tuples drawing one clause per cost slot."""
        from bisect import bisect_right

        slices = {c: self._slice(head, c, defined) for c in set(costs)}
        keys = {c: [pc.key for pc in sl] for c, sl in slices.items()}

        def tagged(c, start):
            sl = slices[c]
            ks = keys[c]
            for i in range(start, len(sl)):
                yield (ks[i], c, sl[i])

        def rec(last_key, remaining):
            if not remaining:
                yield ()
                return
            distinct = sorted(set(remaining))
            if len(distinct) == 1:
                c = distinct[0]
                sl = slices[c]
                start = 0 if last_key is None else bisect_right(keys[c], last_key)
                rest = list(remaining)
                rest.remove(c)
                for i in range(start, len(sl)):
                    pc = sl[i]
                    for tail in rec(pc.key, rest):
                        yield (pc,) + tail
                return
            streams = []
            for c in distinct:
                start = 0 if last_key is None else bisect_right(keys[c], last_key)
                if start < len(slices[c]):
                    streams.append(tagged(c, start))
            for k, c, pc in heap_merge(*streams):
                rest = list(remaining)
                rest.remove(c)
                for tail in rec(k, rest):
                    yield (pc,) + tail

        yield from rec(None, list(costs))

    def _shape_stream(self, shape: _Shape):
        bias = self.bias
        store = self._store
        # group slots by head predicate, preserving head order
        groups: List[Tuple[Pred, List[int]]] = []
        for head, cost in shape.slots:
            if groups and groups[-1][0] == head:
                groups[-1][1].append(cost)
            else:
                groups.append((head, [cost]))
        needed = frozenset(shape.defined)
        # inner groups are materialized; the outermost streams lazily
        inner: List[List[tuple]] = []
        inner_inv_possible: List[frozenset] = []
        for head, costs in groups[1:]:
            combos = list(self._group_product(head, costs, shape.defined))
            inner.append(combos)
            possible = frozenset(
                q for combo in combos for pc in combo for q in pc.inv_body
            )
            inner_inv_possible.append(possible)
        if any(not combos for combos in inner):
            return
        # suffix unions for usage feasibility pruning
        suffix_possible = [frozenset()] * (len(inner) + 1)
        for i in range(len(inner) - 1, -1, -1):
            suffix_possible[i] = suffix_possible[i + 1] | inner_inv_possible[i]

        head0, costs0 = groups[0]
        for first in self._group_product(head0, costs0, shape.defined):
            used0 = frozenset(q for pc in first for q in pc.inv_body)
            if not needed <= used0 | suffix_possible[0]:
                continue

            def rec(gi, acc, used):
                if gi == len(inner):
                    self.candidates_screened += 1
                    if used != needed:
                        return
                    if not self._assembly_reachable(acc):
                        return
                    if store.violated(acc):
                        return
                    prog = self._emit(acc)
                    if prog is not None:
                        yield (tuple(pc.key for pc in acc), prog, acc,
                               store.version)
                    return
                for combo in inner[gi]:
                    used2 = used | frozenset(
                        q for pc in combo for q in pc.inv_body
                    )
                    if not needed <= used2 | suffix_possible[gi + 1]:
                        continue
                    yield from rec(gi + 1, acc + combo, used2)

            yield from rec(0, first, used0)

    @staticmethod
    def _assembly_reachable(chosen: Tuple[PoolClause, ...]) -> bool:
        if len(chosen) == 1:
            return True
        targets = [i for i, pc in enumerate(chosen)
                   if pc.head_pred.kind == TARGET]
        seen = set(targets)
        frontier = list(targets)
        while frontier:
            i = frontier.pop()
            body_preds = chosen[i].body_pred_set
            for j, pc in enumerate(chosen):
                if j not in seen and pc.head_pred in body_preds:
                    seen.add(j)
                    frontier.append(j)
        return len(seen) == len(chosen)

    def _level_stream(self, level: int):
        streams = []
        if level <= 1 + self.bias.max_body:
            streams.append(self._single_stream(level))
        for shape in self._level_shapes(level):
            streams.append(self._shape_stream(shape))
        if len(streams) == 1:
            return streams[0]
        return heap_merge(*streams, key=lambda item: item[0])

    # -- public interface -----------------------------------------------------

    def next_program(self) -> Optional[Program]:
        """Next valid program, or None once the bounded space is exhausted."""
        store = self._store
        while True:
            if self._exhausted:
                return None
            if self._iter is None:
                if self._cost > self.config.max_literals:
                    self._exhausted = True
                    return None
                self._iter = self._level_stream(self._cost)
            item = next(self._iter, None)
            if item is None:
                self._cost += 1
                self._iter = None
                continue
            _, prog, chosen, version = item
            if version != store.version:
                # constraints arrived while this item sat in the merge
                if chosen is not None and store.violated(chosen):
                    continue
                if chosen is None and store.violated_program(prog):
                    continue
            self.yielded_per_cost[self._cost] = (
                self.yielded_per_cost.get(self._cost, 0) + 1
            )
            return prog

    def add_constraint(self, con: HypothesisConstraint) -> bool:
        """Register a constraint; returns False if already registered."""
        return self._store.add(con)

    @property
    def current_cost(self) -> int:
        return self._cost

    def stats(self) -> Dict[str, object]:
        return {
            "yielded_per_cost": dict(self.yielded_per_cost),
            "candidates_screened": self.candidates_screened,
            "constraints_registered": len(self._store.registered),
        }


def new_generator(config: GeneratorConfig) -> Generator:
    return Generator(config)


def next_program(state: Generator) -> Optional[Program]:
    return state.next_program()


def add_constraint(state: Generator, con: HypothesisConstraint) -> bool:
    return state.add_constraint(con)
