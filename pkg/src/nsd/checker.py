"""Finite-instance evaluation of internal formulas and realizer checking.

The evaluator is classical and works over terminating term normalization.
Quantifiers are handled by scope:

* quantifiers guarded by a membership formula enumerate the actual
  components of the bounding sequence (exact);
* quantifiers over naturals guarded by the built-in ``lt`` predicate
  enumerate the stated range (exact);
* unguarded quantifiers over naturals enumerate up to the instance cap
  and can only ever certify a bounded verdict;
* quantifiers at higher types need an explicit generator set, otherwise
  the result is unknown.

Reports distinguish exhaustive passes from capped ones, and a failing
check always carries the falsifying assignment.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from typing import Mapping

from .terms import (
    DEFAULT_FUEL,
    NAT,
    Len,
    Term,
    Type,
    TypingError,
    Var,
    free_vars,
    infer_type,
    nat_value,
    normalize_count,
    numeral,
    seq_components,
    subst_many,
)
from .formulas import (
    And,
    AtomEq,
    AtomPred,
    BUILTIN_PREDICATES,
    Exists,
    FalseF,
    Forall,
    Formula,
    Imp,
    LT_NAME,
    Or,
    PredicateDecl,
    alpha_eq_formula,
    free_vars_formula,
    is_internal,
    mem_formula,
    substitute,
)
from .dialectica import ArityMismatch, NormalForm, RealizerBundle


class CheckerError(Exception):
    pass


class UnknownResult(CheckerError):
    """Evaluation left the decidable fragment; ``reason`` says where."""

    def __init__(self, reason: str):
        super().__init__(reason)
        self.reason = reason


@dataclass
class Instance:
    """Finite test data: generator sets, predicate tables, caps, fuel.

    Generator sets are keyed by variable name and apply both to the
    challenge block of a normal form and to internal quantifiers at
    higher types.
    """

    generators: dict[str, tuple[Term, ...]] = field(default_factory=dict)
    predicates: dict[str, PredicateDecl] = field(default_factory=dict)
    cap: int = 8
    fuel: int = DEFAULT_FUEL


@dataclass
class Report:
    verdict: str  # "pass" | "bounded_pass" | "fail" | "unknown"
    counterexample: dict[str, Term] | None
    combinations: int
    steps: int
    cap_used: int | None = None
    reason: str | None = None


class _Stats:
    __slots__ = ("steps", "capped")

    def __init__(self) -> None:
        self.steps = 0
        self.capped = False


def eval_internal(
    f: Formula, env: Mapping[str, Term], inst: Instance
) -> bool:
    """Evaluate an internal formula under closed bindings for its free variables.

    Raises :class:`UnknownResult` outside the decidable fragment and
    propagates :class:`FuelExhausted` from term normalization.
    """
    if not is_internal(f):
        raise CheckerError("evaluator only accepts internal formulas")
    missing = free_vars_formula(f) - set(env)
    if missing:
        raise CheckerError(f"unbound formula variables: {sorted(missing)}")
    value, _exact = _eval(f, dict(env), inst, _Stats())
    return value


def _eval(f: Formula, env: dict, inst: Instance, stats: _Stats):
    if isinstance(f, FalseF):
        return False, True
    if isinstance(f, AtomEq):
        a = _eval_nat(f.lhs, env, inst, stats)
        b = _eval_nat(f.rhs, env, inst, stats)
        return a == b, True
    if isinstance(f, AtomPred):
        decl = inst.predicates.get(f.name) or BUILTIN_PREDICATES.get(f.name)
        if decl is None:
            raise UnknownResult(f"no interpretation for predicate {f.name!r}")
        args = [_eval_nat(t, env, inst, stats) for t in f.args]
        return bool(decl.interp(*args)), True
    if isinstance(f, And):
        va, ea = _eval(f.left, env, inst, stats)
        vb, eb = _eval(f.right, env, inst, stats)
        return va and vb, (ea and eb) or (ea and not va) or (eb and not vb)
    if isinstance(f, Or):
        va, ea = _eval(f.left, env, inst, stats)
        vb, eb = _eval(f.right, env, inst, stats)
        return va or vb, (ea and eb) or (ea and va) or (eb and vb)
    if isinstance(f, Imp):
        va, ea = _eval(f.left, env, inst, stats)
        vb, eb = _eval(f.right, env, inst, stats)
        return (not va) or vb, (ea and eb) or (ea and not va) or (eb and vb)
    if isinstance(f, Forall):
        return _eval_forall(f, env, inst, stats)
    if isinstance(f, Exists):
        return _eval_exists(f, env, inst, stats)
    raise CheckerError(f"external construct reached the evaluator: {f!r}")


def _eval_nat(t: Term, env: dict, inst: Instance, stats: _Stats) -> int:
    closed = subst_many(t, {k: v for k, v in env.items() if k in free_vars(t)})
    out, spent = normalize_count(closed, inst.fuel)
    stats.steps += spent
    v = nat_value(out)
    if v is None:
        raise CheckerError(f"term did not reduce to a numeral: {out!r}")
    return v


def _eval_seq(t: Term, env: dict, inst: Instance, stats: _Stats) -> list[Term]:
    closed = subst_many(t, {k: v for k, v in env.items() if k in free_vars(t)})
    out, spent = normalize_count(closed, inst.fuel)
    stats.steps += spent
    comps = seq_components(out)
    if comps is None:
        raise CheckerError(f"term did not reduce to a sequence literal: {out!r}")
    return comps


def _match_mem_guard(var: str, var_type: Type, guard: Formula) -> Term | None:
    """Recognize ``guard`` as membership of ``var`` in some sequence.

    The candidate bound is extracted syntactically, then confirmed by
    rebuilding the membership formula and comparing up to renaming, so
    only genuine membership guards are enumerated component-wise.
    """
    if not isinstance(guard, Exists) or guard.var_type != NAT:
        return None
    body = guard.body
    if not isinstance(body, And):
        return None
    lt = body.left
    if not (isinstance(lt, AtomPred) and lt.name == LT_NAME and len(lt.args) == 2):
        return None
    if lt.args[0] != Var(guard.var):
        return None
    if not isinstance(lt.args[1], Len):
        return None
    s = lt.args[1].seq
    if var in free_vars(s) or guard.var in free_vars(s):
        return None
    if alpha_eq_formula(guard, mem_formula(var_type, Var(var), s)):
        return s
    return None


def _match_lt_guard(var: str, guard: Formula) -> Term | None:
    if not (
        isinstance(guard, AtomPred)
        and guard.name == LT_NAME
        and len(guard.args) == 2
        and guard.args[0] == Var(var)
        and var not in free_vars(guard.args[1])
    ):
        return None
    return guard.args[1]


def _eval_forall(f: Forall, env: dict, inst: Instance, stats: _Stats):
    if isinstance(f.body, Imp):
        bound = _match_mem_guard(f.var, f.var_type, f.body.left)
        if bound is not None:
            comps = _eval_seq(bound, env, inst, stats)
            return _fold_all(f.body.right, f.var, comps, env, inst, stats)
        if f.var_type == NAT:
            limit = _match_lt_guard(f.var, f.body.left)
            if limit is not None:
                n = _eval_nat(limit, env, inst, stats)
                vals = [numeral(i) for i in range(n)]
                return _fold_all(f.body.right, f.var, vals, env, inst, stats)
    if f.var_type == NAT:
        vals = [numeral(i) for i in range(inst.cap)]
        value, exact = _fold_all(f.body, f.var, vals, env, inst, stats)
        if value:
            stats.capped = True
            return True, False  # cannot exhaust the naturals
        return False, exact
    gens = inst.generators.get(f.var)
    if gens is not None:
        value, exact = _fold_all(f.body, f.var, list(gens), env, inst, stats)
        if value:
            return True, False  # generator sets under-approximate the type
        return False, exact
    raise UnknownResult(
        f"universal quantifier over {f.var_type} for {f.var!r} has no generator set"
    )


def _eval_exists(f: Exists, env: dict, inst: Instance, stats: _Stats):
    if isinstance(f.body, And):
        bound = _match_mem_guard(f.var, f.var_type, f.body.left)
        if bound is not None:
            comps = _eval_seq(bound, env, inst, stats)
            return _fold_any(f.body.right, f.var, comps, env, inst, stats)
        if f.var_type == NAT:
            limit = _match_lt_guard(f.var, f.body.left)
            if limit is not None:
                n = _eval_nat(limit, env, inst, stats)
                vals = [numeral(i) for i in range(n)]
                return _fold_any(f.body.right, f.var, vals, env, inst, stats)
    if f.var_type == NAT:
        vals = [numeral(i) for i in range(inst.cap)]
        value, exact = _fold_any(f.body, f.var, vals, env, inst, stats)
        if not value:
            stats.capped = True
            return False, False
        return True, exact
    gens = inst.generators.get(f.var)
    if gens is not None:
        value, exact = _fold_any(f.body, f.var, list(gens), env, inst, stats)
        if not value:
            return False, False
        return True, exact
    raise UnknownResult(
        f"existential quantifier over {f.var_type} for {f.var!r} has no generator set"
    )


def _fold_all(body: Formula, var: str, vals, env: dict, inst: Instance, stats: _Stats):
    all_exact = True
    for v in vals:
        env2 = dict(env)
        env2[var] = v
        value, exact = _eval(body, env2, inst, stats)
        if not value:
            return False, exact
        all_exact = all_exact and exact
    return True, all_exact


def _fold_any(body: Formula, var: str, vals, env: dict, inst: Instance, stats: _Stats):
    for v in vals:
        env2 = dict(env)
        env2[var] = v
        value, exact = _eval(body, env2, inst, stats)
        if value:
            return True, exact
    return False, True


def check_realizer(
    nf: NormalForm, bundle: RealizerBundle, inst: Instance
) -> Report:
    """Evaluate the matrix on every combination drawn from the generators.

    A pass means the matrix held on the entire finite product; a capped
    internal quantifier anywhere downgrades it to a bounded pass.  The
    first falsifying assignment is reported in lexicographic combination
    order.
    """
    if len(bundle.terms) != len(nf.evars):
        raise ArityMismatch(
            f"bundle has {len(bundle.terms)} terms for {len(nf.evars)} witnesses"
        )
    matrix = nf.matrix
    for (name, ty), t in zip(nf.evars, bundle.terms):
        got = infer_type({}, t)
        if got != ty:
            raise TypingError(f"realizer for {name!r} has type {got}, expected {ty}", t)
        matrix = substitute(matrix, name, t)

    names = [n for n, _ in nf.uvars]
    for n, ty in nf.uvars:
        if n not in inst.generators:
            raise CheckerError(f"no generator set for challenge variable {n!r}")
    gens = [inst.generators[n] for n in names]

    stats = _Stats()
    evaluated = 0
    all_exact = True
    for combo in itertools.product(*gens):
        env = dict(zip(names, combo))
        evaluated += 1
        try:
            value, exact = _eval(matrix, env, inst, stats)
        except UnknownResult as u:
            return Report(
                "unknown", None, evaluated, stats.steps, reason=u.reason
            )
        if not value:
            return Report("fail", env, evaluated, stats.steps)
        all_exact = all_exact and exact
    if all_exact:
        return Report("pass", None, evaluated, stats.steps)
    return Report("bounded_pass", None, evaluated, stats.steps, cap_used=inst.cap)


def check_closed(f: Formula, inst: Instance) -> Report:
    """Check a closed internal formula as a degenerate normal form."""
    nf = NormalForm((), (), f)
    return check_realizer(nf, RealizerBundle(()), inst)
