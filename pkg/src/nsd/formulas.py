"""Formula language over the term kernel.

Formulas come in two layers: the internal layer (equations, declared
decidable predicates, connectives, and plain quantifiers) and the
external layer, which adds a standardness predicate ``st`` together with
quantifiers relativized to standard objects.  Equality above the base
type is not primitive; it is unfolded pointwise/extensionally by
:func:`eq_formula`, and membership in a finite sequence by
:func:`mem_formula`.

This module also generates instances of the axiom and principle schemas
used throughout the package (external-quantifier definitions,
standardness closure, external induction, overspill, countable
saturation and choice variants, idealization, saturation, and numerical
transfer).
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Mapping, Sequence

from .terms import (
    NAT,
    App,
    Arrow,
    Get,
    Lam,
    Len,
    Seq,
    Succ,
    Term,
    Type,
    TypingContext,
    TypingError,
    Var,
    Zero,
    free_vars,
    all_var_names,
    fresh_name,
    infer_type,
    normalize,
    subst_term,
    zero_term,
)
from . import terms as _terms


class SchemaParamError(Exception):
    """A schema hole was filled with an inadmissible parameter."""


# ---------------------------------------------------------------------------
# Syntax
# ---------------------------------------------------------------------------


@dataclass(frozen=True, slots=True)
class Formula:
    pass


@dataclass(frozen=True, slots=True)
class AtomEq(Formula):
    lhs: Term
    rhs: Term


@dataclass(frozen=True, slots=True)
class AtomPred(Formula):
    name: str
    args: tuple[Term, ...]


@dataclass(frozen=True, slots=True)
class FalseF(Formula):
    pass


@dataclass(frozen=True, slots=True)
class And(Formula):
    left: Formula
    right: Formula


@dataclass(frozen=True, slots=True)
class Or(Formula):
    left: Formula
    right: Formula


@dataclass(frozen=True, slots=True)
class Imp(Formula):
    left: Formula
    right: Formula


@dataclass(frozen=True, slots=True)
class Forall(Formula):
    var: str
    var_type: Type
    body: Formula


@dataclass(frozen=True, slots=True)
class Exists(Formula):
    var: str
    var_type: Type
    body: Formula


@dataclass(frozen=True, slots=True)
class ForallSt(Formula):
    var: str
    var_type: Type
    body: Formula


@dataclass(frozen=True, slots=True)
class ExistsSt(Formula):
    var: str
    var_type: Type
    body: Formula


@dataclass(frozen=True, slots=True)
class St(Formula):
    arg: Term


_BINDERS = (Forall, Exists, ForallSt, ExistsSt)


@dataclass(frozen=True)
class PredicateDecl:
    """A decidable predicate symbol over numeral arguments."""

    name: str
    arg_types: tuple[Type, ...]
    interp: Callable[..., bool]


LT_NAME = "lt"
LT_DECL = PredicateDecl(LT_NAME, (NAT, NAT), lambda a, b: a < b)
BUILTIN_PREDICATES: Mapping[str, PredicateDecl] = {LT_NAME: LT_DECL}


def not_f(f: Formula) -> Formula:
    return Imp(f, FalseF())


def iff_f(a: Formula, b: Formula) -> Formula:
    return And(Imp(a, b), Imp(b, a))


def lt_atom(a: Term, b: Term) -> Formula:
    return AtomPred(LT_NAME, (a, b))


# ---------------------------------------------------------------------------
# Traversal utilities
# ---------------------------------------------------------------------------


def formula_terms(f: Formula) -> tuple[Term, ...]:
    if isinstance(f, AtomEq):
        return (f.lhs, f.rhs)
    if isinstance(f, AtomPred):
        return f.args
    if isinstance(f, St):
        return (f.arg,)
    return ()


def subformulas(f: Formula) -> tuple[Formula, ...]:
    if isinstance(f, (And, Or, Imp)):
        return (f.left, f.right)
    if isinstance(f, _BINDERS):
        return (f.body,)
    return ()


def is_internal(f: Formula) -> bool:
    """True when no standardness predicate or external quantifier occurs."""
    if isinstance(f, (St, ForallSt, ExistsSt)):
        return False
    return all(is_internal(g) for g in subformulas(f))


def free_vars_formula(f: Formula) -> frozenset[str]:
    if isinstance(f, _BINDERS):
        return free_vars_formula(f.body) - {f.var}
    out: frozenset[str] = frozenset()
    for t in formula_terms(f):
        out |= free_vars(t)
    for g in subformulas(f):
        out |= free_vars_formula(g)
    return out


def all_names_formula(f: Formula) -> frozenset[str]:
    out: frozenset[str] = frozenset()
    if isinstance(f, _BINDERS):
        out |= {f.var}
    for t in formula_terms(f):
        out |= all_var_names(t)
    for g in subformulas(f):
        out |= all_names_formula(g)
    return out


def _map_terms(f: Formula, fn: Callable[[Term], Term]) -> Formula:
    if isinstance(f, AtomEq):
        return AtomEq(fn(f.lhs), fn(f.rhs))
    if isinstance(f, AtomPred):
        return AtomPred(f.name, tuple(fn(a) for a in f.args))
    if isinstance(f, St):
        return St(fn(f.arg))
    if isinstance(f, (And, Or, Imp)):
        return type(f)(_map_terms(f.left, fn), _map_terms(f.right, fn))
    if isinstance(f, _BINDERS):
        return type(f)(f.var, f.var_type, _map_terms(f.body, fn))
    return f


def substitute(f: Formula, name: str, repl: Term) -> Formula:
    """Capture-avoiding substitution of ``repl`` for free ``name`` in ``f``."""
    if name not in free_vars_formula(f):
        return f
    if isinstance(f, _BINDERS):
        if f.var == name:
            return f
        if f.var in free_vars(repl):
            avoid = free_vars(repl) | free_vars_formula(f.body) | {name}
            new = fresh_name(f.var, avoid)
            body = substitute(f.body, f.var, Var(new))
            return type(f)(new, f.var_type, substitute(body, name, repl))
        return type(f)(f.var, f.var_type, substitute(f.body, name, repl))
    if isinstance(f, (And, Or, Imp)):
        return type(f)(substitute(f.left, name, repl), substitute(f.right, name, repl))
    return _map_terms(f, lambda t: subst_term(t, name, repl))


def substitute_many(f: Formula, env: Mapping[str, Term]) -> Formula:
    for name, val in env.items():
        f = substitute(f, name, val)
    return f


def alpha_eq_formula(a: Formula, b: Formula) -> bool:
    return _aeq(a, b, {}, {}, 0)


def _aeq(a: Formula, b: Formula, ra: dict, rb: dict, depth: int) -> bool:
    if type(a) is not type(b):
        return False
    if isinstance(a, _BINDERS):
        if a.var_type != b.var_type:
            return False
        ra2 = dict(ra)
        rb2 = dict(rb)
        ra2[a.var] = depth
        rb2[b.var] = depth
        return _aeq(a.body, b.body, ra2, rb2, depth + 1)
    if isinstance(a, (And, Or, Imp)):
        return _aeq(a.left, b.left, ra, rb, depth) and _aeq(
            a.right, b.right, ra, rb, depth
        )
    ta = formula_terms(a)
    tb = formula_terms(b)
    if isinstance(a, AtomPred) and a.name != b.name:
        return False
    if len(ta) != len(tb):
        return False
    return all(_term_aeq(x, y, ra, rb, depth) for x, y in zip(ta, tb))


def _term_aeq(a: Term, b: Term, ra: dict, rb: dict, depth: int) -> bool:
    # Terms may refer to formula-bound variables, so thread the same maps.
    return _terms._aeq(a, b, ra, rb, depth)


def normalize_formula(f: Formula, fuel: int = _terms.DEFAULT_FUEL) -> Formula:
    """Normalize every embedded term (open terms reduce as far as they can)."""
    return _map_terms_rec(f, lambda t: normalize(t, fuel))


def _map_terms_rec(f: Formula, fn: Callable[[Term], Term]) -> Formula:
    if isinstance(f, (And, Or, Imp)):
        return type(f)(_map_terms_rec(f.left, fn), _map_terms_rec(f.right, fn))
    if isinstance(f, _BINDERS):
        return type(f)(f.var, f.var_type, _map_terms_rec(f.body, fn))
    return _map_terms(f, fn)


def check_formula(
    f: Formula,
    ctx: TypingContext | None = None,
    predicates: Mapping[str, PredicateDecl] | None = None,
) -> None:
    """Type-check every embedded term; raise on ill-typed atoms.

    Predicate arguments must be naturals; when a declaration map is given
    the arity is enforced against it as well.
    """
    ctx = dict(ctx or {})
    if isinstance(f, AtomEq):
        for t in (f.lhs, f.rhs):
            got = infer_type(ctx, t)
            if got != NAT:
                raise TypingError(f"equation side has type {got}", t)
        return
    if isinstance(f, AtomPred):
        decls = dict(BUILTIN_PREDICATES)
        if predicates:
            decls.update(predicates)
        decl = decls.get(f.name)
        if decl is not None and len(decl.arg_types) != len(f.args):
            raise TypingError(
                f"predicate {f.name!r} expects {len(decl.arg_types)} arguments"
            )
        for t in f.args:
            got = infer_type(ctx, t)
            if got != NAT:
                raise TypingError(f"predicate argument has type {got}", t)
        return
    if isinstance(f, St):
        infer_type(ctx, f.arg)
        return
    if isinstance(f, (And, Or, Imp)):
        check_formula(f.left, ctx, predicates)
        check_formula(f.right, ctx, predicates)
        return
    if isinstance(f, _BINDERS):
        check_formula(f.body, {**ctx, f.var: f.var_type}, predicates)
        return


# ---------------------------------------------------------------------------
# Derived equality, membership, bounded quantifiers
# ---------------------------------------------------------------------------


def eq_formula(ty: Type, a: Term, b: Term) -> Formula:
    """Pointwise/extensional equality of ``a`` and ``b`` at type ``ty``."""
    if isinstance(ty, _terms.Nat):
        return AtomEq(a, b)
    if isinstance(ty, Arrow):
        avoid = free_vars(a) | free_vars(b)
        v = fresh_name("v", avoid)
        return Forall(
            v, ty.dom, eq_formula(ty.cod, App(a, Var(v)), App(b, Var(v)))
        )
    if isinstance(ty, Seq):
        avoid = free_vars(a) | free_vars(b)
        i = fresh_name("i", avoid)
        d = zero_term(ty.elem)
        pointwise = eq_formula(
            ty.elem, Get(a, Var(i), d), Get(b, Var(i), d)
        )
        return And(
            AtomEq(Len(a), Len(b)),
            Forall(i, NAT, Imp(lt_atom(Var(i), Len(a)), pointwise)),
        )
    raise TypingError(f"no equality at type {ty}")


def mem_formula(ty: Type, x: Term, s: Term) -> Formula:
    """``x`` equals one of the components of the sequence ``s``."""
    avoid = free_vars(x) | free_vars(s)
    i = fresh_name("i", avoid)
    return Exists(
        i,
        NAT,
        And(
            lt_atom(Var(i), Len(s)),
            eq_formula(ty, x, Get(s, Var(i), zero_term(ty))),
        ),
    )


def forall_in(var: str, ty: Type, s: Term, body: Formula) -> Formula:
    """Universal quantification over the components of ``s``."""
    return Forall(var, ty, Imp(mem_formula(ty, Var(var), s), body))


def exists_in(var: str, ty: Type, s: Term, body: Formula) -> Formula:
    """Existential quantification over the components of ``s``."""
    return Exists(var, ty, And(mem_formula(ty, Var(var), s), body))


# ---------------------------------------------------------------------------
# Axiom and principle schemas
# ---------------------------------------------------------------------------

SCHEMAS = (
    "EQ",
    "Tst",
    "IAst",
    "IA",
    "OS0",
    "CSAT",
    "CSAT0",
    "I",
    "HACint",
    "AC0st",
    "AC0int",
    "SAT",
    "NPTP",
)


def _require_internal(schema: str, f: Formula) -> None:
    if not is_internal(f):
        raise SchemaParamError(f"{schema} takes an internal formula parameter")


def _fresh_avoiding(base: str, *formulas: Formula) -> str:
    avoid: set[str] = set()
    for f in formulas:
        avoid |= all_names_formula(f)
    return fresh_name(base, avoid)


def axiom_instance(schema: str, **params) -> Formula:
    """Build the closed instance of a named schema.

    Schema holes are passed as keyword arguments; every schema has a
    distinguished variable or two plus a body formula, and some fix types.
    Internal-only schemas reject external parameters with
    :class:`SchemaParamError`.
    """
    if schema == "EQ":
        var = params.get("var", "x")
        var_type = params.get("var_type", NAT)
        body = params["body"]
        quantifier = params.get("quantifier", "forall")
        if quantifier == "forall":
            return iff_f(
                ForallSt(var, var_type, body),
                Forall(var, var_type, Imp(St(Var(var)), body)),
            )
        if quantifier == "exists":
            return iff_f(
                ExistsSt(var, var_type, body),
                Exists(var, var_type, And(St(Var(var)), body)),
            )
        raise SchemaParamError("EQ quantifier must be 'forall' or 'exists'")

    if schema == "Tst":
        part = params.get("part", 1)
        if part == 1:
            ty = params.get("var_type", NAT)
            x, y = "x", "y"
            return Forall(
                x,
                ty,
                Forall(
                    y,
                    ty,
                    Imp(
                        And(St(Var(x)), eq_formula(ty, Var(x), Var(y))),
                        St(Var(y)),
                    ),
                ),
            )
        if part == 2:
            t = params["term"]
            if free_vars(t):
                raise SchemaParamError("standardness of terms requires a closed term")
            return St(t)
        if part == 3:
            dom = params.get("dom", NAT)
            cod = params.get("cod", NAT)
            f, x = "f", "x"
            return Forall(
                f,
                Arrow(dom, cod),
                Forall(
                    x,
                    dom,
                    Imp(
                        And(St(Var(f)), St(Var(x))),
                        St(App(Var(f), Var(x))),
                    ),
                ),
            )
        raise SchemaParamError("Tst part must be 1, 2 or 3")

    if schema == "IAst":
        var = params.get("var", "x")
        body = params["body"]
        step = ForallSt(var, NAT, Imp(body, substitute(body, var, Succ(Var(var)))))
        return Imp(
            And(substitute(body, var, Zero()), step),
            ForallSt(var, NAT, body),
        )

    if schema == "IA":
        var = params.get("var", "x")
        body = params["body"]
        _require_internal(schema, body)
        step = Forall(var, NAT, Imp(body, substitute(body, var, Succ(Var(var)))))
        return Imp(
            And(substitute(body, var, Zero()), step),
            Forall(var, NAT, body),
        )

    if schema == "OS0":
        var = params.get("var", "x")
        body = params["body"]
        _require_internal(schema, body)
        return Imp(
            ForallSt(var, NAT, body),
            Exists(var, NAT, And(not_f(St(Var(var))), body)),
        )

    if schema in ("CSAT", "CSAT0"):
        n = params.get("n", "n")
        x = params.get("x", "x")
        sigma = NAT if schema == "CSAT0" else params.get("sigma", NAT)
        body = params["body"]
        f = _fresh_avoiding("f", body)
        return Imp(
            ForallSt(n, NAT, Exists(x, sigma, body)),
            Exists(
                f,
                Arrow(NAT, sigma),
                ForallSt(n, NAT, substitute(body, x, App(Var(f), Var(n)))),
            ),
        )

    if schema == "I":
        var = params.get("var", "x")
        var_type = params.get("var_type", NAT)
        wit = params.get("wit", "y")
        wit_type = params.get("wit_type", NAT)
        body = params["body"]
        _require_internal(schema, body)
        xs = _fresh_avoiding(var + "s", body)
        return Imp(
            ForallSt(
                xs,
                Seq(var_type),
                Exists(wit, wit_type, forall_in(var, var_type, Var(xs), body)),
            ),
            Exists(wit, wit_type, ForallSt(var, var_type, body)),
        )

    if schema == "HACint":
        var = params.get("var", "x")
        var_type = params.get("var_type", NAT)
        wit = params.get("wit", "y")
        wit_type = params.get("wit_type", NAT)
        body = params["body"]
        _require_internal(schema, body)
        fn = _fresh_avoiding("F", body)
        return Imp(
            ForallSt(var, var_type, ExistsSt(wit, wit_type, body)),
            ExistsSt(
                fn,
                Arrow(var_type, Seq(wit_type)),
                ForallSt(
                    var,
                    var_type,
                    exists_in(wit, wit_type, App(Var(fn), Var(var)), body),
                ),
            ),
        )

    if schema in ("AC0st", "AC0int"):
        n = params.get("n", "n")
        x = params.get("x", "x")
        sigma = params.get("sigma", NAT)
        body = params["body"]
        if schema == "AC0int":
            _require_internal(schema, body)
        f = _fresh_avoiding("f", body)
        return Imp(
            ForallSt(n, NAT, ExistsSt(x, sigma, body)),
            ExistsSt(
                f,
                Arrow(NAT, sigma),
                ForallSt(n, NAT, substitute(body, x, App(Var(f), Var(n)))),
            ),
        )

    if schema == "SAT":
        var = params.get("var", "x")
        var_type = params.get("var_type", NAT)
        wit = params.get("wit", "y")
        wit_type = params.get("wit_type", NAT)
        body = params["body"]
        f = _fresh_avoiding("f", body)
        return Imp(
            ForallSt(var, var_type, Exists(wit, wit_type, body)),
            Exists(
                f,
                Arrow(var_type, wit_type),
                ForallSt(
                    var,
                    var_type,
                    substitute(body, wit, App(Var(f), Var(var))),
                ),
            ),
        )

    if schema == "NPTP":
        var = params.get("var", "x")
        var_type = params.get("var_type", NAT)
        nat_params: Sequence[str] = params.get("params", ())
        body = params["body"]
        _require_internal(schema, body)
        allowed = {var, *nat_params}
        extra = free_vars_formula(body) - allowed
        if extra:
            raise SchemaParamError(
                f"NPTP body may only mention {sorted(allowed)}, found {sorted(extra)}"
            )
        out: Formula = Imp(
            ForallSt(var, var_type, body), Forall(var, var_type, body)
        )
        for p in reversed(list(nat_params)):
            out = ForallSt(p, NAT, out)
        return out

    raise SchemaParamError(f"unknown schema {schema!r}")
