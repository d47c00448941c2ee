"""Translation of external formulas into a two-block normal form.

Every formula is mapped to the shape

    EXISTS-ST [witnesses...] FORALL-ST [challenges...] MATRIX <internal>

where each witness variable has sequence type and the matrix is an
internal formula.  Internal formulas translate to themselves with empty
blocks.  The implication case threads witnesses through the
sequence-of-functions application from :mod:`nsd.terms`, and the
standardness atom becomes membership in a witnessed finite sequence.

Verification conditions close a normal form under its challenge block
after plugging in a bundle of candidate witness terms.
"""

from __future__ import annotations

from dataclasses import dataclass, field

from .terms import (
    Arrow,
    Seq,
    Term,
    Type,
    TypingContext,
    TypingError,
    Var,
    arrow_chain,
    bounded_apply,
    free_vars,
    infer_type,
)
from .formulas import (
    And,
    Exists,
    ExistsSt,
    Forall,
    ForallSt,
    Formula,
    Imp,
    Or,
    St,
    all_names_formula,
    exists_in,
    forall_in,
    is_internal,
    mem_formula,
    substitute,
)


class ArityMismatch(Exception):
    """A realizer bundle does not line up with the witness block."""


@dataclass(frozen=True)
class NormalForm:
    evars: tuple[tuple[str, Type], ...]
    uvars: tuple[tuple[str, Type], ...]
    matrix: Formula


@dataclass(frozen=True)
class RealizerBundle:
    """Closed terms intended to witness a normal form's existential block."""

    terms: tuple[Term, ...]


class _NameGen:
    """Deterministic fresh-name supply with stable per-prefix counters."""

    def __init__(self, avoid: frozenset[str]):
        self._used = set(avoid)
        self._counters: dict[str, int] = {}

    def fresh(self, prefix: str) -> str:
        n = self._counters.get(prefix, 0)
        while True:
            n += 1
            name = f"{prefix}{n}"
            if name not in self._used:
                break
        self._counters[prefix] = n
        self._used.add(name)
        return name


def dst(f: Formula, ctx: TypingContext | None = None) -> NormalForm:
    """Translate ``f`` into its two-block normal form.

    ``ctx`` types any free variables of ``f`` (needed when a standardness
    atom mentions them).  The result is deterministic: witness names are
    drawn from stable prefixes x/U/X/Y, challenge names from y.
    """
    ctx = dict(ctx or {})
    gen = _NameGen(all_names_formula(f) | frozenset(ctx))
    evars, uvars, matrix = _dst(f, ctx, gen)
    return NormalForm(tuple(evars), tuple(uvars), matrix)


def _dst(f: Formula, ctx: dict, gen: _NameGen):
    if is_internal(f):
        return [], [], f

    if isinstance(f, St):
        sigma = infer_type(ctx, f.arg)
        x = gen.fresh("x")
        return [(x, Seq(sigma))], [], mem_formula(sigma, f.arg, Var(x))

    if isinstance(f, (And, Or)):
        ea, ua, ma = _dst(f.left, ctx, gen)
        eb, ub, mb = _dst(f.right, ctx, gen)
        return ea + eb, ua + ub, type(f)(ma, mb)

    if isinstance(f, Imp):
        ea, ua, ma = _dst(f.left, ctx, gen)
        eb, ub, mb = _dst(f.right, ctx, gen)
        return _imp_case(ea, ua, ma, eb, ub, mb, gen)

    if isinstance(f, (Forall, Exists, ForallSt, ExistsSt)):
        var, var_type, body = f.var, f.var_type, f.body
        if var in ctx:
            renamed = gen.fresh(var)
            body = substitute(body, var, Var(renamed))
            var = renamed
        inner_ctx = {**ctx, var: var_type}

        if isinstance(f, Forall):
            e, u, m = _dst(body, inner_ctx, gen)
            return e, u, Forall(var, var_type, m)

        if isinstance(f, Exists):
            e, u, m = _dst(body, inner_ctx, gen)
            u2, m2 = _lift_challenges(u, m, gen)
            return e, u2, Exists(var, var_type, m2)

        if isinstance(f, ForallSt):
            e, u, m = _dst(body, inner_ctx, gen)
            e2 = []
            for xname, xty in e:
                lifted = gen.fresh("X")
                elem = Arrow(var_type, xty)
                e2.append((lifted, Seq(elem)))
                m = substitute(
                    m, xname, bounded_apply(Var(lifted), [Var(var)], elem_type=elem)
                )
            return e2, [(var, var_type)] + u, m

        # ExistsSt: witness a finite candidate pool for the bound variable.
        e, u, m = _dst(body, inner_ctx, gen)
        pool = gen.fresh("x")
        u2, m2 = _lift_challenges(u, m, gen)
        matrix = exists_in(var, var_type, Var(pool), m2)
        return e + [(pool, Seq(var_type))], u2, matrix

    raise TypeError(f"unknown formula {f!r}")


def _lift_challenges(uvars, matrix, gen):
    """Replace each challenge by a finite pool it now ranges over."""
    pairs = []
    lifted = []
    for yname, yty in uvars:
        pool = gen.fresh("y")
        pairs.append((yname, yty, pool))
        lifted.append((pool, Seq(yty)))
    for yname, yty, pool in reversed(pairs):
        matrix = forall_in(yname, yty, Var(pool), matrix)
    return lifted, matrix


def _imp_case(ea, ua, ma, eb, ub, mb, gen):
    premise_wit_types = [ty for _, ty in ea]
    concl_chal_types = [ty for _, ty in ub]
    premise_wit_vars = [Var(n) for n, _ in ea]
    concl_chal_vars = [Var(n) for n, _ in ub]

    new_evars: list[tuple[str, Type]] = []

    conclusion = mb
    for uname, uty in eb:
        fwd = gen.fresh("U")
        elem = arrow_chain(premise_wit_types, uty)
        new_evars.append((fwd, Seq(elem)))
        conclusion = substitute(
            conclusion,
            uname,
            bounded_apply(Var(fwd), premise_wit_vars, elem_type=elem),
        )

    bound_pools = []
    for yname, yty in ua:
        back = gen.fresh("Y")
        elem = arrow_chain(premise_wit_types + concl_chal_types, Seq(yty))
        new_evars.append((back, Seq(elem)))
        bound_pools.append((yname, yty, back, elem))

    premise = ma
    for yname, yty, back, elem in reversed(bound_pools):
        pool = bounded_apply(
            Var(back), premise_wit_vars + concl_chal_vars, elem_type=elem
        )
        premise = forall_in(yname, yty, pool, premise)

    return new_evars, list(ea) + list(ub), Imp(premise, conclusion)


def verification_condition(nf: NormalForm, bundle: RealizerBundle) -> Formula:
    """Close the matrix under the challenge block with the bundle plugged in.

    The bundle must supply one closed, type-correct term per witness
    variable; the result is internal and closed whenever the translated
    formula was closed.
    """
    if len(bundle.terms) != len(nf.evars):
        raise ArityMismatch(
            f"bundle has {len(bundle.terms)} terms for {len(nf.evars)} witnesses"
        )
    matrix = nf.matrix
    for (name, ty), t in zip(nf.evars, bundle.terms):
        if free_vars(t):
            raise TypingError(f"realizer for {name!r} is not closed", t)
        got = infer_type({}, t)
        if got != ty:
            raise TypingError(
                f"realizer for {name!r} has type {got}, expected {ty}", t
            )
        matrix = substitute(matrix, name, t)
    for name, ty in reversed(nf.uvars):
        matrix = Forall(name, ty, matrix)
    return matrix
