"""Typed term kernel: naturals, functions, and finite sequences.

The calculus is a simply typed lambda calculus over the base type of
naturals, extended with a primitive recursor, a finite-sequence type
former with its own recursor, total length/indexing/concatenation
operations, and a bar-recursion constant.  Normalization is normal-order
(leftmost-outermost) and fuel-bounded; every reduction rule fires
deterministically, so normal forms are unique and stable under renaming
of bound variables.

All values are immutable; nothing in this module keeps shared mutable
state, so concurrent use is safe.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Mapping, Sequence

DEFAULT_FUEL = 1_000_000


class KernelError(Exception):
    """Base class for kernel failures."""


class TypingError(KernelError):
    """A term failed type inference; ``term`` is the offending subterm."""

    def __init__(self, message: str, term: "Term | None" = None):
        super().__init__(message)
        self.term = term


class UnboundVariable(TypingError):
    pass


class NonFunctionApplication(TypingError):
    pass


class ArgumentMismatch(TypingError):
    pass


class FuelExhausted(KernelError):
    """Normalization ran out of reduction steps."""


# ---------------------------------------------------------------------------
# Types
# ---------------------------------------------------------------------------


@dataclass(frozen=True, slots=True)
class Type:
    pass


@dataclass(frozen=True, slots=True)
class Nat(Type):
    pass


@dataclass(frozen=True, slots=True)
class Arrow(Type):
    dom: Type
    cod: Type


@dataclass(frozen=True, slots=True)
class Seq(Type):
    elem: Type


NAT = Nat()


def arrow_chain(args: Sequence[Type], result: Type) -> Type:
    """Right-fold ``args`` into a curried arrow ending in ``result``."""
    ty = result
    for a in reversed(args):
        ty = Arrow(a, ty)
    return ty


def type_order(ty: Type) -> int:
    """Arrow nesting depth; naturals and their sequences have order 0."""
    if isinstance(ty, Arrow):
        return max(type_order(ty.dom) + 1, type_order(ty.cod))
    if isinstance(ty, Seq):
        return type_order(ty.elem)
    return 0


# ---------------------------------------------------------------------------
# Terms
# ---------------------------------------------------------------------------


@dataclass(frozen=True, slots=True)
class Term:
    pass


@dataclass(frozen=True, slots=True)
class Var(Term):
    name: str


@dataclass(frozen=True, slots=True)
class Zero(Term):
    pass


@dataclass(frozen=True, slots=True)
class Succ(Term):
    arg: Term


@dataclass(frozen=True, slots=True)
class NatRec(Term):
    """Recursor on naturals: base at zero, ``step n rec`` at a successor."""

    base: Term
    step: Term
    scrutinee: Term


@dataclass(frozen=True, slots=True)
class Lam(Term):
    var: str
    var_type: Type
    body: Term


@dataclass(frozen=True, slots=True)
class App(Term):
    fn: Term
    arg: Term


@dataclass(frozen=True, slots=True)
class EmptySeq(Term):
    elem_type: Type


@dataclass(frozen=True, slots=True)
class Snoc(Term):
    """Append one element at the end of a sequence."""

    seq: Term
    elem: Term


@dataclass(frozen=True, slots=True)
class SeqRec(Term):
    """Recursor on sequences: base at empty, ``step prefix last rec`` otherwise."""

    base: Term
    step: Term
    scrutinee: Term


@dataclass(frozen=True, slots=True)
class Len(Term):
    seq: Term


@dataclass(frozen=True, slots=True)
class Get(Term):
    """Total indexing: out-of-range indices yield ``default``."""

    seq: Term
    index: Term
    default: Term


@dataclass(frozen=True, slots=True)
class Concat(Term):
    left: Term
    right: Term


@dataclass(frozen=True, slots=True)
class BR(Term):
    """Bar recursion on finite prefixes.

    ``stop`` maps the zero-extension of the prefix to a natural; when its
    value drops below the prefix length the recursion bottoms out in
    ``leaf``, otherwise ``branch`` receives the prefix and the
    continuation over all one-element extensions.
    """

    stop: Term
    leaf: Term
    branch: Term
    prefix: Term


TypingContext = Mapping[str, Type]


# ---------------------------------------------------------------------------
# Variables, substitution, alpha-equivalence
# ---------------------------------------------------------------------------


def free_vars(t: Term) -> frozenset[str]:
    if isinstance(t, Var):
        return frozenset((t.name,))
    if isinstance(t, Lam):
        return free_vars(t.body) - {t.var}
    out: frozenset[str] = frozenset()
    for child in _children(t):
        out |= free_vars(child)
    return out


def all_var_names(t: Term) -> frozenset[str]:
    """Every variable name occurring in ``t``, free or bound."""
    if isinstance(t, Var):
        return frozenset((t.name,))
    if isinstance(t, Lam):
        return all_var_names(t.body) | {t.var}
    out: frozenset[str] = frozenset()
    for child in _children(t):
        out |= all_var_names(child)
    return out


def _children(t: Term) -> tuple[Term, ...]:
    if isinstance(t, Succ):
        return (t.arg,)
    if isinstance(t, NatRec):
        return (t.base, t.step, t.scrutinee)
    if isinstance(t, Lam):
        return (t.body,)
    if isinstance(t, App):
        return (t.fn, t.arg)
    if isinstance(t, Snoc):
        return (t.seq, t.elem)
    if isinstance(t, SeqRec):
        return (t.base, t.step, t.scrutinee)
    if isinstance(t, Len):
        return (t.seq,)
    if isinstance(t, Get):
        return (t.seq, t.index, t.default)
    if isinstance(t, Concat):
        return (t.left, t.right)
    if isinstance(t, BR):
        return (t.stop, t.leaf, t.branch, t.prefix)
    return ()


def _rebuild(t: Term, children: Sequence[Term]) -> Term:
    if isinstance(t, Succ):
        return Succ(children[0])
    if isinstance(t, NatRec):
        return NatRec(children[0], children[1], children[2])
    if isinstance(t, Lam):
        return Lam(t.var, t.var_type, children[0])
    if isinstance(t, App):
        return App(children[0], children[1])
    if isinstance(t, Snoc):
        return Snoc(children[0], children[1])
    if isinstance(t, SeqRec):
        return SeqRec(children[0], children[1], children[2])
    if isinstance(t, Len):
        return Len(children[0])
    if isinstance(t, Get):
        return Get(children[0], children[1], children[2])
    if isinstance(t, Concat):
        return Concat(children[0], children[1])
    if isinstance(t, BR):
        return BR(children[0], children[1], children[2], children[3])
    return t


def fresh_name(base: str, avoid: frozenset[str] | set[str]) -> str:
    if base not in avoid:
        return base
    k = 1
    while f"{base}_{k}" in avoid:
        k += 1
    return f"{base}_{k}"


def subst_term(t: Term, name: str, repl: Term) -> Term:
    """Capture-avoiding substitution of ``repl`` for free ``name`` in ``t``."""
    if name not in free_vars(t):
        return t
    return _subst(t, name, repl, free_vars(repl))


def _subst(t: Term, name: str, repl: Term, fv_repl: frozenset[str]) -> Term:
    if isinstance(t, Var):
        return repl if t.name == name else t
    if isinstance(t, Lam):
        if t.var == name:
            return t
        if name not in free_vars(t.body):
            return t
        if t.var in fv_repl:
            # Renaming keeps the binder from capturing free names of repl.
            new = fresh_name(t.var, fv_repl | free_vars(t.body) | {name})
            body = _subst(t.body, t.var, Var(new), frozenset((new,)))
            return Lam(new, t.var_type, _subst(body, name, repl, fv_repl))
        return Lam(t.var, t.var_type, _subst(t.body, name, repl, fv_repl))
    kids = _children(t)
    if not kids:
        return t
    return _rebuild(t, [_subst(c, name, repl, fv_repl) for c in kids])


def subst_many(t: Term, env: Mapping[str, Term]) -> Term:
    """Substitute several closed terms at once (keys must be distinct)."""
    for name, val in env.items():
        t = subst_term(t, name, val)
    return t


def alpha_eq(a: Term, b: Term) -> bool:
    """Structural equality up to renaming of bound variables."""
    return _aeq(a, b, {}, {}, 0)


def _aeq(a: Term, b: Term, ra: dict, rb: dict, depth: int) -> bool:
    if type(a) is not type(b):
        return False
    if isinstance(a, Var):
        return ra.get(a.name, a.name) == rb.get(b.name, b.name)
    if isinstance(a, Lam):
        if a.var_type != b.var_type:
            return False
        ra2 = dict(ra)
        rb2 = dict(rb)
        ra2[a.var] = depth
        rb2[b.var] = depth
        return _aeq(a.body, b.body, ra2, rb2, depth + 1)
    if isinstance(a, EmptySeq):
        return a.elem_type == b.elem_type
    ka = _children(a)
    kb = _children(b)
    return len(ka) == len(kb) and all(
        _aeq(x, y, ra, rb, depth) for x, y in zip(ka, kb)
    )


# ---------------------------------------------------------------------------
# Type inference
# ---------------------------------------------------------------------------


def infer_type(ctx: TypingContext, t: Term) -> Type:
    """Return the unique type of ``t`` in ``ctx`` or raise a TypingError."""
    if isinstance(t, Var):
        ty = ctx.get(t.name)
        if ty is None:
            raise UnboundVariable(f"unbound variable {t.name!r}", t)
        return ty
    if isinstance(t, Zero):
        return NAT
    if isinstance(t, Succ):
        _expect(ctx, t.arg, NAT, t)
        return NAT
    if isinstance(t, NatRec):
        rho = infer_type(ctx, t.base)
        _expect(ctx, t.step, Arrow(NAT, Arrow(rho, rho)), t)
        _expect(ctx, t.scrutinee, NAT, t)
        return rho
    if isinstance(t, Lam):
        body = infer_type({**ctx, t.var: t.var_type}, t.body)
        return Arrow(t.var_type, body)
    if isinstance(t, App):
        fn_ty = infer_type(ctx, t.fn)
        if not isinstance(fn_ty, Arrow):
            raise NonFunctionApplication(
                f"applied term has non-function type {fn_ty}", t
            )
        _expect(ctx, t.arg, fn_ty.dom, t)
        return fn_ty.cod
    if isinstance(t, EmptySeq):
        return Seq(t.elem_type)
    if isinstance(t, Snoc):
        seq_ty = infer_type(ctx, t.seq)
        if not isinstance(seq_ty, Seq):
            raise ArgumentMismatch(f"snoc on non-sequence type {seq_ty}", t)
        _expect(ctx, t.elem, seq_ty.elem, t)
        return seq_ty
    if isinstance(t, SeqRec):
        rho = infer_type(ctx, t.base)
        seq_ty = infer_type(ctx, t.scrutinee)
        if not isinstance(seq_ty, Seq):
            raise ArgumentMismatch(f"sequence recursor on {seq_ty}", t)
        _expect(ctx, t.step, Arrow(seq_ty, Arrow(seq_ty.elem, Arrow(rho, rho))), t)
        return rho
    if isinstance(t, Len):
        seq_ty = infer_type(ctx, t.seq)
        if not isinstance(seq_ty, Seq):
            raise ArgumentMismatch(f"length of non-sequence type {seq_ty}", t)
        return NAT
    if isinstance(t, Get):
        seq_ty = infer_type(ctx, t.seq)
        if not isinstance(seq_ty, Seq):
            raise ArgumentMismatch(f"indexing into non-sequence type {seq_ty}", t)
        _expect(ctx, t.index, NAT, t)
        _expect(ctx, t.default, seq_ty.elem, t)
        return seq_ty.elem
    if isinstance(t, Concat):
        lt = infer_type(ctx, t.left)
        rt = infer_type(ctx, t.right)
        if not isinstance(lt, Seq) or lt != rt:
            raise ArgumentMismatch(f"concat of {lt} and {rt}", t)
        return lt
    if isinstance(t, BR):
        seq_ty = infer_type(ctx, t.prefix)
        if not isinstance(seq_ty, Seq):
            raise ArgumentMismatch(f"bar recursion over {seq_ty}", t)
        elem = seq_ty.elem
        _expect(ctx, t.stop, Arrow(Arrow(NAT, elem), NAT), t)
        leaf_ty = infer_type(ctx, t.leaf)
        if not (isinstance(leaf_ty, Arrow) and leaf_ty.dom == seq_ty):
            raise ArgumentMismatch(f"bar-recursion leaf has type {leaf_ty}", t)
        rho = leaf_ty.cod
        _expect(ctx, t.branch, Arrow(seq_ty, Arrow(Arrow(elem, rho), rho)), t)
        return rho
    raise TypingError(f"unknown term {t!r}", t)


def _expect(ctx: TypingContext, t: Term, want: Type, parent: Term) -> None:
    got = infer_type(ctx, t)
    if got != want:
        raise ArgumentMismatch(f"expected {want}, found {got} in {parent!r}", t)


# ---------------------------------------------------------------------------
# Normalization
# ---------------------------------------------------------------------------


class _Fuel:
    __slots__ = ("left",)

    def __init__(self, n: int):
        self.left = n

    def step(self) -> None:
        if self.left <= 0:
            raise FuelExhausted("out of reduction steps")
        self.left -= 1


def normalize(t: Term, fuel: int = DEFAULT_FUEL) -> Term:
    """Fully normalize ``t`` under normal order, spending at most ``fuel`` steps."""
    return _normalize(t, _Fuel(fuel))


def normalize_count(t: Term, fuel: int = DEFAULT_FUEL) -> tuple[Term, int]:
    """Like :func:`normalize` but also report how many steps were spent."""
    cell = _Fuel(fuel)
    out = _normalize(t, cell)
    return out, fuel - cell.left


def _normalize(t: Term, fuel: _Fuel) -> Term:
    t = _whnf(t, fuel)
    kids = _children(t)
    if not kids:
        return t
    return _rebuild(t, [_normalize(c, fuel) for c in kids])


def _whnf(t: Term, fuel: _Fuel) -> Term:
    while True:
        if isinstance(t, App):
            fn = _whnf(t.fn, fuel)
            if isinstance(fn, Lam):
                fuel.step()
                t = subst_term(fn.body, fn.var, t.arg)
                continue
            return t if fn is t.fn else App(fn, t.arg)
        if isinstance(t, NatRec):
            n = _whnf(t.scrutinee, fuel)
            if isinstance(n, Zero):
                fuel.step()
                t = t.base
                continue
            if isinstance(n, Succ):
                fuel.step()
                t = App(App(t.step, n.arg), NatRec(t.base, t.step, n.arg))
                continue
            return NatRec(t.base, t.step, n)
        if isinstance(t, SeqRec):
            s = _whnf(t.scrutinee, fuel)
            if isinstance(s, EmptySeq):
                fuel.step()
                t = t.base
                continue
            if isinstance(s, Snoc):
                fuel.step()
                t = App(App(App(t.step, s.seq), s.elem), SeqRec(t.base, t.step, s.seq))
                continue
            return SeqRec(t.base, t.step, s)
        if isinstance(t, Len):
            s = _whnf(t.seq, fuel)
            if isinstance(s, EmptySeq):
                fuel.step()
                t = Zero()
                continue
            if isinstance(s, Snoc):
                fuel.step()
                t = Succ(Len(s.seq))
                continue
            return Len(s)
        if isinstance(t, Concat):
            a = _whnf(t.left, fuel)
            if isinstance(a, EmptySeq):
                fuel.step()
                t = t.right
                continue
            b = _whnf(t.right, fuel)
            if isinstance(b, EmptySeq):
                fuel.step()
                t = a
                continue
            if isinstance(b, Snoc):
                fuel.step()
                t = Snoc(Concat(a, b.seq), b.elem)
                continue
            return Concat(a, b)
        if isinstance(t, Get):
            parts = _literal_spine(t.seq, fuel)
            idx = _whnf_nat(t.index, fuel)
            if parts is not None and idx is not None:
                items, _, _ = parts
                fuel.step()
                t = items[idx] if 0 <= idx < len(items) else t.default
                continue
            return t
        if isinstance(t, BR):
            t2 = _whnf_bar(t, fuel)
            if t2 is None:
                return t
            t = t2
            continue
        return t


def _whnf_bar(t: BR, fuel: _Fuel) -> Term | None:
    """Fire one bar-recursion step, or return None when the node is stuck."""
    parts = _literal_spine(t.prefix, fuel)
    if parts is None:
        return None
    items, elem_ty, literal = parts
    avoid = free_vars(t.prefix)
    ivar = fresh_name("i", avoid)
    extension = Lam(ivar, NAT, Get(literal, Var(ivar), zero_term(elem_ty)))
    stop_val = _whnf_nat(App(t.stop, extension), fuel)
    if stop_val is None:
        return None
    fuel.step()
    if stop_val < len(items):
        return App(t.leaf, literal)
    xvar = fresh_name(
        "x", free_vars(t.stop) | free_vars(t.leaf) | free_vars(t.branch) | avoid
    )
    child = BR(t.stop, t.leaf, t.branch, Snoc(literal, Var(xvar)))
    return App(App(t.branch, literal), Lam(xvar, elem_ty, child))


def _literal_spine(
    t: Term, fuel: _Fuel
) -> tuple[list[Term], Type, Term] | None:
    """Reduce ``t`` to a literal sequence spine, or None when it is stuck.

    Returns the components front-to-back, their element type, and the
    reduced literal term.
    """
    s = _whnf(t, fuel)
    if isinstance(s, EmptySeq):
        return [], s.elem_type, s
    if isinstance(s, Snoc):
        tail = _literal_spine(s.seq, fuel)
        if tail is None:
            return None
        items, elem_ty, lit = tail
        return items + [s.elem], elem_ty, Snoc(lit, s.elem)
    return None


def _whnf_nat(t: Term, fuel: _Fuel) -> int | None:
    n = 0
    while True:
        t = _whnf(t, fuel)
        if isinstance(t, Zero):
            return n
        if isinstance(t, Succ):
            n += 1
            t = t.arg
            continue
        return None


# ---------------------------------------------------------------------------
# Value views and builders
# ---------------------------------------------------------------------------


def nat_value(t: Term) -> int | None:
    """Read a numeral off a normal form; None when the term is not one."""
    n = 0
    while isinstance(t, Succ):
        n += 1
        t = t.arg
    return n if isinstance(t, Zero) else None


def seq_components(t: Term) -> list[Term] | None:
    """Components of a literal sequence, front to back; None otherwise."""
    out: list[Term] = []
    while isinstance(t, Snoc):
        out.append(t.elem)
        t = t.seq
    if not isinstance(t, EmptySeq):
        return None
    out.reverse()
    return out


def numeral(n: int) -> Term:
    if n < 0:
        raise ValueError("numerals are non-negative")
    t: Term = Zero()
    for _ in range(n):
        t = Succ(t)
    return t


def seq_literal(items: Sequence[Term], elem_type: Type) -> Term:
    t: Term = EmptySeq(elem_type)
    for x in items:
        t = Snoc(t, x)
    return t


def singleton(item: Term, elem_type: Type) -> Term:
    return Snoc(EmptySeq(elem_type), item)


def zero_term(ty: Type) -> Term:
    """Canonical inhabitant: zero, empty sequence, or constant function."""
    if isinstance(ty, Nat):
        return Zero()
    if isinstance(ty, Seq):
        return EmptySeq(ty.elem)
    if isinstance(ty, Arrow):
        return Lam("z", ty.dom, zero_term(ty.cod))
    raise TypingError(f"no canonical inhabitant for {ty}")


# ---------------------------------------------------------------------------
# Arithmetic prelude (closed recursor-defined combinators)
# ---------------------------------------------------------------------------


def _mk_add() -> Term:
    step = Lam("k", NAT, Lam("r", NAT, Succ(Var("r"))))
    return Lam("m", NAT, Lam("n", NAT, NatRec(Var("m"), step, Var("n"))))


ADD = _mk_add()


def _mk_pred() -> Term:
    step = Lam("k", NAT, Lam("r", NAT, Var("k")))
    return Lam("n", NAT, NatRec(Zero(), step, Var("n")))


PRED = _mk_pred()


def _mk_monus() -> Term:
    step = Lam("k", NAT, Lam("r", NAT, App(PRED, Var("r"))))
    return Lam("m", NAT, Lam("n", NAT, NatRec(Var("m"), step, Var("n"))))


MONUS = _mk_monus()


def _mk_mul() -> Term:
    step = Lam("k", NAT, Lam("r", NAT, App(App(ADD, Var("m")), Var("r"))))
    return Lam("m", NAT, Lam("n", NAT, NatRec(Zero(), step, Var("n"))))


MUL = _mk_mul()


def add(a: Term, b: Term) -> Term:
    return App(App(ADD, a), b)


def mul(a: Term, b: Term) -> Term:
    return App(App(MUL, a), b)


def monus(a: Term, b: Term) -> Term:
    return App(App(MONUS, a), b)


def eq_gap(a: Term, b: Term) -> Term:
    """A natural that is zero exactly when ``a`` and ``b`` are equal."""
    return add(monus(a, b), monus(b, a))


def if_zero(cond: Term, then: Term, else_: Term, branch_type: Type) -> Term:
    """Branch on whether ``cond`` is zero; unevaluated branch stays unevaluated."""
    avoid = free_vars(then) | free_vars(else_) | free_vars(cond)
    k = fresh_name("k", avoid)
    r = fresh_name("r", avoid | {k})
    return NatRec(then, Lam(k, NAT, Lam(r, branch_type, else_)), cond)


# ---------------------------------------------------------------------------
# Sequence-of-functions application and its abstraction
# ---------------------------------------------------------------------------


def big_lambda(
    params: Sequence[tuple[str, Type]],
    body: Term,
    ctx: TypingContext | None = None,
) -> Term:
    """Wrap ``body`` as the one-element sequence of its curried abstraction.

    With no parameters this is just the singleton of ``body`` (which must
    then be of sequence type for application to invert it).  Free
    variables of ``body`` beyond the parameters need their types supplied
    through ``ctx``.
    """
    inner: dict[str, Type] = dict(ctx or {})
    for name, ty in params:
        inner[name] = ty
    return big_lambda_over(params, body, infer_type(inner, body))


def big_lambda_over(
    params: Sequence[tuple[str, Type]], body: Term, body_type: Type
) -> Term:
    """Like :func:`big_lambda` when the body's type is already known."""
    t = body
    ty = body_type
    for name, param_ty in reversed(params):
        t = Lam(name, param_ty, t)
        ty = Arrow(param_ty, ty)
    return singleton(t, ty)


def bounded_apply(
    seq_fn: Term,
    args: Sequence[Term],
    elem_type: Type | None = None,
    ctx: TypingContext | None = None,
) -> Term:
    """Concatenate, left to right, each component of ``seq_fn`` applied to ``args``.

    ``seq_fn`` must have a sequence type whose element type, after
    consuming every argument, lands in a sequence type again.  With no
    arguments the components are flattened as they stand.
    """
    if elem_type is None:
        seq_ty = infer_type(ctx or {}, seq_fn)
        if not isinstance(seq_ty, Seq):
            raise ArgumentMismatch(f"bounded application of {seq_ty}", seq_fn)
        elem_type = seq_ty.elem
    result_ty: Type = elem_type
    for a in args:
        if not isinstance(result_ty, Arrow):
            raise ArgumentMismatch(
                f"element type {elem_type} consumes fewer than {len(args)} arguments",
                seq_fn,
            )
        result_ty = result_ty.cod
    if not isinstance(result_ty, Seq):
        raise ArgumentMismatch(
            f"element type {elem_type} is not a function into a sequence type",
            seq_fn,
        )
    avoid = free_vars(seq_fn)
    for a in args:
        avoid |= free_vars(a)
    p = fresh_name("p", avoid)
    y = fresh_name("y", avoid | {p})
    acc = fresh_name("acc", avoid | {p, y})
    applied: Term = Var(y)
    for a in args:
        applied = App(applied, a)
    step = Lam(
        p,
        Seq(elem_type),
        Lam(y, elem_type, Lam(acc, result_ty, Concat(Var(acc), applied))),
    )
    return SeqRec(EmptySeq(result_ty.elem), step, seq_fn)


def spector_br(
    stop: Term,
    leaf: Term,
    branch: Term,
    prefix: Term,
    fuel: int = DEFAULT_FUEL,
) -> Term:
    """Run bar recursion from ``prefix`` and normalize the result.

    Raises :class:`FuelExhausted` when the stopping functional never bars
    within the given budget.
    """
    return normalize(BR(stop, leaf, branch, prefix), fuel)
