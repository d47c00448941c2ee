"""Executable witnesses: finite choice, equality deciding, saturation realizers.

The constructions here produce closed kernel terms together with the
shapes the checker needs to verify them:

* :func:`fac_choice` builds a choice function over the components of a
  finite sequence by recursion on its length, duplicating nothing and
  point-updating only at fresh last entries;
* :func:`eq_decider_from_fac` decides equality by routing both sides
  through such a choice function and comparing the resulting indices;
* :func:`csat_realizers` emits the three closed witness families for the
  translated countable-saturation instance (forwarding, the premise
  pool, and singleton challenge pools);
* :func:`csat_witness_from_ac0` composes a choice function from a
  candidate table, mirroring the witness-composition step it implements;
* :func:`br_countable_choice_demo` drives the same search through the
  kernel's bar-recursion constant;
* :func:`char_sequence` tabulates the zero-set of a function as a
  literal sequence.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Sequence

from .terms import (
    DEFAULT_FUEL,
    NAT,
    App,
    Arrow,
    EmptySeq,
    Get,
    Lam,
    Len,
    Seq,
    Term,
    Type,
    TypingError,
    Var,
    add,
    alpha_eq,
    arrow_chain,
    big_lambda_over,
    bounded_apply,
    eq_gap,
    free_vars,
    if_zero,
    infer_type,
    nat_value,
    normalize,
    numeral,
    seq_components,
    seq_literal,
    singleton,
    spector_br,
    zero_term,
)
from .formulas import Formula
from .dialectica import NormalForm, RealizerBundle


class WitnessNotFound(Exception):
    """The search premise failed at the named sequence entry."""

    def __init__(self, entry: int):
        super().__init__(f"no witness for entry {entry}")
        self.entry = entry


class NoWitnessInRow(Exception):
    def __init__(self, row: int):
        super().__init__(f"relation row {row} has no true entry")
        self.row = row


class UnsupportedType(Exception):
    pass


class ShapeError(Exception):
    pass


@dataclass(frozen=True)
class FiniteRelationTable:
    """An explicit boolean rectangle; everything outside it is false."""

    entries: tuple[tuple[bool, ...], ...]

    @property
    def rows(self) -> int:
        return len(self.entries)

    @property
    def cols(self) -> int:
        return len(self.entries[0]) if self.entries else 0

    def holds(self, n: int, x: int) -> bool:
        if 0 <= n < self.rows and 0 <= x < self.cols:
            return self.entries[n][x]
        return False

    def least_witness(self, n: int) -> int | None:
        for x in range(self.cols):
            if self.holds(n, x):
                return x
        return None

    @classmethod
    def from_predicate(
        cls, pred: Callable[[int, int], bool], rows: int, cols: int
    ) -> "FiniteRelationTable":
        return cls(
            tuple(tuple(bool(pred(n, x)) for x in range(cols)) for n in range(rows))
        )

    @classmethod
    def parse(cls, text: str) -> "FiniteRelationTable":
        """Read the whitespace format: a `rows cols` header, then 0/1 entries."""
        fields = text.split()
        if len(fields) < 2:
            raise ValueError("relation table needs a 'rows cols' header")
        rows, cols = int(fields[0]), int(fields[1])
        cells = fields[2:]
        if len(cells) != rows * cols:
            raise ValueError(
                f"expected {rows * cols} entries, found {len(cells)}"
            )
        grid = []
        for n in range(rows):
            row = []
            for x in range(cols):
                cell = cells[n * cols + x]
                if cell not in ("0", "1"):
                    raise ValueError(f"entry {cell!r} is not 0 or 1")
                row.append(cell == "1")
            grid.append(tuple(row))
        return cls(tuple(grid))

    def dump(self) -> str:
        lines = [f"{self.rows} {self.cols}"]
        for row in self.entries:
            lines.append(" ".join("1" if b else "0" for b in row))
        return "\n".join(lines) + "\n"


@dataclass(frozen=True)
class WitnessFinder:
    """Bounded least-witness search realizing access to an existential premise.

    ``accepts(n, candidate)`` must be a pure total test; candidates are
    scanned in order, so the returned witness is deterministic.
    """

    target_type: Type
    candidates: tuple[Term, ...]
    accepts: Callable[[int, Term], bool]

    def find(self, entry: int) -> Term:
        for c in self.candidates:
            if self.accepts(entry, c):
                return c
        raise WitnessNotFound(entry)

    @classmethod
    def for_nat_relation(
        cls, psi: Callable[[int, int], bool], bound: int
    ) -> "WitnessFinder":
        cands = tuple(numeral(x) for x in range(bound + 1))
        return cls(NAT, cands, lambda n, t: psi(n, nat_value(t)))

    @classmethod
    def from_table(cls, table: FiniteRelationTable) -> "WitnessFinder":
        return cls.for_nat_relation(table.holds, max(table.cols - 1, 0))


def _entry_values(s: Term, fuel: int = DEFAULT_FUEL) -> list[int]:
    comps = seq_components(normalize(s, fuel))
    if comps is None:
        raise TypingError("expected a literal sequence of naturals", s)
    vals = []
    for c in comps:
        v = nat_value(normalize(c, fuel))
        if v is None:
            raise TypingError("sequence entry is not a numeral", c)
        vals.append(v)
    return vals


def _point_update(f0: Term, key: int, value: Term, result_type: Type) -> Term:
    n = "n"
    body = if_zero(
        eq_gap(Var(n), numeral(key)), value, App(f0, Var(n)), result_type
    )
    return Lam(n, NAT, body)


def fac_choice(s: Term, finder: WitnessFinder, fuel: int = DEFAULT_FUEL) -> Term:
    """Choice over the components of ``s`` by recursion on its length.

    The empty sequence gets the constant canonical function; a repeated
    last entry reuses the function for the shorter prefix unchanged; a
    fresh last entry point-updates it with the finder's witness.
    """
    values = _entry_values(s, fuel)

    def build(vals: list[int]) -> Term:
        if not vals:
            return Lam("n", NAT, zero_term(finder.target_type))
        front, last = vals[:-1], vals[-1]
        f0 = build(front)
        if last in front:
            return f0
        return _point_update(f0, last, finder.find(last), finder.target_type)

    return build(values)


def _meta_fac(components: list[Term]) -> Callable[[Term], int]:
    """Index-choice over ``components`` built by the same length recursion.

    Returns a callable sending a term to the least index of a
    structurally equal component (0 outside them), mirroring
    :func:`fac_choice` with witnesses drawn from indices.
    """
    updates: list[tuple[Term, int]] = []
    for k, comp in enumerate(components):
        if any(alpha_eq(comp, prev) for prev, _ in updates):
            continue  # the function for the shorter prefix already works
        updates.append((comp, k))

    def f(t: Term) -> int:
        for comp, idx in updates:
            if alpha_eq(t, comp):
                return idx
        return 0

    return f


def eq_decider_from_fac(
    a: Term,
    b: Term,
    fac: Callable[[list[Term]], Callable[[Term], int]] | None = None,
    fuel: int = DEFAULT_FUEL,
) -> bool:
    """Decide equality of ``a`` and ``b`` through a finite choice function.

    Both terms are routed through a choice function for the two-element
    sequence holding them; distinct indices force inequality, a shared
    index forces equality through the common component.
    """
    ty = infer_type({}, a)
    ty_b = infer_type({}, b)
    if ty != ty_b:
        raise TypingError(f"cannot compare {ty} with {ty_b}", b)
    if fac is None:
        if ty not in (NAT, Seq(NAT)):
            raise UnsupportedType(f"no computable choice oracle at {ty}")
        fac = _meta_fac
    na = normalize(a, fuel)
    nb = normalize(b, fuel)
    f = fac([na, nb])
    return f(na) == f(nb)


def csat_realizers(
    inner: NormalForm,
    n_var: str = "n",
    x_var: str = "x",
    sigma: Type = NAT,
) -> RealizerBundle:
    """Witnesses for the translated saturation instance built on ``inner``.

    ``inner`` must be the translation of the instance body with
    distinguished free variables ``n_var`` (a natural) and ``x_var`` (of
    type ``sigma``).  The bundle lines up, in order, with the witness
    block of the translated instance: one forwarding term per witness of
    ``inner``, the premise pool (the challenge sequence itself), and one
    singleton pool per challenge of ``inner``.
    """
    allowed = (
        {n_var, x_var}
        | {n for n, _ in inner.evars}
        | {n for n, _ in inner.uvars}
    )
    from .formulas import free_vars_formula

    extra = free_vars_formula(inner.matrix) - allowed
    if extra:
        raise ShapeError(
            f"inner matrix mentions unexpected free variables {sorted(extra)}"
        )

    wit_types = [ty for _, ty in inner.evars]
    chal_types = [ty for _, ty in inner.uvars]
    pool_types = [Seq(ty) for ty in chal_types]

    # Premise-side witnesses were lifted over the saturated variable by
    # the translation, hence the extra arrow from the naturals.
    fwd_types = [Arrow(NAT, ty) for ty in wit_types]
    fwd_names = [f"u{i + 1}" for i in range(len(wit_types))]
    lifted_params = [
        (name, Seq(ty)) for name, ty in zip(fwd_names, fwd_types)
    ]
    terms: list[Term] = []
    for i, uty in enumerate(wit_types):
        inner_body = big_lambda_over(
            [("m", NAT)],
            bounded_apply(
                Var(fwd_names[i]), [Var("m")], elem_type=Arrow(NAT, uty)
            ),
            uty,
        )
        terms.append(
            big_lambda_over(lifted_params, inner_body, Seq(Arrow(NAT, uty)))
        )

    pool_params = (
        lifted_params
        + [("s", Seq(NAT))]
        + [(f"w{j + 1}", ty) for j, ty in enumerate(pool_types)]
    )

    terms.append(big_lambda_over(pool_params, Var("s"), Seq(NAT)))
    for j, ty in enumerate(pool_types):
        terms.append(
            big_lambda_over(pool_params, singleton(Var(f"w{j + 1}"), ty), Seq(ty))
        )
    return RealizerBundle(tuple(terms))


def csat_witness_from_ac0(
    candidates: Callable[[int, int], Sequence[int]],
    s: Term,
    t: Term,
    relation: Callable[[int, int, int, int], bool],
    bound: int,
    fuel: int = DEFAULT_FUEL,
) -> Term:
    """Compose a choice function from a candidate table.

    For each entry ``n`` of ``s`` the search looks for ``x <= bound``
    such that every entry ``u`` of ``t`` admits some candidate
    ``v in candidates(n, u)`` with ``relation(u, v, n, x)``; finite
    choice then assembles the results into a single function term.
    """
    t_vals = _entry_values(t, fuel)

    def psi(n: int, x: int) -> bool:
        return all(
            any(relation(u, v, n, x) for v in candidates(n, u)) for u in t_vals
        )

    finder = WitnessFinder.for_nat_relation(psi, bound)
    return fac_choice(s, finder, fuel)


def standardize_choice(g: Term, k: int, fuel: int = DEFAULT_FUEL) -> Term:
    """Tabulate ``g`` on the first ``k + 1`` naturals as one closed term."""
    g_ty = infer_type({}, g)
    if not (isinstance(g_ty, Arrow) and g_ty.dom == NAT):
        raise TypingError(f"expected a function from naturals, found {g_ty}", g)
    sigma = g_ty.cod
    values = [normalize(App(g, numeral(i)), fuel) for i in range(k + 1)]
    body: Term = zero_term(sigma)
    for i in range(k, -1, -1):
        body = if_zero(eq_gap(Var("n"), numeral(i)), values[i], body, sigma)
    return Lam("n", NAT, body)


def br_countable_choice_demo(
    table: FiniteRelationTable, k: int, fuel: int = DEFAULT_FUEL
) -> Term:
    """Drive a least-witness row search through bar recursion.

    The stopping functional reads the zero-extended prefix one past the
    target length, so the recursion bars exactly when rows 0..k have been
    filled; the branch step extends the prefix with the least witness of
    the next row.  The result applied to ``n <= k`` equals that row's
    least witness.
    """
    witnesses = []
    for n in range(k + 1):
        w = table.least_witness(n)
        if w is None:
            raise NoWitnessInRow(n)
        witnesses.append(w)

    row_witness: Term = zero_term(NAT)
    body: Term = row_witness
    for n in range(k, -1, -1):
        body = if_zero(eq_gap(Var("n"), numeral(n)), numeral(witnesses[n]), body, NAT)
    least = Lam("n", NAT, body)

    stop = Lam(
        "a",
        Arrow(NAT, NAT),
        add(App(Var("a"), numeral(k + 1)), numeral(k)),
    )
    leaf = Lam("s", Seq(NAT), Var("s"))
    branch = Lam(
        "s",
        Seq(NAT),
        Lam(
            "p",
            Arrow(NAT, Seq(NAT)),
            App(Var("p"), App(least, Len(Var("s")))),
        ),
    )
    filled = spector_br(stop, leaf, branch, EmptySeq(NAT), fuel)
    return Lam("n", NAT, Get(filled, Var("n"), numeral(0)))


def char_sequence(f: Term, k: int, fuel: int = DEFAULT_FUEL) -> Term:
    """The entries ``n <= k`` where ``f n`` evaluates to zero, in order."""
    members = []
    for n in range(k + 1):
        v = nat_value(normalize(App(f, numeral(n)), fuel))
        if v is None:
            raise TypingError("function value is not a numeral", f)
        if v == 0:
            members.append(numeral(n))
    return seq_literal(members, NAT)
