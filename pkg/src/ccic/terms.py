"""CCIC pseudo-terms in locally nameless form.

Bound variables are de Bruijn indices (``BVar``); free variables are names
(``FVar``) carrying their level (object or predicate variable).  Binder names
are kept only as display hints and are ignored by equality, so ``==`` on terms
is alpha-equivalence.
"""
from __future__ import annotations

import enum
from dataclasses import dataclass, field
from typing import Optional, Union

from .errors import ClassMismatch


class Sort(enum.Enum):
    PROP = "Prop"
    TYPE = "Type"
    EXTERN = "Extern"


class Annot(enum.Enum):
    U = "u"
    R = "r"

    def __lt__(self, other):
        return self is Annot.U and other is Annot.R

    def __le__(self, other):
        return self is other or self < other


def annot_leq(a: Annot, b: Annot) -> bool:
    """Total order u < r on annotations."""
    return a <= b


class SyntacticClass(enum.IntEnum):
    O = 0
    P = 1
    K = 2
    M = 3
    EXTERN = 4

    def succ(self) -> "SyntacticClass":
        if self is SyntacticClass.EXTERN:
            raise ValueError("Extern has no successor")
        return SyntacticClass(self + 1)


INDUCTIVES = ("nat", "list", "word")
# ``letter`` is the opaque alphabet of dependent words; it has no eliminator.
BASE_TYPES = INDUCTIVES + ("letter",)


@dataclass(frozen=True)
class SortT:
    sort: Sort


@dataclass(frozen=True)
class BVar:
    index: int


@dataclass(frozen=True)
class FVar:
    name: str
    pred: bool = False


@dataclass(frozen=True)
class Pi:
    name: str = field(compare=False)
    annot: Annot
    dom: "Term"
    body: "Term"


@dataclass(frozen=True)
class Lam:
    name: str = field(compare=False)
    annot: Annot
    dom: "Term"
    body: "Term"


@dataclass(frozen=True)
class App:
    fn: "Term"
    arg: "Term"


@dataclass(frozen=True)
class Sym:
    """First-order defined symbol (``+``, ``@`` or a user declaration)."""
    name: str


@dataclass(frozen=True)
class Ind:
    """One of the built-in inductive types, or the alphabet ``letter``."""
    name: str


@dataclass(frozen=True)
class Ctor:
    """The ``index``-th constructor (1-based) of a built-in inductive."""
    ind: str
    index: int


@dataclass(frozen=True)
class Eqn:
    lhs: "Term"
    rhs: "Term"
    ty: "Term"


@dataclass(frozen=True)
class Refl:
    ty: "Term"
    arg: "Term"


@dataclass(frozen=True)
class Elim:
    scrut: "Term"
    ind: str
    indices: tuple
    motive: "Term"
    branches: tuple


Term = Union[SortT, BVar, FVar, Pi, Lam, App, Sym, Ind, Ctor, Eqn, Refl, Elim]

PROP = SortT(Sort.PROP)
TYPE = SortT(Sort.TYPE)
EXTERN = SortT(Sort.EXTERN)
NAT = Ind("nat")
LIST = Ind("list")
WORD = Ind("word")
LETTER = Ind("letter")
ZERO = Ctor("nat", 1)
SUCC = Ctor("nat", 2)
NIL = Ctor("list", 1)
CONS = Ctor("list", 2)
EPSILON = Ctor("word", 1)
CHAR = Ctor("word", 2)
WAPP = Ctor("word", 3)
PLUS = Sym("+")
APPEND = Sym("@")

CTOR_ARITY = {
    ("nat", 1): 0, ("nat", 2): 1,
    ("list", 1): 1, ("list", 2): 3,
    ("word", 1): 0, ("word", 2): 1, ("word", 3): 4,
}
CTOR_NAMES = {
    ("nat", 1): "0", ("nat", 2): "S",
    ("list", 1): "nil", ("list", 2): "cons",
    ("word", 1): "epsilon", ("word", 2): "char", ("word", 3): "app",
}


def apps(fn: Term, *args: Term) -> Term:
    for a in args:
        fn = App(fn, a)
    return fn


def spine(t: Term):
    """Split ``f a1 .. an`` into ``(f, [a1, .., an])``."""
    args = []
    while isinstance(t, App):
        args.append(t.arg)
        t = t.fn
    args.reverse()
    return t, args


def arrow(dom: Term, cod: Term, annot: Annot = Annot.U) -> Pi:
    """Non-dependent product; ``cod`` must be locally closed."""
    return Pi("_", annot, dom, shift(cod, 1))


def numeral(n: int) -> Term:
    t = ZERO
    for _ in range(n):
        t = App(SUCC, t)
    return t


def plus(a: Term, b: Term) -> Term:
    return apps(PLUS, a, b)


def succ(a: Term) -> Term:
    return App(SUCC, a)


def children(t: Term) -> tuple:
    match t:
        case Pi(_, _, d, b) | Lam(_, _, d, b):
            return (d, b)
        case App(f, a):
            return (f, a)
        case Eqn(l, r, ty):
            return (l, r, ty)
        case Refl(ty, a):
            return (ty, a)
        case Elim(s, _, idx, q, bs):
            return (s, *idx, q, *bs)
        case _:
            return ()


# ---------------------------------------------------------------------------
# de Bruijn plumbing


def shift(t: Term, d: int, cutoff: int = 0) -> Term:
    if d == 0:
        return t
    match t:
        case BVar(i):
            return BVar(i + d) if i >= cutoff else t
        case Pi(n, a, dom, body):
            return Pi(n, a, shift(dom, d, cutoff), shift(body, d, cutoff + 1))
        case Lam(n, a, dom, body):
            return Lam(n, a, shift(dom, d, cutoff), shift(body, d, cutoff + 1))
        case App(f, a):
            return App(shift(f, d, cutoff), shift(a, d, cutoff))
        case Eqn(l, r, ty):
            return Eqn(shift(l, d, cutoff), shift(r, d, cutoff), shift(ty, d, cutoff))
        case Refl(ty, a):
            return Refl(shift(ty, d, cutoff), shift(a, d, cutoff))
        case Elim(s, ind, idx, q, bs):
            return Elim(shift(s, d, cutoff), ind, tuple(shift(x, d, cutoff) for x in idx),
                        shift(q, d, cutoff), tuple(shift(x, d, cutoff) for x in bs))
        case _:
            return t


def instantiate(body: Term, u: Term, depth: int = 0) -> Term:
    """Replace loose index ``depth`` of ``body`` by ``u`` (one binder removed)."""
    match body:
        case BVar(i):
            if i == depth:
                return shift(u, depth)
            if i > depth:
                return BVar(i - 1)
            return body
        case Pi(n, a, dom, b):
            return Pi(n, a, instantiate(dom, u, depth), instantiate(b, u, depth + 1))
        case Lam(n, a, dom, b):
            return Lam(n, a, instantiate(dom, u, depth), instantiate(b, u, depth + 1))
        case App(f, a):
            return App(instantiate(f, u, depth), instantiate(a, u, depth))
        case Eqn(l, r, ty):
            return Eqn(instantiate(l, u, depth), instantiate(r, u, depth), instantiate(ty, u, depth))
        case Refl(ty, a):
            return Refl(instantiate(ty, u, depth), instantiate(a, u, depth))
        case Elim(s, ind, idx, q, bs):
            return Elim(instantiate(s, u, depth), ind, tuple(instantiate(x, u, depth) for x in idx),
                        instantiate(q, u, depth), tuple(instantiate(x, u, depth) for x in bs))
        case _:
            return body


def abstract(t: Term, name: str, depth: int = 0) -> Term:
    """Turn free occurrences of ``name`` into the loose index ``depth``."""
    match t:
        case FVar(n, _) if n == name:
            return BVar(depth)
        case BVar(i):
            return BVar(i + 1) if i >= depth else t
        case Pi(n, a, dom, b):
            return Pi(n, a, abstract(dom, name, depth), abstract(b, name, depth + 1))
        case Lam(n, a, dom, b):
            return Lam(n, a, abstract(dom, name, depth), abstract(b, name, depth + 1))
        case App(f, a):
            return App(abstract(f, name, depth), abstract(a, name, depth))
        case Eqn(l, r, ty):
            return Eqn(abstract(l, name, depth), abstract(r, name, depth), abstract(ty, name, depth))
        case Refl(ty, a):
            return Refl(abstract(ty, name, depth), abstract(a, name, depth))
        case Elim(s, ind, idx, q, bs):
            return Elim(abstract(s, name, depth), ind, tuple(abstract(x, name, depth) for x in idx),
                        abstract(q, name, depth), tuple(abstract(x, name, depth) for x in bs))
        case _:
            return t


def has_loose(t: Term, depth: int = 0) -> bool:
    """True when ``t`` mentions an index bound outside of it."""
    match t:
        case BVar(i):
            return i >= depth
        case Pi(_, _, d, b) | Lam(_, _, d, b):
            return has_loose(d, depth) or has_loose(b, depth + 1)
        case _:
            return any(has_loose(c, depth) for c in children(t))


def mentions_index(t: Term, k: int) -> bool:
    match t:
        case BVar(i):
            return i == k
        case Pi(_, _, d, b) | Lam(_, _, d, b):
            return mentions_index(d, k) or mentions_index(b, k + 1)
        case _:
            return any(mentions_index(c, k) for c in children(t))


def free_vars(t: Term) -> frozenset:
    """Names of the free variables of ``t``."""
    out = set()
    stack = [t]
    while stack:
        s = stack.pop()
        if isinstance(s, FVar):
            out.add(s.name)
        else:
            stack.extend(children(s))
    return frozenset(out)


def is_open(t: Term) -> bool:
    """Open = mentions a free variable or an index bound above ``t``."""
    return bool(free_vars(t)) or has_loose(t)


def size(t: Term) -> int:
    return 1 + sum(size(c) for c in children(t))


def alpha_eq(t: Term, u: Term) -> bool:
    return t == u


# ---------------------------------------------------------------------------
# syntactic classes

O, P, K, M = SyntacticClass.O, SyntacticClass.P, SyntacticClass.K, SyntacticClass.M


def class_of(t: Term, levels: tuple = ()) -> Optional[SyntacticClass]:
    """Syntactic class of ``t`` or ``None`` when it is not well-constructed.

    ``levels`` gives, innermost first, whether each enclosing binder binds a
    predicate variable.
    """
    match t:
        case SortT(Sort.PROP):
            return K
        case SortT(Sort.TYPE):
            return M
        case SortT(Sort.EXTERN):
            return SyntacticClass.EXTERN
        case FVar(_, pred):
            return P if pred else O
        case BVar(i):
            if i >= len(levels):
                return None
            return P if levels[i] else O
        case Sym() | Ctor():
            return O
        case Ind():
            return P
        case Pi(_, _, dom, body):
            dc = class_of(dom, levels)
            if dc not in (P, K):
                return None
            bc = class_of(body, (dc is K,) + levels)
            return bc if bc in (P, K, M) else None
        case Lam(_, _, dom, body):
            dc = class_of(dom, levels)
            if dc not in (P, K):
                return None
            bc = class_of(body, (dc is K,) + levels)
            return bc if bc in (O, P, K) else None
        case App(f, a):
            fc = class_of(f, levels)
            ac = class_of(a, levels)
            if fc in (O, P, K) and ac in (O, P):
                return fc
            return None
        case Eqn(l, r, ty):
            if class_of(ty, levels) is P and class_of(l, levels) is O and class_of(r, levels) is O:
                return P
            return None
        case Refl(ty, a):
            if class_of(ty, levels) is P and class_of(a, levels) is O:
                return O
            return None
        case Elim(s, _, idx, q, bs):
            if class_of(s, levels) is not O:
                return None
            if any(class_of(x, levels) not in (O, P) for x in idx):
                return None
            bcs = {class_of(b, levels) for b in bs}
            if len(bcs) != 1:
                return None
            (bc,) = bcs
            if bc not in (O, P) or class_of(q, levels) is not bc.succ():
                return None
            return bc
    return None


def substitute(t: Term, x: FVar, u: Term) -> Term:
    """Capture-avoiding ``t{x := u}``; the substitution must preserve classes."""
    if class_of(x) != class_of(u):
        raise ClassMismatch(f"cannot substitute a term of class {class_of(u)} for {x.name}")
    return instantiate(abstract(t, x.name), u)


def head_symbol(t: Term):
    h, _ = spine(t)
    return h


def is_pred_var_head(t: Term, levels: tuple = ()) -> bool:
    match t:
        case FVar(_, pred):
            return pred
        case BVar(i):
            return i < len(levels) and levels[i]
    return False


def is_weak(t: Term, levels: tuple = ()) -> bool:
    """No applied type-level variable and no eliminator over an open scrutinee."""
    match t:
        case App():
            h, args = spine(t)
            if is_pred_var_head(h, levels):
                return False
            return is_weak(h, levels) and all(is_weak(a, levels) for a in args)
        case Pi(_, _, dom, body) | Lam(_, _, dom, body):
            lv = class_of(dom, levels) is K
            return is_weak(dom, levels) and is_weak(body, (lv,) + levels)
        case Elim(s, _, idx, q, bs):
            if is_open(s):
                return False
            return all(is_weak(c, levels) for c in (s, *idx, q, *bs))
        case _:
            return all(is_weak(c, levels) for c in children(t))


# ---------------------------------------------------------------------------
# contexts


@dataclass(frozen=True)
class Binding:
    name: str
    annot: Annot
    type: Term
    value: Optional[Term] = None


class Context:
    """Ordered, immutable sequence of bindings; names are unique."""

    __slots__ = ("bindings", "_index")

    def __init__(self, bindings=()):
        self.bindings = tuple(bindings)
        self._index = {}
        for i, b in enumerate(self.bindings):
            if b.name in self._index:
                raise ValueError(f"variable {b.name} declared twice")
            self._index[b.name] = i

    def extend(self, name, annot, type, value=None) -> "Context":
        return Context(self.bindings + (Binding(name, annot, type, value),))

    def lookup(self, name) -> Optional[Binding]:
        i = self._index.get(name)
        return None if i is None else self.bindings[i]

    def __contains__(self, name):
        return name in self._index

    def __iter__(self):
        return iter(self.bindings)

    def __len__(self):
        return len(self.bindings)

    def __eq__(self, other):
        return isinstance(other, Context) and self.bindings == other.bindings

    def __hash__(self):
        return hash(self.bindings)

    def names(self):
        return set(self._index)

    def definitions(self) -> dict:
        return {b.name: b.value for b in self.bindings if b.value is not None}

    def fresh(self, hint: str, avoid=()) -> str:
        base = hint if hint and hint != "_" else "x"
        taken = self.names() | set(avoid)
        if base not in taken:
            return base
        i = 1
        while f"{base}{i}" in taken:
            i += 1
        return f"{base}{i}"

    def map_types(self, fn) -> "Context":
        return Context(Binding(b.name, b.annot, fn(b.type),
                               None if b.value is None else fn(b.value)) for b in self.bindings)

    def __repr__(self):
        return f"Context({[b.name for b in self.bindings]})"


def var_for(name: str, type_: Term) -> FVar:
    """Free variable for a binding of type ``type_``; kinds bind predicate variables."""
    return FVar(name, class_of(type_) is K)


def open_binder(ctx: Context, binder, avoid=()):
    """Open ``binder`` (Pi or Lam) with a fresh variable; return (var, body)."""
    name = ctx.fresh(binder.name, avoid)
    v = var_for(name, binder.dom)
    return v, instantiate(binder.body, v)
