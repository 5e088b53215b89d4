"""Parametric sorted signatures, first-order terms and their embedding in the kernel."""
from __future__ import annotations

import itertools
from dataclasses import dataclass
from typing import Optional, Union

from . import terms as K
from .terms import Annot, App, FVar, Term, apps, spine


# ---------------------------------------------------------------------------
# sort expressions


@dataclass(frozen=True)
class SortVar:
    name: str

    def __str__(self):
        return self.name


@dataclass(frozen=True)
class SortApp:
    ctor: str
    args: tuple = ()

    def __str__(self):
        if not self.args:
            return self.ctor
        return f"{self.ctor}({', '.join(map(str, self.args))})"


SortExpr = Union[SortVar, SortApp]

NAT_S = SortApp("nat")


def list_of(s: SortExpr) -> SortApp:
    return SortApp("list", (s,))


def sort_vars(s: SortExpr) -> set:
    if isinstance(s, SortVar):
        return {s.name}
    return set().union(*(sort_vars(a) for a in s.args)) if s.args else set()


def subst_sort(s: SortExpr, xi: dict) -> SortExpr:
    if isinstance(s, SortVar):
        return xi.get(s.name, s)
    return SortApp(s.ctor, tuple(subst_sort(a, xi) for a in s.args))


def match_sort(pattern: SortExpr, target: SortExpr, xi: Optional[dict] = None, tvars=None):
    """One-way matching: bind ``tvars`` in ``pattern`` so that it equals ``target``.

    Sort variables of ``target`` are rigid.  Returns the extended substitution or None.
    """
    xi = dict(xi or {})
    tvars = sort_vars(pattern) if tvars is None else tvars
    stack = [(pattern, target)]
    while stack:
        p, t = stack.pop()
        if isinstance(p, SortVar) and p.name in tvars:
            if p.name in xi:
                if xi[p.name] != t:
                    return None
            else:
                xi[p.name] = t
        elif isinstance(p, SortVar):
            if p != t:
                return None
        elif isinstance(t, SortApp) and t.ctor == p.ctor and len(t.args) == len(p.args):
            stack.extend(zip(p.args, t.args))
        else:
            return None
    return xi


def unify_sorts(a: SortExpr, b: SortExpr, xi: dict, flex: set) -> Optional[dict]:
    """Unify, treating only the names in ``flex`` as variables."""
    a, b = _walk(a, xi), _walk(b, xi)
    if a == b:
        return xi
    if isinstance(a, SortVar) and a.name in flex:
        if a.name in sort_vars(_resolve(b, xi)):
            return None
        return {**xi, a.name: b}
    if isinstance(b, SortVar) and b.name in flex:
        return unify_sorts(b, a, xi, flex)
    if isinstance(a, SortApp) and isinstance(b, SortApp) and a.ctor == b.ctor and len(a.args) == len(b.args):
        for x, y in zip(a.args, b.args):
            xi = unify_sorts(x, y, xi, flex)
            if xi is None:
                return None
        return xi
    return None


def _walk(s, xi):
    while isinstance(s, SortVar) and s.name in xi:
        s = xi[s.name]
    return s


def _resolve(s, xi):
    s = _walk(s, xi)
    if isinstance(s, SortApp):
        return SortApp(s.ctor, tuple(_resolve(a, xi) for a in s.args))
    return s


# ---------------------------------------------------------------------------
# signatures


@dataclass(frozen=True)
class SymbolDecl:
    name: str
    kind: str  # "constructor" | "defined"
    tvars: tuple
    args: tuple
    result: SortExpr

    def __post_init__(self):
        if self.kind == "constructor" and not isinstance(self.result, SortApp):
            raise ValueError(f"constructor {self.name} must build a sort-constructor application")
        if not set().union(*(sort_vars(a) for a in self.args), set()) <= sort_vars(self.result):
            raise ValueError(f"type variables of {self.name} must occur in its result sort")

    @property
    def arity(self):
        return len(self.args)

    def instance(self, xi):
        return tuple(subst_sort(a, xi) for a in self.args), subst_sort(self.result, xi)


_A = SortVar("α")
BUILTIN_SORTS = {"nat": 0, "list": 1}
BUILTIN_SYMBOLS = (
    SymbolDecl("0", "constructor", (), (), NAT_S),
    SymbolDecl("S", "constructor", (), (NAT_S,), NAT_S),
    SymbolDecl("+", "defined", (), (NAT_S, NAT_S), NAT_S),
    SymbolDecl("nil", "constructor", ("α",), (), list_of(_A)),
    SymbolDecl("cons", "constructor", ("α",), (_A, list_of(_A)), list_of(_A)),
    SymbolDecl("@", "defined", ("α",), (list_of(_A), list_of(_A)), list_of(_A)),
)
_BUILTIN_HEADS = {
    "0": K.ZERO, "S": K.SUCC, "+": K.PLUS, "nil": K.NIL, "cons": K.CONS, "@": K.APPEND,
}


@dataclass(frozen=True)
class Signature:
    """Sort constructors with arities plus symbol declarations (built-ins always present)."""
    sorts: tuple = tuple(BUILTIN_SORTS.items())
    symbols: tuple = BUILTIN_SYMBOLS

    def __post_init__(self):
        names = [d.name for d in self.symbols]
        if len(set(names)) != len(names):
            raise ValueError("duplicate symbol declaration")
        missing = {d.name for d in BUILTIN_SYMBOLS} - set(names)
        if missing:
            raise ValueError(f"built-in symbols missing: {sorted(missing)}")

    def decl(self, name) -> Optional[SymbolDecl]:
        for d in self.symbols:
            if d.name == name:
                return d
        return None

    def with_symbol(self, name, args, result) -> "Signature":
        for s in (*args, result):
            self.check_sort(s)
        if sort_vars(result) or any(sort_vars(a) for a in args):
            raise ValueError("user symbols are monomorphic")
        d = SymbolDecl(name, "defined", (), tuple(args), result)
        return Signature(self.sorts, self.symbols + (d,))

    def check_sort(self, s: SortExpr):
        if isinstance(s, SortVar):
            return
        ar = dict(self.sorts).get(s.ctor)
        if ar is None or ar != len(s.args):
            raise ValueError(f"ill-formed sort {s}")
        for a in s.args:
            self.check_sort(a)

    def head_term(self, name) -> Term:
        """Kernel head for a symbol: a constructor or a defined-symbol constant."""
        return _BUILTIN_HEADS.get(name) or K.Sym(name)

    def symbol_of_head(self, head: Term) -> Optional[SymbolDecl]:
        for n, h in _BUILTIN_HEADS.items():
            if h == head:
                return self.decl(n)
        if isinstance(head, K.Sym):
            return self.decl(head.name)
        return None

    def is_constructor(self, name) -> bool:
        d = self.decl(name)
        return d is not None and d.kind == "constructor"

    def user_symbols(self):
        return [d for d in self.symbols if d not in BUILTIN_SYMBOLS]


DEFAULT_SIGNATURE = Signature()


# ---------------------------------------------------------------------------
# first-order terms


@dataclass(frozen=True)
class AVar:
    name: str

    def __str__(self):
        return self.name


@dataclass(frozen=True)
class AApp:
    fn: str
    args: tuple = ()

    def __str__(self):
        if self.fn == "+" and len(self.args) == 2:
            return f"({self.args[0]} + {self.args[1]})"
        if not self.args:
            return self.fn
        return f"{self.fn}({', '.join(map(str, self.args))})"


@dataclass(frozen=True)
class AHole:
    """Hole of an algebraic context, filled by the ``index``-th alien."""
    index: int

    def __str__(self):
        return f"□{self.index}"


AlgTerm = Union[AVar, AApp]


@dataclass(frozen=True)
class AlgEquation:
    lhs: AlgTerm
    rhs: AlgTerm
    sort: SortExpr

    def __str__(self):
        return f"{self.lhs} = {self.rhs}"


def a_const(name):
    return AApp(name, ())


A_ZERO = AApp("0")


def a_succ(t):
    return AApp("S", (t,))


def a_plus(a, b):
    return AApp("+", (a, b))


def a_num(n: int) -> AlgTerm:
    t = A_ZERO
    for _ in range(n):
        t = a_succ(t)
    return t


FALSE_EQ = AlgEquation(A_ZERO, a_succ(A_ZERO), NAT_S)


def alien_name(sort: SortExpr, index: int) -> str:
    """Name of the ``index``-th abstraction variable of ``sort`` (1-based)."""
    return f"y⟨{sort}⟩_{index}"


def alg_vars(t) -> set:
    if isinstance(t, AVar):
        return {t.name}
    if isinstance(t, AApp):
        return set().union(*(alg_vars(a) for a in t.args)) if t.args else set()
    return set()


def fill_holes(t, fillers):
    if isinstance(t, AHole):
        return fillers[t.index]
    if isinstance(t, AApp):
        return AApp(t.fn, tuple(fill_holes(a, fillers) for a in t.args))
    return t


_fresh_counter = itertools.count()


def sort_of(t: AlgTerm, var_sorts: dict, sig: Signature = DEFAULT_SIGNATURE) -> Optional[SortExpr]:
    """Most general sort of ``t`` (None when ill-sorted).

    Instances of a polymorphic result are obtained with :func:`has_sort`.
    """
    flex = set()

    def go(t, xi):
        if isinstance(t, AVar):
            s = var_sorts.get(t.name)
            return (s, xi) if s is not None else (None, None)
        d = sig.decl(t.fn)
        if d is None or len(t.args) != d.arity:
            return None, None
        ren = {v: SortVar(f"?{v}{next(_fresh_counter)}") for v in d.tvars}
        flex.update(r.name for r in ren.values())
        for a, s in zip(t.args, d.args):
            sa, xi = go(a, xi)
            if sa is None:
                return None, None
            xi = unify_sorts(subst_sort(s, ren), sa, xi, flex)
            if xi is None:
                return None, None
        return subst_sort(d.result, ren), xi

    s, xi = go(t, {})
    if s is None:
        return None
    s = _resolve(s, xi)
    # rename leftover unification variables to α, β, ... for display
    names = iter("αβγδ")
    ren = {}
    for v in sorted(sort_vars(s)):
        if v.startswith("?"):
            ren[v] = SortVar(next(names, v))
    return subst_sort(s, ren)


def has_sort(t: AlgTerm, sort: SortExpr, var_sorts: dict, sig: Signature = DEFAULT_SIGNATURE) -> bool:
    """Check ``t`` against ``sort`` (sort variables in ``sort`` are rigid)."""
    if isinstance(t, AVar):
        return var_sorts.get(t.name) == sort
    if not isinstance(t, AApp):
        return False
    d = sig.decl(t.fn)
    if d is None or len(t.args) != d.arity:
        return False
    xi = match_sort(d.result, sort, tvars=set(d.tvars))
    if xi is None:
        return False
    arg_sorts, _ = d.instance(xi)
    return all(has_sort(a, s, var_sorts, sig) for a, s in zip(t.args, arg_sorts))


# ---------------------------------------------------------------------------
# embedding into kernel terms


def embed_sort(s: SortExpr) -> Term:
    """``nat`` -> the nat inductive, ``list(σ)`` -> ``list`` applied, ``α`` -> predicate variable."""
    if isinstance(s, SortVar):
        return FVar(s.name, True)
    if s.ctor == "nat":
        return K.NAT
    if s.ctor == "list":
        return App(K.LIST, embed_sort(s.args[0]))
    raise ValueError(f"no kernel inductive for sort {s}")


def unembed_sort(t: Term) -> Optional[SortExpr]:
    """Inverse of :func:`embed_sort` on normal forms; None for non-sorts."""
    if t == K.NAT:
        return NAT_S
    if isinstance(t, FVar) and t.pred:
        return SortVar(t.name)
    h, args = spine(t)
    if h == K.LIST and len(args) == 1:
        inner = unembed_sort(args[0])
        return None if inner is None else list_of(inner)
    return None


IND_DEFINITIONS = {
    "nat": "Ind(X : Prop){X, X -> X}",
    "list": "fun (T : Prop) => Ind(X : Prop){X, T -> X -> X}",
    "word": "Ind(X : nat -> Prop){X 0, letter -> X (S 0), forall (y z : nat), X y -> X z -> X (y + z)}",
}


def symbol_type(d: SymbolDecl) -> Term:
    """Curried kernel type of a declared symbol; sort variables become leading Prop binders."""
    names = list(d.tvars)
    body = embed_sort(d.result)
    for s in reversed(d.args):
        body = K.arrow(embed_sort(s), body)
    for v in reversed(names):
        body = K.Pi(v, Annot.U, K.PROP, K.abstract(body, v))
    return body


def embed_symbol(d: SymbolDecl, sig: Signature = DEFAULT_SIGNATURE):
    """Return ``(head, type)``: constructors map to ``Ctor`` terms, defined symbols to ``Sym``."""
    return sig.head_term(d.name), symbol_type(d)


def embed_term(t: AlgTerm, sort: SortExpr, sig: Signature = DEFAULT_SIGNATURE) -> Term:
    """Kernel term for ``t`` read at ``sort``; type parameters come from the sort."""
    if isinstance(t, AVar):
        return FVar(t.name, False)
    d = sig.decl(t.fn)
    xi = match_sort(d.result, sort, tvars=set(d.tvars))
    if xi is None:
        raise ValueError(f"{t} cannot have sort {sort}")
    arg_sorts, _ = d.instance(xi)
    targs = [embed_sort(xi[v]) for v in d.tvars]
    vargs = [embed_term(a, s, sig) for a, s in zip(t.args, arg_sorts)]
    return apps(sig.head_term(d.name), *targs, *vargs)


# ---------------------------------------------------------------------------
# s-expression encoding shared with certificates


def term_to_sexpr(t: AlgTerm):
    if isinstance(t, AVar):
        return t.name
    return [t.fn, [term_to_sexpr(a) for a in t.args]]


def term_from_sexpr(x) -> AlgTerm:
    if isinstance(x, str):
        return AVar(x)
    if (isinstance(x, list) and len(x) == 2 and isinstance(x[0], str) and isinstance(x[1], list)):
        return AApp(x[0], tuple(term_from_sexpr(a) for a in x[1]))
    raise ValueError(f"malformed term {x!r}")


def sort_to_sexpr(s: SortExpr):
    if isinstance(s, SortVar):
        return s.name
    return [s.ctor, [sort_to_sexpr(a) for a in s.args]]


def sort_from_sexpr(x) -> SortExpr:
    if isinstance(x, str):
        return SortVar(x)
    if (isinstance(x, list) and len(x) == 2 and isinstance(x[0], str) and isinstance(x[1], list)):
        return SortApp(x[0], tuple(sort_from_sexpr(a) for a in x[1]))
    raise ValueError(f"malformed sort {x!r}")
