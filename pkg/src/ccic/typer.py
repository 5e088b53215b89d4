"""Syntax-directed type inference with the algorithmic application rule.

There is no free-standing conversion rule: conversion happens where an
expected type meets an inferred one (arguments, eliminator motives and
branches, and the top-level :meth:`Kernel.check`).  Arguments of restricted
products whose domain is an equation between objects must also have their
equation sides convertible.
"""
from __future__ import annotations

from itertools import count
from typing import Optional

from . import terms as K
from .algebra import Signature, symbol_type
from .conversion import Converter, Settings
from .errors import GuardFailed, IllFormedElim, StrongElimForbidden, TypeMismatch, UnboundVariable
from .reduction import whnf
from .syntax import pretty
from .terms import (
    Annot, App, BVar, Context, Ctor, Elim, Eqn, FVar, Ind, Lam, Pi, Refl, Sort, SortT, Sym, Term,
    abstract, apps, arrow, class_of, instantiate, var_for,
)

SMALL_INDUCTIVES = frozenset({"nat", "list"})

_IND_TYPES = {
    "nat": K.PROP,
    "list": arrow(K.PROP, K.PROP),
    "word": arrow(K.NAT, K.PROP),
    "letter": K.PROP,
}


def _ctor_types():
    T = FVar("T", True)
    n, m = FVar("n"), FVar("m")

    def pi(v, dom, body):
        return Pi(v.name, Annot.U, dom, abstract(body, v.name))

    word = lambda k: App(K.WORD, k)
    return {
        K.ZERO: K.NAT,
        K.SUCC: arrow(K.NAT, K.NAT),
        K.NIL: pi(T, K.PROP, App(K.LIST, T)),
        K.CONS: pi(T, K.PROP, arrow(T, arrow(App(K.LIST, T), App(K.LIST, T)), Annot.U)),
        K.EPSILON: word(K.ZERO),
        K.CHAR: arrow(K.LETTER, word(K.succ(K.ZERO))),
        K.WAPP: pi(n, K.NAT, pi(m, K.NAT, arrow(word(n), arrow(word(m), word(K.plus(n, m)))))),
    }


CTOR_TYPES = _ctor_types()


def check_strong_elim_guard(ind: str, motive_sort: Term, small=SMALL_INDUCTIVES) -> bool:
    """Elimination into Type is allowed for small inductive types only."""
    if motive_sort == K.TYPE and ind not in small:
        raise StrongElimForbidden(f"strong elimination of {ind} is not allowed")
    return True


class Kernel:
    """Type inference for one signature and conversion configuration.

    Certificates produced by conversion queries accumulate in ``certificates``
    in the order the queries were made.
    """

    def __init__(self, settings: Optional[Settings] = None, small=SMALL_INDUCTIVES):
        self.conv = Converter(settings)
        self.small = small
        self.certificates = []
        self._tmp = count()

    @property
    def sig(self) -> Signature:
        return self.conv.cfg.sig

    # -- helpers -------------------------------------------------------------

    def whnf(self, ctx: Context, t: Term) -> Term:
        return whnf(t, ctx.definitions(), self.conv.cfg.fuel)

    def convert(self, ctx: Context, expected: Term, actual: Term, what: str):
        ok, certs = self.conv.convertible(ctx, expected, actual)
        if not ok:
            e = self.conv.normalize(expected, ctx)
            a = self.conv.normalize(actual, ctx)
            raise TypeMismatch(f"{what}: expected {_show(e)}, got {_show(a)}", e, a)
        self.certificates.extend(certs)

    def sort_of_type(self, ctx: Context, ty: Term, what="type") -> Term:
        s = self.whnf(ctx, self.infer(ctx, ty))
        if not (isinstance(s, SortT) and s.sort in (Sort.PROP, Sort.TYPE)):
            raise TypeMismatch(f"{what} {_show(ty)} is not a type", None, s)
        return s

    def open(self, ctx: Context, binder):
        name = ctx.fresh(binder.name)
        v = var_for(name, binder.dom)
        return ctx.extend(name, binder.annot, binder.dom), v, instantiate(binder.body, v)

    def tmp(self) -> str:
        return f"%{next(self._tmp)}"

    # -- inference -------------------------------------------------------------

    def infer(self, ctx: Context, t: Term) -> Term:
        match t:
            case SortT(Sort.PROP):
                return K.TYPE
            case SortT(Sort.TYPE):
                return K.EXTERN
            case SortT(Sort.EXTERN):
                raise TypeMismatch("Extern has no type")
            case BVar():
                raise UnboundVariable("loose bound variable")
            case FVar(name, _):
                b = ctx.lookup(name)
                if b is None:
                    raise UnboundVariable(f"unbound variable {name}")
                return b.type
            case Sym(name):
                d = self.sig.decl(name)
                if d is None:
                    raise UnboundVariable(f"unknown symbol {name}")
                return symbol_type(d)
            case Ind(name):
                return _IND_TYPES[name]
            case Ctor():
                return CTOR_TYPES[t]
            case Pi(_, _, dom, _):
                self.sort_of_type(ctx, dom, "domain")
                inner, _, body = self.open(ctx, t)
                return self.sort_of_type(inner, body, "codomain")
            case Lam(name, annot, dom, _):
                self.sort_of_type(ctx, dom, "domain")
                inner, v, body = self.open(ctx, t)
                bty = self.infer(inner, body)
                return Pi(name, annot, dom, abstract(bty, v.name))
            case App(f, a):
                return self.infer_app(ctx, f, a)
            case Eqn(l, r, ty):
                s = self.sort_of_type(ctx, ty, "equation type")
                if s != K.PROP:
                    raise TypeMismatch("equations relate objects of a Prop type", K.PROP, s)
                self.convert(ctx, ty, self.infer(ctx, l), "left side of equation")
                self.convert(ctx, ty, self.infer(ctx, r), "right side of equation")
                return K.PROP
            case Refl(ty, a):
                s = self.sort_of_type(ctx, ty, "equation type")
                if s != K.PROP:
                    raise TypeMismatch("equations relate objects of a Prop type", K.PROP, s)
                self.convert(ctx, ty, self.infer(ctx, a), "argument of Eq")
                return Eqn(a, a, ty)
            case Elim():
                return self.infer_elim(ctx, t)
        raise TypeMismatch(f"cannot type {t!r}")

    def infer_app(self, ctx: Context, f: Term, a: Term) -> Term:
        fty = self.whnf(ctx, self.infer(ctx, f))
        if not isinstance(fty, Pi):
            raise TypeMismatch(f"{_show(f)} is applied but has type {_show(fty)}", None, fty)
        self.convert(ctx, fty.dom, self.infer(ctx, a), f"argument {_show(a)}")
        if fty.annot is Annot.R:
            eq = whnf(fty.dom, None, self.conv.cfg.fuel, beta_only=True)
            if isinstance(eq, Eqn) and class_of(eq.lhs) is K.O and class_of(eq.rhs) is K.O:
                ok, certs = self.conv.convertible(ctx, eq.lhs, eq.rhs)
                if not ok:
                    raise GuardFailed(
                        f"restricted argument {_show(a)}: {_show(eq.lhs)} and {_show(eq.rhs)} are not convertible",
                        eq.lhs, eq.rhs)
                self.certificates.extend(certs)
        return instantiate(fty.body, a)

    # -- eliminators -----------------------------------------------------------

    def _pi(self, name, dom, build):
        """``Π(name : dom). build(x)`` built through a temporary free variable."""
        v = FVar(self.tmp(), class_of(dom) is K.K)
        return Pi(name, Annot.U, dom, abstract(build(v), v.name))

    def infer_elim(self, ctx: Context, e: Elim) -> Term:
        arity = {"nat": (0, 2), "list": (1, 2), "word": (1, 3)}.get(e.ind)
        if arity is None:
            raise IllFormedElim(f"no eliminator for {e.ind}")
        if (len(e.indices), len(e.branches)) != arity:
            raise IllFormedElim(f"Elim over {e.ind} takes {arity[0]} indices and {arity[1]} branches")
        # scrutinee
        sty = self.infer(ctx, e.scrut)
        expected_scrut = apps(Ind(e.ind), *e.indices)
        for x in e.indices:
            if e.ind == "list":
                if self.sort_of_type(ctx, x, "list parameter") != K.PROP:
                    raise IllFormedElim("list parameter must be a Prop type")
            else:
                self.convert(ctx, K.NAT, self.infer(ctx, x), "index")
        self.convert(ctx, expected_scrut, sty, "scrutinee")
        # motive
        motive_sort = self._motive_sort(ctx, e)
        check_strong_elim_guard(e.ind, motive_sort, self.small)
        # branches
        names = [_lam_names(b) for b in e.branches]
        for i, (b, want) in enumerate(zip(e.branches, self._branch_types(e, names)), 1):
            self.convert(ctx, want, self.infer(ctx, b), f"branch {i} of Elim over {e.ind}")
        if e.ind == "list":
            # the list slot holds the type parameter, which the motive does not take
            return App(e.motive, e.scrut)
        return apps(e.motive, *e.indices, e.scrut)

    def _motive_sort(self, ctx: Context, e: Elim) -> Term:
        qty = self.infer(ctx, e.motive)
        ty = self.whnf(ctx, qty)
        if e.ind == "word":
            if not isinstance(ty, Pi):
                raise IllFormedElim(f"motive of Elim over word must take an index, got {_show(qty)}")
            self.convert(ctx, K.NAT, ty.dom, "motive index")
            inner, n, body = self.open(ctx, ty)
            ty = self.whnf(inner, body)
            if not isinstance(ty, Pi):
                raise IllFormedElim(f"motive of Elim over word must take a word, got {_show(qty)}")
            self.convert(inner, App(K.WORD, n), ty.dom, "motive domain")
            inner, _, body = self.open(inner, ty)
            s = self.whnf(inner, body)
        else:
            if not isinstance(ty, Pi):
                raise IllFormedElim(f"motive of Elim over {e.ind} must be a function, got {_show(qty)}")
            self.convert(ctx, apps(Ind(e.ind), *e.indices), ty.dom, "motive domain")
            inner, _, body = self.open(ctx, ty)
            s = self.whnf(inner, body)
        if s not in (K.PROP, K.TYPE):
            raise IllFormedElim(f"motive must return a sort, got {_show(qty)}")
        return s

    def _branch_types(self, e: Elim, names):
        Q = e.motive
        pi = self._pi

        def nm(i, k, default):
            ns = names[i]
            return ns[k] if k < len(ns) else default

        if e.ind == "nat":
            return [
                App(Q, K.ZERO),
                pi(nm(1, 0, "p"), K.NAT, lambda p: pi(nm(1, 1, "h"), App(Q, p),
                                                      lambda _: App(Q, K.succ(p)))),
            ]
        if e.ind == "list":
            (T,) = e.indices
            L = App(K.LIST, T)
            return [
                App(Q, App(K.NIL, T)),
                pi(nm(1, 0, "x"), T, lambda x: pi(nm(1, 1, "l"), L, lambda l: pi(
                    nm(1, 2, "h"), App(Q, l), lambda _: App(Q, apps(K.CONS, T, x, l))))),
            ]
        W = lambda k: App(K.WORD, k)
        return [
            apps(Q, K.ZERO, K.EPSILON),
            pi(nm(1, 0, "x"), K.LETTER, lambda x: apps(Q, K.succ(K.ZERO), App(K.CHAR, x))),
            pi(nm(2, 0, "n"), K.NAT, lambda n: pi(nm(2, 1, "m"), K.NAT, lambda m: pi(
                nm(2, 2, "l"), W(n), lambda l: pi(nm(2, 3, "l'"), W(m), lambda l2: pi(
                    nm(2, 4, "h"), apps(Q, n, l), lambda _: pi(
                        nm(2, 5, "h'"), apps(Q, m, l2),
                        lambda _: apps(Q, K.plus(n, m), apps(K.WAPP, n, m, l, l2)))))))),
        ]

    # -- entry points ------------------------------------------------------------

    def check(self, ctx: Context, t: Term, ty: Term) -> list:
        """Check ``t : ty``; return the certificates of this query."""
        start = len(self.certificates)
        if ty != K.TYPE:
            self.sort_of_type(ctx, ty)
        self.convert(ctx, ty, self.infer(ctx, t), f"{_show(t)}")
        return self.certificates[start:]


def _lam_names(t: Term) -> list:
    out = []
    while isinstance(t, Lam):
        out.append(t.name)
        t = t.body
    return out


def _show(t: Term) -> str:
    try:
        return pretty(t)
    except ValueError:
        return repr(t)


def infer(ctx: Context, t: Term, settings: Optional[Settings] = None) -> Term:
    return Kernel(settings).infer(ctx, t)


def check(ctx: Context, t: Term, ty: Term, settings: Optional[Settings] = None) -> list:
    return Kernel(settings).check(ctx, t, ty)
