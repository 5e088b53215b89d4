"""Beta, iota and delta reduction, normalization, and weakness.

Delta covers the two first-order defined symbols with computational content:
``+`` recurses on its first argument and ``@`` on its first list argument.
Both fire only once that argument is constructor-headed, which is exactly how
their eliminator-based definitions compute.
"""
from __future__ import annotations

import enum
from typing import Optional

from .errors import FuelExhausted
from .terms import (
    App, CONS, Ctor, Elim, Eqn, FVar, Lam, NIL, PLUS, APPEND, Pi, Refl, SUCC, ZERO,
    Sym, Term, apps, children, instantiate, is_weak, spine,
)

DEFAULT_FUEL = 10**6


class RedexKind(enum.Enum):
    BETA = "beta"
    IOTA_NAT = "iota-nat"
    IOTA_LIST = "iota-list"
    IOTA_WORD = "iota-word"
    DELTA = "delta"


def _ctor_app(t: Term):
    h, args = spine(t)
    if isinstance(h, Ctor):
        return h, args
    return None


def iota(e: Elim, scrut_ctor, ctor_args) -> Optional[Term]:
    """Contract ``e`` whose scrutinee is ``scrut_ctor ctor_args``."""
    if scrut_ctor.ind != e.ind:
        return None
    bs = e.branches

    def rec(s, indices=e.indices):
        return Elim(s, e.ind, tuple(indices), e.motive, bs)

    match (e.ind, scrut_ctor.index, len(ctor_args)):
        case ("nat", 1, 0):
            return bs[0]
        case ("nat", 2, 1):
            (x,) = ctor_args
            return apps(bs[1], x, rec(x))
        case ("list", 1, 1):
            return bs[0]
        case ("list", 2, 3):
            _, x, l = ctor_args
            return apps(bs[1], x, l, rec(l))
        case ("word", 1, 0):
            return bs[0]
        case ("word", 2, 1):
            return App(bs[1], ctor_args[0])
        case ("word", 3, 4):
            n, m, l, l2 = ctor_args
            return apps(bs[2], n, m, l, l2, rec(l, (n,)), rec(l2, (m,)))
    return None


_IOTA_KIND = {"nat": RedexKind.IOTA_NAT, "list": RedexKind.IOTA_LIST, "word": RedexKind.IOTA_WORD}


def delta(head, args) -> Optional[Term]:
    """Unfold ``+ a b`` / ``@ T l l'`` once their recursive argument is a constructor."""
    if head == PLUS and len(args) >= 2:
        c = _ctor_app(args[0])
        if c is None:
            return None
        ctor, cargs = c
        if ctor == ZERO and not cargs:
            res = args[1]
        elif ctor == SUCC and len(cargs) == 1:
            res = App(SUCC, apps(PLUS, cargs[0], args[1]))
        else:
            return None
        return apps(res, *args[2:])
    if head == APPEND and len(args) >= 3:
        c = _ctor_app(args[1])
        if c is None:
            return None
        ctor, cargs = c
        ty, rest = args[0], args[2]
        if ctor == NIL and len(cargs) == 1:
            res = rest
        elif ctor == CONS and len(cargs) == 3:
            res = apps(CONS, ty, cargs[1], apps(APPEND, ty, cargs[2], rest))
        else:
            return None
        return apps(res, *args[3:])
    return None


def head_redex(t: Term, defs=None):
    """Contract a redex at the root of ``t``; return ``(kind, result)`` or None."""
    if isinstance(t, App) and isinstance(t.fn, Lam):
        return RedexKind.BETA, instantiate(t.fn.body, t.arg)
    if isinstance(t, Elim):
        c = _ctor_app(t.scrut)
        if c is not None:
            r = iota(t, *c)
            if r is not None:
                return _IOTA_KIND[t.ind], r
        return None
    if defs and isinstance(t, FVar) and t.name in defs:
        return RedexKind.DELTA, defs[t.name]
    h, args = spine(t)
    if isinstance(h, Sym) and args:
        # only the full application is a redex, never a partial one
        need = 2 if h == PLUS else 3 if h == APPEND else None
        if need is not None and len(args) == need:
            r = delta(h, args)
            if r is not None:
                return RedexKind.DELTA, r
    return None


def _rebuild(t: Term, kids: list) -> Term:
    match t:
        case Pi(n, a, _, _):
            return Pi(n, a, kids[0], kids[1])
        case Lam(n, a, _, _):
            return Lam(n, a, kids[0], kids[1])
        case App():
            return App(kids[0], kids[1])
        case Eqn():
            return Eqn(*kids)
        case Refl():
            return Refl(*kids)
        case Elim(_, ind, idx, _, _):
            k = len(idx)
            return Elim(kids[0], ind, tuple(kids[1:1 + k]), kids[1 + k], tuple(kids[2 + k:]))
    raise AssertionError(t)


def step(t: Term, defs=None) -> Optional[Term]:
    """One leftmost-outermost reduction step, or None when ``t`` is normal."""
    r = head_redex(t, defs)
    if r is not None:
        return r[1]
    kids = list(children(t))
    for i, k in enumerate(kids):
        s = step(k, defs)
        if s is not None:
            kids[i] = s
            return _rebuild(t, kids)
    return None


class _Fuel:
    __slots__ = ("left",)

    def __init__(self, n):
        self.left = n

    def burn(self):
        self.left -= 1
        if self.left < 0:
            raise FuelExhausted("reduction step bound exhausted")


def whnf(t: Term, defs=None, fuel=None, beta_only=False) -> Term:
    """Weak-head normal form (head reduction only)."""
    fuel = fuel if isinstance(fuel, _Fuel) else _Fuel(DEFAULT_FUEL if fuel is None else fuel)
    while True:
        h, args = spine(t)
        if isinstance(h, Lam) and args:
            fuel.burn()
            t = apps(instantiate(h.body, args[0]), *args[1:])
            continue
        if beta_only:
            return t
        if defs and isinstance(h, FVar) and h.name in defs:
            fuel.burn()
            t = apps(defs[h.name], *args)
            continue
        if isinstance(h, Elim):
            s = whnf(h.scrut, defs, fuel)
            c = _ctor_app(s)
            r = iota(h, *c) if c is not None else None
            if r is None:
                return t
            fuel.burn()
            t = apps(r, *args)
            continue
        if h == PLUS and len(args) >= 2:
            r = delta(h, [whnf(args[0], defs, fuel)] + args[1:])
            if r is None:
                return t
            fuel.burn()
            t = r
            continue
        if h == APPEND and len(args) >= 3:
            r = delta(h, [args[0], whnf(args[1], defs, fuel)] + args[2:])
            if r is None:
                return t
            fuel.burn()
            t = r
            continue
        return t


def normalize(t: Term, defs=None, fuel=None) -> Term:
    """beta-iota(-delta) normal form; raises FuelExhausted past the step bound."""
    fuel = fuel if isinstance(fuel, _Fuel) else _Fuel(DEFAULT_FUEL if fuel is None else fuel)
    return _nf(t, defs, fuel)


def _nf(t, defs, fuel):
    t = whnf(t, defs, fuel)
    match t:
        case Pi(n, a, d, b):
            return Pi(n, a, _nf(d, defs, fuel), _nf(b, defs, fuel))
        case Lam(n, a, d, b):
            return Lam(n, a, _nf(d, defs, fuel), _nf(b, defs, fuel))
        case App():
            h, args = spine(t)
            return apps(_nf(h, defs, fuel), *(_nf(a, defs, fuel) for a in args))
        case Eqn(l, r, ty):
            return Eqn(_nf(l, defs, fuel), _nf(r, defs, fuel), _nf(ty, defs, fuel))
        case Refl(ty, a):
            return Refl(_nf(ty, defs, fuel), _nf(a, defs, fuel))
        case Elim(s, ind, idx, q, bs):
            return Elim(_nf(s, defs, fuel), ind, tuple(_nf(x, defs, fuel) for x in idx),
                        _nf(q, defs, fuel), tuple(_nf(x, defs, fuel) for x in bs))
    return t


def beta_normalize(t: Term, fuel=None) -> Term:
    """Head beta reduction only, as used by the restricted-argument guard."""
    return whnf(t, None, fuel, beta_only=True)


__all__ = ["RedexKind", "step", "whnf", "normalize", "beta_normalize", "is_weak", "head_redex",
           "DEFAULT_FUEL"]
