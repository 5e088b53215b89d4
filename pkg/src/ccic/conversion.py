"""Conversion modulo the first-order theory.

:meth:`Converter.weak_convertible` is the syntax-directed relation on
βι-normal forms; :meth:`Converter.convertible` normalizes its inputs and the
context first and is what the typer calls.  Each successful theory call
(rules Ded and Unsat) produces a :class:`~ccic.certificates.Certificate`.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

from .algebra import (
    AApp, AHole, AVar, AlgEquation, DEFAULT_SIGNATURE, Signature, alg_vars, fill_holes, unembed_sort,
)
from .algebraize import AlienPool, algebraic_cap, candidate_sorts
from .certificates import AlienEntry, Certificate, ContextEntry, Hypothesis, SymbolEntry
from .reduction import DEFAULT_FUEL, normalize, whnf
from .solver import entails, is_unsat
from .syntax import pretty
from .terms import (
    Annot, App, Binding, Context, Elim, Eqn, Lam, Pi, Refl, SortT, Sym, SyntacticClass, Term,
    children, class_of, free_vars, instantiate, is_weak, var_for,
)

O = SyntacticClass.O


@dataclass
class Settings:
    sig: Signature = DEFAULT_SIGNATURE
    plain_cic: bool = False
    extract_annot: Annot = Annot.R
    fuel: int = DEFAULT_FUEL
    rule_log: Optional[list] = None  # when a list, every applied rule is appended to it


def _symbols_in(t: Term) -> set:
    match t:
        case Sym(name):
            return {name}
    out = set()
    for c in children(t):
        out |= _symbols_in(c)
    return out


class Converter:
    def __init__(self, settings: Optional[Settings] = None):
        self.cfg = settings or Settings()
        self._norm_bindings = {}
        self._eqs = {}
        self._unsat = {}

    # -- context information -------------------------------------------------

    def normalize(self, t: Term, ctx: Context) -> Term:
        return normalize(t, ctx.definitions(), self.cfg.fuel)

    def normalize_context(self, ctx: Context) -> Context:
        """Context with every binding type in normal form (cached per binding)."""
        defs = {}
        out = []
        for b in ctx:
            hit = self._norm_bindings.get(id(b))
            if hit is None or hit[0] is not b:
                hit = (b, Binding(b.name, b.annot, normalize(b.type, defs, self.cfg.fuel), b.value))
                self._norm_bindings[id(b)] = hit
            out.append(hit[1])
            if b.value is not None:
                defs[b.name] = b.value
        return Context(out)

    @staticmethod
    def var_sorts(ctx: Context) -> dict:
        out = {}
        for b in ctx:
            s = unembed_sort(b.type)
            if s is not None:
                out[b.name] = s
        return out

    def equations(self, ctx: Context) -> tuple:
        """Eq(Γ) as ``((equation, source), ...)``; binding types are taken as they are."""
        if self.cfg.plain_cic:
            return ()
        key = ctx.bindings
        if key in self._eqs:
            return self._eqs[key]
        vs = self.var_sorts(ctx)
        out = []
        defs = {}
        for b in ctx:
            if b.annot is self.cfg.extract_annot:
                eq = self._extractable(whnf(b.type, defs, self.cfg.fuel), vs)
                if eq is not None:
                    out.append((eq, b.name))
            if b.value is not None:
                defs[b.name] = b.value
        self._eqs[key] = tuple(out)
        return self._eqs[key]

    def _extractable(self, ty: Term, vs: dict) -> Optional[AlgEquation]:
        if not isinstance(ty, Eqn):
            return None
        sort = unembed_sort(ty.ty)
        if sort is None:
            return None
        caps = [algebraic_cap(side, sort, vs, self.cfg.sig) for side in (ty.lhs, ty.rhs)]
        if any(aliens for _, aliens in caps):
            return None
        return AlgEquation(caps[0][0], caps[1][0], sort)

    def extract_eqs(self, ctx: Context) -> tuple:
        """Eq(Γ) after normalizing every binding type."""
        return self.equations(self.normalize_context(ctx))

    def unsat_certificate(self, ctx: Context) -> Optional[Certificate]:
        eqs = self.equations(ctx)
        if not eqs:
            return None
        key = ctx.bindings
        if key not in self._unsat:
            out = is_unsat([e for e, _ in eqs], self.var_sorts(ctx), self.cfg.sig)
            self._unsat[key] = out if out.entailed else None
        out = self._unsat[key]
        if out is None:
            return None
        return self.certificate(ctx, eqs, out, None, AlienPool())

    def in_o_plus(self, t: Term, ctx: Optional[Context] = None) -> bool:
        ctx = ctx or Context()
        if class_of(t) is not O:
            return False
        n = self.normalize(t, ctx)
        vs = self.var_sorts(self.normalize_context(ctx))
        for s in candidate_sorts(n, vs, self.cfg.sig):
            if not algebraic_cap(n, s, vs, self.cfg.sig)[1]:
                return True
        return False

    # -- the relation ----------------------------------------------------------

    def _log(self, rule):
        if self.cfg.rule_log is not None:
            self.cfg.rule_log.append(rule)

    def convertible(self, ctx: Context, t: Term, u: Term):
        """``(ok, certificates)`` for ``t ~Γ u``."""
        nctx = self.normalize_context(ctx)
        return self.weak_convertible(nctx, self.normalize(t, ctx), self.normalize(u, ctx))

    def weak_convertible(self, ctx: Context, t: Term, u: Term):
        """``(ok, certificates)`` for the syntax-directed relation on normal forms."""
        if isinstance(t, SortT) and t == u:
            self._log("Refl-Sort")
            return True, []
        both_o = not self.cfg.plain_cic and class_of(t) is O and class_of(u) is O
        if both_o:
            cert = self.unsat_certificate(ctx)
            if cert is not None:
                self._log("Unsat")
                return True, [cert]
        if t == u:
            self._log("Refl")
            return True, []
        ok, certs = self._structural(ctx, t, u)
        if ok:
            return True, certs
        if both_o:
            return self.ded(ctx, t, u)
        return False, []

    def _all(self, ctx, pairs):
        certs = []
        for a, b in pairs:
            ok, cs = self.weak_convertible(ctx, a, b)
            if not ok:
                return False, []
            certs.extend(cs)
        return True, certs

    def _structural(self, ctx, t, u):
        match t, u:
            case (Lam(), Lam()) | (Pi(), Pi()) if type(t) is type(u) and t.annot is u.annot:
                ok, c1 = self.weak_convertible(ctx, t.dom, u.dom)
                if not ok:
                    return False, []
                name = ctx.fresh(t.name)
                v = var_for(name, t.dom)
                inner = ctx.extend(name, t.annot, t.dom)
                ok, c2 = self.weak_convertible(inner, instantiate(t.body, v), instantiate(u.body, v))
                if ok:
                    self._log("Lam" if isinstance(t, Lam) else "Prod")
                    return True, c1 + c2
            case (Elim(), Elim()):
                if (t.scrut == u.scrut and t.ind == u.ind and len(t.indices) == len(u.indices)
                        and len(t.branches) == len(u.branches)
                        and all(is_weak(x) for x in (t.scrut, *t.branches, *u.branches))):
                    ok, cs = self._all(ctx, [*zip(t.indices, u.indices), (t.motive, u.motive),
                                             *zip(t.branches, u.branches)])
                    if ok:
                        self._log("W")
                        return True, cs
            case (App(), App()):
                if is_weak(t) and is_weak(u):
                    ok, cs = self._all(ctx, [(t.fn, u.fn), (t.arg, u.arg)])
                    if ok:
                        self._log("App-W")
                        return True, cs
            case (Eqn(), Eqn()):
                ok, cs = self._all(ctx, [(t.ty, u.ty), (t.lhs, u.lhs), (t.rhs, u.rhs)])
                if ok:
                    self._log("Eqn")
                    return True, cs
            case (Refl(), Refl()):
                ok, cs = self._all(ctx, [(t.ty, u.ty), (t.arg, u.arg)])
                if ok:
                    self._log("Eq")
                    return True, cs
        return False, []

    def ded(self, ctx: Context, t: Term, u: Term):
        sig = self.cfg.sig
        vs = self.var_sorts(ctx)
        sorts = []
        for s in candidate_sorts(t, vs, sig) + candidate_sorts(u, vs, sig):
            if s not in sorts:
                sorts.append(s)
        for sort in sorts:
            ct, at = algebraic_cap(t, sort, vs, sig)
            cu, au = algebraic_cap(u, sort, vs, sig)
            if isinstance(ct, AHole) and isinstance(cu, AHole):
                continue
            pool = AlienPool()
            nested = []

            def oracle(a, b):
                ok, cs = self.weak_convertible(ctx, a, b)
                if ok:
                    nested.extend(cs)
                return ok

            lhs = fill_holes(ct, [AVar(pool.lookup(a, s, oracle)) for a, s in at])
            rhs = fill_holes(cu, [AVar(pool.lookup(a, s, oracle)) for a, s in au])
            goal = AlgEquation(lhs, rhs, sort)
            eqs = self.equations(ctx)
            out = entails([e for e, _ in eqs], goal, {**vs, **pool.sorts()}, sig)
            if out.entailed:
                self._log("Ded")
                return True, nested + [self.certificate(ctx, eqs, out, goal, pool)]
        return False, []

    # -- certificates ----------------------------------------------------------

    def certificate(self, ctx: Context, eqs, outcome, goal, pool: AlienPool) -> Certificate:
        sources = {}
        for eq, src in eqs:
            sources.setdefault(eq, src)
        hyps = tuple(Hypothesis(sources[e], e) for e in outcome.hyps_used)
        aliens = pool.table()
        needed = set()
        for h in hyps:
            needed |= alg_vars(h.eq.lhs) | alg_vars(h.eq.rhs) | {h.source}
        if goal is not None:
            needed |= alg_vars(goal.lhs) | alg_vars(goal.rhs)
        for _, _, rep in aliens:
            needed |= free_vars(rep)
        chosen = snapshot(ctx, needed)
        symbols = set()
        for b in chosen:
            symbols |= _symbols_in(b.type)
        for _, _, rep in aliens:
            symbols |= _symbols_in(rep)
        for h in hyps:
            symbols |= _alg_symbols(h.eq.lhs) | _alg_symbols(h.eq.rhs)
        if goal is not None:
            symbols |= _alg_symbols(goal.lhs) | _alg_symbols(goal.rhs)
        entries = [SymbolEntry(d.name, d.args, d.result) for d in self.cfg.sig.user_symbols() if d.name in symbols]
        for b in chosen:
            entries.append(ContextEntry(b.name, b.annot.value, pretty(b.type), unembed_sort(b.type)))
        return Certificate(
            tuple(entries), hyps, goal,
            tuple(AlienEntry(name, sort, pretty(rep)) for name, sort, rep in aliens),
            tuple(outcome.trace),
        )


def snapshot(ctx: Context, needed: set) -> list:
    """Bindings recorded in a certificate.

    Starting from ``needed``, close downwards under the free variables of
    types, then add each remaining binding whose type mentions a recorded
    variable unless an already recorded binding has the same type, and close
    downwards again.
    """
    chosen = set()

    def close(names):
        todo = [n for n in names if n in ctx]
        while todo:
            n = todo.pop()
            if n in chosen:
                continue
            chosen.add(n)
            todo.extend(m for m in free_vars(ctx.lookup(n).type) if m in ctx)

    close(needed)
    types = [ctx.lookup(n).type for n in chosen]
    extra = []
    for b in ctx:
        if b.name in chosen or not (free_vars(b.type) & chosen):
            continue
        if any(b.type == ty for ty in types):
            continue
        extra.append(b.name)
        types.append(b.type)
    close(extra)
    return [b for b in ctx if b.name in chosen]


def _alg_symbols(t) -> set:
    if isinstance(t, AApp):
        out = {t.fn}
        for a in t.args:
            out |= _alg_symbols(a)
        return out
    return set()


_default = Converter()


def convertible(ctx: Context, t: Term, u: Term, converter: Optional[Converter] = None):
    return (converter or _default).convertible(ctx, t, u)


def weak_convertible(ctx: Context, t: Term, u: Term, converter: Optional[Converter] = None):
    return (converter or _default).weak_convertible(ctx, t, u)


def extract_eqs(ctx: Context, converter: Optional[Converter] = None):
    return (converter or _default).extract_eqs(ctx)


def in_o_plus(t: Term, ctx: Optional[Context] = None, converter: Optional[Converter] = None) -> bool:
    return (converter or _default).in_o_plus(t, ctx)
