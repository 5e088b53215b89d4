"""Translation of kernel terms into sort-indexed first-order terms.

Subterms that are not applications of signature symbols at the requested sort
(and are not variables of that sort) become *aliens*, abstracted by variables
drawn from an :class:`AlienPool` modulo a caller-supplied equivalence.
"""
from __future__ import annotations

from typing import Callable, Optional

from .algebra import (
    AApp, AHole, AVar, AlgTerm, DEFAULT_SIGNATURE, Signature, SortExpr, alien_name, fill_holes,
    match_sort, unembed_sort,
)
from .terms import FVar, Term, alpha_eq, spine


class AlienPool:
    """Per-sort table from equivalence classes of kernel terms to abstraction variables.

    Class indices are assigned in first-occurrence order, starting at 1.
    """

    def __init__(self):
        self.classes = {}  # sort -> list of (representative term, variable name)

    def lookup(self, term: Term, sort: SortExpr, oracle: Callable = alpha_eq) -> str:
        entries = self.classes.setdefault(sort, [])
        for rep, name in entries:
            if rep == term or oracle(rep, term):
                return name
        name = alien_name(sort, len(entries) + 1)
        entries.append((term, name))
        return name

    def table(self):
        """``[(name, sort, representative)]`` in creation order per sort."""
        out = []
        for sort, entries in self.classes.items():
            out.extend((name, sort, rep) for rep, name in entries)
        return out

    def sorts(self) -> dict:
        return {name: sort for sort, entries in self.classes.items() for _, name in entries}


def is_well_applied(t: Term, sig: Signature = DEFAULT_SIGNATURE):
    """Decompose ``f T.. t1 .. tn`` matching the declared arity of ``f``; None otherwise.

    Well-formedness of the arguments is not required.
    """
    h, args = spine(t)
    d = sig.symbol_of_head(h)
    if d is None or len(args) != len(d.tvars) + d.arity:
        return None
    k = len(d.tvars)
    return d, list(args[:k]), list(args[k:])


def algebraic_cap(t: Term, sort: SortExpr, var_sorts: dict, sig: Signature = DEFAULT_SIGNATURE):
    """Split ``t`` into its maximal algebraic context and the aliens filling its holes.

    Returns ``(context, [(alien, sort), ...])``; hole ``i`` of the context is the
    ``i``-th alien.  The context is a bare hole when ``t`` itself is an alien.
    """
    aliens = []

    def go(u, s):
        if isinstance(u, FVar) and not u.pred and var_sorts.get(u.name) == s:
            return AVar(u.name)
        w = is_well_applied(u, sig)
        if w is not None:
            d, _, vargs = w
            xi = match_sort(d.result, s, tvars=set(d.tvars))
            if xi is not None:
                arg_sorts, _ = d.instance(xi)
                return AApp(d.name, tuple(go(a, sa) for a, sa in zip(vargs, arg_sorts)))
        aliens.append((u, s))
        return AHole(len(aliens) - 1)

    return go(t, sort), aliens


def is_algebraic(t: Term, sort: SortExpr, var_sorts: dict, sig: Signature = DEFAULT_SIGNATURE) -> bool:
    return not algebraic_cap(t, sort, var_sorts, sig)[1]


def algebraise(t: Term, sort: SortExpr, oracle: Callable = alpha_eq, pool: Optional[AlienPool] = None,
               var_sorts: Optional[dict] = None, sig: Signature = DEFAULT_SIGNATURE) -> AlgTerm:
    """``Alg(t)(sort)`` modulo ``oracle``; aliens are drawn from (and recorded in) ``pool``."""
    pool = AlienPool() if pool is None else pool
    cap, aliens = algebraic_cap(t, sort, var_sorts or {}, sig)
    fillers = [AVar(pool.lookup(a, s, oracle)) for a, s in aliens]
    return fill_holes(cap, fillers)


def candidate_sorts(t: Term, var_sorts: dict, sig: Signature = DEFAULT_SIGNATURE) -> list:
    """Sorts at which ``t`` could be read as a first-order term, most specific first."""
    if isinstance(t, FVar) and t.name in var_sorts:
        return [var_sorts[t.name]]
    w = is_well_applied(t, sig)
    if w is None:
        return []
    d, targs, _ = w
    xi = {}
    for v, ty in zip(d.tvars, targs):
        s = unembed_sort(ty)
        if s is None:
            return []
        xi[v] = s
    _, res = d.instance(xi)
    return [res]
