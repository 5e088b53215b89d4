"""Proof traces for theory calls and their replay.

A trace is a list of JSON-ready step dictionaries; each step concludes one
sorted equation from earlier steps.  Traces are canonical: fields appear in
the order shown below, every step but the last is used by a later one, the
i-th ``hyp`` step cites hypothesis i and every hypothesis is cited, and the
premises of a combination are listed in increasing order.  This module is the whole trusted core of
certificate checking: it depends on the signature and term data types only,
never on the decision procedure that produced the trace.

Step forms (``k`` always refers to an earlier step)::

    {"op": "hyp", "index": i}
    {"op": "refl", "term": t, "sort": s}
    {"op": "sym", "of": k}
    {"op": "trans", "of": [k1, k2]}
    {"op": "congr", "fn": f, "of": [k, ...], "sort": s}
    {"op": "inject", "fn": c, "pos": p, "of": k}
    {"op": "lincomb", "of": [[c, k], ...], "divisor": d, "lhs": t, "rhs": u}
    {"op": "nonneg", "of": [[c, k], ...], "atom": t}
    {"op": "clash", "kind": "nonneg" | "divisibility", "of": [[c, k], ...]}
    {"op": "clash", "kind": "constructor", "of": k}
    {"op": "exfalso", "of": k, "lhs": t, "rhs": u, "sort": s}
"""
from __future__ import annotations

import math
from collections import defaultdict

from .algebra import (
    AApp, AlgEquation, DEFAULT_SIGNATURE, FALSE_EQ, NAT_S, Signature, has_sort, match_sort,
    sort_from_sexpr, sort_to_sexpr, term_from_sexpr, term_to_sexpr,
)
from .errors import GoalMismatch, InvalidStep

ARITH_SYMBOLS = ("0", "S", "+")


def linearize(t):
    """Affine form ``(coefficients by atom, constant)`` of a nat-sorted term."""
    coeffs = defaultdict(int)
    const = 0
    stack = [(t, 1)]
    while stack:
        u, c = stack.pop()
        if isinstance(u, AApp) and u.fn == "0" and not u.args:
            continue
        if isinstance(u, AApp) and u.fn == "S" and len(u.args) == 1:
            const += c
            stack.append((u.args[0], c))
        elif isinstance(u, AApp) and u.fn == "+" and len(u.args) == 2:
            stack.append((u.args[0], c))
            stack.append((u.args[1], c))
        else:
            coeffs[u] += c
    return {a: v for a, v in coeffs.items() if v}, const


def _combine(pairs):
    coeffs = defaultdict(int)
    const = 0
    for c, (cf, k) in pairs:
        for a, v in cf.items():
            coeffs[a] += c * v
        const += c * k
    return {a: v for a, v in coeffs.items() if v}, const


def _is_int(x):
    return isinstance(x, int) and not isinstance(x, bool)


class Replayer:
    def __init__(self, hypotheses, var_sorts, sig: Signature = DEFAULT_SIGNATURE):
        self.hyps = list(hypotheses)
        self.var_sorts = dict(var_sorts)
        self.sig = sig
        self.concl = []
        self.cited = set()
        self.next_hyp = 0

    def fail(self, reason):
        raise InvalidStep(len(self.concl), reason)

    def ref(self, k):
        if not _is_int(k) or not 0 <= k < len(self.concl):
            self.fail(f"bad premise reference {k!r}")
        self.cited.add(k)
        return self.concl[k]

    def term(self, x, sort=None):
        try:
            t = term_from_sexpr(x)
        except ValueError as e:
            self.fail(str(e))
        if sort is not None and not has_sort(t, sort, self.var_sorts, self.sig):
            self.fail(f"{t} is not of sort {sort}")
        return t

    def sort(self, x):
        try:
            s = sort_from_sexpr(x)
            self.sig.check_sort(s)
        except ValueError as e:
            self.fail(str(e))
        return s

    def combo(self, pairs):
        if not isinstance(pairs, list) or not pairs:
            self.fail("empty combination")
        out = []
        last = -1
        for item in pairs:
            if not (isinstance(item, list) and len(item) == 2 and _is_int(item[0]) and item[0] != 0):
                self.fail(f"bad coefficient entry {item!r}")
            c, k = item
            if not _is_int(k) or k <= last:
                self.fail("premises of a combination must be listed in increasing order")
            last = k
            eq = self.ref(k)
            if eq.sort != NAT_S:
                self.fail("arithmetic premise is not of sort nat")
            l_cf, l_k = linearize(eq.lhs)
            r_cf, r_k = linearize(eq.rhs)
            out.append((c, (l_cf, l_k)))
            out.append((-c, (r_cf, r_k)))
        return _combine(out)

    def check(self, step):
        if not isinstance(step, dict):
            self.fail("step is not an object")
        op = step.get("op")
        handler = getattr(self, f"_op_{op}", None) if isinstance(op, str) else None
        if handler is None:
            self.fail(f"unknown operation {op!r}")
        eq = handler(step)
        self.concl.append(eq)
        return eq

    def _keys(self, step, *keys):
        if list(step) != ["op", *keys]:
            self.fail(f"expected fields {', '.join(keys)} in this order")

    def finish(self):
        """Canonical-form conditions on the whole trace."""
        dead = set(range(len(self.concl) - 1)) - self.cited
        if dead:
            self.fail(f"step {min(dead)} is never used")
        if self.next_hyp != len(self.hyps):
            self.fail(f"hypothesis {self.next_hyp} is never cited")

    def _op_hyp(self, s):
        self._keys(s, "index")
        i = s["index"]
        if not _is_int(i) or not 0 <= i < len(self.hyps):
            self.fail(f"no hypothesis {i!r}")
        if i != self.next_hyp:
            self.fail(f"hypotheses must be cited once each, in order; expected {self.next_hyp}")
        self.next_hyp += 1
        return self.hyps[i]

    def _op_refl(self, s):
        self._keys(s, "term", "sort")
        sort = self.sort(s["sort"])
        t = self.term(s["term"], sort)
        return AlgEquation(t, t, sort)

    def _op_sym(self, s):
        self._keys(s, "of")
        e = self.ref(s["of"])
        return AlgEquation(e.rhs, e.lhs, e.sort)

    def _op_trans(self, s):
        self._keys(s, "of")
        of = s["of"]
        if not (isinstance(of, list) and len(of) == 2):
            self.fail("trans takes two premises")
        a, b = self.ref(of[0]), self.ref(of[1])
        if a.rhs != b.lhs or a.sort != b.sort:
            self.fail("trans premises do not chain")
        return AlgEquation(a.lhs, b.rhs, a.sort)

    def _op_congr(self, s):
        self._keys(s, "fn", "of", "sort")
        d = self.sig.decl(s["fn"]) if isinstance(s["fn"], str) else None
        if d is None:
            self.fail(f"unknown symbol {s['fn']!r}")
        sort = self.sort(s["sort"])
        xi = match_sort(d.result, sort, tvars=set(d.tvars))
        if xi is None:
            self.fail(f"{d.name} does not build sort {sort}")
        arg_sorts, _ = d.instance(xi)
        of = s["of"]
        if not isinstance(of, list) or len(of) != d.arity or d.arity == 0:
            self.fail("congruence arity mismatch")
        prem = [self.ref(k) for k in of]
        for p, sa in zip(prem, arg_sorts):
            if p.sort != sa:
                self.fail("congruence premise has the wrong sort")
        return AlgEquation(AApp(d.name, tuple(p.lhs for p in prem)),
                           AApp(d.name, tuple(p.rhs for p in prem)), sort)

    def _op_inject(self, s):
        self._keys(s, "fn", "pos", "of")
        e = self.ref(s["of"])
        fn, pos = s["fn"], s["pos"]
        d = self.sig.decl(fn) if isinstance(fn, str) else None
        if d is None or d.kind != "constructor":
            self.fail(f"{fn!r} is not a constructor")
        if not (isinstance(e.lhs, AApp) and isinstance(e.rhs, AApp) and e.lhs.fn == fn == e.rhs.fn):
            self.fail("injectivity premise is not headed by the constructor")
        if not _is_int(pos) or not 0 <= pos < d.arity:
            self.fail("bad argument position")
        xi = match_sort(d.result, e.sort, tvars=set(d.tvars))
        arg_sorts, _ = d.instance(xi)
        return AlgEquation(e.lhs.args[pos], e.rhs.args[pos], arg_sorts[pos])

    def _op_lincomb(self, s):
        self._keys(s, "of", "divisor", "lhs", "rhs")
        d = s["divisor"]
        if not _is_int(d) or d == 0:
            self.fail("divisor must be a nonzero integer")
        lhs = self.term(s["lhs"], NAT_S)
        rhs = self.term(s["rhs"], NAT_S)
        got = self.combo(s["of"]) if s["of"] != [] else ({}, 0)
        want = _combine([(d, linearize(lhs)), (-d, linearize(rhs))])
        if got != want:
            self.fail("linear combination does not yield the conclusion")
        return AlgEquation(lhs, rhs, NAT_S)

    def _op_nonneg(self, s):
        self._keys(s, "of", "atom")
        atom = self.term(s["atom"], NAT_S)
        if linearize(atom) != ({atom: 1}, 0):
            self.fail("nonneg target is not an atom")
        cf, k = self.combo(s["of"])
        sign = 1 if all(v >= 0 for v in cf.values()) and k >= 0 else \
            -1 if all(v <= 0 for v in cf.values()) and k <= 0 else 0
        if sign == 0 or not cf.get(atom):
            self.fail("combination is not sign-definite in the atom")
        return AlgEquation(atom, AApp("0"), NAT_S)

    def _op_clash(self, s):
        kind = s.get("kind")
        if kind == "constructor":
            self._keys(s, "kind", "of")
            e = self.ref(s["of"])
            ok = (isinstance(e.lhs, AApp) and isinstance(e.rhs, AApp) and e.lhs.fn != e.rhs.fn
                  and self.sig.is_constructor(e.lhs.fn) and self.sig.is_constructor(e.rhs.fn))
            if not ok:
                self.fail("premise does not equate distinct constructors")
            return FALSE_EQ
        self._keys(s, "kind", "of")
        cf, k = self.combo(s["of"])
        if kind == "nonneg":
            pos = all(v >= 0 for v in cf.values()) and k > 0
            neg = all(v <= 0 for v in cf.values()) and k < 0
            if not (pos or neg):
                self.fail("combination is not a sign clash")
        elif kind == "divisibility":
            g = 0
            for v in cf.values():
                g = math.gcd(g, v)
            if (g == 0 and k == 0) or (g != 0 and k % g == 0):
                self.fail("combination is not a divisibility clash")
        else:
            self.fail(f"unknown clash kind {kind!r}")
        return FALSE_EQ

    def _op_exfalso(self, s):
        self._keys(s, "of", "lhs", "rhs", "sort")
        if self.ref(s["of"]) != FALSE_EQ:
            self.fail("premise is not 0 = 1")
        sort = self.sort(s["sort"])
        return AlgEquation(self.term(s["lhs"], sort), self.term(s["rhs"], sort), sort)


def check_trace(hypotheses, goal: AlgEquation, trace, var_sorts, sig: Signature = DEFAULT_SIGNATURE):
    """Replay ``trace``; raise InvalidStep or GoalMismatch on failure."""
    if not isinstance(trace, list) or not trace:
        raise InvalidStep(0, "empty trace")
    r = Replayer(hypotheses, var_sorts, sig)
    for step in trace:
        r.check(step)
    r.finish()
    if r.concl[-1] != goal:
        raise GoalMismatch(f"trace concludes {r.concl[-1]}, not {goal}")
    return True


def replay(hypotheses, goal, trace, var_sorts, sig: Signature = DEFAULT_SIGNATURE) -> bool:
    try:
        return check_trace(hypotheses, goal, trace, var_sorts, sig)
    except (InvalidStep, GoalMismatch):
        return False


__all__ = ["linearize", "check_trace", "replay", "Replayer", "term_to_sexpr", "sort_to_sexpr"]
