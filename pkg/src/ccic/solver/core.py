"""Decision procedure for sorted equations over constructors, +, @ and free symbols.

The procedure combines congruence closure (with constructor injectivity and
disjointness) and exact linear arithmetic over the naturals.  Every merge in
the E-graph is recorded in a proof forest, so a positive answer can always
be explained as a trace (see :mod:`ccic.trace`).
"""
from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from math import gcd
from typing import Optional

from ..algebra import (
    AVar, AlgEquation, DEFAULT_SIGNATURE, FALSE_EQ, NAT_S, Signature, match_sort,
    sort_to_sexpr, term_to_sexpr,
)
from ..errors import SortMismatch
from . import arith

_ARITH = {"0", "S", "+"}


@dataclass
class Edge:
    a: int
    b: int
    kind: str  # hyp | congr | inject | arith
    data: object = None


@dataclass
class Row:
    """A nat equation ``form = 0`` known to the arithmetic part, with its justification."""
    form: tuple  # (coeffs by node id, const)
    kind: str  # edge | nonneg
    data: object = None


@dataclass
class Outcome:
    entailed: bool
    trace: list = field(default_factory=list)
    hyps_used: tuple = ()
    unsat: bool = False


class Solver:
    def __init__(self, var_sorts: dict, sig: Signature = DEFAULT_SIGNATURE):
        self.var_sorts = dict(var_sorts)
        self.sig = sig
        self.keys = {}
        self.node_term = []
        self.node_sort = []
        self.node_key = []
        self.uf = []
        self.members = []
        self.pf_parent = []
        self.pf_edge = []
        self.edges = []
        self.hyps = []
        self.clash = None
        self._forms = {}

    # -- terms -------------------------------------------------------------

    def add_term(self, t, sort) -> int:
        if isinstance(t, AVar):
            if self.var_sorts.get(t.name) != sort:
                raise SortMismatch(f"variable {t.name} is not of sort {sort}")
            key = ("var", t.name, sort)
            if key in self.keys:
                return self.keys[key]
            return self._new(key, t, sort)
        d = self.sig.decl(t.fn)
        if d is None or len(t.args) != d.arity:
            raise SortMismatch(f"unknown symbol or wrong arity in {t}")
        xi = match_sort(d.result, sort, tvars=set(d.tvars))
        if xi is None:
            raise SortMismatch(f"{t} cannot have sort {sort}")
        arg_sorts, _ = d.instance(xi)
        kids = tuple(self.add_term(a, s) for a, s in zip(t.args, arg_sorts))
        key = ("app", t.fn, kids, sort)
        if key in self.keys:
            return self.keys[key]
        return self._new(key, t, sort)

    def _new(self, key, t, sort):
        i = len(self.node_term)
        self.keys[key] = i
        self.node_key.append(key)
        self.node_term.append(t)
        self.node_sort.append(sort)
        self.uf.append(i)
        self.members.append([i])
        self.pf_parent.append(None)
        self.pf_edge.append(None)
        return i

    def kids(self, n):
        k = self.node_key[n]
        return k[2] if k[0] == "app" else ()

    def fn(self, n):
        k = self.node_key[n]
        return k[1] if k[0] == "app" else None

    def find(self, x):
        while self.uf[x] != x:
            self.uf[x] = self.uf[self.uf[x]]
            x = self.uf[x]
        return x

    # -- merging -----------------------------------------------------------

    def merge(self, a, b, kind, data=None) -> bool:
        ra, rb = self.find(a), self.find(b)
        if ra == rb:
            return False
        e = len(self.edges)
        self.edges.append(Edge(a, b, kind, data))
        self._reroot(a)
        self.pf_parent[a] = b
        self.pf_edge[a] = e
        if len(self.members[ra]) > len(self.members[rb]):
            ra, rb = rb, ra
        self.uf[ra] = rb
        self.members[rb].extend(self.members[ra])
        self.members[ra] = []
        return True

    def _reroot(self, x):
        prev, carried = None, None
        while x is not None:
            nxt, e = self.pf_parent[x], self.pf_edge[x]
            self.pf_parent[x], self.pf_edge[x] = prev, carried
            prev, carried, x = x, e, nxt

    def assert_eq(self, eq: AlgEquation):
        i = len(self.hyps)
        a = self.add_term(eq.lhs, eq.sort)
        b = self.add_term(eq.rhs, eq.sort)
        self.hyps.append((eq, a, b))
        self.merge(a, b, "hyp", i)

    # -- saturation --------------------------------------------------------

    def saturate(self):
        while self.clash is None:
            changed = self._congruence()
            self._constructor_clash()
            if self.clash is not None:
                return
            changed |= self._injectivity()
            if changed:
                continue
            if not self._arithmetic():
                return

    def _congruence(self):
        merged_any = False
        while True:
            table = {}
            merged = False
            for n, key in enumerate(self.node_key):
                if key[0] != "app" or not key[2]:
                    continue
                sig = (key[1], key[3], tuple(self.find(c) for c in key[2]))
                m = table.setdefault(sig, n)
                if m != n and self.merge(m, n, "congr"):
                    merged = True
            merged_any |= merged
            if not merged:
                return merged_any

    def _classes(self):
        return [ms for r, ms in enumerate(self.members) if ms and self.find(r) == r]

    def _constructor_clash(self):
        for ms in self._classes():
            ctors = {}
            for n in ms:
                f = self.fn(n)
                if f is not None and self.sig.is_constructor(f):
                    ctors.setdefault(f, n)
            if len(ctors) > 1:
                a, b = sorted(ctors.values())[:2]
                self.clash = ("constructor", a, b)
                return

    def _injectivity(self):
        changed = False
        for ms in self._classes():
            first = {}
            for n in sorted(ms):
                f = self.fn(n)
                if f is None or not self.sig.is_constructor(f) or not self.kids(n):
                    continue
                m = first.setdefault(f, n)
                if m == n:
                    continue
                for pos, (c1, c2) in enumerate(zip(self.kids(m), self.kids(n))):
                    if self.merge(c1, c2, "inject", (m, n, pos)):
                        changed = True
        return changed

    def form(self, n):
        """Affine form of node ``n`` over atom nodes."""
        if n in self._forms:
            return self._forms[n]
        f, kids = self.fn(n), self.kids(n)
        if self.node_sort[n] == NAT_S and f == "0":
            out = ({}, 0)
        elif self.node_sort[n] == NAT_S and f == "S":
            cf, k = self.form(kids[0])
            out = (cf, k + 1)
        elif self.node_sort[n] == NAT_S and f == "+":
            (c1, k1), (c2, k2) = self.form(kids[0]), self.form(kids[1])
            cf = dict(c1)
            arith.add_scaled(cf, c2, 1)
            out = (cf, k1 + k2)
        else:
            out = ({n: 1}, 0)
        self._forms[n] = out
        return out

    def _diff(self, a, b):
        (c1, k1), (c2, k2) = self.form(a), self.form(b)
        cf = dict(c1)
        arith.add_scaled(cf, c2, -1)
        return cf, k1 - k2

    def _arithmetic(self) -> bool:
        """One round of arithmetic reasoning; True when it merged classes."""
        rows = [Row(self._diff(e.a, e.b), "edge", i) for i, e in enumerate(self.edges)
                if e.kind != "arith" and self.node_sort[e.a] == NAT_S]
        nat_nodes = [n for n in range(len(self.node_key)) if self.node_sort[n] == NAT_S]
        if not nat_nodes:
            return False
        atoms = sorted({a for r in rows for a in r.form[0]})
        span = arith.Span()
        for r in rows:
            bad = span.add(*r.form, id(r))
            if bad is not None:
                self.clash = ("divisibility", self._resolve(bad, rows))
                return False
        forms = [r.form for r in rows]
        point = arith.nonneg_solution(forms, atoms)
        if point is None:
            y = arith.farkas(forms, atoms)
            self.clash = ("nonneg", [(v, rows[i]) for i, v in y.items()])
            return False
        base = list(rows)
        for a in atoms:
            if point[a] != 0:
                continue
            y = arith.farkas([r.form for r in base], atoms, a)
            if y is None:
                continue
            r = Row(({a: 1}, 0), "nonneg", ([(v, base[i]) for i, v in y.items()], a))
            rows.append(r)
            span.add(*r.form, id(r))
        y = arith.integer_clash([r.form for r in rows], atoms)
        if y is not None:
            self.clash = ("divisibility", [(v, rows[i]) for i, v in y.items()])
            return False
        by_canon = {}
        merged = False
        for n in nat_nodes:
            cf, k, combo = span.reduce(*self.form(n))
            canon = (tuple(sorted(cf.items(), key=lambda kv: arith._key(kv[0]))), k)
            m = by_canon.setdefault(canon, n)
            if m != n and self.find(m) != self.find(n):
                cf, k, combo = span.reduce(*self._diff(m, n))
                assert not cf and not k
                # reduce() leaves ``expr = residual - combo . rows``
                self.merge(m, n, "arith", self._resolve({k: -v for k, v in combo.items()}, rows))
                merged = True
        return merged

    @staticmethod
    def _resolve(combo, rows):
        by_id = {id(r): r for r in rows}
        return [(v, by_id[k]) for k, v in combo.items() if v]

    # -- explanations ------------------------------------------------------

    def _ancestors(self, x):
        path = [x]
        while self.pf_parent[path[-1]] is not None:
            path.append(self.pf_parent[path[-1]])
        return path

    def explain(self, tb, a, b) -> int:
        """Step index proving ``term(a) = term(b)`` (the nodes must be in one class)."""
        if a == b:
            return tb.add({"op": "refl", "term": term_to_sexpr(self.node_term[a]),
                           "sort": sort_to_sexpr(self.node_sort[a])})
        pa, pb = self._ancestors(a), self._ancestors(b)
        common = set(pa) & set(pb)
        lca = next(x for x in pa if x in common)
        left = pa[:pa.index(lca)]
        right = pb[:pb.index(lca)]
        steps = [self._edge_step(tb, x) for x in left]
        steps += [tb.add({"op": "sym", "of": self._edge_step(tb, x)}) for x in reversed(right)]
        acc = steps[0]
        for s in steps[1:]:
            acc = tb.add({"op": "trans", "of": [acc, s]})
        return acc

    def _edge_step(self, tb, child) -> int:
        """Step proving ``term(child) = term(parent(child))``."""
        e = self.edges[self.pf_edge[child]]
        s = self._oriented_edge(tb, self.pf_edge[child])
        return s if e.a == child else tb.add({"op": "sym", "of": s})

    def _oriented_edge(self, tb, ei) -> int:
        memo = tb.edge_memo
        if ei in memo:
            return memo[ei]
        e = self.edges[ei]
        if e.kind == "hyp":
            s = tb.hyp(e.data)
        elif e.kind == "congr":
            prem = [self.explain(tb, x, y) for x, y in zip(self.kids(e.a), self.kids(e.b))]
            s = tb.add({"op": "congr", "fn": self.fn(e.a), "of": prem,
                        "sort": sort_to_sexpr(self.node_sort[e.a])})
        elif e.kind == "inject":
            m, n, pos = e.data
            s = tb.add({"op": "inject", "fn": self.fn(m), "pos": pos, "of": self.explain(tb, m, n)})
        else:
            s = self._lincomb(tb, e.data, e.a, e.b)
        memo[ei] = s
        return s

    def _row_step(self, tb, row: Row) -> int:
        key = id(row)
        if key not in tb.row_steps:
            if row.kind == "edge":
                tb.row_steps[key] = self._oriented_edge(tb, row.data)
            else:
                combo, atom = row.data
                tb.row_steps[key] = tb.add({"op": "nonneg", "of": self._coeffs(tb, combo),
                                            "atom": term_to_sexpr(self.node_term[atom])})
        return tb.row_steps[key]

    def _coeffs(self, tb, combo):
        ints = arith.integer_combo({id(r): v for v, r in combo})
        by_id = {id(r): r for _, r in combo}
        return [[c, self._row_step(tb, by_id[k])] for k, c in ints.items() if c]

    def _lincomb(self, tb, combo, a, b) -> int:
        den = 1
        for v, _ in combo:
            den = den * Fraction(v).denominator // gcd(den, Fraction(v).denominator)
        of = [[int(Fraction(v) * den), self._row_step(tb, r)] for v, r in combo if v]
        return tb.add({"op": "lincomb", "of": of, "divisor": den,
                       "lhs": term_to_sexpr(self.node_term[a]), "rhs": term_to_sexpr(self.node_term[b])})

    def refute(self, tb) -> int:
        """Step index proving ``0 = S 0`` from the recorded clash."""
        kind = self.clash[0]
        if kind == "constructor":
            _, a, b = self.clash
            return tb.add({"op": "clash", "kind": "constructor", "of": self.explain(tb, a, b)})
        combo = self.clash[1]
        return tb.add({"op": "clash", "kind": kind, "of": self._coeffs(tb, combo)})


class TraceBuilder:
    def __init__(self, solver: Solver):
        self.solver = solver
        self.steps = []
        self.index = {}
        self.edge_memo = {}
        self.row_steps = {}
        self.hyp_used = {}

    def add(self, step) -> int:
        key = repr(step)
        if key in self.index:
            return self.index[key]
        self.steps.append(step)
        self.index[key] = len(self.steps) - 1
        return self.index[key]

    def conclude(self, k):
        self.final = k

    def compact(self):
        """Canonical trace ending at the concluding step.

        Steps the conclusion does not depend on are dropped, hypotheses are
        renumbered in order of first citation and combinations are sorted by
        premise.  Returns ``(steps, solver hypothesis indices)``.
        """
        live = set()
        todo = [self.final]
        while todo:
            k = todo.pop()
            if k not in live:
                live.add(k)
                todo.extend(_premises(self.steps[k]))
        renum = {old: new for new, old in enumerate(sorted(live))}
        by_slot = {j: i for i, j in self.hyp_used.items()}
        cited = []
        out = []
        for old in sorted(live):
            step = dict(self.steps[old])
            if step["op"] == "hyp":
                cited.append(by_slot[step["index"]])
                step["index"] = len(cited) - 1
            elif isinstance(step.get("of"), int):
                step["of"] = renum[step["of"]]
            elif step["op"] in ("trans", "congr"):
                step["of"] = [renum[k] for k in step["of"]]
            elif "of" in step:
                step["of"] = sorted(([c, renum[k]] for c, k in step["of"]), key=lambda p: p[1])
            out.append(step)
        return out, cited

    def hyp(self, i) -> int:
        j = self.hyp_used.setdefault(i, len(self.hyp_used))
        return self.add({"op": "hyp", "index": j})


def _run(hyps, goal: Optional[AlgEquation], var_sorts, sig):
    s = Solver(var_sorts, sig)
    for h in hyps:
        s.assert_eq(h)
    if goal is not None:
        ga = s.add_term(goal.lhs, goal.sort)
        gb = s.add_term(goal.rhs, goal.sort)
    s.saturate()
    tb = TraceBuilder(s)
    if s.clash is not None:
        last = s.refute(tb)
        if goal is not None and goal != FALSE_EQ:
            last = tb.add({"op": "exfalso", "of": last, "lhs": term_to_sexpr(goal.lhs),
                           "rhs": term_to_sexpr(goal.rhs), "sort": sort_to_sexpr(goal.sort)})
        tb.conclude(last)
        return s, tb, True
    if goal is None:
        return s, None, False
    if s.find(ga) == s.find(gb):
        tb.conclude(s.explain(tb, ga, gb))
        return s, tb, True
    return s, None, False


def _premises(step):
    of = step.get("of")
    if isinstance(of, int):
        return [of]
    if of is None:
        return []
    return [p[1] if isinstance(p, list) else p for p in of]


def _finish(s, tb, unsat):
    steps, cited = tb.compact()
    return Outcome(True, steps, tuple(s.hyps[i][0] for i in cited), unsat)


def entails(hyps, goal: AlgEquation, var_sorts, sig: Signature = DEFAULT_SIGNATURE) -> Outcome:
    s, tb, ok = _run(hyps, goal, var_sorts, sig)
    if not ok:
        return Outcome(False)
    return _finish(s, tb, s.clash is not None)


def is_unsat(hyps, var_sorts, sig: Signature = DEFAULT_SIGNATURE) -> Outcome:
    s, tb, ok = _run(hyps, None, var_sorts, sig)
    if not ok:
        return Outcome(False)
    return _finish(s, tb, True)
