"""Helpers shared by the test modules: loading sources, term generators and oracles."""
from __future__ import annotations

import itertools
import json
import os
import random

import numpy as np
import sympy
from scipy.optimize import linprog
from sympy.matrices.normalforms import smith_normal_form

from ccic import certificates
from ccic.algebra import AApp, AVar, AlgEquation, NAT_S, SortApp, SortVar, a_num, a_plus
from ccic.cli import run_file
from ccic.conversion import Settings
from ccic.errors import KernelError
from ccic.syntax import parse_term
from ccic.terms import Context, SyntacticClass, var_for

O, P, K = SyntacticClass.O, SyntacticClass.P, SyntacticClass.K
EXAMPLE_PATH = os.path.join(os.path.dirname(__file__), "..", "examples", "reverse_word.ccic")


def load(src: str, **settings):
    """Check a source text and return ``(kernel, context)``."""
    return run_file(src, Settings(**settings))


def names_of(ctx: Context) -> dict:
    return {b.name: var_for(b.name, b.type).pred for b in ctx}


def term(ctx: Context, src: str):
    return parse_term(src, names_of(ctx))


# ---------------------------------------------------------------------------
# linear queries over nat


def linear_side(coeffs, const, names):
    """``Σ c_i x_i + const`` as a first-order term with repeated occurrences."""
    parts = []
    for c, x in zip(coeffs, names):
        parts.extend([AVar(x)] * c)
    if const or not parts:
        parts.append(a_num(const))
    t = parts[0]
    for p in parts[1:]:
        t = a_plus(t, p)
    return t


class LinearEq:
    """``lhs·x + lc = rhs·x + rc`` with small nonnegative coefficients."""

    def __init__(self, lhs, lc, rhs, rc):
        self.lhs, self.lc, self.rhs, self.rc = tuple(lhs), lc, tuple(rhs), rc

    def row(self):
        """``(a, b)`` with ``a·x = b``."""
        return [l - r for l, r in zip(self.lhs, self.rhs)], self.rc - self.lc

    def alg(self, names) -> AlgEquation:
        return AlgEquation(linear_side(self.lhs, self.lc, names), linear_side(self.rhs, self.rc, names), NAT_S)

    def holds(self, xs) -> bool:
        a, b = self.row()
        return sum(ai * x for ai, x in zip(a, xs)) == b

    def __repr__(self):
        return f"{self.lhs}+{self.lc} = {self.rhs}+{self.rc}"


def random_linear_eq(rng: random.Random, n: int, maxc=5) -> LinearEq:
    def side():
        return [rng.choice((0, 0, 1, rng.randint(0, maxc))) for _ in range(n)], rng.choice((0, 0, rng.randint(0, maxc)))
    (l, lc), (r, rc) = side(), side()
    return LinearEq(l, lc, r, rc)


def combination_goal(rng: random.Random, hyps, n: int, maxc=5) -> LinearEq:
    """A goal that is a nonnegative integer combination of the hypotheses, rearranged."""
    lhs, rhs = [0] * n, [0] * n
    lc = rc = 0
    for h in hyps:
        k = rng.randint(0, 2)
        flip = rng.random() < 0.5
        a, ac, b, bc = (h.rhs, h.rc, h.lhs, h.lc) if flip else (h.lhs, h.lc, h.rhs, h.rc)
        lhs = [x + k * y for x, y in zip(lhs, a)]
        rhs = [x + k * y for x, y in zip(rhs, b)]
        lc += k * ac
        rc += k * bc
    pad = [rng.randint(0, 1) for _ in range(n)]
    extra = rng.randint(0, 2)
    lhs = [x + p for x, p in zip(lhs, pad)]
    rhs = [x + p for x, p in zip(rhs, pad)]
    return LinearEq([min(x, 3 * maxc) for x in lhs], lc + extra, [min(x, 3 * maxc) for x in rhs], rc + extra)


def random_linear_query(rng: random.Random, maxc=5):
    n = rng.randint(1, 4)
    names = [f"x{i}" for i in range(1, n + 1)]
    hyps = [random_linear_eq(rng, n, maxc) for _ in range(rng.randint(0, 3))]
    if rng.random() < 0.2:
        # sums forced to zero exercise nonnegativity
        k = rng.randint(1, n)
        hyps.append(LinearEq([1] * k + [0] * (n - k), 0, [0] * n, 0))
    goal = combination_goal(rng, hyps, n, maxc) if hyps and rng.random() < 0.5 else random_linear_eq(rng, n, maxc)
    return names, hyps, goal


def affine_oracle(n, hyps, goal) -> bool:
    """Independent decision of ``hyps ⊨ goal`` over ℕ in the affine fragment.

    Nonnegativity tightening and rational infeasibility are read off linear
    programs (scipy), integer infeasibility off Smith normal forms and goal
    membership off exact ranks (sympy).
    """

    rows = [h.row() for h in hyps]
    if rows:
        A = np.array([r[0] for r in rows], dtype=float)
        b = np.array([r[1] for r in rows], dtype=float)
        lp = linprog(np.zeros(n), A_eq=A, b_eq=b, bounds=[(0, None)] * n, method="highs")
        if lp.status == 2:
            return True
        for i in range(n):
            c = np.zeros(n)
            c[i] = -1
            lp = linprog(c, A_eq=A, b_eq=b, bounds=[(0, None)] * n, method="highs")
            if lp.status == 0 and -lp.fun < 1e-9:
                e = [0] * n
                e[i] = 1
                rows.append((e, 0))
    if rows:
        M = sympy.Matrix([r[0] for r in rows])
        Mb = sympy.Matrix([r[0] + [r[1]] for r in rows])
        rank = M.rank()
        if Mb.rank() != rank:
            return True

        def divisor(mat):
            d = smith_normal_form(mat, domain=sympy.ZZ)
            out = 1
            for i in range(min(d.shape)):
                if d[i, i] != 0:
                    out *= abs(d[i, i])
            return out

        if rank and divisor(M) != divisor(Mb):
            return True
    else:
        M = sympy.zeros(0, n)
        Mb = sympy.zeros(0, n + 1)
    a, c = goal.row()
    if not any(a):
        return c == 0
    if not rows:
        return False
    return (sympy.Matrix.vstack(M, sympy.Matrix([a])).rank() == M.rank()
            and sympy.Matrix.vstack(Mb, sympy.Matrix([a + [c]])).rank() == Mb.rank())


# ---------------------------------------------------------------------------
# brute-force counterexample search


def list_values(elems, depth):
    """Lists of length at most ``depth`` over ``elems`` (as tuples)."""
    out = []
    for k in range(depth + 1):
        out.extend(itertools.product(elems, repeat=k))
    return out


def domain(sort, nat_max=6, depth=2):
    match sort:
        case SortApp("nat"):
            return list(range(nat_max + 1))
        case SortApp("list", (inner,)):
            if inner == NAT_S or isinstance(inner, SortVar):
                return list_values((0, 1), depth)
            return list_values(tuple(list_values((0, 1), 1)), depth)
        case SortVar():
            return [0, 1]
    raise ValueError(f"no finite domain for {sort}")


def evaluate(t, env):
    match t:
        case AVar(x):
            return env[x]
        case AApp("0", ()):
            return 0
        case AApp("S", (a,)):
            return evaluate(a, env) + 1
        case AApp("+", (a, b)):
            return evaluate(a, env) + evaluate(b, env)
        case AApp("nil", ()):
            return ()
        case AApp("cons", (a, b)):
            return (evaluate(a, env),) + evaluate(b, env)
        case AApp("@", (a, b)):
            return evaluate(a, env) + evaluate(b, env)
    raise ValueError(f"cannot evaluate {t}")


def counterexample(hyps, goal, var_sorts, nat_max=6, depth=2):
    """An assignment satisfying ``hyps`` but not ``goal``, or None."""
    names = sorted(var_sorts)
    doms = [domain(var_sorts[x], nat_max, depth) for x in names]
    for values in itertools.product(*doms):
        env = dict(zip(names, values))
        try:
            if all(evaluate(h.lhs, env) == evaluate(h.rhs, env) for h in hyps):
                if goal is None or evaluate(goal.lhs, env) != evaluate(goal.rhs, env):
                    return env
        except TypeError:
            # a heterogeneous value fell outside the sampled domain
            continue
    return None


def linear_counterexample(n, hyps, goal, nat_max=6):
    """Vectorised search over ``0..nat_max`` for the affine fragment."""

    grid = np.array(list(itertools.product(range(nat_max + 1), repeat=n)), dtype=np.int64).reshape(-1, n)
    ok = np.ones(len(grid), dtype=bool)
    for h in hyps:
        a, b = h.row()
        ok &= grid @ np.array(a, dtype=np.int64) == b
    a, b = goal.row()
    bad = ok & (grid @ np.array(a, dtype=np.int64) != b)
    idx = np.flatnonzero(bad)
    return None if not len(idx) else tuple(int(v) for v in grid[idx[0]])


# ---------------------------------------------------------------------------
# well-typed term generation


GEN_CONTEXT = """
axiom A : Prop.
axiom n1 : nat.
axiom n2 : nat.
axiom l : list nat.
axiom a : letter.
axiom w : word n1.
axiom p :r n1 ≐ S n2.
"""


class TermGen:
    """Random well-typed terms over :data:`GEN_CONTEXT` (no variable capture issues:
    binder names never clash with context names)."""

    def __init__(self, rng: random.Random):
        self.rng = rng

    def nat(self, d=3, scope=()):
        r = self.rng
        leaves = ["0", "n1", "n2", str(r.randint(1, 3)), *scope]
        if d <= 0:
            return r.choice(leaves)
        k = r.randint(0, 9)
        sub = lambda: self.nat(d - 1, scope)
        match k:
            case 0 | 1:
                return r.choice(leaves)
            case 2:
                return f"S ({sub()})"
            case 3 | 4:
                return f"({sub()}) + ({sub()})"
            case 5:
                v = f"x{len(scope)}"
                return f"(fun ({v} : nat) => {self.nat(d - 1, scope + (v,))}) ({sub()})"
            case 6:
                v = f"x{len(scope)}"
                return (f"Elim({sub()}, nat, [], fun (_ : nat) => nat, "
                        f"[{sub()}, fun ({v} : nat) (r{len(scope)} : nat) => S r{len(scope)}])")
            case 7:
                return f"Elim({self.lst(d - 1, scope)}, list, [nat], fun (_ : list nat) => nat, " \
                       f"[0, fun (h : nat) (t : list nat) (r : nat) => S r])"
            case _:
                return f"({sub()}) + {r.randint(0, 2)}"

    def lst(self, d=2, scope=()):
        r = self.rng
        if d <= 0:
            return r.choice(["nil nat", "l"])
        match r.randint(0, 4):
            case 0:
                return r.choice(["nil nat", "l"])
            case 1 | 2:
                return f"cons nat ({self.nat(d - 1, scope)}) ({self.lst(d - 1, scope)})"
            case 3:
                return f"@ nat ({self.lst(d - 1, scope)}) ({self.lst(d - 1, scope)})"
            case _:
                return f"(fun (k : list nat) => {self.lst(d - 1, scope)}) ({self.lst(d - 1, scope)})"

    def typ(self, d=2):
        r = self.rng
        match r.randint(0, 5):
            case 0:
                return "nat"
            case 1:
                return "list nat"
            case 2:
                return f"word ({self.nat(d)})"
            case 3:
                return f"{self.nat(d)} ≐ {self.nat(d)}"
            case 4:
                return f"forall (z : nat), word (z + {self.nat(d - 1)})"
            case _:
                return f"{self.lst(d)} ≐{{list nat}} {self.lst(d)}"

    def any(self, d=3):
        return self.rng.choice((self.nat, self.nat, self.lst, self.typ))(d)


def variant(rng: random.Random, src: str) -> str:
    """A term in the same conversion class as the nat term ``src``."""
    match rng.randint(0, 4):
        case 0:
            return f"(fun (v : nat) => v) ({src})"
        case 1:
            return f"({src}) + 0"
        case 2:
            return f"0 + ({src})"
        case 3:
            return f"Elim(0, nat, [], fun (_ : nat) => nat, [{src}, fun (m : nat) (q : nat) => q])"
        case _:
            return f"(fun (v : nat) (u : nat) => v) ({src}) n2"



MIXED_SORTS = {"x": NAT_S, "y": NAT_S, "l": SortApp("list", (NAT_S,)), "k": SortApp("list", (NAT_S,))}


def random_alg(rng: random.Random, sort, d=2):
    """A random first-order term over :data:`MIXED_SORTS`."""
    if sort == NAT_S:
        leaves = [AVar("x"), AVar("y"), a_num(rng.randint(0, 2))]
        if d <= 0 or rng.random() < 0.35:
            return rng.choice(leaves)
        if rng.random() < 0.5:
            return AApp("S", (random_alg(rng, sort, d - 1),))
        return a_plus(random_alg(rng, sort, d - 1), random_alg(rng, sort, d - 1))
    leaves = [AVar("l"), AVar("k"), AApp("nil")]
    if d <= 0 or rng.random() < 0.35:
        return rng.choice(leaves)
    if rng.random() < 0.7:
        return AApp("cons", (random_alg(rng, NAT_S, d - 1), random_alg(rng, sort, d - 1)))
    return AApp("@", (random_alg(rng, sort, d - 1), random_alg(rng, sort, d - 1)))


def random_mixed_query(rng: random.Random):
    lst = MIXED_SORTS["l"]
    hyps = []
    for _ in range(rng.randint(1, 3)):
        s = rng.choice((NAT_S, lst, lst))
        hyps.append(AlgEquation(random_alg(rng, s), random_alg(rng, s), s))
    s = rng.choice((NAT_S, NAT_S, lst))
    return hyps, AlgEquation(random_alg(rng, s, 1), random_alg(rng, s, 1), s)


# ---------------------------------------------------------------------------
# certificate corpus


def _surface(t) -> str:
    match t:
        case AVar(x):
            return x
        case AApp("0", ()):
            return "0"
        case AApp("S", (a,)):
            return f"S ({_surface(a)})"
        case AApp("+", (a, b)):
            return f"({_surface(a)}) + ({_surface(b)})"
        case AApp("nil", ()):
            return "nil nat"
        case AApp("cons", (a, b)):
            return f"cons nat ({_surface(a)}) ({_surface(b)})"
        case AApp("@", (a, b)):
            return f"@ nat ({_surface(a)}) ({_surface(b)})"
    raise ValueError(t)


def equation_source(eq: AlgEquation) -> str:
    ty = "" if eq.sort == NAT_S else "{list nat}"
    return f"{_surface(eq.lhs)} ≐{ty} {_surface(eq.rhs)}"


def query_source(var_sorts, hyps, goal) -> str:
    """A source file whose single ``convert`` asks the solver ``hyps ⊨ goal``."""
    lines = [f"axiom {x} : {'nat' if s == NAT_S else 'list nat'}." for x, s in sorted(var_sorts.items())]
    lines += [f"axiom h{i} :r {equation_source(h)}." for i, h in enumerate(hyps)]
    lines.append(f"convert {_surface(goal.lhs)} ~ {_surface(goal.rhs)}.")
    return "\n".join(lines)


CORPUS_SOURCES = [
    "axiom c : nat. axiom p :r (fun (x : nat) => x) 0 ≐ c. convert (fun (x : nat) => x + x) 0 ~ c.",
    "axiom c : nat. axiom d : nat. axiom p :r c ≐ 1 + d. axiom q :r d ≐ 2. convert c ~ 3.",
    "axiom p :r 0 ≐ S 0. convert 0 ~ S (S 0).",
    "axiom n1 : nat. axiom n2 : nat. check fun (w : word (n1 + n2)) => w : word (n1 + n2) -> word (n2 + n1).",
    "axiom x : nat. axiom l : list nat. axiom k : list nat. axiom y : nat. "
    "axiom p :r cons nat x l ≐{list nat} cons nat y k. convert S x ~ S y.",
    "axiom l : list nat. axiom x : nat. axiom p :r nil nat ≐{list nat} cons nat x l. convert 0 ~ 1.",
    "axiom f : nat -> nat. axiom x : nat. axiom y : nat. axiom p :r x ≐ y + 0. "
    "convert f x + 1 ~ S (f y).",
    "axiom T : Prop. axiom n : nat. axiom p :r n + n ≐ 0. convert cons nat n (nil nat) ~ cons nat 0 (nil nat).",
]


def certificate_corpus(rng: random.Random, linear=40, mixed=20):
    """Emitted certificates (bytes) from fixed scenarios and random solver queries."""

    out = []
    srcs = list(CORPUS_SOURCES)
    with open(EXAMPLE_PATH, encoding="utf-8") as f:
        srcs.append(f.read())
    while linear:
        names, hyps, goal = random_linear_query(rng)
        srcs.append(query_source({x: NAT_S for x in names}, [h.alg(names) for h in hyps], goal.alg(names)))
        linear -= 1
    while mixed:
        hyps, goal = random_mixed_query(rng)
        srcs.append(query_source(MIXED_SORTS, hyps, goal))
        mixed -= 1
    for s in srcs:
        try:
            kernel, _ = load(s)
        except Exception as e:  # CheckFailed from non-entailed random queries
            if not isinstance(getattr(e, "error", None), KernelError):
                raise
            continue
        out.extend(certificates.emit(c) for c in kernel.certificates)
    return out




# ---------------------------------------------------------------------------
# single-field mutations of certificate documents


def _paths(x, prefix=()):
    """Every position in a JSON document: ``(path, value)`` pairs, containers included."""
    yield prefix, x
    if isinstance(x, dict):
        for k, v in x.items():
            yield from _paths(v, prefix + (k,))
    elif isinstance(x, list):
        for i, v in enumerate(x):
            yield from _paths(v, prefix + (i,))


def _get(doc, path):
    for p in path:
        doc = doc[p]
    return doc


def _set(doc, path, value):
    _get(doc, path[:-1])[path[-1]] = value


def _strings(doc):
    return sorted({v for _, v in _paths(doc) if isinstance(v, str)})


def mutate(rng: random.Random, data: bytes):
    """Apply one random single-field mutation; return ``(description, bytes)``."""
    doc = json.loads(data)
    positions = [(p, v) for p, v in _paths(doc) if p]
    path, value = rng.choice(positions)
    pool = _strings(doc)
    parent = _get(doc, path[:-1])
    match value:
        case bool():
            new, what = (not value), "flip"
        case int():
            new, what = rng.choice([(value + 1, "+1"), (value - 1, "-1"), (-value - 1, "neg"), (value * 2 + 1, "2x+1")])
        case str():
            others = [s for s in pool if s != value]
            if others and rng.random() < 0.6:
                new, what = rng.choice(others), "swap-string"
            else:
                new, what = value + "'", "prime"
        case None:
            new, what = ["nat", []], "null->nat"
        case list() if value and rng.random() < 0.5:
            i = rng.randrange(len(value))
            new = value[:i] + value[i + 1:]
            what = "drop"
        case list() if value:
            i, j = rng.randrange(len(value)), rng.randrange(len(value))
            new = list(value)
            if i != j and new[i] != new[j]:
                new[i], new[j] = new[j], new[i]
                what = "swap"
            else:
                new.insert(i, new[j])
                what = "dup"
        case list():
            new, what = [0], "fill"
        case dict():
            keys = list(value)
            if isinstance(parent, dict) or rng.random() < 0.5:
                k = rng.choice(keys)
                new = {kk: vv for kk, vv in value.items() if kk != k}
                what = f"remove-key {k}"
            else:
                new = dict(reversed(list(value.items())))
                what = "reorder"
    _set(doc, path, new)
    out = json.dumps(doc, ensure_ascii=False, separators=(",", ":")).encode("utf-8")
    return f"{'/'.join(map(str, path))}: {what}", out
