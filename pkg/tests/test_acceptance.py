"""Acceptance suite; the summary prints one PASS/FAIL line per criterion.

Run alone with ``pytest tests/test_acceptance.py`` or ``python tests/test_acceptance.py``.
"""
import json
import os
import random
import subprocess
import sys
import textwrap
import time

import pytest

from support import (
    EXAMPLE_PATH, GEN_CONTEXT, MIXED_SORTS, O, TermGen, affine_oracle, certificate_corpus,
    counterexample, linear_counterexample, load, mutate, random_linear_query, random_mixed_query, term,
    variant,
)
from ccic import certificates
from ccic.algebra import NAT_S, SortVar, a_num, list_of, term_to_sexpr
from ccic.algebraize import AlienPool, algebraise
from ccic.cli import main
from ccic.conversion import Converter
from ccic.errors import KernelError
from ccic.reduction import step
from ccic.solver import entails
from ccic.terms import (
    CONS, NIL, ZERO, Annot, Context, Eqn, FVar, Lam, NAT, App, PLUS, BVar, apps, arrow, class_of,
    numeral, substitute,
)
from ccic.typer import Kernel

SRC_DIR = os.path.join(os.path.dirname(__file__), "..", "src")


def criterion(n, title):
    return pytest.mark.criterion(n, title)


# -- 1 -------------------------------------------------------------------------


@criterion(1, "dependent-words reverse: one certificate, rejected by plain CIC")
def test_reverse_example(tmp_path, capsys):
    out = tmp_path / "certs"
    start = time.perf_counter()
    status = main(["check", EXAMPLE_PATH, "--certs", str(out)])
    elapsed = time.perf_counter() - start
    assert status == 0
    assert elapsed < 1.0
    files = sorted(os.listdir(out))
    assert files == ["0001.ccert"]
    data = (out / files[0]).read_bytes()
    doc = json.loads(data)
    assert [(e["name"], e["type"]) for e in doc["context"]] == [
        ("n1", "nat"), ("n2", "nat"), ("w1", "word n1"), ("w2", "word n2")]
    assert doc["hypotheses"] == []
    assert doc["aliens"] == []
    assert doc["goal"] == {"lhs": ["+", ["n1", "n2"]], "rhs": ["+", ["n2", "n1"]], "sort": ["nat", []]}
    assert certificates.verify(data)
    capsys.readouterr()
    assert main(["verify", str(out / files[0])]) == 0
    capsys.readouterr()

    assert main(["check", EXAMPLE_PATH, "--plain-cic"]) == 1
    err = capsys.readouterr().out
    assert "TypeMismatch" in err and "branch 3 of Elim over word" in err


# -- 2 -------------------------------------------------------------------------


@criterion(2, "algebraisation golden results with alien sharing")
def test_algebraisation_golden():
    T, U, V = FVar("T", True), FVar("U", True), FVar("V", True)
    t = apps(CONS, T, ZERO, apps(CONS, U, App(NIL, V), App(NIL, U)))
    pool = AlienPool()
    alpha = SortVar("α")
    got = {s: algebraise(t, s, pool=pool)
           for s in (list_of(NAT_S), list_of(list_of(NAT_S)), list_of(alpha), NAT_S)}
    assert str(got[list_of(NAT_S)]) == "cons(0, cons(y⟨nat⟩_1, nil))"
    assert str(got[list_of(list_of(NAT_S))]) == "cons(y⟨list(nat)⟩_1, cons(nil, nil))"
    assert str(got[list_of(alpha)]) == "cons(y⟨α⟩_1, cons(y⟨α⟩_2, nil))"
    assert str(got[NAT_S]) == "y⟨nat⟩_2"
    # sharing: the nat alien of the first result is nil V, distinct from t itself;
    # the two α aliens are 0 and nil V
    table = {name: rep for name, _, rep in pool.table()}
    assert table["y⟨nat⟩_1"] == App(NIL, V)
    assert table["y⟨nat⟩_2"] == t
    assert table["y⟨list(nat)⟩_1"] == ZERO
    assert (table["y⟨α⟩_1"], table["y⟨α⟩_2"]) == (ZERO, App(NIL, V))
    assert term_to_sexpr(got[list_of(NAT_S)]) == ["cons", [["0", []], ["cons", ["y⟨nat⟩_1", ["nil", []]]]]]


# -- 3 -------------------------------------------------------------------------


@criterion(3, "conversion behaviours of the beta-redex example")
def test_conversion_behaviours():
    _, ctx = load("axiom c : nat. axiom p :r (fun (x : nat) => x) 0 ≐ c.")
    conv = Converter()
    ok, certs = conv.convertible(ctx, term(ctx, "(fun (x : nat) => x + x) 0"), term(ctx, "c"))
    assert ok and len(certs) == 1
    assert all(certificates.verify(certificates.emit(c)) for c in certs)
    zz = term(ctx, "0 + 0")
    assert conv.weak_convertible(conv.normalize_context(ctx), zz, term(ctx, "c"))[0]
    # the hook: call the weak relation on the context as written
    assert not conv.weak_convertible(ctx, zz, term(ctx, "c"))[0]


# -- 4 -------------------------------------------------------------------------


@criterion(4, "extraction: c = 1+d, d = 2 give c = 3; the lambda equation is not extracted")
def test_extraction():
    _, ctx = load("axiom c : nat. axiom d : nat. axiom p :r c ≐ 1 + d. axiom q :r d ≐ 2.")
    conv = Converter()
    ok, certs = conv.convertible(ctx, term(ctx, "c"), numeral(3))
    assert ok and len(certs) == 1
    doc = json.loads(certificates.emit(certs[0]))
    assert doc["goal"]["lhs"] == "c"
    assert doc["goal"]["rhs"] == term_to_sexpr(a_num(3))
    assert {h.source for h in certs[0].hypotheses} == {"p", "q"}
    assert not conv.convertible(ctx, term(ctx, "c"), numeral(4))[0]

    _, ctx = load("axiom f : nat -> nat.")
    f = FVar("f")
    lam = lambda body: Lam("x", Annot.U, NAT, body)
    eq = Eqn(lam(App(f, BVar(0))), lam(App(f, apps(PLUS, BVar(0), numeral(2)))), arrow(NAT, NAT))
    ctx = ctx.extend("p", Annot.R, eq)
    assert Kernel().sort_of_type(ctx, eq)
    assert conv.extract_eqs(ctx) == ()
    assert not conv.in_o_plus(eq.lhs, ctx)
    assert not conv.convertible(ctx, App(f, ZERO), App(f, numeral(2)))[0]


# -- 5 -------------------------------------------------------------------------


@criterion(5, "Unsat: every pair of nat objects converts under 0 = S 0")
def test_unsat_rule():
    kernel, ctx = load("axiom n1 : nat. axiom n2 : nat. axiom l : list nat. axiom p :r 0 ≐ S 0.")
    rng = random.Random(2024)
    gen = TermGen(rng)
    for _ in range(5):
        a, b = term(ctx, gen.nat(3)), term(ctx, gen.nat(3))
        assert class_of(a) is O and class_of(b) is O
        ok, certs = kernel.conv.convertible(ctx, a, b)
        assert ok
        unsat = [c for c in certs if c.goal is None]
        assert unsat
        for c in unsat:
            data = certificates.emit(c)
            assert json.loads(data)["goal"] == "0 = 1"
            assert json.loads(data)["trace"][-1]["op"] == "clash"
            assert certificates.verify(data)


# -- 6 -------------------------------------------------------------------------

BOGUS_PROOFS = [
    "fun (x : Prop) => x",
    "fun (x : Prop) => 0",
    "fun (x : Prop) => Eq(nat, 0)",
    "fun (x : Prop) (y : x) => y",
    "fun (x : Prop) => Elim(0, nat, [], fun (_ : nat) => x, [0, fun (n : nat) (h : x) => h])",
]


@criterion(6, "negative smoke: 0 and S 0 differ, no proof of forall x : Prop, x")
def test_negative_smoke():
    conv = Converter()
    assert not conv.convertible(Context(), ZERO, numeral(1))[0]
    goal = term(Context(), "forall (x : Prop), x")
    rejected = 0
    for src in BOGUS_PROOFS:
        with pytest.raises(KernelError):
            Kernel().check(Context(), term(Context(), src), goal)
        rejected += 1
    assert rejected == 5


# -- 7 -------------------------------------------------------------------------


@criterion(7, "solver agrees with the integer-linear oracle; true answers survive brute force")
def test_solver_oracle():
    start = time.perf_counter()
    rng = random.Random(7)
    disagreements = []
    true_linear = []
    for _ in range(500):
        names, hyps, goal = random_linear_query(rng)
        vs = {x: NAT_S for x in names}
        out = entails([h.alg(names) for h in hyps], goal.alg(names), vs)
        if out.entailed != affine_oracle(len(names), hyps, goal):
            disagreements.append((hyps, goal, out.entailed))
        if out.entailed:
            true_linear.append((names, hyps, goal))
    assert disagreements == []

    # top up with fresh linear queries, then add list and congruence queries
    while len(true_linear) < 400:
        names, hyps, goal = random_linear_query(rng)
        if entails([h.alg(names) for h in hyps], goal.alg(names), {x: NAT_S for x in names}).entailed:
            true_linear.append((names, hyps, goal))
    true_linear = true_linear[:400]
    for names, hyps, goal in true_linear:
        assert linear_counterexample(len(names), hyps, goal) is None, (hyps, goal)
    mixed = 0
    while mixed < 100:
        hyps, goal = random_mixed_query(rng)
        if entails(hyps, goal, MIXED_SORTS).entailed:
            assert counterexample(hyps, goal, MIXED_SORTS) is None, (hyps, goal)
            mixed += 1
    assert time.perf_counter() - start < 60


# -- 8 -------------------------------------------------------------------------

_INDEPENDENT_CHECKER = textwrap.dedent("""
    import importlib.abc, json, sys
    BLOCKED = ("ccic.solver", "ccic.conversion", "ccic.typer", "ccic.algebraize", "ccic.reduction")

    class Block(importlib.abc.MetaPathFinder):
        def find_spec(self, name, path, target=None):
            if name.startswith(BLOCKED):
                raise ImportError(name + " is compiled out of the checker")

    sys.meta_path.insert(0, Block())
    from ccic.certificates import verify_quietly
    docs = json.load(open(sys.argv[1], encoding="utf-8"))
    results = [verify_quietly(d.encode("utf-8")) for d in docs]
    assert not any(m.startswith(BLOCKED) for m in sys.modules)
    json.dump(results, sys.stdout)
""")


def run_checker(tmp_path, blobs):
    src = tmp_path / "docs.json"
    src.write_text(json.dumps([b.decode("utf-8") for b in blobs]), encoding="utf-8")
    env = {**os.environ, "PYTHONPATH": os.path.abspath(SRC_DIR)}
    out = subprocess.run([sys.executable, "-c", _INDEPENDENT_CHECKER, str(src)],
                         capture_output=True, text=True, env=env, check=True)
    return json.loads(out.stdout)


def claim_is_sound(data: bytes) -> bool:
    """Whether a parsed certificate's hypotheses still entail its goal (brute force)."""
    c = certificates.parse(data)
    sorts = {e.name: e.sort for e in c.context if getattr(e, "sort", None) is not None}
    sorts.update({a.name: a.sort for a in c.aliens})
    try:
        return counterexample([h.eq for h in c.hypotheses], c.goal, sorts, nat_max=4) is None
    except ValueError:
        return False


@criterion(8, "certificates verify with decision procedures compiled out; mutation kill rate")
def test_certificates_and_mutations(tmp_path, capsys):
    corpus = certificate_corpus(random.Random(5))
    assert len(corpus) >= 40
    assert all(run_checker(tmp_path, corpus))

    rng = random.Random(11)
    mutants = []
    identical = 0
    while len(mutants) < 1000:
        base = rng.choice(corpus)
        what, data = mutate(rng, base)
        if data == base:
            identical += 1
            continue
        mutants.append((what, data))
    verdicts = run_checker(tmp_path, [m for _, m in mutants])
    survivors = [(what, data) for (what, data), ok in zip(mutants, verdicts) if ok]
    with capsys.disabled():
        print(f"\nmutations: {len(mutants)} applied, {identical} no-op redrawn, {len(survivors)} survived")
        for what, data in survivors:
            print(f"  neutral survivor: {what}")
    # a surviving mutant must still make a true claim
    assert all(claim_is_sound(data) for _, data in survivors)
    assert (len(mutants) - len(survivors)) / len(mutants) >= 0.99


# -- 9 -------------------------------------------------------------------------

PROPERTIES = "conversion equivalence, subject reduction, class preservation under substitution"


@pytest.fixture(scope="module")
def gen_env():
    kernel, ctx = load(GEN_CONTEXT)
    return kernel, ctx


@criterion(9, PROPERTIES)
def test_conversion_equivalence(gen_env):
    kernel, ctx = gen_env
    conv = kernel.conv
    rng = random.Random(9)
    gen = TermGen(rng)
    for _ in range(200):
        t = term(ctx, gen.any(3))
        kernel.infer(ctx, t)
        assert conv.convertible(ctx, t, t)[0]
    related = 0
    for i in range(200):
        a = gen.nat(3)
        b = variant(rng, a) if i % 2 else gen.nat(3)
        ta, tb = term(ctx, a), term(ctx, b)
        kernel.infer(ctx, ta), kernel.infer(ctx, tb)
        fwd, back = conv.convertible(ctx, ta, tb)[0], conv.convertible(ctx, tb, ta)[0]
        assert fwd == back, (a, b)
        related += fwd
    assert related >= 100
    for _ in range(200):
        a = gen.nat(3)
        b = variant(rng, a)
        c = variant(rng, b) if rng.random() < 0.5 else f"({b}) + 0"
        ta, tb, tc = (term(ctx, x) for x in (a, b, c))
        assert conv.convertible(ctx, ta, tb)[0] and conv.convertible(ctx, tb, tc)[0]
        assert conv.convertible(ctx, ta, tc)[0]


@criterion(9, PROPERTIES)
def test_subject_reduction(gen_env):
    kernel, ctx = gen_env
    rng = random.Random(19)
    gen = TermGen(rng)
    checked = 0
    while checked < 200:
        t = term(ctx, gen.any(3))
        reduct = step(t, ctx.definitions())
        if reduct is None:
            continue
        ty = kernel.infer(ctx, t)
        kernel.check(ctx, reduct, ty)
        checked += 1


@criterion(9, PROPERTIES)
def test_class_preservation(gen_env):
    kernel, ctx = gen_env
    rng = random.Random(29)
    gen = TermGen(rng)
    for i in range(500):
        if i % 5:
            t = term(ctx, gen.any(3))
            x, u = FVar("n1"), term(ctx, gen.nat(2))
        else:
            t = term(ctx, f"forall (z : nat), ({gen.typ(2)}) -> A")
            x, u = FVar("A", True), term(ctx, gen.typ(2))
        assert class_of(u) == class_of(x)
        before = class_of(t)
        assert before is not None
        assert class_of(substitute(t, x, u)) == before


if __name__ == "__main__":
    sys.exit(pytest.main([__file__, "-q"]))
