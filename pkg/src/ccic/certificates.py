"""Certificates for theory calls: canonical JSON encoding and an independent checker.

The checking half (:func:`parse`, :func:`verify`) relies on the concrete
syntax, the signature and the trace replayer only; it never touches the
solver, the conversion procedure, the typer or reduction.
"""
from __future__ import annotations

import json
import os
from dataclasses import dataclass
from typing import Optional

from .algebra import (
    AlgEquation, DEFAULT_SIGNATURE, FALSE_EQ, SortExpr, alg_vars, alien_name,
    embed_term, has_sort, sort_from_sexpr, sort_to_sexpr, term_from_sexpr, term_to_sexpr,
    unembed_sort,
)
from .errors import GoalMismatch, InvalidStep, ParseError
from .syntax import Parser
from .terms import Eqn, SyntacticClass, class_of
from .trace import check_trace

VERSION = 1
UNSAT_GOAL = "0 = 1"
FIELDS = ("version", "context", "hypotheses", "goal", "aliens", "trace")


@dataclass(frozen=True)
class ContextEntry:
    name: str
    annot: str
    type: str
    sort: Optional[SortExpr]


@dataclass(frozen=True)
class SymbolEntry:
    name: str
    args: tuple
    result: SortExpr


@dataclass(frozen=True)
class Hypothesis:
    source: str
    eq: AlgEquation


@dataclass(frozen=True)
class AlienEntry:
    name: str
    sort: SortExpr
    term: str


@dataclass(frozen=True, eq=True)
class Certificate:
    context: tuple
    hypotheses: tuple
    goal: Optional[AlgEquation]  # None: the hypotheses are contradictory
    aliens: tuple
    trace: tuple

    @property
    def is_unsat(self):
        return self.goal is None


# ---------------------------------------------------------------------------
# encoding


def _eq_json(eq: AlgEquation) -> dict:
    return {"lhs": term_to_sexpr(eq.lhs), "rhs": term_to_sexpr(eq.rhs), "sort": sort_to_sexpr(eq.sort)}


def to_json(c: Certificate) -> dict:
    ctx = []
    for e in c.context:
        if isinstance(e, SymbolEntry):
            ctx.append({"name": e.name, "symbol": {"args": [sort_to_sexpr(s) for s in e.args],
                                                   "result": sort_to_sexpr(e.result)}})
        else:
            ctx.append({"name": e.name, "annot": e.annot, "type": e.type,
                        "sort": None if e.sort is None else sort_to_sexpr(e.sort)})
    return {
        "version": VERSION,
        "context": ctx,
        "hypotheses": [{"source": h.source, **_eq_json(h.eq)} for h in c.hypotheses],
        "goal": UNSAT_GOAL if c.goal is None else _eq_json(c.goal),
        "aliens": [{"name": a.name, "sort": sort_to_sexpr(a.sort), "term": a.term} for a in c.aliens],
        "trace": [dict(s) for s in c.trace],
    }


def dumps(doc) -> bytes:
    return json.dumps(doc, ensure_ascii=False, separators=(",", ":")).encode("utf-8")


def emit(c: Certificate) -> bytes:
    return dumps(to_json(c))


def write_all(certs, directory) -> list:
    """Write ``NNNN.ccert`` files in emission order; return their paths."""
    os.makedirs(directory, exist_ok=True)
    paths = []
    for i, c in enumerate(certs, 1):
        path = os.path.join(directory, f"{i:04d}.ccert")
        with open(path, "wb") as f:
            f.write(emit(c))
        paths.append(path)
    return paths


# ---------------------------------------------------------------------------
# decoding


def _fail(msg):
    raise ParseError(f"malformed certificate: {msg}")


def _obj(x, keys, what):
    if not isinstance(x, dict) or list(x) != list(keys):
        _fail(f"{what} must have fields {', '.join(keys)} in that order")
    return x


def _str(x, what):
    if not isinstance(x, str):
        _fail(f"{what} must be a string")
    return x


def _sexpr(fn, x, what):
    try:
        return fn(x)
    except (ValueError, TypeError):
        _fail(f"bad {what}")


def _eq(x, what, extra=()) -> AlgEquation:
    _obj(x, (*extra, "lhs", "rhs", "sort"), what)
    return AlgEquation(_sexpr(term_from_sexpr, x["lhs"], "term"), _sexpr(term_from_sexpr, x["rhs"], "term"),
                       _sexpr(sort_from_sexpr, x["sort"], "sort"))


def _no_floats(x):
    if isinstance(x, float):
        _fail("floating point numbers are not allowed")
    if isinstance(x, list):
        for y in x:
            _no_floats(y)
    elif isinstance(x, dict):
        for y in x.values():
            _no_floats(y)


def parse(data: bytes) -> Certificate:
    try:
        doc = json.loads(data.decode("utf-8") if isinstance(data, (bytes, bytearray)) else data)
    except (UnicodeDecodeError, json.JSONDecodeError) as e:
        raise ParseError(f"not a JSON document: {e}") from None
    _obj(doc, FIELDS, "certificate")
    _no_floats(doc)
    if doc["version"] != VERSION or isinstance(doc["version"], bool):
        _fail("unsupported version")
    for k in ("context", "hypotheses", "aliens", "trace"):
        if not isinstance(doc[k], list):
            _fail(f"{k} must be a list")
    ctx = []
    for e in doc["context"]:
        if isinstance(e, dict) and "symbol" in e:
            _obj(e, ("name", "symbol"), "symbol entry")
            sym = _obj(e["symbol"], ("args", "result"), "symbol")
            if not isinstance(sym["args"], list):
                _fail("symbol arguments must be a list")
            ctx.append(SymbolEntry(_str(e["name"], "name"),
                                   tuple(_sexpr(sort_from_sexpr, s, "sort") for s in sym["args"]),
                                   _sexpr(sort_from_sexpr, sym["result"], "sort")))
        else:
            _obj(e, ("name", "annot", "type", "sort"), "context entry")
            sort = None if e["sort"] is None else _sexpr(sort_from_sexpr, e["sort"], "sort")
            ctx.append(ContextEntry(_str(e["name"], "name"), _str(e["annot"], "annotation"),
                                    _str(e["type"], "type"), sort))
    hyps = []
    for h in doc["hypotheses"]:
        eq = _eq(h, "hypothesis", ("source",))
        hyps.append(Hypothesis(_str(h["source"], "source"), eq))
    goal = None if doc["goal"] == UNSAT_GOAL else _eq(doc["goal"], "goal")
    aliens = []
    for a in doc["aliens"]:
        _obj(a, ("name", "sort", "term"), "alien")
        aliens.append(AlienEntry(_str(a["name"], "alien name"), _sexpr(sort_from_sexpr, a["sort"], "sort"),
                                 _str(a["term"], "alien term")))
    return Certificate(tuple(ctx), tuple(hyps), goal, tuple(aliens), tuple(doc["trace"]))


# ---------------------------------------------------------------------------
# checking


def check(c: Certificate) -> bool:
    """Validate every part of ``c``; raise ParseError, InvalidStep or GoalMismatch."""
    sig = DEFAULT_SIGNATURE
    parser_names = {}
    entries = {}
    var_sorts = {}
    for e in c.context:
        if e.name in entries or sig.decl(e.name) is not None:
            _fail(f"{e.name} declared twice")
        if isinstance(e, SymbolEntry):
            if parser_names:
                _fail("symbols must precede variables")
            try:
                sig = sig.with_symbol(e.name, e.args, e.result)
            except ValueError as err:
                _fail(str(err))
            entries[e.name] = e
            continue
        if e.annot not in ("r", "u"):
            _fail(f"bad annotation for {e.name}")
        ty_check = Parser(e.type, parser_names, [d.name for d in sig.user_symbols()])
        ty = ty_check.term()
        ty_check.eof()
        if unembed_sort(ty) != e.sort:
            _fail(f"sort of {e.name} does not match its type")
        if e.sort is not None:
            try:
                sig.check_sort(e.sort)
            except ValueError as err:
                _fail(str(err))
            var_sorts[e.name] = e.sort
        parser_names[e.name] = class_of(ty) is SyntacticClass.K
        entries[e.name] = (e, ty)
    for h in c.hypotheses:
        src = entries.get(h.source)
        if not isinstance(src, tuple):
            _fail(f"hypothesis source {h.source} is not a context variable")
        ty = src[1]
        ok = (isinstance(ty, Eqn) and unembed_sort(ty.ty) == h.eq.sort
              and has_sort(h.eq.lhs, h.eq.sort, var_sorts, sig) and has_sort(h.eq.rhs, h.eq.sort, var_sorts, sig)
              and embed_term(h.eq.lhs, h.eq.sort, sig) == ty.lhs and embed_term(h.eq.rhs, h.eq.sort, sig) == ty.rhs)
        if not ok:
            _fail(f"hypothesis does not match the type of {h.source}")
    alien_sorts = {}
    counts = {}
    symbols = [d.name for d in sig.user_symbols()]
    for a in c.aliens:
        try:
            sig.check_sort(a.sort)
        except ValueError as err:
            _fail(str(err))
        counts[a.sort] = counts.get(a.sort, 0) + 1
        if a.name != alien_name(a.sort, counts[a.sort]):
            _fail(f"unexpected alien name {a.name}")
        p = Parser(a.term, parser_names, symbols)
        p.term()
        p.eof()
        alien_sorts[a.name] = a.sort
    all_sorts = {**var_sorts, **alien_sorts}
    goal = FALSE_EQ if c.goal is None else c.goal
    if c.goal is not None:
        used = alg_vars(goal.lhs) | alg_vars(goal.rhs)
        if not set(alien_sorts) <= used:
            _fail("alien does not occur in the goal")
        for side in (goal.lhs, goal.rhs):
            if not has_sort(side, goal.sort, all_sorts, sig):
                _fail("goal is ill-sorted")
    elif c.aliens:
        _fail("contradiction certificates carry no aliens")
    check_trace([h.eq for h in c.hypotheses], goal, list(c.trace), all_sorts, sig)
    return True


def verify(data: bytes) -> bool:
    """Parse and check one certificate; errors propagate as exceptions."""
    return check(parse(data))


def verify_quietly(data: bytes) -> bool:
    try:
        return verify(data)
    except (ParseError, InvalidStep, GoalMismatch):
        return False
