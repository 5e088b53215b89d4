"""Concrete syntax: a tokenizer, a recursive-descent parser and a printer.

Terms::

    fun (x y : T) (p :r A) => b        forall (x : T), B        T -> B    T ->r B
    a ≐ b    a ≐{T} b    a == b         a + b    (+)    f a b
    Elim(s, word, [n], Q, [b1, b2, b3])                        Eq(T, t)

Numerals denote ``S (S .. 0)``.  An equation without ``{T}`` is read at ``nat``.
Files are sequences of declarations, each ending with a period::

    symbol f : nat * list nat -> nat.
    axiom a : letter.        axiom p :r x ≐ 0.
    def n : nat := 2 + 3.
    check t : T.
    convert t ~ u.
"""
from __future__ import annotations

import re
from dataclasses import dataclass
from typing import Optional

from . import terms as K
from .algebra import NAT_S, SortApp, SortExpr, list_of
from .errors import ParseError
from .terms import (
    Annot, App, BVar, Ctor, Elim, Eqn, FVar, Ind, Lam, Pi, Refl, Sort, SortT, Sym, Term,
    mentions_index, spine,
)

KEYWORDS = {
    "fun", "forall", "Elim", "Eq", "Prop", "Type", "symbol", "def", "axiom", "check", "convert",
}
CONSTANTS = {
    "nat": K.NAT, "list": K.LIST, "word": K.WORD, "letter": K.LETTER,
    "S": K.SUCC, "nil": K.NIL, "cons": K.CONS,
    "epsilon": K.EPSILON, "char": K.CHAR, "app": K.WAPP, "@": K.APPEND,
}
RESERVED = KEYWORDS | set(CONSTANTS) | {"_"}
_INDUCTIVES = {"nat", "list", "word"}

_TOKEN = re.compile(r"""
    (?P<ws>\s+|--[^\n]*)
  | (?P<num>\d+)
  | (?P<ident>[^\W\d][\w']*)
  | (?P<sym>:=|:r(?![\w'])|:u(?![\w'])|->r(?![\w'])|->|=>|==|≐|\(\+\)|[()\[\]{},.:~+*@])
""", re.VERBOSE)


@dataclass(frozen=True)
class Span:
    line: int
    col: int

    def __str__(self):
        return f"{self.line}:{self.col}"


@dataclass(frozen=True)
class Token:
    kind: str
    text: str
    span: Span


def tokenize(src: str) -> list:
    out = []
    pos, line, line_start = 0, 1, 0
    while pos < len(src):
        m = _TOKEN.match(src, pos)
        if m is None:
            raise ParseError(f"unexpected character {src[pos]!r}", Span(line, pos - line_start + 1))
        kind = m.lastgroup
        text = m.group()
        if kind != "ws":
            out.append(Token(kind, text, Span(line, pos - line_start + 1)))
        nl = text.count("\n")
        if nl:
            line += nl
            line_start = pos + text.rindex("\n") + 1
        pos = m.end()
    out.append(Token("eof", "", Span(line, pos - line_start + 1)))
    return out


# ---------------------------------------------------------------------------
# declarations


@dataclass(frozen=True)
class SymbolDef:
    name: str
    args: tuple
    result: SortExpr
    span: Span


@dataclass(frozen=True)
class Def:
    name: str
    type: Term
    body: Term
    span: Span


@dataclass(frozen=True)
class Axiom:
    name: str
    annot: Annot
    type: Term
    span: Span


@dataclass(frozen=True)
class Check:
    term: Term
    type: Term
    span: Span


@dataclass(frozen=True)
class Convert:
    lhs: Term
    rhs: Term
    span: Span


class Parser:
    """Parser over a token list.

    ``names`` maps free variable names to their level flag (True for
    predicate variables) and ``symbols`` lists declared first-order symbols.
    """

    def __init__(self, src: str, names=None, symbols=()):
        self.toks = tokenize(src)
        self.i = 0
        self.names = dict(names or {})
        self.symbols = set(symbols)

    # -- token helpers -------------------------------------------------------

    @property
    def tok(self) -> Token:
        return self.toks[self.i]

    def at(self, text) -> bool:
        t = self.tok
        return t.text == text and t.kind in ("sym", "ident")

    def advance(self) -> Token:
        t = self.tok
        self.i += 1
        return t

    def expect(self, text) -> Token:
        if not self.at(text):
            self.error(f"expected {text!r}")
        return self.advance()

    def error(self, msg):
        t = self.tok
        found = t.text or "end of input"
        raise ParseError(f"{msg}, found {found!r}", t.span)

    def ident(self) -> str:
        t = self.tok
        if t.kind != "ident" or t.text in RESERVED:
            self.error("expected an identifier")
        self.advance()
        return t.text

    # -- terms ---------------------------------------------------------------

    def term(self, scope=()) -> Term:
        if self.at("fun"):
            self.advance()
            binders = self.binders(scope)
            self.expect("=>")
            return self._close(Lam, binders, scope)
        if self.at("forall"):
            self.advance()
            binders = self.binders(scope)
            self.expect(",")
            return self._close(Pi, binders, scope)
        return self.arrow(scope)

    def _close(self, ctor, binders, scope):
        inner = scope + tuple(n for n, _, _ in binders)
        body = self.term(inner)
        for name, annot, dom in reversed(binders):
            body = ctor(name, annot, dom, body)
        return body

    def binders(self, scope):
        """Binder groups; each domain is parsed in the scope of earlier binders."""
        out = []
        if self.tok.kind == "ident" and not self.at("("):
            names = self.names_list()
            annot = self.annot_colon()
            dom = self.term(scope)
            return self._expand(names, annot, dom, scope)
        while self.at("("):
            self.advance()
            names = self.names_list()
            annot = self.annot_colon()
            dom = self.term(scope + tuple(n for n, _, _ in out))
            self.expect(")")
            out.extend(self._expand(names, annot, dom, scope + tuple(n for n, _, _ in out)))
        if not out:
            self.error("expected binders")
        return out

    @staticmethod
    def _expand(names, annot, dom, scope):
        # successive names share a domain written in the outer scope; shift it under earlier ones
        return [(n, annot, K.shift(dom, k)) for k, n in enumerate(names)]

    def names_list(self):
        names = []
        while self.tok.kind == "ident" and self.tok.text not in RESERVED or self.at("_"):
            names.append(self.advance().text)
        if not names:
            self.error("expected a binder name")
        return names

    def annot_colon(self) -> Annot:
        if self.at(":r"):
            self.advance()
            return Annot.R
        if self.at(":u") or self.at(":"):
            self.advance()
            return Annot.U
        self.error("expected ':'")

    def arrow(self, scope) -> Term:
        lhs = self.eqn(scope)
        if self.at("->") or self.at("->r"):
            annot = Annot.R if self.advance().text == "->r" else Annot.U
            rhs = self.term(scope + ("_",))
            return Pi("_", annot, lhs, rhs)
        return lhs

    def eqn(self, scope) -> Term:
        lhs = self.sum(scope)
        if self.at("≐") or self.at("=="):
            self.advance()
            ty = K.NAT
            if self.at("{"):
                self.advance()
                ty = self.term(scope)
                self.expect("}")
            rhs = self.sum(scope)
            return Eqn(lhs, rhs, ty)
        return lhs

    def sum(self, scope) -> Term:
        t = self.application(scope)
        while self.at("+"):
            self.advance()
            t = K.plus(t, self.application(scope))
        return t

    def application(self, scope) -> Term:
        t = self.atom(scope)
        while self.starts_atom():
            t = App(t, self.atom(scope))
        return t

    def starts_atom(self) -> bool:
        t = self.tok
        if t.kind == "num":
            return True
        if t.kind == "ident":
            return t.text not in KEYWORDS or t.text in ("Prop", "Type", "Elim", "Eq")
        return t.text in ("(", "(+)", "@")

    def atom(self, scope) -> Term:
        t = self.tok
        if t.kind == "num":
            self.advance()
            return K.numeral(int(t.text))
        if self.at("("):
            self.advance()
            inner = self.term(scope)
            self.expect(")")
            return inner
        if self.at("(+)"):
            self.advance()
            return K.PLUS
        if self.at("@"):
            self.advance()
            return K.APPEND
        if t.kind != "ident":
            self.error("expected a term")
        if t.text == "Prop":
            self.advance()
            return K.PROP
        if t.text == "Type":
            self.advance()
            return K.TYPE
        if t.text == "Elim":
            return self.elim(scope)
        if t.text == "Eq":
            self.advance()
            self.expect("(")
            ty = self.term(scope)
            self.expect(",")
            arg = self.term(scope)
            self.expect(")")
            return Refl(ty, arg)
        if t.text in CONSTANTS:
            self.advance()
            return CONSTANTS[t.text]
        if t.text in KEYWORDS:
            self.error("unexpected keyword")
        self.advance()
        return self.resolve(t, scope)

    def resolve(self, t: Token, scope) -> Term:
        for k, n in enumerate(reversed(scope)):
            if n == t.text:
                return BVar(k)
        if t.text in self.names:
            return FVar(t.text, self.names[t.text])
        if t.text in self.symbols:
            return Sym(t.text)
        raise ParseError(f"unbound identifier {t.text!r}", t.span)

    def elim(self, scope) -> Term:
        self.expect("Elim")
        self.expect("(")
        scrut = self.term(scope)
        self.expect(",")
        ind = self.tok.text
        if ind not in _INDUCTIVES:
            self.error("expected nat, list or word")
        self.advance()
        self.expect(",")
        idx = self.term_list(scope)
        self.expect(",")
        motive = self.term(scope)
        self.expect(",")
        branches = self.term_list(scope)
        self.expect(")")
        return Elim(scrut, ind, tuple(idx), motive, tuple(branches))

    def term_list(self, scope):
        self.expect("[")
        out = []
        if not self.at("]"):
            out.append(self.term(scope))
            while self.at(","):
                self.advance()
                out.append(self.term(scope))
        self.expect("]")
        return out

    def sort(self) -> SortExpr:
        if self.at("nat"):
            self.advance()
            return NAT_S
        if self.at("list"):
            self.advance()
            return list_of(self.sort_atom())
        if self.at("("):
            return self.sort_atom()
        self.error("expected a sort (nat or list ...)")

    def sort_atom(self) -> SortExpr:
        if self.at("("):
            self.advance()
            s = self.sort()
            self.expect(")")
            return s
        if self.at("nat"):
            self.advance()
            return NAT_S
        self.error("expected a sort")

    # -- declarations ----------------------------------------------------------

    def declaration(self):
        span = self.tok.span
        if self.at("symbol"):
            self.advance()
            name = self.ident()
            self.expect(":")
            sorts = [self.sort()]
            while self.at("*"):
                self.advance()
                sorts.append(self.sort())
            if self.at("->"):
                self.advance()
                result = self.sort()
                args = tuple(sorts)
            elif len(sorts) == 1:
                result, args = sorts[0], ()
            else:
                self.error("expected '->'")
            self.expect(".")
            self.symbols.add(name)
            return SymbolDef(name, args, result, span)
        if self.at("def"):
            self.advance()
            name = self.ident()
            self.expect(":")
            ty = self.term()
            self.expect(":=")
            body = self.term()
            self.expect(".")
            return Def(name, ty, body, span)
        if self.at("axiom"):
            self.advance()
            name = self.ident()
            annot = self.annot_colon()
            ty = self.term()
            self.expect(".")
            return Axiom(name, annot, ty, span)
        if self.at("check"):
            self.advance()
            t = self.term()
            self.expect(":")
            ty = self.term()
            self.expect(".")
            return Check(t, ty, span)
        if self.at("convert"):
            self.advance()
            t = self.term()
            self.expect("~")
            u = self.term()
            self.expect(".")
            return Convert(t, u, span)
        self.error("expected a declaration")

    def declare(self, name: str, type_: Term):
        if name in self.names or name in self.symbols:
            raise ParseError(f"{name} is already declared")
        self.names[name] = K.class_of(type_) is K.K

    def eof(self):
        if self.tok.kind != "eof":
            self.error("trailing input")


def parse_term(src: str, names=None, symbols=()) -> Term:
    p = Parser(src, names, symbols)
    t = p.term()
    p.eof()
    return t


def parse_file(src: str):
    """Yield declarations one at a time; names become visible once declared."""
    p = Parser(src)
    while p.tok.kind != "eof":
        d = p.declaration()
        match d:
            case Def(name, ty, _, _) | Axiom(name, _, ty, _):
                p.declare(name, ty)
        yield d


# ---------------------------------------------------------------------------
# printing

_CTOR_TEXT = {v: k for k, v in CONSTANTS.items() if isinstance(v, Ctor)}
_PREC_TERM, _PREC_EQN, _PREC_SUM, _PREC_APP, _PREC_ATOM = range(5)


def _numeral_value(t: Term) -> Optional[int]:
    n = 0
    while isinstance(t, App) and t.fn == K.SUCC:
        n += 1
        t = t.arg
    return n if t == K.ZERO else None


class Printer:
    def __init__(self, avoid=()):
        self.avoid = set(avoid)

    def fresh(self, hint, scope, body):
        used = set(scope) | K.free_vars(body) | self.avoid | RESERVED
        base = hint if hint and re.fullmatch(r"[^\W\d][\w']*", hint) and hint not in RESERVED else "x"
        if base not in used:
            return base
        i = 1
        while f"{base}{i}" in used:
            i += 1
        return f"{base}{i}"

    def show(self, t: Term, scope=(), prec=_PREC_TERM) -> str:
        match t:
            case SortT(Sort.PROP):
                return "Prop"
            case SortT(Sort.TYPE):
                return "Type"
            case SortT(Sort.EXTERN):
                raise ValueError("Extern has no surface syntax")
            case BVar(i):
                if i >= len(scope):
                    raise ValueError("loose bound variable")
                return scope[-1 - i]
            case FVar(name, _):
                return name
            case Sym("+"):
                return "(+)"
            case Sym(name):
                return name
            case Ind(name):
                return name
            case Ctor():
                if t == K.ZERO:
                    return "0"
                return _CTOR_TEXT[t]
            case Lam() | Pi():
                return self._paren(self.binder(t, scope), prec > _PREC_TERM)
            case Eqn(l, r, ty):
                annot = "" if ty == K.NAT else "{" + self.show(ty, scope) + "}"
                s = f"{self.show(l, scope, _PREC_SUM)} ≐{annot} {self.show(r, scope, _PREC_SUM)}"
                return self._paren(s, prec > _PREC_EQN)
            case Refl(ty, a):
                return f"Eq({self.show(ty, scope)}, {self.show(a, scope)})"
            case Elim(s, ind, idx, q, bs):
                idx_s = ", ".join(self.show(x, scope) for x in idx)
                bs_s = ", ".join(self.show(b, scope) for b in bs)
                return f"Elim({self.show(s, scope)}, {ind}, [{idx_s}], {self.show(q, scope)}, [{bs_s}])"
            case App():
                n = _numeral_value(t)
                if n is not None:
                    return str(n)
                h, args = spine(t)
                if h == K.PLUS and len(args) == 2:
                    s = f"{self.show(args[0], scope, _PREC_SUM)} + {self.show(args[1], scope, _PREC_APP)}"
                    return self._paren(s, prec > _PREC_SUM)
                parts = [self.show(h, scope, _PREC_ATOM)] + [self.show(a, scope, _PREC_ATOM) for a in args]
                return self._paren(" ".join(parts), prec > _PREC_APP)
        raise ValueError(f"cannot print {t!r}")

    def binder(self, t, scope):
        if isinstance(t, Pi) and not mentions_index(t.body, 0):
            arrow = "->r" if t.annot is Annot.R else "->"
            dom = self.show(t.dom, scope, _PREC_EQN)
            return f"{dom} {arrow} {self.show(t.body, scope + ('_',))}"
        cls = type(t)
        kw, sep = ("fun", " =>") if cls is Lam else ("forall", ",")
        groups = []
        while isinstance(t, cls):
            if cls is Pi and groups and not mentions_index(t.body, 0):
                break
            name = self.fresh(t.name, scope, t.body)
            mark = ":r" if t.annot is Annot.R else ":"
            groups.append(f"({name} {mark} {self.show(t.dom, scope)})")
            scope = scope + (name,)
            t = t.body
        return f"{kw} {' '.join(groups)}{sep} {self.show(t, scope)}"

    @staticmethod
    def _paren(s, cond):
        return f"({s})" if cond else s


def pretty(t: Term, avoid=()) -> str:
    return Printer(avoid).show(t)


def pretty_sort(s: SortExpr) -> str:
    if isinstance(s, SortApp) and s.ctor == "list":
        inner = pretty_sort(s.args[0])
        return f"list {inner}" if s.args[0] == NAT_S else f"list ({inner})"
    return str(s)
