"""Abstract syntax, parser and pretty-printer for the mechanism language.

Mechanisms are WHILE programs extended with a simultaneous choice
statement ``ch {1,2} (x1, x2)``.  Formulas (pre- and postconditions) are
boolean expressions that may additionally mention the reserved outcome
designator ``outcome`` and its components ``outcome[k]``.
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from typing import Iterator, Union

RESERVED = frozenset(
    "if then else fi while do od ch true false not and or outcome".split()
)

ARITH_OPS = ("+", "-", "*")
REL_OPS = ("=", "!=", "<", "<=", ">", ">=")


class MPLSyntaxError(ValueError):
    """Raised for malformed mechanism or formula source."""

    def __init__(self, message: str, line: int = 0, col: int = 0):
        self.line = line
        self.col = col
        where = f"{line}:{col}: " if line else ""
        super().__init__(where + message)


def _cached_hash(self) -> int:
    try:
        return self.__dict__["_hash"]
    except KeyError:
        h = hash((type(self).__name__,) + tuple(
            getattr(self, f) for f in self.__dataclass_fields__))
        object.__setattr__(self, "_hash", h)
        return h


def _node(cls):
    # Frozen dataclasses rehash recursively on every call; residual
    # mechanisms are memo keys, so the hash is cached on first use.
    cls = dataclass(frozen=True)(cls)
    cls.__hash__ = _cached_hash
    return cls


# --- terms -----------------------------------------------------------------

@_node
class Var:
    name: str


@_node
class Lit:
    """Integer or boolean literal."""
    value: Union[int, bool]

    def __eq__(self, other):
        # True == 1 in Python; literals of different kinds must not collide as cache keys
        return (isinstance(other, Lit) and type(self.value) is type(other.value)
                and self.value == other.value)


@_node
class App:
    """Function application; infix arithmetic is App("+", (a, b))."""
    fn: str
    args: tuple = ()


@_node
class Tup:
    items: tuple

    def __post_init__(self):
        if len(self.items) < 2:
            raise ValueError("tuple terms need at least two components")


@_node
class Outcome:
    """The outcome designator, or its k-th component (1-based) if k is set."""
    k: int | None = None

    def __post_init__(self):
        if self.k is not None and self.k < 1:
            raise ValueError("outcome projections are 1-based")


Term = Union[Var, Lit, App, Tup, Outcome]


# --- boolean expressions ---------------------------------------------------

@_node
class TrueB:
    pass


@_node
class Rel:
    op: str
    args: tuple


@_node
class Not:
    arg: "BoolExpr"


@_node
class And:
    left: "BoolExpr"
    right: "BoolExpr"


BoolExpr = Union[TrueB, Rel, Not, And]


def false_() -> BoolExpr:
    return Not(TrueB())


def or_(a: BoolExpr, b: BoolExpr) -> BoolExpr:
    return Not(And(Not(a), Not(b)))


def implies(a: BoolExpr, b: BoolExpr) -> BoolExpr:
    return Not(And(a, Not(b)))


def conj(*parts: BoolExpr) -> BoolExpr:
    if not parts:
        return TrueB()
    out = parts[0]
    for p in parts[1:]:
        out = And(out, p)
    return out


# --- mechanisms ------------------------------------------------------------

@_node
class Assign:
    var: str
    term: Term


@_node
class Seq:
    first: "Mechanism"
    second: "Mechanism"


@_node
class If:
    cond: BoolExpr
    then: "Mechanism"
    else_: "Mechanism"


@_node
class While:
    cond: BoolExpr
    body: "Mechanism"


@_node
class Choice:
    """``ch_A``: agents[i] chooses a value for vars[i]; agents sorted ascending."""
    agents: tuple
    vars: tuple

    def __post_init__(self):
        if not self.agents:
            raise MPLSyntaxError("choice needs a nonempty agent set")
        if len(self.agents) != len(self.vars):
            raise MPLSyntaxError("choice needs one variable per agent")
        if len(set(self.agents)) != len(self.agents):
            raise MPLSyntaxError("duplicate agent in choice")
        if len(set(self.vars)) != len(self.vars):
            raise MPLSyntaxError("duplicate choice variable")
        if list(self.agents) != sorted(self.agents):
            order = sorted(range(len(self.agents)), key=lambda i: self.agents[i])
            object.__setattr__(self, "agents", tuple(self.agents[i] for i in order))
            object.__setattr__(self, "vars", tuple(self.vars[i] for i in order))

    @property
    def assignment(self) -> dict:
        return dict(zip(self.agents, self.vars))


Mechanism = Union[Assign, Seq, If, While, Choice]


# --- lexer -----------------------------------------------------------------

_TOKEN_RE = re.compile(
    r"(?P<ws>[ \t\r]+)|(?P<nl>\n)|(?P<comment>#[^\n]*)"
    r"|(?P<int>\d+)"
    r"|(?P<ident>[A-Za-z_][A-Za-z0-9_]*)"
    r"|(?P<op>:=|->|<=|>=|!=|[=<>+\-*;,(){}\[\]])"
)


@dataclass
class Token:
    kind: str       # "int", "ident", "kw", "op", "eof"
    text: str
    line: int
    col: int


def tokenize(source: str) -> list[Token]:
    tokens = []
    line, line_start, pos = 1, 0, 0
    while pos < len(source):
        m = _TOKEN_RE.match(source, pos)
        if not m:
            raise MPLSyntaxError(f"unexpected character {source[pos]!r}",
                                 line, pos - line_start + 1)
        kind = m.lastgroup
        text = m.group()
        col = pos - line_start + 1
        if kind == "nl":
            line += 1
            line_start = m.end()
        elif kind == "ident":
            tokens.append(Token("kw" if text in RESERVED else "ident", text, line, col))
        elif kind in ("int", "op"):
            tokens.append(Token(kind, text, line, col))
        pos = m.end()
    tokens.append(Token("eof", "", line, pos - line_start + 1))
    return tokens


# --- parser ----------------------------------------------------------------

class _Backtrack(Exception):
    pass


class Parser:
    """Recursive-descent parser shared by mechanisms and formulas."""

    def __init__(self, source: str, formula: bool = False):
        self.tokens = tokenize(source)
        self.pos = 0
        self.formula = formula

    # token helpers
    @property
    def tok(self) -> Token:
        return self.tokens[self.pos]

    def peek(self, offset: int = 1) -> Token:
        return self.tokens[min(self.pos + offset, len(self.tokens) - 1)]

    def at(self, text: str) -> bool:
        t = self.tok
        return t.kind in ("op", "kw") and t.text == text

    def error(self, message: str, tok: Token | None = None) -> MPLSyntaxError:
        tok = tok or self.tok
        return MPLSyntaxError(message, tok.line, tok.col)

    def expect(self, text: str) -> Token:
        if not self.at(text):
            found = self.tok.text or "end of input"
            raise self.error(f"expected {text!r}, found {found!r}")
        t = self.tok
        self.pos += 1
        return t

    def ident(self) -> str:
        t = self.tok
        if t.kind != "ident":
            raise self.error(f"expected identifier, found {t.text or 'end of input'!r}")
        self.pos += 1
        return t.text

    def integer(self) -> int:
        t = self.tok
        if t.kind != "int":
            raise self.error(f"expected integer, found {t.text or 'end of input'!r}")
        self.pos += 1
        return int(t.text)

    def finish(self):
        if self.tok.kind != "eof":
            raise self.error(f"unexpected {self.tok.text!r}")

    # mechanisms
    def mechanism(self) -> Mechanism:
        m = self.statement()
        while self.at(";"):
            self.pos += 1
            m = Seq(m, self.statement())
        return m

    def statement(self) -> Mechanism:
        if self.at("if"):
            self.pos += 1
            cond = self.bexp()
            self.expect("then")
            then = self.mechanism()
            self.expect("else")
            else_ = self.mechanism()
            self.expect("fi")
            return If(cond, then, else_)
        if self.at("while"):
            self.pos += 1
            cond = self.bexp()
            self.expect("do")
            body = self.mechanism()
            self.expect("od")
            return While(cond, body)
        if self.at("ch"):
            start = self.tok
            self.pos += 1
            self.expect("{")
            agents = [self.integer()]
            while self.at(","):
                self.pos += 1
                agents.append(self.integer())
            self.expect("}")
            self.expect("(")
            names = [self.ident()]
            while self.at(","):
                self.pos += 1
                names.append(self.ident())
            self.expect(")")
            try:
                return Choice(tuple(agents), tuple(names))
            except MPLSyntaxError as exc:
                raise MPLSyntaxError(str(exc), start.line, start.col) from None
        if self.tok.kind == "ident":
            name = self.ident()
            self.expect(":=")
            return Assign(name, self.term())
        raise self.error(f"expected a statement, found {self.tok.text or 'end of input'!r}")

    # terms
    def term(self) -> Term:
        t = self.product()
        while self.tok.kind == "op" and self.tok.text in ("+", "-"):
            op = self.tok.text
            self.pos += 1
            t = App(op, (t, self.product()))
        return t

    def product(self) -> Term:
        t = self.unary()
        while self.at("*"):
            self.pos += 1
            t = App("*", (t, self.unary()))
        return t

    def unary(self) -> Term:
        if self.at("-"):
            self.pos += 1
            inner = self.unary()
            if isinstance(inner, Lit) and type(inner.value) is int:
                return Lit(-inner.value)
            return App("neg", (inner,))
        return self.atom()

    def atom(self) -> Term:
        t = self.tok
        if t.kind == "int":
            self.pos += 1
            return Lit(int(t.text))
        if t.kind == "kw" and t.text in ("true", "false"):
            self.pos += 1
            return Lit(t.text == "true")
        if t.kind == "kw" and t.text == "outcome":
            if not self.formula:
                raise self.error("'outcome' may only appear in formulas")
            self.pos += 1
            if self.at("["):
                self.pos += 1
                k = self.integer()
                self.expect("]")
                if k < 1:
                    raise self.error("outcome projections are 1-based", t)
                return Outcome(k)
            return Outcome()
        if t.kind == "ident":
            self.pos += 1
            if self.at("("):
                self.pos += 1
                args = []
                if not self.at(")"):
                    args.append(self.term())
                    while self.at(","):
                        self.pos += 1
                        args.append(self.term())
                self.expect(")")
                return App(t.text, tuple(args))
            if self.at("["):
                raise self.error("projection is only allowed on 'outcome'")
            return Var(t.text)
        if self.at("("):
            self.pos += 1
            items = [self.term()]
            while self.at(","):
                self.pos += 1
                items.append(self.term())
            self.expect(")")
            if self.at("["):
                raise self.error("projection is only allowed on 'outcome'")
            return items[0] if len(items) == 1 else Tup(tuple(items))
        raise self.error(f"expected a term, found {t.text or 'end of input'!r}")

    # boolean expressions
    def bexp(self) -> BoolExpr:
        left = self.disjunction()
        if self.at("->"):
            if not self.formula:
                raise self.error("'->' may only appear in formulas")
            self.pos += 1
            return implies(left, self.bexp())
        return left

    def disjunction(self) -> BoolExpr:
        b = self.conjunction()
        while self.at("or"):
            self.pos += 1
            b = or_(b, self.conjunction())
        return b

    def conjunction(self) -> BoolExpr:
        b = self.negation()
        while self.at("and"):
            self.pos += 1
            b = And(b, self.negation())
        return b

    def negation(self) -> BoolExpr:
        if self.at("not"):
            self.pos += 1
            return Not(self.negation())
        return self.batom()

    def batom(self) -> BoolExpr:
        if self.tok.kind == "kw" and self.tok.text in ("true", "false"):
            nxt = self.peek()
            if not (nxt.kind == "op" and nxt.text in REL_OPS + ARITH_OPS):
                self.pos += 1
                return TrueB() if self.tokens[self.pos - 1].text == "true" else false_()
        if self.at("("):
            saved = self.pos
            try:
                self.pos += 1
                inner = self.bexp()
                if not self.at(")"):
                    raise _Backtrack
                self.pos += 1
                nxt = self.tok
                if nxt.kind == "op" and nxt.text in REL_OPS + ARITH_OPS + ("[",):
                    raise _Backtrack
                return inner
            except (_Backtrack, MPLSyntaxError):
                self.pos = saved
        left = self.term()
        t = self.tok
        if not (t.kind == "op" and t.text in REL_OPS):
            if isinstance(left, App) and left.fn not in ARITH_OPS:
                return Rel(left.fn, left.args)  # r(t1, ..., tn) as an atom
            raise self.error(f"expected a comparison, found {t.text or 'end of input'!r}")
        self.pos += 1
        return Rel(t.text, (left, self.term()))


def parse_mechanism(source: str) -> Mechanism:
    """Parse mechanism source text into an AST."""
    p = Parser(source)
    m = p.mechanism()
    p.finish()
    return m


def parse_formula(source: str) -> BoolExpr:
    """Parse a pre/postcondition; ``->`` and ``or`` are desugared."""
    p = Parser(source, formula=True)
    b = p.bexp()
    p.finish()
    return b


def parse_term(source: str, formula: bool = True) -> Term:
    p = Parser(source, formula=formula)
    t = p.term()
    p.finish()
    return t


# --- pretty printing -------------------------------------------------------

def show_term(t: Term, prec: int = 0) -> str:
    if isinstance(t, Var):
        return t.name
    if isinstance(t, Lit):
        if isinstance(t.value, bool):
            return "true" if t.value else "false"
        return str(t.value) if t.value >= 0 or prec == 0 else f"({t.value})"
    if isinstance(t, Outcome):
        return "outcome" if t.k is None else f"outcome[{t.k}]"
    if isinstance(t, Tup):
        return "(" + ", ".join(show_term(i) for i in t.items) + ")"
    if isinstance(t, App):
        if t.fn in ("+", "-") and len(t.args) == 2:
            s = f"{show_term(t.args[0], 1)} {t.fn} {show_term(t.args[1], 2)}"
            return f"({s})" if prec > 1 else s
        if t.fn == "*" and len(t.args) == 2:
            s = f"{show_term(t.args[0], 2)} * {show_term(t.args[1], 3)}"
            return f"({s})" if prec > 2 else s
        if t.fn == "neg" and len(t.args) == 1:
            inner = t.args[0]
            s = "-" + show_term(inner, 3)
            if isinstance(inner, Lit):
                s = f"-({show_term(inner)})"
            return s
        return f"{t.fn}(" + ", ".join(show_term(a) for a in t.args) + ")"
    raise TypeError(f"not a term: {t!r}")


def show_bool(b: BoolExpr, formula: bool = True, prec: int = 0) -> str:
    """Print a boolean expression; precedence levels: -> 0, or 1, and 2, not 3."""
    if isinstance(b, TrueB):
        return "true"
    if isinstance(b, Rel):
        if b.op not in REL_OPS:
            return f"{b.op}({', '.join(show_term(a) for a in b.args)})"
        return f"{show_term(b.args[0])} {b.op} {show_term(b.args[1])}"
    if isinstance(b, Not):
        a = b.arg
        if isinstance(a, TrueB):
            return "false"
        if isinstance(a, And):
            if isinstance(a.left, Not) and isinstance(a.right, Not):
                s = f"{show_bool(a.left.arg, formula, 1)} or {show_bool(a.right.arg, formula, 2)}"
                return f"({s})" if prec > 1 else s
            if formula and isinstance(a.right, Not):
                s = f"{show_bool(a.left, formula, 1)} -> {show_bool(a.right.arg, formula, 0)}"
                return f"({s})" if prec > 0 else s
        return "not " + show_bool(a, formula, 3)
    if isinstance(b, And):
        s = f"{show_bool(b.left, formula, 2)} and {show_bool(b.right, formula, 3)}"
        return f"({s})" if prec > 2 else s
    raise TypeError(f"not a boolean expression: {b!r}")


def show_mechanism(m: Mechanism, indent: int = 0) -> str:
    pad = "  " * indent
    if isinstance(m, Assign):
        return f"{pad}{m.var} := {show_term(m.term)}"
    if isinstance(m, Seq):
        return f"{show_mechanism(m.first, indent)};\n{show_mechanism(m.second, indent)}"
    if isinstance(m, If):
        return (f"{pad}if {show_bool(m.cond, False)} then\n"
                f"{show_mechanism(m.then, indent + 1)}\n{pad}else\n"
                f"{show_mechanism(m.else_, indent + 1)}\n{pad}fi")
    if isinstance(m, While):
        return (f"{pad}while {show_bool(m.cond, False)} do\n"
                f"{show_mechanism(m.body, indent + 1)}\n{pad}od")
    if isinstance(m, Choice):
        return (f"{pad}ch {{{', '.join(map(str, m.agents))}}} "
                f"({', '.join(m.vars)})")
    raise TypeError(f"not a mechanism: {m!r}")


def summarize(m: Mechanism | None, width: int = 40) -> str:
    """One-line rendering of a residual mechanism (``Λ`` for the empty one)."""
    if m is None:
        return "Λ"
    text = " ".join(show_mechanism(m).split())
    return text if len(text) <= width else text[: width - 1] + "…"


# --- traversal -------------------------------------------------------------

def term_vars(t: Term) -> Iterator[str]:
    if isinstance(t, Var):
        yield t.name
    elif isinstance(t, App):
        for a in t.args:
            yield from term_vars(a)
    elif isinstance(t, Tup):
        for a in t.items:
            yield from term_vars(a)


def bool_vars(b: BoolExpr) -> Iterator[str]:
    if isinstance(b, Rel):
        for a in b.args:
            yield from term_vars(a)
    elif isinstance(b, Not):
        yield from bool_vars(b.arg)
    elif isinstance(b, And):
        yield from bool_vars(b.left)
        yield from bool_vars(b.right)


def mechanism_vars(m: Mechanism) -> Iterator[str]:
    if isinstance(m, Assign):
        yield m.var
        yield from term_vars(m.term)
    elif isinstance(m, Seq):
        yield from mechanism_vars(m.first)
        yield from mechanism_vars(m.second)
    elif isinstance(m, If):
        yield from bool_vars(m.cond)
        yield from mechanism_vars(m.then)
        yield from mechanism_vars(m.else_)
    elif isinstance(m, While):
        yield from bool_vars(m.cond)
        yield from mechanism_vars(m.body)
    elif isinstance(m, Choice):
        yield from m.vars


def uses_outcome(node) -> bool:
    if isinstance(node, Outcome):
        return True
    if isinstance(node, (App, Rel)):
        return any(uses_outcome(a) for a in node.args)
    if isinstance(node, Tup):
        return any(uses_outcome(a) for a in node.items)
    if isinstance(node, Not):
        return uses_outcome(node.arg)
    if isinstance(node, And):
        return uses_outcome(node.left) or uses_outcome(node.right)
    return False


def choices(m: Mechanism) -> Iterator[Choice]:
    if isinstance(m, Choice):
        yield m
    elif isinstance(m, Seq):
        yield from choices(m.first)
        yield from choices(m.second)
    elif isinstance(m, If):
        yield from choices(m.then)
        yield from choices(m.else_)
    elif isinstance(m, While):
        yield from choices(m.body)


PRG, PI, GENERAL = "PRG", "PI", "GENERAL"


def classify(m: Mechanism) -> str:
    """PRG if choice-free, PI if every choice has one agent, else GENERAL."""
    sizes = [len(c.agents) for c in choices(m)]
    if not sizes:
        return PRG
    if all(n == 1 for n in sizes):
        return PI
    return GENERAL
