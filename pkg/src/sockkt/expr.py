"""Expression trees over named variables: parsing, evaluation, symbolic
differentiation and printing.

The grammar (EBNF):

    expr   := term (('+'|'-') term)*
    term   := factor (('*'|'/') factor)*
    factor := ('-')? power
    power  := atom ('^' number)?
    atom   := number | ident | func '(' expr (',' number)? ')' | '(' expr ')'
    func   := 'sin' | 'cos' | 'exp' | 'log' | 'sqrt' | 'abs' | 'spow'

Exponents are constant literals, never subexpressions.  spow(t, p) is the
signed power sign(t)*|t|^p with p > 1, which is C1 but not C2 at 0; it exists
to build test problems that are exactly once continuously differentiable.
"""

from __future__ import annotations

import math
import re
from functools import singledispatch

# |t| window in which evaluating the derivative of abs (a sign node) errors out
ZERO_TOL = 1e-12

_FUNCS = ("sin", "cos", "exp", "log", "sqrt", "abs", "spow")


class ExprError(Exception):
    """Base class; offset is the position of the offending byte in the source."""

    def __init__(self, message: str, offset: int):
        super().__init__(f"{message} (at byte {offset})")
        self.message = message
        self.offset = offset


class ParseError(ExprError):
    pass


class EvalError(ExprError):
    pass


class NondifferentiableError(EvalError):
    pass


class Expr:
    """Immutable expression node.  Offsets point into the source text the node
    was parsed from; derivative trees inherit the offset of their source node."""

    __slots__ = ("offset",)

    def _key(self):
        raise NotImplementedError

    def __eq__(self, other):
        return type(self) is type(other) and self._key() == other._key()

    def __hash__(self):
        return hash((type(self).__name__, self._key()))

    def __repr__(self):
        return f"{type(self).__name__}({to_string(self)!r})"


class Const(Expr):
    __slots__ = ("value",)

    def __init__(self, value: float, offset: int = 0):
        self.value = float(value)
        self.offset = offset

    def _key(self):
        return (self.value,)


class Var(Expr):
    __slots__ = ("index", "name")

    def __init__(self, index: int, name: str, offset: int = 0):
        self.index = index
        self.name = name
        self.offset = offset

    def _key(self):
        return (self.index,)


class Neg(Expr):
    __slots__ = ("arg",)

    def __init__(self, arg: Expr, offset: int = 0):
        self.arg = arg
        self.offset = offset

    def _key(self):
        return (self.arg,)


class Fun1(Expr):
    """Unary function node: sin, cos, exp, log, sqrt, abs, and the internal
    sign (the derivative of abs; not part of the input grammar)."""

    __slots__ = ("fn", "arg")

    def __init__(self, fn: str, arg: Expr, offset: int = 0):
        self.fn = fn
        self.arg = arg
        self.offset = offset

    def _key(self):
        return (self.fn, self.arg)


class _Bin(Expr):
    __slots__ = ("left", "right")

    def __init__(self, left: Expr, right: Expr, offset: int = 0):
        self.left = left
        self.right = right
        self.offset = offset

    def _key(self):
        return (self.left, self.right)


class Add(_Bin):
    pass


class Sub(_Bin):
    pass


class Mul(_Bin):
    pass


class Div(_Bin):
    pass


class Pow(Expr):
    """Power with a constant real exponent."""

    __slots__ = ("base", "exponent")

    def __init__(self, base: Expr, exponent: float, offset: int = 0):
        self.base = base
        self.exponent = float(exponent)
        self.offset = offset

    def _key(self):
        return (self.base, self.exponent)


class Spow(Expr):
    """Signed power sign(t)*|t|^p with constant p > 1."""

    __slots__ = ("base", "exponent")

    def __init__(self, base: Expr, exponent: float, offset: int = 0):
        if exponent <= 1:
            raise ValueError("spow exponent must be > 1")
        self.base = base
        self.exponent = float(exponent)
        self.offset = offset

    def _key(self):
        return (self.base, self.exponent)


# ---------------------------------------------------------------------------
# evaluation


def _finite(v: float, node: Expr) -> float:
    if not math.isfinite(v):
        raise EvalError("overflow (non-finite intermediate value)", node.offset)
    return v


@singledispatch
def evaluate(e: Expr, x) -> float:
    raise TypeError(f"cannot evaluate node type {type(e).__name__}")


@evaluate.register
def _(e: Const, x) -> float:
    return e.value


@evaluate.register
def _(e: Var, x) -> float:
    try:
        return float(x[e.index])
    except IndexError:
        raise EvalError(f"point has no component for variable {e.name}", e.offset) from None


@evaluate.register
def _(e: Neg, x) -> float:
    return -evaluate(e.arg, x)


@evaluate.register
def _(e: Fun1, x) -> float:
    v = evaluate(e.arg, x)
    fn = e.fn
    if fn == "sin":
        return math.sin(v)
    if fn == "cos":
        return math.cos(v)
    if fn == "exp":
        try:
            return math.exp(v)
        except OverflowError:
            raise EvalError("overflow in exp", e.offset) from None
    if fn == "log":
        if v <= 0.0:
            raise EvalError("log of a non-positive value", e.offset)
        return math.log(v)
    if fn == "sqrt":
        if v < 0.0:
            raise EvalError("sqrt of a negative value", e.offset)
        return math.sqrt(v)
    if fn == "abs":
        return abs(v)
    if fn == "sign":
        if abs(v) <= ZERO_TOL:
            raise NondifferentiableError(
                "sign of a value within 1e-12 of zero (abs is not differentiable there)",
                e.offset,
            )
        return 1.0 if v > 0.0 else -1.0
    raise EvalError(f"unknown function {fn}", e.offset)


@evaluate.register
def _(e: Add, x) -> float:
    return _finite(evaluate(e.left, x) + evaluate(e.right, x), e)


@evaluate.register
def _(e: Sub, x) -> float:
    return _finite(evaluate(e.left, x) - evaluate(e.right, x), e)


@evaluate.register
def _(e: Mul, x) -> float:
    return _finite(evaluate(e.left, x) * evaluate(e.right, x), e)


@evaluate.register
def _(e: Div, x) -> float:
    den = evaluate(e.right, x)
    if den == 0.0:
        raise EvalError("division by zero", e.offset)
    return _finite(evaluate(e.left, x) / den, e)


@evaluate.register
def _(e: Pow, x) -> float:
    b = evaluate(e.base, x)
    p = e.exponent
    if b == 0.0 and p < 0.0:
        raise EvalError("zero base with negative exponent", e.offset)
    try:
        if p == int(p):
            v = b ** int(p)
        else:
            if b < 0.0:
                raise EvalError("negative base with fractional exponent", e.offset)
            v = math.pow(b, p)
    except OverflowError:
        raise EvalError("overflow in pow", e.offset) from None
    return _finite(v, e)


@evaluate.register
def _(e: Spow, x) -> float:
    t = evaluate(e.base, x)
    if t == 0.0:
        return 0.0
    try:
        v = math.pow(abs(t), e.exponent)
    except OverflowError:
        raise EvalError("overflow in spow", e.offset) from None
    return _finite(math.copysign(v, t), e)


# ---------------------------------------------------------------------------
# constant folding: collapse a node whose children are all constants, but only
# when evaluating it succeeds.  No other simplification is performed.


def _fold(e: Expr) -> Expr:
    kids = _children(e)
    if kids and all(isinstance(k, Const) for k in kids):
        try:
            return Const(evaluate(e, ()), e.offset)
        except EvalError:
            return e
    return e


def _children(e: Expr):
    if isinstance(e, (Const, Var)):
        return ()
    if isinstance(e, Neg):
        return (e.arg,)
    if isinstance(e, Fun1):
        return (e.arg,)
    if isinstance(e, (Add, Sub, Mul, Div)):
        return (e.left, e.right)
    if isinstance(e, (Pow, Spow)):
        return (e.base,)
    raise TypeError(type(e).__name__)


# ---------------------------------------------------------------------------
# differentiation


@singledispatch
def differentiate(e: Expr, var: int) -> Expr:
    """Symbolic partial derivative of e with respect to variable index var.

    d/dt spow(t,p) = p*|t|^(p-1); d/dt abs(t) = sign(t), whose evaluation
    raises within |t| <= 1e-12 of zero rather than hiding the kink.
    """
    raise TypeError(f"cannot differentiate node type {type(e).__name__}")


@differentiate.register
def _(e: Const, var: int) -> Expr:
    return Const(0.0, e.offset)


@differentiate.register
def _(e: Var, var: int) -> Expr:
    return Const(1.0 if e.index == var else 0.0, e.offset)


@differentiate.register
def _(e: Neg, var: int) -> Expr:
    return _fold(Neg(differentiate(e.arg, var), e.offset))


@differentiate.register
def _(e: Fun1, var: int) -> Expr:
    u = e.arg
    du = differentiate(u, var)
    o = e.offset
    if e.fn == "sin":
        outer = Fun1("cos", u, o)
    elif e.fn == "cos":
        outer = _fold(Neg(Fun1("sin", u, o), o))
    elif e.fn == "exp":
        outer = Fun1("exp", u, o)
    elif e.fn == "log":
        return _fold(Div(du, u, o))
    elif e.fn == "sqrt":
        return _fold(Div(du, _fold(Mul(Const(2.0, o), Fun1("sqrt", u, o), o)), o))
    elif e.fn == "abs":
        outer = Fun1("sign", u, o)
    elif e.fn == "sign":
        # zero almost everywhere; the kink itself errors at evaluation time
        return Const(0.0, o)
    else:
        raise TypeError(f"cannot differentiate function {e.fn}")
    return _fold(Mul(outer, du, o))


@differentiate.register
def _(e: Add, var: int) -> Expr:
    return _fold(Add(differentiate(e.left, var), differentiate(e.right, var), e.offset))


@differentiate.register
def _(e: Sub, var: int) -> Expr:
    return _fold(Sub(differentiate(e.left, var), differentiate(e.right, var), e.offset))


@differentiate.register
def _(e: Mul, var: int) -> Expr:
    o = e.offset
    return _fold(
        Add(
            _fold(Mul(differentiate(e.left, var), e.right, o)),
            _fold(Mul(e.left, differentiate(e.right, var), o)),
            o,
        )
    )


@differentiate.register
def _(e: Div, var: int) -> Expr:
    o = e.offset
    num = _fold(
        Sub(
            _fold(Mul(differentiate(e.left, var), e.right, o)),
            _fold(Mul(e.left, differentiate(e.right, var), o)),
            o,
        )
    )
    return _fold(Div(num, _fold(Pow(e.right, 2.0, o)), o))


@differentiate.register
def _(e: Pow, var: int) -> Expr:
    o = e.offset
    inner = _fold(
        Mul(Const(e.exponent, o), _fold(Pow(e.base, e.exponent - 1.0, o)), o)
    )
    return _fold(Mul(inner, differentiate(e.base, var), o))


@differentiate.register
def _(e: Spow, var: int) -> Expr:
    # p*|u|^(p-1)*u'; p > 1 keeps this continuous through u = 0
    o = e.offset
    inner = _fold(
        Mul(Const(e.exponent, o), _fold(Pow(Fun1("abs", e.base, o), e.exponent - 1.0, o)), o)
    )
    return _fold(Mul(inner, differentiate(e.base, var), o))


def gradient(e: Expr, dimension: int) -> list[Expr]:
    """All partial derivatives of e, one per variable."""
    return [differentiate(e, k) for k in range(dimension)]


# ---------------------------------------------------------------------------
# printing

_P_ADD, _P_MUL, _P_NEG, _P_POW, _P_ATOM = 1, 2, 3, 4, 5


def _prec(e: Expr) -> int:
    if isinstance(e, (Add, Sub)):
        return _P_ADD
    if isinstance(e, (Mul, Div)):
        return _P_MUL
    if isinstance(e, Neg):
        return _P_NEG
    if isinstance(e, Const):
        return _P_NEG if e.value < 0 else _P_ATOM
    if isinstance(e, Pow):
        return _P_POW
    return _P_ATOM  # Var, Fun1, Spow


def to_string(e: Expr) -> str:
    """Render with the fewest parentheses that reparse to the identical tree.

    The internal sign node prints as sign(...) although the grammar cannot
    read it back; everything parseable round-trips exactly.
    """
    if isinstance(e, Const):
        return repr(e.value)
    if isinstance(e, Var):
        return e.name
    if isinstance(e, Neg):
        inner = to_string(e.arg)
        if _prec(e.arg) < _P_POW:
            inner = f"({inner})"
        return f"-{inner}"
    if isinstance(e, Fun1):
        return f"{e.fn}({to_string(e.arg)})"
    if isinstance(e, Spow):
        return f"spow({to_string(e.base)},{e.exponent!r})"
    if isinstance(e, Pow):
        base = to_string(e.base)
        if _prec(e.base) < _P_ATOM:
            base = f"({base})"
        return f"{base}^{e.exponent!r}"
    if isinstance(e, (Add, Sub, Mul, Div)):
        op = {Add: "+", Sub: "-", Mul: "*", Div: "/"}[type(e)]
        mine = _prec(e)
        left = to_string(e.left)
        if _prec(e.left) < mine:
            left = f"({left})"
        right = to_string(e.right)
        # left-associative grammar: same-precedence right children need parens
        if _prec(e.right) <= mine:
            right = f"({right})"
        return f"{left}{op}{right}"
    raise TypeError(type(e).__name__)


# ---------------------------------------------------------------------------
# parsing

_NUM_RE = r"(?:\d+(?:\.\d*)?|\.\d+)(?:[eE][+-]?\d+)?"
_TOKEN_RE = re.compile(
    rf"(?P<num>{_NUM_RE})|(?P<ident>[A-Za-z_][A-Za-z_0-9]*)|(?P<op>[-+*/^(),])"
)
_WS_RE = re.compile(r"\s*")


class _Token:
    __slots__ = ("kind", "text", "offset")

    def __init__(self, kind, text, offset):
        self.kind = kind
        self.text = text
        self.offset = offset


def _tokenize(text: str) -> list[_Token]:
    tokens = []
    pos = 0
    while pos < len(text):
        pos = _WS_RE.match(text, pos).end()
        if pos >= len(text):
            break
        m = _TOKEN_RE.match(text, pos)
        if m is None:
            raise ParseError(f"unexpected character {text[pos]!r}", pos)
        kind = m.lastgroup
        tokens.append(_Token(kind, m.group(), pos))
        pos = m.end()
    tokens.append(_Token("eof", "", len(text)))
    return tokens


class _Parser:
    def __init__(self, text: str, variables):
        self.text = text
        self.tokens = _tokenize(text)
        self.pos = 0
        self.vars = {name: i for i, name in enumerate(variables)}

    def peek(self) -> _Token:
        return self.tokens[self.pos]

    def advance(self) -> _Token:
        tok = self.tokens[self.pos]
        self.pos += 1
        return tok

    def expect_op(self, op: str) -> _Token:
        tok = self.peek()
        if tok.kind != "op" or tok.text != op:
            raise ParseError(f"expected {op!r}", tok.offset)
        return self.advance()

    def at_op(self, *ops) -> bool:
        tok = self.peek()
        return tok.kind == "op" and tok.text in ops

    def parse(self) -> Expr:
        e = self.expr()
        tok = self.peek()
        if tok.kind != "eof":
            raise ParseError(f"unexpected trailing input {tok.text!r}", tok.offset)
        return e

    def expr(self) -> Expr:
        e = self.term()
        while self.at_op("+", "-"):
            tok = self.advance()
            rhs = self.term()
            cls = Add if tok.text == "+" else Sub
            e = _fold(cls(e, rhs, tok.offset))
        return e

    def term(self) -> Expr:
        e = self.factor()
        while self.at_op("*", "/"):
            tok = self.advance()
            rhs = self.factor()
            cls = Mul if tok.text == "*" else Div
            e = _fold(cls(e, rhs, tok.offset))
        return e

    def factor(self) -> Expr:
        if self.at_op("-"):
            tok = self.advance()
            return _fold(Neg(self.power(), tok.offset))
        return self.power()

    def power(self) -> Expr:
        base = self.atom()
        if self.at_op("^"):
            caret = self.advance()
            p, _ = self.exponent()
            return _fold(Pow(base, p, caret.offset))
        return base

    def exponent(self) -> tuple[float, int]:
        """A constant exponent: a number, optionally negated, or a
        parenthesized expression that folds to a constant."""
        neg = False
        tok = self.peek()
        if tok.kind == "op" and tok.text == "-":
            neg = True
            self.advance()
            tok = self.peek()
        if tok.kind == "num":
            self.advance()
            v = float(tok.text)
            return (-v if neg else v), tok.offset
        if tok.kind == "op" and tok.text == "(":
            start = tok.offset
            self.advance()
            inner = self.expr()
            self.expect_op(")")
            if isinstance(inner, Const):
                v = inner.value
                return (-v if neg else v), start
            raise ParseError("exponent must be a constant", start)
        raise ParseError("expected a numeric exponent", tok.offset)

    def atom(self) -> Expr:
        tok = self.peek()
        if tok.kind == "num":
            self.advance()
            return Const(float(tok.text), tok.offset)
        if tok.kind == "ident":
            self.advance()
            if tok.text in _FUNCS:
                return self.call(tok)
            if tok.text in self.vars:
                return Var(self.vars[tok.text], tok.text, tok.offset)
            raise ParseError(f"unknown identifier {tok.text!r}", tok.offset)
        if tok.kind == "op" and tok.text == "(":
            self.advance()
            e = self.expr()
            self.expect_op(")")
            return e
        raise ParseError(f"unexpected token {tok.text!r}", tok.offset)

    def call(self, name_tok: _Token) -> Expr:
        fn = name_tok.text
        tok = self.peek()
        if not (tok.kind == "op" and tok.text == "("):
            raise ParseError(f"expected '(' after function name {fn!r}", tok.offset)
        self.advance()
        arg = self.expr()
        second = None
        if self.at_op(","):
            comma = self.advance()
            if fn != "spow":
                raise ParseError(f"{fn} takes exactly one argument", comma.offset)
            second = self.exponent()
        close = self.expect_op(")")
        if fn == "spow":
            if second is None:
                raise ParseError("spow requires a constant exponent argument", close.offset)
            p, p_off = second
            if p <= 1.0:
                raise ParseError(f"spow exponent must be > 1 (got {p!r})", p_off)
            return Spow(arg, p, name_tok.offset)
        return _fold(Fun1(fn, arg, name_tok.offset))


def parse(text: str, variables) -> Expr:
    """Parse an expression over the given ordered variable names.

    Raises ParseError with the byte offset of the problem for syntax errors,
    unknown identifiers, non-constant exponents, and spow exponents <= 1.
    """
    return _Parser(text, variables).parse()
