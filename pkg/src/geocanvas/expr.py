"""Scalar expression language: parsing, printing, evaluation and numeric calculus.

Grammar (see ``docs/expr-grammar.md``)::

    relation := expr [("=" | "<" | ">" | "<=" | ">=") expr]
    expr     := term (("+" | "-") term)*
    term     := unary (("*" | "/") unary)*
    unary    := "-" unary | power
    power    := atom ["^" unary]
    atom     := number | ident | ident "(" expr ("," expr)* ")" | "(" expr ")"

Multiplication is always explicit; ``2x`` is a parse error.
"""

from __future__ import annotations

import math
import re
from dataclasses import dataclass
from typing import Any, Callable, Iterable, Mapping, Sequence, Union

from .numeric import DEFAULT_POLICY, UNDEFINED, TolerancePolicy, is_undefined, tol_pass

# --------------------------------------------------------------------------- AST


@dataclass(frozen=True)
class Num:
    value: float


@dataclass(frozen=True)
class Var:
    name: str


@dataclass(frozen=True)
class Const:
    name: str  # "pi" or "e"


@dataclass(frozen=True)
class Neg:
    operand: "Expr"


@dataclass(frozen=True)
class BinOp:
    op: str  # one of + - * / ^
    left: "Expr"
    right: "Expr"


@dataclass(frozen=True)
class Call:
    name: str
    args: tuple


Expr = Union[Num, Var, Const, Neg, BinOp, Call]

CONSTANTS = {"pi": math.pi, "e": math.e}


def _log(*args: float) -> float:
    if len(args) == 1:
        return math.log(args[0])
    base, x = args
    return math.log(x) / math.log(base)


# Unary builtins plus log's optional base form.  ``log`` is the natural
# logarithm; ``log(b, x)`` takes an explicit base.
BUILTINS: dict[str, tuple[Callable[..., float], tuple[int, ...]]] = {
    "sin": (math.sin, (1,)),
    "cos": (math.cos, (1,)),
    "tan": (math.tan, (1,)),
    "asin": (math.asin, (1,)),
    "acos": (math.acos, (1,)),
    "atan": (math.atan, (1,)),
    "sqrt": (math.sqrt, (1,)),
    "abs": (abs, (1,)),
    "ln": (math.log, (1,)),
    "log": (_log, (1, 2)),
    "exp": (math.exp, (1,)),
}

RESERVED_NAMES = frozenset(BUILTINS) | frozenset(CONSTANTS)


# ------------------------------------------------------------------------ errors


class ParseError(ValueError):
    def __init__(self, message: str, offset: int, expected: Iterable[str] = ()):
        self.offset = offset
        self.expected = tuple(sorted(set(expected)))
        detail = f" (expected one of: {', '.join(self.expected)})" if self.expected else ""
        super().__init__(f"{message} at offset {offset}{detail}")
        self.message = message


class UnboundVariable(KeyError):
    def __init__(self, name: str):
        super().__init__(name)
        self.name = name

    def __str__(self) -> str:
        return f"unbound variable {self.name!r}"


class EvalUndefinedOnInterval(ValueError):
    pass


# --------------------------------------------------------------------- tokenizer

_TOKEN_RE = re.compile(
    r"""
    (?P<ws>\s+)
  | (?P<num>(?:\d+\.?\d*|\.\d+)(?:[eE][+-]?\d+)?)
  | (?P<ident>[A-Za-z_][A-Za-z0-9_']*)
  | (?P<rel><=|>=|≤|≥|==|=|<|>)
  | (?P<op>[-+*/^(),])
    """,
    re.VERBOSE,
)

_REL_CANON = {"≤": "<=", "≥": ">=", "==": "="}


@dataclass(frozen=True)
class _Tok:
    kind: str  # num, ident, op, rel, end
    text: str
    offset: int


def _byte_offset(text: str, index: int) -> int:
    return len(text[:index].encode("utf-8"))


def _tokenize(text: str) -> list[_Tok]:
    toks: list[_Tok] = []
    pos = 0
    while pos < len(text):
        m = _TOKEN_RE.match(text, pos)
        if m is None:
            raise ParseError(f"unexpected character {text[pos]!r}", _byte_offset(text, pos))
        kind = m.lastgroup
        if kind != "ws":
            toks.append(_Tok(kind, m.group(), _byte_offset(text, pos)))
        pos = m.end()
    toks.append(_Tok("end", "", _byte_offset(text, len(text))))
    return toks


# ------------------------------------------------------------------------ parser

_ATOM_START = ("number", "identifier", "(", "-")


class _Parser:
    def __init__(self, text: str):
        self.toks = _tokenize(text)
        self.i = 0

    @property
    def tok(self) -> _Tok:
        return self.toks[self.i]

    def _advance(self) -> _Tok:
        tok = self.toks[self.i]
        self.i += 1
        return tok

    def _expect(self, text: str, expected: Iterable[str]) -> None:
        if self.tok.kind == "op" and self.tok.text == text:
            self._advance()
            return
        raise ParseError(f"unexpected {self._describe(self.tok)}", self.tok.offset, expected)

    @staticmethod
    def _describe(tok: _Tok) -> str:
        return "end of input" if tok.kind == "end" else f"token {tok.text!r}"

    def expr(self) -> Expr:
        node = self.term()
        while self.tok.kind == "op" and self.tok.text in "+-":
            op = self._advance().text
            node = BinOp(op, node, self.term())
        return node

    def term(self) -> Expr:
        node = self.unary()
        while self.tok.kind == "op" and self.tok.text in "*/":
            op = self._advance().text
            node = BinOp(op, node, self.unary())
        return node

    def unary(self) -> Expr:
        if self.tok.kind == "op" and self.tok.text == "-":
            self._advance()
            return Neg(self.unary())
        return self.power()

    def power(self) -> Expr:
        base = self.atom()
        if self.tok.kind == "op" and self.tok.text == "^":
            self._advance()
            return BinOp("^", base, self.unary())
        return base

    def atom(self) -> Expr:
        tok = self.tok
        if tok.kind == "num":
            self._advance()
            return Num(float(tok.text))
        if tok.kind == "ident":
            self._advance()
            if self.tok.kind == "op" and self.tok.text == "(":
                self._advance()
                args = [self.expr()]
                while self.tok.kind == "op" and self.tok.text == ",":
                    self._advance()
                    args.append(self.expr())
                self._expect(")", (",", ")", "+", "-", "*", "/", "^"))
                if tok.text in BUILTINS and len(args) not in BUILTINS[tok.text][1]:
                    raise ParseError(f"wrong number of arguments to {tok.text}", tok.offset)
                return Call(tok.text, tuple(args))
            if tok.text in CONSTANTS:
                return Const(tok.text)
            return Var(tok.text)
        if tok.kind == "op" and tok.text == "(":
            self._advance()
            inner = self.expr()
            self._expect(")", (")", "+", "-", "*", "/", "^"))
            return inner
        raise ParseError(f"unexpected {self._describe(tok)}", tok.offset, _ATOM_START)

    def finish(self) -> None:
        if self.tok.kind != "end":
            raise ParseError(
                f"unexpected {self._describe(self.tok)}",
                self.tok.offset,
                ("+", "-", "*", "/", "^", "end of input"),
            )


def parse_expr(text: str) -> Expr:
    if not text or not text.strip():
        raise ParseError("empty expression", 0, _ATOM_START)
    p = _Parser(text)
    node = p.expr()
    p.finish()
    return node


@dataclass(frozen=True)
class Relation:
    lhs: Expr
    op: str  # "=", "<", ">", "<=", ">="
    rhs: Expr


def parse_relation(text: str, *, default_zero: bool = True) -> Relation:
    """Parse ``lhs op rhs``.  Without an operator the text reads as ``expr = 0``."""
    if not text or not text.strip():
        raise ParseError("empty expression", 0, _ATOM_START)
    p = _Parser(text)
    lhs = p.expr()
    if p.tok.kind == "rel":
        op = _REL_CANON.get(p.tok.text, p.tok.text)
        p._advance()
        rhs = p.expr()
        p.finish()
        return Relation(lhs, op, rhs)
    p.finish()
    if not default_zero:
        raise ParseError("missing relation operator", p.tok.offset, ("=", "<", ">", "<=", ">="))
    return Relation(lhs, "=", Num(0.0))


# ----------------------------------------------------------------------- printer

_PREC_ADD, _PREC_MUL, _PREC_NEG, _PREC_POW, _PREC_ATOM = 1, 2, 3, 4, 5


def _prec(e: Expr) -> int:
    if isinstance(e, BinOp):
        return {"+": _PREC_ADD, "-": _PREC_ADD, "*": _PREC_MUL, "/": _PREC_MUL, "^": _PREC_POW}[e.op]
    if isinstance(e, Neg):
        return _PREC_NEG
    return _PREC_ATOM


def _num_text(v: float) -> str:
    text = repr(float(v))
    return text[:-2] if text.endswith(".0") else text


def to_text(e: Expr) -> str:
    """Print with the minimum parentheses needed to re-parse to the same tree."""
    if isinstance(e, Num):
        return _num_text(e.value)
    if isinstance(e, (Var, Const)):
        return e.name
    if isinstance(e, Call):
        return f"{e.name}({', '.join(to_text(a) for a in e.args)})"
    if isinstance(e, Neg):
        inner = to_text(e.operand)
        return f"-({inner})" if _prec(e.operand) < _PREC_NEG else f"-{inner}"
    if isinstance(e, BinOp):
        lt, rt = to_text(e.left), to_text(e.right)
        lp, rp = _prec(e.left), _prec(e.right)
        if e.op == "^":
            if lp <= _PREC_POW:
                lt = f"({lt})"
            if rp < _PREC_NEG:
                rt = f"({rt})"
            return f"{lt}^{rt}"
        level = _prec(e)
        if lp < level:
            lt = f"({lt})"
        if rp <= level:
            rt = f"({rt})"
        return f"{lt} {e.op} {rt}"
    raise TypeError(f"not an expression node: {e!r}")


def relation_text(rel: Relation) -> str:
    return f"{to_text(rel.lhs)} {rel.op} {to_text(rel.rhs)}"


def rename_names(e: Expr, mapping: Mapping[str, str]) -> Expr:
    """Copy of ``e`` with variables and user-function calls renamed."""
    if isinstance(e, Var):
        return Var(mapping.get(e.name, e.name))
    if isinstance(e, Neg):
        return Neg(rename_names(e.operand, mapping))
    if isinstance(e, BinOp):
        return BinOp(e.op, rename_names(e.left, mapping), rename_names(e.right, mapping))
    if isinstance(e, Call):
        name = e.name if e.name in BUILTINS else mapping.get(e.name, e.name)
        return Call(name, tuple(rename_names(a, mapping) for a in e.args))
    return e


def free_vars(e: Expr) -> set[str]:
    if isinstance(e, Var):
        return {e.name}
    if isinstance(e, Neg):
        return free_vars(e.operand)
    if isinstance(e, BinOp):
        return free_vars(e.left) | free_vars(e.right)
    if isinstance(e, Call):
        out: set[str] = set()
        for a in e.args:
            out |= free_vars(a)
        return out
    return set()


def called_functions(e: Expr) -> set[str]:
    """Names applied as functions that are not builtins (user/canvas functions)."""
    if isinstance(e, Neg):
        return called_functions(e.operand)
    if isinstance(e, BinOp):
        return called_functions(e.left) | called_functions(e.right)
    if isinstance(e, Call):
        out = set() if e.name in BUILTINS else {e.name}
        for a in e.args:
            out |= called_functions(a)
        return out
    return set()


def referenced_names(e: Expr) -> set[str]:
    return free_vars(e) | called_functions(e)


# -------------------------------------------------------------------- evaluation


class _UndefinedSignal(Exception):
    pass


def _finite(v: Any) -> Any:
    if isinstance(v, float) and not math.isfinite(v):
        raise _UndefinedSignal
    return v


def _num(v: Any) -> float:
    if v is UNDEFINED:
        raise _UndefinedSignal
    if isinstance(v, bool) or not isinstance(v, (int, float)):
        raise _UndefinedSignal
    return v


def _binop(op: str, a: float, b: float) -> float:
    if op == "+":
        return _finite(a + b)
    if op == "-":
        return _finite(a - b)
    if op == "*":
        return _finite(a * b)
    if op == "/":
        return _finite(a / b)
    return _finite(math.pow(a, b))


Evaluator = Callable[[Mapping[str, Any]], Any]


def compile_expr(e: Expr, functions: Mapping[str, Callable[..., Any]] | None = None) -> Evaluator:
    """Compile to a closure ``env -> value``.

    ``env`` maps variable names to numbers (or to arbitrary objects consumed by
    ``functions``) and function names to callables.  The closure returns
    ``UNDEFINED`` on any domain violation and raises :class:`UnboundVariable`
    for names missing from ``env``.
    """
    functions = dict(functions or {})
    body = _compile(e, functions)

    def run(env: Mapping[str, Any]) -> Any:
        try:
            out = body(env)
        except (_UndefinedSignal, ZeroDivisionError, ValueError, OverflowError, TypeError):
            return UNDEFINED
        if isinstance(out, bool):
            return out
        if isinstance(out, (int, float)):
            out = float(out)
            return out if math.isfinite(out) else UNDEFINED
        return out

    return run


def _compile(e: Expr, functions: dict[str, Callable[..., Any]]) -> Callable[[Mapping[str, Any]], Any]:
    if isinstance(e, Num):
        v = e.value
        return lambda env: v
    if isinstance(e, Const):
        v = CONSTANTS[e.name]
        return lambda env: v
    if isinstance(e, Var):
        name = e.name

        def var(env: Mapping[str, Any]) -> Any:
            try:
                v = env[name]
            except KeyError:
                raise UnboundVariable(name) from None
            if v is UNDEFINED:
                raise _UndefinedSignal
            return v

        return var
    if isinstance(e, Neg):
        inner = _compile(e.operand, functions)
        return lambda env: -_num(inner(env))
    if isinstance(e, BinOp):
        left, right, op = _compile(e.left, functions), _compile(e.right, functions), e.op
        return lambda env: _binop(op, _num(left(env)), _num(right(env)))
    if isinstance(e, Call):
        args = [_compile(a, functions) for a in e.args]
        name = e.name
        if name in BUILTINS:
            fn = BUILTINS[name][0]
            return lambda env: _finite(fn(*[_num(a(env)) for a in args]))
        if name in functions:
            fn = functions[name]
            return lambda env: _finite(_defined(fn(*[a(env) for a in args])))

        def user_call(env: Mapping[str, Any]) -> Any:
            try:
                fn = env[name]
            except KeyError:
                raise UnboundVariable(name) from None
            if not callable(fn):
                raise _UndefinedSignal
            return _finite(_defined(fn(*[_num(a(env)) for a in args])))

        return user_call
    raise TypeError(f"not an expression node: {e!r}")


def _defined(v: Any) -> Any:
    if v is UNDEFINED or v is None:
        raise _UndefinedSignal
    return v


def eval_expr(
    e: Expr,
    bindings: Mapping[str, Any] | None = None,
    functions: Mapping[str, Callable[..., Any]] | None = None,
) -> Any:
    return compile_expr(e, functions)(bindings or {})


def as_function(e: Expr, var: str, bindings: Mapping[str, Any] | None = None) -> Callable[[float], Any]:
    """One-variable view of ``e``: ``f(x)`` returns a float or ``UNDEFINED``."""
    run = compile_expr(e)
    env = dict(bindings or {})

    def f(x: float) -> Any:
        env[var] = x
        return run(env)

    # Surface unbound names eagerly rather than on the first sample.
    missing = referenced_names(e) - set(env) - {var}
    if missing:
        raise UnboundVariable(sorted(missing)[0])
    return f


def holds(rel: Relation, bindings: Mapping[str, Any], abs_tol: float = 4e-7) -> Any:
    """Truth of an inequality/equation; boundary within ``abs_tol`` counts as satisfied."""
    lhs = eval_expr(rel.lhs, bindings)
    rhs = eval_expr(rel.rhs, bindings)
    if is_undefined(lhs) or is_undefined(rhs):
        return UNDEFINED
    d = lhs - rhs
    if abs(d) <= abs_tol:
        return True
    return {"=": False, "<": d < 0, "<=": d < 0, ">": d > 0, ">=": d > 0}[rel.op]


# --------------------------------------------------------------- root finding

Fn = Callable[[float], Any]


def _residual_ok(diff: float, rhs_val: float) -> bool:
    return abs(diff) <= 1e-9 * max(1.0, abs(rhs_val))


def find_roots(
    lhs: Fn,
    rhs: Fn,
    lo: float,
    hi: float,
    grid_n: int,
    policy: TolerancePolicy = DEFAULT_POLICY,
) -> list[float]:
    """Roots of ``lhs(x) = rhs(x)`` on ``[lo, hi]`` by grid bracketing and bisection."""
    if not lo < hi:
        raise ValueError("interval must satisfy lo < hi")
    if grid_n < 2:
        raise ValueError("grid_n must be at least 2")

    def g(x: float) -> tuple[Any, Any]:
        a, b = lhs(x), rhs(x)
        if is_undefined(a) or is_undefined(b):
            return UNDEFINED, UNDEFINED
        return a - b, b

    xs = [lo + (hi - lo) * i / (grid_n - 1) for i in range(grid_n)]
    xs[-1] = hi
    vals = [g(x) for x in xs]
    undefined = sum(1 for v, _ in vals if is_undefined(v))
    if undefined * 2 > grid_n:
        raise EvalUndefinedOnInterval(f"expression undefined on {undefined}/{grid_n} grid points")

    width_stop = 1e-13 * (hi - lo)
    candidates: list[float] = []
    for i, (x, (gv, _)) in enumerate(zip(xs, vals)):
        if is_undefined(gv):
            continue
        if gv == 0:
            candidates.append(x)
            continue
        if i + 1 < len(xs):
            gn = vals[i + 1][0]
            if not is_undefined(gn) and gn != 0 and (gv < 0) != (gn < 0):
                r = _bisect(g, x, xs[i + 1], gv, width_stop)
                if r is not None:
                    candidates.append(r)
        if 0 < i < len(xs) - 1:
            gp, gn = vals[i - 1][0], vals[i + 1][0]
            if (
                not is_undefined(gp)
                and not is_undefined(gn)
                and abs(gv) < abs(gp)
                and abs(gv) <= abs(gn)
                and (gp > 0) == (gv > 0) == (gn > 0)
                and gp != 0
                and gn != 0
            ):
                r = _touch_root(g, xs[i - 1], xs[i + 1])
                if r is not None:
                    candidates.append(r)

    roots = []
    for r in sorted(candidates):
        d, b = g(r)
        if is_undefined(d) or not _residual_ok(d, b):
            continue
        if roots and tol_pass(roots[-1], r, policy):
            continue
        roots.append(r)
    return roots


def _bisect(g: Callable[[float], tuple[Any, Any]], a: float, b: float, ga: float, width_stop: float) -> float | None:
    for _ in range(2000):
        m = 0.5 * (a + b)
        gm, rm = g(m)
        if is_undefined(gm):
            return None
        scale = max(1.0, abs(rm), abs(gm + rm))
        if abs(gm) <= 1e-12 * scale:
            return m
        if m == a or m == b:
            return m
        if b - a <= width_stop and _residual_ok(gm, rm):
            return m
        if (gm < 0) == (ga < 0):
            a, ga = m, gm
        else:
            b = m
    return 0.5 * (a + b)


_GOLD = (math.sqrt(5.0) - 1.0) / 2.0


def golden_min(f: Callable[[float], float], a: float, b: float, iters: int = 200) -> float:
    """Minimize a unimodal ``f`` on ``[a, b]`` by golden-section search."""
    c = b - _GOLD * (b - a)
    d = a + _GOLD * (b - a)
    fc, fd = f(c), f(d)
    for _ in range(iters):
        if b - a <= 1e-15 * max(1.0, abs(a), abs(b)):
            break
        if fc < fd:
            b, d, fd = d, c, fc
            c = b - _GOLD * (b - a)
            fc = f(c)
        else:
            a, c, fc = c, d, fd
            d = a + _GOLD * (b - a)
            fd = f(d)
    return c if fc < fd else d


def _touch_root(g: Callable[[float], tuple[Any, Any]], a: float, b: float) -> float | None:
    def absg(x: float) -> float:
        v, _ = g(x)
        return math.inf if is_undefined(v) else abs(v)

    x = golden_min(absg, a, b)
    v, rhs = g(x)
    if is_undefined(v) or not _residual_ok(v, rhs):
        return None
    return x


def nsolve(
    e_lhs: Expr,
    e_rhs: Expr,
    var: str,
    interval: Sequence[float],
    grid_n: int = 10001,
    bindings: Mapping[str, Any] | None = None,
    policy: TolerancePolicy = DEFAULT_POLICY,
) -> list[float]:
    lo, hi = float(interval[0]), float(interval[1])
    return find_roots(as_function(e_lhs, var, bindings), as_function(e_rhs, var, bindings), lo, hi, grid_n, policy)


# ------------------------------------------------------------------- quadrature


def integrate(f: Fn, a: float, b: float, tol: float = 1e-9, max_depth: int = 50) -> float:
    """Adaptive Simpson; exactly antisymmetric in the bounds."""
    if a == b:
        return 0.0
    if a > b:
        return -integrate(f, b, a, tol, max_depth)

    def val(x: float) -> float:
        v = f(x)
        if is_undefined(v):
            raise EvalUndefinedOnInterval(f"integrand undefined at x={x!r}")
        return v

    fa, fb = val(a), val(b)
    m = 0.5 * (a + b)
    fm = val(m)
    whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb)
    total = 0.0
    stack = [(a, b, fa, fm, fb, whole, tol, 0)]
    while stack:
        lo, hi, flo, fmid, fhi, s, eps, depth = stack.pop()
        mid = 0.5 * (lo + hi)
        lm, rm = 0.5 * (lo + mid), 0.5 * (mid + hi)
        flm, frm = val(lm), val(rm)
        left = (mid - lo) / 6.0 * (flo + 4.0 * flm + fmid)
        right = (hi - mid) / 6.0 * (fmid + 4.0 * frm + fhi)
        delta = left + right - s
        if depth >= max_depth or abs(delta) <= 15.0 * eps:
            total += left + right + delta / 15.0
        else:
            stack.append((mid, hi, fmid, frm, fhi, right, eps / 2.0, depth + 1))
            stack.append((lo, mid, flo, flm, fmid, left, eps / 2.0, depth + 1))
    if not math.isfinite(total):
        raise EvalUndefinedOnInterval("integral diverges")
    return total


def quadrature(e: Expr, var: str, a: float, b: float, bindings: Mapping[str, Any] | None = None) -> float:
    return integrate(as_function(e, var, bindings), float(a), float(b))


# ------------------------------------------------------------- numeric calculus


def derivative(f: Fn, x: float) -> Any:
    h = 1e-6 * max(1.0, abs(x))
    a, b = f(x + h), f(x - h)
    if is_undefined(a) or is_undefined(b):
        return UNDEFINED
    return (a - b) / (2.0 * h)


def second_derivative(f: Fn, x: float) -> Any:
    h = 1e-4 * max(1.0, abs(x))
    a, m, b = f(x + h), f(x), f(x - h)
    if is_undefined(a) or is_undefined(m) or is_undefined(b):
        return UNDEFINED
    return (a - 2.0 * m + b) / (h * h)


def turning_points(f: Fn, lo: float, hi: float, n: int = 2001, policy: TolerancePolicy = DEFAULT_POLICY) -> list[float]:
    """Abscissae where the numeric first derivative changes sign."""
    d = lambda x: derivative(f, x)  # noqa: E731
    return _strict_sign_changes(d, lo, hi, n, policy)


def inflection_points(f: Fn, lo: float, hi: float, n: int = 2001, policy: TolerancePolicy = DEFAULT_POLICY) -> list[float]:
    """Abscissae where the numeric second derivative changes sign."""
    d2 = lambda x: second_derivative(f, x)  # noqa: E731
    return _strict_sign_changes(d2, lo, hi, n, policy)


def _strict_sign_changes(fn: Fn, lo: float, hi: float, n: int, policy: TolerancePolicy) -> list[float]:
    xs = [lo + (hi - lo) * i / (n - 1) for i in range(n)]
    vals = [fn(x) for x in xs]
    if sum(1 for v in vals if is_undefined(v)) * 2 > n:
        raise EvalUndefinedOnInterval("function undefined on most of the interval")
    out: list[float] = []
    for i in range(n - 1):
        a, b = vals[i], vals[i + 1]
        if is_undefined(a) or is_undefined(b):
            continue
        if a == 0:
            # a zero at a grid point counts when the sign differs on both sides
            prev = vals[i - 1] if i > 0 else UNDEFINED
            if not is_undefined(prev) and not is_undefined(b) and prev * b < 0:
                out.append(xs[i])
            continue
        if b != 0 and (a < 0) != (b < 0):
            x0, x1, fa = xs[i], xs[i + 1], a
            for _ in range(200):
                m = 0.5 * (x0 + x1)
                fm = fn(m)
                if is_undefined(fm) or m in (x0, x1) or fm == 0:
                    break
                if (fm < 0) == (fa < 0):
                    x0, fa = m, fm
                else:
                    x1 = m
            out.append(0.5 * (x0 + x1))
    deduped: list[float] = []
    for r in sorted(out):
        if deduped and tol_pass(deduped[-1], r, policy):
            continue
        deduped.append(r)
    return deduped


def extremum_on(f: Fn, lo: float, hi: float, kind: str = "max", n: int = 2001) -> tuple[float, float]:
    """Global max/min of ``f`` on ``[lo, hi]``: grid scan then golden-section polish."""
    if not lo <= hi:
        raise ValueError("interval must satisfy lo <= hi")
    sign = -1.0 if kind == "max" else 1.0

    def obj(x: float) -> float:
        v = f(x)
        return math.inf if is_undefined(v) else sign * v

    if lo == hi:
        v = f(lo)
        if is_undefined(v):
            raise EvalUndefinedOnInterval("function undefined at the point")
        return lo, v
    xs = [lo + (hi - lo) * i / (n - 1) for i in range(n)]
    vals = [obj(x) for x in xs]
    if sum(1 for v in vals if v == math.inf) * 2 > n:
        raise EvalUndefinedOnInterval("function undefined on most of the interval")
    k = min(range(n), key=lambda i: vals[i])
    best_x, best_v = xs[k], vals[k]
    a, b = xs[max(k - 1, 0)], xs[min(k + 1, n - 1)]
    x = golden_min(obj, a, b)
    if obj(x) < best_v:
        best_x, best_v = x, obj(x)
    return best_x, sign * best_v


def numeric_calculus(e: Expr, kind: str, params: Mapping[str, Any], var: str = "x", bindings: Mapping[str, Any] | None = None) -> Any:
    f = as_function(e, var, bindings)
    if kind == "derivative_at":
        return derivative(f, float(params["x"]))
    lo, hi = float(params["lo"]), float(params["hi"])
    n = int(params.get("n", 2001))
    if kind == "roots":
        return find_roots(f, lambda x: 0.0, lo, hi, n)
    if kind == "turning_points":
        return turning_points(f, lo, hi, n)
    if kind == "inflection_points":
        return inflection_points(f, lo, hi, n)
    if kind == "extremum_on":
        return extremum_on(f, lo, hi, params.get("mode", "max"), n)
    raise ValueError(f"unknown calculus kind {kind!r}")
