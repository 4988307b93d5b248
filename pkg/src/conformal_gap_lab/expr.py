"""Closed-form coordinate expressions.

Grammar (EBNF):

    expr   := term (("+"|"-") term)*
    term   := factor (("*"|"/") factor)*
    factor := atom ("^" int)?
    atom   := number | ident | func "(" expr ")" | "(" expr ")" | "-" atom

Functions: sin cos tan sinh cosh exp sqrt.  Identifiers resolve to the
declared coordinate names (x1..xn by default) or declared parameter names;
anything else is rejected with the offset of the offending token.  Exponents
are integer literals, optionally signed.

ASTs are immutable; evaluation maps an AST onto coordinate jets, so every
partial derivative of a parsed formula is available through the jets module.
The module also provides symbolic building blocks (derivative, simplification,
matrix inverse via cofactors) used to assemble warped metrics and Killing
field candidates, plus the reader for the "conformal-metric v1" text format.
"""

from __future__ import annotations

import re
from dataclasses import dataclass

from . import jets
from .jets import Jet

FUNCTIONS = ("sin", "cos", "tan", "sinh", "cosh", "exp", "sqrt")


class ParseError(ValueError):
    def __init__(self, message: str, position: int):
        super().__init__(f"{message} (offset {position})")
        self.position = position


class EvalError(ValueError):
    """Evaluation failed: missing parameter or singular primitive."""


# --- AST nodes ---------------------------------------------------------------

@dataclass(frozen=True)
class Const:
    value: float


@dataclass(frozen=True)
class Var:
    index: int


@dataclass(frozen=True)
class Param:
    name: str


@dataclass(frozen=True)
class Call:
    fn: str
    arg: "Node"


@dataclass(frozen=True)
class Neg:
    arg: "Node"


@dataclass(frozen=True)
class Bin:
    op: str  # one of + - * /
    left: "Node"
    right: "Node"


@dataclass(frozen=True)
class Pow:
    base: "Node"
    exponent: int


Node = Const | Var | Param | Call | Neg | Bin | Pow

ZERO = Const(0.0)
ONE = Const(1.0)


# --- tokenizer / parser -------------------------------------------------------

_TOKEN_RE = re.compile(
    r"\s*(?:(?P<num>(?:\d+\.\d*|\.\d+|\d+)(?:[eE][-+]?\d+)?)"
    r"|(?P<ident>[A-Za-z_][A-Za-z0-9_]*)"
    r"|(?P<op>[-+*/^()]))"
)


def _tokenize(source: str):
    tokens = []
    pos = 0
    while pos < len(source):
        m = _TOKEN_RE.match(source, pos)
        if m is None or m.end() == pos:
            stripped = source[pos:].lstrip()
            if not stripped:
                break
            raise ParseError(f"unexpected character {stripped[0]!r}", pos)
        if m.lastgroup == "num":
            tokens.append(("num", m.group("num"), m.start("num")))
        elif m.lastgroup == "ident":
            tokens.append(("ident", m.group("ident"), m.start("ident")))
        else:
            tokens.append(("op", m.group("op"), m.start("op")))
        pos = m.end()
    return tokens


class _Parser:
    def __init__(self, tokens, source_len: int, var_index: dict, params):
        self.tokens = tokens
        self.source_len = source_len
        self.var_index = var_index
        self.params = set(params)
        self.k = 0

    def peek(self):
        return self.tokens[self.k] if self.k < len(self.tokens) else None

    def next(self):
        tok = self.peek()
        if tok is None:
            raise ParseError("unexpected end of input", self.source_len)
        self.k += 1
        return tok

    def expect_op(self, op: str):
        tok = self.peek()
        if tok is None or tok[0] != "op" or tok[1] != op:
            pos = tok[2] if tok else self.source_len
            raise ParseError(f"expected {op!r}", pos)
        self.k += 1

    def parse_expr(self) -> Node:
        node = self.parse_term()
        while (tok := self.peek()) and tok[0] == "op" and tok[1] in "+-":
            self.k += 1
            rhs = self.parse_term()
            node = Bin(tok[1], node, rhs)
        return node

    def parse_term(self) -> Node:
        node = self.parse_factor()
        while (tok := self.peek()) and tok[0] == "op" and tok[1] in "*/":
            self.k += 1
            rhs = self.parse_factor()
            node = Bin(tok[1], node, rhs)
        return node

    def parse_factor(self) -> Node:
        node = self.parse_atom()
        tok = self.peek()
        if tok and tok[0] == "op" and tok[1] == "^":
            self.k += 1
            node = Pow(node, self.parse_int_exponent())
        return node

    def parse_int_exponent(self) -> int:
        tok = self.next()
        sign = 1
        if tok[0] == "op" and tok[1] == "-":
            sign = -1
            tok = self.next()
        if tok[0] != "num" or not tok[1].isdigit():
            raise ParseError("exponent must be an integer literal", tok[2])
        return sign * int(tok[1])

    def parse_atom(self) -> Node:
        tok = self.next()
        kind, text, pos = tok
        if kind == "num":
            return Const(float(text))
        if kind == "ident":
            if text in FUNCTIONS:
                self.expect_op("(")
                inner = self.parse_expr()
                self.expect_op(")")
                return Call(text, inner)
            if text in self.var_index:
                return Var(self.var_index[text])
            if text in self.params:
                return Param(text)
            raise ParseError(f"unknown identifier {text!r}", pos)
        if text == "(":
            inner = self.parse_expr()
            self.expect_op(")")
            return inner
        if text == "-":
            return Neg(self.parse_atom())
        raise ParseError(f"unexpected token {text!r}", pos)


def parse(source: str, n: int, params=(), var_names=None) -> Node:
    """Parse a formula over n coordinates (named x1..xn unless overridden)."""
    if not source or not source.strip():
        raise ParseError("empty input", 0)
    if var_names is None:
        var_names = [f"x{i + 1}" for i in range(n)]
    if len(var_names) != n:
        raise ValueError(f"expected {n} variable names, got {len(var_names)}")
    tokens = _tokenize(source)
    parser = _Parser(tokens, len(source), {v: i for i, v in enumerate(var_names)}, params)
    node = parser.parse_expr()
    if parser.peek() is not None:
        raise ParseError(f"trailing input {parser.peek()[1]!r}", parser.peek()[2])
    return node


# --- evaluation ---------------------------------------------------------------

def evaluate(node: Node, coord_jets: list[Jet], params: dict | None = None) -> Jet:
    """Evaluate on coordinate jets; the result carries all partials to their order."""
    params = params or {}
    proto = coord_jets[0]

    def run(nd: Node) -> Jet:
        if isinstance(nd, Const):
            return Jet.constant(nd.value, proto.num_vars, proto.order)
        if isinstance(nd, Var):
            return coord_jets[nd.index]
        if isinstance(nd, Param):
            if nd.name not in params:
                raise EvalError(f"missing parameter {nd.name!r}")
            return Jet.constant(float(params[nd.name]), proto.num_vars, proto.order)
        if isinstance(nd, Neg):
            return -run(nd.arg)
        if isinstance(nd, Call):
            try:
                return jets.FUNCTIONS[nd.fn](run(nd.arg))
            except jets.JetError as err:
                raise EvalError(f"{nd.fn}: {err}") from err
        if isinstance(nd, Pow):
            try:
                return run(nd.base) ** nd.exponent
            except jets.JetError as err:
                raise EvalError(str(err)) from err
        if isinstance(nd, Bin):
            a = run(nd.left)
            b = run(nd.right)
            if nd.op == "+":
                return a + b
            if nd.op == "-":
                return a - b
            if nd.op == "*":
                return a * b
            try:
                return a / b
            except jets.JetError as err:
                raise EvalError(str(err)) from err
        raise TypeError(f"unknown node {nd!r}")

    return run(node)


def evaluate_at(node: Node, point, params: dict | None = None) -> float:
    """Plain value at a point (order-1 jets, value slot only)."""
    return evaluate(node, jets.seed_jets(point, 1), params).value


# --- printing -----------------------------------------------------------------

def _prec(node: Node) -> int:
    if isinstance(node, Bin):
        return 1 if node.op in "+-" else 2
    if isinstance(node, Neg):
        return 1
    if isinstance(node, Const) and node.value < 0:
        return 1
    if isinstance(node, Pow):
        return 3
    return 4


def to_source(node: Node, var_names=None) -> str:
    """Canonical printout; re-parsing it reproduces a parse-produced AST."""

    def name(i: int) -> str:
        return var_names[i] if var_names else f"x{i + 1}"

    def wrap(child: Node, parent_prec: int) -> str:
        s = pr(child)
        return f"({s})" if _prec(child) < parent_prec else s

    def pr(nd: Node) -> str:
        if isinstance(nd, Const):
            return repr(nd.value) if nd.value >= 0 else f"-{-nd.value!r}"
        if isinstance(nd, Var):
            return name(nd.index)
        if isinstance(nd, Param):
            return nd.name
        if isinstance(nd, Neg):
            return "-" + wrap(nd.arg, 4)
        if isinstance(nd, Call):
            return f"{nd.fn}({pr(nd.arg)})"
        if isinstance(nd, Pow):
            return f"{wrap(nd.base, 4)}^{nd.exponent}"
        if isinstance(nd, Bin):
            # right operands of equal precedence get parens so the printed
            # string re-parses to the same tree under left association
            left = wrap(nd.left, _prec(nd))
            right = wrap(nd.right, _prec(nd) + 1)
            return f"{left} {nd.op} {right}"
        raise TypeError(f"unknown node {nd!r}")

    return pr(node)


# --- symbolic algebra ----------------------------------------------------------

def is_zero(node: Node) -> bool:
    return isinstance(node, Const) and node.value == 0.0


def is_one(node: Node) -> bool:
    return isinstance(node, Const) and node.value == 1.0


def simplify(node: Node) -> Node:
    """Constant folding plus the obvious 0/1 identities."""
    if isinstance(node, (Const, Var, Param)):
        return node
    if isinstance(node, Neg):
        a = simplify(node.arg)
        if isinstance(a, Const):
            return Const(-a.value)
        if isinstance(a, Neg):
            return a.arg
        return Neg(a)
    if isinstance(node, Call):
        return Call(node.fn, simplify(node.arg))
    if isinstance(node, Pow):
        base = simplify(node.base)
        if node.exponent == 0:
            return ONE
        if node.exponent == 1:
            return base
        if isinstance(base, Const):
            return Const(base.value ** node.exponent)
        return Pow(base, node.exponent)
    if isinstance(node, Bin):
        a = simplify(node.left)
        b = simplify(node.right)
        if isinstance(a, Const) and isinstance(b, Const):
            if node.op == "+":
                return Const(a.value + b.value)
            if node.op == "-":
                return Const(a.value - b.value)
            if node.op == "*":
                return Const(a.value * b.value)
            if b.value != 0.0:
                return Const(a.value / b.value)
        if node.op == "+":
            if is_zero(a):
                return b
            if is_zero(b):
                return a
        elif node.op == "-":
            if is_zero(b):
                return a
            if is_zero(a):
                return simplify(Neg(b))
        elif node.op == "*":
            if is_zero(a) or is_zero(b):
                return ZERO
            if is_one(a):
                return b
            if is_one(b):
                return a
        elif node.op == "/":
            if is_zero(a):
                return ZERO
            if is_one(b):
                return a
        return Bin(node.op, a, b)
    raise TypeError(f"unknown node {node!r}")


def add(a: Node, b: Node) -> Node:
    return simplify(Bin("+", a, b))


def sub(a: Node, b: Node) -> Node:
    return simplify(Bin("-", a, b))


def mul(a: Node, b: Node) -> Node:
    return simplify(Bin("*", a, b))


def div(a: Node, b: Node) -> Node:
    return simplify(Bin("/", a, b))


def const(v: float) -> Node:
    return Const(float(v))


def var(i: int) -> Node:
    return Var(i)


def derivative(node: Node, index: int) -> Node:
    """Symbolic partial derivative with respect to coordinate `index`."""
    if isinstance(node, (Const, Param)):
        return ZERO
    if isinstance(node, Var):
        return ONE if node.index == index else ZERO
    if isinstance(node, Neg):
        return simplify(Neg(derivative(node.arg, index)))
    if isinstance(node, Pow):
        inner = derivative(node.base, index)
        if is_zero(inner):
            return ZERO
        return mul(
            mul(const(node.exponent), Pow(node.base, node.exponent - 1)), inner
        )
    if isinstance(node, Bin):
        da = derivative(node.left, index)
        db = derivative(node.right, index)
        if node.op == "+":
            return add(da, db)
        if node.op == "-":
            return sub(da, db)
        if node.op == "*":
            return add(mul(da, node.right), mul(node.left, db))
        return div(sub(mul(da, node.right), mul(node.left, db)),
                   Pow(node.right, 2))
    if isinstance(node, Call):
        inner = derivative(node.arg, index)
        if is_zero(inner):
            return ZERO
        u = node.arg
        outer = {
            "sin": Call("cos", u),
            "cos": Neg(Call("sin", u)),
            "tan": add(ONE, Pow(Call("tan", u), 2)),
            "sinh": Call("cosh", u),
            "cosh": Call("sinh", u),
            "exp": Call("exp", u),
            "sqrt": div(const(0.5), Call("sqrt", u)),
        }[node.fn]
        return mul(outer, inner)
    raise TypeError(f"unknown node {node!r}")


def shift_vars(node: Node, offset: int) -> Node:
    """Re-index every variable by +offset (embedding a factor in a product chart)."""
    if isinstance(node, Var):
        return Var(node.index + offset)
    if isinstance(node, (Const, Param)):
        return node
    if isinstance(node, Neg):
        return Neg(shift_vars(node.arg, offset))
    if isinstance(node, Call):
        return Call(node.fn, shift_vars(node.arg, offset))
    if isinstance(node, Pow):
        return Pow(shift_vars(node.base, offset), node.exponent)
    if isinstance(node, Bin):
        return Bin(node.op, shift_vars(node.left, offset), shift_vars(node.right, offset))
    raise TypeError(f"unknown node {node!r}")


def used_vars(node: Node) -> set[int]:
    if isinstance(node, Var):
        return {node.index}
    if isinstance(node, (Const, Param)):
        return set()
    if isinstance(node, Neg):
        return used_vars(node.arg)
    if isinstance(node, Call):
        return used_vars(node.arg)
    if isinstance(node, Pow):
        return used_vars(node.base)
    if isinstance(node, Bin):
        return used_vars(node.left) | used_vars(node.right)
    raise TypeError(f"unknown node {node!r}")


def substitute_params(node: Node, values: dict) -> Node:
    """Replace parameter leaves by constants."""
    if isinstance(node, Param):
        if node.name not in values:
            raise EvalError(f"missing parameter {node.name!r}")
        return Const(float(values[node.name]))
    if isinstance(node, (Const, Var)):
        return node
    if isinstance(node, Neg):
        return Neg(substitute_params(node.arg, values))
    if isinstance(node, Call):
        return Call(node.fn, substitute_params(node.arg, values))
    if isinstance(node, Pow):
        return Pow(substitute_params(node.base, values), node.exponent)
    if isinstance(node, Bin):
        return Bin(node.op,
                   substitute_params(node.left, values),
                   substitute_params(node.right, values))
    raise TypeError(f"unknown node {node!r}")


def matrix_determinant(rows: list[list[Node]]) -> Node:
    """Cofactor expansion with zero pruning; fine for the sparse n<=8 metrics."""
    n = len(rows)
    if n == 1:
        return rows[0][0]
    total: Node = ZERO
    for j, entry in enumerate(rows[0]):
        if is_zero(simplify(entry)):
            continue
        minor = [[r[c] for c in range(n) if c != j] for r in rows[1:]]
        term = mul(entry, matrix_determinant(minor))
        total = add(total, term) if j % 2 == 0 else sub(total, term)
    return total


def matrix_inverse(rows: list[list[Node]]) -> list[list[Node]]:
    """Symbolic inverse via adjugate / determinant."""
    n = len(rows)
    det = matrix_determinant(rows)
    if is_zero(simplify(det)):
        raise EvalError("symbolic inverse of an identically singular matrix")
    inv = [[ZERO] * n for _ in range(n)]
    for i in range(n):
        for j in range(n):
            minor = [
                [rows[r][c] for c in range(n) if c != i]
                for r in range(n) if r != j
            ]
            cof = matrix_determinant(minor) if n > 1 else ONE
            if (i + j) % 2 == 1:
                cof = simplify(Neg(cof))
            inv[i][j] = div(cof, det)
    return inv


# --- "conformal-metric v1" text format -----------------------------------------

def parse_metric_source(text: str) -> dict:
    """Read the conformal-metric v1 format into plain pieces.

    Lines: ``dim = n``, ``signature = p,q``, optional ``param NAME = value``,
    component lines ``g i j : <expr>`` (1-based, symmetric closure, missing
    entries are 0), optional ``domain : <expr>`` meaning "expression > 0".
    Blank lines and lines starting with ``#`` are ignored.
    """
    dim = None
    signature = None
    params: dict[str, float] = {}
    components: dict[tuple[int, int], Node] = {}
    domain: list[Node] = []

    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        if line.startswith("dim"):
            _, _, rhs = line.partition("=")
            dim = int(rhs.strip())
            continue
        if line.startswith("signature"):
            _, _, rhs = line.partition("=")
            p, q = (int(x) for x in rhs.split(","))
            signature = (p, q)
            continue
        if line.startswith("param"):
            body = line[len("param"):].strip()
            name, _, value = body.partition("=")
            params[name.strip()] = float(value.strip())
            continue
        if line.startswith("domain"):
            _, _, rhs = line.partition(":")
            if dim is None:
                raise ParseError(f"line {lineno}: domain before dim", 0)
            domain.append(parse(rhs.strip(), dim, params))
            continue
        if line.startswith("g"):
            head, _, rhs = line.partition(":")
            parts = head.split()
            if len(parts) != 3 or dim is None:
                raise ParseError(f"line {lineno}: malformed component line", 0)
            i, j = int(parts[1]) - 1, int(parts[2]) - 1
            if not (0 <= i < dim and 0 <= j < dim):
                raise ParseError(f"line {lineno}: index out of range", 0)
            components[(i, j)] = parse(rhs.strip(), dim, params)
            continue
        raise ParseError(f"line {lineno}: unrecognized line {line!r}", 0)

    if dim is None or signature is None:
        raise ParseError("metric file needs dim and signature headers", 0)
    if signature[0] + signature[1] != dim:
        raise ParseError("signature does not sum to dim", 0)
    return {
        "dim": dim,
        "signature": signature,
        "params": params,
        "components": components,
        "domain": domain,
    }
