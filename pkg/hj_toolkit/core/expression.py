"""
Expression parser and evaluator for user-defined Hamiltonians and sections

Grammar: real literals, names (coordinates or parameters), binary + - * / and
^ (also written **), unary minus, the functions in dual.FUNCTIONS, and
parentheses. Parsing is top-down operator precedence; evaluation walks the
tree with either floats or DualScalars.
"""

import math
import re
from dataclasses import dataclass, field
from typing import Dict, FrozenSet, Iterable, List, Mapping, Optional, Set

from . import dual
from .dual import Number
from .errors import DomainSingularityError, ExpressionSyntaxError, UnknownSymbolError

# Binding powers
ADDITIVE = 10
MULTIPLICATIVE = 20
UNARY = 25
POWER = 30

BINARY_BINDING = {"+": ADDITIVE, "-": ADDITIVE, "*": MULTIPLICATIVE, "/": MULTIPLICATIVE, "^": POWER}

_TOKEN_RE = re.compile(
    r"\s*(?:"
    r"(?P<number>(?:\d+\.?\d*|\.\d+)(?:[eE][+-]?\d+)?)"
    r"|(?P<name>[A-Za-z_][A-Za-z_0-9]*)"
    r"|(?P<op>\*\*|[-+*/^()])"
    r")"
)


@dataclass(frozen=True)
class Token:
    kind: str  # number, name, op, end
    text: str
    position: int


def tokenize(text: str) -> List[Token]:
    """Split an expression string into tokens

    Raises:
        ExpressionSyntaxError: On a character outside the grammar
    """
    tokens = []
    pos = 0
    while True:
        while pos < len(text) and text[pos].isspace():
            pos += 1
        if pos >= len(text):
            break
        match = _TOKEN_RE.match(text, pos)
        if not match or match.end() == pos:
            raise ExpressionSyntaxError(f"Unexpected character '{text[pos]}'", pos, text)
        kind = match.lastgroup
        start = match.start(kind)
        lexeme = match.group(kind)
        if kind == "op" and lexeme == "**":
            lexeme = "^"
        tokens.append(Token(kind, lexeme, start))
        pos = match.end()
    tokens.append(Token("end", "", len(text)))
    return tokens


class Node:
    """Base class of expression tree nodes"""

    def evaluate(self, env: Mapping[str, Number]) -> Number:
        raise NotImplementedError

    def text(self) -> str:
        raise NotImplementedError

    def symbols(self) -> Set[str]:
        return set()

    def __str__(self) -> str:
        return self.text()


@dataclass(frozen=True)
class Constant(Node):
    value: float

    def evaluate(self, env):
        return self.value

    def text(self) -> str:
        return repr(float(self.value))


@dataclass(frozen=True)
class Symbol(Node):
    name: str
    position: int = field(default=-1, compare=False)

    def evaluate(self, env):
        try:
            return env[self.name]
        except KeyError:
            raise UnknownSymbolError(self.name, self.position) from None

    def text(self) -> str:
        return self.name

    def symbols(self) -> Set[str]:
        return {self.name}


@dataclass(frozen=True)
class Negate(Node):
    operand: Node

    def evaluate(self, env):
        return -self.operand.evaluate(env)

    def text(self) -> str:
        return f"(-{self.operand.text()})"

    def symbols(self) -> Set[str]:
        return self.operand.symbols()


@dataclass(frozen=True)
class BinaryOp(Node):
    op: str
    left: Node
    right: Node

    def evaluate(self, env):
        a = self.left.evaluate(env)
        b = self.right.evaluate(env)
        try:
            if self.op == "+":
                return a + b
            if self.op == "-":
                return a - b
            if self.op == "*":
                return a * b
            if self.op == "/":
                return a / b
            return dual.power(a, b)
        except ZeroDivisionError:
            raise DomainSingularityError("Division by zero", expression=self.text()) from None
        except OverflowError:
            raise DomainSingularityError("Arithmetic overflow", expression=self.text()) from None
        except DomainSingularityError as e:
            if e.expression is None:
                raise DomainSingularityError(e.reason, expression=self.text()) from None
            raise

    def text(self) -> str:
        return f"({self.left.text()} {self.op} {self.right.text()})"

    def symbols(self) -> Set[str]:
        return self.left.symbols() | self.right.symbols()


@dataclass(frozen=True)
class Call(Node):
    function: str
    argument: Node

    def evaluate(self, env):
        x = self.argument.evaluate(env)
        try:
            return dual.FUNCTIONS[self.function](x)
        except (ValueError, OverflowError):
            raise DomainSingularityError(f"{self.function} out of domain", expression=self.text()) from None
        except DomainSingularityError as e:
            if e.expression is None:
                raise DomainSingularityError(e.reason, expression=self.text()) from None
            raise

    def text(self) -> str:
        return f"{self.function}({self.argument.text()})"

    def symbols(self) -> Set[str]:
        return self.argument.symbols()


class Parser:
    """Top-down operator precedence parser over a token list"""

    def __init__(self, text: str):
        self.text = text
        self.tokens = tokenize(text)
        self.index = 0

    def peek(self) -> Token:
        return self.tokens[self.index]

    def advance(self) -> Token:
        token = self.tokens[self.index]
        if token.kind != "end":
            self.index += 1
        return token

    def parse(self) -> Node:
        node = self.expression(0)
        token = self.peek()
        if token.kind != "end":
            raise ExpressionSyntaxError(f"Unexpected token '{token.text}'", token.position, self.text)
        return node

    def expression(self, rbp: int) -> Node:
        left = self.nud(self.advance())
        while rbp < self._left_binding(self.peek()):
            left = self.led(self.advance(), left)
        return left

    @staticmethod
    def _left_binding(token: Token) -> int:
        if token.kind == "op":
            return BINARY_BINDING.get(token.text, 0)
        return 0

    def nud(self, token: Token) -> Node:
        if token.kind == "number":
            value = float(token.text)
            if not math.isfinite(value):
                raise ExpressionSyntaxError(f"Numeric literal '{token.text}' is out of range", token.position, self.text)
            return Constant(value)
        if token.kind == "name":
            if token.text in dual.FUNCTIONS:
                opening = self.advance()
                if opening.text != "(":
                    raise ExpressionSyntaxError(f"Expected '(' after function '{token.text}'", opening.position, self.text)
                argument = self.expression(0)
                self._expect_closing()
                return Call(token.text, argument)
            return Symbol(token.text, token.position)
        if token.kind == "op":
            if token.text == "(":
                inner = self.expression(0)
                self._expect_closing()
                return inner
            if token.text == "-":
                return Negate(self.expression(UNARY))
            if token.text == "+":
                return self.expression(UNARY)
        if token.kind == "end":
            raise ExpressionSyntaxError("Unexpected end of expression", token.position, self.text)
        raise ExpressionSyntaxError(f"Unexpected token '{token.text}'", token.position, self.text)

    def led(self, token: Token, left: Node) -> Node:
        if token.text == "^":
            # right associative
            return BinaryOp("^", left, self.expression(POWER - 1))
        return BinaryOp(token.text, left, self.expression(BINARY_BINDING[token.text]))

    def _expect_closing(self) -> None:
        token = self.advance()
        if token.text != ")" or token.kind != "op":
            raise ExpressionSyntaxError("Expected ')'", token.position, self.text)


def parse_expression(text: str, allowed: Optional[Iterable[str]] = None) -> Node:
    """Parse an expression string into a tree

    Args:
        text: Expression source
        allowed: Names the expression may reference; None skips the check

    Returns:
        Node: Root of the expression tree

    Raises:
        ExpressionSyntaxError: Malformed input, with the character offset
        UnknownSymbolError: A name outside `allowed`
    """
    if not isinstance(text, str) or not text.strip():
        raise ExpressionSyntaxError("Empty expression", 0, text if isinstance(text, str) else "")
    root = Parser(text).parse()
    if allowed is not None:
        check_symbols(root, frozenset(allowed))
    return root


def check_symbols(root: Node, allowed: FrozenSet[str]) -> None:
    """Raise UnknownSymbolError for the first name in the tree that is not allowed"""
    stack = [root]
    while stack:
        node = stack.pop()
        if isinstance(node, Symbol):
            if node.name not in allowed:
                raise UnknownSymbolError(node.name, node.position)
        elif isinstance(node, Negate):
            stack.append(node.operand)
        elif isinstance(node, BinaryOp):
            stack.append(node.right)
            stack.append(node.left)
        elif isinstance(node, Call):
            stack.append(node.argument)


def print_expression(root: Node) -> str:
    """Render a tree as text that parses back to an equal tree"""
    return root.text()
