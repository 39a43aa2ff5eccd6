"""Lexer and parser for the analyzed teaching language.

The language is a small indentation-delimited imperative subset:

    statements   assignment, augmented assignment (+= -= *=), expression
                 statement, if/elif/else, while, for-each, function
                 definition, return, break, continue
    expressions  INT/FLOAT/STR/BOOL literals, names, binary operators
                 (+ - * / // % and or), comparisons (== != < <= > >=),
                 unary (- not), calls, indexing, slicing, list literals

Blocks are delimited by indentation (spaces only). Method-call syntax
(``xs.append(x)``, ``text.split()``) is accepted and desugared into a plain
call with the receiver as first argument, so the method name lands in the
same position as a builtin call name; bare attribute access is rejected.
Anything outside the subset raises :class:`ParseError` with the offending
line and column.
"""

from __future__ import annotations

from dataclasses import dataclass, field


class ParseError(Exception):
    """Source text does not conform to the teaching-language grammar."""

    def __init__(self, message: str, line: int, column: int, origin: str | None = None):
        self.message = message
        self.line = line
        self.column = column
        self.origin = origin
        super().__init__(message, line, column)

    def __str__(self) -> str:
        where = f"line {self.line}, column {self.column}"
        if self.origin:
            return f"{self.origin}: {where}: {self.message}"
        return f"{where}: {self.message}"


@dataclass(frozen=True)
class Node:
    """One node of a syntax tree (also used, post-normalization, as a schema tree).

    ``text`` carries identifier text for Name nodes and value text for
    Literal nodes; ``param`` carries the operator for BinOp/UnaryOp/Compare
    and the value kind (INT/FLOAT/STR/BOOL) for Literal. Source positions
    are kept for error reporting but excluded from equality, so node
    comparison is structural.
    """

    kind: str
    children: tuple["Node", ...] = ()
    text: str | None = None
    param: str | None = None
    line: int = field(default=0, compare=False)
    col: int = field(default=0, compare=False)


def walk(tree: Node):
    """Yield every node in depth-first pre-order, children in source order."""
    stack = [tree]
    while stack:
        node = stack.pop()
        yield node
        stack.extend(reversed(node.children))


def node_count(tree: Node) -> int:
    return sum(1 for _ in walk(tree))


KEYWORDS = frozenset({
    "if", "elif", "else", "while", "for", "in", "def", "return",
    "break", "continue", "and", "or", "not", "True", "False",
})

# Longest operators first so the scanner is greedy.
_OPERATORS = (
    "==", "!=", "<=", ">=", "+=", "-=", "*=", "//",
    "+", "-", "*", "/", "%", "<", ">", "=",
    "(", ")", "[", "]", ",", ":", ".",
)

_ESCAPES = {"n": "\n", "t": "\t", "r": "\r", "\\": "\\", "'": "'", '"': '"'}


@dataclass(frozen=True)
class Token:
    kind: str  # NAME INT FLOAT STRING KW OP NEWLINE INDENT DEDENT EOF
    text: str
    line: int
    col: int


def tokenize(source: str) -> list[Token]:
    """Scan source into tokens, emitting INDENT/DEDENT for block structure.

    Blank and comment-only lines are dropped; newlines inside brackets are
    treated as plain whitespace (implicit line continuation).
    """
    toks: list[Token] = []
    indents = [0]
    i, line, col = 0, 1, 1
    depth = 0
    at_line_start = True
    n = len(source)

    def err(msg: str) -> ParseError:
        return ParseError(msg, line, col)

    while i < n:
        if at_line_start and depth == 0:
            width = 0
            while i < n and source[i] in " \t":
                if source[i] == "\t":
                    raise err("tab characters are not allowed in indentation")
                width += 1
                i += 1
                col += 1
            if i >= n:
                break
            c = source[i]
            if c == "\n":
                i += 1
                line += 1
                col = 1
                continue
            if c == "#":
                while i < n and source[i] != "\n":
                    i += 1
                continue
            if width > indents[-1]:
                indents.append(width)
                toks.append(Token("INDENT", "", line, 1))
            else:
                while width < indents[-1]:
                    indents.pop()
                    toks.append(Token("DEDENT", "", line, 1))
                if width != indents[-1]:
                    raise err("unindent does not match any outer indentation level")
            at_line_start = False
            continue

        c = source[i]
        if c == "\n":
            if depth == 0:
                toks.append(Token("NEWLINE", "\n", line, col))
                at_line_start = True
            i += 1
            line += 1
            col = 1
            continue
        if c in " \t":
            i += 1
            col += 1
            continue
        if c == "#":
            while i < n and source[i] != "\n":
                i += 1
            continue
        if c in "\"'":
            quote = c
            start_line, start_col = line, col
            i += 1
            col += 1
            value = []
            while True:
                if i >= n or source[i] == "\n":
                    raise ParseError("unterminated string literal", start_line, start_col)
                ch = source[i]
                if ch == quote:
                    i += 1
                    col += 1
                    break
                if ch == "\\":
                    if i + 1 >= n:
                        raise ParseError("unterminated string literal", start_line, start_col)
                    esc = source[i + 1]
                    if esc not in _ESCAPES:
                        raise ParseError(f"unsupported escape sequence '\\{esc}'", line, col)
                    value.append(_ESCAPES[esc])
                    i += 2
                    col += 2
                    continue
                value.append(ch)
                i += 1
                col += 1
            toks.append(Token("STRING", "".join(value), start_line, start_col))
            continue
        if c.isdigit() or (c == "." and i + 1 < n and source[i + 1].isdigit()):
            start_col = c_col = col
            j = i
            while j < n and source[j].isdigit():
                j += 1
            is_float = False
            if j < n and source[j] == "." and not (j + 1 < n and source[j + 1] == "."):
                # a trailing '.' only counts as a float when not a slice colon context;
                # the subset has no attribute access on numbers, so 'digits.' is a float
                is_float = True
                j += 1
                while j < n and source[j].isdigit():
                    j += 1
            text = source[i:j]
            toks.append(Token("FLOAT" if is_float or text.startswith(".") else "INT", text, line, start_col))
            col += j - i
            i = j
            continue
        if c.isalpha() or c == "_":
            j = i
            while j < n and (source[j].isalnum() or source[j] == "_"):
                j += 1
            text = source[i:j]
            kind = "KW" if text in KEYWORDS else "NAME"
            toks.append(Token(kind, text, line, col))
            col += j - i
            i = j
            continue
        for op in _OPERATORS:
            if source.startswith(op, i):
                if op in "([":
                    depth += 1
                elif op in ")]":
                    depth = max(0, depth - 1)
                toks.append(Token("OP", op, line, col))
                i += len(op)
                col += len(op)
                break
        else:
            raise err(f"unexpected character {c!r}")

    if toks and toks[-1].kind not in ("NEWLINE", "DEDENT"):
        toks.append(Token("NEWLINE", "", line, col))
    while len(indents) > 1:
        indents.pop()
        toks.append(Token("DEDENT", "", line, 1))
    toks.append(Token("EOF", "", line, col))
    return toks


_AUG_OPS = {"+=": "+", "-=": "-", "*=": "*"}
_COMPARE_OPS = frozenset({"==", "!=", "<", "<=", ">", ">="})
_TERM_OPS = frozenset({"*", "/", "//", "%"})


class _Parser:
    def __init__(self, tokens: list[Token]):
        self.toks = tokens
        self.i = 0

    def peek(self, ahead: int = 0) -> Token:
        return self.toks[min(self.i + ahead, len(self.toks) - 1)]

    def advance(self) -> Token:
        tok = self.toks[self.i]
        if tok.kind != "EOF":
            self.i += 1
        return tok

    def error(self, message: str, tok: Token | None = None) -> ParseError:
        tok = tok or self.peek()
        return ParseError(message, tok.line, tok.col)

    def expect(self, kind: str, text: str | None = None) -> Token:
        tok = self.peek()
        if tok.kind != kind or (text is not None and tok.text != text):
            want = text if text is not None else kind
            got = tok.text or tok.kind
            raise self.error(f"expected {want!r}, found {got!r}", tok)
        return self.advance()

    def at(self, kind: str, text: str | None = None) -> bool:
        tok = self.peek()
        return tok.kind == kind and (text is None or tok.text == text)

    # ---- statements ------------------------------------------------------

    def program(self) -> Node:
        stmts = []
        while not self.at("EOF"):
            stmts.append(self.statement())
        return Node("Program", tuple(stmts), line=1, col=1)

    def statement(self) -> Node:
        tok = self.peek()
        if tok.kind == "KW":
            if tok.text == "if":
                return self.if_stmt()
            if tok.text == "while":
                return self.while_stmt()
            if tok.text == "for":
                return self.for_stmt()
            if tok.text == "def":
                return self.func_def()
            if tok.text == "return":
                self.advance()
                value: tuple[Node, ...] = ()
                if not self.at("NEWLINE"):
                    value = (self.expression(),)
                self.expect("NEWLINE")
                return Node("Return", value, line=tok.line, col=tok.col)
            if tok.text == "break":
                self.advance()
                self.expect("NEWLINE")
                return Node("Break", line=tok.line, col=tok.col)
            if tok.text == "continue":
                self.advance()
                self.expect("NEWLINE")
                return Node("Continue", line=tok.line, col=tok.col)
            if tok.text in ("elif", "else"):
                raise self.error(f"{tok.text!r} without a matching 'if'", tok)
            if tok.text not in ("not", "True", "False"):
                raise self.error(f"unexpected keyword {tok.text!r}", tok)
        expr = self.expression()
        nxt = self.peek()
        if nxt.kind == "OP" and nxt.text == "=":
            self._check_target(expr)
            self.advance()
            value = self.expression()
            self.expect("NEWLINE")
            return Node("Assign", (expr, value), line=expr.line, col=expr.col)
        if nxt.kind == "OP" and nxt.text in _AUG_OPS:
            self._check_target(expr)
            self.advance()
            value = self.expression()
            self.expect("NEWLINE")
            return Node("AugAssign", (expr, value), param=_AUG_OPS[nxt.text],
                        line=expr.line, col=expr.col)
        self.expect("NEWLINE")
        return Node("ExprStmt", (expr,), line=expr.line, col=expr.col)

    def _check_target(self, expr: Node) -> None:
        if expr.kind not in ("Name", "Index"):
            raise ParseError("cannot assign to this expression", expr.line, expr.col)

    def block(self) -> tuple[Node, ...]:
        self.expect("OP", ":")
        self.expect("NEWLINE")
        self.expect("INDENT")
        stmts = [self.statement()]
        while not self.at("DEDENT"):
            stmts.append(self.statement())
        self.expect("DEDENT")
        return tuple(stmts)

    def if_stmt(self) -> Node:
        tok = self.expect("KW", "if")
        cond = self.expression()
        children = [cond, *self.block()]
        while self.at("KW", "elif"):
            etok = self.advance()
            econd = self.expression()
            children.append(Node("Elif", (econd, *self.block()), line=etok.line, col=etok.col))
        if self.at("KW", "else"):
            etok = self.advance()
            children.append(Node("Else", self.block(), line=etok.line, col=etok.col))
        return Node("If", tuple(children), line=tok.line, col=tok.col)

    def while_stmt(self) -> Node:
        tok = self.expect("KW", "while")
        cond = self.expression()
        return Node("While", (cond, *self.block()), line=tok.line, col=tok.col)

    def for_stmt(self) -> Node:
        tok = self.expect("KW", "for")
        name = self.expect("NAME")
        self.expect("KW", "in")
        iterable = self.expression()
        target = Node("Name", text=name.text, line=name.line, col=name.col)
        return Node("ForEach", (target, iterable, *self.block()), line=tok.line, col=tok.col)

    def func_def(self) -> Node:
        tok = self.expect("KW", "def")
        name = self.expect("NAME")
        self.expect("OP", "(")
        params = []
        while not self.at("OP", ")"):
            ptok = self.expect("NAME")
            params.append(Node("Name", text=ptok.text, line=ptok.line, col=ptok.col))
            if not self.at("OP", ")"):
                self.expect("OP", ",")
        self.expect("OP", ")")
        fname = Node("Name", text=name.text, line=name.line, col=name.col)
        return Node("FuncDef", (fname, *params, *self.block()), line=tok.line, col=tok.col)

    # ---- expressions -----------------------------------------------------

    def expression(self) -> Node:
        return self.or_expr()

    def or_expr(self) -> Node:
        left = self.and_expr()
        while self.at("KW", "or"):
            tok = self.advance()
            right = self.and_expr()
            left = Node("BinOp", (left, right), param="or", line=tok.line, col=tok.col)
        return left

    def and_expr(self) -> Node:
        left = self.not_expr()
        while self.at("KW", "and"):
            tok = self.advance()
            right = self.not_expr()
            left = Node("BinOp", (left, right), param="and", line=tok.line, col=tok.col)
        return left

    def not_expr(self) -> Node:
        if self.at("KW", "not"):
            tok = self.advance()
            operand = self.not_expr()
            return Node("UnaryOp", (operand,), param="not", line=tok.line, col=tok.col)
        return self.comparison()

    def comparison(self) -> Node:
        left = self.arith()
        while self.peek().kind == "OP" and self.peek().text in _COMPARE_OPS:
            tok = self.advance()
            right = self.arith()
            left = Node("Compare", (left, right), param=tok.text, line=tok.line, col=tok.col)
        return left

    def arith(self) -> Node:
        left = self.term()
        while self.peek().kind == "OP" and self.peek().text in ("+", "-"):
            tok = self.advance()
            right = self.term()
            left = Node("BinOp", (left, right), param=tok.text, line=tok.line, col=tok.col)
        return left

    def term(self) -> Node:
        left = self.unary()
        while self.peek().kind == "OP" and self.peek().text in _TERM_OPS:
            tok = self.advance()
            right = self.unary()
            left = Node("BinOp", (left, right), param=tok.text, line=tok.line, col=tok.col)
        return left

    def unary(self) -> Node:
        if self.at("OP", "-"):
            tok = self.advance()
            operand = self.unary()
            return Node("UnaryOp", (operand,), param="-", line=tok.line, col=tok.col)
        return self.postfix()

    def postfix(self) -> Node:
        node = self.atom()
        while True:
            tok = self.peek()
            if tok.kind != "OP":
                return node
            if tok.text == "(":
                self.advance()
                args = self.call_args()
                node = Node("Call", (node, *args), line=tok.line, col=tok.col)
            elif tok.text == "[":
                self.advance()
                node = self.index_or_slice(node, tok)
            elif tok.text == ".":
                self.advance()
                mname = self.expect("NAME")
                if not self.at("OP", "("):
                    raise self.error("attribute access is only allowed as a method call", mname)
                self.advance()
                args = self.call_args()
                method = Node("Name", text=mname.text, line=mname.line, col=mname.col)
                node = Node("Call", (method, node, *args), line=tok.line, col=tok.col)
            else:
                return node

    def call_args(self) -> list[Node]:
        args = []
        while not self.at("OP", ")"):
            args.append(self.expression())
            if not self.at("OP", ")"):
                self.expect("OP", ",")
        self.expect("OP", ")")
        return args

    def index_or_slice(self, obj: Node, tok: Token) -> Node:
        parts: list[Node] = []
        saw_colon = False
        if not self.at("OP", ":"):
            parts.append(self.expression())
        while self.at("OP", ":"):
            saw_colon = True
            self.advance()
            if not self.at("OP", "]") and not self.at("OP", ":"):
                parts.append(self.expression())
        self.expect("OP", "]")
        if saw_colon:
            return Node("Slice", (obj, *parts), line=tok.line, col=tok.col)
        if not parts:
            raise self.error("empty index", tok)
        return Node("Index", (obj, parts[0]), line=tok.line, col=tok.col)

    def atom(self) -> Node:
        tok = self.peek()
        if tok.kind == "NAME":
            self.advance()
            return Node("Name", text=tok.text, line=tok.line, col=tok.col)
        if tok.kind == "INT":
            self.advance()
            return Node("Literal", text=tok.text, param="INT", line=tok.line, col=tok.col)
        if tok.kind == "FLOAT":
            self.advance()
            return Node("Literal", text=tok.text, param="FLOAT", line=tok.line, col=tok.col)
        if tok.kind == "STRING":
            self.advance()
            return Node("Literal", text=tok.text, param="STR", line=tok.line, col=tok.col)
        if tok.kind == "KW" and tok.text in ("True", "False"):
            self.advance()
            return Node("Literal", text=tok.text, param="BOOL", line=tok.line, col=tok.col)
        if tok.kind == "OP" and tok.text == "(":
            self.advance()
            inner = self.expression()
            self.expect("OP", ")")
            return inner
        if tok.kind == "OP" and tok.text == "[":
            self.advance()
            items = []
            while not self.at("OP", "]"):
                items.append(self.expression())
                if not self.at("OP", "]"):
                    self.expect("OP", ",")
            self.expect("OP", "]")
            return Node("ListLit", tuple(items), line=tok.line, col=tok.col)
        got = tok.text or tok.kind
        raise self.error(f"expected an expression, found {got!r}", tok)


def parse_program(source: str) -> Node:
    """Parse teaching-language source into a syntax tree rooted at Program."""
    return _Parser(tokenize(source)).program()
