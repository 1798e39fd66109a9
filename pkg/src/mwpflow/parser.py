"""Recursive-descent frontend for the analyzed C subset.

`parse` lexes and parses a translation unit, validates it, and returns an
AST.  Validation also runs standalone over programmatically built ASTs; it
downgrades counted loops whose counter or bound is written in the body to
plain while form.

Subset contract (documented in the README): int scalars and int arrays,
one declarator per declaration, assignments, calls only as the whole right
side of an assignment, if/while/for, a single tail return per function,
`+ - *` arithmetic, comparison/boolean conditions.  A for-loop of the shape
`for (i = e; i < x; i++)` with `i` and `x` unmodified in the body becomes a
counted loop; every other for-loop desugars to while form.
"""

from __future__ import annotations

from dataclasses import dataclass

from .syntax import (
    ArrayRead,
    Assign,
    BinOp,
    Block,
    BoolOp,
    CallAssign,
    Cmp,
    Cond,
    Const,
    Expr,
    ExprCond,
    ForCounted,
    FunctionDef,
    If,
    NO_SPAN,
    Not,
    Program,
    Return,
    Span,
    Stmt,
    Var,
    VarDecl,
    While,
    cond_vars,
    expr_vars,
    iter_stmts,
    renumber,
    written_names,
)


class FrontendError(Exception):
    """A diagnostic tied to a source location."""

    def __init__(self, span: Span, message: str):
        super().__init__(message)
        self.span = span
        self.message = message

    def render(self, path: str) -> str:
        return f"{path}:{self.span.line}:{self.span.col}: {self.message}"


class SubsetSyntaxError(FrontendError):
    pass


class UnsupportedConstruct(FrontendError):
    pass


class ValidationError(FrontendError):
    pass


KEYWORDS = {"int", "void", "if", "else", "while", "for", "return"}
UNSUPPORTED_KEYWORDS = {
    "float", "double", "char", "long", "short", "unsigned", "signed", "bool",
    "goto", "break", "continue", "switch", "case", "default", "do", "struct",
    "union", "enum", "typedef", "static", "extern", "const", "sizeof",
}
CMP_OPS = {"<", "<=", ">", ">=", "==", "!="}
MULTI_PUNCT = ["<=", ">=", "==", "!=", "&&", "||", "++", "--"]
SINGLE_PUNCT = set("+-*<>=;,()[]{}!")


@dataclass(frozen=True)
class Token:
    kind: str  # ident | num | punct | keyword | pragma | eof
    value: str
    span: Span


def lex(text: str) -> list[Token]:
    tokens: list[Token] = []
    i, line, col = 0, 1, 1
    n = len(text)

    def span() -> Span:
        return Span(line, col)

    while i < n:
        ch = text[i]
        if ch == "\n":
            i += 1
            line += 1
            col = 1
            continue
        if ch in " \t\r":
            i += 1
            col += 1
            continue
        if text.startswith("//", i):
            while i < n and text[i] != "\n":
                i += 1
            continue
        if text.startswith("/*", i):
            end = text.find("*/", i + 2)
            if end < 0:
                raise SubsetSyntaxError(span(), "unterminated comment")
            for c in text[i : end + 2]:
                if c == "\n":
                    line += 1
                    col = 1
                else:
                    col += 1
            i = end + 2
            continue
        if ch == "#":
            start, sp = i, span()
            while i < n and text[i] != "\n":
                i += 1
            directive = text[start:i].rstrip()
            if not directive.startswith("#pragma"):
                raise UnsupportedConstruct(sp, f"unsupported preprocessor directive {directive.split()[0]!r}")
            tokens.append(Token("pragma", directive, sp))
            col += i - start
            continue
        if ch.isalpha() or ch == "_":
            start, sp = i, span()
            while i < n and (text[i].isalnum() or text[i] == "_"):
                i += 1
            word = text[start:i]
            col += i - start
            kind = "keyword" if word in KEYWORDS else "ident"
            tokens.append(Token(kind, word, sp))
            continue
        if ch.isdigit():
            start, sp = i, span()
            while i < n and text[i].isdigit():
                i += 1
            col += i - start
            tokens.append(Token("num", text[start:i], sp))
            continue
        two = text[i : i + 2]
        if two in MULTI_PUNCT:
            tokens.append(Token("punct", two, span()))
            i += 2
            col += 2
            continue
        if ch in SINGLE_PUNCT:
            tokens.append(Token("punct", ch, span()))
            i += 1
            col += 1
            continue
        raise SubsetSyntaxError(span(), f"unexpected character {ch!r}")
    tokens.append(Token("eof", "", Span(line, col)))
    return tokens


class _FnState:
    """Per-function accumulation while parsing."""

    def __init__(self, params: list[str]):
        self.params = params
        self.locals: list[VarDecl] = []
        self.bound_count = 0
        self.ret_count = 0

    def names(self) -> set[str]:
        return set(self.params) | {d.name for d in self.locals}

    def fresh(self, prefix: str, counter_attr: str) -> str:
        while True:
            k = getattr(self, counter_attr)
            setattr(self, counter_attr, k + 1)
            name = f"{prefix}{k}"
            if name not in self.names():
                return name


class Parser:
    def __init__(self, tokens: list[Token]):
        self.tokens = tokens
        self.pos = 0
        self.next_sid = 0

    # -- token plumbing ----------------------------------------------------

    def peek(self, ahead: int = 0) -> Token:
        return self.tokens[min(self.pos + ahead, len(self.tokens) - 1)]

    def advance(self) -> Token:
        tok = self.tokens[self.pos]
        if tok.kind != "eof":
            self.pos += 1
        return tok

    def at(self, value: str) -> bool:
        tok = self.peek()
        return tok.kind in ("punct", "keyword") and tok.value == value

    def expect(self, value: str) -> Token:
        if not self.at(value):
            tok = self.peek()
            shown = tok.value if tok.kind != "eof" else "end of input"
            raise SubsetSyntaxError(tok.span, f"expected {value!r}, found {shown!r}")
        return self.advance()

    def expect_ident(self, what: str = "identifier") -> Token:
        tok = self.peek()
        if tok.kind != "ident":
            if tok.kind == "keyword" or (tok.kind == "ident" and tok.value in UNSUPPORTED_KEYWORDS):
                raise SubsetSyntaxError(tok.span, f"expected {what}, found keyword {tok.value!r}")
            raise SubsetSyntaxError(tok.span, f"expected {what}, found {tok.value!r}")
        if tok.value in UNSUPPORTED_KEYWORDS:
            raise UnsupportedConstruct(tok.span, f"unsupported keyword {tok.value!r}")
        return self.advance()

    def sid(self) -> int:
        self.next_sid += 1
        return self.next_sid - 1

    # -- program -----------------------------------------------------------

    def parse_program(self, path: str) -> Program:
        functions = []
        while self.peek().kind != "eof":
            functions.append(self.parse_function())
        return Program(functions, path=path)

    def parse_function(self) -> FunctionDef:
        tok = self.peek()
        if tok.kind == "ident" and tok.value in UNSUPPORTED_KEYWORDS:
            raise UnsupportedConstruct(tok.span, f"unsupported type {tok.value!r}")
        if not (self.at("int") or self.at("void")):
            raise SubsetSyntaxError(tok.span, "expected a function definition")
        ret_type = self.advance().value
        name_tok = self.expect_ident("function name")
        self.expect("(")
        params: list[str] = []
        if self.at("void") and self.peek(1).value == ")":
            self.advance()
        elif not self.at(")"):
            while True:
                self.expect("int")
                if self.at("*"):
                    raise UnsupportedConstruct(self.peek().span, "pointers are not supported")
                p = self.expect_ident("parameter name")
                if p.value in params:
                    raise ValidationError(p.span, f"duplicate parameter {p.value!r}")
                params.append(p.value)
                if self.at(","):
                    self.advance()
                    continue
                break
        self.expect(")")
        fs = _FnState(params)
        body = self.parse_block(fs)
        return FunctionDef(
            name=name_tok.value,
            params=params,
            locals=fs.locals,
            body=body,
            return_var=None,
            ret_type=ret_type,
            span=name_tok.span,
        )

    # -- statements ----------------------------------------------------------

    def parse_block(self, fs: _FnState) -> list[Stmt]:
        self.expect("{")
        out: list[Stmt] = []
        while not self.at("}"):
            if self.peek().kind == "eof":
                raise SubsetSyntaxError(self.peek().span, "unexpected end of input inside a block")
            out.extend(self.parse_item(fs))
        self.expect("}")
        return out

    def parse_stmt_or_block(self, fs: _FnState) -> list[Stmt]:
        if self.at("{"):
            return self.parse_block(fs)
        return self.parse_item(fs)

    def parse_item(self, fs: _FnState) -> list[Stmt]:
        pragmas: list[str] = []
        while self.peek().kind == "pragma":
            tok = self.advance()
            pragmas.append(tok.value)
        tok = self.peek()
        if tok.kind == "ident" and tok.value in UNSUPPORTED_KEYWORDS:
            raise UnsupportedConstruct(tok.span, f"unsupported keyword {tok.value!r}")
        if self.at("int"):
            if pragmas:
                raise UnsupportedConstruct(tok.span, "a pragma must precede a statement, not a declaration")
            return self.parse_declaration(fs)
        stmts = self.parse_plain_stmt(fs)
        if pragmas:
            if not stmts:
                raise SubsetSyntaxError(tok.span, "pragma is not attached to any statement")
            loops = [s for s in stmts if isinstance(s, (While, ForCounted))]
            target = loops[0] if loops else stmts[0]
            target.pragmas = tuple(pragmas)
        return stmts

    def parse_declaration(self, fs: _FnState) -> list[Stmt]:
        self.expect("int")
        if self.at("*"):
            raise UnsupportedConstruct(self.peek().span, "pointers are not supported")
        name_tok = self.expect_ident("variable name")
        name = name_tok.value
        if name in fs.names():
            raise ValidationError(name_tok.span, f"{name!r} is already declared")
        if self.at("["):
            self.advance()
            len_tok = self.peek()
            if len_tok.kind == "num":
                self.advance()
                length: int | str = int(len_tok.value)
                if length <= 0:
                    raise ValidationError(len_tok.span, "array length must be positive")
            else:
                length = self.expect_ident("array length").value
            self.expect("]")
            self.expect(";")
            fs.locals.append(VarDecl(name, "array", length=length, span=name_tok.span))
            return []
        if self.at("="):
            eq = self.advance()
            value = self.parse_expr()
            self.expect(";")
            fs.locals.append(VarDecl(name, "scalar", span=name_tok.span))
            return [Assign(name, None, value, sid=self.sid(), span=eq.span)]
        if self.at(","):
            raise UnsupportedConstruct(self.peek().span, "one declarator per declaration")
        self.expect(";")
        fs.locals.append(VarDecl(name, "scalar", span=name_tok.span))
        return []

    def parse_plain_stmt(self, fs: _FnState) -> list[Stmt]:
        tok = self.peek()
        if self.at(";"):
            self.advance()
            return []
        if self.at("{"):
            body = self.parse_block(fs)
            return [Block(body, sid=self.sid(), span=tok.span)]
        if self.at("if"):
            return [self.parse_if(fs)]
        if self.at("while"):
            return [self.parse_while(fs)]
        if self.at("for"):
            return self.parse_for(fs)
        if self.at("return"):
            return self.parse_return(fs)
        if tok.kind == "ident":
            return [self.parse_assign(fs)]
        shown = tok.value if tok.kind != "eof" else "end of input"
        raise SubsetSyntaxError(tok.span, f"expected a statement, found {shown!r}")

    def parse_if(self, fs: _FnState) -> Stmt:
        tok = self.expect("if")
        self.expect("(")
        cond = self.parse_cond()
        self.expect(")")
        then = self.parse_stmt_or_block(fs)
        orelse: list[Stmt] = []
        if self.at("else"):
            self.advance()
            orelse = self.parse_stmt_or_block(fs)
        return If(cond, then, orelse, sid=self.sid(), span=tok.span)

    def parse_while(self, fs: _FnState) -> Stmt:
        tok = self.expect("while")
        self.expect("(")
        cond = self.parse_cond()
        self.expect(")")
        body = self.parse_stmt_or_block(fs)
        return While(cond, body, sid=self.sid(), span=tok.span)

    def parse_for(self, fs: _FnState) -> list[Stmt]:
        tok = self.expect("for")
        self.expect("(")
        inline = False
        if self.at("int"):
            inline = True
            self.advance()
        ctr_tok = self.expect_ident("loop counter")
        counter = ctr_tok.value
        if inline:
            existing = next((d for d in fs.locals if d.name == counter), None)
            if counter in fs.params:
                raise ValidationError(ctr_tok.span, f"loop counter shadows parameter {counter!r}")
            if existing is not None and existing.kind != "scalar":
                raise ValidationError(ctr_tok.span, f"{counter!r} is already declared")
            if existing is None:
                fs.locals.append(VarDecl(counter, "scalar", inline=True, span=ctr_tok.span))
        self.expect("=")
        init = self.parse_expr()
        self.expect(";")
        cond = self.parse_cond()
        self.expect(";")
        upd_tok = self.expect_ident("loop update target")
        if self.at("++"):
            self.advance()
            update_value: Expr = BinOp("+", Var(upd_tok.value, upd_tok.span), Const(1, upd_tok.span), upd_tok.span)
        elif self.at("--"):
            raise UnsupportedConstruct(self.peek().span, "decrementing loops are not supported")
        else:
            self.expect("=")
            update_value = self.parse_expr()
        self.expect(")")
        body = self.parse_stmt_or_block(fs)

        counted = self.counted_shape(counter, upd_tok.value, cond, update_value, body)
        if counted is not None:
            bound_expr = counted
            if isinstance(bound_expr, Const):
                bound = fs.fresh("__bnd", "bound_count")
                fs.locals.append(VarDecl(bound, "const", value=bound_expr.value, span=bound_expr.span))
                literal: int | None = bound_expr.value
            else:
                bound = bound_expr.name
                literal = None
            return [
                ForCounted(
                    counter,
                    init,
                    bound,
                    body,
                    bound_literal=literal,
                    counter_inline=inline,
                    sid=self.sid(),
                    span=tok.span,
                )
            ]
        update = Assign(upd_tok.value, None, update_value, sid=self.sid(), span=upd_tok.span)
        init_assign = Assign(counter, None, init, sid=self.sid(), span=tok.span)
        loop = While(cond, body + [update], sid=self.sid(), span=tok.span)
        return [init_assign, loop]

    @staticmethod
    def counted_shape(
        counter: str, update_target: str, cond: Cond, update_value: Expr, body: list[Stmt]
    ) -> Const | Var | None:
        """The loop bound when the header has counted shape, else None."""
        if update_target != counter:
            return None
        match update_value:
            case BinOp(op="+", left=Var(name=c), right=Const(value=1)) if c == counter:
                pass
            case _:
                return None
        match cond:
            case Cmp(op="<", left=Var(name=c), right=(Const() | Var()) as bound) if c == counter:
                pass
            case _:
                return None
        if isinstance(bound, Var) and bound.name == counter:
            return None
        writes = written_names(body)
        if counter in writes:
            return None
        if isinstance(bound, Var) and bound.name in writes:
            return None
        return bound

    def parse_return(self, fs: _FnState) -> list[Stmt]:
        tok = self.expect("return")
        if self.at(";"):
            self.advance()
            return [Return(None, sid=self.sid(), span=tok.span)]
        value = self.parse_expr()
        self.expect(";")
        if isinstance(value, Var):
            return [Return(value.name, sid=self.sid(), span=tok.span)]
        name = fs.fresh("__ret", "ret_count")
        fs.locals.append(VarDecl(name, "scalar", span=tok.span))
        return [
            Assign(name, None, value, sid=self.sid(), span=tok.span),
            Return(name, sid=self.sid(), span=tok.span),
        ]

    def parse_assign(self, fs: _FnState) -> Stmt:
        name_tok = self.expect_ident()
        index: Expr | None = None
        if self.at("["):
            self.advance()
            index = self.parse_expr()
            self.expect("]")
        if self.at("++") or self.at("--"):
            raise UnsupportedConstruct(
                self.peek().span, "increment statements are only supported as for-loop updates"
            )
        eq = self.expect("=")
        if index is None and self.peek().kind == "ident" and self.peek(1).value == "(":
            callee_tok = self.expect_ident("function name")
            self.expect("(")
            args: list[Expr] = []
            if not self.at(")"):
                while True:
                    args.append(self.parse_expr())
                    if self.at(","):
                        self.advance()
                        continue
                    break
            self.expect(")")
            self.expect(";")
            return CallAssign(name_tok.value, callee_tok.value, args, sid=self.sid(), span=eq.span)
        value = self.parse_expr()
        self.expect(";")
        return Assign(name_tok.value, index, value, sid=self.sid(), span=eq.span)

    # -- conditions ----------------------------------------------------------

    def parse_cond(self) -> Cond:
        left = self.parse_cond_and()
        while self.at("||"):
            tok = self.advance()
            right = self.parse_cond_and()
            left = BoolOp("||", left, right, tok.span)
        return left

    def parse_cond_and(self) -> Cond:
        left = self.parse_cond_atom()
        while self.at("&&"):
            tok = self.advance()
            right = self.parse_cond_atom()
            left = BoolOp("&&", left, right, tok.span)
        return left

    def parse_cond_atom(self) -> Cond:
        tok = self.peek()
        if self.at("!"):
            self.advance()
            self.expect("(")
            inner = self.parse_cond()
            self.expect(")")
            return Not(inner, tok.span)
        if self.at("("):
            mark = self.pos
            try:
                self.advance()
                inner = self.parse_cond()
                self.expect(")")
                nxt = self.peek()
                grouped_expr = nxt.kind == "punct" and nxt.value in (CMP_OPS | {"+", "-", "*"})
                if not grouped_expr:
                    return inner
            except SubsetSyntaxError:
                pass
            self.pos = mark
        return self.parse_comparison()

    def parse_comparison(self) -> Cond:
        left = self.parse_expr()
        tok = self.peek()
        if tok.kind == "punct" and tok.value in CMP_OPS:
            self.advance()
            right = self.parse_expr()
            return Cmp(tok.value, left, right, tok.span)
        return ExprCond(left, tok.span)

    # -- expressions ---------------------------------------------------------

    def parse_expr(self) -> Expr:
        return self.parse_add()

    def parse_add(self) -> Expr:
        left = self.parse_mul()
        while self.at("+") or self.at("-"):
            tok = self.advance()
            right = self.parse_mul()
            left = BinOp(tok.value, left, right, tok.span)
        return left

    def parse_mul(self) -> Expr:
        left = self.parse_primary()
        while self.at("*"):
            tok = self.advance()
            right = self.parse_primary()
            left = BinOp("*", left, right, tok.span)
        return left

    def parse_primary(self) -> Expr:
        tok = self.peek()
        if tok.kind == "num":
            self.advance()
            return Const(int(tok.value), tok.span)
        if self.at("-"):
            self.advance()
            num = self.peek()
            if num.kind != "num":
                raise UnsupportedConstruct(tok.span, "unary minus is supported for literals only")
            self.advance()
            return Const(-int(num.value), tok.span)
        if self.at("("):
            self.advance()
            inner = self.parse_expr()
            self.expect(")")
            return inner
        if tok.kind == "ident":
            name = self.expect_ident()
            if self.at("["):
                self.advance()
                idx = self.parse_expr()
                self.expect("]")
                return ArrayRead(name.value, idx, name.span)
            if self.at("("):
                raise UnsupportedConstruct(
                    name.span, "calls may only appear alone on the right side of an assignment"
                )
            return Var(name.value, name.span)
        shown = tok.value if tok.kind != "eof" else "end of input"
        raise SubsetSyntaxError(tok.span, f"expected an expression, found {shown!r}")


# ---------------------------------------------------------------------------
# Validation


def _check_expr(e: Expr, kinds: dict[str, str], span_of: Span) -> None:
    match e:
        case Var(name=n, span=sp):
            kind = kinds.get(n)
            if kind is None:
                raise ValidationError(sp or span_of, f"{n!r} is not declared")
            if kind == "array":
                raise ValidationError(sp or span_of, f"array {n!r} used without an index")
        case Const():
            pass
        case ArrayRead(array=a, index=i, span=sp):
            kind = kinds.get(a)
            if kind is None:
                raise ValidationError(sp or span_of, f"{a!r} is not declared")
            if kind != "array":
                raise ValidationError(sp or span_of, f"{a!r} is not an array")
            _check_expr(i, kinds, sp or span_of)
        case BinOp(left=l, right=r, span=sp):
            _check_expr(l, kinds, sp or span_of)
            _check_expr(r, kinds, sp or span_of)
        case _:
            raise ValidationError(span_of, f"unknown expression node {e!r}")


def _check_cond(c: Cond, kinds: dict[str, str], span_of: Span) -> None:
    match c:
        case Cmp(left=l, right=r, span=sp):
            _check_expr(l, kinds, sp or span_of)
            _check_expr(r, kinds, sp or span_of)
        case BoolOp(left=l, right=r, span=sp):
            _check_cond(l, kinds, sp or span_of)
            _check_cond(r, kinds, sp or span_of)
        case Not(operand=o, span=sp):
            _check_cond(o, kinds, sp or span_of)
        case ExprCond(expr=e, span=sp):
            _check_expr(e, kinds, sp or span_of)
        case _:
            raise ValidationError(span_of, f"unknown condition node {c!r}")


def _bound_expr_for(fn: FunctionDef, loop: ForCounted) -> Expr:
    if loop.bound_literal is not None:
        return Const(loop.bound_literal, loop.span)
    return Var(loop.bound, loop.span)


def _validate_function(program: Program, fn: FunctionDef) -> None:
    kinds: dict[str, str] = {p: "scalar" for p in fn.params}
    for d in fn.locals:
        if d.name in kinds:
            raise ValidationError(d.span, f"{d.name!r} is already declared")
        kinds[d.name] = d.kind
        if d.kind == "array":
            if isinstance(d.length, str):
                if d.length not in fn.params:
                    raise ValidationError(
                        d.span, f"array length {d.length!r} must be a literal or a parameter"
                    )
            elif not (isinstance(d.length, int) and d.length > 0):
                raise ValidationError(d.span, "array length must be positive")

    return_vars: dict[str, str | None] = {
        f.name: f.return_var for f in program.functions
    }

    def check_body(body: list[Stmt], tail: bool) -> None:
        for k, s in enumerate(body):
            last = tail and k == len(body) - 1
            match s:
                case Assign(target=t, index=idx, value=v, span=sp):
                    kind = kinds.get(t)
                    if kind is None:
                        raise ValidationError(sp, f"{t!r} is not declared")
                    if idx is None:
                        if kind == "array":
                            raise ValidationError(sp, f"array {t!r} needs an index to be assigned")
                        if kind == "const":
                            raise ValidationError(sp, f"{t!r} is a loop bound and cannot be assigned")
                    else:
                        if kind != "array":
                            raise ValidationError(sp, f"{t!r} is not an array")
                        _check_expr(idx, kinds, sp)
                    _check_expr(v, kinds, sp)
                case CallAssign(target=t, callee=c, args=args, span=sp):
                    kind = kinds.get(t)
                    if kind is None:
                        raise ValidationError(sp, f"{t!r} is not declared")
                    if kind != "scalar":
                        raise ValidationError(sp, f"call result must go to a scalar, not {t!r}")
                    callee = program.function(c)
                    if callee is None:
                        raise ValidationError(sp, f"call to unknown function {c!r}")
                    if len(args) != len(callee.params):
                        raise ValidationError(
                            sp,
                            f"{c!r} takes {len(callee.params)} argument(s), got {len(args)}",
                        )
                    if return_vars.get(c) is None:
                        raise ValidationError(sp, f"{c!r} does not return a value")
                    for a in args:
                        _check_expr(a, kinds, sp)
                case If(cond=c, then=t, orelse=e, span=sp):
                    _check_cond(c, kinds, sp)
                    check_body(t, False)
                    check_body(e, False)
                case While(cond=c, body=b, span=sp):
                    _check_cond(c, kinds, sp)
                    check_body(b, False)
                case ForCounted() as loop:
                    if kinds.get(loop.counter) != "scalar":
                        raise ValidationError(loop.span, f"loop counter {loop.counter!r} must be a scalar")
                    bkind = kinds.get(loop.bound)
                    if bkind not in ("scalar", "const"):
                        raise ValidationError(loop.span, f"loop bound {loop.bound!r} must be a scalar")
                    _check_expr(loop.init, kinds, loop.span)
                    check_body(loop.body, False)
                case Return(var=v, span=sp):
                    if not last:
                        raise ValidationError(sp, "return must be the last statement of the function")
                    if fn.ret_type == "void":
                        if v is not None:
                            raise ValidationError(sp, "void function cannot return a value")
                    else:
                        if v is None:
                            raise ValidationError(sp, "missing return value")
                        if kinds.get(v) not in ("scalar", "const"):
                            raise ValidationError(sp, f"return value {v!r} must be a scalar")
                case Block(body=b):
                    check_body(b, False)
                case _:
                    raise ValidationError(s.span, f"unknown statement node {s!r}")

    def downgrade(body: list[Stmt]) -> list[Stmt]:
        out: list[Stmt] = []
        for s in body:
            match s:
                case ForCounted() as loop:
                    loop.body[:] = downgrade(loop.body)
                    writes = written_names(loop.body)
                    if loop.counter in writes or loop.bound in writes:
                        init = Assign(loop.counter, None, loop.init, span=loop.span)
                        cond = Cmp("<", Var(loop.counter, loop.span), _bound_expr_for(fn, loop), loop.span)
                        incr = Assign(
                            loop.counter,
                            None,
                            BinOp("+", Var(loop.counter, loop.span), Const(1, loop.span), loop.span),
                            span=loop.span,
                        )
                        out.append(init)
                        out.append(While(cond, loop.body + [incr], span=loop.span, pragmas=loop.pragmas))
                        continue
                case If(then=t, orelse=e):
                    s.then[:] = downgrade(t)
                    s.orelse[:] = downgrade(e)
                case While(body=b) | Block(body=b):
                    s.body[:] = downgrade(b)
            out.append(s)
        return out

    fn.body[:] = downgrade(fn.body)

    # Settle the return variable before per-statement checks so that calls
    # into this function (checked elsewhere) see the final value.
    fn.return_var = None
    if fn.body and isinstance(fn.body[-1], Return):
        fn.return_var = fn.body[-1].var

    check_body(fn.body, True)

    # Garbage-collect synthetic bound constants that no loop references.
    used_bounds = {
        s.bound for s in iter_stmts(fn.body) if isinstance(s, ForCounted)
    }
    fn.locals[:] = [
        d for d in fn.locals if d.kind != "const" or d.name in used_bounds
    ]


def validate(program: Program) -> Program:
    seen: set[str] = set()
    for fn in program.functions:
        if fn.name in seen:
            raise ValidationError(fn.span, f"function {fn.name!r} is defined twice")
        seen.add(fn.name)
    # Two passes: return variables are settled for every function first so
    # call checking does not depend on definition order.
    for fn in program.functions:
        fn.return_var = None
        if fn.body and isinstance(fn.body[-1], Return):
            fn.return_var = fn.body[-1].var
    for fn in program.functions:
        _validate_function(program, fn)
    renumber(program)
    return program


def parse(text: str, path: str = "<input>") -> Program:
    """Parse and validate a translation unit of the supported subset."""
    tokens = lex(text)
    parser = Parser(tokens)
    program = parser.parse_program(path)
    return validate(program)
