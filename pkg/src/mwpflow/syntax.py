"""AST for the analyzed C subset.

Programs are lists of functions over int scalars and int arrays.  Statement
nodes carry a statement id (`sid`) and a source span; both are excluded from
structural equality so that a parse -> emit -> parse round trip compares
equal node for node.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterator, Optional, Union


@dataclass(frozen=True)
class Span:
    line: int
    col: int

    def __str__(self) -> str:
        return f"{self.line}:{self.col}"


NO_SPAN = Span(0, 0)


# ---------------------------------------------------------------------------
# Expressions


@dataclass
class Expr:
    pass


@dataclass
class Var(Expr):
    name: str
    span: Span = field(default=NO_SPAN, compare=False)


@dataclass
class Const(Expr):
    value: int
    span: Span = field(default=NO_SPAN, compare=False)


@dataclass
class ArrayRead(Expr):
    array: str
    index: Expr
    span: Span = field(default=NO_SPAN, compare=False)


@dataclass
class BinOp(Expr):
    op: str  # one of + - *
    left: Expr
    right: Expr
    span: Span = field(default=NO_SPAN, compare=False)


# ---------------------------------------------------------------------------
# Conditions


@dataclass
class Cond:
    pass


@dataclass
class Cmp(Cond):
    op: str  # one of < <= > >= == !=
    left: Expr
    right: Expr
    span: Span = field(default=NO_SPAN, compare=False)


@dataclass
class BoolOp(Cond):
    op: str  # && or ||
    left: Cond
    right: Cond
    span: Span = field(default=NO_SPAN, compare=False)


@dataclass
class Not(Cond):
    operand: Cond
    span: Span = field(default=NO_SPAN, compare=False)


@dataclass
class ExprCond(Cond):
    """Bare expression used as a condition; nonzero means true."""

    expr: Expr
    span: Span = field(default=NO_SPAN, compare=False)


# ---------------------------------------------------------------------------
# Statements


@dataclass
class Stmt:
    sid: int = field(default=-1, compare=False, kw_only=True)
    span: Span = field(default=NO_SPAN, compare=False, kw_only=True)
    pragmas: tuple[str, ...] = field(default=(), kw_only=True)


@dataclass
class Assign(Stmt):
    target: str
    index: Optional[Expr]  # None for scalar targets
    value: Expr


@dataclass
class CallAssign(Stmt):
    target: str
    callee: str
    args: list[Expr]


@dataclass
class If(Stmt):
    cond: Cond
    then: list[Stmt]
    orelse: list[Stmt]


@dataclass
class While(Stmt):
    cond: Cond
    body: list[Stmt]


@dataclass
class ForCounted(Stmt):
    """Counted loop: counter runs from init upward while counter < bound.

    The counter and the bound variable are never written in the body; the
    frontend downgrades any violating loop to while form.  A literal bound
    is carried both as `bound` (a synthetic constant local) and as
    `bound_literal` so emission can print the literal back.
    """

    counter: str
    init: Expr
    bound: str
    body: list[Stmt]
    bound_literal: Optional[int] = None
    counter_inline: bool = False


@dataclass
class Return(Stmt):
    var: Optional[str]  # None for a bare return


@dataclass
class Block(Stmt):
    body: list[Stmt]


# ---------------------------------------------------------------------------
# Declarations / functions / programs


@dataclass
class VarDecl:
    name: str
    kind: str  # scalar | array | const
    length: Union[int, str, None] = None  # arrays: literal or parameter name
    value: Optional[int] = None  # const kind: the literal bound value
    inline: bool = False  # declared in a for-loop header
    span: Span = field(default=NO_SPAN, compare=False)


@dataclass
class FunctionDef:
    name: str
    params: list[str]
    locals: list[VarDecl]
    body: list[Stmt]
    return_var: Optional[str]
    ret_type: str  # int | void
    span: Span = field(default=NO_SPAN, compare=False)

    def decl(self, name: str) -> Optional[VarDecl]:
        for d in self.locals:
            if d.name == name:
                return d
        return None

    def var_names(self) -> list[str]:
        return list(self.params) + [d.name for d in self.locals]


@dataclass
class Program:
    functions: list[FunctionDef]
    path: str = field(default="<input>", compare=False)

    def function(self, name: str) -> Optional[FunctionDef]:
        for f in self.functions:
            if f.name == name:
                return f
        return None


# ---------------------------------------------------------------------------
# Walkers


def expr_vars(e: Expr) -> set[str]:
    """All variable and array names read by an expression."""
    match e:
        case Var(name=n):
            return {n}
        case Const():
            return set()
        case ArrayRead(array=a, index=i):
            return {a} | expr_vars(i)
        case BinOp(left=l, right=r):
            return expr_vars(l) | expr_vars(r)
    raise TypeError(f"unknown expression node {e!r}")


def cond_vars(c: Cond) -> set[str]:
    match c:
        case Cmp(left=l, right=r):
            return expr_vars(l) | expr_vars(r)
        case BoolOp(left=l, right=r):
            return cond_vars(l) | cond_vars(r)
        case Not(operand=o):
            return cond_vars(o)
        case ExprCond(expr=e):
            return expr_vars(e)
    raise TypeError(f"unknown condition node {c!r}")


def child_bodies(s: Stmt) -> list[list[Stmt]]:
    match s:
        case If(then=t, orelse=e):
            return [t, e]
        case While(body=b) | ForCounted(body=b) | Block(body=b):
            return [b]
    return []


def iter_stmts(body: list[Stmt]) -> Iterator[Stmt]:
    """Yield every statement in a body, pre-order, including nested ones."""
    for s in body:
        yield s
        for child in child_bodies(s):
            yield from iter_stmts(child)


def renumber(program: Program) -> None:
    """Assign fresh pre-order statement ids across the whole program."""
    sid = 0
    for fn in program.functions:
        for s in iter_stmts(fn.body):
            s.sid = sid
            sid += 1


def written_names(body: list[Stmt]) -> set[str]:
    """Names assigned anywhere in a body, arrays as aggregates."""
    out: set[str] = set()
    for s in iter_stmts(body):
        match s:
            case Assign(target=t):
                out.add(t)
            case CallAssign(target=t):
                out.add(t)
            case ForCounted(counter=c):
                out.add(c)
    return out


def map_expr(e: Expr, fn) -> Expr:
    """Rebuild an expression bottom-up through `fn` (applied to every node)."""
    match e:
        case Var() | Const():
            return fn(e)
        case ArrayRead(array=a, index=i, span=sp):
            return fn(ArrayRead(a, map_expr(i, fn), span=sp))
        case BinOp(op=op, left=l, right=r, span=sp):
            return fn(BinOp(op, map_expr(l, fn), map_expr(r, fn), span=sp))
    raise TypeError(f"unknown expression node {e!r}")
