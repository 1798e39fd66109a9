"""Source renderer for the analyzed C subset.

Printing is structure-preserving: parse(emit(ast)) compares equal to the
input node for node (spans and statement ids excluded).  Right-hand
children of same-precedence binary operators are parenthesized so the
rebuilt tree keeps its shape.
"""

from __future__ import annotations

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
    Not,
    Program,
    Return,
    Stmt,
    Var,
    VarDecl,
    While,
)

_PREC = {"+": 1, "-": 1, "*": 2}


def emit_expr(e: Expr, parent_prec: int = 0, right: bool = False) -> str:
    match e:
        case Var(name=n):
            return n
        case Const(value=v):
            return str(v)
        case ArrayRead(array=a, index=i):
            return f"{a}[{emit_expr(i)}]"
        case BinOp(op=op, left=l, right=r):
            prec = _PREC[op]
            text = f"{emit_expr(l, prec, False)} {op} {emit_expr(r, prec, True)}"
            if prec < parent_prec or (right and prec == parent_prec):
                return f"({text})"
            return text
    raise TypeError(f"unknown expression node {e!r}")


def emit_cond(c: Cond, parent: str = "") -> str:
    match c:
        case Cmp(op=op, left=l, right=r):
            return f"{emit_expr(l)} {op} {emit_expr(r)}"
        case ExprCond(expr=e):
            return emit_expr(e)
        case Not(operand=o):
            return f"!({emit_cond(o)})"
        case BoolOp(op=op, left=l, right=r):
            lt = emit_cond(l, op)
            rt = emit_cond(r, op)
            if isinstance(l, BoolOp) and l.op != op:
                lt = f"({lt})"
            if isinstance(r, BoolOp):
                rt = f"({rt})"
            return f"{lt} {op} {rt}"
    raise TypeError(f"unknown condition node {c!r}")


def _bound_text(s: ForCounted) -> str:
    if s.bound_literal is not None:
        return str(s.bound_literal)
    return s.bound


def emit_stmt(s: Stmt, indent: int, lines: list[str]) -> None:
    pad = "    " * indent
    for pragma in s.pragmas:
        lines.append(pad + pragma)
    match s:
        case Assign(target=t, index=None, value=v):
            lines.append(f"{pad}{t} = {emit_expr(v)};")
        case Assign(target=t, index=idx, value=v):
            lines.append(f"{pad}{t}[{emit_expr(idx)}] = {emit_expr(v)};")
        case CallAssign(target=t, callee=c, args=args):
            argtext = ", ".join(emit_expr(a) for a in args)
            lines.append(f"{pad}{t} = {c}({argtext});")
        case If(cond=c, then=then, orelse=orelse):
            lines.append(f"{pad}if ({emit_cond(c)}) {{")
            emit_body(then, indent + 1, lines)
            if orelse:
                lines.append(f"{pad}}} else {{")
                emit_body(orelse, indent + 1, lines)
            lines.append(f"{pad}}}")
        case While(cond=c, body=b):
            lines.append(f"{pad}while ({emit_cond(c)}) {{")
            emit_body(b, indent + 1, lines)
            lines.append(f"{pad}}}")
        case ForCounted(counter=i, init=init, body=b) as loop:
            decl = "int " if loop.counter_inline else ""
            head = f"for ({decl}{i} = {emit_expr(init)}; {i} < {_bound_text(loop)}; {i}++)"
            lines.append(f"{pad}{head} {{")
            emit_body(b, indent + 1, lines)
            lines.append(f"{pad}}}")
        case Return(var=None):
            lines.append(f"{pad}return;")
        case Return(var=v):
            lines.append(f"{pad}return {v};")
        case Block(body=b):
            lines.append(f"{pad}{{")
            emit_body(b, indent + 1, lines)
            lines.append(f"{pad}}}")
        case _:
            raise TypeError(f"unknown statement node {s!r}")


def emit_body(body: list[Stmt], indent: int, lines: list[str]) -> None:
    for s in body:
        emit_stmt(s, indent, lines)


def _emit_decl(d: VarDecl, lines: list[str]) -> None:
    if d.kind == "const" or d.inline:
        return  # synthetic bounds and for-header declarations print elsewhere
    if d.kind == "array":
        lines.append(f"    int {d.name}[{d.length}];")
    else:
        lines.append(f"    int {d.name};")


def emit_function(fn: FunctionDef, lines: list[str]) -> None:
    params = ", ".join(f"int {p}" for p in fn.params)
    lines.append(f"{fn.ret_type} {fn.name}({params}) {{")
    for d in fn.locals:
        _emit_decl(d, lines)
    emit_body(fn.body, 1, lines)
    lines.append("}")


def emit(program: Program) -> str:
    """Render a program back to compilable subset source."""
    lines: list[str] = []
    for k, fn in enumerate(program.functions):
        if k:
            lines.append("")
        emit_function(fn, lines)
    return "\n".join(lines) + "\n"
