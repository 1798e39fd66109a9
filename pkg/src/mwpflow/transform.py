"""Source-to-source loop rewrites: quasi-invariant hoisting and fission.

Hoisting peels the first D iterations of a loop (D = the largest finite
invariance degree), dropping statements from each successive peel once
their values have settled, and leaves a residual loop holding only the
never-settling statements and the control kernel.  Fission splits a loop
into one clone per dependence-connected group of its body, cloning the
control kernel into every piece.
"""

from __future__ import annotations

import copy
import itertools
import math
from dataclasses import dataclass
from typing import Optional, Union

from .depgraph import (
    NoSplit,
    control_kernel,
    fission_plan,
    invariance_degrees,
    kernel_written,
    plan_is_legal,
    use_def,
)
from .parser import validate
from .syntax import (
    Assign,
    BinOp,
    Block,
    BoolOp,
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
    Span,
    Stmt,
    Var,
    VarDecl,
    While,
    child_bodies,
    expr_vars,
    iter_stmts,
    map_expr,
    renumber,
)

Loop = Union[While, ForCounted]


class NothingToHoist(Exception):
    """No statement in the loop body ever settles."""


@dataclass
class Rewrite:
    kind: str  # hoist | fission
    function: str
    loop_span: Span
    report: dict


def _fresh_name(fn: FunctionDef, prefix: str) -> str:
    taken = set(fn.var_names())
    k = 0
    while f"{prefix}{k}" in taken:
        k += 1
    return f"{prefix}{k}"


def _copy_stmts(stmts: list[Stmt]) -> list[Stmt]:
    return [copy.deepcopy(s) for s in stmts]


def _span_obj(span: Span) -> list[int]:
    return [span.line, span.col]


def _subst_var_expr(e: Expr, name: str, replacement: Expr) -> Expr:
    def swap(node: Expr) -> Expr:
        if isinstance(node, Var) and node.name == name:
            return copy.deepcopy(replacement)
        return node

    return map_expr(e, swap)


def _subst_var_cond(c: Cond, name: str, replacement: Expr) -> Cond:
    match c:
        case Cmp(op=op, left=l, right=r, span=sp):
            return Cmp(op, _subst_var_expr(l, name, replacement), _subst_var_expr(r, name, replacement), sp)
        case BoolOp(op=op, left=l, right=r, span=sp):
            return BoolOp(op, _subst_var_cond(l, name, replacement), _subst_var_cond(r, name, replacement), sp)
        case Not(operand=o, span=sp):
            return Not(_subst_var_cond(o, name, replacement), sp)
        case ExprCond(expr=e, span=sp):
            return ExprCond(_subst_var_expr(e, name, replacement), sp)
    raise TypeError(f"unknown condition node {c!r}")


def _subst_var_stmt(s: Stmt, name: str, replacement: Expr) -> None:
    """Replace reads of `name` in place; `name` is never written here."""
    match s:
        case Assign():
            if s.index is not None:
                s.index = _subst_var_expr(s.index, name, replacement)
            s.value = _subst_var_expr(s.value, name, replacement)
        case If():
            s.cond = _subst_var_cond(s.cond, name, replacement)
        case While():
            s.cond = _subst_var_cond(s.cond, name, replacement)
        case ForCounted():
            s.init = _subst_var_expr(s.init, name, replacement)
    for body in child_bodies(s):
        for child in body:
            _subst_var_stmt(child, name, replacement)
    if hasattr(s, "args"):
        s.args = [_subst_var_expr(a, name, replacement) for a in s.args]


def _add_const(e: Expr, k: int) -> Expr:
    if k == 0:
        return copy.deepcopy(e)
    return BinOp("+", copy.deepcopy(e), Const(k))


def _bound_expr(loop: ForCounted) -> Expr:
    if loop.bound_literal is not None:
        return Const(loop.bound_literal)
    return Var(loop.bound)


def _degree_report(degrees: dict[int, Union[int, float]]) -> dict[str, Union[int, str]]:
    return {
        str(sid): ("inf" if d == math.inf else int(d))
        for sid, d in sorted(degrees.items())
    }


def hoist_loop(loop: Loop, fn: FunctionDef) -> tuple[list[Stmt], dict, Optional[Loop]]:
    """Peel settling statements out of a loop.

    Returns the replacement statements, a report, and the residual loop
    node inside the replacement (None when a counted loop settles
    entirely and is eliminated).  Raises NothingToHoist when every chunk
    has infinite degree.
    """
    degrees = invariance_degrees(loop)
    finite = {sid: int(d) for sid, d in degrees.items() if d != math.inf}
    if not finite:
        raise NothingToHoist("every statement in the loop keeps changing")
    max_degree = max(finite.values())
    kernel = control_kernel(loop)

    def peel_members(k: int) -> list[Stmt]:
        return [
            s
            for s in loop.body
            if s.sid in kernel or degrees[s.sid] == math.inf or degrees[s.sid] >= k
        ]

    residual_members = [
        s for s in loop.body if s.sid in kernel or degrees[s.sid] == math.inf
    ]
    report = {
        "kind": "hoist",
        "loop_span": _span_obj(loop.span),
        "max_degree": max_degree,
        "degrees": _degree_report(degrees),
        "hoisted": sorted(finite),
        "residual": [s.sid for s in residual_members],
    }

    if isinstance(loop, While):
        replacement: list[Stmt] = []
        for k in range(1, max_degree + 1):
            replacement.append(
                If(copy.deepcopy(loop.cond), _copy_stmts(peel_members(k)), [], span=loop.span)
            )
        residual = While(copy.deepcopy(loop.cond), _copy_stmts(residual_members), span=loop.span)
        replacement.append(residual)
        return replacement, report, residual

    # Counted loop.  The counter may only be read by never-settling
    # statements; peels substitute the concrete offset for it so the
    # fast path carries no counter bookkeeping at all.
    decl = fn.decl(loop.counter)
    if decl is not None and decl.inline:
        decl.inline = False  # counter assignments now appear outside a header

    body_defs: set[str] = set()
    for s in loop.body:
        body_defs |= use_def(s).defs
    init_stable = not (expr_vars(loop.init) & body_defs)
    counter_as_bound = any(
        isinstance(s, ForCounted) and s.bound == loop.counter
        for s in iter_stmts(loop.body)
    )

    if init_stable and not counter_as_bound:
        residual: Optional[ForCounted] = None
        if residual_members:
            residual = ForCounted(
                loop.counter,
                _add_const(loop.init, max_degree),
                loop.bound,
                _copy_stmts(residual_members),
                bound_literal=loop.bound_literal,
                counter_inline=False,
                span=loop.span,
            )
            current: list[Stmt] = [residual]
        else:
            # Every statement settles: the loop disappears and only the
            # counter's exit value remains.
            current = [Assign(loop.counter, None, _bound_expr(loop), span=loop.span)]
        for k in range(max_degree, 0, -1):
            offset = _add_const(loop.init, k - 1)
            peel = _copy_stmts(peel_members(k))
            for s in peel:
                _subst_var_stmt(s, loop.counter, offset)
            guard = Cmp("<", _add_const(loop.init, k - 1), _bound_expr(loop))
            restore = [Assign(loop.counter, None, _add_const(loop.init, k - 1), span=loop.span)]
            current = [If(guard, peel + current, restore, span=loop.span)]
        return current, report, residual

    # Fallback: drive the counter explicitly through the peels.
    replacement = [Assign(loop.counter, None, copy.deepcopy(loop.init), span=loop.span)]
    for k in range(1, max_degree + 1):
        guard = Cmp("<", Var(loop.counter), _bound_expr(loop))
        step = Assign(
            loop.counter, None, BinOp("+", Var(loop.counter), Const(1)), span=loop.span
        )
        replacement.append(If(guard, _copy_stmts(peel_members(k)) + [step], [], span=loop.span))
    if not residual_members:
        guard = Cmp("<", Var(loop.counter), _bound_expr(loop))
        replacement.append(
            If(guard, [Assign(loop.counter, None, _bound_expr(loop), span=loop.span)], [], span=loop.span)
        )
        return replacement, report, None
    residual = ForCounted(
        loop.counter,
        Var(loop.counter),
        loop.bound,
        _copy_stmts(residual_members),
        bound_literal=loop.bound_literal,
        counter_inline=False,
        span=loop.span,
    )
    replacement.append(residual)
    return replacement, report, residual


def fission_loop(loop: Loop, fn: FunctionDef, pragmas: bool = False) -> tuple[list[Stmt], dict]:
    """Split a loop into one clone per dependence-connected body group."""
    plan = fission_plan(loop)
    if not plan_is_legal(plan):
        raise NoSplit("split would reorder a dependence")
    groups = plan.groups
    kernel = set(plan.kernel)
    wrap = pragmas and plan.independent

    clones: list[Loop] = []
    if isinstance(loop, ForCounted):
        for members in groups:
            keep = set(members)
            body = _copy_stmts([s for s in loop.body if s.sid in keep])
            clones.append(
                ForCounted(
                    loop.counter,
                    copy.deepcopy(loop.init),
                    loop.bound,
                    body,
                    bound_literal=loop.bound_literal,
                    counter_inline=loop.counter_inline,
                    span=loop.span,
                )
            )
        replacement: list[Stmt] = list(clones)
    else:
        kvars = sorted(kernel_written(loop, kernel))
        temps = {}
        for v in kvars:
            temp = _fresh_name(fn, "__fis")
            fn.locals.append(VarDecl(temp, "scalar", span=loop.span))
            temps[v] = temp
        replacement = [
            Assign(temps[v], None, Var(v), span=loop.span) for v in kvars
        ]
        for g, members in enumerate(groups):
            keep = set(members) | kernel
            if g:
                replacement.extend(
                    Assign(v, None, Var(temps[v]), span=loop.span) for v in kvars
                )
            body = _copy_stmts([s for s in loop.body if s.sid in keep])
            clone = While(copy.deepcopy(loop.cond), body, span=loop.span)
            clones.append(clone)
            replacement.append(clone)

    report = {
        "kind": "fission",
        "loop_span": _span_obj(loop.span),
        "groups": [list(members) for members in groups],
        "pragma": bool(wrap),
    }
    if wrap:
        for clone in clones:
            clone.pragmas = ("#pragma omp section",)
        wrapped = Block(replacement, span=loop.span, pragmas=("#pragma omp parallel sections",))
        return [wrapped], report
    return replacement, report


def _replace_node(body: list[Stmt], target: Stmt, replacement: list[Stmt]) -> bool:
    for k, s in enumerate(body):
        if s is target:
            body[k : k + 1] = replacement
            return True
        for child in child_bodies(s):
            if _replace_node(child, target, replacement):
                return True
    return False


def apply_all(
    program: Program,
    hoist: bool = True,
    fission: bool = True,
    pragmas: bool = False,
) -> tuple[Program, list[Rewrite]]:
    """Rewrite every loop bottom-up; inner loops first, hoist before fission.

    Returns a fresh program (the input is untouched) and the rewrite
    reports in application order.
    """
    out = copy.deepcopy(program)
    rewrites: list[Rewrite] = []
    next_sid = itertools.count(
        max((st.sid for f in out.functions for st in iter_stmts(f.body)), default=0) + 1
    )

    def refresh(stmts: list[Stmt]) -> None:
        # Copies and constructed nodes carry stale or -1 sids; an enclosing
        # loop analyzed later must see unique ones.
        for node in iter_stmts(stmts):
            node.sid = next(next_sid)

    def process(body: list[Stmt], fn: FunctionDef) -> list[Stmt]:
        result: list[Stmt] = []
        for s in body:
            for child in child_bodies(s):
                child[:] = process(child, fn)
            if not isinstance(s, (While, ForCounted)):
                result.append(s)
                continue
            replacement = [s]
            fission_target: Optional[Loop] = s
            if hoist:
                try:
                    replacement, report, residual = hoist_loop(s, fn)
                    rewrites.append(Rewrite("hoist", fn.name, s.span, report))
                    fission_target = residual
                    refresh(replacement)
                except NothingToHoist:
                    pass
            if fission and fission_target is not None:
                try:
                    split, report = fission_loop(fission_target, fn, pragmas)
                    rewrites.append(Rewrite("fission", fn.name, fission_target.span, report))
                    if len(replacement) == 1 and replacement[0] is fission_target:
                        replacement = split
                    elif not _replace_node(replacement, fission_target, split):
                        raise RuntimeError("residual loop vanished during rewriting")
                    refresh(replacement)
                except NoSplit:
                    pass
            result.extend(replacement)
        return result

    for fn in out.functions:
        fn.body[:] = process(fn.body, fn)
    renumber(out)
    validate(out)
    return out, rewrites
