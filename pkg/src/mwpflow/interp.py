"""Big-step interpreter with exact integers and growth probing.

Execution is metered two ways.  `steps` counts executed simple statements
(assignments, call assignments, returns); branch tests and loop bookkeeping
are free, so step counts compare the real work of a program against its
rewritten form.  `fuel` is the anti-hang budget: it also ticks once per
loop iteration, and running out raises FuelExhausted.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Mapping, Optional, Sequence, Union

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
    Span,
    Stmt,
    Var,
    While,
)

Value = Union[int, list]


class InterpError(Exception):
    def __init__(self, span: Span, message: str):
        super().__init__(message)
        self.span = span
        self.message = message

    def render(self, path: str) -> str:
        return f"{path}:{self.span.line}:{self.span.col}: {self.message}"


class FuelExhausted(InterpError):
    pass


class IndexOutOfBounds(InterpError):
    pass


class UninitializedRead(InterpError):
    pass


class InputMismatch(InterpError):
    pass


@dataclass
class RunResult:
    store: dict[str, Value]
    steps: int
    max_abs: dict[str, int]


class _Halt(Exception):
    """Internal signal: the current function executed a return."""

    def __init__(self, value: Optional[int]):
        self.value = value


class _Machine:
    def __init__(self, program: Program, fuel: int):
        self.program = program
        self.fuel = fuel
        self.steps = 0

    def burn(self, span: Span) -> None:
        if self.fuel <= 0:
            raise FuelExhausted(span, "fuel exhausted")
        self.fuel -= 1

    def call(
        self,
        fn: FunctionDef,
        args: Sequence[int],
        extra_inputs: Optional[Mapping[str, Value]] = None,
        tracked: bool = False,
    ) -> tuple[Optional[int], dict[str, Value], dict[str, int]]:
        frame: dict[str, Value] = {}
        max_abs: dict[str, int] = {}

        def note(name: str, value: Value) -> None:
            if not tracked:
                return
            if isinstance(value, list):
                peak = max((abs(v) for v in value if v is not None), default=0)
            else:
                peak = abs(value)
            if peak > max_abs.get(name, -1):
                max_abs[name] = peak

        for p, a in zip(fn.params, args):
            frame[p] = a
            note(p, a)
        for d in fn.locals:
            if d.kind == "array":
                if isinstance(d.length, str):
                    length = frame[d.length]
                    if not isinstance(length, int) or length < 0:
                        raise InputMismatch(d.span, f"array {d.name!r} has invalid length {length!r}")
                else:
                    length = d.length
                frame[d.name] = [None] * length
            elif d.kind == "const":
                frame[d.name] = d.value
                note(d.name, d.value)
            else:
                frame[d.name] = None
        if extra_inputs:
            for name, value in extra_inputs.items():
                if name not in frame:
                    raise InputMismatch(fn.span, f"{name!r} is not a variable of {fn.name!r}")
                if isinstance(frame[name], list):
                    if not isinstance(value, list) or len(value) != len(frame[name]):
                        raise InputMismatch(
                            fn.span,
                            f"array {name!r} expects {len(frame[name])} element(s)",
                        )
                    frame[name] = [int(v) for v in value]
                else:
                    frame[name] = int(value)
                note(name, frame[name])

        def read_scalar(name: str, span: Span) -> int:
            v = frame[name]
            if v is None:
                raise UninitializedRead(span, f"{name!r} read before assignment")
            return v

        def eval_expr(e: Expr) -> int:
            match e:
                case Const(value=v):
                    return v
                case Var(name=n, span=sp):
                    return read_scalar(n, sp)
                case ArrayRead(array=a, index=i, span=sp):
                    arr = frame[a]
                    idx = eval_expr(i)
                    if not 0 <= idx < len(arr):
                        raise IndexOutOfBounds(sp, f"{a}[{idx}] is out of bounds (length {len(arr)})")
                    cell = arr[idx]
                    if cell is None:
                        raise UninitializedRead(sp, f"{a}[{idx}] read before assignment")
                    return cell
                case BinOp(op=op, left=l, right=r):
                    lv, rv = eval_expr(l), eval_expr(r)
                    if op == "+":
                        return lv + rv
                    if op == "-":
                        return lv - rv
                    return lv * rv
            raise InterpError(getattr(e, "span", Span(0, 0)), f"unknown expression node {e!r}")

        def eval_cond(c: Cond) -> bool:
            match c:
                case Cmp(op=op, left=l, right=r):
                    lv, rv = eval_expr(l), eval_expr(r)
                    return {
                        "<": lv < rv,
                        "<=": lv <= rv,
                        ">": lv > rv,
                        ">=": lv >= rv,
                        "==": lv == rv,
                        "!=": lv != rv,
                    }[op]
                case BoolOp(op=op, left=l, right=r):
                    if op == "&&":
                        return eval_cond(l) and eval_cond(r)
                    return eval_cond(l) or eval_cond(r)
                case Not(operand=o):
                    return not eval_cond(o)
                case ExprCond(expr=e):
                    return eval_expr(e) != 0
            raise InterpError(getattr(c, "span", Span(0, 0)), f"unknown condition node {c!r}")

        def write(name: str, value: int, span: Span) -> None:
            frame[name] = value
            note(name, value)

        def exec_body(body: list[Stmt]) -> None:
            for s in body:
                exec_stmt(s)

        def exec_stmt(s: Stmt) -> None:
            self.burn(s.span)
            match s:
                case Assign(target=t, index=None, value=v, span=sp):
                    write(t, eval_expr(v), sp)
                    self.steps += 1
                case Assign(target=t, index=idx, value=v, span=sp):
                    arr = frame[t]
                    i = eval_expr(idx)
                    if not 0 <= i < len(arr):
                        raise IndexOutOfBounds(sp, f"{t}[{i}] is out of bounds (length {len(arr)})")
                    arr[i] = eval_expr(v)
                    note(t, arr)
                    self.steps += 1
                case CallAssign(target=t, callee=c, args=args, span=sp):
                    callee = self.program.function(c)
                    values = [eval_expr(a) for a in args]
                    result, _, _ = self.call(callee, values)
                    if result is None:
                        raise InterpError(sp, f"{c!r} returned no value")
                    write(t, result, sp)
                    self.steps += 1
                case If(cond=c, then=then, orelse=orelse):
                    if eval_cond(c):
                        exec_body(then)
                    else:
                        exec_body(orelse)
                case While(cond=c, body=b, span=sp):
                    while True:
                        self.burn(sp)
                        if not eval_cond(c):
                            break
                        exec_body(b)
                case ForCounted(counter=i, init=init, bound=bvar, body=b, span=sp):
                    write(i, eval_expr(init), sp)
                    bound = read_scalar(bvar, sp)
                    while True:
                        self.burn(sp)
                        if not frame[i] < bound:
                            break
                        exec_body(b)
                        write(i, frame[i] + 1, sp)
                case Return(var=v):
                    self.steps += 1
                    raise _Halt(None if v is None else read_scalar(v, s.span))
                case Block(body=b):
                    exec_body(b)
                case _:
                    raise InterpError(s.span, f"unknown statement node {s!r}")

        result: Optional[int] = None
        try:
            exec_body(fn.body)
        except _Halt as halt:
            result = halt.value
        return result, frame, max_abs


def run(
    program: Program,
    entry: str = "main",
    inputs: Optional[Mapping[str, Value]] = None,
    fuel: int = 10**6,
) -> RunResult:
    """Execute `entry` and report its final store, step count, and peaks.

    Scalar parameters default to 0 unless overridden through `inputs`;
    `inputs` may also seed local scalars and arrays by name.
    """
    fn = program.function(entry)
    if fn is None:
        raise InterpError(Span(0, 0), f"no function named {entry!r}")
    inputs = dict(inputs or {})
    args = [int(inputs.pop(p, 0)) for p in fn.params]
    machine = _Machine(program, fuel)
    _, frame, max_abs = machine.call(fn, args, extra_inputs=inputs, tracked=True)
    return RunResult(store=frame, steps=machine.steps, max_abs=max_abs)


@dataclass
class ProbeTable:
    """Peak absolute values per variable across geometric input scales."""

    entry: str
    scales: tuple[int, ...]
    rows: dict[str, list[int]] = field(default_factory=dict)

    def csv_lines(self) -> list[str]:
        head = "scale," + ",".join(sorted(self.rows))
        lines = [head]
        for k, s in enumerate(self.scales):
            lines.append(str(s) + "," + ",".join(str(self.rows[v][k]) for v in sorted(self.rows)))
        return lines


def growth_probe(
    program: Program,
    entry: str = "main",
    scales: Sequence[int] = (4, 8, 16, 32, 64),
    fuel: int = 10**7,
) -> ProbeTable:
    """Run `entry` with every scalar parameter set to each scale in turn."""
    fn = program.function(entry)
    if fn is None:
        raise InterpError(Span(0, 0), f"no function named {entry!r}")
    per_scale = []
    for scale in scales:
        result = run(program, entry, {p: scale for p in fn.params}, fuel=fuel)
        per_scale.append(result.max_abs)
    names = sorted(set().union(*per_scale)) if per_scale else []
    table = ProbeTable(entry=entry, scales=tuple(scales))
    table.rows = {n: [peaks.get(n, 0) for peaks in per_scale] for n in names}
    return table


def classify_growth(
    table: ProbeTable,
    slope_limit: float = 8.0,
    divergence_limit: float = 2.0,
) -> str:
    """Label probed growth: "polynomial" or "superpolynomial".

    On a log-log plot a degree-d polynomial settles near slope d; growth
    whose final slope is past `slope_limit`, or whose slope keeps rising by
    more than `divergence_limit` across the scales, is not polynomial.
    """
    worst = "polynomial"
    for name, values in table.rows.items():
        pts = [
            (math.log(s), math.log(max(1, v)))
            for s, v in zip(table.scales, values)
        ]
        if len(pts) < 2:
            continue
        slopes = [
            (y2 - y1) / (x2 - x1)
            for (x1, y1), (x2, y2) in zip(pts, pts[1:])
            if x2 > x1
        ]
        if not slopes:
            continue
        if slopes[-1] > slope_limit or slopes[-1] - slopes[0] > divergence_limit:
            worst = "superpolynomial"
    return worst
