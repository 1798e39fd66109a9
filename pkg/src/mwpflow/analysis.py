"""Flow-matrix analysis: certify polynomial growth bounds per function.

Every statement gets a matrix over the function's variables; additive
expressions open a three-way choice point recorded as deltas on the matrix
entries.  A function is certified when at least one total choice assignment
evaluates its body matrix without INF; the feasible assignments are kept
compactly as partial assignments over the constrained choice points only.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from typing import Iterator, Mapping, Optional

from .algebra import (
    Matrix,
    Monomial,
    P_M,
    P_ZERO,
    Poly,
    Scalar,
    eval_matrix,
    mat_add,
    mat_id,
    mat_mul,
    mat_star,
    poly_add,
    poly_mul,
    poly_scale,
)
from .syntax import (
    ArrayRead,
    Assign,
    BinOp,
    Block,
    CallAssign,
    Const,
    Expr,
    ForCounted,
    FunctionDef,
    If,
    Program,
    Return,
    Span,
    Stmt,
    Var,
    While,
    expr_vars,
)

FEASIBLE_CAP = 19683  # 3**9 partial assignments kept before truncating


class AnalysisError(Exception):
    pass


class UnknownCallee(AnalysisError):
    pass


class ArityMismatch(AnalysisError):
    pass


class InfeasibleChoice(AnalysisError):
    pass


class ChoiceAllocator:
    """Hands out choice point indices in expression post-order."""

    def __init__(self) -> None:
        self.spans: list[Span] = []

    @property
    def count(self) -> int:
        return len(self.spans)

    def fresh(self, span: Span) -> int:
        self.spans.append(span)
        return len(self.spans) - 1


def _with_delta(p: Poly, choice: int, index: int) -> Poly:
    guard = Poly((Monomial(Scalar.M, ((choice, index),)),))
    return poly_mul(guard, p)


def _vec_add(a: dict[str, Poly], b: dict[str, Poly]) -> dict[str, Poly]:
    out = dict(a)
    for v, p in b.items():
        out[v] = poly_add(out[v], p) if v in out else p
    return out


def _vec_scale(s: Scalar, vec: Mapping[str, Poly]) -> dict[str, Poly]:
    if s is Scalar.ZERO:
        return {}
    return {v: poly_scale(s, p) for v, p in vec.items()}


def analyze_expr(e: Expr, alloc: ChoiceAllocator) -> dict[str, Poly]:
    """Flow of each variable into the value of `e`, as a sparse vector."""
    match e:
        case Const():
            return {}
        case Var(name=n):
            return {n: P_M}
        case ArrayRead(array=a, index=idx):
            vec = {v: Poly.const(Scalar.W) for v in sorted(expr_vars(idx))}
            return _vec_add(vec, {a: P_M})
        case BinOp(op=op, left=l, right=r, span=sp):
            v1 = analyze_expr(l, alloc)
            v2 = analyze_expr(r, alloc)
            if op == "*":
                return _vec_add(_vec_scale(Scalar.W, v1), _vec_scale(Scalar.W, v2))
            j = alloc.fresh(sp)
            out: dict[str, Poly] = {}
            for choice, (w1, w2) in enumerate(
                ((Scalar.M, Scalar.P), (Scalar.P, Scalar.M), (Scalar.W, Scalar.W))
            ):
                part = _vec_add(_vec_scale(w1, v1), _vec_scale(w2, v2))
                out = _vec_add(out, {v: _with_delta(p, choice, j) for v, p in part.items()})
            return out
    raise AnalysisError(f"unknown expression node {e!r}")


@dataclass(frozen=True)
class FunctionSummary:
    """Constant flow from each parameter into the returned value."""

    params: tuple[str, ...]
    result: tuple[Scalar, ...]
    side_effect_free: bool = True

    def flow(self, param: str) -> Scalar:
        return self.result[self.params.index(param)]


@dataclass(frozen=True)
class FeasibleSet:
    """Choice assignments that evaluate a matrix without INF.

    Only constrained points (those named by INF-guarding deltas) are pinned;
    every unconstrained point may take any choice.  An empty `assignments`
    means no assignment works; a single empty assignment means all do.
    """

    choice_count: int
    constrained: tuple[int, ...]
    assignments: tuple[tuple[tuple[int, int], ...], ...]
    truncated: bool = False

    @property
    def is_empty(self) -> bool:
        return not self.assignments

    @property
    def all_free(self) -> bool:
        return self.assignments == ((),)

    def first_full(self) -> Optional[dict[int, int]]:
        if self.is_empty:
            return None
        sigma = {i: 0 for i in range(self.choice_count)}
        sigma.update(dict(self.assignments[0]))
        return sigma

    def iter_full(self) -> Iterator[dict[int, int]]:
        """All total assignments (use only for small choice counts)."""
        free = [i for i in range(self.choice_count) if i not in set(self.constrained)]
        for partial in self.assignments:
            base = dict(partial)
            for combo in itertools.product((0, 1, 2), repeat=len(free)):
                sigma = dict(base)
                sigma.update(zip(free, combo))
                yield sigma

    def admits(self, deltas: tuple[tuple[int, int], ...]) -> bool:
        """Whether some feasible assignment turns all these deltas on."""
        for partial in self.assignments:
            pa = dict(partial)
            if all(pa.get(i, c) == c for c, i in deltas):
                return True
        return False

    def to_obj(self):
        if self.is_empty:
            return "none"
        return [[[i, c] for i, c in sorted(pa)] for pa in self.assignments]


def feasible_choices(matrix: Matrix, choice_count: int) -> FeasibleSet:
    """Enumerate (with pruning) the assignments that avoid every INF monomial."""
    inf_sets: set[frozenset[tuple[int, int]]] = set()
    for row in matrix.rows:
        for p in row:
            for m in p.monos:
                if m.coeff is Scalar.INF:
                    inf_sets.add(frozenset(m.deltas))
    if frozenset() in inf_sets:
        return FeasibleSet(choice_count, (), ())
    minimal = [
        s for s in inf_sets if not any(o < s for o in inf_sets)
    ]
    constrained = sorted({i for s in minimal for _, i in s})
    if not constrained:
        return FeasibleSet(choice_count, (), ((),))

    sets = [dict((i, c) for c, i in s) for s in minimal]
    found: list[tuple[tuple[int, int], ...]] = []
    truncated = False

    def dfs(k: int, partial: dict[int, int]) -> bool:
        if len(found) >= FEASIBLE_CAP:
            return False
        for s in sets:
            if all(i in partial and partial[i] == c for i, c in s.items()):
                return True  # this branch fires an INF monomial: abandon it
        if k == len(constrained):
            found.append(tuple(sorted(partial.items())))
            return True
        idx = constrained[k]
        for choice in (0, 1, 2):
            partial[idx] = choice
            if not dfs(k + 1, partial):
                del partial[idx]
                return False
            del partial[idx]
        return True

    if not dfs(0, {}):
        truncated = True
    return FeasibleSet(choice_count, tuple(constrained), tuple(found), truncated)


@dataclass
class BoundReport:
    """Per-variable growth bound under one fixed choice assignment."""

    targets: tuple[str, ...]
    m_set: dict[str, tuple[str, ...]]
    w_set: dict[str, tuple[str, ...]]
    p_set: dict[str, tuple[str, ...]]

    def render(self, var: str) -> str:
        max_args = list(self.m_set[var])
        if self.w_set[var]:
            max_args.append("poly(" + ", ".join(self.w_set[var]) + ")")
        parts = []
        if max_args:
            parts.append("max(" + ", ".join(max_args) + ")")
        if self.p_set[var]:
            parts.append("poly(" + ", ".join(self.p_set[var]) + ")")
        body = " + ".join(parts) if parts else "0"
        return f"{var}' <= {body}"

    def lines(self) -> list[str]:
        return [self.render(v) for v in self.targets]


def bound_report(matrix: Matrix, sigma: Mapping[int, int]) -> BoundReport:
    grid = eval_matrix(matrix, sigma)
    n = len(matrix.vars)
    m_set: dict[str, tuple[str, ...]] = {}
    w_set: dict[str, tuple[str, ...]] = {}
    p_set: dict[str, tuple[str, ...]] = {}
    for j, target in enumerate(matrix.vars):
        ms, ws, ps = [], [], []
        for i in range(n):
            cls = grid[i][j]
            if cls is Scalar.INF:
                raise InfeasibleChoice(
                    f"assignment evaluates ({matrix.vars[i]}, {target}) to INF"
                )
            if cls is Scalar.M:
                ms.append(matrix.vars[i])
            elif cls is Scalar.W:
                ws.append(matrix.vars[i])
            elif cls is Scalar.P:
                ps.append(matrix.vars[i])
        m_set[target] = tuple(ms)
        w_set[target] = tuple(ws)
        p_set[target] = tuple(ps)
    return BoundReport(matrix.vars, m_set, w_set, p_set)


@dataclass
class AnalysisResult:
    function: str
    vars: tuple[str, ...]
    matrix: Matrix
    choice_count: int
    choice_spans: tuple[Span, ...]
    feasible: FeasibleSet
    bounds: Optional[BoundReport]  # under the first feasible assignment

    @property
    def certified(self) -> bool:
        return not self.feasible.is_empty


class _FunctionAnalyzer:
    def __init__(self, fn: FunctionDef, summaries: Mapping[str, Optional[FunctionSummary]]):
        self.fn = fn
        self.vars = tuple(fn.var_names())
        self.summaries = summaries
        self.alloc = ChoiceAllocator()

    def identity(self) -> Matrix:
        return mat_id(self.vars)

    def analyze_body(self, body: list[Stmt]) -> Matrix:
        total = self.identity()
        for s in body:
            total = mat_mul(total, self.analyze_stmt(s))
        return total

    def analyze_stmt(self, s: Stmt) -> Matrix:
        match s:
            case Assign(target=t, index=None, value=v):
                m = self.identity()
                m.set_column(t, analyze_expr(v, self.alloc))
                return m
            case Assign(target=t, index=_, value=v):
                vec = _vec_add(analyze_expr(v, self.alloc), {t: P_M})
                m = self.identity()
                m.set_column(t, vec)
                return m
            case CallAssign(target=t, callee=c, args=args, span=sp):
                summary = self.summaries.get(c)
                if c not in self.summaries:
                    raise UnknownCallee(f"{sp}: call to unknown function {c!r}")
                if summary is None:
                    raise UnknownCallee(f"{sp}: {c!r} has no return value to bind")
                if len(args) != len(summary.params):
                    raise ArityMismatch(
                        f"{sp}: {c!r} takes {len(summary.params)} argument(s), got {len(args)}"
                    )
                vec: dict[str, Poly] = {}
                for param, flow, arg in zip(summary.params, summary.result, args):
                    vec = _vec_add(vec, _vec_scale(flow, analyze_expr(arg, self.alloc)))
                m = self.identity()
                m.set_column(t, vec)
                return m
            case If(then=then, orelse=orelse):
                return mat_add(self.analyze_body(then), self.analyze_body(orelse))
            case While(body=body):
                inner = self.analyze_body(body)
                star = mat_star(inner)
                return self._inject_while(star)
            case ForCounted() as loop:
                inner = self.analyze_body(loop.body)
                star = mat_star(inner)
                corrected = self._inject_counted(star, loop.bound)
                init_m = self.identity()
                init_m.set_column(loop.counter, analyze_expr(loop.init, self.alloc))
                return mat_mul(init_m, corrected)
            case Return():
                return self.identity()
            case Block(body=body):
                return self.analyze_body(body)
        raise AnalysisError(f"unknown statement node {s!r}")

    def _inject_while(self, star: Matrix) -> Matrix:
        out = star.copy()
        n = len(self.vars)
        for i in range(n):
            for j in range(n):
                extra = [
                    Monomial(Scalar.INF, m.deltas)
                    for m in star.rows[i][j].monos
                    if (i == j and m.coeff not in (Scalar.ZERO, Scalar.M))
                    or m.coeff is Scalar.P
                ]
                if extra:
                    out.rows[i][j] = poly_add(out.rows[i][j], Poly.of(extra))
        return out

    def _inject_counted(self, star: Matrix, bound: str) -> Matrix:
        out = star.copy()
        n = len(self.vars)
        row_b = out.index[bound]
        for j in range(n):
            correction: list[Monomial] = []
            for i in range(n):
                poly = star.rows[i][j]
                extra = [
                    Monomial(Scalar.INF, m.deltas)
                    for m in poly.monos
                    if i == j and m.coeff not in (Scalar.ZERO, Scalar.M)
                ]
                if extra:
                    out.rows[i][j] = poly_add(out.rows[i][j], Poly.of(extra))
                # >= P (not == P) so the correction commutes with choice
                # evaluation even where an INF monomial shadows a P one.
                correction.extend(
                    Monomial(Scalar.P, m.deltas)
                    for m in poly.monos
                    if m.coeff >= Scalar.P
                )
            if correction:
                out.rows[row_b][j] = poly_add(out.rows[row_b][j], Poly.of(correction))
        return out

    def run(self) -> tuple[AnalysisResult, Optional[FunctionSummary]]:
        matrix = self.analyze_body(self.fn.body)
        feasible = feasible_choices(matrix, self.alloc.count)
        bounds = None
        if not feasible.is_empty:
            bounds = bound_report(matrix, feasible.first_full())
        result = AnalysisResult(
            function=self.fn.name,
            vars=self.vars,
            matrix=matrix,
            choice_count=self.alloc.count,
            choice_spans=tuple(self.alloc.spans),
            feasible=feasible,
            bounds=bounds,
        )
        summary = self._summarize(matrix, feasible)
        return result, summary

    def _summarize(self, matrix: Matrix, feasible: FeasibleSet) -> Optional[FunctionSummary]:
        ret = self.fn.return_var
        if ret is None:
            return None
        params = tuple(self.fn.params)
        if feasible.is_empty:
            return FunctionSummary(params, tuple(Scalar.INF for _ in params))
        flows = []
        for p in params:
            entry = matrix.get(p, ret)
            best = Scalar.ZERO
            for m in entry.monos:
                if m.coeff > best and feasible.admits(m.deltas):
                    best = m.coeff
            flows.append(best)
        return FunctionSummary(params, tuple(flows))


def analyze_function(
    fn: FunctionDef, summaries: Mapping[str, Optional[FunctionSummary]]
) -> tuple[AnalysisResult, Optional[FunctionSummary]]:
    """Analyze one function against fixed callee summaries."""
    return _FunctionAnalyzer(fn, summaries).run()


def _call_graph(program: Program) -> dict[str, set[str]]:
    from .syntax import iter_stmts

    out: dict[str, set[str]] = {}
    for fn in program.functions:
        callees = {
            s.callee for s in iter_stmts(fn.body) if isinstance(s, CallAssign)
        }
        out[fn.name] = callees
    return out


def _recursive_functions(calls: dict[str, set[str]]) -> set[str]:
    """Functions on a call cycle (including direct self-calls)."""
    recursive: set[str] = set()
    for start in calls:
        stack = list(calls.get(start, ()))
        seen: set[str] = set()
        while stack:
            cur = stack.pop()
            if cur == start:
                recursive.add(start)
                break
            if cur in seen:
                continue
            seen.add(cur)
            stack.extend(calls.get(cur, ()))
    return recursive


def _join_summary(a: Optional[FunctionSummary], b: Optional[FunctionSummary]) -> Optional[FunctionSummary]:
    if a is None:
        return b
    if b is None:
        return a
    return FunctionSummary(
        a.params,
        tuple(max(x, y) for x, y in zip(a.result, b.result)),
    )


def _clamp_recursive(s: FunctionSummary) -> FunctionSummary:
    """Recursion cannot carry honest polynomial flow: P escalates to INF."""
    return FunctionSummary(
        s.params,
        tuple(Scalar.INF if f in (Scalar.P, Scalar.INF) else f for f in s.result),
    )


@dataclass
class ProgramAnalysis:
    results: dict[str, AnalysisResult]
    summaries: dict[str, Optional[FunctionSummary]]


def analyze_program(program: Program) -> ProgramAnalysis:
    """Analyze every function, resolving call summaries to a fixpoint."""
    calls = _call_graph(program)
    recursive = _recursive_functions(calls)
    summaries: dict[str, Optional[FunctionSummary]] = {}
    for fn in program.functions:
        if fn.return_var is None:
            summaries[fn.name] = None
        else:
            summaries[fn.name] = FunctionSummary(
                tuple(fn.params), tuple(Scalar.ZERO for _ in fn.params)
            )

    budget = 4 * sum(len(fn.params) + 1 for fn in program.functions) + 8
    for _ in range(budget):
        changed = False
        for fn in program.functions:
            if fn.return_var is None:
                continue
            _, computed = analyze_function(fn, summaries)
            merged = _join_summary(summaries[fn.name], computed)
            if fn.name in recursive:
                merged = _clamp_recursive(merged)
            if merged != summaries[fn.name]:
                summaries[fn.name] = merged
                changed = True
        if not changed:
            break
    else:
        raise AnalysisError("call summaries failed to stabilize within the iteration budget")

    results: dict[str, AnalysisResult] = {}
    for fn in program.functions:
        result, _ = analyze_function(fn, summaries)
        results[fn.name] = result
    return ProgramAnalysis(results=results, summaries=summaries)
