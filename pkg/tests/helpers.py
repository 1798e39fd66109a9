"""Shared oracles and generators for the test suite.

Everything here recomputes expected results from first principles instead
of calling back into the code under test: polynomials are evaluated one
monomial at a time, matrix laws run on plain scalar grids, and the
reference analyzer fixes every choice up front so none of the delta
bookkeeping is exercised.  Agreement between the two roads is the point.
"""

from __future__ import annotations

import itertools
import random
from pathlib import Path

from mwpflow.algebra import Matrix, Monomial, Poly, Scalar
from mwpflow.parser import parse
from mwpflow.syntax import (
    ArrayRead,
    Assign,
    BinOp,
    Block,
    CallAssign,
    Const,
    ForCounted,
    FunctionDef,
    If,
    Program,
    Return,
    Var,
    While,
    expr_vars,
)

CORPUS = Path(__file__).parent / "corpus"

SCALARS = (Scalar.ZERO, Scalar.M, Scalar.W, Scalar.P, Scalar.INF)


# ---------------------------------------------------------------------------
# Scalar semiring, written independently

def sadd(a: Scalar, b: Scalar) -> Scalar:
    return a if a >= b else b


def smul(a: Scalar, b: Scalar) -> Scalar:
    if a is Scalar.ZERO or b is Scalar.ZERO:
        return Scalar.ZERO
    return a if a >= b else b


def eval_poly_ref(p: Poly, sigma) -> Scalar:
    """Max coefficient over the monomials whose deltas all fire."""
    best = Scalar.ZERO
    for m in p.monos:
        if all(sigma[i] == c for c, i in m.deltas) and m.coeff > best:
            best = m.coeff
    return best


def eval_matrix_ref(a: Matrix, sigma) -> list[list[Scalar]]:
    return [[eval_poly_ref(p, sigma) for p in row] for row in a.rows]


# ---------------------------------------------------------------------------
# Scalar matrices as plain lists of lists

def smat_id(n: int) -> list[list[Scalar]]:
    return [[Scalar.M if i == j else Scalar.ZERO for j in range(n)] for i in range(n)]


def smat_add(a, b):
    n = len(a)
    return [[sadd(a[i][j], b[i][j]) for j in range(n)] for i in range(n)]


def smat_mul(a, b):
    n = len(a)
    out = [[Scalar.ZERO] * n for _ in range(n)]
    for i in range(n):
        for j in range(n):
            acc = Scalar.ZERO
            for k in range(n):
                acc = sadd(acc, smul(a[i][k], b[k][j]))
            out[i][j] = acc
    return out


def smat_star(a):
    """Least fixpoint of X = I + A X by plain iteration."""
    n = len(a)
    x = smat_id(n)
    while True:
        nxt = smat_add(smat_id(n), smat_mul(a, x))
        if nxt == x:
            return x
        x = nxt


# ---------------------------------------------------------------------------
# Random material for the algebra tests

def rand_sigma(rng: random.Random, count: int) -> dict[int, int]:
    return {i: rng.randrange(3) for i in range(count)}


def rand_monomial(rng: random.Random, max_index: int = 5) -> Monomial:
    coeff = rng.choice(SCALARS[1:])
    indices = rng.sample(range(max_index), rng.randrange(3))
    deltas = tuple(sorted(((rng.randrange(3), i) for i in indices), key=lambda d: d[1]))
    return Monomial(coeff, deltas)


def rand_poly(rng: random.Random, max_index: int = 5, max_monos: int = 4) -> Poly:
    return Poly.of(rand_monomial(rng, max_index) for _ in range(rng.randrange(max_monos + 1)))


def rand_matrix(rng: random.Random, nvars: int = 3, max_index: int = 5) -> Matrix:
    names = tuple(f"v{i}" for i in range(nvars))
    rows = [[rand_poly(rng, max_index, 3) for _ in range(nvars)] for _ in range(nvars)]
    return Matrix(names, rows)


def all_sigmas(count: int):
    """Every total assignment over `count` choice points."""
    for combo in itertools.product((0, 1, 2), repeat=count):
        yield dict(enumerate(combo))


# ---------------------------------------------------------------------------
# Reference analyzer: one fixed assignment, plain scalars throughout

class NaiveAnalyzer:
    """Re-runs the whole analysis with every choice decided up front.

    The traversal order matches the real analyzer statement for statement
    (body before init on counted loops, then-branch before else), so the
    k-th additive operator encountered consumes sigma[k].  Loop corrections
    are applied entry-wise on evaluated scalars.
    """

    def __init__(self, fn: FunctionDef, sigma, summaries=None):
        self.fn = fn
        self.names = tuple(fn.var_names())
        self.idx = {v: k for k, v in enumerate(self.names)}
        self.n = len(self.names)
        self.sigma = sigma
        self.summaries = summaries or {}
        self.used = 0

    # --- expressions -> flow vectors

    def _scale(self, s: Scalar, vec):
        if s is Scalar.ZERO:
            return {}
        return {v: smul(s, x) for v, x in vec.items()}

    @staticmethod
    def _join(a, b):
        out = dict(a)
        for v, x in b.items():
            out[v] = sadd(out.get(v, Scalar.ZERO), x)
        return out

    def expr_vec(self, e):
        match e:
            case Const():
                return {}
            case Var(name=name):
                return {name: Scalar.M}
            case ArrayRead(array=a, index=ix):
                vec = {v: Scalar.W for v in sorted(expr_vars(ix))}
                return self._join(vec, {a: Scalar.M})
            case BinOp(op="*", left=l, right=r):
                v1 = self.expr_vec(l)
                v2 = self.expr_vec(r)
                return self._join(self._scale(Scalar.W, v1), self._scale(Scalar.W, v2))
            case BinOp(left=l, right=r):
                v1 = self.expr_vec(l)
                v2 = self.expr_vec(r)
                choice = self.sigma[self.used]
                self.used += 1
                w1, w2 = (
                    (Scalar.M, Scalar.P),
                    (Scalar.P, Scalar.M),
                    (Scalar.W, Scalar.W),
                )[choice]
                return self._join(self._scale(w1, v1), self._scale(w2, v2))
        raise AssertionError(f"unknown expression {e!r}")

    # --- statements -> scalar matrices

    def _set_col(self, m, dst: str, vec) -> None:
        j = self.idx[dst]
        for i in range(self.n):
            m[i][j] = Scalar.ZERO
        for name, s in vec.items():
            m[self.idx[name]][j] = s

    def body_matrix(self, body):
        total = smat_id(self.n)
        for s in body:
            total = smat_mul(total, self.stmt_matrix(s))
        return total

    def stmt_matrix(self, s):
        match s:
            case Assign(target=t, index=None, value=v):
                m = smat_id(self.n)
                self._set_col(m, t, self.expr_vec(v))
                return m
            case Assign(target=t, value=v):
                vec = self._join(self.expr_vec(v), {t: Scalar.M})
                m = smat_id(self.n)
                self._set_col(m, t, vec)
                return m
            case CallAssign(target=t, callee=c, args=args):
                summary = self.summaries[c]
                vec = {}
                for param, flow, arg in zip(summary.params, summary.result, args):
                    vec = self._join(vec, self._scale(flow, self.expr_vec(arg)))
                m = smat_id(self.n)
                self._set_col(m, t, vec)
                return m
            case If(then=then, orelse=orelse):
                return smat_add(self.body_matrix(then), self.body_matrix(orelse))
            case While(body=body):
                star = smat_star(self.body_matrix(body))
                out = [row[:] for row in star]
                for i in range(self.n):
                    for j in range(self.n):
                        if (i == j and star[i][i] >= Scalar.W) or star[i][j] >= Scalar.P:
                            out[i][j] = Scalar.INF
                return out
            case ForCounted() as loop:
                star = smat_star(self.body_matrix(loop.body))
                out = [row[:] for row in star]
                b = self.idx[loop.bound]
                for j in range(self.n):
                    if any(star[i][j] >= Scalar.P for i in range(self.n)):
                        out[b][j] = sadd(out[b][j], Scalar.P)
                for i in range(self.n):
                    if star[i][i] >= Scalar.W:
                        out[i][i] = Scalar.INF
                init_m = smat_id(self.n)
                self._set_col(init_m, loop.counter, self.expr_vec(loop.init))
                return smat_mul(init_m, out)
            case Return():
                return smat_id(self.n)
            case Block(body=body):
                return self.body_matrix(body)
        raise AssertionError(f"unknown statement {s!r}")

    def run(self):
        return self.body_matrix(self.fn.body)


def grid_feasible(grid) -> bool:
    return all(s is not Scalar.INF for row in grid for s in row)


def sigma_admitted(feasible, sigma) -> bool:
    """Whether a feasible partial assignment agrees with this total one."""
    return any(all(sigma[i] == c for i, c in pa) for pa in feasible.assignments)


# ---------------------------------------------------------------------------
# Program inputs and corpus loading

def gen_inputs(fn: FunctionDef, rng: random.Random, trips=None) -> dict:
    """Random inputs for one function.

    Parameters starting with n or m act as trip counts and stay small
    (pass `trips` to pin them all); everything else is a signed byte-ish
    value.  Array locals are seeded to full length so reads never trip
    the uninitialized check.
    """
    inputs: dict = {}
    for p in fn.params:
        if p[0] in "nm":
            if trips is not None:
                inputs[p] = trips
            else:
                inputs[p] = rng.choice((0, 1, rng.randint(0, 24)))
        else:
            inputs[p] = rng.randint(-99, 99)
    for d in fn.locals:
        if d.kind == "array":
            length = inputs[d.length] if isinstance(d.length, str) else d.length
            inputs[d.name] = [rng.randint(-99, 99) for _ in range(length)]
    return inputs


def user_store(store: dict) -> dict:
    """Drop synthetic locals (loop bounds, fission counters)."""
    return {k: v for k, v in store.items() if not k.startswith("__")}


def load_corpus(prefix: str = "") -> list[tuple[str, Program]]:
    out = []
    for path in sorted(CORPUS.glob(f"{prefix}*.c")):
        out.append((path.name, parse(path.read_text(), str(path))))
    assert out, f"no corpus files match {prefix!r}"
    return out


def corpus_names(prefix: str = "") -> list[str]:
    return [p.name for p in sorted(CORPUS.glob(f"{prefix}*.c"))]


def has_calls(program: Program) -> bool:
    from mwpflow.syntax import iter_stmts

    return any(
        isinstance(s, CallAssign) for f in program.functions for s in iter_stmts(f.body)
    )


# ---------------------------------------------------------------------------
# Large-program generator for the performance test

def gen_large_program(statements: int = 1000, seed: int = 7, pool_size: int = 30) -> str:
    """Emit source with `statements` executable statements in main.

    Straight-line arithmetic over a fixed pool of locals plus a sprinkling
    of small counted loops.  Operand depth is capped: every right-hand
    side reads only parameters, constants, or values at most one
    assignment away from one.  Without the cap, chained additive choice
    points stack multiplicatively and matrix entries grow out of hand;
    with it, entries stay small no matter how long the program gets.
    """
    rng = random.Random(seed)
    pool = [f"v{i}" for i in range(pool_size)]
    params = ["a", "b"]
    depth: dict[str, int] = {}
    lines = ["void main(int n, int a, int b) {"]
    for v in pool:
        lines.append(f"    int {v} = {rng.randint(0, 9)};")
        depth[v] = 0
    emitted = len(pool)  # the initializers are assignments too
    loop_no = 0
    while emitted < statements:
        if emitted % 101 == 0 and statements - emitted > 4:
            x, y = rng.sample(pool, 2)
            p = rng.choice(params)
            lines.append(f"    for (int q{loop_no} = 0; q{loop_no} < n; q{loop_no}++) {{")
            lines.append(f"        {x} = {x} + {p};")
            lines.append(f"        {y} = {p} + {rng.randint(1, 9)};")
            lines.append("    }")
            depth[x] = 2
            depth[y] = 1
            loop_no += 1
            emitted += 2
            continue
        x = rng.choice(pool)
        shallow = [v for v in pool if depth[v] <= 1 and v != x]
        if rng.random() < 0.2 or not shallow:
            lines.append(f"    {x} = {rng.randint(0, 9)};")
            depth[x] = 0
        else:
            y = rng.choice(shallow + params * 3)
            z = rng.choice(shallow + params * 3)
            op = rng.choice("+-*")
            lines.append(f"    {x} = {y} {op} {z};")
            depth[x] = max(depth.get(y, 0), depth.get(z, 0)) + 1
        emitted += 1
    lines.append("}")
    return "\n".join(lines)
