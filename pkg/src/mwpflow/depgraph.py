"""Syntactic use/def sets, dependence graphs, invariance degrees, fission plans.

Loop bodies are analyzed as sequences of top-level chunks (a nested loop or
branch is one chunk).  Arrays are treated as aggregates: writing one element
both uses and defines the whole array.  The dependence relation is
symmetric across its three kinds (every flow edge has a matching anti edge
in the other direction, output edges pair up likewise), which is why the
splittable groups below come out as connected components.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional, Union

from .syntax import (
    Assign,
    Block,
    CallAssign,
    ForCounted,
    If,
    Return,
    Stmt,
    While,
    cond_vars,
    expr_vars,
)


class NoSplit(Exception):
    """The loop body does not separate into two or more groups."""


@dataclass(frozen=True)
class UseDef:
    uses: frozenset[str]
    defs: frozenset[str]


def use_def(s: Stmt) -> UseDef:
    """Variables a statement reads and writes, arrays as aggregates."""
    match s:
        case Assign(target=t, index=None, value=v):
            return UseDef(frozenset(expr_vars(v)), frozenset({t}))
        case Assign(target=t, index=idx, value=v):
            uses = expr_vars(idx) | expr_vars(v) | {t}
            return UseDef(frozenset(uses), frozenset({t}))
        case CallAssign(target=t, args=args):
            uses: set[str] = set()
            for a in args:
                uses |= expr_vars(a)
            return UseDef(frozenset(uses), frozenset({t}))
        case If(cond=c, then=then, orelse=orelse):
            uses = cond_vars(c)
            defs: set[str] = set()
            for child in (*then, *orelse):
                ud = use_def(child)
                uses |= ud.uses
                defs |= ud.defs
            return UseDef(frozenset(uses), frozenset(defs))
        case While(cond=c, body=body):
            uses = cond_vars(c)
            defs = set()
            for child in body:
                ud = use_def(child)
                uses |= ud.uses
                defs |= ud.defs
            return UseDef(frozenset(uses), frozenset(defs))
        case ForCounted(counter=ctr, init=init, bound=b, body=body):
            # The chunk re-initializes its own counter before the body runs,
            # so body reads of it are not inputs; init reads still are.
            inner: set[str] = set()
            defs = {ctr}
            for child in body:
                ud = use_def(child)
                inner |= ud.uses
                defs |= ud.defs
            uses = expr_vars(init) | {b} | (inner - {ctr})
            return UseDef(frozenset(uses), frozenset(defs))
        case Return(var=v):
            return UseDef(frozenset() if v is None else frozenset({v}), frozenset())
        case Block(body=body):
            uses, defs = set(), set()
            for child in body:
                ud = use_def(child)
                uses |= ud.uses
                defs |= ud.defs
            return UseDef(frozenset(uses), frozenset(defs))
    raise TypeError(f"unknown statement node {s!r}")


@dataclass(frozen=True)
class Edge:
    src: int  # statement id
    dst: int
    kind: str  # flow | anti | output
    carried: bool  # crosses a loop iteration (source not strictly earlier)
    vars: frozenset[str]


@dataclass
class DepGraph:
    """Dependences among the top-level statements of one loop body."""

    nodes: tuple[int, ...]  # statement ids in body order
    stmts: dict[int, Stmt]
    edges: list[Edge]

    def edges_from(self, sid: int, kind: Optional[str] = None) -> list[Edge]:
        return [e for e in self.edges if e.src == sid and (kind is None or e.kind == kind)]

    def edges_to(self, sid: int, kind: Optional[str] = None) -> list[Edge]:
        return [e for e in self.edges if e.dst == sid and (kind is None or e.kind == kind)]


def build_dep_graph(body: list[Stmt]) -> DepGraph:
    """Dependence graph over a statement list, one node per top-level chunk."""
    nodes = tuple(s.sid for s in body)
    stmts = {s.sid: s for s in body}
    uds = {s.sid: use_def(s) for s in body}
    pos = {s.sid: k for k, s in enumerate(body)}
    edges: list[Edge] = []
    for s in body:
        for t in body:
            su, tu = uds[s.sid], uds[t.sid]
            carried = pos[s.sid] >= pos[t.sid]
            if s.sid == t.sid:
                shared = su.defs & su.uses
                if shared:
                    edges.append(Edge(s.sid, s.sid, "flow", True, frozenset(shared)))
                continue
            shared = su.defs & tu.uses
            if shared:
                edges.append(Edge(s.sid, t.sid, "flow", carried, frozenset(shared)))
            shared = su.uses & tu.defs
            if shared:
                edges.append(Edge(s.sid, t.sid, "anti", carried, frozenset(shared)))
            shared = su.defs & tu.defs
            if shared:
                edges.append(Edge(s.sid, t.sid, "output", carried, frozenset(shared)))
    return DepGraph(nodes, stmts, edges)


Loop = Union[While, ForCounted]


def loop_cond_vars(loop: Loop) -> frozenset[str]:
    if isinstance(loop, While):
        return frozenset(cond_vars(loop.cond))
    return frozenset({loop.counter, loop.bound})


def control_kernel(loop: Loop) -> set[int]:
    """Statement ids whose writes can steer the loop condition.

    Seeded with the writers of condition variables, closed backward under
    flow edges.  A counted loop steers itself: its kernel is empty.
    """
    if isinstance(loop, ForCounted):
        return set()
    graph = build_dep_graph(loop.body)
    uds = {sid: use_def(graph.stmts[sid]) for sid in graph.nodes}
    cvars = loop_cond_vars(loop)
    kernel = {sid for sid in graph.nodes if uds[sid].defs & cvars}
    changed = True
    while changed:
        changed = False
        for e in graph.edges:
            if e.kind == "flow" and e.dst in kernel and e.src not in kernel:
                kernel.add(e.src)
                changed = True
    return kernel


def kernel_written(loop: Loop, kernel: Optional[set[int]] = None) -> frozenset[str]:
    """Variables the loop's control machinery writes each iteration."""
    if isinstance(loop, ForCounted):
        return frozenset({loop.counter})
    if kernel is None:
        kernel = control_kernel(loop)
    graph_stmts = {s.sid: s for s in loop.body}
    out: set[str] = set()
    for sid in kernel:
        out |= use_def(graph_stmts[sid]).defs
    return frozenset(out)


Degree = Union[int, float]  # finite int or math.inf


def invariance_degrees(loop: Loop) -> dict[int, Degree]:
    """Per-chunk iteration count after which each value stops changing.

    Degree 1 chunks are constant from the first iteration on; a chunk fed
    by degree-d writers settles one iteration later when the write arrives
    on a carried edge.  Chunks on a flow cycle, reachable from one, or
    reading anything the control kernel writes never settle (infinity).
    """
    graph = build_dep_graph(loop.body)
    uds = {sid: use_def(graph.stmts[sid]) for sid in graph.nodes}
    kernel = control_kernel(loop)
    kvars = kernel_written(loop, kernel)

    infinite: set[int] = set()
    for sid in graph.nodes:
        if sid in kernel or uds[sid].uses & kvars:
            infinite.add(sid)

    flow = [(e.src, e.dst, e.carried) for e in graph.edges if e.kind == "flow"]

    # Flow cycles never settle; neither does anything downstream of one.
    index_of = {sid: k for k, sid in enumerate(graph.nodes)}
    adj: dict[int, set[int]] = {sid: set() for sid in graph.nodes}
    for src, dst, _ in flow:
        adj[src].add(dst)
    on_cycle = {src for src, dst, _ in flow if src == dst}
    for start in graph.nodes:
        # A node is on a cycle when it can reach itself through flow edges.
        seen: set[int] = set()
        stack = list(adj[start])
        while stack:
            cur = stack.pop()
            if cur == start:
                on_cycle.add(start)
                break
            if cur in seen:
                continue
            seen.add(cur)
            stack.extend(adj[cur])
    reach = set(on_cycle)
    stack = list(on_cycle)
    while stack:
        cur = stack.pop()
        for nxt in adj[cur]:
            if nxt not in reach:
                reach.add(nxt)
                stack.append(nxt)
    infinite |= reach

    degrees: dict[int, Degree] = {sid: math.inf for sid in infinite}
    pending = [sid for sid in graph.nodes if sid not in infinite]
    # Finite nodes form an acyclic flow subgraph; iterate to a fixpoint.
    for sid in pending:
        degrees[sid] = 1
    changed = True
    rounds = 0
    while changed:
        changed = False
        rounds += 1
        if rounds > len(graph.nodes) + 2:
            raise RuntimeError("invariance degrees failed to settle")
        for sid in pending:
            best: Degree = 1
            for src, dst, carried in flow:
                if dst != sid:
                    continue
                d = degrees[src] + (1 if carried else 0)
                if d > best:
                    best = d
            if degrees[sid] != best:
                degrees[sid] = best
                changed = True
    return degrees


@dataclass
class FissionPlan:
    """Ordered split of a loop body into independently executable groups."""

    loop: Loop
    kernel: tuple[int, ...]
    groups: tuple[tuple[int, ...], ...]
    independent: bool


def fission_plan(loop: Loop) -> FissionPlan:
    """Group non-kernel chunks by dependence connectivity, in body order.

    Raises NoSplit when fewer than two groups remain.  Counted loops whose
    init expression reads something the body writes do not split (each
    clone re-evaluates the init).
    """
    graph = build_dep_graph(loop.body)
    kernel = control_kernel(loop)
    rest = [sid for sid in graph.nodes if sid not in kernel]
    if len(rest) < 2:
        raise NoSplit("loop body has fewer than two splittable statements")
    if isinstance(loop, ForCounted):
        body_defs: set[str] = set()
        for s in loop.body:
            body_defs |= use_def(s).defs
        if expr_vars(loop.init) & body_defs:
            raise NoSplit("loop init depends on values the body writes")

    parent = {sid: sid for sid in rest}

    def find(x: int) -> int:
        while parent[x] != x:
            parent[x] = parent[parent[x]]
            x = parent[x]
        return x

    def union(a: int, b: int) -> None:
        ra, rb = find(a), find(b)
        if ra != rb:
            parent[ra] = rb

    restset = set(rest)
    for e in graph.edges:
        if e.src in restset and e.dst in restset and e.src != e.dst:
            union(e.src, e.dst)

    pos = {sid: k for k, sid in enumerate(graph.nodes)}
    buckets: dict[int, list[int]] = {}
    for sid in rest:
        buckets.setdefault(find(sid), []).append(sid)
    groups = tuple(
        tuple(sorted(members, key=pos.__getitem__))
        for members in sorted(buckets.values(), key=lambda ms: min(pos[m] for m in ms))
    )
    if len(groups) < 2:
        raise NoSplit("loop body is one dependence component")
    independent = isinstance(loop, ForCounted) or not kernel_written(loop, kernel)
    return FissionPlan(
        loop=loop,
        kernel=tuple(sorted(kernel, key=pos.__getitem__)),
        groups=groups,
        independent=independent,
    )


def plan_is_legal(plan: FissionPlan) -> bool:
    """Every dependence stays within a group or the kernel, or points forward."""
    graph = build_dep_graph(plan.loop.body)
    where: dict[int, int] = {}
    for g, members in enumerate(plan.groups):
        for sid in members:
            where[sid] = g
    kernel = set(plan.kernel)
    for e in graph.edges:
        if e.src in kernel or e.dst in kernel:
            continue
        if where[e.src] == where[e.dst]:
            continue
        if where[e.src] > where[e.dst]:
            return False
    return True
