"""Flow semiring, choice-indexed polynomials, and matrix algebra.

The analyzer types each statement with a square matrix describing how every
variable flows into every other variable.  Entries are polynomials over a
five-element semiring of flow classes, indexed by the nondeterministic
choices available at additive expressions.  Evaluating a polynomial under a
total choice assignment collapses it back to a single flow class, and every
operation here commutes with that evaluation.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass
from typing import Iterable, Mapping, Optional, Sequence


class AlgebraError(Exception):
    pass


class MissingChoice(AlgebraError):
    def __init__(self, index: int):
        super().__init__(f"no choice assigned for choice point {index}")
        self.index = index


class VarMismatch(AlgebraError):
    pass


class Scalar(enum.IntEnum):
    """Flow classes, totally ordered.

    ZERO: no flow.  M: value copied at most (max-preserving).  W: weak
    polynomial flow.  P: honest polynomial flow.  INF: no polynomial bound.
    """

    ZERO = 0
    M = 1
    W = 2
    P = 3
    INF = 4

    def __str__(self) -> str:
        return _SCALAR_NAMES[self]


_SCALAR_NAMES = {
    Scalar.ZERO: "0",
    Scalar.M: "m",
    Scalar.W: "w",
    Scalar.P: "p",
    Scalar.INF: "inf",
}
_SCALAR_BY_NAME = {v: k for k, v in _SCALAR_NAMES.items()}


def scalar_from_name(name: str) -> Scalar:
    try:
        return _SCALAR_BY_NAME[name]
    except KeyError:
        raise AlgebraError(f"unknown flow class {name!r}") from None


def scalar_add(a: Scalar, b: Scalar) -> Scalar:
    """Join of two flow classes: the larger one."""
    return a if a >= b else b


def scalar_mul(a: Scalar, b: Scalar) -> Scalar:
    """Composition of flows: ZERO annihilates, otherwise the larger class."""
    if a is Scalar.ZERO or b is Scalar.ZERO:
        return Scalar.ZERO
    return a if a >= b else b


# A delta pins one choice point to one choice: (choice, index).
Delta = tuple[int, int]


@dataclass(frozen=True, slots=True)
class Monomial:
    """A flow class guarded by deltas, at most one per choice point."""

    coeff: Scalar
    deltas: tuple[Delta, ...]  # sorted by choice point index

    def sort_key(self):
        return (len(self.deltas), tuple((i, c) for c, i in self.deltas), self.coeff)

    def __str__(self) -> str:
        if not self.deltas:
            return str(self.coeff)
        tags = ".".join(f"d({c},{i})" for c, i in self.deltas)
        return f"{self.coeff}.{tags}"


def _merge_deltas(a: tuple[Delta, ...], b: tuple[Delta, ...]) -> Optional[tuple[Delta, ...]]:
    """Union of two delta sets; None when they pin the same point differently."""
    merged: dict[int, int] = {i: c for c, i in a}
    for c, i in b:
        prev = merged.get(i)
        if prev is None:
            merged[i] = c
        elif prev != c:
            return None
    return tuple((c, i) for i, c in sorted(merged.items()))


def _sorted_deltas(deltas: tuple[Delta, ...]) -> tuple[Delta, ...]:
    if all(deltas[k][1] < deltas[k + 1][1] for k in range(len(deltas) - 1)):
        return deltas
    return tuple(sorted(deltas, key=lambda d: d[1]))


def _canonical(monos: Iterable[Monomial]) -> tuple[Monomial, ...]:
    """Drop ZERO coefficients, duplicates, and dominated monomials.

    A monomial is dominated when another one applies in every assignment it
    applies in (a subset of its deltas) with at least as large a class.
    """
    uniq = {
        m if _sorted_deltas(m.deltas) is m.deltas else Monomial(m.coeff, _sorted_deltas(m.deltas))
        for m in monos
        if m.coeff is not Scalar.ZERO
    }
    pool = sorted(uniq, key=Monomial.sort_key)
    sets = [frozenset(m.deltas) for m in pool]
    kept: list[Monomial] = []
    for a, (m, ds) in enumerate(zip(pool, sets)):
        dominated = False
        for b, (other, os) in enumerate(zip(pool, sets)):
            if a != b and other.coeff >= m.coeff and os <= ds:
                dominated = True
                break
        if not dominated:
            kept.append(m)
    return tuple(kept)


@dataclass(frozen=True, slots=True)
class Poly:
    """Canonical sum (join) of monomials; the empty sum is ZERO flow."""

    monos: tuple[Monomial, ...]

    @staticmethod
    def of(monos: Iterable[Monomial]) -> "Poly":
        return Poly(_canonical(monos))

    @staticmethod
    def const(s: Scalar) -> "Poly":
        if s is Scalar.ZERO:
            return P_ZERO
        return Poly((Monomial(s, ()),))

    @property
    def is_zero(self) -> bool:
        return not self.monos

    def delta_indices(self) -> set[int]:
        return {i for m in self.monos for _, i in m.deltas}

    def __str__(self) -> str:
        if not self.monos:
            return "0"
        return "+".join(str(m) for m in self.monos)


P_ZERO = Poly(())
P_M = Poly.const(Scalar.M)
P_W = Poly.const(Scalar.W)
P_P = Poly.const(Scalar.P)
P_INF = Poly.const(Scalar.INF)


def poly_add(a: Poly, b: Poly) -> Poly:
    if a.is_zero:
        return b
    if b.is_zero:
        return a
    return Poly.of(a.monos + b.monos)


def poly_mul(a: Poly, b: Poly) -> Poly:
    if a.is_zero or b.is_zero:
        return P_ZERO
    out: list[Monomial] = []
    for ma in a.monos:
        for mb in b.monos:
            deltas = _merge_deltas(ma.deltas, mb.deltas)
            if deltas is None:
                continue  # the product can never fire
            out.append(Monomial(scalar_mul(ma.coeff, mb.coeff), deltas))
    return Poly.of(out)


def poly_scale(s: Scalar, p: Poly) -> Poly:
    return poly_mul(Poly.const(s), p)


def eval_poly(p: Poly, sigma: Mapping[int, int]) -> Scalar:
    """Collapse a polynomial under a total choice assignment."""
    out = Scalar.ZERO
    for m in p.monos:
        fired = True
        for c, i in m.deltas:
            if i not in sigma:
                raise MissingChoice(i)
            if sigma[i] != c:
                fired = False
                break
        if fired and m.coeff > out:
            out = m.coeff
    return out


# ---------------------------------------------------------------------------
# Matrices


class Matrix:
    """Square matrix of polynomials over a fixed, ordered variable tuple.

    Entry (i, j) describes the flow from variable i into variable j.
    """

    __slots__ = ("vars", "index", "rows")

    def __init__(self, vars: Sequence[str], rows: Optional[list[list[Poly]]] = None):
        self.vars = tuple(vars)
        self.index = {v: k for k, v in enumerate(self.vars)}
        n = len(self.vars)
        if rows is None:
            rows = [[P_ZERO] * n for _ in range(n)]
        self.rows = rows

    def __eq__(self, other) -> bool:
        return (
            isinstance(other, Matrix)
            and self.vars == other.vars
            and self.rows == other.rows
        )

    def __repr__(self) -> str:
        return f"Matrix({self.vars!r})"

    def get(self, src: str, dst: str) -> Poly:
        return self.rows[self.index[src]][self.index[dst]]

    def set(self, src: str, dst: str, p: Poly) -> None:
        self.rows[self.index[src]][self.index[dst]] = p

    def copy(self) -> "Matrix":
        return Matrix(self.vars, [row[:] for row in self.rows])

    def set_column(self, dst: str, vec: Mapping[str, Poly]) -> None:
        """Replace one column with a sparse vector (missing entries ZERO)."""
        j = self.index[dst]
        for i in range(len(self.vars)):
            self.rows[i][j] = P_ZERO
        for name, p in vec.items():
            self.rows[self.index[name]][j] = p

    def delta_indices(self) -> set[int]:
        out: set[int] = set()
        for row in self.rows:
            for p in row:
                out |= p.delta_indices()
        return out

    def pretty(self) -> str:
        width = max((len(str(p)) for row in self.rows for p in row), default=1)
        width = max(width, max((len(v) for v in self.vars), default=1))
        head = " " * (width + 2) + "  ".join(v.ljust(width) for v in self.vars)
        lines = [head]
        for v, row in zip(self.vars, self.rows):
            lines.append(v.ljust(width + 2) + "  ".join(str(p).ljust(width) for p in row))
        return "\n".join(lines)


def mat_id(vars: Sequence[str]) -> Matrix:
    m = Matrix(vars)
    for i in range(len(m.vars)):
        m.rows[i][i] = P_M
    return m


def _check_vars(a: Matrix, b: Matrix) -> None:
    if a.vars != b.vars:
        raise VarMismatch(f"matrix variables differ: {a.vars} vs {b.vars}")


def mat_add(a: Matrix, b: Matrix) -> Matrix:
    _check_vars(a, b)
    n = len(a.vars)
    rows = [[poly_add(a.rows[i][j], b.rows[i][j]) for j in range(n)] for i in range(n)]
    return Matrix(a.vars, rows)


def _is_unit_column(b: Matrix, j: int) -> bool:
    for k in range(len(b.vars)):
        p = b.rows[k][j]
        if k == j:
            if p != P_M:
                return False
        elif not p.is_zero:
            return False
    return True


def mat_mul(a: Matrix, b: Matrix) -> Matrix:
    _check_vars(a, b)
    n = len(a.vars)
    out = Matrix(a.vars)
    for j in range(n):
        if _is_unit_column(b, j):
            for i in range(n):
                out.rows[i][j] = a.rows[i][j]
            continue
        col = [(k, b.rows[k][j]) for k in range(n) if not b.rows[k][j].is_zero]
        for i in range(n):
            arow = a.rows[i]
            acc = P_ZERO
            for k, bp in col:
                ap = arow[k]
                if ap.is_zero:
                    continue
                acc = poly_add(acc, poly_mul(ap, bp))
            out.rows[i][j] = acc
    return out


def mat_star(a: Matrix) -> Matrix:
    """Least fixpoint of X = I + A * X, starting from the identity.

    Converges because entries only grow inside a finite lattice; the
    iteration bound is generous and overrunning it is an internal error.
    """
    choice_points = len(a.delta_indices())
    limit = 2 * max(1, len(a.vars)) * (choice_points + 1) * 5
    ident = mat_id(a.vars)
    x = ident
    for _ in range(limit):
        nxt = mat_add(ident, mat_mul(a, x))
        if nxt == x:
            return x
        x = nxt
    raise AlgebraError("loop fixpoint failed to converge within the iteration bound")


def eval_matrix(a: Matrix, sigma: Mapping[int, int]) -> list[list[Scalar]]:
    return [[eval_poly(p, sigma) for p in row] for row in a.rows]


# ---------------------------------------------------------------------------
# Serialization


def mono_to_obj(m: Monomial) -> dict:
    return {"coeff": str(m.coeff), "deltas": [[c, i] for c, i in m.deltas]}


def poly_to_obj(p: Poly) -> list:
    return [mono_to_obj(m) for m in p.monos]


def matrix_to_obj(a: Matrix) -> dict:
    return {
        "vars": list(a.vars),
        "entries": [[poly_to_obj(p) for p in row] for row in a.rows],
    }


def poly_from_obj(obj: list) -> Poly:
    monos = []
    for m in obj:
        deltas = tuple((int(c), int(i)) for c, i in m["deltas"])
        monos.append(Monomial(scalar_from_name(m["coeff"]), deltas))
    return Poly.of(monos)


def matrix_from_obj(obj: dict) -> Matrix:
    vars = obj["vars"]
    rows = [[poly_from_obj(cell) for cell in row] for row in obj["entries"]]
    return Matrix(vars, rows)
