"""Exact linear algebra over the rationals (thin layer over sympy's DomainMatrix)."""

from __future__ import annotations

from fractions import Fraction
from typing import Sequence

from sympy import QQ
from sympy.polys.matrices import DomainMatrix

from atlift.graded import Rational, normalize


def _to_qq(v) -> object:
    if isinstance(v, Fraction):
        return QQ(v.numerator, v.denominator)
    return QQ(v)


def _from_qq(q) -> Rational:
    return normalize(Fraction(int(q.numerator), int(q.denominator)))


def matrix(rows: Sequence[Sequence[Rational]], ncols: int | None = None) -> DomainMatrix:
    rows = [list(r) for r in rows]
    m = len(rows)
    n = ncols if ncols is not None else (len(rows[0]) if rows else 0)
    return DomainMatrix([[_to_qq(v) for v in r] for r in rows], (m, n), QQ)


def rank(rows: Sequence[Sequence[Rational]]) -> int:
    if not rows or not rows[0]:
        return 0
    return matrix(rows).rank()


def nullspace(rows: Sequence[Sequence[Rational]], ncols: int) -> list[list[Rational]]:
    """Basis of ``{x : A x = 0}`` as a list of vectors."""
    if not rows:
        return [[1 if i == j else 0 for i in range(ncols)] for j in range(ncols)]
    ns = matrix(rows, ncols).nullspace()
    return [[_from_qq(q) for q in row] for row in ns.to_list()]


def column_basis(cols: Sequence[Sequence[Rational]], dim: int) -> list[list[Rational]]:
    """A basis of the span of ``cols`` (vectors of length ``dim``), in echelon form."""
    if not cols:
        return []
    M = matrix(cols, dim)  # rows are the vectors
    R, pivots = M.rref()
    out = []
    for row in R.to_list()[: len(pivots)]:
        out.append([_from_qq(q) for q in row])
    return out


def solve(cols: Sequence[Sequence[Rational]], target: Sequence[Rational], dim: int) -> list[Rational] | None:
    """Coefficients ``c`` with ``sum c_i cols[i] = target``, or None if unsolvable."""
    n = len(cols)
    if n == 0:
        return [] if not any(target) else None
    aug = [[cols[j][i] for j in range(n)] + [target[i]] for i in range(dim)]
    R, pivots = matrix(aug, n + 1).rref()
    if n in pivots:
        return None
    sol = [0] * n
    rows = R.to_list()
    for r, pc in enumerate(pivots):
        sol[pc] = _from_qq(rows[r][n])
    return sol


def independent_columns(vectors: Sequence[Sequence[Rational]], dim: int) -> list[int]:
    """Indices of a maximal independent subset, chosen greedily left to right."""
    if not vectors:
        return []
    M = matrix([[v[i] for v in vectors] for i in range(dim)], len(vectors))
    _, pivots = M.rref()
    return list(pivots)


class CohomologyBasis:
    """Cycles, boundaries and class representatives in one degree."""

    def __init__(self, degree: int, dim: int, cycles, boundaries, representatives):
        self.degree = degree
        self.chain_dim = dim
        self.cycles = cycles
        self.boundaries = boundaries
        self.representatives = representatives

    @property
    def dim(self) -> int:
        return len(self.representatives)

    def class_coords(self, v: Sequence[Rational]) -> list[Rational] | None:
        """Coordinates of the class of a cycle on the representatives, or None
        if ``v`` is not a cycle."""
        sol = solve(self.boundaries + self.representatives, v, self.chain_dim)
        if sol is None:
            return None
        return sol[len(self.boundaries):]


class FiniteComplex:
    """Finite cochain complex on an indexed basis.

    ``degrees[i]`` is the degree of basis vector ``i`` and ``d`` maps a sparse
    vector ``{i: c}`` to a sparse vector."""

    def __init__(self, degrees: Sequence[int], d):
        self.degrees = list(degrees)
        self.d = d
        self.by_degree: dict[int, list[int]] = {}
        for i, k in enumerate(self.degrees):
            self.by_degree.setdefault(k, []).append(i)
        self._mats: dict[int, list[list[Rational]]] = {}
        self._coh: dict[int, CohomologyBasis] = {}

    def basis(self, k: int) -> list[int]:
        return self.by_degree.get(k, [])

    def dense(self, vec, k: int) -> list[Rational]:
        pos = {i: a for a, i in enumerate(self.basis(k))}
        out = [0] * len(pos)
        for i, c in vec.items():
            if i not in pos:
                raise ValueError(f"vector has a component outside degree {k}")
            out[pos[i]] = c
        return out

    def sparse(self, dense: Sequence[Rational], k: int) -> dict[int, Rational]:
        return {i: c for i, c in zip(self.basis(k), dense) if c}

    def matrix(self, k: int) -> list[list[Rational]]:
        """Columns of ``d: C^k -> C^{k+1}``, each as a dense vector of C^{k+1}."""
        if k not in self._mats:
            self._mats[k] = [self.dense(self.d({i: 1}), k + 1) for i in self.basis(k)]
        return self._mats[k]

    def cohomology(self, k: int) -> CohomologyBasis:
        if k in self._coh:
            return self._coh[k]
        n = len(self.basis(k))
        out_cols = self.matrix(k)
        m = len(self.basis(k + 1))
        if out_cols and m:
            rows = [[col[i] for col in out_cols] for i in range(m)]
            cycles = nullspace(rows, n)
        else:
            cycles = [[1 if i == j else 0 for i in range(n)] for j in range(n)]
        prev = self.matrix(k - 1)
        boundaries = column_basis(prev, n) if prev else []
        piv = independent_columns(boundaries + cycles, n) if n else []
        reps = [cycles[p - len(boundaries)] for p in piv if p >= len(boundaries)]
        coh = self._coh[k] = CohomologyBasis(k, n, cycles, boundaries, reps)
        return coh

    def primitive(self, vec, k: int) -> dict[int, Rational] | None:
        """Some ``y`` in degree ``k-1`` with ``d y = vec``, or None."""
        target = self.dense(vec, k)
        if not any(target):
            return {}
        cols = self.matrix(k - 1)
        sol = solve(cols, target, len(target))
        if sol is None:
            return None
        return self.sparse(sol, k - 1)
