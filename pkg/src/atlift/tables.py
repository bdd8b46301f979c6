"""Linear maps on the HomForm basis tabulated as sparse column dictionaries."""

from __future__ import annotations

from typing import Callable, Mapping

from atlift.bga import _add_into
from atlift.graded import Rational, parity_sign
from atlift.homcomplex import FreeComplex, HomForm

Columns = dict[int, dict[int, Rational]]


class SparseMap:
    """Sparse matrix stored by columns: ``cols[j] = {i: value}``."""

    __slots__ = ("cols",)

    def __init__(self, cols: Mapping[int, Mapping[int, Rational]]):
        self.cols = {j: dict(c) for j, c in cols.items() if c}

    def __matmul__(self, other: "SparseMap") -> "SparseMap":
        out = {}
        for j, col in other.cols.items():
            acc: dict = {}
            for m, v in col.items():
                for i, w in self.cols.get(m, {}).items():
                    _add_into(acc, i, w * v)
            if acc:
                out[j] = acc
        return SparseMap(out)

    def _combine(self, other: "SparseMap", sign: int) -> "SparseMap":
        out = {j: dict(c) for j, c in self.cols.items()}
        for j, col in other.cols.items():
            tgt = out.setdefault(j, {})
            for i, v in col.items():
                _add_into(tgt, i, sign * v)
        return SparseMap(out)

    def __add__(self, other):
        return self._combine(other, 1)

    def __sub__(self, other):
        return self._combine(other, -1)

    def __eq__(self, other):
        return isinstance(other, SparseMap) and self.cols == other.cols

    def is_zero(self) -> bool:
        return not self.cols

    def apply(self, vec: Mapping[int, Rational]) -> dict[int, Rational]:
        acc: dict = {}
        for j, v in vec.items():
            for i, w in self.cols.get(j, {}).items():
                _add_into(acc, i, w * v)
        return acc


def hom_map_matrix(cx: FreeComplex, fn: Callable[[HomForm], HomForm], indices=None) -> Columns:
    """Tabulate a linear map of HomForms on (a subset of) the basis."""
    out = {}
    for i in range(cx.hom_dim) if indices is None else indices:
        img = fn(cx.hom_basis_element(i))
        if img:
            out[i] = cx.hom_vector(img)
    return out


def trace_matrix(cx: FreeComplex) -> Columns:
    """Supertrace as a map from the HomForm basis to the algebra basis."""
    out = {}
    for k in range(cx.base.dim):
        for g in range(cx.rank):
            out[cx.hom_index(k, g, g)] = {k: parity_sign(cx.gdeg[g])}
    return out


def pairing_entries(F, cx: FreeComplex) -> dict[tuple[int, int], dict[int, Rational]]:
    """All nonzero ``<e_i, e_j>`` on HomForm basis pairs, as algebra coefficients.

    Uses the same constant table and form sign as :func:`atlift.connection.pair`
    (tests compare the two entry by entry)."""
    B = cx.base
    R = cx.rank
    gdeg = cx.gdeg
    bdeg = B.degrees
    table = F.constant_table(cx)
    out: dict = {}
    for (r1, c1), row in table.items():
        n1 = gdeg[r1] - gdeg[c1]
        for (r2, c2), val in row.items():
            for k1 in range(B.dim):
                i = (k1 * R + r1) * R + c1
                for k2 in range(B.dim):
                    prod = B.mul_basis(k1, k2)
                    if not prod:
                        continue
                    s = F.form_sign(n1, bdeg[k2]) * val
                    j = (k2 * R + r2) * R + c2
                    vec = out.setdefault((i, j), {})
                    for k, cc in prod:
                        _add_into(vec, k, s * cc)
                    if not vec:
                        del out[(i, j)]
    return out
