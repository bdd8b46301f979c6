"""Finite-dimensional bidifferential graded-commutative algebras.

A :class:`BGA` is given by structure constants on a basis of bihomogeneous
elements: a product table and the two differentials ``partial`` (bidegree
``(1,0)``) and ``delbar`` (bidegree ``(0,1)``).  They stand in for the
algebra of smooth forms of a complex manifold.
"""

from __future__ import annotations

from dataclasses import dataclass
from itertools import combinations
from typing import Iterable, Mapping, Sequence

from atlift.graded import Rational, fmt, normalize, parity_sign, rational

Terms = tuple  # tuple[tuple[int, Rational], ...]


def _add_into(acc: dict, key, c) -> None:
    v = acc.get(key, 0) + c
    if v:
        acc[key] = v
    else:
        acc.pop(key, None)


class BGA:
    """Bidifferential graded algebra given by structure constants.

    ``product`` maps ``(i, j)`` to an iterable of ``(k, c)`` pairs meaning
    ``b_i b_j = sum c b_k``; ``partial`` and ``delbar`` map ``i`` to the
    image of ``b_i``.  Missing entries are zero.  Instances are treated as
    immutable once built.
    """

    def __init__(
        self,
        names: Sequence[str],
        bidegrees: Sequence[tuple[int, int]],
        unit: int,
        product: Mapping[tuple[int, int], Iterable[tuple[int, object]]],
        partial: Mapping[int, Iterable[tuple[int, object]]] | None = None,
        delbar: Mapping[int, Iterable[tuple[int, object]]] | None = None,
        label: str | None = None,
    ):
        if len(names) != len(bidegrees):
            raise ValueError("names and bidegrees differ in length")
        if len(set(names)) != len(names):
            raise ValueError("basis names must be distinct")
        n = len(names)
        if not 0 <= unit < n:
            raise ValueError(f"unit index {unit} out of range")
        self.names = tuple(names)
        self.bidegrees = tuple((int(p), int(q)) for p, q in bidegrees)
        for p, q in self.bidegrees:
            if p < 0 or q < 0:
                raise ValueError("bidegrees must be non-negative")
        self.degrees = tuple(p + q for p, q in self.bidegrees)
        self.unit = unit
        self.label = label
        self._index = {name: i for i, name in enumerate(self.names)}

        def clean(entries, what) -> Terms:
            acc: dict[int, Rational] = {}
            for k, c in entries:
                k = int(k)
                if not 0 <= k < n:
                    raise ValueError(f"{what}: basis index {k} out of range")
                _add_into(acc, k, rational(c))
            return tuple(sorted(acc.items()))

        self._prod: list[list[Terms]] = [[() for _ in range(n)] for _ in range(n)]
        for (i, j), entries in product.items():
            if not (0 <= i < n and 0 <= j < n):
                raise ValueError(f"product entry ({i},{j}) out of range")
            self._prod[i][j] = clean(entries, f"product ({i},{j})")
        self._partial: list[Terms] = [()] * n
        self._delbar: list[Terms] = [()] * n
        for table, src, what in ((self._partial, partial, "partial"), (self._delbar, delbar, "delbar")):
            for i, entries in (src or {}).items():
                if not 0 <= i < n:
                    raise ValueError(f"{what} entry {i} out of range")
                table[i] = clean(entries, f"{what} {i}")

    # -- basic accessors -------------------------------------------------
    @property
    def dim(self) -> int:
        return len(self.names)

    def __repr__(self):
        tag = f" {self.label!r}" if self.label else ""
        return f"<BGA{tag} dim={self.dim}>"

    def index(self, name_or_index) -> int:
        if isinstance(name_or_index, int):
            if not 0 <= name_or_index < self.dim:
                raise ValueError(f"basis index {name_or_index} out of range")
            return name_or_index
        try:
            return self._index[name_or_index]
        except KeyError:
            raise ValueError(f"unknown basis element {name_or_index!r}") from None

    def mul_basis(self, i: int, j: int) -> Terms:
        return self._prod[i][j]

    def partial_basis(self, i: int) -> Terms:
        return self._partial[i]

    def delbar_basis(self, i: int) -> Terms:
        return self._delbar[i]

    def basis_with(self, p: int | None = None, q: int | None = None) -> list[int]:
        return [
            i
            for i, (bp, bq) in enumerate(self.bidegrees)
            if (p is None or bp == p) and (q is None or bq == q)
        ]

    def tables(self) -> dict:
        """Plain-dict copy of the structure constants (for mutation and export)."""
        return {
            "names": list(self.names),
            "bidegrees": list(self.bidegrees),
            "unit": self.unit,
            "product": {
                (i, j): list(self._prod[i][j])
                for i in range(self.dim)
                for j in range(self.dim)
                if self._prod[i][j]
            },
            "partial": {i: list(t) for i, t in enumerate(self._partial) if t},
            "delbar": {i: list(t) for i, t in enumerate(self._delbar) if t},
        }

    @classmethod
    def from_tables(cls, tables: dict, label: str | None = None) -> "BGA":
        return cls(
            tables["names"],
            tables["bidegrees"],
            tables["unit"],
            tables["product"],
            tables.get("partial"),
            tables.get("delbar"),
            label=label,
        )

    # -- elements --------------------------------------------------------
    def element(self, coeffs: Mapping | None = None) -> "BGAElement":
        acc: dict[int, Rational] = {}
        for key, c in (coeffs or {}).items():
            _add_into(acc, self.index(key), rational(c))
        return BGAElement(self, acc)

    def basis_element(self, i) -> "BGAElement":
        return BGAElement(self, {self.index(i): 1})

    def one(self) -> "BGAElement":
        return BGAElement(self, {self.unit: 1})

    def zero(self) -> "BGAElement":
        return BGAElement(self, {})

    def _check(self, *elems: "BGAElement") -> None:
        for e in elems:
            if not isinstance(e, BGAElement):
                raise TypeError(f"expected a BGAElement, got {type(e).__name__}")
            if e.algebra is not self:
                raise ValueError("element belongs to a different algebra")

    # raw dict-level kernels, shared with homcomplex
    def mul_coeffs(self, a: Mapping[int, Rational], b: Mapping[int, Rational]) -> dict:
        acc: dict[int, Rational] = {}
        prod = self._prod
        for i, ca in a.items():
            row = prod[i]
            for j, cb in b.items():
                for k, c in row[j]:
                    _add_into(acc, k, c * ca * cb)
        return acc

    def _apply(self, table: list[Terms], a: Mapping[int, Rational]) -> dict:
        acc: dict[int, Rational] = {}
        for i, ca in a.items():
            for k, c in table[i]:
                _add_into(acc, k, c * ca)
        return acc

    def partial_coeffs(self, a: Mapping[int, Rational]) -> dict:
        return self._apply(self._partial, a)

    def delbar_coeffs(self, a: Mapping[int, Rational]) -> dict:
        return self._apply(self._delbar, a)

    def mul(self, a: "BGAElement", b: "BGAElement") -> "BGAElement":
        self._check(a, b)
        return BGAElement(self, self.mul_coeffs(a.coeffs, b.coeffs))

    def apply_partial(self, a: "BGAElement") -> "BGAElement":
        self._check(a)
        return BGAElement(self, self.partial_coeffs(a.coeffs))

    def apply_delbar(self, a: "BGAElement") -> "BGAElement":
        self._check(a)
        return BGAElement(self, self.delbar_coeffs(a.coeffs))

    def d(self, a: "BGAElement") -> "BGAElement":
        return self.apply_partial(a) + self.apply_delbar(a)


class BGAElement:
    """Sparse element of a :class:`BGA`; zero coefficients are never stored."""

    __slots__ = ("algebra", "coeffs")

    def __init__(self, algebra: BGA, coeffs: Mapping[int, Rational]):
        self.algebra = algebra
        self.coeffs = {k: normalize(c) for k, c in coeffs.items() if c}

    def _coerce(self, other) -> "BGAElement":
        if isinstance(other, BGAElement):
            if other.algebra is not self.algebra:
                raise ValueError("element belongs to a different algebra")
            return other
        return BGAElement(self.algebra, {self.algebra.unit: rational(other)})

    def __add__(self, other):
        other = self._coerce(other)
        acc = dict(self.coeffs)
        for k, c in other.coeffs.items():
            _add_into(acc, k, c)
        return BGAElement(self.algebra, acc)

    __radd__ = __add__

    def __neg__(self):
        return BGAElement(self.algebra, {k: -c for k, c in self.coeffs.items()})

    def __sub__(self, other):
        return self + (-self._coerce(other))

    def __rsub__(self, other):
        return self._coerce(other) - self

    def __mul__(self, other):
        if isinstance(other, BGAElement):
            return self.algebra.mul(self, other)
        s = rational(other)
        return BGAElement(self.algebra, {k: c * s for k, c in self.coeffs.items()})

    def __rmul__(self, other):
        if isinstance(other, BGAElement):
            return self.algebra.mul(other, self)
        return self * other

    def __eq__(self, other):
        if isinstance(other, BGAElement):
            return self.algebra is other.algebra and self.coeffs == other.coeffs
        if other == 0:
            return not self.coeffs
        return NotImplemented

    def __hash__(self):
        return hash((id(self.algebra), frozenset(self.coeffs.items())))

    def __bool__(self):
        return bool(self.coeffs)

    def __repr__(self):
        return f"BGAElement({self})"

    def __str__(self):
        if not self.coeffs:
            return "0"
        parts = []
        for k in sorted(self.coeffs):
            c = self.coeffs[k]
            name = self.algebra.names[k]
            if k == self.algebra.unit:
                parts.append(fmt(c))
            elif c == 1:
                parts.append(name)
            elif c == -1:
                parts.append(f"-{name}")
            else:
                parts.append(f"{fmt(c)}*{name}")
        return " + ".join(parts).replace("+ -", "- ")

    def bidegrees(self) -> set[tuple[int, int]]:
        return {self.algebra.bidegrees[k] for k in self.coeffs}

    def component(self, p: int, q: int) -> "BGAElement":
        bd = self.algebra.bidegrees
        return BGAElement(self.algebra, {k: c for k, c in self.coeffs.items() if bd[k] == (p, q)})

    def filter_p(self, max_p: int) -> "BGAElement":
        bd = self.algebra.bidegrees
        return BGAElement(self.algebra, {k: c for k, c in self.coeffs.items() if bd[k][0] <= max_p})

    @property
    def degree(self) -> int:
        degs = {self.algebra.degrees[k] for k in self.coeffs}
        if len(degs) != 1:
            raise ValueError("degree of a zero or inhomogeneous element")
        return degs.pop()

    def to_json(self) -> list:
        return [[self.algebra.names[k], fmt(c)] for k, c in sorted(self.coeffs.items())]


# ---------------------------------------------------------------------------
# validation


@dataclass(frozen=True)
class Violation:
    axiom: str
    where: str
    residual: str

    def __str__(self):
        return f"{self.axiom} at {self.where}: residual {self.residual}"


def _terms_str(B: BGA, acc: Mapping[int, Rational]) -> str:
    return str(BGAElement(B, acc))


def validate(B: BGA) -> list[Violation]:
    """Exhaustively check every BGA axiom; an empty list means valid."""
    out: list[Violation] = []
    n = B.dim
    bd = B.bidegrees
    deg = B.degrees
    names = B.names
    prod = B._prod

    if bd[B.unit] != (0, 0):
        out.append(Violation("unit-bidegree", names[B.unit], str(bd[B.unit])))

    # bidegree homogeneity
    for i in range(n):
        for j in range(n):
            want = (bd[i][0] + bd[j][0], bd[i][1] + bd[j][1])
            bad = {k: c for k, c in prod[i][j] if bd[k] != want}
            if bad:
                out.append(Violation("homogeneity", f"{names[i]}*{names[j]}", _terms_str(B, bad)))
    for table, shift, what in ((B._partial, (1, 0), "partial"), (B._delbar, (0, 1), "delbar")):
        for i in range(n):
            want = (bd[i][0] + shift[0], bd[i][1] + shift[1])
            bad = {k: c for k, c in table[i] if bd[k] != want}
            if bad:
                out.append(Violation(f"homogeneity-{what}", names[i], _terms_str(B, bad)))

    # unit law
    for i in range(n):
        for a, b, where in ((B.unit, i, f"1*{names[i]}"), (i, B.unit, f"{names[i]}*1")):
            got = dict(prod[a][b])
            _add_into(got, i, -1)
            if got:
                out.append(Violation("unit-law", where, _terms_str(B, got)))

    # graded commutativity
    for i in range(n):
        for j in range(i, n):
            acc = dict(prod[i][j])
            s = parity_sign(deg[i] * deg[j])
            for k, c in prod[j][i]:
                _add_into(acc, k, -s * c)
            if acc:
                out.append(Violation("graded-commutativity", f"({names[i]},{names[j]})", _terms_str(B, acc)))

    # associativity: (b_i b_j) b_k - b_i (b_j b_k), only nonzero partial products contribute
    left: dict[tuple[int, int, int], dict] = {}
    right: dict[tuple[int, int, int], dict] = {}
    for i in range(n):
        for j in range(n):
            for m, c in prod[i][j]:
                for k in range(n):
                    for r, c2 in prod[m][k]:
                        _add_into(left.setdefault((i, j, k), {}), r, c * c2)
    for j in range(n):
        for k in range(n):
            for m, c in prod[j][k]:
                for i in range(n):
                    for r, c2 in prod[i][m]:
                        _add_into(right.setdefault((i, j, k), {}), r, c * c2)
    for key in sorted(set(left) | set(right)):
        acc = dict(left.get(key, {}))
        for r, c in right.get(key, {}).items():
            _add_into(acc, r, -c)
        if acc:
            i, j, k = key
            out.append(Violation("associativity", f"({names[i]},{names[j]},{names[k]})", _terms_str(B, acc)))

    # differentials square to zero and anticommute
    for i in range(n):
        e = {i: 1}
        checks = (
            ("partial^2", B.partial_coeffs(B.partial_coeffs(e))),
            ("delbar^2", B.delbar_coeffs(B.delbar_coeffs(e))),
        )
        for axiom, acc in checks:
            if acc:
                out.append(Violation(axiom, names[i], _terms_str(B, acc)))
        acc = B.partial_coeffs(B.delbar_coeffs(e))
        for k, c in B.delbar_coeffs(B.partial_coeffs(e)).items():
            _add_into(acc, k, c)
        if acc:
            out.append(Violation("partial-delbar-anticommute", names[i], _terms_str(B, acc)))

    # graded Leibniz
    for what, op in (("partial", B.partial_coeffs), ("delbar", B.delbar_coeffs)):
        for i in range(n):
            di = op({i: 1})
            for j in range(n):
                acc = op(dict(prod[i][j]))
                for k, c in B.mul_coeffs(di, {j: 1}).items():
                    _add_into(acc, k, -c)
                s = parity_sign(deg[i])
                for k, c in B.mul_coeffs({i: 1}, op({j: 1})).items():
                    _add_into(acc, k, -s * c)
                if acc:
                    out.append(Violation(f"leibniz-{what}", f"({names[i]},{names[j]})", _terms_str(B, acc)))
    return out


# ---------------------------------------------------------------------------
# exterior algebras and canned models


def exterior_algebra(
    generators: Sequence[tuple[str, int, int]],
    partial: Mapping[str, Iterable[tuple[object, Sequence[str]]]] | None = None,
    delbar: Mapping[str, Iterable[tuple[object, Sequence[str]]]] | None = None,
    label: str | None = None,
) -> BGA:
    """Exterior algebra on odd generators, differentials extended by Leibniz.

    ``partial`` / ``delbar`` give the value on a generator as a list of
    ``(coefficient, monomial)`` where a monomial is a sequence of generator
    names, e.g. ``{"phi3": [(-1, ("phi1", "phi2"))]}``.
    """
    g = len(generators)
    gen_names = [name for name, _, _ in generators]
    gen_bd = [(p, q) for _, p, q in generators]
    for name, p, q in generators:
        if (p + q) % 2 == 0:
            raise ValueError(f"exterior generator {name!r} must have odd total degree")
    gpos = {name: i for i, name in enumerate(gen_names)}

    monos = [()]
    for k in range(1, g + 1):
        monos.extend(combinations(range(g), k))
    monos.sort(key=lambda m: (len(m), m))
    mindex = {m: i for i, m in enumerate(monos)}
    names = ["1" if not m else "".join(gen_names[s] for s in m) for m in monos]
    bidegs = [
        (sum(gen_bd[s][0] for s in m), sum(gen_bd[s][1] for s in m)) for m in monos
    ]

    def mono_product(a, b):
        if set(a) & set(b):
            return None
        # all generators are odd: each crossing costs a sign
        crossings = sum(1 for s in a for t in b if s > t)
        return parity_sign(crossings), tuple(sorted(a + b))

    product = {}
    for ia, a in enumerate(monos):
        for ib, b in enumerate(monos):
            r = mono_product(a, b)
            if r is not None:
                product[(ia, ib)] = [(mindex[r[1]], r[0])]
    B0 = BGA(names, bidegs, 0, product)

    def extend(spec):
        if not spec:
            return {}
        gen_val = {}
        for gname, terms in spec.items():
            acc: dict[int, Rational] = {}
            for c, mono in terms:
                m = [gpos[s] for s in mono]
                # sort with sign
                sign = 1
                arr = list(m)
                for x in range(len(arr)):
                    for y in range(len(arr) - 1 - x):
                        if arr[y] > arr[y + 1]:
                            arr[y], arr[y + 1] = arr[y + 1], arr[y]
                            sign = -sign
                if len(set(arr)) != len(arr):
                    continue
                _add_into(acc, mindex[tuple(arr)], sign * rational(c))
            gen_val[gpos[gname]] = acc
        table = {}
        for im, m in enumerate(monos):
            acc: dict[int, Rational] = {}
            for pos, s in enumerate(m):
                dv = gen_val.get(s)
                if not dv:
                    continue
                prefix = {mindex[m[:pos]]: parity_sign(pos)}
                suffix = {mindex[m[pos + 1 :]]: 1}
                term = B0.mul_coeffs(B0.mul_coeffs(prefix, dv), suffix)
                for k, c in term.items():
                    _add_into(acc, k, c)
            if acc:
                table[im] = list(acc.items())
        return table

    return BGA(names, bidegs, 0, product, extend(partial), extend(delbar), label=label)


CANNED_MODELS = ("point", "torus1", "torus2", "delbar-toy", "iwasawa")

_canned_cache: dict[str, BGA] = {}


def canned_model(name: str) -> BGA:
    """One of the bundled desk-scale models (see ``CANNED_MODELS``)."""
    if name in _canned_cache:
        return _canned_cache[name]
    if name == "point":
        B = BGA(["1"], [(0, 0)], 0, {(0, 0): [(0, 1)]}, label=name)
    elif name == "torus1":
        B = exterior_algebra([("x", 1, 0), ("y", 0, 1)], label=name)
    elif name == "torus2":
        B = exterior_algebra([("x1", 1, 0), ("x2", 1, 0), ("y1", 0, 1), ("y2", 0, 1)], label=name)
    elif name == "delbar-toy":
        B = exterior_algebra(
            [("x", 1, 0), ("y", 0, 1)], delbar={"x": [(1, ("x", "y"))]}, label=name
        )
    elif name == "iwasawa":
        B = exterior_algebra(
            [("phi1", 1, 0), ("phi2", 1, 0), ("phi3", 1, 0), ("psi1", 0, 1), ("psi2", 0, 1), ("psi3", 0, 1)],
            partial={"phi3": [(-1, ("phi1", "phi2"))]},
            delbar={"psi3": [(-1, ("psi1", "psi2"))]},
            label=name,
        )
    else:
        raise ValueError(f"unknown canned model {name!r}; choose from {', '.join(CANNED_MODELS)}")
    _canned_cache[name] = B
    return B


# ---------------------------------------------------------------------------
# Hodge truncation


class Truncated:
    """Element of the quotient by forms of holomorphic degree > ``max_p``,
    with degrees shifted down by ``2 * max_p``."""

    __slots__ = ("form", "max_p")

    def __init__(self, form: BGAElement, max_p: int = 1):
        self.form = form.filter_p(max_p)
        self.max_p = max_p

    @property
    def algebra(self) -> BGA:
        return self.form.algebra

    @property
    def degree(self) -> int:
        return self.form.degree - 2 * self.max_p

    def d(self) -> "Truncated":
        return truncated_d(self)

    def __add__(self, other: "Truncated") -> "Truncated":
        self._same(other)
        return Truncated(self.form + other.form, self.max_p)

    def __sub__(self, other: "Truncated") -> "Truncated":
        self._same(other)
        return Truncated(self.form - other.form, self.max_p)

    def __neg__(self):
        return Truncated(-self.form, self.max_p)

    def __mul__(self, scalar) -> "Truncated":
        return Truncated(self.form * rational(scalar), self.max_p)

    __rmul__ = __mul__

    def _same(self, other):
        if not isinstance(other, Truncated) or other.max_p != self.max_p:
            raise ValueError("truncated elements of different targets")

    def __eq__(self, other):
        if isinstance(other, Truncated):
            return self.max_p == other.max_p and self.form == other.form
        if other == 0:
            return not self.form
        return NotImplemented

    def __hash__(self):
        return hash((self.max_p, self.form))

    def __bool__(self):
        return bool(self.form)

    def __repr__(self):
        return f"Truncated({self.form}, max_p={self.max_p})"


def truncate(a: BGAElement, max_p: int = 1) -> Truncated:
    return Truncated(a, max_p)


def truncated_d(t: Truncated) -> Truncated:
    return Truncated(t.algebra.d(t.form), t.max_p)
