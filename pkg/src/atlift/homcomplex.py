"""Form-valued endomorphisms of a finite complex of free modules.

A :class:`FreeComplex` has generators ``e_0 .. e_{R-1}`` (ordered by degree)
and a differential ``delta``.  A :class:`HomForm` is a finite sum
``sum c * b_k . E_{r,c}`` where ``b_k`` is a basis element of the algebra and
``E_{r,c}`` the elementary map sending generator ``c`` to generator ``r``.

The sign rules live in :func:`act` and :func:`compose` and nowhere else:

    (w.f)(n.e) = (-1)^(|f||n|) (w^n).f(e)
    (w.f)(n.g) = (-1)^(|f||n|) (w^n).fg

Everything on the operator side (:class:`OperatorMatrix`) is derived by
applying these to basis vectors, and is used to cross-check them.
"""

from __future__ import annotations

from typing import Callable, Mapping, Sequence

from atlift.bga import BGA, BGAElement, Violation, _add_into
from atlift.graded import Rational, fmt, normalize, parity_sign, rational

Key = tuple  # (k, r, c) for HomForm, (k, g) for SectionForm


class FreeComplex:
    """Finite complex ``E^lo -> ... -> E^hi`` of free modules over ``base``.

    ``ranks`` maps degree to rank; ``delta[l]`` is a ``rank(l+1) x rank(l)``
    matrix whose entries are rationals or ``(0,0)`` elements of ``base``.
    """

    def __init__(
        self,
        base: BGA,
        ranks: Mapping[int, int],
        delta: Mapping[int, Sequence[Sequence[object]]] | None = None,
        check: bool = True,
    ):
        if not ranks:
            raise ValueError("a complex needs at least one nonzero module")
        self.base = base
        self.ranks = {int(l): int(r) for l, r in sorted(ranks.items()) if int(r) != 0}
        for l, r in self.ranks.items():
            if r < 0:
                raise ValueError(f"negative rank in degree {l}")
        degs = sorted(self.ranks)
        self.lo, self.hi = degs[0], degs[-1]
        self.offsets: dict[int, int] = {}
        gdeg: list[int] = []
        for l in degs:
            self.offsets[l] = len(gdeg)
            gdeg.extend([l] * self.ranks[l])
        self.gdeg = tuple(gdeg)
        self.rank = len(gdeg)

        # delta entries, keyed (row generator, column generator) -> algebra coeffs
        self.delta_entries: dict[tuple[int, int], dict[int, Rational]] = {}
        for l, rows in (delta or {}).items():
            l = int(l)
            src, tgt = self.ranks.get(l, 0), self.ranks.get(l + 1, 0)
            rows = [list(row) for row in rows]
            if len(rows) != tgt or any(len(row) != src for row in rows):
                raise ValueError(
                    f"delta block E^{l} -> E^{l + 1} must be {tgt}x{src}, "
                    f"got {len(rows)}x{len(rows[0]) if rows else 0}"
                )
            for i, row in enumerate(rows):
                for j, entry in enumerate(row):
                    coeffs = self._entry_coeffs(entry)
                    if coeffs:
                        self.delta_entries[(self.offsets[l + 1] + i, self.offsets[l] + j)] = coeffs
        terms = {}
        for (r, c), coeffs in self.delta_entries.items():
            for k, v in coeffs.items():
                terms[(k, r, c)] = v
        self.delta = HomForm(self, terms)
        if check:
            problems = validate_complex(self)
            if problems:
                raise ValueError("; ".join(str(p) for p in problems))

    def _entry_coeffs(self, entry) -> dict[int, Rational]:
        if isinstance(entry, BGAElement):
            if entry.algebra is not self.base:
                raise ValueError("delta entry from a different algebra")
            return dict(entry.coeffs)
        c = rational(entry)
        return {self.base.unit: c} if c else {}

    def __repr__(self):
        prof = ",".join(f"{l}:{r}" for l, r in self.ranks.items())
        return f"<FreeComplex over {self.base!r} ranks {{{prof}}}>"

    def gen(self, l: int, i: int) -> int:
        """Global index of the ``i``-th generator of ``E^l``."""
        if not 0 <= i < self.ranks.get(l, 0):
            raise ValueError(f"E^{l} has no generator {i}")
        return self.offsets[l] + i

    def hom_degree(self, r: int, c: int) -> int:
        return self.gdeg[r] - self.gdeg[c]

    # -- constructors ------------------------------------------------------
    def zero(self) -> "HomForm":
        return HomForm(self, {})

    def identity(self) -> "HomForm":
        u = self.base.unit
        return HomForm(self, {(u, g, g): 1 for g in range(self.rank)})

    def elementary(self, tgt_deg: int, i: int, src_deg: int, j: int, form=None) -> "HomForm":
        """``form . E`` with ``E`` sending generator ``j`` of ``E^src_deg`` to
        generator ``i`` of ``E^tgt_deg``."""
        r, c = self.gen(tgt_deg, i), self.gen(src_deg, j)
        return HomForm.from_pieces(self, form, {(r, c): 1})

    def from_matrix(self, src_deg: int, tgt_deg: int, matrix, form=None) -> "HomForm":
        """``form . f`` with ``f: E^src_deg -> E^tgt_deg`` given as a rational matrix."""
        rows = [list(row) for row in matrix]
        if len(rows) != self.ranks.get(tgt_deg, 0) or any(
            len(row) != self.ranks.get(src_deg, 0) for row in rows
        ):
            raise ValueError("matrix shape does not match the ranks")
        entries = {}
        for i, row in enumerate(rows):
            for j, v in enumerate(row):
                v = rational(v)
                if v:
                    entries[(self.gen(tgt_deg, i), self.gen(src_deg, j))] = v
        return HomForm.from_pieces(self, form, entries)

    def hom_basis(self, max_p: int | None = None, p: int | None = None) -> list["HomForm"]:
        """Basis ``b_k . E_{r,c}`` of the form-valued endomorphisms, optionally
        restricted to holomorphic degree ``p`` (or ``<= max_p``)."""
        out = []
        for k, (bp, _) in enumerate(self.base.bidegrees):
            if p is not None and bp != p:
                continue
            if max_p is not None and bp > max_p:
                continue
            for r in range(self.rank):
                for c in range(self.rank):
                    out.append(HomForm(self, {(k, r, c): 1}))
        return out

    def source_basis(self) -> list["HomForm"]:
        """Basis of the DG-Lie algebra of (0,*)-forms with values in Hom."""
        return self.hom_basis(p=0)

    def section_basis(self) -> list["SectionForm"]:
        return [
            SectionForm(self, {(k, g): 1}) for g in range(self.rank) for k in range(self.base.dim)
        ]

    @property
    def hom_dim(self) -> int:
        return self.base.dim * self.rank * self.rank

    def hom_index(self, k: int, r: int, c: int) -> int:
        return (k * self.rank + r) * self.rank + c

    def hom_key(self, idx: int) -> tuple[int, int, int]:
        kr, c = divmod(idx, self.rank)
        k, r = divmod(kr, self.rank)
        return k, r, c

    def hom_basis_degrees(self) -> list[int]:
        bdeg, gdeg, R = self.base.degrees, self.gdeg, self.rank
        return [bdeg[k] + gdeg[r] - gdeg[c] for k in range(self.base.dim) for r in range(R) for c in range(R)]

    def hom_vector(self, h: "HomForm") -> dict[int, Rational]:
        return {self.hom_index(*key): v for key, v in h.terms.items()}

    def hom_from_vector(self, vec: Mapping[int, Rational]) -> "HomForm":
        return HomForm(self, {self.hom_key(i): v for i, v in vec.items()})

    def hom_basis_element(self, idx: int) -> "HomForm":
        return HomForm(self, {self.hom_key(idx): 1})

    def total_index(self, k: int, g: int) -> int:
        return g * self.base.dim + k

    @property
    def total_dim(self) -> int:
        return self.base.dim * self.rank

    def euler_characteristic(self) -> int:
        return sum(parity_sign(l) * r for l, r in self.ranks.items())

    def source_differential(self, h: "HomForm") -> "HomForm":
        return delbar(h) + delta_bracket(h)


def validate_complex(cx: FreeComplex) -> list[Violation]:
    """delta entries must be delbar-closed of bidegree (0,0), and delta^2 = 0."""
    out = []
    B = cx.base
    for (r, c), coeffs in sorted(cx.delta_entries.items()):
        where = f"delta E^{cx.gdeg[c]} -> E^{cx.gdeg[r]} entry ({r - cx.offsets[cx.gdeg[r]]},{c - cx.offsets[cx.gdeg[c]]})"
        bad = {k: v for k, v in coeffs.items() if B.bidegrees[k] != (0, 0)}
        if bad:
            out.append(Violation("delta-bidegree", where, str(BGAElement(B, bad))))
        db = B.delbar_coeffs(coeffs)
        if db:
            out.append(Violation("delta-holomorphic", where, str(BGAElement(B, db))))
    sq = compose(cx.delta, cx.delta)
    blocks: dict[int, dict] = {}
    for (k, r, c), v in sq.terms.items():
        blocks.setdefault(cx.gdeg[c], {})[(k, r, c)] = v
    for l, terms in sorted(blocks.items()):
        out.append(
            Violation("delta-squared", f"block E^{l} -> E^{l + 2}", str(HomForm(cx, terms)))
        )
    return out


class HomForm:
    """Sparse form-valued endomorphism: ``terms[(k, r, c)] = coefficient``."""

    __slots__ = ("complex", "terms")

    def __init__(self, cx: FreeComplex, terms: Mapping[Key, Rational]):
        self.complex = cx
        self.terms = {key: normalize(v) for key, v in terms.items() if v}

    @classmethod
    def from_pieces(cls, cx: FreeComplex, form, entries: Mapping[tuple[int, int], Rational]) -> "HomForm":
        if form is None:
            fcoeffs = {cx.base.unit: 1}
        elif isinstance(form, BGAElement):
            if form.algebra is not cx.base:
                raise ValueError("form from a different algebra")
            fcoeffs = form.coeffs
        else:
            fcoeffs = {cx.base.index(form): 1}
        acc: dict = {}
        for (r, c), v in entries.items():
            for k, w in fcoeffs.items():
                _add_into(acc, (k, r, c), v * w)
        return cls(cx, acc)

    # -- arithmetic --------------------------------------------------------
    def _same(self, other: "HomForm") -> None:
        if not isinstance(other, HomForm):
            raise TypeError(f"expected a HomForm, got {type(other).__name__}")
        if other.complex is not self.complex:
            raise ValueError("HomForms over different complexes")

    def __add__(self, other: "HomForm") -> "HomForm":
        self._same(other)
        acc = dict(self.terms)
        for key, v in other.terms.items():
            _add_into(acc, key, v)
        return HomForm(self.complex, acc)

    def __sub__(self, other: "HomForm") -> "HomForm":
        self._same(other)
        acc = dict(self.terms)
        for key, v in other.terms.items():
            _add_into(acc, key, -v)
        return HomForm(self.complex, acc)

    def __neg__(self) -> "HomForm":
        return HomForm(self.complex, {key: -v for key, v in self.terms.items()})

    def __mul__(self, scalar) -> "HomForm":
        s = rational(scalar)
        return HomForm(self.complex, {key: v * s for key, v in self.terms.items()})

    __rmul__ = __mul__

    def __eq__(self, other):
        if isinstance(other, HomForm):
            return self.complex is other.complex and self.terms == other.terms
        if other == 0:
            return not self.terms
        return NotImplemented

    def __hash__(self):
        return hash(frozenset(self.terms.items()))

    def __bool__(self):
        return bool(self.terms)

    def __repr__(self):
        return f"HomForm({self})"

    def __str__(self):
        if not self.terms:
            return "0"
        cx = self.complex
        names = cx.base.names
        parts = []
        for (k, r, c), v in sorted(self.terms.items()):
            unit = "" if k == cx.base.unit else f"{names[k]}*"
            parts.append(f"{fmt(v)}*{unit}E[{r},{c}]")
        return " + ".join(parts)

    # -- grading -----------------------------------------------------------
    def term_degree(self, key: Key) -> int:
        k, r, c = key
        cx = self.complex
        return cx.base.degrees[k] + cx.gdeg[r] - cx.gdeg[c]

    @property
    def degree(self) -> int:
        degs = {self.term_degree(key) for key in self.terms}
        if len(degs) != 1:
            raise ValueError("degree of a zero or inhomogeneous HomForm")
        return degs.pop()

    def by_parity(self) -> dict[int, "HomForm"]:
        parts: dict[int, dict] = {}
        for key, v in self.terms.items():
            parts.setdefault(self.term_degree(key) & 1, {})[key] = v
        return {par: HomForm(self.complex, t) for par, t in parts.items()}

    def components(self) -> dict[tuple[int, int, int], "HomForm"]:
        """Split by (holomorphic degree, antiholomorphic degree, Hom degree)."""
        cx = self.complex
        parts: dict[tuple, dict] = {}
        for key, v in self.terms.items():
            k, r, c = key
            p, q = cx.base.bidegrees[k]
            parts.setdefault((p, q, cx.gdeg[r] - cx.gdeg[c]), {})[key] = v
        return {sig: HomForm(cx, t) for sig, t in sorted(parts.items())}

    def max_p(self) -> int:
        bd = self.complex.base.bidegrees
        return max((bd[k][0] for k, _, _ in self.terms), default=0)

    def to_json(self) -> list:
        names = self.complex.base.names
        return [[names[k], r, c, fmt(v)] for (k, r, c), v in sorted(self.terms.items())]


class SectionForm:
    """Sparse element of the form-valued sections: ``terms[(k, g)] = coefficient``."""

    __slots__ = ("complex", "terms")

    def __init__(self, cx: FreeComplex, terms: Mapping[Key, Rational]):
        self.complex = cx
        self.terms = {key: normalize(v) for key, v in terms.items() if v}

    def __add__(self, other: "SectionForm") -> "SectionForm":
        acc = dict(self.terms)
        for key, v in other.terms.items():
            _add_into(acc, key, v)
        return SectionForm(self.complex, acc)

    def __sub__(self, other: "SectionForm") -> "SectionForm":
        return self + (-other)

    def __neg__(self):
        return SectionForm(self.complex, {key: -v for key, v in self.terms.items()})

    def __mul__(self, scalar):
        s = rational(scalar)
        return SectionForm(self.complex, {key: v * s for key, v in self.terms.items()})

    __rmul__ = __mul__

    def __eq__(self, other):
        if isinstance(other, SectionForm):
            return self.complex is other.complex and self.terms == other.terms
        if other == 0:
            return not self.terms
        return NotImplemented

    def __bool__(self):
        return bool(self.terms)

    def __repr__(self):
        names = self.complex.base.names
        if not self.terms:
            return "SectionForm(0)"
        body = " + ".join(f"{fmt(v)}*{names[k]}.e{g}" for (k, g), v in sorted(self.terms.items()))
        return f"SectionForm({body})"

    def form_multiply(self, form: Mapping[int, Rational]) -> "SectionForm":
        """Left multiplication ``w . (n.e) = (w^n).e`` by a form given as coefficients."""
        B = self.complex.base
        acc: dict = {}
        for (k, g), v in self.terms.items():
            for k2, w in form.items():
                for kk, cc in B.mul_basis(k2, k):
                    _add_into(acc, (kk, g), cc * w * v)
        return SectionForm(self.complex, acc)


# ---------------------------------------------------------------------------
# the two sign rules


def _same_complex(*objs) -> FreeComplex:
    cx = objs[0].complex
    for o in objs[1:]:
        if o.complex is not cx:
            raise ValueError("objects live over different complexes")
    return cx


def act(h: HomForm, s: SectionForm) -> SectionForm:
    """Apply ``h`` to a form-valued section."""
    cx = _same_complex(h, s)
    B = cx.base
    bdeg = B.degrees
    gdeg = cx.gdeg
    by_gen: dict[int, list] = {}
    for (k, g), v in s.terms.items():
        by_gen.setdefault(g, []).append((k, v))
    acc: dict = {}
    for (k1, r, c), v1 in h.terms.items():
        sec = by_gen.get(c)
        if not sec:
            continue
        n = gdeg[r] - gdeg[c]
        row = B._prod[k1]
        for k2, v2 in sec:
            s_ = -1 if (n & 1 and bdeg[k2] & 1) else 1
            for k, cc in row[k2]:
                _add_into(acc, (k, r), s_ * cc * v1 * v2)
    return SectionForm(cx, acc)


def compose(h1: HomForm, h2: HomForm) -> HomForm:
    """Composition product ``h1 h2``."""
    cx = _same_complex(h1, h2)
    B = cx.base
    bdeg = B.degrees
    gdeg = cx.gdeg
    by_row: dict[int, list] = {}
    for (k2, r2, c2), v2 in h2.terms.items():
        by_row.setdefault(r2, []).append((k2, c2, v2))
    acc: dict = {}
    for (k1, r1, c1), v1 in h1.terms.items():
        rest = by_row.get(c1)
        if not rest:
            continue
        n1 = gdeg[r1] - gdeg[c1]
        row = B._prod[k1]
        for k2, c2, v2 in rest:
            s_ = -1 if (n1 & 1 and bdeg[k2] & 1) else 1
            for k, cc in row[k2]:
                _add_into(acc, (k, r1, c2), s_ * cc * v1 * v2)
    return HomForm(cx, acc)


def bracket(h1: HomForm, h2: HomForm) -> HomForm:
    """Graded commutator ``h1 h2 - (-1)^(|h1||h2|) h2 h1`` (bilinear in parity parts)."""
    _same_complex(h1, h2)
    out = h1.complex.zero()
    p2 = h2.by_parity()
    for a, x in h1.by_parity().items():
        for b, y in p2.items():
            xy = compose(x, y)
            yx = compose(y, x)
            out = out + (xy + yx if (a & b) else xy - yx)
    return out


def delta_bracket(h: HomForm) -> HomForm:
    return bracket(h.complex.delta, h)


def _coefficientwise(h: HomForm, table_op) -> HomForm:
    acc: dict = {}
    for (k, r, c), v in h.terms.items():
        for kk, cc in table_op(k):
            _add_into(acc, (kk, r, c), cc * v)
    return HomForm(h.complex, acc)


def delbar(h: HomForm) -> HomForm:
    """Dolbeault differential on the form coefficients."""
    return _coefficientwise(h, h.complex.base.delbar_basis)


def partial(h: HomForm) -> HomForm:
    """Holomorphic differential on the form coefficients."""
    return _coefficientwise(h, h.complex.base.partial_basis)


def total_differential(h: HomForm) -> HomForm:
    return delbar(h) + delta_bracket(h)


def form_multiply(form: BGAElement, h: HomForm) -> HomForm:
    """``w . (n.f) = (w^n).f``."""
    cx = h.complex
    if form.algebra is not cx.base:
        raise ValueError("form from a different algebra")
    B = cx.base
    acc: dict = {}
    for (k, r, c), v in h.terms.items():
        for k0, w in form.coeffs.items():
            for kk, cc in B.mul_basis(k0, k):
                _add_into(acc, (kk, r, c), cc * w * v)
    return HomForm(cx, acc)


def supertrace(h: HomForm) -> BGAElement:
    """``Tr(w.f) = w * sum_l (-1)^l tr(f|E^l)``; off-diagonal Hom degrees give 0."""
    cx = h.complex
    acc: dict = {}
    for (k, r, c), v in h.terms.items():
        if r == c:
            _add_into(acc, k, parity_sign(cx.gdeg[c]) * v)
    return BGAElement(cx.base, acc)


def power(h: HomForm, p: int) -> HomForm:
    if p < 0:
        raise ValueError("negative power")
    out = h.complex.identity()
    for _ in range(p):
        out = compose(out, h)
    return out


# ---------------------------------------------------------------------------
# operators on sections, straight from their definitions


def delbar_section(s: SectionForm) -> SectionForm:
    B = s.complex.base
    acc: dict = {}
    for (k, g), v in s.terms.items():
        for kk, cc in B.delbar_basis(k):
            _add_into(acc, (kk, g), cc * v)
    return SectionForm(s.complex, acc)


def partial_section(s: SectionForm) -> SectionForm:
    B = s.complex.base
    acc: dict = {}
    for (k, g), v in s.terms.items():
        for kk, cc in B.partial_basis(k):
            _add_into(acc, (kk, g), cc * v)
    return SectionForm(s.complex, acc)


def delta_section(s: SectionForm) -> SectionForm:
    """``delta(w.e) = (-1)^|w| w.delta(e)`` with ``delta(e_c) = sum_r delta_rc e_r``."""
    cx = s.complex
    B = cx.base
    cols: dict[int, list] = {}
    for (r, c), coeffs in cx.delta_entries.items():
        cols.setdefault(c, []).append((r, coeffs))
    acc: dict = {}
    for (k, g), v in s.terms.items():
        sgn = parity_sign(B.degrees[k])
        for r, coeffs in cols.get(g, ()):
            for k2, w in coeffs.items():
                for kk, cc in B.mul_basis(k, k2):
                    _add_into(acc, (kk, r), sgn * cc * w * v)
    return SectionForm(cx, acc)


SectionOp = Callable[[SectionForm], SectionForm]


def commutator_on(A: SectionOp, a_parity: int, h: HomForm, s: SectionForm) -> SectionForm:
    """Evaluate the graded commutator ``[A, h]`` on a section (``A`` homogeneous)."""
    out = SectionForm(s.complex, {})
    for par, part in h.by_parity().items():
        first = A(act(part, s))
        second = act(part, A(s))
        out = out + (first + second if (a_parity & par) else first - second)
    return out


class ExtractionError(RuntimeError):
    """An operator that should be form-linear is not: a sign convention is broken."""


def extract(cx: FreeComplex, X: SectionOp, parity: int | None = None, check: bool = False) -> HomForm:
    """Recover the HomForm of a form-linear operator from its values on the
    generators ``1.e_c``.  With ``check`` every basis section is verified
    against ``X(w.s) = (-1)^(|X||w|) w.X(s)`` (needs ``parity``)."""
    B = cx.base
    u = B.unit
    acc: dict = {}
    images = {}
    for c in range(cx.rank):
        img = X(SectionForm(cx, {(u, c): 1}))
        images[c] = img
        for (k, r), v in img.terms.items():
            acc[(k, r, c)] = v
    if check:
        if parity is None:
            raise ValueError("checking form-linearity needs the operator parity")
        for c in range(cx.rank):
            for k in range(B.dim):
                got = X(SectionForm(cx, {(k, c): 1}))
                want = images[c].form_multiply({k: parity_sign(parity * B.degrees[k])})
                if got != want:
                    raise ExtractionError(
                        f"operator is not form-linear on {B.names[k]}.e{c}: {got!r} != {want!r}"
                    )
    return HomForm(cx, acc)


# ---------------------------------------------------------------------------
# operator oracle


class OperatorMatrix:
    """Sparse square matrix on the total space ``BGA (x) generators``.

    Stored column-wise: ``cols[j] = {i: value}``.  Basis vector ``b_k.e_g``
    has index ``g * dim(BGA) + k``.
    """

    __slots__ = ("dim", "cols", "row_degrees")

    def __init__(self, dim: int, cols: Mapping[int, Mapping[int, Rational]], row_degrees: Sequence[int]):
        self.dim = dim
        self.cols = {j: {i: v for i, v in col.items() if v} for j, col in cols.items()}
        self.cols = {j: col for j, col in self.cols.items() if col}
        self.row_degrees = tuple(row_degrees)

    @classmethod
    def from_section_op(cls, cx: FreeComplex, op: SectionOp) -> "OperatorMatrix":
        cols = {}
        for g in range(cx.rank):
            for k in range(cx.base.dim):
                img = op(SectionForm(cx, {(k, g): 1}))
                cols[cx.total_index(k, g)] = {cx.total_index(kk, gg): v for (kk, gg), v in img.terms.items()}
        degs = [cx.base.degrees[k] + cx.gdeg[g] for g in range(cx.rank) for k in range(cx.base.dim)]
        return cls(cx.total_dim, cols, degs)

    def __eq__(self, other):
        return isinstance(other, OperatorMatrix) and self.dim == other.dim and self.cols == other.cols

    def __add__(self, other: "OperatorMatrix") -> "OperatorMatrix":
        cols = {j: dict(col) for j, col in self.cols.items()}
        for j, col in other.cols.items():
            tgt = cols.setdefault(j, {})
            for i, v in col.items():
                _add_into(tgt, i, v)
        return OperatorMatrix(self.dim, cols, self.row_degrees)

    def __neg__(self):
        return OperatorMatrix(self.dim, {j: {i: -v for i, v in c.items()} for j, c in self.cols.items()}, self.row_degrees)

    def __sub__(self, other: "OperatorMatrix") -> "OperatorMatrix":
        return self + (-other)

    def __matmul__(self, other: "OperatorMatrix") -> "OperatorMatrix":
        return oracle_compose(self, other)

    def is_zero(self) -> bool:
        return not self.cols

    def entry(self, i: int, j: int) -> Rational:
        return self.cols.get(j, {}).get(i, 0)

    def by_parity(self) -> dict[int, "OperatorMatrix"]:
        parts: dict[int, dict] = {}
        degs = self.row_degrees
        for j, col in self.cols.items():
            for i, v in col.items():
                parts.setdefault((degs[i] - degs[j]) & 1, {}).setdefault(j, {})[i] = v
        return {p: OperatorMatrix(self.dim, c, degs) for p, c in parts.items()}

    def flat(self) -> dict[tuple[int, int], Rational]:
        return {(i, j): v for j, col in self.cols.items() for i, v in col.items()}


def oracle_compose(O1: OperatorMatrix, O2: OperatorMatrix) -> OperatorMatrix:
    """Plain sparse matrix product."""
    if O1.dim != O2.dim:
        raise ValueError("operator dimensions differ")
    cols = {}
    for j, col in O2.cols.items():
        acc: dict = {}
        for m, v in col.items():
            for i, w in O1.cols.get(m, {}).items():
                _add_into(acc, i, w * v)
        if acc:
            cols[j] = acc
    return OperatorMatrix(O1.dim, cols, O1.row_degrees)


def operator_commutator(O1: OperatorMatrix, O2: OperatorMatrix) -> OperatorMatrix:
    out = OperatorMatrix(O1.dim, {}, O1.row_degrees)
    p2 = O2.by_parity()
    for a, x in O1.by_parity().items():
        for b, y in p2.items():
            xy, yx = oracle_compose(x, y), oracle_compose(y, x)
            out = out + (xy + yx if (a & b) else xy - yx)
    return out


def to_operator(h: HomForm) -> OperatorMatrix:
    """Realise ``h`` as a linear endomorphism of the total space via :func:`act`."""
    return OperatorMatrix.from_section_op(h.complex, lambda s: act(h, s))


def delbar_operator(cx: FreeComplex) -> OperatorMatrix:
    return OperatorMatrix.from_section_op(cx, delbar_section)


def partial_operator(cx: FreeComplex) -> OperatorMatrix:
    return OperatorMatrix.from_section_op(cx, partial_section)


def delta_operator(cx: FreeComplex) -> OperatorMatrix:
    return OperatorMatrix.from_section_op(cx, delta_section)
