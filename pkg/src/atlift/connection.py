"""Connections of type (1,0), the operator nabla, the Atiyah cocycle, cyclic
forms and the trace identities that tie them together."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Mapping, Sequence

from atlift.bga import BGAElement, _add_into
from atlift.graded import Rational, fmt, parity_sign, rational
from atlift.homcomplex import (
    FreeComplex,
    HomForm,
    SectionForm,
    bracket,
    commutator_on,
    delbar,
    delbar_section,
    delta_bracket,
    delta_section,
    extract,
    partial,
)


class Connection:
    """``D = d + Gamma`` on the generators: ``D(e_c) = sum_r Gamma_rc . e_r``.

    ``gamma`` maps a degree ``l`` to a ``rank(l) x rank(l)`` matrix whose
    entries are (1,0)-forms (``BGAElement`` or ``{basis: coeff}`` dicts, or 0).
    """

    def __init__(self, cx: FreeComplex, gamma: Mapping[int, Sequence[Sequence[object]]] | None = None):
        self.complex = cx
        B = cx.base
        terms: dict = {}
        for l, rows in (gamma or {}).items():
            l = int(l)
            n = cx.ranks.get(l, 0)
            rows = [list(row) for row in rows]
            if len(rows) != n or any(len(row) != n for row in rows):
                raise ValueError(f"gamma block on E^{l} must be {n}x{n}")
            for i, row in enumerate(rows):
                for j, entry in enumerate(row):
                    for k, v in _form_coeffs(B, entry).items():
                        terms[(k, cx.gen(l, i), cx.gen(l, j))] = v
        self.gamma = HomForm(cx, terms)
        self._check()

    @classmethod
    def from_homform(cls, gamma: HomForm) -> "Connection":
        D = cls.__new__(cls)
        D.complex = gamma.complex
        D.gamma = gamma
        D._check()
        return D

    def _check(self):
        cx = self.complex
        for (k, r, c), v in self.gamma.terms.items():
            if cx.base.bidegrees[k] != (1, 0):
                raise ValueError(f"gamma entry ({r},{c}) has a {cx.base.names[k]} term, not of bidegree (1,0)")
            if cx.gdeg[r] != cx.gdeg[c]:
                raise ValueError(f"gamma entry ({r},{c}) changes the complex degree")

    def __repr__(self):
        return f"Connection(gamma={self.gamma})"

    def d10(self, s: SectionForm) -> SectionForm:
        """``D^{1,0}(w.e) = dw.e + (-1)^|w| w.Gamma(e)`` minus the delbar part,
        i.e. ``partial w . e + (-1)^|w| w.Gamma(e)``."""
        cx = self.complex
        B = cx.base
        cols: dict[int, list] = {}
        for (k, r, c), v in self.gamma.terms.items():
            cols.setdefault(c, []).append((k, r, v))
        acc: dict = {}
        for (k, g), v in s.terms.items():
            for kk, cc in B.partial_basis(k):
                _add_into(acc, (kk, g), cc * v)
            sgn = parity_sign(B.degrees[k])
            for k2, r, w in cols.get(g, ()):
                for kk, cc in B.mul_basis(k, k2):
                    _add_into(acc, (kk, r), sgn * cc * w * v)
        return SectionForm(cx, acc)

    def full(self, s: SectionForm) -> SectionForm:
        """The whole connection ``D = D^{1,0} + delbar``."""
        return self.d10(s) + delbar_section(s)


def _form_coeffs(B, entry) -> dict[int, Rational]:
    if isinstance(entry, BGAElement):
        if entry.algebra is not B:
            raise ValueError("form from a different algebra")
        return dict(entry.coeffs)
    if isinstance(entry, Mapping):
        out = {}
        for key, v in entry.items():
            v = rational(v)
            if v:
                out[B.index(key)] = v
        return out
    if rational(entry) == 0:
        return {}
    raise ValueError(f"a connection entry must be a form, got {entry!r}")


def nabla(D: Connection, h: HomForm, check: bool = False) -> HomForm:
    """``nabla(h) = [D^{1,0}, h]``, computed on sections and read back as a HomForm."""
    if h.complex is not D.complex:
        raise ValueError("connection and HomForm live over different complexes")
    out = h.complex.zero()
    for par, part in h.by_parity().items():
        out = out + extract(
            D.complex,
            lambda s, part=part: commutator_on(D.d10, 1, part, s),
            parity=par ^ 1,
            check=check,
        )
    return out


def nabla_closed_form(D: Connection, h: HomForm) -> HomForm:
    """``partial(h) + [Gamma, h]``; agrees with :func:`nabla` (tested)."""
    return partial(h) + bracket(D.gamma, h)


def atiyah_cocycle(D: Connection, check: bool = False) -> HomForm:
    """``u = [D, delbar + delta]`` computed on sections and read back as a HomForm."""
    cx = D.complex

    def ddelta(s):
        return delbar_section(s) + delta_section(s)

    def u_op(s):
        return D.full(ddelta(s)) + ddelta(D.full(s))

    return extract(cx, u_op, parity=0, check=check)


def atiyah_closed_form(D: Connection) -> HomForm:
    """``delbar(Gamma) + partial(delta) + [Gamma, delta]``."""
    cx = D.complex
    return delbar(D.gamma) + partial(cx.delta) + bracket(D.gamma, cx.delta)


def delbar_part_of_u(D: Connection) -> HomForm:
    """``nabla(delbar) = [D^{1,0}, delbar]``, the (1,1)Hom^0 part of u."""

    def op(s):
        return D.d10(delbar_section(s)) + delbar_section(D.d10(s))

    return extract(D.complex, op, parity=0)


# ---------------------------------------------------------------------------
# cyclic forms


@dataclass(frozen=True)
class CyclicForm:
    """``<f,g> = a Tr(fg) + b Tr(f) Tr(g)`` extended to form-valued maps by
    ``<w.f, n.g> = (-1)^(|f||n|) (w^n) <f,g>``."""

    a: Rational = -1
    b: Rational = 0

    def __post_init__(self):
        object.__setattr__(self, "a", rational(self.a))
        object.__setattr__(self, "b", rational(self.b))

    def __str__(self):
        return f"(a={fmt(self.a)}, b={fmt(self.b)})"

    def form_sign(self, hom_degree: int, form_degree: int) -> int:
        return parity_sign(hom_degree * form_degree)

    def constant_table(self, cx: FreeComplex) -> dict[tuple[int, int], dict[tuple[int, int], Rational]]:
        """``<E_{r1,c1}, E_{r2,c2}>`` as ``{(r1,c1): {(r2,c2): value}}``."""
        cache = cx.__dict__.setdefault("_pairing_cache", {})
        key = (type(self), self.a, self.b)
        if key in cache:
            return cache[key]
        R = cx.rank
        gdeg = cx.gdeg
        out: dict = {}
        for r1 in range(R):
            for c1 in range(R):
                row: dict = {}
                if self.a:
                    # Tr(E_{r1,c1} E_{c1,r1}) = (-1)^deg(r1)
                    _add_into(row, (c1, r1), self.a * parity_sign(gdeg[r1]))
                if self.b and r1 == c1:
                    for g in range(R):
                        _add_into(row, (g, g), self.b * parity_sign(gdeg[r1] + gdeg[g]))
                if row:
                    out[(r1, c1)] = row
        cache[key] = out
        return out


def pair(F: CyclicForm, h1: HomForm, h2: HomForm) -> BGAElement:
    if h1.complex is not h2.complex:
        raise ValueError("HomForms over different complexes")
    cx = h1.complex
    B = cx.base
    table = F.constant_table(cx)
    gdeg = cx.gdeg
    bdeg = B.degrees
    by_m: dict = {}
    for (k2, r2, c2), v2 in h2.terms.items():
        by_m.setdefault((r2, c2), []).append((k2, v2))
    acc: dict = {}
    for (k1, r1, c1), v1 in h1.terms.items():
        row = table.get((r1, c1))
        if not row:
            continue
        n1 = gdeg[r1] - gdeg[c1]
        for m2, val in row.items():
            for k2, v2 in by_m.get(m2, ()):
                s = F.form_sign(n1, bdeg[k2])
                for k, cc in B.mul_basis(k1, k2):
                    _add_into(acc, k, s * cc * val * v1 * v2)
    return BGAElement(B, acc)


@dataclass
class Check:
    name: str
    passed: bool
    checked: int = 0
    failures: list = field(default_factory=list)

    def to_json(self) -> dict:
        return {
            "name": self.name,
            "pass": self.passed,
            "checked": self.checked,
            "failures": self.failures[:5],
        }


@dataclass
class Report:
    suite: str
    checks: list[Check] = field(default_factory=list)

    @property
    def passed(self) -> bool:
        return all(c.passed for c in self.checks)

    def add(self, name: str, failures: list, checked: int) -> Check:
        c = Check(name, not failures, checked, failures)
        self.checks.append(c)
        return c

    def __getitem__(self, name: str) -> Check:
        for c in self.checks:
            if c.name == name:
                return c
        raise KeyError(name)


def _basis_label(cx: FreeComplex, idx: int) -> str:
    k, r, c = cx.hom_key(idx)
    return f"{cx.base.names[k]}*E[{r},{c}]"


def check_compatibility(D: Connection, F: CyclicForm, nabla_table=None) -> Report:
    """``<nabla f, g> + (-1)^|f| <f, nabla g> = partial <f,g>`` on every pair
    of basis HomForms, evaluated with sparse tables rather than per pair."""
    from atlift.tables import hom_map_matrix, pairing_entries

    cx = D.complex
    B = cx.base
    P = pairing_entries(F, cx)  # {(i, j): {k: value}}
    N = nabla_table if nabla_table is not None else hom_map_matrix(cx, lambda h: nabla(D, h))
    rows: dict[int, dict[int, Rational]] = {}
    for i, col in N.items():
        for i2, v in col.items():
            rows.setdefault(i2, {})[i] = v
    by_first: dict[int, list] = {}
    for (i, j), vec in P.items():
        by_first.setdefault(i, []).append((j, vec))
    degs = cx.hom_basis_degrees()
    res: dict = {}
    for (i2, j), vec in P.items():
        # <nabla e_i, e_j>: contribution of e_i2 in nabla e_i
        for i, v in rows.get(i2, {}).items():
            for k, w in vec.items():
                _add_into(res, (i, j, k), v * w)
        # (-1)^|e_i| <e_i, nabla e_j>
        for j_out, v in rows.get(j, {}).items():
            s = parity_sign(degs[i2])
            for k, w in vec.items():
                _add_into(res, (i2, j_out, k), s * v * w)
        # - partial <e_i, e_j>
        for k, w in vec.items():
            for kk, cc in B.partial_basis(k):
                _add_into(res, (i2, j, kk), -cc * w)
    failures = []
    for (i, j, k), v in sorted(res.items()):
        if len(failures) >= 5:
            break
        failures.append(
            {"f": _basis_label(cx, i), "g": _basis_label(cx, j), "residual": f"{fmt(v)}*{B.names[k]}"}
        )
    report = Report("compatibility")
    report.add("compatibility", failures if res else [], len(degs) ** 2)
    return report


def check_cyclic(F: CyclicForm, cx: FreeComplex) -> Report:
    """Graded symmetry, ad-invariance and delta-closedness on constant basis maps."""
    consts = [HomForm(cx, {(cx.base.unit, r, c): 1}) for r in range(cx.rank) for c in range(cx.rank)]
    report = Report("cyclic-form")
    fails = []
    for f in consts:
        for g in consts:
            sym = pair(F, f, g) - pair(F, g, f) * parity_sign(f.degree * g.degree)
            if sym:
                fails.append({"f": str(f), "g": str(g), "residual": str(sym)})
    report.add("graded-symmetric", fails, len(consts) ** 2)
    fails = []
    for f in consts:
        for g in consts:
            fg = bracket(f, g)
            for h in consts:
                r = pair(F, fg, h) + pair(F, g, bracket(f, h)) * parity_sign(f.degree * g.degree)
                if r:
                    fails.append({"f": str(f), "g": str(g), "h": str(h), "residual": str(r)})
    report.add("ad-invariant", fails, len(consts) ** 3)
    fails = []
    for g in consts:
        dg = delta_bracket(g)
        for h in consts:
            r = pair(F, dg, h) + pair(F, g, delta_bracket(h)) * parity_sign(g.degree)
            if r:
                fails.append({"g": str(g), "h": str(h), "residual": str(r)})
    report.add("delta-closed", fails, len(consts) ** 2)
    return report


def verify_connection_identities(D: Connection, other: Connection | None = None) -> Report:
    """Check the connection/trace identities on every basis HomForm.

    Each linear map is tabulated once on the basis and the identities are
    compared as sparse matrix products."""
    from atlift.tables import SparseMap, hom_map_matrix, trace_matrix

    cx = D.complex
    B = cx.base
    W = cx.hom_dim
    u = atiyah_cocycle(D, check=True)
    nab_dbar = delbar_part_of_u(D)

    NAB = SparseMap(hom_map_matrix(cx, lambda h: nabla(D, h)))
    DT = SparseMap(hom_map_matrix(cx, lambda h: delbar(h) + delta_bracket(h)))
    DB = SparseMap(hom_map_matrix(cx, delbar))
    ADU = SparseMap(hom_map_matrix(cx, lambda h: bracket(u, h)))
    ADN = SparseMap(hom_map_matrix(cx, lambda h: bracket(nab_dbar, h)))
    TR = SparseMap(trace_matrix(cx))
    DFORM = SparseMap({k: dict(B.d(B.basis_element(k)).coeffs) for k in range(B.dim)})
    PFORM = SparseMap({k: dict(B.partial_basis(k)) for k in range(B.dim)})

    report = Report("connection-identities")

    def compare(name, lhs: SparseMap, rhs: SparseMap, label_cols=True):
        diff = lhs - rhs
        fails = []
        for j, col in sorted(diff.cols.items())[:5]:
            where = _basis_label(cx, j) if label_cols else str(j)
            fails.append({"a": where, "residual": _vec_str(col)})
        report.add(name, fails, W)

    compare("[delta+delbar, nabla](a) = [u,a]", DT @ NAB + NAB @ DT, ADU)
    compare("[nabla(delbar), a] = nabla(delbar a) + delbar nabla(a)", ADN, NAB @ DB + DB @ NAB)
    compare("Tr([D,h]) = d Tr(h)", TR @ (NAB + DB), DFORM @ TR)
    compare("Tr(nabla h) = partial Tr(h)", TR @ NAB, PFORM @ TR)

    closed = delbar(u) + delta_bracket(u)
    report.add("delbar u + [delta,u] = 0", [] if not closed else [{"residual": str(closed)}], 1)

    bad = {sig: str(part) for sig, part in u.components().items() if sig not in ((1, 1, 0), (1, 0, 1))}
    report.add("u in A11(Hom0) + A10(Hom1)", [bad] if bad else [], 1)

    if other is not None:
        a = other.gamma - D.gamma
        diff = atiyah_cocycle(other) - u - delbar(a) - delta_bracket(a)
        report.add("u' - u = delbar a + [delta,a]", [] if not diff else [{"residual": str(diff)}], 1)
    return report


def _vec_str(col: Mapping[int, Rational]) -> str:
    return " + ".join(f"{fmt(v)}@{i}" for i, v in sorted(col.items()))


def verify_operator_faithfulness(D: Connection) -> Report:
    """Compare every HomForm operation with its counterpart on explicit
    operators of the total space.

    Unary maps are checked on every basis HomForm.  Products are checked with
    the left factor running over ``E_rc`` and ``b . id``, which generate the
    HomForms under composition, and the right factor over the whole basis."""
    from atlift.homcomplex import (
        OperatorMatrix,
        compose,
        delbar_operator,
        delta_operator,
        operator_commutator,
        to_operator,
    )

    cx = D.complex
    B = cx.base
    W = cx.hom_dim
    basis = [cx.hom_basis_element(i) for i in range(W)]
    ops = [to_operator(h) for h in basis]
    zero = OperatorMatrix(cx.total_dim, {}, ops[0].row_degrees if ops else ())

    def op_of(h: HomForm) -> OperatorMatrix:
        # to_operator is linear, so images are read off the cached basis operators
        cols: dict = {}
        for i, c in cx.hom_vector(h).items():
            for j, col in ops[i].cols.items():
                tgt = cols.setdefault(j, {})
                for r, v in col.items():
                    _add_into(tgt, r, c * v)
        return OperatorMatrix(cx.total_dim, cols, zero.row_degrees)

    report = Report("operator-faithfulness")

    # spot-check linearity on a few mixed combinations
    samples = [basis[i] * 3 - basis[(7 * i + 1) % W] for i in range(0, W, max(1, W // 8))]
    fails = [{"h": str(h)} for h in samples if to_operator(h) != op_of(h)]
    report.add("linear", fails[:5], len(samples))

    DB, DL = delbar_operator(cx), delta_operator(cx)
    D10 = OperatorMatrix.from_section_op(cx, D.d10)
    for name, fn, O in (
        ("delbar", delbar, DB),
        ("delta_bracket", delta_bracket, DL),
        ("nabla", lambda h: nabla(D, h), D10),
    ):
        fails = []
        for i, h in enumerate(basis):
            if op_of(fn(h)) != operator_commutator(O, ops[i]):
                fails.append({"a": _basis_label(cx, i)})
        report.add(name, fails[:5], W)

    left = [cx.hom_from_vector({cx.hom_index(B.unit, r, c): 1}) for r in range(cx.rank) for c in range(cx.rank)]
    left += [HomForm(cx, {(k, g, g): 1 for g in range(cx.rank)}) for k in range(B.dim)]
    fails_c, fails_b = [], []
    for a in left:
        Oa = op_of(a)
        for j, b in enumerate(basis):
            if op_of(compose(a, b)) != Oa @ ops[j]:
                fails_c.append({"a": str(a), "b": _basis_label(cx, j)})
            if op_of(bracket(a, b)) != operator_commutator(Oa, ops[j]):
                fails_b.append({"a": str(a), "b": _basis_label(cx, j)})
    report.add("compose", fails_c[:5], len(left) * W)
    report.add("bracket", fails_b[:5], len(left) * W)
    return report
