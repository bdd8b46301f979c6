"""The L-infinity morphism g = (g1, g2, g3) into the Hodge-truncated forms,
literal checkers for the L-infinity relations, the maps tau_p and the
Chern character cocycle."""

from __future__ import annotations

from fractions import Fraction
from math import factorial
from typing import Callable, Mapping, Sequence

from atlift.bga import BGA, BGAElement, _add_into
from atlift.connection import (
    Connection,
    CyclicForm,
    atiyah_cocycle,
    check_compatibility,
    nabla,
    pair,
)
from atlift.graded import Rational, koszul_sign, parity_sign, shuffles
from atlift.homcomplex import (
    FreeComplex,
    HomForm,
    bracket,
    compose,
    delbar,
    delta_bracket,
    power,
    supertrace,
)

HALF = Fraction(1, 2)


class IncompatibleFormError(ValueError):
    """The cyclic form is not compatible with the connection."""


class LInftyMorphism:
    """``g: A^{0,*}(Hom) ~> (A / A^{>=2,*})[2]`` built from a connection and a
    compatible cyclic form.  Target values are algebra elements with every
    term of holomorphic degree > 1 dropped."""

    max_arity = 3

    def __init__(self, D: Connection, F: CyclicForm, check: bool = True):
        self.connection = D
        self.form = F
        self.complex = D.complex
        self.base = D.complex.base
        if check:
            rep = check_compatibility(D, F)
            if not rep.passed:
                raise IncompatibleFormError(f"form {F} is not compatible: {rep.checks[0].failures[0]}")
        self.u = atiyah_cocycle(D)
        self._nabla_cache: dict = {}

    def __repr__(self):
        return f"<LInftyMorphism form={self.form} over {self.complex!r}>"

    # -- source and target structure ----------------------------------------
    def source_degree(self, h: HomForm) -> int:
        return h.degree

    def target_degree(self, a: BGAElement) -> int:
        return a.degree - 2

    def source_d(self, h: HomForm) -> HomForm:
        return delbar(h) + delta_bracket(h)

    def source_bracket(self, h1: HomForm, h2: HomForm) -> HomForm:
        return bracket(h1, h2)

    def target_d(self, a: BGAElement) -> BGAElement:
        return self.base.d(a).filter_p(1)

    def zero(self) -> BGAElement:
        return self.base.zero()

    def in_source(self, h: HomForm) -> bool:
        return h.max_p() == 0

    # -- components ---------------------------------------------------------
    def nabla(self, h: HomForm) -> HomForm:
        key = frozenset(h.terms.items())
        got = self._nabla_cache.get(key)
        if got is None:
            got = nabla(self.connection, h)
            if len(self._nabla_cache) < 100_000:
                self._nabla_cache[key] = got
        return got

    def g1(self, f: HomForm) -> BGAElement:
        return pair(self.form, self.u, f).filter_p(1)

    def g2(self, f: HomForm, g: HomForm) -> BGAElement:
        out = self.zero()
        pf, pg = f.by_parity(), g.by_parity()
        for a, fa in pf.items():
            for b, gb in pg.items():
                t = pair(self.form, self.nabla(fa), gb) - pair(self.form, self.nabla(gb), fa) * parity_sign(a * b)
                out = out + t
        return (out * HALF).filter_p(1)

    def g3(self, f: HomForm, g: HomForm, h: HomForm) -> BGAElement:
        return (pair(self.form, f, bracket(g, h)) * (-HALF)).filter_p(1)

    def g(self, n: int, args: Sequence[HomForm]) -> BGAElement:
        if len(args) != n:
            raise ValueError(f"g_{n} takes {n} arguments, got {len(args)}")
        if n == 1:
            return self.g1(*args)
        if n == 2:
            return self.g2(*args)
        if n == 3:
            return self.g3(*args)
        if n >= 4:
            return self.zero()
        raise ValueError("arity must be positive")


def build_g(D: Connection, F: CyclicForm, check: bool = True) -> LInftyMorphism:
    return LInftyMorphism(D, F, check=check)


# ---------------------------------------------------------------------------
# the relations, literally


def _permuted(args, sigma):
    return [args[sigma(i)] for i in range(len(args))]


def _rhs_terms(n, args, degs, g, d_src, br_src, zero):
    """``(-1)^(n-1) sum_{S(1,n-1)} chi g_n(d v, ...) + (-1)^(n-2) sum_{S(2,n-2)} chi g_{n-1}([v,v], ...)``."""
    out = zero
    for sigma in shuffles(1, n - 1):
        chi = koszul_sign(sigma, degs)
        w = _permuted(args, sigma)
        dv = d_src(w[0])
        if dv:
            out = out + g(n, [dv] + w[1:]) * (chi * parity_sign(n - 1))
    if n >= 2:
        for sigma in shuffles(2, n - 2):
            chi = koszul_sign(sigma, degs)
            w = _permuted(args, sigma)
            b = br_src(w[0], w[1])
            if b:
                out = out + g(n - 1, [b] + w[2:]) * (chi * parity_sign(n - 2))
    return out


def check_abelian_conditions(g: LInftyMorphism, n: int, args: Sequence[HomForm]) -> BGAElement:
    """Residual ``d g_n(v) - RHS`` of condition C_n (zero iff it holds)."""
    if not 1 <= n:
        raise ValueError("n must be positive")
    if len(args) != n:
        raise ValueError(f"C_{n} needs {n} arguments")
    degs = [g.source_degree(a) for a in args]
    lhs = g.target_d(g.g(n, list(args))) if n <= g.max_arity else g.zero()
    rhs = _rhs_terms(n, list(args), degs, g.g, g.source_d, g.source_bracket, g.zero())
    return lhs - rhs


# ---------------------------------------------------------------------------
# generic finite DG-Lie algebras


Vector = dict  # {basis index: Rational}


class DGLAPresentation:
    """Finite-dimensional DG-Lie algebra from structure constants.

    ``differential[i] = {j: c}`` gives ``d e_i``; ``bracket[(i, j)] = {k: c}``
    gives ``[e_i, e_j]`` (missing pairs are zero)."""

    def __init__(
        self,
        degrees: Sequence[int],
        differential: Mapping[int, Mapping[int, Rational]] | None = None,
        bracket_table: Mapping[tuple[int, int], Mapping[int, Rational]] | None = None,
        names: Sequence[str] | None = None,
    ):
        self.degrees = tuple(int(d) for d in degrees)
        self.dim = len(self.degrees)
        self.names = tuple(names) if names else tuple(f"v{i}" for i in range(self.dim))
        self.diff = {i: {j: c for j, c in col.items() if c} for i, col in (differential or {}).items()}
        self.br = {key: {k: c for k, c in v.items() if c} for key, v in (bracket_table or {}).items()}

    @property
    def abelian(self) -> bool:
        return not any(self.br.values())

    def d(self, v: Vector) -> Vector:
        acc: dict = {}
        for i, c in v.items():
            for j, w in self.diff.get(i, {}).items():
                _add_into(acc, j, c * w)
        return acc

    def bracket(self, v: Vector, w: Vector) -> Vector:
        acc: dict = {}
        for i, a in v.items():
            for j, b in w.items():
                for k, c in self.br.get((i, j), {}).items():
                    _add_into(acc, k, a * b * c)
        return acc

    def degree(self, v: Vector) -> int:
        degs = {self.degrees[i] for i in v}
        if len(degs) != 1:
            raise ValueError("zero or inhomogeneous vector has no degree")
        return degs.pop()

    def basis(self, i: int) -> Vector:
        return {i: 1}

    def validate(self) -> list[str]:
        """Violations of the DG-Lie axioms on basis elements (empty if valid)."""
        out = []
        n = range(self.dim)
        deg = self.degrees
        for i in n:
            for j, _ in self.diff.get(i, {}).items():
                if deg[j] != deg[i] + 1:
                    out.append(f"d({self.names[i]}) has a term of the wrong degree")
            if self.d(self.d({i: 1})):
                out.append(f"d^2({self.names[i]}) != 0")
        for (i, j), v in self.br.items():
            for k in v:
                if deg[k] != deg[i] + deg[j]:
                    out.append(f"[{self.names[i]},{self.names[j]}] has a term of the wrong degree")
        for i in n:
            for j in n:
                a = self.bracket({i: 1}, {j: 1})
                b = self.bracket({j: 1}, {i: 1})
                s = -parity_sign(deg[i] * deg[j])
                if _sub(a, _scale(b, s)):
                    out.append(f"[{self.names[i]},{self.names[j]}] not graded antisymmetric")
                lhs = self.d(a)
                rhs = _add(self.bracket(self.d({i: 1}), {j: 1}), _scale(self.bracket({i: 1}, self.d({j: 1})), parity_sign(deg[i])))
                if _sub(lhs, rhs):
                    out.append(f"d is not a derivation on ({self.names[i]},{self.names[j]})")
                for k in n:
                    # [x,[y,z]] = [[x,y],z] + (-1)^{xy} [y,[x,z]]
                    x, y, z = {i: 1}, {j: 1}, {k: 1}
                    l = self.bracket(x, self.bracket(y, z))
                    r = _add(self.bracket(self.bracket(x, y), z), _scale(self.bracket(y, self.bracket(x, z)), parity_sign(deg[i] * deg[j])))
                    if _sub(l, r):
                        out.append(f"Jacobi fails on ({self.names[i]},{self.names[j]},{self.names[k]})")
        return out


def _scale(v: Vector, s) -> Vector:
    return {k: c * s for k, c in v.items() if c * s}


def _add(v: Vector, w: Vector) -> Vector:
    acc = dict(v)
    for k, c in w.items():
        _add_into(acc, k, c)
    return acc


def _sub(v: Vector, w: Vector) -> Vector:
    return _add(v, _scale(w, -1))


class _VecOps:
    """Adapter giving plain dict vectors ``+`` and ``*`` for the shared kernel."""

    __slots__ = ("v",)

    def __init__(self, v: Vector):
        self.v = v

    def __add__(self, other):
        return _VecOps(_add(self.v, other.v))

    def __sub__(self, other):
        return _VecOps(_sub(self.v, other.v))

    def __mul__(self, s):
        return _VecOps(_scale(self.v, s))

    def __bool__(self):
        return bool(self.v)


Components = Mapping[int, Callable[..., Vector]]


def check_general_conditions(
    V: DGLAPresentation, L: DGLAPresentation, g: Components, n: int, args: Sequence[Vector]
) -> Vector:
    """Residual of the n-th L-infinity relation between DG-Lie algebras,
    including the quadratic ``{g_p, g_{n-p}}`` terms.  ``g[p]`` takes ``p``
    vectors of V and returns a vector of L; missing arities are zero."""
    if len(args) != n:
        raise ValueError(f"relation {n} needs {n} arguments")
    args = [dict(a) for a in args]
    degs = [V.degree(a) for a in args]

    def gv(m, vs):
        fn = g.get(m)
        if fn is None or any(not v for v in vs):
            return _VecOps({})
        return _VecOps(dict(fn(*[v.v if isinstance(v, _VecOps) else v for v in vs])))

    def d_src(v):
        return V.d(v)

    def br_src(v, w):
        return V.bracket(v, w)

    def g_call(m, vs):
        return gv(m, vs)

    lhs = _VecOps(L.d(gv(n, args).v))
    for p in range(1, n):
        for sigma in shuffles(p, n - p):
            chi = koszul_sign(sigma, degs)
            w = _permuted(args, sigma)
            e = (1 - n + p) * (sum(degs[sigma(i)] for i in range(p)) - p)
            a, b = gv(p, w[:p]), gv(n - p, w[p:])
            if a and b:
                lhs = lhs + _VecOps(L.bracket(a.v, b.v)) * (HALF * chi * parity_sign(e))
    rhs = _rhs_terms(n, args, degs, g_call, d_src, br_src, _VecOps({}))
    return (lhs - rhs).v


# ---------------------------------------------------------------------------
# presentations of the morphism's source and target


def source_presentation(cx: FreeComplex) -> tuple[DGLAPresentation, list[int]]:
    """The (0,*)-forms with values in Hom as a :class:`DGLAPresentation`.

    Returns the presentation and the HomForm basis indices it uses."""
    idx = [i for i in range(cx.hom_dim) if cx.base.bidegrees[cx.hom_key(i)[0]][0] == 0]
    pos = {i: a for a, i in enumerate(idx)}
    degs = cx.hom_basis_degrees()
    diff = {}
    for a, i in enumerate(idx):
        h = cx.hom_basis_element(i)
        dv = cx.hom_vector(delbar(h) + delta_bracket(h))
        diff[a] = {pos[j]: c for j, c in dv.items()}
    br = {}
    for a, i in enumerate(idx):
        hi = cx.hom_basis_element(i)
        for b, j in enumerate(idx):
            v = cx.hom_vector(bracket(hi, cx.hom_basis_element(j)))
            if v:
                br[(a, b)] = {pos[k]: c for k, c in v.items()}
    names = []
    for i in idx:
        k, r, c = cx.hom_key(i)
        names.append(f"{cx.base.names[k]}*E[{r},{c}]")
    return DGLAPresentation([degs[i] for i in idx], diff, br, names), idx


def truncated_target(B: BGA, max_p: int = 1) -> tuple[DGLAPresentation, list[int]]:
    """``(A / A^{>max_p,*})[2]`` with zero bracket, on the kept basis elements."""
    idx = [k for k in range(B.dim) if B.bidegrees[k][0] <= max_p]
    pos = {k: a for a, k in enumerate(idx)}
    diff = {}
    for a, k in enumerate(idx):
        dv = B.d(B.basis_element(k)).filter_p(max_p).coeffs
        diff[a] = {pos[j]: c for j, c in dv.items()}
    degs = [B.degrees[k] - 2 for k in idx]
    return DGLAPresentation(degs, diff, {}, [B.names[k] for k in idx]), idx


# ---------------------------------------------------------------------------
# semiregularity maps and characteristic forms


def tau(u: HomForm, f: HomForm, p: int) -> BGAElement:
    """``((-1)^p / p!) Tr(u^p f)``, keeping holomorphic degrees <= p."""
    if p < 0:
        raise ValueError("p must be non-negative")
    if u.complex is not f.complex:
        raise ValueError("u and f live over different complexes")
    val = supertrace(compose(power(u, p), f))
    return (val * Fraction(parity_sign(p), factorial(p))).filter_p(p)


def truncated_d(a: BGAElement, p: int) -> BGAElement:
    return a.algebra.d(a).filter_p(p)


def chern_cocycle(u: HomForm, p: int) -> BGAElement:
    """Degree-2p term ``Tr((-u)^p) / p!`` of ``Tr(exp(-u))``."""
    if p < 0:
        raise ValueError("p must be non-negative")
    return supertrace(power(-u, p)) * Fraction(1, factorial(p))


def trace_pairing_rank(C: Sequence[Sequence[Rational]]) -> int:
    """Rank of ``(A, B) -> Tr(C [A, B])`` on n x n rational matrices, read
    off from g_2 of the connection ``Gamma = C x`` on the elliptic-curve model."""
    from atlift.bga import canned_model
    from atlift.linalg import rank

    B = canned_model("torus1")
    n = len(C)
    cx = FreeComplex(B, {0: n})
    x = B.basis_element("x")
    D = Connection(cx, {0: [[x * c for c in row] for row in C]})
    g = build_g(D, CyclicForm(-1, 0), check=False)
    basis = [cx.elementary(0, i, 0, j) for i in range(n) for j in range(n)]
    xi = B.index("x")
    gram = [[-g.g2(a, b).coeffs.get(xi, 0) for b in basis] for a in basis]
    return rank(gram)
