"""Maurer-Cartan elements with coefficients in truncated polynomial rings,
order-by-order obstructions, and the check that g_1 (equivalently tau_1)
kills every obstruction class."""

from __future__ import annotations

import random
from dataclasses import dataclass, field
from fractions import Fraction
from itertools import product
from math import factorial
from typing import Mapping, Sequence

from atlift.bga import BGAElement
from atlift.connection import Connection, CyclicForm
from atlift.graded import Rational
from atlift.homcomplex import FreeComplex, HomForm, bracket, delbar, delta_bracket
from atlift.linalg import FiniteComplex
from atlift.linfty import LInftyMorphism, build_g, tau

Monomial = tuple  # exponent vector

# c_n in  sum_n c_n g_n(x, ..., x): matching the coefficient of
# g_k([x,x], x, ..., x) in d(pushforward) forces c_k = (k+1) c_{k+1}
PUSHFORWARD_CONSTANTS = (Fraction(1), Fraction(1, 2), Fraction(1, 6))


class ArtinCoefficients:
    """``Q[t_1..t_k] / m^(order+1)``; monomials are exponent tuples."""

    def __init__(self, variables: Sequence[str] = ("t",), order: int = 3):
        if not variables:
            raise ValueError("need at least one variable")
        if order < 1:
            raise ValueError("order must be at least 1")
        self.variables = tuple(variables)
        self.order = int(order)

    def __repr__(self):
        return f"ArtinCoefficients({list(self.variables)}, order={self.order})"

    @property
    def k(self) -> int:
        return len(self.variables)

    def degree(self, mono: Monomial) -> int:
        return sum(mono)

    def monomials(self, degree: int) -> list[Monomial]:
        return sorted(
            (m for m in product(range(degree + 1), repeat=self.k) if sum(m) == degree),
            reverse=True,
        )

    def mul(self, a: Monomial, b: Monomial) -> Monomial | None:
        m = tuple(x + y for x, y in zip(a, b))
        return m if sum(m) <= self.order else None

    def variable(self, i: int) -> Monomial:
        return tuple(1 if j == i else 0 for j in range(self.k))

    def name(self, mono: Monomial) -> str:
        parts = []
        for v, e in zip(self.variables, mono):
            if e == 1:
                parts.append(v)
            elif e > 1:
                parts.append(f"{v}^{e}")
        return "*".join(parts) or "1"


class MCElement:
    """``x = sum_mu x_mu . mu`` with ``x_mu`` degree-1 elements of the source
    (forms of type (0,*)) and ``mu`` running over monomials in the maximal ideal."""

    def __init__(self, ring: ArtinCoefficients, cx: FreeComplex, terms: Mapping[Monomial, HomForm] | None = None):
        self.ring = ring
        self.complex = cx
        self.terms: dict[Monomial, HomForm] = {}
        for mono, h in (terms or {}).items():
            mono = tuple(mono)
            if len(mono) != ring.k or sum(mono) < 1:
                raise ValueError(f"{mono} is not a monomial of the maximal ideal")
            if sum(mono) > ring.order or not h:
                continue
            if h.complex is not cx:
                raise ValueError("coefficient over another complex")
            if h.degree != 1:
                raise ValueError(f"coefficient of {ring.name(mono)} has degree {h.degree}, not 1")
            if h.max_p() != 0:
                raise ValueError("coefficients must be (0,*)-forms")
            self.terms[mono] = h

    def __repr__(self):
        body = " + ".join(f"({h}){self.ring.name(m)}" for m, h in sorted(self.terms.items(), reverse=True))
        return f"MCElement({body or '0'})"

    def part(self, degree: int) -> dict[Monomial, HomForm]:
        return {m: h for m, h in self.terms.items() if sum(m) == degree}

    def plus(self, extra: Mapping[Monomial, HomForm]) -> "MCElement":
        terms = dict(self.terms)
        for m, h in extra.items():
            terms[m] = terms[m] + h if m in terms else h
        return MCElement(self.ring, self.complex, {m: h for m, h in terms.items() if h})


def source_d(h: HomForm) -> HomForm:
    return delbar(h) + delta_bracket(h)


def mc_residual(x: MCElement) -> dict[Monomial, HomForm]:
    """``delbar x + [delta, x] + 1/2 [x, x]`` by monomial (zero parts dropped)."""
    ring = x.ring
    acc: dict[Monomial, HomForm] = {}

    def add(m, h):
        if h:
            acc[m] = acc[m] + h if m in acc else h

    for m, h in x.terms.items():
        add(m, source_d(h))
    items = list(x.terms.items())
    for m1, h1 in items:
        for m2, h2 in items:
            m = ring.mul(m1, m2)
            if m is not None:
                add(m, bracket(h1, h2) * Fraction(1, 2))
    return {m: h for m, h in acc.items() if h}


def is_mc(x: MCElement) -> bool:
    return not mc_residual(x)


# ---------------------------------------------------------------------------
# the source and target as finite complexes


class SourceComplex(FiniteComplex):
    """(0,*)-forms with values in Hom, differential delbar + [delta, -]."""

    def __init__(self, cx: FreeComplex):
        self.complex = cx
        B = cx.base
        self.idx = [i for i in range(cx.hom_dim) if B.bidegrees[cx.hom_key(i)[0]][0] == 0]
        self.pos = {i: a for a, i in enumerate(self.idx)}
        degs = cx.hom_basis_degrees()
        super().__init__([degs[i] for i in self.idx], self._d)

    def _d(self, vec):
        return self.to_vec(source_d(self.to_hom(vec)))

    def to_vec(self, h: HomForm) -> dict[int, Rational]:
        return {self.pos[i]: c for i, c in self.complex.hom_vector(h).items()}

    def to_hom(self, vec) -> HomForm:
        return self.complex.hom_from_vector({self.idx[a]: c for a, c in vec.items()})


class TargetComplex(FiniteComplex):
    """Forms of holomorphic degree <= max_p with the truncated de Rham differential,
    graded by form degree."""

    def __init__(self, B, max_p: int = 1):
        self.algebra = B
        self.max_p = max_p
        self.idx = [k for k in range(B.dim) if B.bidegrees[k][0] <= max_p]
        self.pos = {k: a for a, k in enumerate(self.idx)}
        super().__init__([B.degrees[k] for k in self.idx], self._d)

    def _d(self, vec):
        return self.to_vec(self.algebra.d(self.to_form(vec)).filter_p(self.max_p))

    def to_vec(self, a: BGAElement) -> dict[int, Rational]:
        return {self.pos[k]: c for k, c in a.coeffs.items() if k in self.pos}

    def to_form(self, vec) -> BGAElement:
        return BGAElement(self.algebra, {self.idx[a]: c for a, c in vec.items()})


def cohomology(cx: FreeComplex, degree: int):
    """Cohomology of the source complex in one degree."""
    return SourceComplex(cx).cohomology(degree)


# ---------------------------------------------------------------------------
# extension and obstructions


@dataclass
class Obstruction:
    order: int
    monomial: Monomial
    representative: HomForm
    coords: list


@dataclass
class ExtensionResult:
    order: int
    extended: MCElement | None = None
    obstructions: list[Obstruction] = field(default_factory=list)

    @property
    def obstructed(self) -> bool:
        return bool(self.obstructions)


class ExtensionError(ValueError):
    pass


def extend_order(x: MCElement, n: int, source: SourceComplex | None = None) -> ExtensionResult:
    """Extend an MC element mod m^(n+1) to one mod m^(n+2), or return the
    nonzero classes of the order-(n+1) residual components."""
    if n + 1 > x.ring.order:
        raise ExtensionError(f"order {n + 1} exceeds the coefficient ring")
    src = source or SourceComplex(x.complex)
    res = mc_residual(x)
    low = sorted(m for m in res if sum(m) <= n)
    if low:
        raise ExtensionError(f"not Maurer-Cartan at order {sum(low[0])} ({x.ring.name(low[0])})")
    H2 = src.cohomology(2)
    correction = {}
    obstructions = []
    for m in x.ring.monomials(n + 1):
        r = res.get(m)
        if not r:
            continue
        vec = src.to_vec(r)
        if src.d(vec):
            raise ExtensionError(f"residual at {x.ring.name(m)} is not a cocycle")
        dense = src.dense(vec, 2)
        coords = H2.class_coords(dense)
        if coords is None:
            raise ExtensionError("residual outside the cycle space")
        if any(coords):
            obstructions.append(Obstruction(n + 1, m, r, coords))
            continue
        y = src.primitive(vec, 2)
        correction[m] = -src.to_hom(y)
    if obstructions:
        return ExtensionResult(n + 1, None, obstructions)
    return ExtensionResult(n + 1, x.plus(correction))


# ---------------------------------------------------------------------------
# pushforward


def _g_power(g: LInftyMorphism, x: MCElement, n: int) -> dict[Monomial, BGAElement]:
    ring = x.ring
    acc: dict[Monomial, BGAElement] = {}
    items = list(x.terms.items())
    for combo in product(items, repeat=n):
        mono = combo[0][0]
        for m, _ in combo[1:]:
            mono = ring.mul(mono, m)
            if mono is None:
                break
        if mono is None:
            continue
        val = g.g(n, [h for _, h in combo])
        if val:
            acc[mono] = acc[mono] + val if mono in acc else val
    return acc


def pushforward_mc(
    g: LInftyMorphism,
    x: MCElement,
    constants: Sequence[Rational] = PUSHFORWARD_CONSTANTS,
    require_mc: bool = True,
) -> dict[Monomial, BGAElement]:
    """``sum_n c_n g_n(x, ..., x)`` by monomial."""
    if require_mc and not is_mc(x):
        raise ValueError("pushforward needs a Maurer-Cartan element")
    acc: dict[Monomial, BGAElement] = {}
    for n, c in enumerate(constants, start=1):
        if not c:
            continue
        for m, v in _g_power(g, x, n).items():
            v = v * c
            acc[m] = acc[m] + v if m in acc else v
    return {m: v for m, v in acc.items() if v}


def target_boundary(g: LInftyMorphism, values: Mapping[Monomial, BGAElement]) -> dict[Monomial, BGAElement]:
    out = {}
    for m, v in values.items():
        dv = g.target_d(v)
        if dv:
            out[m] = dv
    return out


def derive_pushforward_constants(max_n: int = 3) -> tuple[Fraction, ...]:
    """Solve ``c_k = (k+1) c_{k+1}`` with ``c_1 = 1``.

    At equal odd arguments every Koszul sign is +1, C_n gives
    ``d g_n(x^n) = (-1)^(n-1) n g_n(dx, x^(n-1)) + (-1)^n C(n,2) g_(n-1)([x,x], x^(n-2))``
    and ``dx = -[x,x]/2``; collecting the coefficient of ``g_k([x,x], x^(k-1))``
    in ``d sum c_n g_n(x^n)`` gives ``(-1)^k k (c_k - (k+1) c_(k+1)) / 2``."""
    cs = [Fraction(1)]
    for k in range(1, max_n):
        cs.append(cs[-1] / (k + 1))
    assert all(c == Fraction(1, factorial(i + 1)) for i, c in enumerate(cs))
    return tuple(cs)


# ---------------------------------------------------------------------------
# obstruction annihilation


@dataclass
class AnnihilationRecord:
    trial: int
    order: int
    monomial: str
    obstruction: str
    g1_image: str
    tau1_image: str
    primitive: str
    explicit_primitive_ok: bool
    ok: bool

    def to_json(self) -> dict:
        return dict(self.__dict__)


@dataclass
class AnnihilationReport:
    records: list[AnnihilationRecord] = field(default_factory=list)
    mc_elements: list[MCElement] = field(default_factory=list)
    trials: int = 0
    extended: int = 0

    @property
    def passed(self) -> bool:
        return all(r.ok for r in self.records)


def _elem_str(a: BGAElement) -> str:
    return str(a) if a else "0"


def _random_cocycle(src: SourceComplex, rng: random.Random, degree: int = 1) -> HomForm:
    """A random integer combination of a cycle basis (dense, so brackets rarely vanish)."""
    coh = src.cohomology(degree)
    if not coh.cycles:
        return src.complex.zero()
    vec = [0] * coh.chain_dim
    for cyc in coh.cycles:
        c = rng.choice((-1, 0, 0, 1, 2))
        if c:
            vec = [a + c * b for a, b in zip(vec, cyc)]
    if not any(vec):
        vec = list(rng.choice(coh.cycles))
    return src.to_hom(src.sparse(vec, degree))


def annihilate(
    g: LInftyMorphism,
    x: MCElement,
    obstruction: Obstruction,
    target: TargetComplex,
    trial: int,
) -> AnnihilationRecord:
    """Exhibit exact primitives of g_1 and tau_1 of an obstruction in the truncated target."""
    r = obstruction.representative
    img = g.g1(r)
    t1 = tau(g.u, r, 1)
    prim = _primitive(target, img)
    ok = prim is not None and _primitive(target, t1) is not None
    prim_str = "none" if prim is None else _elem_str(target.to_form(prim))
    # the order-(n+1) part of the pushforward is a primitive as well
    push = pushforward_mc(g, x, require_mc=False)
    explicit = push.get(obstruction.monomial, g.base.zero())
    explicit_ok = g.target_d(explicit) == img
    return AnnihilationRecord(
        trial,
        obstruction.order,
        x.ring.name(obstruction.monomial),
        str(r),
        _elem_str(img),
        _elem_str(t1),
        prim_str,
        explicit_ok,
        ok and explicit_ok,
    )


def _primitive(target: TargetComplex, a: BGAElement):
    if not a:
        return {}
    vec = target.to_vec(a)
    prim = target.primitive(vec, a.degree)
    if prim is not None and target.d(prim) != vec:
        return None
    return prim


def truncate_ring(x: MCElement, order: int) -> MCElement:
    ring = ArtinCoefficients(x.ring.variables, order)
    return MCElement(ring, x.complex, {m: h for m, h in x.terms.items() if sum(m) <= order})


def check_obstruction_annihilation(
    D: Connection,
    F: CyclicForm,
    trials: int,
    seed=0,
    order: int = 3,
    g: LInftyMorphism | None = None,
) -> AnnihilationReport:
    """Sample first-order cocycles, extend them order by order up to ``order``
    and check that g_1 and tau_1 of every nonzero obstruction are exact in the
    truncated target.

    ``mc_elements`` collects each trial's element over the largest quotient
    ring in which it solves the Maurer-Cartan equation."""
    g = g or build_g(D, F)
    cx = D.complex
    src = SourceComplex(cx)
    target = TargetComplex(cx.base, 1)
    ring = ArtinCoefficients(("t",), order)
    rep = AnnihilationReport()
    rng = random.Random(f"mc|{seed}")
    t = ring.variable(0)
    for trial in range(trials):
        rep.trials += 1
        x1 = _random_cocycle(src, rng)
        if not x1:
            continue
        x = MCElement(ring, cx, {t: x1})
        reached = order
        for n in range(1, order):
            res = extend_order(x, n, src)
            if res.obstructed:
                for ob in res.obstructions:
                    rep.records.append(annihilate(g, x, ob, target, trial))
                reached = n
                break
            x = res.extended
            # a random cocycle at the new order keeps x Maurer-Cartan mod the
            # next power and varies the next obstruction
            extra = _random_cocycle(src, rng)
            if extra and rng.random() < 0.7:
                x = x.plus({ring.monomials(n + 1)[0]: extra})
        x = truncate_ring(x, reached)
        if not is_mc(x):
            raise ExtensionError("extension did not produce a Maurer-Cartan element")
        rep.mc_elements.append(x)
        rep.extended += reached == order
    return rep


# ---------------------------------------------------------------------------
# trial drivers


ANNIHILATION_PROFILES = ((1, 2, 1), (2, 2))


def annihilation_suite(model: str, trials: int = 25, seed=0, order: int = 3, form: CyclicForm = CyclicForm(-1, 0)):
    """One seeded (delta, Gamma) draw and one sampled first-order cocycle per
    trial, alternating the rank profiles (1,2,1) and (2,2).

    Returns the merged report and the (g, x) pairs of all trial MC elements."""
    from atlift.grid import grid_draw

    merged = AnnihilationReport()
    instances = []
    for trial in range(trials):
        profile = ANNIHILATION_PROFILES[trial % len(ANNIHILATION_PROFILES)]
        _, D = grid_draw(model, profile, trial, seed)
        g = build_g(D, form)
        rep = check_obstruction_annihilation(D, form, 1, seed=(model, seed, trial), order=order, g=g)
        for r in rep.records:
            r.trial = trial
        merged.records.extend(rep.records)
        merged.mc_elements.extend(rep.mc_elements)
        merged.trials += 1
        merged.extended += rep.extended
        instances.extend((g, x) for x in rep.mc_elements)
    return merged, instances


def sign_probe_algebra():
    """A model where the pushforward constants are visible.

    On the canned models the truncated differential never reaches the degree-4
    forms of holomorphic degree <= 1 that d g_2(x, x) and d g_3(x, x, x) land
    in, so every sign choice gives a closed pushforward there.  Here ``d z``
    and ``delbar y4`` do reach them."""
    from atlift.bga import exterior_algebra

    return exterior_algebra(
        [("x", 1, 0), ("y1", 0, 1), ("y2", 0, 1), ("y3", 0, 1), ("y4", 0, 1), ("z", 0, 1)],
        partial={"z": [(1, ("x", "y3"))]},
        delbar={"y4": [(1, ("y1", "y2"))]},
        label="sign-probe",
    )


SIGN_PROBE_PROFILES = ((2, 1), (1, 2))


def sign_probe_instances(count: int = 4, seed=0, order: int = 3, form: CyclicForm = CyclicForm(-1, 0)):
    """Nilpotent MC elements (with g) over the sign-probe algebra."""
    from atlift.grid import random_complex, random_connection, rng_for

    B = sign_probe_algebra()
    out = []
    for i in range(count):
        rng = rng_for("sign-probe", i, seed)
        cx = random_complex(B, SIGN_PROBE_PROFILES[i % 2], rng)
        D = random_connection(cx, rng)
        g = build_g(D, form)
        rep = check_obstruction_annihilation(D, form, 3, seed=("sign-probe", seed, i), order=order, g=g)
        out.extend((g, x) for x in rep.mc_elements)
    return out


def alternative_constants(base: Sequence[Rational] = PUSHFORWARD_CONSTANTS):
    """The three other sign patterns for (c_2, c_3)."""
    c1, c2, c3 = base
    return [(c1, s2 * c2, s3 * c3) for s2, s3 in ((1, -1), (-1, 1), (-1, -1))]


def pushforward_closed(g: LInftyMorphism, x: MCElement, constants=PUSHFORWARD_CONSTANTS) -> bool:
    return not target_boundary(g, pushforward_mc(g, x, constants))
