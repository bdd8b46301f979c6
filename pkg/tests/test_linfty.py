import random
from dataclasses import dataclass
from itertools import product

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from atlift.bga import canned_model, exterior_algebra
from atlift.connection import Connection, CyclicForm, atiyah_cocycle
from atlift.graded import parity_sign
from atlift.grid import GRID_MODELS, grid_draw, random_complex, random_connection, rng_for
from atlift.homcomplex import FreeComplex, supertrace
from atlift.linfty import (
    IncompatibleFormError,
    LInftyMorphism,
    build_g,
    check_abelian_conditions,
    check_general_conditions,
    chern_cocycle,
    source_presentation,
    tau,
    trace_pairing_rank,
    truncated_d,
    truncated_target,
)
from oracles import trace_bracket_rank

B1 = canned_model("torus1")


def e11_connection():
    cx = FreeComplex(B1, {0: 2})
    x = B1.basis_element("x")
    return cx, Connection(cx, {0: [[x, 0], [0, 0]]})


def test_low_arity_examples():
    cx, D = e11_connection()
    g = build_g(D, CyclicForm(-1, 0))
    e12, e21 = cx.elementary(0, 0, 0, 1), cx.elementary(0, 1, 0, 0)
    h = cx.elementary(0, 0, 0, 0) - cx.elementary(0, 1, 0, 1)
    assert g.g2(e12, e21) == -B1.basis_element("x")
    assert g.g3(e12, e21, h) == B1.one()
    assert not g.g1(cx.identity())
    assert not g.g(4, [e12] * 4)
    with pytest.raises(ValueError):
        g.g(2, [e12])


@pytest.mark.parametrize("model", GRID_MODELS)
def test_conditions_on_random_tuples(model):
    cx, D = grid_draw(model, (1, 2, 1), 0)
    basis = cx.hom_basis(max_p=0)
    rng = random.Random(model)
    for F in (CyclicForm(-1, 0), CyclicForm(0, 1)):
        g = build_g(D, F)
        for n in range(1, 6):
            for _ in range(15):
                args = [rng.choice(basis) for _ in range(n)]
                assert not check_abelian_conditions(g, n, args), (F, n)


def test_components_are_graded_skew_symmetric():
    cx, D = grid_draw("iwasawa", (1, 2), 1)
    g = build_g(D, CyclicForm(-1, 0))
    basis = cx.hom_basis(max_p=0)
    rng = random.Random(5)
    for _ in range(40):
        a, b, c = (rng.choice(basis) for _ in range(3))
        da, db, dc = a.degree, b.degree, c.degree
        assert g.g2(a, b) == g.g2(b, a) * -parity_sign(da * db)
        assert g.g3(a, b, c) == g.g3(b, a, c) * -parity_sign(da * db)
        assert g.g3(a, b, c) == g.g3(a, c, b) * -parity_sign(db * dc)


def _vector_components(g, V_idx, L_idx):
    """g_n as maps between coordinate vectors of the two presentations."""
    cx = g.complex
    tpos = {k: m for m, k in enumerate(L_idx)}

    def wrap(n):
        def fn(*vs):
            args = [cx.hom_from_vector({V_idx[a]: c for a, c in v.items()}) for v in vs]
            val = g.g(n, args)
            return {tpos[k]: c for k, c in val.coeffs.items()}
        return fn

    return {n: wrap(n) for n in (1, 2, 3)}


def test_general_checker_agrees_with_abelian_one():
    rng = random.Random(50)
    agreed = nonzero = 0
    for model in ("torus1", "delbar-toy", "iwasawa"):
        cx, D = grid_draw(model, (1, 2), 2)
        V, idx = source_presentation(cx)
        L, tidx = truncated_target(cx.base)
        tpos = {k: m for m, k in enumerate(tidx)}

        class Skewed(LInftyMorphism):
            # g1 scaled on purpose so that some residuals are nonzero
            def g1(self, f):
                return super().g1(f) * 3

        for cls in (LInftyMorphism, Skewed):
            g = cls(D, CyclicForm(-1, 0))
            comps = _vector_components(g, idx, tidx)
            for _ in range(9):
                n = rng.randint(1, 4)
                tup = [rng.randrange(V.dim) for _ in range(n)]
                general = check_general_conditions(V, L, comps, n, [{a: 1} for a in tup])
                obj = check_abelian_conditions(g, n, [cx.hom_basis_element(idx[a]) for a in tup])
                assert general == {tpos[k]: c for k, c in obj.coeffs.items()}
                agreed += 1
                nonzero += bool(general)
    assert agreed == 54 and nonzero


def test_presentations_are_dg_lie():
    cx, _ = grid_draw("delbar-toy", (1, 1), 0)
    V, _ = source_presentation(cx)
    assert V.validate() == [] and not V.abelian
    L, _ = truncated_target(canned_model("iwasawa"))
    assert L.validate() == [] and L.abelian


def test_identity_is_a_strict_morphism():
    cx, _ = grid_draw("delbar-toy", (1, 1), 0)
    V, _ = source_presentation(cx)
    comps = {1: lambda v: dict(v)}
    rng = random.Random(2)
    for n in (1, 2, 3):
        for _ in range(20):
            args = [{rng.randrange(V.dim): 1} for _ in range(n)]
            assert check_general_conditions(V, V, comps, n, args) == {}
    # a non-trivial g_2 breaks C_2 somewhere
    comps[2] = lambda v, w: dict(v)
    hits = 0
    for a, b in product(range(V.dim), repeat=2):
        hits += bool(check_general_conditions(V, V, comps, 2, [{a: 1}, {b: 1}]))
    assert hits


def test_g3_is_needed():
    """On a model whose d reaches the truncated target from (0,*)-pairings,
    dropping g_3 breaks C_3."""
    B = exterior_algebra([("x", 1, 0), ("y", 0, 1), ("z", 0, 1)], partial={"z": [(1, ("x", "y"))]}, label="g3-probe")
    cx = random_complex(B, (2,), rng_for("p", (2,)))
    D = random_connection(cx, rng_for("q", (2,)))

    class NoG3(LInftyMorphism):
        def g3(self, f, g, h):
            return self.zero()

    g, g0 = build_g(D, CyclicForm(-1, 0)), NoG3(D, CyclicForm(-1, 0))
    basis = cx.hom_basis(max_p=0)
    broken = 0
    for args in product(basis, repeat=3):
        assert not check_abelian_conditions(g, 3, args)
        broken += bool(check_abelian_conditions(g0, 3, args))
    assert broken


def test_tau_examples():
    cx, D = grid_draw("delbar-toy", (1, 2, 1), 0)
    u = atiyah_cocycle(D)
    for f in cx.hom_basis()[::5]:
        assert tau(u, f, 0) == supertrace(f).filter_p(0)
    zero = u - u
    for p in (1, 2):
        assert not tau(zero, cx.identity(), p)
    with pytest.raises(ValueError):
        tau(u, cx.identity(), -1)


def test_tau1_matches_g1_for_the_trace_form():
    for model in GRID_MODELS:
        cx, D = grid_draw(model, (1, 2, 1), 0)
        g = build_g(D, CyclicForm(-1, 0))
        for f in cx.hom_basis(max_p=0):
            assert g.g1(f) == tau(g.u, f, 1)


@pytest.mark.parametrize("model", GRID_MODELS)
def test_tau_is_a_chain_map(model):
    cx, D = grid_draw(model, (1, 2, 1), 1)
    u = atiyah_cocycle(D)
    g = build_g(D, CyclicForm(-1, 0), check=False)
    for p in (0, 1, 2):
        for f in cx.hom_basis(max_p=0):
            assert truncated_d(tau(u, f, p), p) == tau(u, g.source_d(f), p)


def test_chern_cocycle():
    for ranks in ({0: 2}, {-1: 1, 0: 2, 1: 1}):
        cx, D = grid_draw("iwasawa", tuple(ranks.values()), 0)
        u = atiyah_cocycle(D)
        B = cx.base
        assert chern_cocycle(u, 0) == B.one() * cx.euler_characteristic()
        for p in (1, 2, 3):
            c = chern_cocycle(u, p)
            assert not B.d(c)
            assert all(B.degrees[k] == 2 * p for k in c.coeffs)


@given(st.lists(st.lists(st.integers(-3, 3), min_size=2, max_size=2), min_size=2, max_size=2))
@settings(max_examples=30)
def test_trace_pairing_rank_against_oracle(C):
    assert trace_pairing_rank(C) == trace_bracket_rank(C)


def test_trace_pairing_rank_dichotomy():
    assert trace_pairing_rank([[5, 0], [0, 5]]) == 0
    assert trace_pairing_rank([[0, 0], [0, 0]]) == 0
    assert trace_pairing_rank([[1, 2], [0, 3]]) == 2
    assert trace_pairing_rank([[0, 1], [0, 0]]) == 2


@dataclass(frozen=True)
class SignSlipForm(CyclicForm):
    def form_sign(self, hom_degree, form_degree):
        return 1


def test_incompatible_form_is_rejected():
    raised = 0
    for model in ("torus1", "delbar-toy", "iwasawa"):
        _, D = grid_draw(model, (1, 2, 1), 0)
        try:
            build_g(D, SignSlipForm(-1, 0))
        except IncompatibleFormError:
            raised += 1
    assert raised
