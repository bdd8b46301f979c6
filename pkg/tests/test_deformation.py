from fractions import Fraction

import pytest

from atlift.bga import canned_model
from atlift.connection import CyclicForm
from atlift.deformation import (
    PUSHFORWARD_CONSTANTS,
    ArtinCoefficients,
    ExtensionError,
    MCElement,
    SourceComplex,
    TargetComplex,
    alternative_constants,
    annihilation_suite,
    check_obstruction_annihilation,
    cohomology,
    derive_pushforward_constants,
    extend_order,
    is_mc,
    mc_residual,
    pushforward_closed,
    pushforward_mc,
    sign_probe_instances,
    source_d,
)
from atlift.grid import grid_draw
from atlift.homcomplex import FreeComplex, bracket
from atlift.linfty import build_g

B1 = canned_model("torus1")
TOY = canned_model("delbar-toy")
RING = ArtinCoefficients(("t",), 3)
T, T2 = (1,), (2,)


def test_artin_ring():
    R = ArtinCoefficients(("s", "t"), 2)
    assert R.monomials(2) == [(2, 0), (1, 1), (0, 2)]
    assert R.mul((1, 0), (0, 1)) == (1, 1)
    assert R.mul((1, 1), (1, 0)) is None
    assert R.name((1, 1)) == "s*t" and R.name((0, 2)) == "t^2"
    with pytest.raises(ValueError):
        ArtinCoefficients((), 2)
    with pytest.raises(ValueError):
        ArtinCoefficients(("t",), 0)


def test_mc_element_validation():
    cx = FreeComplex(B1, {0: 2})
    with pytest.raises(ValueError):
        MCElement(RING, cx, {T: cx.identity()})  # degree 0
    with pytest.raises(ValueError):
        MCElement(RING, cx, {T: cx.elementary(0, 0, 0, 1, form="x")})  # a (1,0)-form
    with pytest.raises(ValueError):
        MCElement(RING, cx, {(0,): cx.elementary(0, 0, 0, 1, form="y")})
    x = MCElement(RING, cx, {(4,): cx.elementary(0, 0, 0, 1, form="y")})
    assert not x.terms


def test_residual_examples():
    cx = FreeComplex(B1, {0: 2})
    assert mc_residual(MCElement(RING, cx)) == {}
    yN = cx.elementary(0, 0, 0, 1, form="y")
    assert is_mc(MCElement(RING, cx, {T: yN, T2: yN}))
    # a first-order term that is not a cocycle shows up at order one
    cx2 = FreeComplex(TOY, {-1: 1, 0: 2, 1: 1}, {-1: [[1], [0]], 0: [[0, 1]]})
    src = SourceComplex(cx2)
    h = next(src.to_hom({a: 1}) for a in src.basis(1) if src.d({a: 1}))
    res = mc_residual(MCElement(RING, cx2, {T: h}))
    assert res[T] == source_d(h)


def test_cohomology_examples():
    # zero differential: cohomology is the whole space
    cx = FreeComplex(B1, {0: 2})
    src = SourceComplex(cx)
    for k in (0, 1):
        assert cohomology(cx, k).dim == len(src.basis(k))
    # acyclic: E^-1 --1--> E^0
    acyclic = FreeComplex(B1, {-1: 1, 0: 1}, {-1: [[1]]})
    assert [cohomology(acyclic, k).dim for k in range(-1, 3)] == [0, 0, 0, 0]
    toy = FreeComplex(TOY, {0: 1})
    assert [cohomology(toy, k).dim for k in (0, 1)] == [1, 1]


def test_extend_order_preconditions():
    cx2 = FreeComplex(TOY, {-1: 1, 0: 2, 1: 1}, {-1: [[1], [0]], 0: [[0, 1]]})
    src = SourceComplex(cx2)
    h = next(src.to_hom({a: 1}) for a in src.basis(1) if src.d({a: 1}))
    with pytest.raises(ExtensionError, match="not Maurer-Cartan at order 1"):
        extend_order(MCElement(RING, cx2, {T: h}), 1)
    with pytest.raises(ExtensionError):
        extend_order(MCElement(RING, cx2), 3)


def test_abelian_extension_is_unobstructed():
    cx = FreeComplex(B1, {0: 1})
    y = cx.elementary(0, 0, 0, 0, form="y")
    x = MCElement(RING, cx, {T: y})
    for n in (1, 2):
        res = extend_order(x, n)
        assert not res.obstructed
        x = res.extended
        assert is_mc(x)
    assert x.terms == {T: y}


def _obstructed_case():
    for draw in range(30):
        cx, D = grid_draw("iwasawa", (1, 2, 1), draw)
        src = SourceComplex(cx)
        cycles = src.cohomology(1).cycles
        for a in range(len(cycles)):
            for b in range(a, len(cycles)):
                vec = [p + q for p, q in zip(cycles[a], cycles[b])]
                x1 = src.to_hom(src.sparse(vec, 1))
                if not x1:
                    continue
                res = extend_order(MCElement(RING, cx, {T: x1}), 1, src)
                if res.obstructed:
                    return cx, D, src, x1, res
    raise AssertionError("no obstructed first-order element found")


def test_obstruction_is_the_class_of_half_the_self_bracket():
    cx, D, src, x1, res = _obstructed_case()
    (ob,) = res.obstructions
    assert ob.order == 2 and ob.monomial == T2
    H2 = src.cohomology(2)
    half = bracket(x1, x1) * Fraction(1, 2)
    assert ob.coords == H2.class_coords(src.dense(src.to_vec(half), 2))
    assert any(ob.coords)


def test_obstruction_class_ignores_coboundary_changes():
    cx, D, src, x1, res = _obstructed_case()
    coords = res.obstructions[0].coords
    changed = 0
    for a in src.basis(0):
        e = src.to_hom({a: 1})
        de = source_d(e)
        if not de:
            continue
        again = extend_order(MCElement(RING, cx, {T: x1 + de}), 1, src)
        assert again.obstructed and again.obstructions[0].coords == coords
        changed += 1
    assert changed


def test_pushforward_basics():
    cx, D = grid_draw("delbar-toy", (1, 2, 1), 0)
    g = build_g(D, CyclicForm(-1, 0))
    assert pushforward_mc(g, MCElement(RING, cx)) == {}
    src = SourceComplex(cx)
    h = next((src.to_hom({a: 1}) for a in src.basis(1) if src.d({a: 1})), None)
    assert h is not None
    with pytest.raises(ValueError):
        pushforward_mc(g, MCElement(RING, cx, {T: h}))


def test_pushforward_constants():
    assert derive_pushforward_constants() == PUSHFORWARD_CONSTANTS == (1, Fraction(1, 2), Fraction(1, 6))
    alts = alternative_constants()
    assert len(alts) == 3 and PUSHFORWARD_CONSTANTS not in alts


def test_pushforward_is_closed_and_other_signs_are_not():
    instances = sign_probe_instances(count=2)
    assert instances
    for g, x in instances:
        assert pushforward_closed(g, x)
    for alt in alternative_constants():
        assert any(not pushforward_closed(g, x, alt) for g, x in instances), alt


def test_annihilation_small_run():
    report, instances = annihilation_suite("delbar-toy", trials=6)
    assert report.trials == 6 and report.passed
    assert len(instances) == len(report.mc_elements)
    for g, x in instances:
        assert is_mc(x) and pushforward_closed(g, x)
    for r in report.records:
        assert r.explicit_primitive_ok and r.primitive != "none"


def test_annihilation_records_for_one_connection():
    cx, D = grid_draw("iwasawa", (1, 2, 1), 0)
    rep = check_obstruction_annihilation(D, CyclicForm(-1, 0), 4, seed=9)
    assert rep.trials == 4 and rep.passed
    assert all(is_mc(x) for x in rep.mc_elements)


def test_target_complex_is_a_complex():
    T = TargetComplex(canned_model("iwasawa"), 1)
    for k in set(T.degrees):
        for a in T.basis(k):
            assert not T.d(T.d({a: 1}))
