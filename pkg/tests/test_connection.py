from dataclasses import dataclass

import pytest

from atlift.bga import canned_model
from atlift.connection import (
    Connection,
    CyclicForm,
    atiyah_closed_form,
    atiyah_cocycle,
    check_compatibility,
    check_cyclic,
    nabla,
    nabla_closed_form,
    pair,
    verify_connection_identities,
)
from atlift.grid import GRID_MODELS, grid_draw, random_connection, rng_for
from atlift.homcomplex import FreeComplex, bracket, delbar, delta_bracket, supertrace
from atlift.linfty import tau

B1 = canned_model("torus1")
TOY = canned_model("delbar-toy")


def rank2(B, C=None):
    cx = FreeComplex(B, {0: 2})
    C = C or [[0, 0], [0, 0]]
    gamma = {0: [[{"x": c} if c else 0 for c in row] for row in C]}
    return cx, Connection(cx, gamma)


def test_nabla_of_identity_and_trivial_connection():
    for model in GRID_MODELS:
        cx, D = grid_draw(model, (1, 2, 1), 0)
        assert not nabla(D, cx.identity(), check=True)
    cx = FreeComplex(B1, {0: 2})
    D0 = Connection(cx)
    for h in cx.hom_basis():
        assert not nabla(D0, h)


def test_nabla_regression_on_torus1():
    cx, D = rank2(B1, [[1, 2], [0, 3]])
    e12 = cx.elementary(0, 0, 0, 1)
    got = nabla(D, e12, check=True)
    assert got == cx.elementary(0, 0, 0, 1, form="x") * -2
    for h in cx.hom_basis():
        assert nabla(D, h) == nabla_closed_form(D, h)


def test_nabla_raises_holomorphic_degree():
    cx, D = grid_draw("iwasawa", (1, 2, 1), 1)
    for h in cx.hom_basis(max_p=0)[:60]:
        (p0, q0, n0), = h.components().keys()
        for p, q, n in nabla(D, h).components():
            assert (p, q, n) == (p0 + 1, q0, n0)


def test_atiyah_examples():
    cx = FreeComplex(B1, {0: 2})
    assert not atiyah_cocycle(Connection(cx))
    cx1 = FreeComplex(TOY, {0: 1})
    D = Connection(cx1, {0: [[{"x": 1}]]})
    u = atiyah_cocycle(D, check=True)
    assert u == cx1.elementary(0, 0, 0, 0, form="xy")
    assert u == atiyah_closed_form(D)
    assert tau(u, cx1.identity(), 1) == -TOY.basis_element("xy")


def test_atiyah_routes_agree_on_grid():
    for model in GRID_MODELS:
        for profile in ((2, 1), (1, 2, 1)):
            _, D = grid_draw(model, profile, 2)
            u = atiyah_cocycle(D, check=True)
            assert u == atiyah_closed_form(D)
            assert not delbar(u) + delta_bracket(u)
            assert set(u.components()) <= {(1, 1, 0), (1, 0, 1)}


def test_connection_difference_identity():
    for model in GRID_MODELS:
        cx, D = grid_draw(model, (1, 2, 1), 3)
        D2 = random_connection(cx, rng_for("other", model))
        a = D2.gamma - D.gamma
        assert atiyah_cocycle(D2) - atiyah_cocycle(D) == delbar(a) + delta_bracket(a)
        assert verify_connection_identities(D, D2).passed


def test_connection_rejects_wrong_bidegree():
    cx = FreeComplex(B1, {0: 1})
    with pytest.raises(ValueError):
        Connection(cx, {0: [[{"y": 1}]]})
    with pytest.raises(ValueError):
        Connection(cx, {0: [[{"x": 1}, 0]]})


def test_pairing_examples():
    cx = FreeComplex(B1, {0: 2})
    F = CyclicForm(-1, 0)
    e12, e21 = cx.elementary(0, 0, 0, 1), cx.elementary(0, 1, 0, 0)
    assert pair(F, e12, e21) == B1.one() * -1
    for ranks in ({0: 2}, {-1: 1, 0: 2, 1: 1}, {-1: 2, 0: 1}):
        c = FreeComplex(B1, ranks)
        assert pair(F, c.identity(), c.identity()) == B1.one() * -c.euler_characteristic()
    G = CyclicForm(0, 1)
    assert pair(G, cx.identity(), cx.identity()) == B1.one() * 4


@pytest.mark.parametrize("F", [CyclicForm(-1, 0), CyclicForm(0, 1), CyclicForm(2, -3)])
def test_cyclic_form_axioms(F):
    for model in ("torus1", "delbar-toy"):
        cx, _ = grid_draw(model, (1, 2, 1), 0)
        assert check_cyclic(F, cx).passed


def test_pairing_symmetry_and_invariance_with_forms():
    cx, _ = grid_draw("delbar-toy", (1, 1), 0)
    F = CyclicForm(-1, 1)
    basis = cx.hom_basis()
    for f in basis:
        for g in basis:
            assert pair(F, f, g) == pair(F, g, f) * (-1) ** (f.degree * g.degree % 2)
    for f in basis[::3]:
        for g in basis[::2]:
            for h in basis[::5]:
                lhs = pair(F, bracket(f, g), h) + pair(F, g, bracket(f, h)) * (-1) ** (f.degree * g.degree % 2)
                assert not lhs


def test_pairing_commutes_with_delbar():
    cx, _ = grid_draw("delbar-toy", (2, 1), 1)
    F = CyclicForm(-1, 0)
    basis = cx.hom_basis()
    for f in basis:
        for g in basis[::2]:
            lhs = TOY.apply_delbar(pair(F, f, g))
            rhs = pair(F, delbar(f), g) + pair(F, f, delbar(g)) * (-1) ** (f.degree % 2)
            assert lhs == rhs


@pytest.mark.parametrize("F", [CyclicForm(-1, 0), CyclicForm(0, 1), CyclicForm(-1, 1)])
def test_trace_forms_are_compatible_with_every_connection(F):
    for model in GRID_MODELS:
        for draw in range(2):
            _, D = grid_draw(model, (2, 1), draw)
            assert check_compatibility(D, F).passed


@dataclass(frozen=True)
class SignSlipForm(CyclicForm):
    """The trace form with the Koszul sign of the form rule dropped."""

    def form_sign(self, hom_degree, form_degree):
        return 1


def test_corrupted_pairing_is_caught():
    caught = 0
    for model in ("torus1", "delbar-toy", "iwasawa"):
        _, D = grid_draw(model, (1, 2, 1), 0)
        rep = check_compatibility(D, SignSlipForm(-1, 0))
        caught += not rep.passed
    assert caught


def test_connection_identities_on_grid():
    for model in GRID_MODELS:
        for profile in ((2,), (1, 2, 1)):
            _, D = grid_draw(model, profile, 4)
            rep = verify_connection_identities(D)
            assert rep.passed, [c for c in rep.checks if not c.passed]


def test_closed_elements_have_exact_u_bracket():
    cx, D = grid_draw("iwasawa", (1, 2, 1), 0)
    u = atiyah_cocycle(D)
    dsrc = lambda h: delbar(h) + delta_bracket(h)
    checked = 0
    for h in cx.hom_basis(max_p=0):
        if dsrc(h):
            continue
        checked += 1
        assert bracket(u, h) == dsrc(nabla(D, h))
    assert checked


def test_trace_identities_directly():
    cx, D = grid_draw("iwasawa", (2, 1), 1)
    B = cx.base
    for h in cx.hom_basis()[::7]:
        assert supertrace(nabla(D, h)) == B.apply_partial(supertrace(h))


def test_operator_faithfulness(monkeypatch):
    from atlift import connection

    _, D = grid_draw("delbar-toy", (1, 2, 1), 0)
    rep = connection.verify_operator_faithfulness(D)
    assert rep.passed and {c.name for c in rep.checks} == {"linear", "delbar", "delta_bracket", "nabla", "compose", "bracket"}
    monkeypatch.setattr(connection, "delbar", lambda h: delbar(h) * 2)
    rep = connection.verify_operator_faithfulness(D)
    assert [c.name for c in rep.checks if not c.passed] == ["delbar"]
