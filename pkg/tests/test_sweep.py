import random

import pytest

from atlift.connection import CyclicForm
from atlift.grid import grid_draw
from atlift.linfty import build_g, check_abelian_conditions
from atlift.sweep import MorphismTables, SourceData, sweep_conditions


def tables(model, profile=(1, 1), draw=0, F=CyclicForm(-1, 0)):
    _, D = grid_draw(model, profile, draw)
    return MorphismTables(SourceData(D), F)


@pytest.mark.parametrize("model", ["torus1", "delbar-toy", "iwasawa"])
def test_sweep_passes_on_valid_morphisms(model):
    T = tables(model)
    for mode, limit in (("exhaustive", 10**6), ("sampled", 0)):
        res = sweep_conditions(T, max_n=5, seed=3, exhaustive_limit=limit, samples=60)
        assert [r.n for r in res] == [1, 2, 3, 4, 5]
        assert all(r.passed for r in res), [r.failures for r in res]
        assert res[0].mode == mode
    exhaustive = sweep_conditions(T, max_n=5, exhaustive_limit=10**6)
    assert exhaustive[4].mode == "structural"
    assert exhaustive[2].tuples == T.src.N ** 3


def test_tables_match_the_object_morphism():
    _, D = grid_draw("iwasawa", (1, 2), 1)
    src = SourceData(D)
    T = MorphismTables(src, CyclicForm(-1, 0))
    g = build_g(D, CyclicForm(-1, 0))
    cx = D.complex
    rng = random.Random(0)

    def as_vec(el):
        return {src.tpos[k]: c for k, c in el.coeffs.items()}

    h = [cx.hom_basis_element(i) for i in src.idx]
    for _ in range(60):
        a, b, c = (rng.randrange(src.N) for _ in range(3))
        assert T.value(1, [{a: 1}]) == as_vec(g.g1(h[a]))
        assert T.value(2, [{a: 1}, {b: 1}]) == as_vec(g.g2(h[a], h[b]))
        assert T.value(3, [{a: 1}, {b: 1}, {c: 1}]) == as_vec(g.g3(h[a], h[b], h[c]))


def _corrupt(T, n):
    # add a target basis element with nonzero truncated d to one table entry:
    # the C_n residual at that entry then picks up exactly that d
    V, L = T.src.V, T.src.L
    src_degrees = {V.degrees[a] + V.degrees[b] for a in range(V.dim) for b in range(V.dim)} if n == 2 else set(V.degrees)
    m = next(m for m in range(L.dim) if L.diff.get(m) and L.degrees[m] in src_degrees)
    want = L.degrees[m]
    if n == 1:
        a = next(a for a in range(V.dim) if V.degrees[a] == want)
        T.g1[a] = dict(T.g1[a])
        T.g1[a][m] = T.g1[a].get(m, 0) + 1
        return [{"a": a}]
    pairs = [(a, b) for a in range(V.dim) for b in range(V.dim)
             if V.degrees[a] + V.degrees[b] == want]
    a, b = pairs[0]
    for key, s in (((a, b), 1), ((b, a), -((-1) ** (V.degrees[a] * V.degrees[b] % 2)))):
        vec = dict(T.g2.get(key, {}))
        vec[m] = vec.get(m, 0) + s
        T.g2[key] = vec
    return [(a, b)]


@pytest.mark.parametrize("n", [1, 2])
def test_sweep_detects_corrupted_tables(n):
    T = tables("iwasawa", (1, 1), 0)
    _corrupt(T, n)
    res = sweep_conditions(T, max_n=4, exhaustive_limit=10**6)
    assert any(not r.passed for r in res)
    failed = [r for r in res if not r.passed][0]
    assert failed.failures[0]["args"] and "residual" in failed.failures[0]
    sampled = sweep_conditions(T, max_n=4, seed=1, exhaustive_limit=0, samples=400)
    assert any(not r.passed for r in sampled)


def test_object_checker_sees_the_same_corruption():
    _, D = grid_draw("iwasawa", (1, 1), 0)
    g = build_g(D, CyclicForm(-1, 0))

    class Shifted(type(g)):
        def g1(self, f):
            return super().g1(f) * 2

    bad = Shifted(D, CyclicForm(-1, 0))
    src = SourceData(D)
    T = MorphismTables(src, CyclicForm(-1, 0))
    T.g1 = {a: {m: 2 * c for m, c in vec.items()} for a, vec in T.g1.items()}
    res = sweep_conditions(T, max_n=3, exhaustive_limit=10**6)
    basis = [D.complex.hom_basis_element(i) for i in src.idx]
    obj_fail = {n: any(check_abelian_conditions(bad, n, [a, b][:n]) for a in basis for b in basis) for n in (1, 2)}
    assert obj_fail[1] == (not res[0].passed)
    assert obj_fail[2] == (not res[1].passed)
