"""Conditions C_1..C_5 over all basis tuples (or a seeded sample of them).

The morphism is tabulated on basis tuples of the source, the relations are
then evaluated as integer tensor contractions: every table is scaled to
integers by the common denominator of its entries, so equality with zero is
exact.  Above ``EXHAUSTIVE_LIMIT`` source dimensions a seeded sample of tuples
is evaluated one by one from the same tables."""

from __future__ import annotations

import random
from dataclasses import dataclass, field
from fractions import Fraction
from math import lcm

import numpy as np

from atlift.bga import _add_into
from atlift.connection import Connection, CyclicForm, atiyah_cocycle, nabla
from atlift.graded import Permutation, parity_sign, shuffles
from atlift.linfty import HALF, _rhs_terms, source_presentation, truncated_target
from atlift.tables import hom_map_matrix, pairing_entries

EXHAUSTIVE_LIMIT = 40
SAMPLES_PER_N = 500
_INT_BOUND = 2**62


class SourceData:
    """Everything about (complex, connection) that does not depend on the form."""

    def __init__(self, D: Connection):
        cx = D.complex
        self.connection = D
        self.complex = cx
        self.V, self.idx = source_presentation(cx)
        self.L, self.tidx = truncated_target(cx.base, 1)
        self.u = atiyah_cocycle(D)
        self.u_vec = cx.hom_vector(self.u)
        self.nabla = hom_map_matrix(cx, lambda h: nabla(D, h), indices=self.idx)
        self.tpos = {k: m for m, k in enumerate(self.tidx)}

    @property
    def N(self) -> int:
        return self.V.dim

    @property
    def M(self) -> int:
        return self.L.dim


class MorphismTables:
    """Basis values of g_1, g_2, g_3 for one cyclic form, as exact dicts."""

    def __init__(self, src: SourceData, F: CyclicForm):
        self.src = src
        self.form = F
        cx = src.complex
        P = pairing_entries(F, cx)
        self.P = P
        idx, tpos = src.idx, src.tpos
        degs = src.V.degrees

        def tgt(vec):
            return {tpos[k]: c for k, c in vec.items() if k in tpos}

        # g1(e_a) = <u, e_a>
        self.g1: dict[int, dict] = {}
        for a, i in enumerate(idx):
            acc: dict = {}
            for j, c in src.u_vec.items():
                for k, w in P.get((j, i), {}).items():
                    _add_into(acc, k, c * w)
            self.g1[a] = tgt(acc)
        # <nabla e_a, e_b>
        nab_pair: dict[tuple[int, int], dict] = {}
        for a, i in enumerate(idx):
            for j, c in src.nabla.get(i, {}).items():
                for b, i2 in enumerate(idx):
                    vec = P.get((j, i2))
                    if vec:
                        acc = nab_pair.setdefault((a, b), {})
                        for k, w in vec.items():
                            _add_into(acc, k, c * w)
        self.g2: dict[tuple[int, int], dict] = {}
        for a in range(src.N):
            for b in range(src.N):
                acc = dict(nab_pair.get((a, b), {}))
                s = -parity_sign(degs[a] * degs[b])
                for k, w in nab_pair.get((b, a), {}).items():
                    _add_into(acc, k, s * w)
                acc = tgt({k: v * HALF for k, v in acc.items()})
                if acc:
                    self.g2[(a, b)] = acc
        # source-level pairing, for g3 = -1/2 <e_a, [e_b, e_c]>
        pos = {i: a for a, i in enumerate(idx)}
        self.psrc: dict[int, dict[int, dict]] = {}
        for (i, j), vec in P.items():
            if i in pos and j in pos:
                v = tgt(vec)
                if v:
                    self.psrc.setdefault(pos[i], {})[pos[j]] = v
        self._g3: dict = {}

    def g3_basis(self, a: int, b: int, c: int) -> dict:
        key = (a, b, c)
        got = self._g3.get(key)
        if got is None:
            acc: dict = {}
            row = self.psrc.get(a, {})
            for e, w in self.src.V.br.get((b, c), {}).items():
                for k, v in row.get(e, {}).items():
                    _add_into(acc, k, -HALF * w * v)
            got = self._g3[key] = acc
        return got

    def value(self, n: int, vectors) -> dict:
        """Multilinear extension of the basis values."""
        if n >= 4:
            return {}
        acc: dict = {}
        terms = [list(v.items()) for v in vectors]

        def rec(pos, idxs, coeff):
            if pos == n:
                if n == 1:
                    base = self.g1[idxs[0]]
                elif n == 2:
                    base = self.g2.get((idxs[0], idxs[1]), {})
                else:
                    base = self.g3_basis(*idxs)
                for k, v in base.items():
                    _add_into(acc, k, coeff * v)
                return
            for i, c in terms[pos]:
                rec(pos + 1, idxs + (i,), coeff * c)

        rec(0, (), 1)
        return acc


# ---------------------------------------------------------------------------
# integer tensors


def _scaled(entries: dict, shape) -> tuple[np.ndarray, int]:
    """Dense integer array from ``{index tuple: rational}`` and its scale."""
    den = 1
    for v in entries.values():
        if type(v) is Fraction:
            den = lcm(den, v.denominator)
    bound = max((abs(v) * den for v in entries.values()), default=0)
    dtype = np.int64 if bound < 2**31 else object
    arr = np.zeros(shape, dtype=dtype)
    for key, v in entries.items():
        arr[key] = int(v * den)
    return arr, den


def _max_abs(A) -> int:
    if A.dtype == object:
        return max((abs(int(v)) for v in A.flat), default=0)
    return int(np.abs(A).max(initial=0))


def _contract(A, B, axes, bound: int):
    """Exact integer tensordot; float64 BLAS is used when every partial sum
    stays below 2**53, object arithmetic when int64 could overflow."""
    if A.dtype != object and B.dtype != object:
        if bound < 2**53:
            return np.tensordot(A.astype(np.float64), B.astype(np.float64), axes=axes).astype(np.int64)
        if bound < _INT_BOUND:
            return np.tensordot(A, B, axes=axes)
    return np.tensordot(A.astype(object), B.astype(object), axes=axes)


def _chi_tensor(sigma: Permutation, parity: np.ndarray) -> np.ndarray:
    """Koszul sign chi(sigma; e_a1..e_an) as a broadcast tensor over (a1..an)."""
    n = len(sigma)
    N = parity.shape[0]
    out = np.ones((N,) * n, dtype=np.int64)
    factor = np.where(np.outer(parity, parity) == 1, 1, -1).astype(np.int64)  # symmetric
    for x, y in sigma.inversions():
        shape = [1] * n
        shape[x] = shape[y] = N
        out = out * factor.reshape(shape)
    return out


@dataclass
class ConditionResult:
    n: int
    tuples: int
    mode: str
    failures: list = field(default_factory=list)

    @property
    def passed(self) -> bool:
        return not self.failures


def _dense_tables(T: MorphismTables):
    src = T.src
    N, M = src.N, src.M
    g1, s1 = _scaled({(a, m): v for a, vec in T.g1.items() for m, v in vec.items()}, (N, M))
    g2, s2 = _scaled({(a, b, m): v for (a, b), vec in T.g2.items() for m, v in vec.items()}, (N, N, M))
    p3, sp = _scaled(
        {(a, e, m): v for a, row in T.psrc.items() for e, vec in row.items() for m, v in vec.items()}, (N, N, M)
    )
    br, sb = _scaled({(a, b, c): v for (a, b), vec in src.V.br.items() for c, v in vec.items()}, (N, N, N))
    # g3[a,b,c,m] = -1/2 sum_e br[b,c,e] p3[a,e,m]; kept as (numerator tensor, scale)
    g3 = -_contract(p3, br, ([1], [2]), _max_abs(p3) * _max_abs(br) * N)  # (a, m, b, c)
    g3 = np.moveaxis(g3, 1, 3)
    s3 = 2 * sp * sb
    ds, sd = _scaled({(a, b): v for a, col in src.V.diff.items() for b, v in col.items()}, (N, N))
    dt, st = _scaled({(m, m2): v for m, col in src.L.diff.items() for m2, v in col.items()}, (M, M))
    return {1: (g1, s1), 2: (g2, s2), 3: (g3, s3)}, (ds, sd), (br, sb), (dt, st)


def _exhaustive(T: MorphismTables, max_n: int) -> list[ConditionResult]:
    src = T.src
    N, M = src.N, src.M
    parity = np.array([d & 1 for d in src.V.degrees], dtype=np.int64)
    G, (ds, sd), (br, sb), (dt, st) = _dense_tables(T)
    top = {n: _max_abs(g) for n, (g, _) in G.items()}
    results = []
    for n in range(1, max_n + 1):
        if n >= 5:
            # every term involves g_4 or g_5, which vanish identically
            results.append(ConditionResult(n, N**n, "structural"))
            continue
        # each term: (slice m -> tensor over (a1..an), bound, scale, [(sign, shuffle)])
        terms = []
        if n <= 3:
            gn, sn = G[n]
            b = top[n] * _max_abs(dt) * M
            terms.append((lambda m, gn=gn, b=b: _contract(gn, dt[:, m], ([n], [0]), b), b, sn * st,
                          [(1, Permutation.identity(n))]))
            # ds[a, b] is the coefficient of e_b in d(e_a)
            b = top[n] * _max_abs(ds) * N
            terms.append((lambda m, gn=gn, b=b: _contract(ds, gn[..., m], ([1], [0]), b) if gn[..., m].any() else None,
                          b, sd * sn, [(-parity_sign(n - 1), s) for s in shuffles(1, n - 1)]))
        if n >= 2:
            gm, sm = G[n - 1]
            b = top[n - 1] * _max_abs(br) * N
            terms.append((lambda m, gm=gm, b=b: _contract(br, gm[..., m], ([2], [0]), b) if gm[..., m].any() else None,
                          b, sb * sm, [(-parity_sign(n - 2), s) for s in shuffles(2, n - 2)]))
        L = 1
        for _, _, scale, _ in terms:
            L = lcm(L, scale)
        # fold sign, rescaling and Koszul sign into one +-mult tensor per shuffle
        plan = []
        bound = 0
        for fn, b, scale, perms in terms:
            mult = L // scale
            bound += b * mult * len(perms)
            plan.append((fn, [(sigma.inverse().images, _chi_tensor(sigma, parity) * (sign * mult)) for sign, sigma in perms]))
        as_object = bound >= _INT_BOUND
        fails = []
        for m in range(M):
            total = None
            for fn, perms in plan:
                sl = fn(m)
                if sl is None or not sl.any():
                    continue
                if as_object:
                    sl = sl.astype(object)
                for inv, coef in perms:
                    part = np.transpose(sl, inv) * coef
                    total = part if total is None else total + part
            if total is None:
                continue
            nz = np.argwhere(total != 0)
            for hit in nz[:3]:
                val = Fraction(int(total[tuple(hit)]), L)
                fails.append({"args": [src.V.names[i] for i in hit], "target": src.L.names[m], "residual": str(val)})
            if len(fails) >= 5:
                break
        results.append(ConditionResult(n, N**n, "exhaustive", fails[:5]))
    return results


def _sampled(T: MorphismTables, max_n: int, seed, samples: int) -> list[ConditionResult]:
    src = T.src
    V = src.V
    rng = random.Random(f"sample|{seed}")
    results = []

    class Vec(dict):
        def __add__(self, o):
            acc = Vec(self)
            for k, v in o.items():
                _add_into(acc, k, v)
            return acc

        def __sub__(self, o):
            return self + Vec({k: -v for k, v in o.items()})

        def __mul__(self, s):
            return Vec({k: v * s for k, v in self.items() if v * s})

    def g_call(n, vs):
        return Vec(T.value(n, vs)) if n <= 3 else Vec()

    for n in range(1, max_n + 1):
        fails = []
        for _ in range(samples):
            tup = [rng.randrange(V.dim) for _ in range(n)]
            args = [{i: 1} for i in tup]
            degs = [V.degrees[i] for i in tup]
            lhs = Vec()
            if n <= 3:
                gv = T.value(n, args)
                for m, c in gv.items():
                    for m2, w in _target_d(src, m).items():
                        _add_into(lhs, m2, c * w)
            rhs = _rhs_terms(n, args, degs, g_call, lambda v: Vec(V.d(v)), lambda v, w: Vec(V.bracket(v, w)), Vec())
            res = lhs - rhs
            if res and len(fails) < 5:
                fails.append({"args": [V.names[i] for i in tup], "residual": str(dict(res))})
        results.append(ConditionResult(n, samples, "sampled", fails))
    return results


def _target_d(src: SourceData, m: int) -> dict:
    return src.L.diff.get(m, {})


def sweep_conditions(
    T: MorphismTables,
    max_n: int = 5,
    seed=0,
    exhaustive_limit: int = EXHAUSTIVE_LIMIT,
    samples: int = SAMPLES_PER_N,
) -> list[ConditionResult]:
    if T.src.N <= exhaustive_limit:
        return _exhaustive(T, max_n)
    return _sampled(T, max_n, seed, samples)
